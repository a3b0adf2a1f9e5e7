#pragma once

#define BBMLAB_VERSION "0.1.0"

namespace bbmlab {

inline const char* version() { return BBMLAB_VERSION; }

}  // namespace bbmlab
