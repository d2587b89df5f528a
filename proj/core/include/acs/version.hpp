#pragma once

#define ACS_VERSION_STRING "0.1.0"

namespace acs {

inline const char * version() { return ACS_VERSION_STRING; }

} // namespace acs
