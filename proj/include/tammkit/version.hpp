#ifndef TAMMKIT_VERSION_HPP
#define TAMMKIT_VERSION_HPP

namespace tammkit {
inline constexpr const char* kVersion = "0.1.0";
}

#endif
