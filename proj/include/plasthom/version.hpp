#ifndef PLASTHOM_VERSION_HPP
#define PLASTHOM_VERSION_HPP

namespace plasthom {

inline constexpr const char* version_string = "0.1.0";

}

#endif
