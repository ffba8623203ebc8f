#ifndef AUXMC_VERSION_HPP
#define AUXMC_VERSION_HPP

namespace auxmc {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace auxmc

#endif
