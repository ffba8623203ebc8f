#ifndef AUXMC_TESTHOOKS_HPP
#define AUXMC_TESTHOOKS_HPP

#include <atomic>

namespace auxmc::testhooks {

// Fault-injection switch for the self-check machinery: when set, the backward
// gain is negated, which must make every law-equality check fail. Proves the
// checks have teeth; never set outside validation/tests.
inline std::atomic<bool> flip_backward_gain{false};

}  // namespace auxmc::testhooks

#endif
