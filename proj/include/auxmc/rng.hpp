#ifndef AUXMC_RNG_HPP
#define AUXMC_RNG_HPP

#include <cmath>
#include <cstdint>

#include "auxmc/common.hpp"

namespace auxmc {

// Substream labels. Every consumer of randomness addresses its draws by a
// (label, index) path so that sequential and parallel code can consume
// identical bits regardless of execution order or worker count.
namespace stream {
constexpr std::uint64_t kBackwardNoise = 1;   // per-step backward-sampling noise
constexpr std::uint64_t kTerminalDraw = 2;    // draw of x_T
constexpr std::uint64_t kAuxObs = 3;          // auxiliary observations u_t
constexpr std::uint64_t kDncBridge = 4;       // divide-and-conquer midpoint draws
constexpr std::uint64_t kMhAccept = 5;        // Metropolis-Hastings accept uniform
constexpr std::uint64_t kIteration = 6;       // per-iteration fan-out
constexpr std::uint64_t kChain = 7;           // per-chain fan-out
constexpr std::uint64_t kStep = 8;            // per-time-step fan-out (SMC)
constexpr std::uint64_t kParticle = 9;        // per-particle fan-out
constexpr std::uint64_t kResample = 10;       // multinomial resampling uniforms
constexpr std::uint64_t kTerminalIndex = 11;  // cSMC terminal index draw
constexpr std::uint64_t kBackwardIndex = 12;  // cSMC backward index draws
constexpr std::uint64_t kPmKey = 13;          // pseudo-marginal auxiliary keys
constexpr std::uint64_t kSimulate = 14;       // data simulation
constexpr std::uint64_t kParam = 15;          // parameter moves (RW-MH within Gibbs)
}  // namespace stream

namespace detail {

// splitmix64 finalizer; full-avalanche 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// i-th word of the stream keyed by `key` (splitmix64 with start state key).
inline std::uint64_t word_at(std::uint64_t key, std::uint64_t i) {
  return mix64(key + (i + 1) * kGolden);
}

inline double to_unit_open(std::uint64_t w) {
  // (0, 1), both ends excluded; 53-bit resolution.
  return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

// Splittable, counter-addressable random stream. A stream is a pure function
// of (seed, path, counter): replaying a path reproduces identical bits no
// matter how other streams interleave. Value semantics; each owner advances
// its own counter.
class RngStream {
 public:
  RngStream() : key_(0), counter_(0) {}

  static RngStream from_seed(std::uint64_t seed) {
    RngStream s;
    s.key_ = detail::mix64(seed + detail::kGolden);
    return s;
  }

  // Child stream for path element (label, index); counter starts at 0.
  RngStream derive(std::uint64_t label, std::uint64_t index) const {
    RngStream s;
    std::uint64_t k = key_;
    k = detail::mix64(k ^ detail::mix64(label ^ 0xA0761D6478BD642Full));
    k = detail::mix64(k ^ detail::mix64(index ^ 0xE7037ED1A0B428DBull));
    s.key_ = k;
    return s;
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  double next_uniform() {
    std::uint64_t c = counter_++;
    return detail::to_unit_open(detail::word_at(key_, 2 * c));
  }

  double next_normal() {
    std::uint64_t c = counter_++;
    double u1 = detail::to_unit_open(detail::word_at(key_, 2 * c));
    double u2 = detail::to_unit_open(detail::word_at(key_, 2 * c + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  Vec normal_vec(int d) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = next_normal();
    return v;
  }

  // Fresh 64-bit key, e.g. for pseudo-marginal auxiliary randomness.
  std::uint64_t next_key() {
    std::uint64_t c = counter_++;
    return detail::word_at(key_, 2 * c);
  }

  static RngStream from_key(std::uint64_t key) {
    RngStream s;
    s.key_ = key;
    return s;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

// Abstract source of labelled Gaussian noise. Samplers draw all their
// randomness through this interface; pushing basis vectors through the same
// skeleton recovers the sampler's exact affine law (see pit::extract_affine_law).
struct NoiseSource {
  virtual ~NoiseSource() = default;
  virtual Vec normal(std::uint64_t label, std::uint64_t index, int dim) = 0;
};

struct StreamNoise final : NoiseSource {
  explicit StreamNoise(RngStream base) : base_(base) {}
  Vec normal(std::uint64_t label, std::uint64_t index, int dim) override {
    RngStream s = base_.derive(label, index);
    return s.normal_vec(dim);
  }

 private:
  RngStream base_;
};

// Deterministic probe: returns the unit vector at flat position `active`
// within the concatenation of all draws (call order), zeros elsewhere.
// active < 0 gives the all-zero noise vector. Not thread-safe; run the
// sampler single-threaded when probing.
struct ProbeNoise final : NoiseSource {
  int active = -1;

  Vec normal(std::uint64_t, std::uint64_t, int dim) override {
    Vec v = Vec::Zero(dim);
    if (active >= cursor_ && active < cursor_ + dim) v[active - cursor_] = 1.0;
    cursor_ += dim;
    return v;
  }

  void reset(int active_pos) {
    active = active_pos;
    cursor_ = 0;
  }
  int total_dims() const { return cursor_; }

 private:
  int cursor_ = 0;
};

}  // namespace auxmc

#endif
