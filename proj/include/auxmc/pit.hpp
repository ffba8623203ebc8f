#ifndef AUXMC_PIT_HPP
#define AUXMC_PIT_HPP

#include <functional>
#include <vector>

#include "auxmc/gauss.hpp"
#include "auxmc/lgssm.hpp"
#include "auxmc/rng.hpp"
#include "auxmc/scan.hpp"

namespace auxmc::pit {

// Affine-Gaussian map x_out = G x_in + c + N(0, cov); the scan element.
// cov is exactly zero for realized-noise elements.
struct AffineGaussElement {
  Mat G;
  Vec c;
  Mat cov;
};

// a ∘ b: apply b first, then a. Associative up to float re-association;
// identity_element is neutral on both sides.
AffineGaussElement compose(const AffineGaussElement& a,
                           const AffineGaussElement& b);
AffineGaussElement identity_element(int d);

// Five-component element for scan-based filtering. The observation part is
// kept in information form (eta, J) so singular R is tolerated as long as the
// innovation covariance factors.
struct FilterScanElement {
  Mat A;
  Vec b;
  Mat C;
  Vec eta;
  Mat J;
};

// u then v (u covers the earlier time block). Associative.
FilterScanElement combine(const FilterScanElement& u,
                          const FilterScanElement& v);

// One-step backward conditionals as scan elements: element t maps the law of
// x_t given x_{t+1} and all data. Built from the same backward_step as the
// sequential sampler, so both paths factor bit-identical matrices.
std::vector<AffineGaussElement> build_backward_elements(
    const lgssm::Model& model, const lgssm::FilterResult& fr);

// (G, c, cov) -> (G, c + w, 0) with w ~ N(0, cov) drawn from
// (kBackwardNoise, t) — the same addresses the sequential sampler consumes.
std::vector<AffineGaussElement> realize_noise(
    std::vector<AffineGaussElement> elements, NoiseSource& noise);

// Exact posterior path draw: x_T ~ N(m_T, P_T), then x_t from the suffix
// compositions e_t ∘ … ∘ e_{T-1} of the realized elements, combined by a
// fixed-tree parallel scan (work O(T), span ceil(log2 T)).
Trajectory prefix_sample(const lgssm::Model& model,
                         const lgssm::FilterResult& fr, NoiseSource& noise,
                         int workers = 1, scan::ScanStats* stats = nullptr);
Trajectory prefix_sample(const lgssm::Model& model,
                         const lgssm::FilterResult& fr, RngStream rng,
                         int workers = 1, scan::ScanStats* stats = nullptr);

// Scan-based Kalman filter; agrees with lgssm::kalman_filter.
lgssm::FilterResult parallel_filter(const lgssm::Model& model, const Mat& obs,
                                    int workers = 1,
                                    scan::ScanStats* stats = nullptr);

// Exact posterior path draw by divide-and-conquer: sample x_T, then x_0 given
// x_T through the root element, then per level all segment midpoints from the
// Gaussian bridge given their already-sampled endpoints. Midpoint draws are
// addressed by heap node id, so the output is independent of traversal order;
// equal to the sequential sampler in law (and bit-equal at T <= 1).
Trajectory dnc_sample(const lgssm::Model& model, const lgssm::FilterResult& fr,
                      NoiseSource& noise, int workers = 1);
Trajectory dnc_sample(const lgssm::Model& model, const lgssm::FilterResult& fr,
                      RngStream rng, int workers = 1);

enum class Sampler { kSequential, kPrefix, kDnc };

// Exact induced law of an affine-in-noise sampler over the flattened path
// (index t*d_x + j): pushes zero noise and every basis noise vector through
// the sampler's deterministic skeleton. No Monte Carlo. Single-threaded.
gauss::Gaussian extract_affine_law(
    const std::function<Trajectory(NoiseSource&)>& sampler);
gauss::Gaussian extract_affine_law(Sampler which, const lgssm::Model& model,
                                   const lgssm::FilterResult& fr);

}  // namespace auxmc::pit

#endif
