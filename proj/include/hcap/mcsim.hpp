// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo oracle: per-antenna power-gain samplers for every cataloged
// model (including correlated generalized-K) and an empirical effective-rate
// estimator with confidence intervals. All randomness flows through
// counter-based per-trial streams, so estimates are bit-identical for a given
// seed regardless of thread count.

#ifndef HCAP_MCSIM_HPP
#define HCAP_MCSIM_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "hcap/effrate.hpp"
#include "hcap/fading.hpp"

namespace hcap::mcsim {

struct McConfig {
    std::uint64_t trials = 1'000'000;
    std::uint64_t seed = 42;
    int batch = 50; // batch-means count; at least 30 is enforced for the CI
    int threads = 1;
};

/// Counter-based stream: outputs are a pure function of (seed, stream, counter),
/// so any trial can be generated independently and in parallel.
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();
    double next_double();             // uniform on (0, 1)
    double next_normal();             // standard normal (Box-Muller, cached pair)
    double next_gamma(double shape);  // unit scale
    std::uint64_t next_poisson(double lambda);

  private:
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

/// One draw of a power gain with the model's mean power.
double sample_gain(const fading::ChannelModel& model, CounterRng& rng);

/// One draw of the N correlated generalized-K gains. Convenience form of
/// CorrGenKSampler for one-off use; repeated sampling (and any N > 2 link,
/// whose copula calibration is costly) should construct the sampler once.
std::vector<double> sample_corr_genk(const effrate::CorrelatedGenKSpec& spec, CounterRng& rng);

/// Correlated generalized-K sampler. N = 2 uses the exact Kibble bivariate
/// gamma construction for the multipath pair; N > 2 uses a Gaussian-copula
/// approximation with the copula correlation calibrated so the power
/// correlation matches Sigma within 0.01 (CalibrationError otherwise). The
/// copula path is an approximate oracle and is labeled as such by callers.
class CorrGenKSampler {
  public:
    explicit CorrGenKSampler(effrate::CorrelatedGenKSpec spec);

    int dim() const { return spec_.N; }
    bool approximate() const { return spec_.N > 2; }
    void sample(CounterRng& rng, std::span<double> out) const;

  private:
    effrate::CorrelatedGenKSpec spec_;
    std::vector<double> chol_; // copula Cholesky factor (N > 2)
};

struct McEstimate {
    double rate = 0.0;
    double expectation = 1.0;
    double ci_low = 1.0;       // 99% CI on the expectation
    double ci_high = 1.0;
    double rate_ci_low = 0.0;  // CI mapped to rate space
    double rate_ci_high = 0.0;
};

/// Estimate from materialized per-trial gain vectors:
/// expectation = mean over trials of (1 + rho * sum_j gains[t][j] / N)^-A.
McEstimate empirical_rate(const std::vector<std::vector<double>>& gains,
                          const effrate::QosSpec& qos, double rho, int N,
                          const McConfig& cfg);

/// Streaming estimator over a link description (samples its own gains).
McEstimate simulate_rate(const effrate::LinkSpec& link, const effrate::QosSpec& qos,
                         double rho, const McConfig& cfg);

/// One pass over the trials serving a whole (qos, rho) grid: gains are
/// SNR- and A-independent, so each trial feeds every grid cell.
/// Result is indexed [qos_index][rho_index].
std::vector<std::vector<McEstimate>> simulate_rate_grid(
    const effrate::LinkSpec& link, std::span<const effrate::QosSpec> qos,
    std::span<const double> rho, const McConfig& cfg);

} // namespace hcap::mcsim

#endif
