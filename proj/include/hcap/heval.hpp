// SPDX-License-Identifier: Apache-2.0
//
// Numerical evaluation of Fox's H terms by Mellin-Barnes contour quadrature,
// and of the special-series multivariate H function by its product-form
// approximation on an exponential grid.

#ifndef HCAP_HEVAL_HPP
#define HCAP_HEVAL_HPP

#include <complex>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "hcap/hseq.hpp"

namespace hcap::heval {

using hseq::HTerm;
using hseq::OrderSeq;
using hseq::ParamSeq;

/// A vertical integration contour Re z = sigma, truncated at |Im z| = half_height,
/// with a total quadrature node budget.
struct ContourSpec {
    double sigma = 0.0;
    double half_height = 0.0;
    int nodes = 0;
};

/// Pole-separation strip (L, R) of a term: left poles at (c_j-1)/C_j for the
/// first n upper parameters, right poles at d_j/D_j for the first m lower
/// parameters. Unbounded sides are +-infinity.
struct PoleStrip {
    double left;
    double right;
};
PoleStrip pole_strip(const HTerm& term);

/// Chooses a contour for a term: sigma at the midpoint of the pole strip, or
/// offset 2 inside the finite bound when one side is unbounded (clamped to
/// [-50, 50]); half_height where the integrand magnitude has decayed below
/// 1e-14 of its peak. Throws NoContourError when the strip is empty.
ContourSpec select_contour(const HTerm& term);

/// Evaluates u * H^{m,n}_{p,q}[v x | ...] at x > 0 by composite Gauss-Legendre
/// quadrature along a vertical contour. Node counts are doubled until two
/// successive refinements agree to 1e-6 relative; ConvergenceError otherwise.
/// Throws NoContourError when no separating contour exists.
double eval_h(const HTerm& term, double x);

/// Product of eval_h over terms at a common argument.
double eval_h_product(std::span<const HTerm> terms, double x);

/// Reusable evaluator for one term: gamma products along the contour are
/// precomputed once and shared across arguments, so evaluating the same term
/// at many abscissae costs one complex exponential per node per argument.
/// Safe for concurrent use after construction.
class HTermEvaluator {
  public:
    explicit HTermEvaluator(HTerm term);
    ~HTermEvaluator();
    HTermEvaluator(HTermEvaluator&&) noexcept;
    HTermEvaluator& operator=(HTermEvaluator&&) noexcept;

    const HTerm& term() const;

    /// Single evaluation with node-doubling verification.
    double eval(double x) const;

    /// Evaluates at every abscissa; verification is performed at the extreme
    /// and median abscissae, then the accepted refinement level is reused.
    void eval_many(std::span<const double> xs, std::span<double> out) const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One channel of a special-series multivariate H function: the per-channel
/// argument scale and the channel's own H term.
struct MultiHChannel {
    double scale = 1.0;
    HTerm term;
};

/// The special-series N-variate H function: exponent eta plus N channels.
/// Channel terms are expected to be bounded near 0 and decaying on [0, inf)
/// (the MGF-convergence conditions); this is validated where MGFs are built.
struct MultiHSpec {
    double eta = 1.0;
    std::vector<MultiHChannel> channels;

    MultiHSpec() = default;
    MultiHSpec(double eta_, std::vector<MultiHChannel> ch);
};

/// Product-form approximation of the special-series multivariate H function:
///   (Q/M)^eta * sum_{l=1..M} l^(eta-1) e^(-l Q/M) prod_j H[l Q scale_j / M]
/// with Q >= 1 and M/Q >= 10 enforced. Summation order is fixed so results
/// are bit-stable. Optional per-channel evaluators may be supplied to reuse
/// contour data across calls.
double eval_multih_approx(const MultiHSpec& spec, double Q, int M);
double eval_multih_approx(const MultiHSpec& spec, double Q, int M,
                          std::span<const HTermEvaluator* const> evaluators);

} // namespace hcap::heval

#endif
