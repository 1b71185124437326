// SPDX-License-Identifier: Apache-2.0

#ifndef HCAP_QUADRATURE_HPP
#define HCAP_QUADRATURE_HPP

#include <functional>
#include <span>
#include <vector>

#include "hcap/errors.hpp"

namespace hcap::quadrature {

/// Gauss-Legendre nodes and weights on [-1, 1] for order n, cached per n.
/// Thread-safe after first use of a given order.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const GaussLegendre& gauss_legendre(int n);

struct AdaptiveOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int max_intervals = 20000;
};

/// Adaptive Gauss-Kronrod (G7,K15) integration of f over [a, b].
/// Throws QuadratureError when the interval budget is exhausted before the
/// tolerance is met.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          const AdaptiveOptions& opt = {});

/// int_0^inf e^(-s) s^(eta-1) g(s) ds for bounded g, eta > 0.
/// Handles the integrable endpoint singularity for eta < 1 by substitution
/// and truncates the tail where e^(-s) s^(eta-1) is negligible.
double integrate_exp_kernel(double eta, const std::function<double(double)>& g,
                            const AdaptiveOptions& opt = {});

/// int_0^Q s^(eta-1) e^(-s) g(s) ds from the M uniform grid samples
/// g[l-1] = g(l Q / M), l = 1..M, plus the value g_zero at s = 0.
/// The kernel weight s^(eta-1) e^-s is integrated exactly against a piecewise
/// linear g on the cells below s = 1 (so the eta < 1 endpoint singularity and
/// the eta = 1 endpoint mass are handled correctly); the remaining cells use
/// the composite trapezoidal rule. Summation order is fixed. For eta = 0 the
/// plain right-endpoint grid sum is returned (the endpoint is not integrable
/// unless g vanishes there).
///
/// When refine is non-null and the samples show that g loses most of its mass
/// within a few cells of the origin (high-SNR MGF products do), the head
/// region is integrated adaptively through the callback instead of from the
/// under-resolved samples.
double exp_grid_integral(double eta, double Q, int M, std::span<const double> g, double g_zero,
                         const std::function<double(double)>* refine = nullptr);

} // namespace hcap::quadrature

#endif
