// SPDX-License-Identifier: Apache-2.0
//
// The effective-rate engine: exact quadrature of the MGF integral, its
// finite-sum approximation with error bounds, the i.n.i.d. hyper-H route via
// the multivariate product-form approximation, closed-form special cases, and
// the correlated generalized-K series.

#ifndef HCAP_EFFRATE_HPP
#define HCAP_EFFRATE_HPP

#include <functional>
#include <utility>
#include <variant>
#include <vector>

#include "hcap/fading.hpp"

namespace hcap::effrate {

/// QoS description. theta (1/bit) is the decay rate of the queue-length tail;
/// how a concrete delay target maps onto theta depends on the queueing system
/// and is outside this library. All computations consume the dimensionless
/// exponent A = theta*T*B/ln 2.
struct QosSpec {
    double theta;
    double T; // block duration, seconds
    double B; // bandwidth, Hz
    double A; // theta*T*B/ln 2

    static constexpr double default_T = 1e-3;
    static constexpr double default_B = 1e3;

    static QosSpec from_theta(double theta, double T = default_T, double B = default_B);
    static QosSpec from_a(double A, double T = default_T, double B = default_B);
};

/// Correlated generalized-K link: i.i.d. Gamma(m1) shadowing times identically
/// distributed Gamma(m2) multipath components with power-correlation matrix
/// Sigma (unit diagonal, off-diagonals r in [0, 1), symmetric positive
/// definite).
struct CorrelatedGenKSpec {
    int N = 2;
    double m1 = 1.0;
    double m2 = 1.0;
    std::vector<double> Sigma; // row-major N x N

    static CorrelatedGenKSpec uniform(int N, double m1, double m2, double r);
    void validate() const; // throws DomainError
    double sigma(int i, int j) const { return Sigma[static_cast<size_t>(i) * N + j]; }
};

/// A link: antenna count plus either independent per-antenna models or a
/// correlated generalized-K description.
struct LinkSpec {
    int N = 1;
    std::variant<std::vector<fading::ChannelModel>, CorrelatedGenKSpec> channels;

    bool correlated() const { return channels.index() == 1; }
};

/// Truncation/discretization configuration of the finite-sum approximation
/// (Q, M with M/Q >= 10) and the shell truncation of the correlated series.
struct ApproxConfig {
    double Q = 15.0;
    int M = 4500;
    int series_kmax = 40;
    double series_tol = 1e-8;

    static ApproxConfig from_ratio(double Q, double M_over_Q, int series_kmax = 40,
                                   double series_tol = 1e-8);
    void validate() const; // throws DomainError
};

using MgfFn = std::function<double(double)>;

/// Product MGF of independent channels, s -> prod_j phi_j(s).
MgfFn product_mgf(const std::vector<fading::MgfRepr>& channels);

/// Exact route: rate = -(1/A) log2[ 1/Gamma(A) int_0^inf e^-s s^(A-1)
/// phi_end(rho s / N) ds ] by adaptive quadrature (absolute accuracy 1e-8 in
/// the bracketed expectation). Throws QuadratureError on non-convergence.
double rate_from_mgf_quadrature(const MgfFn& mgf_end, const QosSpec& qos, double rho, int N);

/// Finite-sum route: the MGF is sampled on the grid s = l Q/M, l = 1..M, and
/// the integral int_0^Q s^(A-1) e^-s phi_end(s rho/N) ds is formed from those
/// samples (endpoint-corrected, so all A > 0 are handled);
/// rate = log2(Gamma(A))/A - (1/A) log2(sum).
/// Throws RangeError if the sum underflows to a non-positive value.
double rate_trapezoid(const MgfFn& mgf_end, const QosSpec& qos, double rho, int N,
                      const ApproxConfig& cfg);

/// Same finite-sum route for a product of per-channel MGFs in H-term form;
/// term values are batch-evaluated over the grid, which is much faster than
/// going through the generic callable.
double rate_trapezoid(const std::vector<fading::MgfRepr>& channels, const QosSpec& qos,
                      double rho, int N, const ApproxConfig& cfg);

/// i.n.i.d. hyper-H route: expands the nested per-channel term sums and
/// evaluates each term combination through the multivariate product-form
/// approximation at eta = A with per-channel scale rho/N. Per-channel H values
/// are memoized across term combinations on the shared abscissa grid.
double rate_inid_hyper(const std::vector<fading::MgfRepr>& channels, const QosSpec& qos,
                       double rho, const ApproxConfig& cfg);

/// Closed form for i.i.d. Nakagami-m channels:
///   rate = -(1/A) log2[ z^A U(A, A - m_hat N + 1, z) ],  z = m_hat N / rho.
double rate_iid_nakagami_closed(double m_hat, int N, const QosSpec& qos, double rho);

/// Single-channel hyper-H route: each MGF term's transform is a univariate H
/// with upper parameters (1-A, 1) prepended and argument scaled by rho; terms
/// are summed and divided by Gamma(A).
double rate_siso_hyper(const fading::MgfRepr& mgf, const QosSpec& qos, double rho);

/// Joint MGF of the correlated generalized-K link at s >= 0, by the truncated
/// shell series over Poisson-mixture orders. Throws SeriesNotConverged when
/// the final shell still exceeds series_tol relative to the accumulated sum.
double joint_mgf_corr_genk(const CorrelatedGenKSpec& spec, double s, const ApproxConfig& cfg);

/// Reusable callable form of the joint MGF above; per-term evaluators persist
/// across calls, so sampling it on a grid is cheap.
MgfFn corr_genk_mgf(const CorrelatedGenKSpec& spec, const ApproxConfig& cfg);

/// Effective rate of the correlated generalized-K link via the shell series
/// with per-term multivariate product-form evaluation (eta = A, scale rho/N).
double rate_corr_genk(const CorrelatedGenKSpec& spec, const QosSpec& qos, double rho,
                      const ApproxConfig& cfg);

/// Error bounds of the finite-sum route: the truncation bound Gamma(A, Q)
/// (valid since 0 <= phi <= 1) and a Richardson M-vs-2M estimate as a
/// computable stand-in for the interior-point discretization bound.
struct ErrorBounds {
    double truncation_bound;
    double discretization_estimate;
};
ErrorBounds error_bounds(const QosSpec& qos, const ApproxConfig& cfg, const MgfFn& mgf_end,
                         double rho, int N);

} // namespace hcap::effrate

#endif
