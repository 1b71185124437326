// SPDX-License-Identifier: Apache-2.0

#include "hcap/mcsim.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace hcap::mcsim {
namespace {

constexpr double two_pi = 6.283185307179586476925286766559;
constexpr double z99 = 2.5758293035489004; // 99% two-sided normal quantile

// SplitMix64 output function; the stream is a pure function of the counter.
std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ull;

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

// Acklam's rational approximation of the standard normal quantile (~1e-9),
// used only as a Newton starting point.
double std_normal_quantile(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    p = std::clamp(p, 1e-300, 1.0 - 1e-16);
    if (p < 0.02425) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - 0.02425) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// regularized lower incomplete gamma P(a, x)
double reg_gamma_p(double a, double x) {
    if (x <= 0.0) return 0.0;
    if (x < a + 1.0) {
        double term = 1.0 / a;
        double sum = term;
        double ap = a;
        for (int n = 0; n < 600; ++n) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-16) break;
        }
        return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 600; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
    }
    return 1.0 - h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// quantile of the unit-scale Gamma(a) distribution by Newton on P(a, x)
double gamma_quantile(double a, double u) {
    u = std::clamp(u, 1e-300, 1.0 - 1e-15);
    const double zeta = std_normal_quantile(u);
    const double t = 1.0 - 1.0 / (9.0 * a) + zeta * std::sqrt(1.0 / (9.0 * a));
    double x = a * t * t * t; // Wilson-Hilferty start
    if (!(x > 0.0)) x = std::exp((std::log(u) + std::lgamma(a + 1.0)) / a);
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 60; ++it) {
        const double f = reg_gamma_p(a, x) - u;
        if (f > 0.0)
            hi = x;
        else
            lo = x;
        const double logpdf = (a - 1.0) * std::log(x) - x - std::lgamma(a);
        double step = f * std::exp(-logpdf);
        double next = x - step;
        if (!(next > lo && (next < hi || !std::isfinite(hi))))
            next = std::isfinite(hi) ? 0.5 * (lo + hi) : x * 2.0;
        if (std::abs(next - x) <= 1e-12 * std::max(1.0, x)) return next;
        x = next;
    }
    return x;
}

// Gauss-Hermite nodes/weights (weight e^{-x^2}) by Newton iteration
void gauss_hermite(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(static_cast<size_t>(n), 0.0);
    w.assign(static_cast<size_t>(n), 0.0);
    const double pim4 = 0.7511255444649425;
    double z = 0.0;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        if (i == 0)
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        else if (i == 1)
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * x[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * x[1];
        else
            z = 2.0 * z - x[static_cast<size_t>(i - 2)];
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
                     std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-14) break;
        }
        x[static_cast<size_t>(i)] = z;
        x[static_cast<size_t>(n - 1 - i)] = -z;
        w[static_cast<size_t>(i)] = 2.0 / (pp * pp);
        w[static_cast<size_t>(n - 1 - i)] = w[static_cast<size_t>(i)];
    }
}

// correlation of unit-mean Gamma(m) pairs under a Gaussian copula with
// correlation c, by 2-D Gauss-Hermite quadrature
double copula_gamma_corr(double m, double c) {
    static thread_local std::vector<double> xs, ws;
    if (xs.empty()) gauss_hermite(40, xs, ws);
    const double root2 = 1.4142135623730951;
    const double cbar = std::sqrt(std::max(0.0, 1.0 - c * c));
    double e = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        const double z1 = root2 * xs[i];
        const double q1 = gamma_quantile(m, std_normal_cdf(z1)) / m;
        double inner = 0.0;
        for (size_t j = 0; j < xs.size(); ++j) {
            const double z2 = c * z1 + cbar * root2 * xs[j];
            inner += ws[j] * gamma_quantile(m, std_normal_cdf(z2)) / m;
        }
        e += ws[i] * q1 * inner;
    }
    e /= 3.141592653589793;           // normalization of the e^{-x^2} weights
    return (e - 1.0) * m;             // Cov = E - 1, Var = 1/m
}

double calibrate_copula(double m, double target) {
    if (target <= 0.0) return 0.0;
    double lo = 0.0, hi = 0.999999;
    if (copula_gamma_corr(m, hi) < target - 5e-4)
        throw CalibrationError("copula cannot reach the requested power correlation");
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double got = copula_gamma_corr(m, mid);
        if (std::abs(got - target) < 2e-4) return mid;
        if (got < target)
            lo = mid;
        else
            hi = mid;
    }
    const double c = 0.5 * (lo + hi);
    if (std::abs(copula_gamma_corr(m, c) - target) > 5e-3)
        throw CalibrationError("copula calibration did not converge");
    return c;
}

std::vector<double> cholesky_or_throw(const std::vector<double>& a_in, int n) {
    std::vector<double> a = a_in;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a[static_cast<size_t>(i) * n + j];
            for (int k = 0; k < j; ++k)
                s -= a[static_cast<size_t>(i) * n + k] * a[static_cast<size_t>(j) * n + k];
            if (i == j) {
                if (!(s > 0.0))
                    throw CalibrationError("calibrated copula matrix is not positive definite");
                a[static_cast<size_t>(i) * n + j] = std::sqrt(s);
            } else {
                a[static_cast<size_t>(i) * n + j] = s / a[static_cast<size_t>(j) * n + j];
            }
        }
        for (int j = i + 1; j < n; ++j) a[static_cast<size_t>(i) * n + j] = 0.0;
    }
    return a;
}

int effective_batches(const McConfig& cfg) { return std::max(30, cfg.batch); }

struct CellAccum {
    std::vector<double> batch_mean; // one entry per batch
};

McEstimate finalize_cell(const std::vector<double>& batch_means, double total_sum,
                         std::uint64_t trials, double A) {
    const int B = static_cast<int>(batch_means.size());
    McEstimate est;
    est.expectation = total_sum / static_cast<double>(trials);
    double var = 0.0;
    for (double m : batch_means) {
        const double d = m - est.expectation;
        var += d * d;
    }
    var /= std::max(1, B - 1);
    const double half = z99 * std::sqrt(var / B);
    est.ci_low = est.expectation - half;
    est.ci_high = est.expectation + half;
    est.rate = -std::log2(est.expectation) / A;
    est.rate_ci_low = -std::log2(est.ci_high) / A;
    est.rate_ci_high = est.ci_low > 0.0 ? -std::log2(est.ci_low) / A
                                        : std::numeric_limits<double>::infinity();
    return est;
}

} // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : base_(mix64(seed + golden) ^ mix64(stream * golden + 0x5851F42D4C957F2Dull)) {}

std::uint64_t CounterRng::next_u64() { return mix64(base_ + (++counter_) * golden); }

double CounterRng::next_double() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

double CounterRng::next_normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    const double u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    cached_normal_ = r * std::sin(two_pi * u2);
    has_cached_normal_ = true;
    return r * std::cos(two_pi * u2);
}

double CounterRng::next_gamma(double shape) {
    if (!(shape > 0.0)) throw DomainError("next_gamma: shape must be positive");
    if (shape < 1.0) {
        // boost from shape+1
        const double g = next_gamma(shape + 1.0);
        return g * std::pow(next_double(), 1.0 / shape);
    }
    // Marsaglia-Tsang squeeze
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
        double x, v;
        do {
            x = next_normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = next_double();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

std::uint64_t CounterRng::next_poisson(double lambda) {
    if (!(lambda > 0.0)) return 0;
    // exponential-gap counting in log space, exact for any lambda
    std::uint64_t k = 0;
    double s = 0.0;
    while (true) {
        s += std::log(next_double());
        if (s < -lambda) return k;
        ++k;
    }
}

double sample_gain(const fading::ChannelModel& model, CounterRng& rng) {
    using fading::ChannelKind;
    double g = 0.0;
    switch (model.kind) {
        case ChannelKind::Rayleigh:
            g = rng.next_gamma(1.0);
            break;
        case ChannelKind::NakagamiM:
            g = rng.next_gamma(model.m_hat) / model.m_hat;
            break;
        case ChannelKind::GeneralizedK: {
            const double mp = rng.next_gamma(model.m_hat) / model.m_hat;
            g = model.psi == 0.0 ? mp : mp * rng.next_gamma(1.0 / model.psi) * model.psi;
            break;
        }
        case ChannelKind::Weibull: {
            const double e = rng.next_gamma(1.0);
            g = std::pow(e, 2.0 / model.beta) / std::tgamma(1.0 + 2.0 / model.beta);
            break;
        }
        case ChannelKind::WeibullGamma: {
            const double e = rng.next_gamma(1.0);
            const double w = std::pow(e, 2.0 / model.beta) / std::tgamma(1.0 + 2.0 / model.beta);
            g = model.psi == 0.0 ? w : w * rng.next_gamma(1.0 / model.psi) * model.psi;
            break;
        }
        case ChannelKind::CustomHyperH:
            throw DomainError("sample_gain: no sampler for custom hyper-H terms");
    }
    return g * model.mean_power;
}

CorrGenKSampler::CorrGenKSampler(effrate::CorrelatedGenKSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    if (spec_.N > 2) {
        // calibrate a Gaussian copula per pair, then factor it
        std::vector<double> cop(static_cast<size_t>(spec_.N) * spec_.N, 0.0);
        for (int i = 0; i < spec_.N; ++i) {
            cop[static_cast<size_t>(i) * spec_.N + i] = 1.0;
            for (int j = i + 1; j < spec_.N; ++j) {
                const double c = calibrate_copula(spec_.m2, spec_.sigma(i, j));
                cop[static_cast<size_t>(i) * spec_.N + j] = c;
                cop[static_cast<size_t>(j) * spec_.N + i] = c;
            }
        }
        chol_ = cholesky_or_throw(cop, spec_.N);
    }
}

void CorrGenKSampler::sample(CounterRng& rng, std::span<double> out) const {
    const int N = spec_.N;
    if (static_cast<int>(out.size()) != N) throw DomainError("CorrGenKSampler: size mismatch");
    const double m1 = spec_.m1;
    const double m2 = spec_.m2;

    if (N == 2) {
        // Kibble pair: X ~ Gamma(m2); K ~ Poisson(r X / (1-r)); Y ~ (1-r) Gamma(m2+K)
        const double r = spec_.sigma(0, 1);
        const double x = rng.next_gamma(m2);
        double y;
        if (r == 0.0) {
            y = rng.next_gamma(m2);
        } else {
            const double k = static_cast<double>(rng.next_poisson(r * x / (1.0 - r)));
            y = (1.0 - r) * rng.next_gamma(m2 + k);
        }
        out[0] = (x / m2) * (rng.next_gamma(m1) / m1);
        out[1] = (y / m2) * (rng.next_gamma(m1) / m1);
        return;
    }

    // Gaussian copula (approximate oracle)
    double z[64];
    for (int i = 0; i < N; ++i) z[i] = rng.next_normal();
    for (int i = N - 1; i >= 0; --i) {
        double acc = 0.0;
        for (int j = 0; j <= i; ++j) acc += chol_[static_cast<size_t>(i) * N + j] * z[j];
        const double w = gamma_quantile(m2, std_normal_cdf(acc)) / m2;
        out[static_cast<size_t>(i)] = w * (rng.next_gamma(m1) / m1);
    }
}

std::vector<double> sample_corr_genk(const effrate::CorrelatedGenKSpec& spec, CounterRng& rng) {
    const CorrGenKSampler sampler(spec);
    std::vector<double> out(static_cast<size_t>(spec.N));
    sampler.sample(rng, out);
    return out;
}

McEstimate empirical_rate(const std::vector<std::vector<double>>& gains,
                          const effrate::QosSpec& qos, double rho, int N, const McConfig& cfg) {
    if (gains.empty()) throw DomainError("empirical_rate: no trials");
    const std::uint64_t trials = gains.size();
    const int B = effective_batches(cfg);
    std::vector<double> batch_means(static_cast<size_t>(B), 0.0);
    double total = 0.0;
    for (int b = 0; b < B; ++b) {
        const std::uint64_t lo = trials * static_cast<std::uint64_t>(b) / B;
        const std::uint64_t hi = trials * static_cast<std::uint64_t>(b + 1) / B;
        double acc = 0.0;
        for (std::uint64_t t = lo; t < hi; ++t) {
            double sum = 0.0;
            for (double g : gains[t]) sum += g;
            acc += std::exp(-qos.A * std::log1p(rho * sum / N));
        }
        batch_means[static_cast<size_t>(b)] = hi > lo ? acc / static_cast<double>(hi - lo) : 0.0;
        total += acc;
    }
    return finalize_cell(batch_means, total, trials, qos.A);
}

std::vector<std::vector<McEstimate>> simulate_rate_grid(const effrate::LinkSpec& link,
                                                        std::span<const effrate::QosSpec> qos,
                                                        std::span<const double> rho,
                                                        const McConfig& cfg) {
    const int N = link.N;
    if (N < 1 || N > 64) throw DomainError("simulate_rate_grid: N out of range");
    const size_t cells = qos.size() * rho.size();
    if (cells == 0) throw DomainError("simulate_rate_grid: empty grid");
    if (cfg.trials < 10'000) throw DomainError("simulate_rate_grid: needs at least 1e4 trials");

    const std::vector<fading::ChannelModel>* models = nullptr;
    std::unique_ptr<CorrGenKSampler> corr;
    if (link.correlated()) {
        corr = std::make_unique<CorrGenKSampler>(std::get<effrate::CorrelatedGenKSpec>(link.channels));
    } else {
        models = &std::get<std::vector<fading::ChannelModel>>(link.channels);
        if (static_cast<int>(models->size()) != N)
            throw DomainError("simulate_rate_grid: channel count must equal N");
    }

    const int B = effective_batches(cfg);
    // batch-major accumulators, merged in batch order afterwards
    std::vector<std::vector<double>> batch_sums(static_cast<size_t>(B),
                                                std::vector<double>(cells, 0.0));

    const auto run_batch = [&](int b) {
        const std::uint64_t lo = cfg.trials * static_cast<std::uint64_t>(b) / B;
        const std::uint64_t hi = cfg.trials * static_cast<std::uint64_t>(b + 1) / B;
        auto& sums = batch_sums[static_cast<size_t>(b)];
        double g[64];
        for (std::uint64_t t = lo; t < hi; ++t) {
            CounterRng rng(cfg.seed, t);
            double sum = 0.0;
            if (corr) {
                corr->sample(rng, std::span<double>(g, static_cast<size_t>(N)));
                for (int j = 0; j < N; ++j) sum += g[j];
            } else {
                for (int j = 0; j < N; ++j) sum += sample_gain((*models)[static_cast<size_t>(j)], rng);
            }
            size_t cell = 0;
            for (double r : rho) {
                const double l1p = std::log1p(r * sum / N);
                for (const auto& q : qos) sums[cell++] += std::exp(-q.A * l1p);
            }
        }
    };

    const int workers = std::clamp(cfg.threads, 1, B);
    if (workers == 1) {
        for (int b = 0; b < B; ++b) run_batch(b);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (int b = w; b < B; b += workers) run_batch(b);
            });
        for (auto& th : pool) th.join();
    }

    std::vector<std::vector<McEstimate>> out(qos.size(), std::vector<McEstimate>(rho.size()));
    for (size_t qi = 0; qi < qos.size(); ++qi) {
        for (size_t ri = 0; ri < rho.size(); ++ri) {
            const size_t cell = ri * qos.size() + qi;
            std::vector<double> means(static_cast<size_t>(B));
            double total = 0.0;
            for (int b = 0; b < B; ++b) {
                const std::uint64_t lo = cfg.trials * static_cast<std::uint64_t>(b) / B;
                const std::uint64_t hi = cfg.trials * static_cast<std::uint64_t>(b + 1) / B;
                const double s = batch_sums[static_cast<size_t>(b)][cell];
                means[static_cast<size_t>(b)] = hi > lo ? s / static_cast<double>(hi - lo) : 0.0;
                total += s;
            }
            out[qi][ri] = finalize_cell(means, total, cfg.trials, qos[qi].A);
        }
    }
    return out;
}

McEstimate simulate_rate(const effrate::LinkSpec& link, const effrate::QosSpec& qos, double rho,
                         const McConfig& cfg) {
    const effrate::QosSpec qs[1] = {qos};
    const double rh[1] = {rho};
    return simulate_rate_grid(link, qs, rh, cfg)[0][0];
}

} // namespace hcap::mcsim
