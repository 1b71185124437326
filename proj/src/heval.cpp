// SPDX-License-Identifier: Apache-2.0

#include "hcap/heval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "hcap/quadrature.hpp"
#include "hcap/specfn.hpp"

namespace hcap::heval {
namespace {

using cplx = std::complex<double>;

constexpr double pi = 3.141592653589793238462643383279502884;
constexpr double two_pi = 2.0 * pi;
constexpr double inf = std::numeric_limits<double>::infinity();

// Phi(z) as a product of gamma factors Gamma(base + slope*z)^sign.
struct GammaFactor {
    double base;
    double slope;
    int sign; // +1 numerator, -1 denominator
};

std::vector<GammaFactor> phi_factors(const HTerm& t) {
    std::vector<GammaFactor> f;
    f.reserve(t.params.c.size() + t.params.d.size());
    const auto& o = t.order;
    const auto& p = t.params;
    for (int j = 0; j < o.m; ++j) f.push_back({p.d[static_cast<size_t>(j)], -p.D[static_cast<size_t>(j)], +1});
    for (int j = 0; j < o.n; ++j) f.push_back({1.0 - p.c[static_cast<size_t>(j)], p.C[static_cast<size_t>(j)], +1});
    for (int j = o.n; j < o.p; ++j) f.push_back({p.c[static_cast<size_t>(j)], -p.C[static_cast<size_t>(j)], -1});
    for (int j = o.m; j < o.q; ++j) f.push_back({1.0 - p.d[static_cast<size_t>(j)], p.D[static_cast<size_t>(j)], -1});
    return f;
}

cplx log_phi(const std::vector<GammaFactor>& fs, cplx z) {
    cplx acc = 0.0;
    for (const auto& f : fs) {
        const cplx arg = f.base + f.slope * z;
        acc += static_cast<double>(f.sign) * specfn::lgamma_complex(arg);
    }
    return acc;
}

// log |Phi(sigma)| on the real axis (magnitude only; denominator poles give -inf).
double log_abs_phi_real(const std::vector<GammaFactor>& fs, double sigma) {
    double acc = 0.0;
    for (const auto& f : fs) {
        const double arg = f.base + f.slope * sigma;
        if (arg <= 0.0 && std::abs(arg - std::round(arg)) < 1e-12)
            return f.sign > 0 ? inf : -inf;
        acc += static_cast<double>(f.sign) * std::lgamma(arg);
    }
    return acc;
}

struct Window {
    double lo;
    double hi;
};

// Search window inside the pole strip, kept a safe margin away from the
// nearest poles so the contour never grazes one.
Window sigma_window(const PoleStrip& strip) {
    const double width = strip.right - strip.left;
    double margin = 0.25;
    if (std::isfinite(width)) margin = std::min(0.25, 0.2 * width);
    double lo = std::isfinite(strip.left) ? strip.left + margin : -80.0;
    double hi = std::isfinite(strip.right) ? strip.right - margin : 80.0;
    if (lo > hi) lo = hi = 0.5 * (strip.left + strip.right);
    return {lo, hi};
}

// argmin over sigma of log |Phi(sigma) (vx)^sigma|: places the contour where
// the integrand scale is closest to the result scale, which controls the
// cancellation of the oscillatory quadrature.
double optimal_sigma(const std::vector<GammaFactor>& fs, const PoleStrip& strip, double logvx) {
    const Window w = sigma_window(strip);
    if (w.hi - w.lo < 1e-12) return w.lo;
    const auto g = [&](double s) {
        const double m = log_abs_phi_real(fs, s);
        return std::isfinite(m) ? m + s * logvx : inf;
    };
    // coarse scan, then golden-section refinement around the best cell
    constexpr int scan = 17;
    double best = w.lo, best_val = g(w.lo);
    for (int i = 1; i < scan; ++i) {
        const double s = w.lo + (w.hi - w.lo) * i / (scan - 1);
        const double val = g(s);
        if (val < best_val) {
            best_val = val;
            best = s;
        }
    }
    const double cell = (w.hi - w.lo) / (scan - 1);
    double a = std::max(w.lo, best - cell), b = std::min(w.hi, best + cell);
    constexpr double gr = 0.6180339887498949;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = g(x1), f2 = g(x2);
    for (int it = 0; it < 40 && (b - a) > 1e-3; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = g(x2);
        }
    }
    return 0.5 * (a + b);
}

// Contour data at a fixed sigma and per-panel order: node ordinates t_i over
// [-T, T] and weight * Phi values, normalized by exp(log_scale).
struct ContourData {
    double sigma = 0.0;
    int order = 0;
    double half_height = 0.0;
    double log_scale = 0.0;
    double abs_sum = 0.0; // sum |w Phi| / exp(log_scale)
    std::vector<double> t;
    std::vector<cplx> wphi;
};

constexpr int max_panels = 420;
constexpr double panel_cut = 1e-15;

ContourData build_contour(const std::vector<GammaFactor>& fs, double sigma, int order) {
    const auto& gl = quadrature::gauss_legendre(order);
    ContourData data;
    data.sigma = sigma;
    data.order = order;

    std::vector<double> ts;
    std::vector<cplx> logs;
    ts.reserve(static_cast<size_t>(order) * 64);
    logs.reserve(static_cast<size_t>(order) * 64);

    double ref = log_abs_phi_real(fs, sigma);
    if (!std::isfinite(ref)) ref = log_phi(fs, cplx(sigma, 0.5)).real();

    double running = 0.0;
    double prev_panel = inf;
    int panels = 0;
    for (int j = 0; j < max_panels; ++j) {
        double panel_abs = 0.0;
        for (int side = 0; side < 2; ++side) {
            for (int i = 0; i < order; ++i) {
                double t = j + 0.5 * (gl.nodes[static_cast<size_t>(i)] + 1.0);
                if (side == 1) t = -t;
                const cplx lp = log_phi(fs, cplx(sigma, t));
                ts.push_back(t);
                logs.push_back(lp);
                panel_abs += 0.5 * gl.weights[static_cast<size_t>(i)] * std::exp(lp.real() - ref);
            }
        }
        running += panel_abs;
        panels = j + 1;
        if (j >= 3 && panel_abs < panel_cut * running && panel_abs <= prev_panel) break;
        prev_panel = panel_abs;
    }
    data.half_height = panels;

    double log_scale = -inf;
    for (const auto& lp : logs) log_scale = std::max(log_scale, lp.real());
    data.log_scale = log_scale;

    const size_t n = ts.size();
    data.t = std::move(ts);
    data.wphi.resize(n);
    size_t idx = 0;
    for (int j = 0; j < panels; ++j) {
        for (int side = 0; side < 2; ++side) {
            for (int i = 0; i < order; ++i, ++idx) {
                const double w = 0.5 * gl.weights[static_cast<size_t>(i)];
                data.wphi[idx] = w * std::exp(logs[idx] - log_scale);
                data.abs_sum += w * std::exp(logs[idx].real() - log_scale);
            }
        }
    }
    return data;
}

struct EvalResult {
    double re = 0.0;
    double im = 0.0;
    double abs_scale = 0.0;  // integrand magnitude, for roundoff floors
    double cancellation = 1.0; // |sum| / sum|terms|
};

// scale of the term carried as sign * exp(log_abs_u) so extreme
// normalization constants cancel against the gamma products in log space
EvalResult contour_sum(const ContourData& d, double sign_u, double log_abs_u, double logvx) {
    cplx acc = 0.0;
    const size_t n = d.t.size();
    for (size_t i = 0; i < n; ++i) {
        const double ph = d.t[i] * logvx;
        acc += d.wphi[i] * cplx(std::cos(ph), std::sin(ph));
    }
    const double outer = std::exp(log_abs_u + d.log_scale + d.sigma * logvx) / two_pi;
    EvalResult r;
    r.re = sign_u * outer * acc.real();
    r.im = sign_u * outer * acc.imag();
    r.abs_scale = outer * d.abs_sum;
    r.cancellation = d.abs_sum > 0.0 ? std::abs(acc) / d.abs_sum : 1.0;
    return r;
}

// Per-panel Gauss-Legendre order, quantized so repeated evaluations share
// cached contours. The phase e^{i t ln(vx)} needs roughly |ln vx|/2 + 8
// points per unit-width panel.
int base_order(double logvx) {
    const double need = std::abs(logvx) / 2.0 + 8.0;
    if (need <= 16.0) return 16;
    if (need <= 32.0) return 32;
    return 64;
}

} // namespace

PoleStrip pole_strip(const HTerm& term) {
    const auto& o = term.order;
    const auto& p = term.params;
    double left = -inf, right = inf;
    for (int j = 0; j < o.n; ++j)
        left = std::max(left, (p.c[static_cast<size_t>(j)] - 1.0) / p.C[static_cast<size_t>(j)]);
    for (int j = 0; j < o.m; ++j)
        right = std::min(right, p.d[static_cast<size_t>(j)] / p.D[static_cast<size_t>(j)]);
    return {left, right};
}

ContourSpec select_contour(const HTerm& term) {
    const PoleStrip strip = pole_strip(term);
    if (!(strip.left < strip.right)) {
        std::ostringstream msg;
        msg << "no separating contour: pole strip (" << strip.left << ", " << strip.right
            << ") is empty";
        throw NoContourError(msg.str());
    }

    double sigma;
    if (std::isfinite(strip.left) && std::isfinite(strip.right)) {
        sigma = 0.5 * (strip.left + strip.right);
    } else if (std::isfinite(strip.right)) {
        sigma = strip.right - 2.0;
    } else if (std::isfinite(strip.left)) {
        sigma = strip.left + 2.0;
    } else {
        sigma = 0.0;
    }
    sigma = std::clamp(sigma, -50.0, 50.0);

    const auto fs = phi_factors(term);
    double ref = log_abs_phi_real(fs, sigma);
    if (!std::isfinite(ref)) ref = log_phi(fs, cplx(sigma, 0.5)).real();
    double T = 4.0;
    const double drop = std::log(1e-14);
    while (T < 400.0 && log_phi(fs, cplx(sigma, T)).real() > ref + drop) T += 1.0;

    ContourSpec spec;
    spec.sigma = sigma;
    spec.half_height = T;
    spec.nodes = std::max(64, 2 * static_cast<int>(std::ceil(T)) * 16);
    return spec;
}

struct HTermEvaluator::Impl {
    HTerm term;
    std::vector<GammaFactor> factors;
    PoleStrip strip;
    double log_v;
    double sign_u;
    double log_abs_u;

    mutable std::mutex mu;
    struct Entry {
        double sigma;
        int order;
        std::shared_ptr<const ContourData> data;
    };
    mutable std::vector<Entry> cache;
    mutable std::map<int, double> sigma_by_logvx; // quantized argmin, keyed by L bucket

    explicit Impl(HTerm t)
        : term(std::move(t)), factors(phi_factors(term)), strip(pole_strip(term)),
          log_v(std::log(term.params.v)),
          sign_u(term.params.u < 0.0 ? -1.0 : 1.0),
          log_abs_u(term.params.u == 0.0 ? -std::numeric_limits<double>::infinity()
                                         : std::log(std::abs(term.params.u)) + term.params.u_exp) {
        if (!(strip.left < strip.right)) {
            std::ostringstream msg;
            msg << "no separating contour: pole strip (" << strip.left << ", " << strip.right
                << ") is empty";
            throw NoContourError(msg.str());
        }
    }

    std::shared_ptr<const ContourData> contour(double sigma, int order) const {
        // quantize sigma for cache reuse; any sigma inside the strip is exact
        const Window w = sigma_window(strip);
        const double step = std::max(0.25, (w.hi - w.lo) / 6.0);
        double q = w.lo + std::round((sigma - w.lo) / step) * step;
        q = std::clamp(q, w.lo, w.hi);
        {
            std::lock_guard<std::mutex> lock(mu);
            for (const auto& e : cache)
                if (e.order == order && std::abs(e.sigma - q) < 1e-9) return e.data;
        }
        auto data = std::make_shared<const ContourData>(build_contour(factors, q, order));
        std::lock_guard<std::mutex> lock(mu);
        if (cache.size() >= 64) cache.erase(cache.begin());
        cache.push_back({q, order, data});
        return data;
    }

    // Refinement ladder at a fixed sigma: accept when one doubling moves the
    // result by <= 1e-6 relative (or below the roundoff floor of the
    // integrand scale) and the imaginary residual is consistent with zero.
    double eval_at_sigma(double sigma, double logvx, int order0) const {
        EvalResult prev = contour_sum(*contour(sigma, order0), sign_u, log_abs_u, logvx);
        for (int level = 1; level <= 2; ++level) {
            const EvalResult cur =
                contour_sum(*contour(sigma, order0 << level), sign_u, log_abs_u, logvx);
            const double diff = std::abs(cur.re - prev.re);
            const double floor_ = 1e-13 * cur.abs_scale;
            const bool stable = diff <= 1e-6 * std::max(std::abs(cur.re), std::abs(prev.re)) ||
                                diff <= floor_;
            const bool real_enough =
                std::abs(cur.im) <= 1e-8 * std::abs(cur.re) + 1e-12 * cur.abs_scale;
            if (stable && real_enough) return cur.re;
            prev = cur;
        }
        throw ConvergenceError("contour quadrature did not stabilize under node doubling");
    }

    double sigma_for(double logvx) const {
        const int bucket = static_cast<int>(std::lround(logvx * 2.0));
        {
            std::lock_guard<std::mutex> lock(mu);
            auto it = sigma_by_logvx.find(bucket);
            if (it != sigma_by_logvx.end()) return it->second;
        }
        const double sigma = optimal_sigma(factors, strip, bucket / 2.0);
        std::lock_guard<std::mutex> lock(mu);
        if (sigma_by_logvx.size() > 4096) sigma_by_logvx.clear();
        return sigma_by_logvx.emplace(bucket, sigma).first->second;
    }

    double eval_one(double x) const {
        if (!(x > 0.0)) throw DomainError("eval_h: argument must be positive");
        const double logvx = log_v + std::log(x);
        return eval_at_sigma(sigma_for(logvx), logvx, base_order(logvx));
    }
};

HTermEvaluator::HTermEvaluator(HTerm term) : impl_(std::make_unique<Impl>(std::move(term))) {}
HTermEvaluator::~HTermEvaluator() = default;
HTermEvaluator::HTermEvaluator(HTermEvaluator&&) noexcept = default;
HTermEvaluator& HTermEvaluator::operator=(HTermEvaluator&&) noexcept = default;

const HTerm& HTermEvaluator::term() const { return impl_->term; }

double HTermEvaluator::eval(double x) const { return impl_->eval_one(x); }

void HTermEvaluator::eval_many(std::span<const double> xs, std::span<double> out) const {
    if (xs.size() != out.size()) throw DomainError("eval_many: size mismatch");
    if (xs.empty()) return;
    double lmin = inf, lmax = -inf;
    for (double x : xs) {
        if (!(x > 0.0)) throw DomainError("eval_many: arguments must be positive");
        const double l = impl_->log_v + std::log(x);
        lmin = std::min(lmin, l);
        lmax = std::max(lmax, l);
    }
    const double lmid = 0.5 * (lmin + lmax);
    const double sigma = optimal_sigma(impl_->factors, impl_->strip, lmid);
    const int order0 = base_order(std::max(std::abs(lmin), std::abs(lmax)));

    // verify convergence at the extremes and midpoint, then reuse the level
    int accepted = order0 * 2;
    {
        const double probes[3] = {lmin, lmid, lmax};
        for (double l : probes) (void)impl_->eval_at_sigma(sigma, l, order0);
    }
    const auto data = impl_->contour(sigma, accepted);
    for (size_t i = 0; i < xs.size(); ++i) {
        const double logvx = impl_->log_v + std::log(xs[i]);
        const EvalResult r = contour_sum(*data, impl_->sign_u, impl_->log_abs_u, logvx);
        if (r.cancellation < 1e-9) {
            // heavy cancellation at this argument: fall back to a contour
            // placed for this x alone
            out[i] = impl_->eval_one(xs[i]);
        } else {
            out[i] = r.re;
        }
    }
}

double eval_h(const HTerm& term, double x) { return HTermEvaluator(term).eval(x); }

double eval_h_product(std::span<const HTerm> terms, double x) {
    double prod = 1.0;
    for (const auto& t : terms) prod *= eval_h(t, x);
    return prod;
}

MultiHSpec::MultiHSpec(double eta_, std::vector<MultiHChannel> ch)
    : eta(eta_), channels(std::move(ch)) {
    if (!(eta >= 0.0)) throw DomainError("MultiHSpec: eta must be non-negative");
    for (const auto& c : channels)
        if (!(c.scale > 0.0)) throw DomainError("MultiHSpec: channel scale must be positive");
}

double eval_multih_approx(const MultiHSpec& spec, double Q, int M) {
    std::vector<HTermEvaluator> owned;
    owned.reserve(spec.channels.size());
    for (const auto& c : spec.channels) owned.emplace_back(c.term);
    std::vector<const HTermEvaluator*> ptrs;
    ptrs.reserve(owned.size());
    for (const auto& e : owned) ptrs.push_back(&e);
    return eval_multih_approx(spec, Q, M, ptrs);
}

double eval_multih_approx(const MultiHSpec& spec, double Q, int M,
                          std::span<const HTermEvaluator* const> evaluators) {
    if (!(Q >= 1.0) || !(static_cast<double>(M) / Q >= 10.0))
        throw DomainError("eval_multih_approx: requires Q >= 1 and M/Q >= 10");
    if (evaluators.size() != spec.channels.size())
        throw DomainError("eval_multih_approx: evaluator count mismatch");

    const size_t nch = spec.channels.size();
    const double h = Q / static_cast<double>(M);

    std::vector<std::vector<double>> vals(nch);
    std::vector<double> xs(static_cast<size_t>(M));
    for (size_t j = 0; j < nch; ++j) {
        for (int l = 1; l <= M; ++l)
            xs[static_cast<size_t>(l - 1)] = static_cast<double>(l) * h * spec.channels[j].scale;
        vals[j].resize(static_cast<size_t>(M));
        evaluators[j]->eval_many(xs, vals[j]);
    }

    std::vector<double> prod(static_cast<size_t>(M), 1.0);
    for (int l = 0; l < M; ++l)
        for (size_t j = 0; j < nch; ++j) prod[static_cast<size_t>(l)] *= vals[j][static_cast<size_t>(l)];
    // channel product at t = 0 by extrapolation (terms are bounded there)
    const double g0 = 3.0 * (prod[0] - prod[1]) + prod[2];
    const std::function<double(double)> refine = [&](double t) {
        double p = 1.0;
        for (size_t j = 0; j < nch; ++j) p *= evaluators[j]->eval(t * spec.channels[j].scale);
        return p;
    };
    return quadrature::exp_grid_integral(spec.eta, Q, M, prod, g0, &refine);
}

} // namespace hcap::heval
