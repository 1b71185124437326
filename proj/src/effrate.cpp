// SPDX-License-Identifier: Apache-2.0

#include "hcap/effrate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "hcap/quadrature.hpp"
#include "hcap/specfn.hpp"

namespace hcap::effrate {
namespace {

constexpr double ln2 = 0.69314718055994530941723212145817657;

double log2_of(double x) { return std::log(x) / ln2; }

void require_rate_inputs(double A, double rho, int N) {
    if (!(A > 0.0)) throw DomainError("effective rate: A must be positive");
    if (!(rho > 0.0)) throw DomainError("effective rate: rho must be positive");
    if (N < 1) throw DomainError("effective rate: N must be at least 1");
}

// finite-sum approximation of int_0^Q s^(A-1) e^-s phi(s rho / N) ds on the
// grid s = l Q/M, endpoint-corrected so it is accurate for all A > 0
double trapezoid_sum(const MgfFn& mgf, double A, double rho, int N, double Q, int M) {
    const double h = Q / static_cast<double>(M);
    std::vector<double> g(static_cast<size_t>(M));
    for (int l = 1; l <= M; ++l) g[static_cast<size_t>(l - 1)] = mgf(l * h * rho / N);
    const std::function<double(double)> refine = [&](double s) { return mgf(s * rho / N); };
    return quadrature::exp_grid_integral(A, Q, M, g, mgf(0.0), &refine);
}

double rate_from_bracket(double bracket, double A, const char* who) {
    if (!(bracket > 0.0) || !std::isfinite(bracket)) {
        std::ostringstream msg;
        msg << who << ": expectation is non-positive or non-finite (" << bracket << ")";
        throw RangeError(msg.str());
    }
    return -log2_of(bracket) / A;
}

// Inverse and determinant of a small dense matrix by Gauss-Jordan elimination
// with partial pivoting.
struct InverseResult {
    std::vector<double> inv;
    double det;
};

InverseResult invert_matrix(const std::vector<double>& a_in, int n) {
    std::vector<double> a = a_in;
    std::vector<double> inv(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) inv[static_cast<size_t>(i) * n + i] = 1.0;
    double det = 1.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[static_cast<size_t>(r) * n + col]) >
                std::abs(a[static_cast<size_t>(piv) * n + col]))
                piv = r;
        if (std::abs(a[static_cast<size_t>(piv) * n + col]) < 1e-14)
            throw DomainError("correlation matrix is singular");
        if (piv != col) {
            for (int c = 0; c < n; ++c) {
                std::swap(a[static_cast<size_t>(piv) * n + c], a[static_cast<size_t>(col) * n + c]);
                std::swap(inv[static_cast<size_t>(piv) * n + c], inv[static_cast<size_t>(col) * n + c]);
            }
            det = -det;
        }
        const double d = a[static_cast<size_t>(col) * n + col];
        det *= d;
        for (int c = 0; c < n; ++c) {
            a[static_cast<size_t>(col) * n + c] /= d;
            inv[static_cast<size_t>(col) * n + c] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[static_cast<size_t>(r) * n + col];
            if (f == 0.0) continue;
            for (int c = 0; c < n; ++c) {
                a[static_cast<size_t>(r) * n + c] -= f * a[static_cast<size_t>(col) * n + c];
                inv[static_cast<size_t>(r) * n + c] -= f * inv[static_cast<size_t>(col) * n + c];
            }
        }
    }
    return {std::move(inv), det};
}

// The correlated series is parameterized at the envelope level: a power
// correlation r between channel gains corresponds to sqrt(r) in the series
// matrix (verified against the exact bivariate sampler and its 2-D transform).
std::vector<double> series_level_matrix(const CorrelatedGenKSpec& spec) {
    std::vector<double> s = spec.Sigma;
    const int n = spec.N;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) s[static_cast<size_t>(i) * n + j] = std::sqrt(s[static_cast<size_t>(i) * n + j]);
    return s;
}

// per-channel H term of the correlated series at mixture order alpha
hseq::HTerm corr_channel_term(double pjj, double m1, double m2, int alpha) {
    hseq::ParamSeq p;
    p.u = std::pow(pjj, -(m1 + static_cast<double>(alpha)));
    p.v = 1.0 / (pjj * m1 * m2);
    p.c = {1.0 - m1 - static_cast<double>(alpha), 1.0 - m2};
    p.C = {1.0, 1.0};
    p.d = {0.0};
    p.D = {1.0};
    return hseq::HTerm(hseq::OrderSeq(1, 2, 2, 1), std::move(p));
}

// alpha_j from the adjacent mixture indices: alpha_1 = k_1, alpha_N = k_{N-1},
// interior alpha_j = k_{j-1} + k_j
std::vector<int> alpha_map(const std::vector<int>& k, int N) {
    std::vector<int> alpha(static_cast<size_t>(N));
    for (int j = 0; j < N; ++j) {
        if (j == 0)
            alpha[static_cast<size_t>(j)] = k[0];
        else if (j == N - 1)
            alpha[static_cast<size_t>(j)] = k[static_cast<size_t>(N - 2)];
        else
            alpha[static_cast<size_t>(j)] = k[static_cast<size_t>(j - 1)] + k[static_cast<size_t>(j)];
    }
    return alpha;
}

// enumerate all (k_1..k_m) with sum == total, in lexicographic order
void compositions(int total, int m, std::vector<int>& k, size_t pos,
                  const std::function<void(const std::vector<int>&)>& fn) {
    if (pos + 1 == k.size()) {
        k[pos] = total;
        fn(k);
        return;
    }
    for (int v = 0; v <= total; ++v) {
        k[pos] = v;
        compositions(total - v, m, k, pos + 1, fn);
    }
}

struct CorrSeriesContext {
    int N;
    double m1, m2;
    std::vector<double> W;
    double detW;
    std::vector<double> pjj;
    std::vector<double> log_off; // log |p_{l,l+1}|, -inf when zero

    explicit CorrSeriesContext(const CorrelatedGenKSpec& spec) : N(spec.N), m1(spec.m1), m2(spec.m2) {
        spec.validate();
        auto inv = invert_matrix(series_level_matrix(spec), N);
        W = std::move(inv.inv);
        detW = 1.0 / inv.det;
        pjj.resize(static_cast<size_t>(N));
        for (int j = 0; j < N; ++j) {
            pjj[static_cast<size_t>(j)] = W[static_cast<size_t>(j) * N + j];
            if (!(pjj[static_cast<size_t>(j)] > 0.0))
                throw DomainError("correlated series: inverse has a non-positive diagonal");
        }
        log_off.resize(static_cast<size_t>(N - 1));
        for (int l = 0; l < N - 1; ++l) {
            const double off = std::abs(W[static_cast<size_t>(l) * N + (l + 1)]);
            log_off[static_cast<size_t>(l)] =
                off > 0.0 ? std::log(off) : -std::numeric_limits<double>::infinity();
        }
    }

    // log of prod_l |p_{l,l+1}|^{2 k_l} / (k_l! Gamma(m1 + k_l))
    double log_mixture_weight(const std::vector<int>& k) const {
        double acc = 0.0;
        for (int l = 0; l < N - 1; ++l) {
            const int kl = k[static_cast<size_t>(l)];
            if (kl > 0 && !std::isfinite(log_off[static_cast<size_t>(l)]))
                return -std::numeric_limits<double>::infinity();
            acc += 2.0 * kl * (kl > 0 ? log_off[static_cast<size_t>(l)] : 0.0);
            acc -= std::lgamma(static_cast<double>(kl) + 1.0);
            acc -= std::lgamma(m1 + static_cast<double>(kl));
        }
        return acc;
    }
};

} // namespace

QosSpec QosSpec::from_theta(double theta, double T, double B) {
    if (!(theta > 0.0) || !(T > 0.0) || !(B > 0.0))
        throw DomainError("QosSpec: theta, T, B must be positive");
    return {theta, T, B, theta * T * B / ln2};
}

QosSpec QosSpec::from_a(double A, double T, double B) {
    if (!(A > 0.0) || !(T > 0.0) || !(B > 0.0))
        throw DomainError("QosSpec: A, T, B must be positive");
    return {A * ln2 / (T * B), T, B, A};
}

CorrelatedGenKSpec CorrelatedGenKSpec::uniform(int N, double m1, double m2, double r) {
    CorrelatedGenKSpec spec;
    spec.N = N;
    spec.m1 = m1;
    spec.m2 = m2;
    spec.Sigma.assign(static_cast<size_t>(N) * N, r);
    for (int i = 0; i < N; ++i) spec.Sigma[static_cast<size_t>(i) * N + i] = 1.0;
    spec.validate();
    return spec;
}

void CorrelatedGenKSpec::validate() const {
    if (N < 2) throw DomainError("CorrelatedGenKSpec: N must be at least 2");
    if (!(m1 > 0.0) || !(m2 > 0.0))
        throw DomainError("CorrelatedGenKSpec: m1 and m2 must be positive");
    if (Sigma.size() != static_cast<size_t>(N) * static_cast<size_t>(N))
        throw DomainError("CorrelatedGenKSpec: Sigma must be N x N");
    for (int i = 0; i < N; ++i) {
        if (sigma(i, i) != 1.0) throw DomainError("CorrelatedGenKSpec: diagonal must be exactly 1");
        for (int j = 0; j < N; ++j) {
            if (std::abs(sigma(i, j) - sigma(j, i)) > 0.0)
                throw DomainError("CorrelatedGenKSpec: Sigma must be symmetric");
            if (i != j && !(sigma(i, j) >= 0.0 && sigma(i, j) < 1.0))
                throw DomainError("CorrelatedGenKSpec: off-diagonals must lie in [0, 1)");
        }
    }
    // positive definiteness via Cholesky
    std::vector<double> a = Sigma;
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a[static_cast<size_t>(i) * N + j];
            for (int k = 0; k < j; ++k)
                s -= a[static_cast<size_t>(i) * N + k] * a[static_cast<size_t>(j) * N + k];
            if (i == j) {
                if (!(s > 0.0))
                    throw DomainError("CorrelatedGenKSpec: Sigma is not positive definite");
                a[static_cast<size_t>(i) * N + j] = std::sqrt(s);
            } else {
                a[static_cast<size_t>(i) * N + j] = s / a[static_cast<size_t>(j) * N + j];
            }
        }
    }
}

ApproxConfig ApproxConfig::from_ratio(double Q, double M_over_Q, int series_kmax,
                                      double series_tol) {
    ApproxConfig cfg;
    cfg.Q = Q;
    cfg.M = static_cast<int>(std::lround(Q * M_over_Q));
    cfg.series_kmax = series_kmax;
    cfg.series_tol = series_tol;
    cfg.validate();
    return cfg;
}

void ApproxConfig::validate() const {
    if (!(Q >= 1.0)) throw DomainError("ApproxConfig: Q must be at least 1");
    if (!(static_cast<double>(M) / Q >= 10.0)) throw DomainError("ApproxConfig: requires M/Q >= 10");
    if (series_kmax < 0) throw DomainError("ApproxConfig: series_kmax must be non-negative");
    if (!(series_tol > 0.0)) throw DomainError("ApproxConfig: series_tol must be positive");
}

MgfFn product_mgf(const std::vector<fading::MgfRepr>& channels) {
    std::vector<fading::MgfRepr> copy = channels;
    return [copy = std::move(copy)](double s) {
        double prod = 1.0;
        for (const auto& mgf : copy) prod *= mgf(s);
        return prod;
    };
}

double rate_from_mgf_quadrature(const MgfFn& mgf_end, const QosSpec& qos, double rho, int N) {
    require_rate_inputs(qos.A, rho, N);
    quadrature::AdaptiveOptions opt;
    opt.rel_tol = 1e-11;
    opt.abs_tol = 1e-12;
    double integral;
    try {
        integral = quadrature::integrate_exp_kernel(
            qos.A, [&](double s) { return mgf_end(s * rho / N); }, opt);
    } catch (const QuadratureError& e) {
        throw QuadratureError(std::string("rate_from_mgf_quadrature: ") + e.what());
    }
    const double bracket = std::exp(std::log(integral) - std::lgamma(qos.A));
    return rate_from_bracket(bracket, qos.A, "rate_from_mgf_quadrature");
}

double rate_trapezoid(const MgfFn& mgf_end, const QosSpec& qos, double rho, int N,
                      const ApproxConfig& cfg) {
    require_rate_inputs(qos.A, rho, N);
    cfg.validate();
    const double S = trapezoid_sum(mgf_end, qos.A, rho, N, cfg.Q, cfg.M);
    if (!(S > 0.0) || !std::isfinite(S))
        throw RangeError("rate_trapezoid: finite sum is non-positive; expectation underflowed");
    return std::lgamma(qos.A) / (qos.A * ln2) - log2_of(S) / qos.A;
}

double rate_trapezoid(const std::vector<fading::MgfRepr>& channels, const QosSpec& qos,
                      double rho, int N, const ApproxConfig& cfg) {
    require_rate_inputs(qos.A, rho, N);
    cfg.validate();
    if (channels.empty()) throw DomainError("rate_trapezoid: no channels");

    const int M = cfg.M;
    const double h = cfg.Q / static_cast<double>(M);
    std::vector<double> xs(static_cast<size_t>(M));
    for (int l = 1; l <= M; ++l)
        xs[static_cast<size_t>(l - 1)] = static_cast<double>(l) * h * rho / N;

    std::vector<double> phi(static_cast<size_t>(M), 1.0);
    std::vector<double> term(static_cast<size_t>(M));
    for (const auto& mgf : channels) {
        std::vector<double> channel(static_cast<size_t>(M), 0.0);
        for (const auto& ev : mgf.evaluators()) {
            ev->eval_many(xs, term);
            for (int l = 0; l < M; ++l) channel[static_cast<size_t>(l)] += term[static_cast<size_t>(l)];
        }
        for (int l = 0; l < M; ++l) phi[static_cast<size_t>(l)] *= channel[static_cast<size_t>(l)];
    }

    const std::function<double(double)> refine = [&](double s) {
        double prod_v = 1.0;
        for (const auto& mgf : channels) {
            double channel = 0.0;
            for (const auto& ev : mgf.evaluators()) channel += ev->eval(s * rho / N);
            prod_v *= channel;
        }
        return prod_v;
    };
    const double S = quadrature::exp_grid_integral(qos.A, cfg.Q, M, phi, 1.0, &refine);
    if (!(S > 0.0) || !std::isfinite(S))
        throw RangeError("rate_trapezoid: finite sum is non-positive; expectation underflowed");
    return std::lgamma(qos.A) / (qos.A * ln2) - log2_of(S) / qos.A;
}

double rate_inid_hyper(const std::vector<fading::MgfRepr>& channels, const QosSpec& qos,
                       double rho, const ApproxConfig& cfg) {
    const int N = static_cast<int>(channels.size());
    require_rate_inputs(qos.A, rho, N);
    cfg.validate();

    // a single channel reduces exactly to the univariate transform
    if (N == 1) return rate_siso_hyper(channels[0], qos, rho);

    const int M = cfg.M;
    const double h = cfg.Q / static_cast<double>(M);

    // shared abscissa grid: per-channel argument scale is rho/N throughout
    std::vector<double> xs(static_cast<size_t>(M));
    for (int l = 1; l <= M; ++l)
        xs[static_cast<size_t>(l - 1)] = static_cast<double>(l) * h * rho / N;

    // memoized per-(channel, term) H values on the grid
    std::vector<std::vector<std::vector<double>>> vals(static_cast<size_t>(N));
    double combos = 1.0;
    for (int j = 0; j < N; ++j) {
        const auto& evals = channels[static_cast<size_t>(j)].evaluators();
        combos *= static_cast<double>(evals.size());
        vals[static_cast<size_t>(j)].resize(evals.size());
        for (size_t k = 0; k < evals.size(); ++k) {
            vals[static_cast<size_t>(j)][k].resize(static_cast<size_t>(M));
            evals[k]->eval_many(xs, vals[static_cast<size_t>(j)][k]);
        }
    }
    if (combos > 1e6) throw DomainError("rate_inid_hyper: too many term combinations");

    // nested sums over the per-channel term selections
    std::vector<size_t> pick(static_cast<size_t>(N), 0);
    std::vector<double> prod(static_cast<size_t>(M));
    double total = 0.0;
    while (true) {
        for (int l = 0; l < M; ++l) {
            double p = 1.0;
            for (int j = 0; j < N; ++j)
                p *= vals[static_cast<size_t>(j)][pick[static_cast<size_t>(j)]][static_cast<size_t>(l)];
            prod[static_cast<size_t>(l)] = p;
        }
        const double g0 = 3.0 * (prod[0] - prod[1]) + prod[2];
        const std::function<double(double)> refine = [&](double s) {
            double p = 1.0;
            for (int j2 = 0; j2 < N; ++j2)
                p *= channels[static_cast<size_t>(j2)]
                         .evaluators()[pick[static_cast<size_t>(j2)]]
                         ->eval(s * rho / N);
            return p;
        };
        total += quadrature::exp_grid_integral(qos.A, cfg.Q, M, prod, g0, &refine);

        int j = 0;
        for (; j < N; ++j) {
            if (++pick[static_cast<size_t>(j)] < vals[static_cast<size_t>(j)].size()) break;
            pick[static_cast<size_t>(j)] = 0;
        }
        if (j == N) break;
    }

    const double bracket = std::exp(std::log(std::max(total, 0.0)) - std::lgamma(qos.A));
    return rate_from_bracket(bracket, qos.A, "rate_inid_hyper");
}

double rate_iid_nakagami_closed(double m_hat, int N, const QosSpec& qos, double rho) {
    if (!(m_hat >= 0.5)) throw DomainError("rate_iid_nakagami_closed: requires m_hat >= 1/2");
    require_rate_inputs(qos.A, rho, N);
    const double z = m_hat * N / rho;
    const double u = specfn::kummer_u(qos.A, qos.A - m_hat * N + 1.0, z);
    const double bracket = std::exp(qos.A * std::log(z) + std::log(u));
    return rate_from_bracket(bracket, qos.A, "rate_iid_nakagami_closed");
}

double rate_siso_hyper(const fading::MgfRepr& mgf, const QosSpec& qos, double rho) {
    require_rate_inputs(qos.A, rho, 1);
    double sum = 0.0;
    for (const auto& t : mgf.dist().terms) {
        hseq::ParamSeq p = t.params;
        p.v = t.params.v * rho;
        p.c.insert(p.c.begin(), 1.0 - qos.A);
        p.C.insert(p.C.begin(), 1.0);
        hseq::HTerm transformed(
            hseq::OrderSeq(t.order.m, t.order.n + 1, t.order.p + 1, t.order.q), std::move(p));
        sum += heval::eval_h(transformed, 1.0);
    }
    if (sum <= 0.0) throw RangeError("rate_siso_hyper: expectation is non-positive");
    const double bracket = std::exp(std::log(sum) - std::lgamma(qos.A));
    return rate_from_bracket(bracket, qos.A, "rate_siso_hyper");
}

namespace {

// evaluator pool shared by repeated joint-MGF calls on the same link
struct CorrMgfState {
    CorrSeriesContext ctx;
    ApproxConfig cfg;
    std::mutex mu;
    std::map<std::pair<int, int>, std::shared_ptr<const heval::HTermEvaluator>> evals;

    CorrMgfState(const CorrelatedGenKSpec& spec, const ApproxConfig& c) : ctx(spec), cfg(c) {}

    std::shared_ptr<const heval::HTermEvaluator> evaluator(int j, int alpha) {
        const auto key = std::make_pair(j, alpha);
        {
            std::lock_guard<std::mutex> lock(mu);
            auto it = evals.find(key);
            if (it != evals.end()) return it->second;
        }
        auto ev = std::make_shared<const heval::HTermEvaluator>(
            corr_channel_term(ctx.pjj[static_cast<size_t>(j)], ctx.m1, ctx.m2, alpha));
        std::lock_guard<std::mutex> lock(mu);
        return evals.emplace(key, std::move(ev)).first->second;
    }

    double channel_h(int j, int alpha, double s) {
        if (s == 0.0) {
            // analytic limit of the term at argument 0
            const double pjj = ctx.pjj[static_cast<size_t>(j)];
            return std::exp(-(ctx.m1 + alpha) * std::log(pjj) + std::lgamma(ctx.m1 + alpha) +
                            std::lgamma(ctx.m2));
        }
        return evaluator(j, alpha)->eval(s);
    }

    double operator()(double s) {
        if (s < 0.0) throw DomainError("joint_mgf_corr_genk: s must be non-negative");
        const int N = ctx.N;
        double acc = 0.0;
        bool converged = false;
        std::vector<int> k(static_cast<size_t>(N - 1), 0);
        for (int total = 0; total <= cfg.series_kmax; ++total) {
            double shell = 0.0;
            compositions(total, N - 1, k, 0, [&](const std::vector<int>& kk) {
                const double lw = ctx.log_mixture_weight(kk);
                if (!std::isfinite(lw)) return;
                const auto alpha = alpha_map(kk, N);
                double term = std::exp(lw);
                for (int j = 0; j < N; ++j) term *= channel_h(j, alpha[static_cast<size_t>(j)], s);
                shell += term;
            });
            acc += shell;
            if (total >= 1 && std::abs(shell) < cfg.series_tol * std::abs(acc)) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw SeriesNotConverged("joint_mgf_corr_genk: shell " +
                                     std::to_string(cfg.series_kmax) + " still above series_tol");
        const double log_pre =
            ctx.m1 * std::log(ctx.detW) - std::lgamma(ctx.m1) - N * std::lgamma(ctx.m2);
        return std::exp(log_pre) * acc;
    }
};

} // namespace

double joint_mgf_corr_genk(const CorrelatedGenKSpec& spec, double s, const ApproxConfig& cfg) {
    cfg.validate();
    CorrMgfState state(spec, cfg);
    return state(s);
}

MgfFn corr_genk_mgf(const CorrelatedGenKSpec& spec, const ApproxConfig& cfg) {
    cfg.validate();
    auto state = std::make_shared<CorrMgfState>(spec, cfg);
    return [state](double s) { return (*state)(s); };
}

double rate_corr_genk(const CorrelatedGenKSpec& spec, const QosSpec& qos, double rho,
                      const ApproxConfig& cfg) {
    cfg.validate();
    CorrSeriesContext ctx(spec);
    const int N = ctx.N;
    require_rate_inputs(qos.A, rho, N);

    const int M = cfg.M;
    const double h = cfg.Q / static_cast<double>(M);
    std::vector<double> xs(static_cast<size_t>(M));
    for (int l = 1; l <= M; ++l)
        xs[static_cast<size_t>(l - 1)] = static_cast<double>(l) * h * rho / N;

    // memoized per-(channel, alpha) evaluators and H values over the grid
    struct ChannelData {
        std::shared_ptr<heval::HTermEvaluator> ev;
        std::vector<double> vals;
    };
    std::map<std::pair<int, int>, ChannelData> hvals;
    const auto channel_data = [&](int j, int alpha) -> const ChannelData& {
        const auto key = std::make_pair(j, alpha);
        auto it = hvals.find(key);
        if (it != hvals.end()) return it->second;
        ChannelData data;
        data.ev = std::make_shared<heval::HTermEvaluator>(
            corr_channel_term(ctx.pjj[static_cast<size_t>(j)], ctx.m1, ctx.m2, alpha));
        data.vals.resize(static_cast<size_t>(M));
        data.ev->eval_many(xs, data.vals);
        return hvals.emplace(key, std::move(data)).first->second;
    };

    double acc = 0.0;
    bool converged = false;
    std::vector<int> k(static_cast<size_t>(N - 1), 0);
    for (int total = 0; total <= cfg.series_kmax; ++total) {
        double shell = 0.0;
        compositions(total, N - 1, k, 0, [&](const std::vector<int>& kk) {
            const double lw = ctx.log_mixture_weight(kk);
            if (!std::isfinite(lw)) return;
            const auto alpha = alpha_map(kk, N);
            std::vector<const ChannelData*> ch(static_cast<size_t>(N));
            for (int j = 0; j < N; ++j) ch[static_cast<size_t>(j)] = &channel_data(j, alpha[static_cast<size_t>(j)]);
            std::vector<double> prod(static_cast<size_t>(M));
            for (int l = 0; l < M; ++l) {
                double p = 1.0;
                for (int j = 0; j < N; ++j) p *= ch[static_cast<size_t>(j)]->vals[static_cast<size_t>(l)];
                prod[static_cast<size_t>(l)] = p;
            }
            const double g0 = 3.0 * (prod[0] - prod[1]) + prod[2];
            // refine the head only when the combination matters for the total
            const double coarse = quadrature::exp_grid_integral(qos.A, cfg.Q, M, prod, g0);
            double value = coarse;
            if (std::abs(std::exp(lw) * coarse) > 1e-7 * std::abs(acc)) {
                const std::function<double(double)> refine = [&](double s) {
                    double p = 1.0;
                    for (int j = 0; j < N; ++j)
                        p *= ch[static_cast<size_t>(j)]->ev->eval(s * rho / N);
                    return p;
                };
                value = quadrature::exp_grid_integral(qos.A, cfg.Q, M, prod, g0, &refine);
            }
            shell += std::exp(lw) * value;
        });
        acc += shell;
        if (total >= 1 && std::abs(shell) < cfg.series_tol * std::abs(acc)) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw SeriesNotConverged("rate_corr_genk: shell " + std::to_string(cfg.series_kmax) +
                                 " still above series_tol");

    const double log_pre = ctx.m1 * std::log(ctx.detW) - std::lgamma(qos.A) -
                           std::lgamma(ctx.m1) - N * std::lgamma(ctx.m2);
    const double bracket = std::exp(log_pre) * acc;
    return rate_from_bracket(bracket, qos.A, "rate_corr_genk");
}

ErrorBounds error_bounds(const QosSpec& qos, const ApproxConfig& cfg, const MgfFn& mgf_end,
                         double rho, int N) {
    cfg.validate();
    require_rate_inputs(qos.A, rho, N);
    ErrorBounds out;
    out.truncation_bound = specfn::upper_incomplete_gamma(qos.A, cfg.Q);
    const double s1 = trapezoid_sum(mgf_end, qos.A, rho, N, cfg.Q, cfg.M);
    const double s2 = trapezoid_sum(mgf_end, qos.A, rho, N, cfg.Q, 2 * cfg.M);
    // the grid rule is second order, so the M-vs-2M difference is 3/4 of the
    // error at M; the extra 12% covers higher-order leakage
    out.discretization_estimate = std::abs(s1 - s2) * 1.5;
    return out;
}

} // namespace hcap::effrate
