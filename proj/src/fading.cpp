// SPDX-License-Identifier: Apache-2.0

#include "hcap/fading.hpp"

#include <cmath>

namespace hcap::fading {
namespace {

using hseq::OrderSeq;
using hseq::ParamSeq;

HTerm make_term(OrderSeq o, double u, double v, std::vector<double> c, std::vector<double> d,
                std::vector<double> C, std::vector<double> D) {
    ParamSeq p;
    p.u = u;
    p.v = v;
    p.c = std::move(c);
    p.d = std::move(d);
    p.C = std::move(C);
    p.D = std::move(D);
    return HTerm(o, std::move(p));
}

// scale given as sign * exp(log of magnitude); keeps 1/Gamma(k) for large k
// representable via the u_exp carrier
HTerm make_term_log(OrderSeq o, double sign, double log_abs_u, double v, std::vector<double> c,
                    std::vector<double> d, std::vector<double> C, std::vector<double> D) {
    ParamSeq p;
    if (std::abs(log_abs_u) < 600.0) {
        p.u = sign * std::exp(log_abs_u);
    } else {
        p.u = sign;
        p.u_exp = log_abs_u;
    }
    p.v = v;
    p.c = std::move(c);
    p.d = std::move(d);
    p.C = std::move(C);
    p.D = std::move(D);
    return HTerm(o, std::move(p));
}

HTerm nakagami_power_term(double m_hat) {
    // Gamma power gain with unit mean: f = m^m g^(m-1) e^(-m g) / Gamma(m)
    return make_term_log(OrderSeq(1, 0, 0, 1), 1.0, std::log(m_hat) - std::lgamma(m_hat), m_hat,
                         {}, {m_hat - 1.0}, {}, {1.0});
}

HTerm weibull_power_term(double beta) {
    const double g = std::tgamma(1.0 + 2.0 / beta);
    return make_term(OrderSeq(1, 0, 0, 1), g, g, {}, {1.0 - 2.0 / beta}, {}, {2.0 / beta});
}

HTerm generalized_k_power_term(double m_hat, double psi) {
    const double k = 1.0 / psi;
    const double log_u = std::log(m_hat * k) - std::lgamma(m_hat) - std::lgamma(k);
    return make_term_log(OrderSeq(2, 0, 0, 2), 1.0, log_u, m_hat / psi, {},
                         {m_hat - 1.0, k - 1.0}, {}, {1.0, 1.0});
}

HTerm weibull_gamma_power_term(double beta, double psi) {
    const double k = 1.0 / psi;
    const double g = std::tgamma(1.0 + 2.0 / beta);
    const double log_u = std::log(g * k) - std::lgamma(k);
    return make_term_log(OrderSeq(2, 0, 0, 2), 1.0, log_u, g / psi, {},
                         {k - 1.0, 1.0 - 2.0 / beta}, {}, {1.0, 2.0 / beta});
}

void apply_mean_power(HyperFoxDist& dist, double mean_power) {
    if (mean_power == 1.0) return;
    for (auto& t : dist.terms) t = HTerm(t.order, hseq::scale(t.params, mean_power));
}

} // namespace

ChannelModel ChannelModel::rayleigh(double mean_power) {
    ChannelModel m;
    m.kind = ChannelKind::Rayleigh;
    m.mean_power = mean_power;
    return m;
}

ChannelModel ChannelModel::nakagami(double m_hat, double mean_power) {
    ChannelModel m;
    m.kind = ChannelKind::NakagamiM;
    m.m_hat = m_hat;
    m.mean_power = mean_power;
    return m;
}

ChannelModel ChannelModel::weibull(double beta, double mean_power) {
    ChannelModel m;
    m.kind = ChannelKind::Weibull;
    m.beta = beta;
    m.mean_power = mean_power;
    return m;
}

ChannelModel ChannelModel::weibull_gamma(double beta, double psi, double mean_power) {
    ChannelModel m;
    m.kind = ChannelKind::WeibullGamma;
    m.beta = beta;
    m.psi = psi;
    m.mean_power = mean_power;
    return m;
}

ChannelModel ChannelModel::generalized_k(double m_hat, double psi, double mean_power) {
    ChannelModel m;
    m.kind = ChannelKind::GeneralizedK;
    m.m_hat = m_hat;
    m.psi = psi;
    m.mean_power = mean_power;
    return m;
}

ChannelModel ChannelModel::custom_hyper_h(HyperFoxDist dist, double mean_power) {
    ChannelModel m;
    m.kind = ChannelKind::CustomHyperH;
    m.custom = std::move(dist);
    m.mean_power = mean_power;
    return m;
}

std::string kind_name(ChannelKind kind) {
    switch (kind) {
        case ChannelKind::Rayleigh: return "rayleigh";
        case ChannelKind::NakagamiM: return "nakagami";
        case ChannelKind::Weibull: return "weibull";
        case ChannelKind::WeibullGamma: return "weibull_gamma";
        case ChannelKind::GeneralizedK: return "generalized_k";
        case ChannelKind::CustomHyperH: return "custom_hyper_h";
    }
    return "unknown";
}

HyperFoxDist pdf_params(const ChannelModel& model) {
    if (!(model.mean_power > 0.0)) throw DomainError("pdf_params: mean power must be positive");

    HyperFoxDist dist;
    switch (model.kind) {
        case ChannelKind::Rayleigh:
            dist = HyperFoxDist({nakagami_power_term(1.0)});
            break;
        case ChannelKind::NakagamiM:
            if (!(model.m_hat >= 0.5)) throw DomainError("pdf_params: requires m_hat >= 1/2");
            dist = HyperFoxDist({nakagami_power_term(model.m_hat)});
            break;
        case ChannelKind::Weibull:
            if (!(model.beta > 0.0)) throw DomainError("pdf_params: requires beta > 0");
            dist = HyperFoxDist({weibull_power_term(model.beta)});
            break;
        case ChannelKind::WeibullGamma:
            if (!(model.beta > 0.0)) throw DomainError("pdf_params: requires beta > 0");
            if (!(model.psi >= 0.0)) throw DomainError("pdf_params: requires psi >= 0");
            // psi = 0 means no shadowing: reduce instead of taking 1/psi
            dist = model.psi == 0.0
                       ? HyperFoxDist({weibull_power_term(model.beta)})
                       : HyperFoxDist({weibull_gamma_power_term(model.beta, model.psi)});
            break;
        case ChannelKind::GeneralizedK:
            if (!(model.m_hat >= 0.5)) throw DomainError("pdf_params: requires m_hat >= 1/2");
            if (!(model.psi >= 0.0 && model.psi <= 2.0))
                throw DomainError("pdf_params: requires psi in [0, 2]");
            dist = model.psi == 0.0
                       ? HyperFoxDist({nakagami_power_term(model.m_hat)})
                       : HyperFoxDist({generalized_k_power_term(model.m_hat, model.psi)});
            break;
        case ChannelKind::CustomHyperH:
            if (model.custom.terms.empty())
                throw DomainError("pdf_params: custom model has no terms");
            dist = model.custom;
            break;
    }

    for (const auto& t : dist.terms) {
        const auto check = hseq::check_density_conditions(t);
        if (!check) throw DomainError("pdf_params: density conditions violated: " + check.diagnostics);
    }
    apply_mean_power(dist, model.mean_power);
    return dist;
}

HTerm nakagami_envelope(double m_hat) {
    if (!(m_hat >= 0.5)) throw DomainError("nakagami_envelope: requires m_hat >= 1/2");
    const double log_u = 0.5 * std::log(m_hat) - std::lgamma(m_hat);
    return make_term_log(OrderSeq(1, 0, 0, 1), 1.0, log_u, std::sqrt(m_hat), {}, {m_hat - 0.5},
                         {}, {0.5});
}

HTerm gamma_shadowing_envelope(double k) {
    if (!(k > 0.0)) throw DomainError("gamma_shadowing_envelope: requires k > 0");
    const double log_u = 0.5 * std::log(k) - std::lgamma(k);
    return make_term_log(OrderSeq(1, 0, 0, 1), 1.0, log_u, std::sqrt(k), {}, {k - 0.5}, {},
                         {0.5});
}

HTerm weibull_envelope(double beta) {
    if (!(beta > 0.0)) throw DomainError("weibull_envelope: requires beta > 0");
    const double g = std::sqrt(std::tgamma(1.0 + 2.0 / beta));
    return make_term(OrderSeq(1, 0, 0, 1), g, g, {}, {1.0 - 1.0 / beta}, {}, {1.0 / beta});
}

HTerm compose_multipath_shadowing(const HTerm& multipath_envelope,
                                  const HTerm& shadowing_envelope) {
    const auto cz = hseq::check_density_conditions(multipath_envelope);
    if (!cz) throw DomainError("compose: multipath operand fails density conditions: " + cz.diagnostics);
    const auto cx = hseq::check_density_conditions(shadowing_envelope);
    if (!cx) throw DomainError("compose: shadowing operand fails density conditions: " + cx.diagnostics);

    auto [o, p] = hseq::convolve(multipath_envelope.order, multipath_envelope.params,
                                 shadowing_envelope.order, shadowing_envelope.params);
    HTerm composed(o, hseq::elementary(1.0, 2.0, -0.5, p));
    const auto cc = hseq::check_density_conditions(composed);
    if (!cc) throw DomainError("compose: result fails density conditions: " + cc.diagnostics);
    return composed;
}

MgfRepr::MgfRepr(HyperFoxDist terms) : dist_(std::move(terms)) {
    evals_.reserve(dist_.terms.size());
    for (const auto& t : dist_.terms)
        evals_.push_back(std::make_shared<const heval::HTermEvaluator>(t));

    // normalization and monotone decay on a sampled grid
    const double at_zero = (*this)(1e-9);
    if (!(std::abs(at_zero - 1.0) <= 1e-6))
        throw DomainError("MgfRepr: phi(0) = " + std::to_string(at_zero) + ", expected 1");
    double prev = at_zero;
    for (double s : {0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0}) {
        const double cur = (*this)(s);
        if (cur > prev + 1e-9 || cur < -1e-9 || cur > 1.0 + 1e-6)
            throw DomainError("MgfRepr: not monotone non-increasing in [0, 1] at s=" +
                              std::to_string(s));
        prev = cur;
    }
}

double MgfRepr::operator()(double s) const {
    if (s < 0.0) throw DomainError("MgfRepr: argument must be non-negative");
    if (s == 0.0) return 1.0;
    double sum = 0.0;
    for (const auto& e : evals_) sum += e->eval(s);
    return sum;
}

MgfRepr pdf_to_mgf(const HyperFoxDist& dist) {
    const HTerm kernel =
        make_term(OrderSeq(1, 0, 0, 1), 1.0, 1.0, {}, {0.0}, {}, {1.0});
    std::vector<HTerm> terms;
    terms.reserve(dist.terms.size());
    for (const auto& t : dist.terms) {
        const auto check = hseq::check_density_conditions(t);
        if (!check) throw DomainError("pdf_to_mgf: density conditions violated: " + check.diagnostics);
        terms.push_back(hseq::mellin(kernel, t));
    }
    return MgfRepr(HyperFoxDist(std::move(terms)));
}

MgfRepr mgf_params(const ChannelModel& model) { return pdf_to_mgf(pdf_params(model)); }

double mgf_eval(const MgfRepr& mgf, double s) { return mgf(s); }

} // namespace hcap::fading
