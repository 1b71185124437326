// SPDX-License-Identifier: Apache-2.0

#include "hcap/hseq.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

namespace hcap::hseq {
namespace {

using json = nlohmann::json;

void require(bool cond, const char* msg) {
    if (!cond) throw DomainError(msg);
}

// (dotted_1, middle, double_dotted_1): the interleaving shared by the
// convolution and Mellin operations.
std::vector<double> splice(const std::vector<double>& first, int split,
                           const std::vector<double>& middle) {
    std::vector<double> out;
    out.reserve(first.size() + middle.size());
    out.insert(out.end(), first.begin(), first.begin() + split);
    out.insert(out.end(), middle.begin(), middle.end());
    out.insert(out.end(), first.begin() + split, first.end());
    return out;
}

std::vector<double> one_minus(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = 1.0 - a[i] - b[i];
    return out;
}

} // namespace

OrderSeq::OrderSeq(int m_, int n_, int p_, int q_) : m(m_), n(n_), p(p_), q(q_) {
    require(m >= 0 && n >= 0 && p >= 0 && q >= 0, "OrderSeq: components must be non-negative");
    require(m <= q, "OrderSeq: m must not exceed q");
    require(n <= p, "OrderSeq: n must not exceed p");
}

HTerm::HTerm(OrderSeq o, ParamSeq p) : order(o), params(std::move(p)) {
    require(static_cast<int>(params.c.size()) == order.p, "HTerm: c length must equal p");
    require(static_cast<int>(params.C.size()) == order.p, "HTerm: C length must equal p");
    require(static_cast<int>(params.d.size()) == order.q, "HTerm: d length must equal q");
    require(static_cast<int>(params.D.size()) == order.q, "HTerm: D length must equal q");
    require(params.v > 0.0, "HTerm: v must be positive");
    require(std::isfinite(params.u) && std::isfinite(params.v) &&
                std::isfinite(params.u_exp),
            "HTerm: non-finite scale");
    for (double x : params.C) require(x > 0.0, "HTerm: C entries must be positive");
    for (double x : params.D) require(x > 0.0, "HTerm: D entries must be positive");
}

HyperFoxDist::HyperFoxDist(std::vector<HTerm> t) : terms(std::move(t)) {
    require(!terms.empty(), "HyperFoxDist: needs at least one term");
}

std::pair<OrderSeq, ParamSeq> convolve(const OrderSeq& o1, const ParamSeq& p1,
                                       const OrderSeq& o2, const ParamSeq& p2) {
    OrderSeq o(o1.m + o2.m, o1.n + o2.n, o1.p + o2.p, o1.q + o2.q);
    ParamSeq p;
    p.u = p1.u * p2.u;
    p.u_exp = p1.u_exp + p2.u_exp;
    p.v = p1.v * p2.v;
    p.c = splice(p1.c, o1.n, p2.c);
    p.C = splice(p1.C, o1.n, p2.C);
    p.d = splice(p1.d, o1.m, p2.d);
    p.D = splice(p1.D, o1.m, p2.D);
    return {o, std::move(p)};
}

HTerm convolve(const HTerm& a, const HTerm& b) {
    auto [o, p] = convolve(a.order, a.params, b.order, b.params);
    return HTerm(o, std::move(p));
}

std::pair<OrderSeq, ParamSeq> mellin(const OrderSeq& o1, const ParamSeq& p1,
                                     const OrderSeq& o2, const ParamSeq& p2) {
    OrderSeq o(o1.m + o2.n, o1.n + o2.m, o1.p + o2.q, o1.q + o2.p);
    ParamSeq p;
    p.u = p1.u * p2.u / p2.v;
    p.u_exp = p1.u_exp + p2.u_exp;
    p.v = p1.v / p2.v;
    p.c = splice(p1.c, o1.n, one_minus(p2.d, p2.D));
    p.C = splice(p1.C, o1.n, p2.D);
    p.d = splice(p1.d, o1.m, one_minus(p2.c, p2.C));
    p.D = splice(p1.D, o1.m, p2.C);
    return {o, std::move(p)};
}

HTerm mellin(const HTerm& kernel, const HTerm& operand) {
    auto [o, p] = mellin(kernel.order, kernel.params, operand.order, operand.params);
    return HTerm(o, std::move(p));
}

ParamSeq scale(const ParamSeq& p, double alpha) {
    if (!(alpha > 0.0)) throw DomainError("scale: alpha must be positive");
    ParamSeq out = p;
    out.u = p.u / alpha;
    out.v = p.v / alpha;
    return out;
}

ParamSeq elementary(double alpha, double beta, double gamma, const ParamSeq& p) {
    const double av = alpha * p.v;
    if (!(av > 0.0)) throw DomainError("elementary: alpha*v must be positive");
    if (beta == 0.0) throw DomainError("elementary: beta must be non-zero");
    ParamSeq out;
    out.u = p.u / std::pow(av, beta * gamma);
    out.u_exp = p.u_exp;
    out.v = std::pow(av, beta);
    out.c.resize(p.c.size());
    out.C.resize(p.C.size());
    out.d.resize(p.d.size());
    out.D.resize(p.D.size());
    for (size_t i = 0; i < p.c.size(); ++i) {
        out.c[i] = p.c[i] + beta * gamma * p.C[i];
        out.C[i] = beta * p.C[i];
    }
    for (size_t i = 0; i < p.d.size(); ++i) {
        out.d[i] = p.d[i] + beta * gamma * p.D[i];
        out.D[i] = beta * p.D[i];
    }
    return out;
}

DensityCheck check_density_conditions(const HTerm& term) {
    DensityCheck res;
    std::ostringstream diag;
    for (int j = 0; j < term.order.n; ++j) {
        const double s = term.params.c[static_cast<size_t>(j)] + term.params.C[static_cast<size_t>(j)];
        if (!(s < 1.0)) {
            res.ok = false;
            diag << "c[" << j << "]+C[" << j << "]=" << s << " >= 1; ";
        }
    }
    for (int j = 0; j < term.order.m; ++j) {
        const double r = -term.params.d[static_cast<size_t>(j)] / term.params.D[static_cast<size_t>(j)];
        if (!(r < 1.0)) {
            res.ok = false;
            diag << "-d[" << j << "]/D[" << j << "]=" << r << " >= 1; ";
        }
    }
    res.diagnostics = diag.str();
    return res;
}

namespace {

json term_to_json_obj(const HTerm& t) {
    json params = {{"u", t.params.u},
                   {"v", t.params.v},
                   {"c", t.params.c},
                   {"d", t.params.d},
                   {"C", t.params.C},
                   {"D", t.params.D}};
    if (t.params.u_exp != 0.0) params["u_exp"] = t.params.u_exp;
    return json{{"order", {t.order.m, t.order.n, t.order.p, t.order.q}},
                {"params", params}};
}

HTerm term_from_json_obj(const json& j) {
    try {
        const auto& o = j.at("order");
        const auto& p = j.at("params");
        OrderSeq order(o.at(0).get<int>(), o.at(1).get<int>(), o.at(2).get<int>(),
                       o.at(3).get<int>());
        ParamSeq params;
        params.u = p.at("u").get<double>();
        params.u_exp = p.value("u_exp", 0.0);
        params.v = p.at("v").get<double>();
        params.c = p.value("c", std::vector<double>{});
        params.d = p.value("d", std::vector<double>{});
        params.C = p.value("C", std::vector<double>{});
        params.D = p.value("D", std::vector<double>{});
        return HTerm(order, std::move(params));
    } catch (const json::exception& e) {
        throw ParseError(std::string("H term: ") + e.what());
    } catch (const DomainError& e) {
        throw ParseError(std::string("H term: ") + e.what());
    }
}

} // namespace

std::string to_json(const HTerm& term) { return term_to_json_obj(term).dump(); }

std::string to_json(const HyperFoxDist& dist) {
    json terms = json::array();
    for (const auto& t : dist.terms) terms.push_back(term_to_json_obj(t));
    return json{{"terms", terms}}.dump();
}

HTerm hterm_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError("H term: invalid JSON");
    return term_from_json_obj(j);
}

HyperFoxDist hyperfox_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.contains("terms") || !j["terms"].is_array() || j["terms"].empty())
        throw ParseError("hyper H distribution: expected non-empty \"terms\" array");
    std::vector<HTerm> terms;
    for (const auto& t : j["terms"]) terms.push_back(term_from_json_obj(t));
    return HyperFoxDist(std::move(terms));
}

} // namespace hcap::hseq
