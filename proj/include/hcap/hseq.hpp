// SPDX-License-Identifier: Apache-2.0
//
// Parameter-sequence data model for Fox's H functions and the four
// H-transform sequence operations (convolution, Mellin, scaling, elementary).
// The operations replace integral transforms with parameter arithmetic: a
// term is u * H^{m,n}_{p,q}[v s | (c,C); (d,D)] and every manipulation below
// produces the sequences of the transformed term directly.

#ifndef HCAP_HSEQ_HPP
#define HCAP_HSEQ_HPP

#include <string>
#include <utility>
#include <vector>

#include "hcap/errors.hpp"

namespace hcap::hseq {

/// Order sequence O = (m, n, p, q). m of the q lower parameters and n of the
/// p upper parameters sit in the "dotted" (leading) partitions.
struct OrderSeq {
    int m = 0;
    int n = 0;
    int p = 0;
    int q = 0;

    OrderSeq() = default;
    OrderSeq(int m_, int n_, int p_, int q_);

    bool operator==(const OrderSeq&) const = default;
};

/// Parameter sequence P = (u, v, c, d, C, D). Lengths of (c, C) equal p and
/// of (d, D) equal q of the paired OrderSeq; all C_j, D_j > 0 and v > 0.
/// Sequences are stored flat; the (m, n) split indices of the OrderSeq mark
/// the dotted/double-dotted partition boundaries.
///
/// The effective scale of a term is u * exp(u_exp). The split keeps extreme
/// normalization constants (for instance 1/Gamma(k) for a large shadowing
/// shape k) representable; u_exp stays 0 in ordinary parameter ranges.
struct ParamSeq {
    double u = 1.0;
    double u_exp = 0.0;
    double v = 1.0;
    std::vector<double> c;
    std::vector<double> d;
    std::vector<double> C;
    std::vector<double> D;

    bool operator==(const ParamSeq&) const = default;
};

/// One scaled Fox's H term u * H^{m,n}_{p,q}[v s | ...]; the atom of PDFs and
/// MGFs. Construction validates length consistency and positivity eagerly.
struct HTerm {
    OrderSeq order;
    ParamSeq params;

    HTerm() = default;
    HTerm(OrderSeq o, ParamSeq p);

    bool operator==(const HTerm&) const = default;
};

/// A finite sum of H terms representing a hyper Fox's H PDF or MGF.
struct HyperFoxDist {
    std::vector<HTerm> terms;

    HyperFoxDist() = default;
    explicit HyperFoxDist(std::vector<HTerm> t);
};

/// Convolution: the sequences of the product of two independent H variates.
std::pair<OrderSeq, ParamSeq> convolve(const OrderSeq& o1, const ParamSeq& p1,
                                       const OrderSeq& o2, const ParamSeq& p2);
HTerm convolve(const HTerm& a, const HTerm& b);

/// Mellin operation: the sequences of the H transform of term 2 under the
/// kernel described by term 1 (integration-free transform composition).
std::pair<OrderSeq, ParamSeq> mellin(const OrderSeq& o1, const ParamSeq& p1,
                                     const OrderSeq& o2, const ParamSeq& p2);
HTerm mellin(const HTerm& kernel, const HTerm& operand);

/// Scaling P|alpha> = (u/alpha, v/alpha, c, d, C, D). Throws DomainError for
/// alpha <= 0.
ParamSeq scale(const ParamSeq& p, double alpha);

/// Elementary operation <alpha, beta, gamma| P
///   = (u/(alpha v)^(beta gamma), (alpha v)^beta,
///      c + beta gamma C, d + beta gamma D, beta C, beta D).
/// Throws DomainError when alpha v <= 0.
ParamSeq elementary(double alpha, double beta, double gamma, const ParamSeq& p);

/// Result of the density-condition check with per-index diagnostics.
struct DensityCheck {
    bool ok = true;
    std::string diagnostics; // empty when ok
    explicit operator bool() const { return ok; }
};

/// Necessary conditions for a term to be a probability density:
///   c_j + C_j < 1 for j = 1..n  and  -d_j/D_j < 1 for j = 1..m.
/// These are necessary, not sufficient; numeric normalization is checked
/// separately where a density is actually constructed.
DensityCheck check_density_conditions(const HTerm& term);

// JSON-style serialization used by the CLI scenario format. Strings hold
// compact JSON; parse errors surface as hcap::ParseError.
std::string to_json(const HTerm& term);
std::string to_json(const HyperFoxDist& dist);
HTerm hterm_from_json(const std::string& text);
HyperFoxDist hyperfox_from_json(const std::string& text);

} // namespace hcap::hseq

#endif
