// SPDX-License-Identifier: Apache-2.0
//
// Catalog of fading models as hyper Fox's H parameter sets, composition of
// multipath and shadowing effects, and PDF -> MGF derivation via the Mellin
// operation.

#ifndef HCAP_FADING_HPP
#define HCAP_FADING_HPP

#include <memory>
#include <string>
#include <vector>

#include "hcap/heval.hpp"
#include "hcap/hseq.hpp"

namespace hcap::fading {

using hseq::HTerm;
using hseq::HyperFoxDist;

enum class ChannelKind {
    Rayleigh,
    NakagamiM,
    Weibull,
    WeibullGamma,
    GeneralizedK,
    CustomHyperH,
};

/// One channel's fading model. Shape parameters by kind:
///   NakagamiM:     m_hat >= 1/2
///   Weibull:       beta > 0
///   WeibullGamma:  beta > 0, psi >= 0 (psi = 0 reduces to Weibull)
///   GeneralizedK:  m_hat >= 1/2, psi in [0, 2] (psi = 0 reduces to Nakagami)
/// All cataloged power-gain densities are normalized to the requested mean
/// power (default 1).
struct ChannelModel {
    ChannelKind kind = ChannelKind::Rayleigh;
    double m_hat = 1.0;
    double beta = 2.0;
    double psi = 0.0;
    double mean_power = 1.0;
    HyperFoxDist custom; // used only for CustomHyperH

    static ChannelModel rayleigh(double mean_power = 1.0);
    static ChannelModel nakagami(double m_hat, double mean_power = 1.0);
    static ChannelModel weibull(double beta, double mean_power = 1.0);
    static ChannelModel weibull_gamma(double beta, double psi, double mean_power = 1.0);
    static ChannelModel generalized_k(double m_hat, double psi, double mean_power = 1.0);
    static ChannelModel custom_hyper_h(HyperFoxDist dist, double mean_power = 1.0);
};

std::string kind_name(ChannelKind kind);

/// Power-gain PDF parameter sequences of a model, rescaled to its mean power.
/// Throws DomainError on parameter-range violations.
HyperFoxDist pdf_params(const ChannelModel& model);

/// Composes independent multipath and shadowing envelope variates into the
/// power-gain density of their product: order O_Z [+] O_X and parameters
/// <1, 2, -1/2| (P_Z [+] P_X). Both operands must pass the density
/// conditions, as does the result.
HTerm compose_multipath_shadowing(const HTerm& multipath_envelope,
                                  const HTerm& shadowing_envelope);

/// Envelope-domain H variates used as composition inputs.
HTerm nakagami_envelope(double m_hat);      // unit mean power
HTerm gamma_shadowing_envelope(double k);   // envelope of unit-mean Gamma(k) power
HTerm weibull_envelope(double beta);        // unit mean power

/// An MGF as a sum of H terms, with compiled per-term evaluators (shared, so
/// copies are cheap). Construction checks phi(0) = 1 within 1e-6 and monotone
/// decay on a sampled grid of [0, 50].
class MgfRepr {
  public:
    explicit MgfRepr(HyperFoxDist terms);

    const HyperFoxDist& dist() const { return dist_; }
    const std::vector<std::shared_ptr<const heval::HTermEvaluator>>& evaluators() const {
        return evals_;
    }

    /// MGF value at s >= 0; s = 0 returns 1 by normalization.
    double operator()(double s) const;

  private:
    HyperFoxDist dist_;
    std::vector<std::shared_ptr<const heval::HTermEvaluator>> evals_;
};

/// Termwise Mellin transform of a density into its MGF.
MgfRepr pdf_to_mgf(const HyperFoxDist& dist);

/// MGF of a model (pdf_params then pdf_to_mgf).
MgfRepr mgf_params(const ChannelModel& model);

/// MGF value; s = 0 handled by the analytic limit (1 for a valid MGF).
double mgf_eval(const MgfRepr& mgf, double s);

} // namespace hcap::fading

#endif
