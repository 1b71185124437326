// SPDX-License-Identifier: Apache-2.0

#ifndef HCAP_SPECFN_HPP
#define HCAP_SPECFN_HPP

#include <complex>

#include "hcap/errors.hpp"

namespace hcap::specfn {

/// Gamma function of a complex argument.
///
/// Lanczos rational approximation with reflection for Re z < 0.5. Relative
/// accuracy is better than 1e-12 for |Re z| <= 50, |Im z| <= 200, which covers
/// every contour used by the H-function evaluator.
///
/// Throws PoleError if z is within 1e-14 of a non-positive integer.
std::complex<double> gamma_complex(std::complex<double> z);

/// log Gamma(z), accurate up to an additive multiple of 2*pi*i; exponentiating
/// always reproduces gamma_complex(z). This is the workhorse for products of
/// gamma factors that would overflow individually.
std::complex<double> lgamma_complex(std::complex<double> z);

/// Upper incomplete gamma function Gamma(a, x) = int_x^inf e^-t t^(a-1) dt.
/// Series for x < a+1, continued fraction otherwise. Relative error <= 1e-10.
/// Throws DomainError for a <= 0 or x < 0.
double upper_incomplete_gamma(double a, double x);

/// Kummer's confluent hypergeometric function of the second kind U(a, b, z),
/// for a > 0, z > 0, computed by adaptive quadrature of
///   U(a,b,z) = 1/Gamma(a) * int_0^inf e^(-z t) t^(a-1) (1+t)^(b-a-1) dt.
/// The integral is split at t = 1 with the substitution t = e^u - 1 on the
/// tail. Relative error <= 1e-8 over the parameter ranges used by the
/// closed-form effective-rate expressions. Throws DomainError for a <= 0 or
/// z <= 0.
double kummer_u(double a, double b, double z);

} // namespace hcap::specfn

#endif
