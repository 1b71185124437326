// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "hcap/mcsim.hpp"
#include "oracles.hpp"

using namespace hcap;
using fading::ChannelModel;
using mcsim::CounterRng;
using mcsim::McConfig;

namespace {

struct Moments {
    double mean;
    double sd;
};

Moments sample_moments(const ChannelModel& model, std::uint64_t n, std::uint64_t seed) {
    double sum = 0.0, sumsq = 0.0;
    for (std::uint64_t t = 0; t < n; ++t) {
        CounterRng rng(seed, t);
        const double g = mcsim::sample_gain(model, rng);
        sum += g;
        sumsq += g * g;
    }
    const double mean = sum / n;
    return {mean, std::sqrt(std::max(0.0, sumsq / n - mean * mean))};
}

double sample_corr(const std::vector<double>& a, const std::vector<double>& b) {
    const size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cab = 0.0, va = 0.0, vb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        cab += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    return cab / std::sqrt(va * vb);
}

} // namespace

TEST_SUITE_BEGIN("mcsim");

TEST_CASE("counter streams are reproducible and decorrelated") {
    CounterRng a(123, 7), b(123, 7), c(123, 8);
    for (int i = 0; i < 16; ++i) {
        const auto va = a.next_u64();
        CHECK(va == b.next_u64());
        CHECK(va != c.next_u64());
    }
    // uniforms live strictly inside (0, 1)
    CounterRng d(1, 0);
    for (int i = 0; i < 1000; ++i) {
        const double u = d.next_double();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("gamma sampler moments") {
    double sum = 0.0, sumsq = 0.0;
    const int n = 200000;
    CounterRng rng(5, 0);
    for (int i = 0; i < n; ++i) {
        const double g = rng.next_gamma(2.7);
        sum += g;
        sumsq += g * g;
    }
    CHECK(sum / n == doctest::Approx(2.7).epsilon(0.01));
    CHECK(sumsq / n - (sum / n) * (sum / n) == doctest::Approx(2.7).epsilon(0.03));
    // shape below one goes through the boost path
    sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rng.next_gamma(0.4);
    CHECK(sum / n == doctest::Approx(0.4).epsilon(0.02));
}

TEST_CASE("poisson sampler mean at moderate and large intensity") {
    CounterRng rng(9, 0);
    for (double lambda : {0.3, 4.0, 60.0}) {
        double sum = 0.0;
        const int n = 50000;
        for (int i = 0; i < n; ++i) sum += static_cast<double>(rng.next_poisson(lambda));
        CHECK(sum / n == doctest::Approx(lambda).epsilon(0.03));
    }
}

TEST_CASE("every cataloged sampler has unit mean") {
    const std::vector<ChannelModel> models = {
        ChannelModel::rayleigh(),          ChannelModel::nakagami(2.0),
        ChannelModel::weibull(3.0),        ChannelModel::weibull_gamma(3.0, 1.0),
        ChannelModel::weibull_gamma(2.0, 0.5), ChannelModel::generalized_k(2.0, 1.0 / 1.45),
        ChannelModel::generalized_k(2.0, 0.5)};
    const std::uint64_t n = 200000;
    for (const auto& model : models) {
        CAPTURE(fading::kind_name(model.kind));
        const auto m = sample_moments(model, n, 77);
        CHECK(std::abs(m.mean - 1.0) <= 4.0 * m.sd / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("Nakagami(1) sample mean within half a percent at 1e6 draws") {
    const auto m = sample_moments(ChannelModel::nakagami(1.0), 1'000'000, 2024);
    CHECK(std::abs(m.mean - 1.0) < 0.005);
}

TEST_CASE("generalized-K sample MGF matches the analytic MGF") {
    const auto model = ChannelModel::generalized_k(2.0, 0.5);
    const auto mgf = fading::mgf_params(model);
    const std::uint64_t n = 1'000'000;
    const int batches = 50;
    std::vector<double> bm(batches, 0.0);
    for (int b = 0; b < batches; ++b) {
        const std::uint64_t lo = n * static_cast<std::uint64_t>(b) / batches;
        const std::uint64_t hi = n * static_cast<std::uint64_t>(b + 1) / batches;
        double acc = 0.0;
        for (std::uint64_t t = lo; t < hi; ++t) {
            CounterRng rng(31, t);
            acc += std::exp(-mcsim::sample_gain(model, rng));
        }
        bm[static_cast<size_t>(b)] = acc / static_cast<double>(hi - lo);
    }
    const double mean = std::accumulate(bm.begin(), bm.end(), 0.0) / batches;
    double var = 0.0;
    for (double m : bm) var += (m - mean) * (m - mean);
    var /= batches - 1;
    const double se = std::sqrt(var / batches);
    CHECK(std::abs(mean - fading::mgf_eval(mgf, 1.0)) < 3.0 * se);
    CHECK(std::abs(mean - 1.0) > 10.0 * se); // sanity: the statistic is informative
}

TEST_CASE("Weibull/Gamma empirical CDF passes a KS check against the density") {
    const auto model = ChannelModel::weibull_gamma(3.0, 1.0);
    const std::uint64_t n = 1'000'000;
    std::vector<double> samples(n);
    for (std::uint64_t t = 0; t < n; ++t) {
        CounterRng rng(8675309, t);
        samples[t] = mcsim::sample_gain(model, rng);
    }
    std::sort(samples.begin(), samples.end());

    // cumulative integration of the H-term density across sample quantiles
    const auto dist = fading::pdf_params(model);
    heval::HTermEvaluator ev(dist.terms[0]);
    const int probes = 800;
    double ks = 0.0, cdf = 0.0, prev_x = 1e-10;
    for (int i = 0; i < probes; ++i) {
        const std::uint64_t idx = n * static_cast<std::uint64_t>(i) / probes + n / (2 * probes);
        const double x = samples[idx];
        cdf += oracles::integrate([&](double g) { return ev.eval(g); }, prev_x, x, 1e-10);
        prev_x = x;
        const double empirical = (static_cast<double>(idx) + 0.5) / static_cast<double>(n);
        ks = std::max(ks, std::abs(empirical - cdf));
    }
    CHECK(ks < 0.005);
    // the integrated density is a genuine CDF at the far quantile
    CHECK(cdf > 0.99);
    CHECK(cdf < 1.0 + 1e-6);
}

TEST_CASE("one-off correlated draw matches the sampler") {
    const auto spec = effrate::CorrelatedGenKSpec::uniform(2, 1.0, 1.0, 0.5);
    mcsim::CorrGenKSampler sampler(spec);
    CounterRng a(11, 3), b(11, 3);
    double out[2];
    sampler.sample(a, out);
    const auto vec = mcsim::sample_corr_genk(spec, b);
    CHECK(vec[0] == out[0]);
    CHECK(vec[1] == out[1]);
}

TEST_CASE("correlated pair: zero correlation") {
    const auto spec = effrate::CorrelatedGenKSpec::uniform(2, 1.0, 1.0, 0.0);
    mcsim::CorrGenKSampler sampler(spec);
    const std::uint64_t n = 1'000'000;
    std::vector<double> g1(n), g2(n);
    double out[2];
    for (std::uint64_t t = 0; t < n; ++t) {
        CounterRng rng(41, t);
        sampler.sample(rng, out);
        g1[t] = out[0];
        g2[t] = out[1];
    }
    CHECK(std::abs(sample_corr(g1, g2)) < 0.01);
}

TEST_CASE("correlated pair: the multipath components carry correlation r") {
    // a near-degenerate shadowing shape exposes the multipath pair directly
    effrate::CorrelatedGenKSpec spec = effrate::CorrelatedGenKSpec::uniform(2, 1e6, 1.0, 0.5);
    mcsim::CorrGenKSampler sampler(spec);
    const std::uint64_t n = 1'000'000;
    std::vector<double> w1(n), w2(n);
    double out[2];
    for (std::uint64_t t = 0; t < n; ++t) {
        CounterRng rng(43, t);
        sampler.sample(rng, out);
        w1[t] = out[0];
        w2[t] = out[1];
    }
    CHECK(sample_corr(w1, w2) == doctest::Approx(0.5).epsilon(0.02));
    const double mean1 = std::accumulate(w1.begin(), w1.end(), 0.0) / n;
    CHECK(mean1 == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("correlated marginals pass the same KS check as the i.i.d. sampler") {
    const auto spec = effrate::CorrelatedGenKSpec::uniform(2, 1.0, 1.0, 0.5);
    mcsim::CorrGenKSampler sampler(spec);
    const std::uint64_t n = 400000;
    std::vector<double> samples(n);
    double out[2];
    for (std::uint64_t t = 0; t < n; ++t) {
        CounterRng rng(47, t);
        sampler.sample(rng, out);
        samples[t] = out[1];
    }
    std::sort(samples.begin(), samples.end());
    // marginal is the generalized-K gain with m_hat = m2, 1/psi = m1
    const auto dist = fading::pdf_params(ChannelModel::generalized_k(1.0, 1.0));
    heval::HTermEvaluator ev(dist.terms[0]);
    double ks = 0.0;
    // integrate the density cumulatively across the sorted sample quantiles
    const int probes = 400;
    double cdf = 0.0, prev_x = 1e-9;
    for (int i = 0; i < probes; ++i) {
        const std::uint64_t idx = n * static_cast<std::uint64_t>(i) / probes + n / (2 * probes);
        const double x = samples[idx];
        cdf += oracles::integrate([&](double g) { return ev.eval(g); }, prev_x, x, 1e-9);
        prev_x = x;
        const double empirical = (static_cast<double>(idx) + 0.5) / static_cast<double>(n);
        ks = std::max(ks, std::abs(empirical - cdf));
    }
    CHECK(ks < 0.008);
}

TEST_CASE("copula sampler calibrates the three-channel correlation") {
    const auto spec = effrate::CorrelatedGenKSpec::uniform(3, 1e6, 1.0, 0.3);
    mcsim::CorrGenKSampler sampler(spec);
    CHECK(sampler.approximate());
    const std::uint64_t n = 200000;
    std::vector<double> w1(n), w2(n), w3(n);
    double out[3];
    for (std::uint64_t t = 0; t < n; ++t) {
        CounterRng rng(53, t);
        sampler.sample(rng, out);
        w1[t] = out[0];
        w2[t] = out[1];
        w3[t] = out[2];
    }
    CHECK(sample_corr(w1, w2) == doctest::Approx(0.3).epsilon(0.035));
    CHECK(sample_corr(w2, w3) == doctest::Approx(0.3).epsilon(0.035));
    const double mean = std::accumulate(w1.begin(), w1.end(), 0.0) / n;
    CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("empirical rate: degenerate gains give zero rate") {
    const std::vector<std::vector<double>> gains(20000, std::vector<double>{0.0});
    const auto est = mcsim::empirical_rate(gains, effrate::QosSpec::from_a(1.0), 1.0, 1, {});
    CHECK(est.rate == doctest::Approx(0.0));
    CHECK(est.expectation == doctest::Approx(1.0));
}

TEST_CASE("empirical rate brackets the Rayleigh oracle") {
    effrate::LinkSpec link;
    link.N = 1;
    link.channels = std::vector<ChannelModel>{ChannelModel::rayleigh()};
    McConfig cfg;
    cfg.trials = 1'000'000;
    cfg.seed = 99;
    const auto est = mcsim::simulate_rate(link, effrate::QosSpec::from_a(1.0), 1.0, cfg);
    CHECK(est.rate_ci_low <= oracles::ref::rayleigh_rate_a1);
    CHECK(est.rate_ci_high >= oracles::ref::rayleigh_rate_a1);
    CHECK(est.rate_ci_high - est.rate_ci_low < 0.01);
    CHECK(est.ci_low <= est.expectation);
    CHECK(est.expectation <= est.ci_high);
}

TEST_CASE("identical seeds give identical estimates at any thread count") {
    effrate::LinkSpec link;
    link.N = 2;
    link.channels = std::vector<ChannelModel>{ChannelModel::weibull_gamma(3.0, 1.0),
                                              ChannelModel::weibull_gamma(2.0, 0.5)};
    const std::vector<effrate::QosSpec> qos{effrate::QosSpec::from_a(1.0),
                                            effrate::QosSpec::from_a(2.0)};
    const std::vector<double> rho{1.0, 10.0};
    McConfig cfg;
    cfg.trials = 100000;
    cfg.seed = 4242;
    cfg.threads = 1;
    const auto a = mcsim::simulate_rate_grid(link, qos, rho, cfg);
    cfg.threads = 4;
    const auto b = mcsim::simulate_rate_grid(link, qos, rho, cfg);
    for (size_t qi = 0; qi < qos.size(); ++qi) {
        for (size_t ri = 0; ri < rho.size(); ++ri) {
            CHECK(a[qi][ri].expectation == b[qi][ri].expectation);
            CHECK(a[qi][ri].rate == b[qi][ri].rate);
            CHECK(a[qi][ri].ci_low == b[qi][ri].ci_low);
        }
    }
}

TEST_CASE("i.n.i.d. estimate brackets the analytic rate") {
    effrate::LinkSpec link;
    link.N = 2;
    link.channels = std::vector<ChannelModel>{ChannelModel::weibull_gamma(3.0, 1.0),
                                              ChannelModel::weibull_gamma(2.0, 0.5)};
    McConfig cfg;
    cfg.trials = 1'000'000;
    cfg.seed = 7001;
    const auto qos = effrate::QosSpec::from_a(1.0);
    const auto est = mcsim::simulate_rate(link, qos, 10.0, cfg);

    const std::vector<fading::MgfRepr> chans{
        fading::mgf_params(ChannelModel::weibull_gamma(3.0, 1.0)),
        fading::mgf_params(ChannelModel::weibull_gamma(2.0, 0.5))};
    const double analytic =
        effrate::rate_inid_hyper(chans, qos, 10.0, effrate::ApproxConfig::from_ratio(15, 300));
    CHECK(est.rate_ci_low <= analytic);
    CHECK(analytic <= est.rate_ci_high);
}

TEST_CASE("custom hyper-H models cannot be sampled") {
    const auto dist = fading::pdf_params(ChannelModel::nakagami(2.0));
    const auto model = ChannelModel::custom_hyper_h(dist);
    CounterRng rng(1, 1);
    CHECK_THROWS_AS(mcsim::sample_gain(model, rng), DomainError);
}

TEST_SUITE_END();
