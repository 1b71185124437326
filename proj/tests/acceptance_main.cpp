// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: end-to-end checks of the rate engine against closed
// forms, quadrature oracles, Monte Carlo confidence intervals, and its own
// error bounds. Prints one PASS/FAIL line per criterion; exits non-zero if
// any criterion fails. Expects the scenarios directory as argv[1].

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "hcap/effrate.hpp"
#include "hcap/mcsim.hpp"
#include "hcap/quadrature.hpp"
#include "hcap/scenario.hpp"
#include "hcap/specfn.hpp"

using namespace hcap;
using effrate::ApproxConfig;
using effrate::QosSpec;
using fading::ChannelModel;

namespace {

int g_failures = 0;
std::string g_notes;

void note(const std::string& s) {
    g_notes += s;
    g_notes += "; ";
}

struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<bool()> body;
};

bool expect(bool ok, const std::string& what) {
    if (!ok) note("FAILED: " + what);
    return ok;
}

double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }

std::vector<fading::MgfRepr> repeated(const ChannelModel& m, int n) {
    std::vector<fading::MgfRepr> out;
    const auto mgf = fading::mgf_params(m);
    for (int i = 0; i < n; ++i) out.push_back(mgf);
    return out;
}

struct Scenario {
    std::string name;
    std::vector<ChannelModel> models;
};

std::vector<Scenario> table_scenarios() {
    return {
        {"siso_wg", {ChannelModel::weibull_gamma(3.0, 1.0)}},
        {"iid_genk_n9", std::vector<ChannelModel>(9, ChannelModel::generalized_k(2.0, 1.0 / 1.45))},
        {"inid_n2",
         {ChannelModel::weibull_gamma(3.0, 1.0), ChannelModel::weibull_gamma(2.0, 0.5)}},
        {"inid_n3",
         {ChannelModel::weibull_gamma(3.0, 1.0), ChannelModel::weibull_gamma(2.0, 0.5),
          ChannelModel::generalized_k(2.0, 0.5)}},
    };
}

// ---- criteria -------------------------------------------------------------

bool criterion1_kernel_identity() {
    bool ok = true;
    for (double A : {1.0, 2.0, 3.7}) {
        hseq::ParamSeq p;
        p.d = {A - 1.0};
        p.D = {1.0};
        const hseq::HTerm kernel(hseq::OrderSeq(1, 0, 0, 1), p);
        for (double x : {0.1, 1.0, 5.0, 10.0}) {
            const double got = heval::eval_h(kernel, x);
            const double want = std::exp(-x) * std::pow(x, A - 1.0);
            ok &= expect(std::abs(got - want) / want < 1e-8,
                         "kernel A=" + std::to_string(A) + " x=" + std::to_string(x));
        }
    }
    return ok;
}

bool criterion2_rayleigh_four_paths() {
    const auto qos = QosSpec::from_a(1.0);
    const auto chans = repeated(ChannelModel::rayleigh(), 1);
    const auto fn = effrate::product_mgf(chans);
    const ApproxConfig cfg = ApproxConfig::from_ratio(15.0, 300.0);

    // independent oracle: expectation = int_0^inf e^-s/(1+s) ds via quadrature
    const double expectation = quadrature::integrate_exp_kernel(
        1.0, [](double s) { return 1.0 / (1.0 + s); });
    const double oracle = -std::log2(expectation);

    const double rates[4] = {
        effrate::rate_from_mgf_quadrature(fn, qos, 1.0, 1),
        effrate::rate_trapezoid(fn, qos, 1.0, 1, cfg),
        effrate::rate_siso_hyper(chans[0], qos, 1.0),
        effrate::rate_iid_nakagami_closed(1.0, 1, qos, 1.0),
    };
    bool ok = true;
    for (double r : rates) {
        ok &= expect(std::abs(r - oracle) < 1e-3, "path vs oracle: " + std::to_string(r));
        ok &= expect(std::abs(r - 0.74593) < 1e-3, "path vs stated value");
        for (double r2 : rates) ok &= expect(std::abs(r - r2) < 1e-3, "cross-path");
    }
    note("oracle=" + std::to_string(oracle));
    return ok;
}

bool criterion3_nakagami_closed_vs_sum() {
    const ApproxConfig cfg = ApproxConfig::from_ratio(15.0, 300.0);
    bool ok = true;
    for (int N : {2, 9}) {
        const auto chans = repeated(ChannelModel::nakagami(2.0), N);
        for (double A : {1.0, 2.0}) {
            const auto qos = QosSpec::from_a(A);
            for (double db : {0.0, 10.0, 20.0}) {
                const double rho = db_to_lin(db);
                const double closed = effrate::rate_iid_nakagami_closed(2.0, N, qos, rho);
                const double trap = effrate::rate_trapezoid(chans, qos, rho, N, cfg);
                ok &= expect(std::abs(closed - trap) < 1e-3,
                             "N=" + std::to_string(N) + " A=" + std::to_string(A) +
                                 " db=" + std::to_string(db) + " diff=" +
                                 std::to_string(std::abs(closed - trap)));
            }
        }
    }
    return ok;
}

bool criterion4_ratio_convergence() {
    const auto chans = repeated(ChannelModel::generalized_k(2.0, 1.0 / 1.45), 9);
    const auto qos = QosSpec::from_a(1.0);
    bool ok = true;
    double worst = 0.0;
    for (double db = 0.0; db <= 20.0; db += 2.0) {
        const double rho = db_to_lin(db);
        const double r200 =
            effrate::rate_trapezoid(chans, qos, rho, 9, ApproxConfig::from_ratio(15.0, 200.0));
        const double r400 =
            effrate::rate_trapezoid(chans, qos, rho, 9, ApproxConfig::from_ratio(15.0, 400.0));
        worst = std::max(worst, std::abs(r200 - r400));
        ok &= expect(std::abs(r200 - r400) < 1e-3, "M/Q 200 vs 400 at " + std::to_string(db));
    }
    std::printf("    M/Q convergence: max |rate(200) - rate(400)| = %.3g\n", worst);
    return ok;
}

bool criterion5_error_bounds() {
    bool ok = true;
    const ApproxConfig cfg = ApproxConfig::from_ratio(15.0, 300.0);
    // analytic checks of the truncation bound
    ok &= expect(std::abs(specfn::upper_incomplete_gamma(1.0, 15.0) - 3.059023205e-7) <
                     1e-12 + 3.059023205e-7 * 1e-6,
                 "Gamma(1,15)");
    ok &= expect(std::abs(specfn::upper_incomplete_gamma(2.0, 15.0) - 16.0 * std::exp(-15.0)) <
                     1e-16 + 16.0 * std::exp(-15.0) * 1e-10,
                 "Gamma(2,15)");

    struct Case {
        ChannelModel model;
        int N;
        double m_hat;
        double A;
        double rho;
    };
    const std::vector<Case> cases = {
        {ChannelModel::rayleigh(), 1, 1.0, 1.0, 1.0},
        {ChannelModel::nakagami(2.0), 2, 2.0, 1.0, 10.0},
        {ChannelModel::nakagami(2.0), 9, 2.0, 2.0, 10.0},
        {ChannelModel::nakagami(2.0), 2, 2.0, 0.5, 1.0},
    };
    for (const auto& c : cases) {
        const auto qos = QosSpec::from_a(c.A);
        const auto chans = repeated(c.model, c.N);
        const auto fn = effrate::product_mgf(chans);
        const double rate_t = effrate::rate_trapezoid(chans, qos, c.rho, c.N, cfg);
        // exact bracket via the closed form (independent of the grid sum)
        const double rate_c = effrate::rate_iid_nakagami_closed(c.m_hat, c.N, qos, c.rho);
        const double S = std::exp(std::lgamma(c.A) - c.A * rate_t * std::log(2.0));
        const double I = std::exp(std::lgamma(c.A) - c.A * rate_c * std::log(2.0));
        const auto eb = effrate::error_bounds(qos, cfg, fn, c.rho, c.N);
        ok &= expect(std::abs(S - I) <= eb.truncation_bound + eb.discretization_estimate,
                     "bound at N=" + std::to_string(c.N) + " A=" + std::to_string(c.A) +
                         ": measured " + std::to_string(std::abs(S - I)) + " vs " +
                         std::to_string(eb.truncation_bound + eb.discretization_estimate));
    }
    return ok;
}

bool criterion6_table_vs_mc() {
    const ApproxConfig cfg = ApproxConfig::from_ratio(15.0, 300.0);
    const std::vector<double> dbs = {0.0, 5.0, 10.0, 15.0, 20.0};
    const std::vector<QosSpec> qos = {QosSpec::from_a(0.5), QosSpec::from_a(1.0),
                                      QosSpec::from_a(2.0)};
    bool ok = true;
    std::uint64_t seed = 60001;
    for (const auto& sc : table_scenarios()) {
        const int N = static_cast<int>(sc.models.size());
        std::vector<fading::MgfRepr> chans;
        for (const auto& m : sc.models) chans.push_back(fading::mgf_params(m));

        effrate::LinkSpec link;
        link.N = N;
        link.channels = sc.models;
        mcsim::McConfig mcfg;
        mcfg.trials = 1'000'000;
        mcfg.seed = seed++;
        mcfg.threads = 4;
        std::vector<double> rho;
        for (double db : dbs) rho.push_back(db_to_lin(db));
        const auto grid = mcsim::simulate_rate_grid(link, qos, rho, mcfg);

        for (size_t qi = 0; qi < qos.size(); ++qi) {
            double prev_rho_rate = -1.0;
            for (size_t ri = 0; ri < rho.size(); ++ri) {
                const double analytic =
                    effrate::rate_trapezoid(chans, qos[qi], rho[ri], N, cfg);
                const auto& mc = grid[qi][ri];
                ok &= expect(analytic >= mc.rate_ci_low && analytic <= mc.rate_ci_high,
                             sc.name + " A=" + std::to_string(qos[qi].A) + " db=" +
                                 std::to_string(dbs[ri]) + ": analytic " +
                                 std::to_string(analytic) + " CI [" +
                                 std::to_string(mc.rate_ci_low) + ", " +
                                 std::to_string(mc.rate_ci_high) + "]");
                ok &= expect(analytic >= prev_rho_rate - 1e-12,
                             sc.name + ": monotone in rho");
                prev_rho_rate = analytic;
            }
        }
        // monotone non-increasing in A at each SNR
        for (size_t ri = 0; ri < rho.size(); ++ri) {
            double prev = 1e300;
            for (size_t qi = 0; qi < qos.size(); ++qi) {
                const double analytic =
                    effrate::rate_trapezoid(chans, qos[qi], rho[ri], N, cfg);
                ok &= expect(analytic <= prev + 1e-12, sc.name + ": monotone in A");
                prev = analytic;
            }
        }
    }
    return ok;
}

bool criterion7_correlated() {
    const ApproxConfig cfg = ApproxConfig::from_ratio(15.0, 300.0, 96);
    const auto qos = QosSpec::from_a(1.0);
    const std::vector<double> dbs = {0.0, 5.0, 10.0, 15.0, 20.0};
    const std::vector<double> rs = {0.0, 0.5, 0.8};
    bool ok = true;

    std::vector<std::vector<double>> analytic(rs.size(), std::vector<double>(dbs.size()));
    for (size_t i = 0; i < rs.size(); ++i) {
        const auto spec = effrate::CorrelatedGenKSpec::uniform(2, 1.0, 1.0, rs[i]);
        for (size_t d = 0; d < dbs.size(); ++d)
            analytic[i][d] = effrate::rate_corr_genk(spec, qos, db_to_lin(dbs[d]), cfg);
    }

    // ordering in r at every grid SNR
    for (size_t d = 0; d < dbs.size(); ++d) {
        ok &= expect(analytic[0][d] >= analytic[1][d] && analytic[1][d] >= analytic[2][d],
                     "r-ordering at db=" + std::to_string(dbs[d]));
    }

    // r = 0 equals the i.i.d. route
    const auto iid = repeated(ChannelModel::generalized_k(1.0, 1.0), 2);
    for (size_t d = 0; d < dbs.size(); ++d) {
        const double iid_rate = effrate::rate_inid_hyper(iid, qos, db_to_lin(dbs[d]), cfg);
        ok &= expect(std::abs(analytic[0][d] - iid_rate) < 1e-4,
                     "r=0 vs iid at db=" + std::to_string(dbs[d]) + " diff=" +
                         std::to_string(std::abs(analytic[0][d] - iid_rate)));
    }

    // analytic inside the MC interval of the exact pair sampler
    std::uint64_t seed = 70001;
    for (size_t i = 0; i < rs.size(); ++i) {
        effrate::LinkSpec link;
        link.N = 2;
        link.channels = effrate::CorrelatedGenKSpec::uniform(2, 1.0, 1.0, rs[i]);
        mcsim::McConfig mcfg;
        mcfg.trials = 1'000'000;
        mcfg.seed = seed++;
        mcfg.threads = 4;
        const QosSpec qgrid[1] = {qos};
        std::vector<double> rho;
        for (double db : dbs) rho.push_back(db_to_lin(db));
        const auto grid = mcsim::simulate_rate_grid(link, qgrid, rho, mcfg);
        for (size_t d = 0; d < dbs.size(); ++d) {
            const auto& mc = grid[0][d];
            ok &= expect(analytic[i][d] >= mc.rate_ci_low && analytic[i][d] <= mc.rate_ci_high,
                         "corr r=" + std::to_string(rs[i]) + " db=" + std::to_string(dbs[d]) +
                             ": analytic " + std::to_string(analytic[i][d]) + " CI [" +
                             std::to_string(mc.rate_ci_low) + ", " +
                             std::to_string(mc.rate_ci_high) + "]");
        }
    }
    return ok;
}

bool criterion8_zero_snr() {
    const ApproxConfig cfg = ApproxConfig::from_ratio(15.0, 300.0);
    const auto qos = QosSpec::from_a(1.0);
    const double rho = 1e-9;
    bool ok = true;
    const std::vector<ChannelModel> models = {
        ChannelModel::rayleigh(),          ChannelModel::nakagami(2.0),
        ChannelModel::weibull(3.0),        ChannelModel::weibull_gamma(3.0, 1.0),
        ChannelModel::weibull_gamma(2.0, 0.5), ChannelModel::generalized_k(2.0, 1.0 / 1.45),
        ChannelModel::generalized_k(2.0, 0.5)};
    for (const auto& model : models) {
        const auto name = fading::kind_name(model.kind);
        const auto chans = repeated(model, 1);
        const auto fn = effrate::product_mgf(chans);
        ok &= expect(std::abs(effrate::rate_from_mgf_quadrature(fn, qos, rho, 1)) < 1e-3,
                     name + " quadrature");
        ok &= expect(std::abs(effrate::rate_trapezoid(chans, qos, rho, 1, cfg)) < 1e-3,
                     name + " trapezoid");
        ok &= expect(std::abs(effrate::rate_siso_hyper(chans[0], qos, rho)) < 1e-3,
                     name + " siso");
    }
    ok &= expect(std::abs(effrate::rate_iid_nakagami_closed(2.0, 9, qos, rho)) < 1e-3, "closed");
    const auto spec = effrate::CorrelatedGenKSpec::uniform(2, 1.0, 1.0, 0.5);
    ok &= expect(std::abs(effrate::rate_corr_genk(spec, qos, rho, cfg)) < 1e-3, "correlated");
    return ok;
}

bool criterion9_mellin_vs_quadrature() {
    bool ok = true;
    const std::vector<ChannelModel> models = {
        ChannelModel::rayleigh(),          ChannelModel::nakagami(2.0),
        ChannelModel::weibull(3.0),        ChannelModel::weibull_gamma(3.0, 1.0),
        ChannelModel::weibull_gamma(2.0, 0.5), ChannelModel::generalized_k(2.0, 1.0 / 1.45),
        ChannelModel::generalized_k(2.0, 0.5)};
    for (const auto& model : models) {
        const auto dist = fading::pdf_params(model);
        const auto mgf = fading::mgf_params(model);
        std::vector<heval::HTermEvaluator> evals;
        for (const auto& t : dist.terms) evals.emplace_back(t);
        for (double s : {0.1, 1.0, 10.0}) {
            quadrature::AdaptiveOptions opt;
            opt.rel_tol = 1e-9;
            opt.abs_tol = 1e-12;
            const auto f = [&](double g) {
                double sum = 0.0;
                for (const auto& e : evals) sum += e.eval(g);
                return std::exp(-s * g) * sum;
            };
            const double quad = quadrature::integrate_adaptive(f, 1e-9, 1.0, opt) +
                                quadrature::integrate_adaptive(f, 1.0, 60.0, opt);
            const double direct = fading::mgf_eval(mgf, s);
            ok &= expect(std::abs(direct - quad) <= 1e-5,
                         fading::kind_name(model.kind) + " s=" + std::to_string(s) +
                             " diff=" + std::to_string(std::abs(direct - quad)));
        }
    }
    return ok;
}

std::string g_scenario_dir;

bool criterion10_determinism() {
    const auto sc = cli::parse_scenario_file(g_scenario_dir + "/tab2_inid_n2.json");
    const std::set<cli::Method> methods{cli::Method::Trapezoid, cli::Method::Mc};
    cli::SweepOptions serial;
    serial.threads = 1;
    cli::SweepOptions parallel;
    parallel.threads = 4;
    const std::string a = cli::run_sweep(sc, methods, serial);
    const std::string b = cli::run_sweep(sc, methods, parallel);
    bool ok = expect(a == b, "thread-count independence of the CSV bytes");
    ok &= expect(a.find("tab2_inid_n2") != std::string::npos, "scenario id present");

    // every shipped scenario parses and sweeps without error
    const char* shipped[] = {"tab2_siso_wg.json",       "tab2_iid_genk_n9.json",
                             "tab2_inid_n2.json",       "tab2_inid_n3.json",
                             "tab2_corr_genk_r0.json",  "tab2_corr_genk_r05.json",
                             "tab2_corr_genk_r08.json", "fig2_iid_genk_n9_mq.json",
                             "smoke.json"};
    for (const char* file : shipped) {
        try {
            auto scenario = cli::parse_scenario_file(g_scenario_dir + "/" + file);
            scenario.mc.trials = 50000; // keep the completeness pass quick
            const auto method = scenario.link.correlated() ? cli::Method::Mc
                                                           : cli::Method::Quadrature;
            const std::string csv = cli::run_sweep(scenario, {method}, parallel);
            ok &= expect(csv.find(scenario.id) != std::string::npos,
                         std::string(file) + ": sweep output");
        } catch (const std::exception& e) {
            ok &= expect(false, std::string(file) + ": " + e.what());
        }
    }
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    g_scenario_dir = argc > 1 ? argv[1] : "scenarios";

    const std::vector<Criterion> criteria = {
        {1, "H-kernel identity suite", 1.0, criterion1_kernel_identity},
        {2, "SISO Rayleigh closed-form oracle, four routes", 10.0, criterion2_rayleigh_four_paths},
        {3, "i.i.d. Nakagami closed form vs finite sum", 60.0, criterion3_nakagami_closed_vs_sum},
        {4, "discretization-ratio convergence (M/Q 200 vs 400)", 300.0,
         criterion4_ratio_convergence},
        {5, "truncation/discretization error bounds", 120.0, criterion5_error_bounds},
        {6, "reference scenarios inside MC confidence intervals", 900.0, criterion6_table_vs_mc},
        {7, "correlated generalized-K ordering, reduction and MC", 600.0, criterion7_correlated},
        {8, "zero-SNR anchor on every cataloged model", 120.0, criterion8_zero_snr},
        {9, "Mellin-derived MGF vs Laplace quadrature", 120.0, criterion9_mellin_vs_quadrature},
        {10, "byte-identical CSV across thread counts", 300.0, criterion10_determinism},
    };

    for (const auto& c : criteria) {
        g_notes.clear();
        const auto t0 = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = c.body();
        } catch (const std::exception& e) {
            note(std::string("exception: ") + e.what());
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.limit_seconds) {
            ok = false;
            note("over time limit " + std::to_string(c.limit_seconds) + " s");
        }
        std::printf("%s criterion %2d (%s) [%.1f s]%s%s\n", ok ? "PASS" : "FAIL", c.id, c.name,
                    secs, g_notes.empty() ? "" : " -- ", g_notes.c_str());
        std::fflush(stdout);
        if (!ok) ++g_failures;
    }

    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
