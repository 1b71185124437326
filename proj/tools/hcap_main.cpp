// SPDX-License-Identifier: Apache-2.0
//
// hcap: effective-rate computations over MISO fading channels.
//   hcap rate <scenario.json> [--methods m1,m2] [--out file.csv] ...
//   hcap compare a.csv b.csv --tol t

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hcap/scenario.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw hcap::ParseError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::set<hcap::cli::Method> parse_methods(const std::string& arg) {
    std::set<hcap::cli::Method> methods;
    std::string cur;
    std::istringstream in(arg);
    while (std::getline(in, cur, ','))
        if (!cur.empty()) methods.insert(hcap::cli::method_from_name(cur));
    return methods;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"effective rate of MISO links over generalized fading channels"};
    app.require_subcommand(1);

    // rate
    auto* rate = app.add_subcommand("rate", "run a scenario sweep and emit CSV");
    std::string scenario_path, methods_arg = "trapezoid", out_path;
    std::uint64_t mc_trials = 0, seed = 0;
    double Q = 0.0, m_over_q = 0.0;
    int threads = 1;
    bool timing = false;
    bool has_seed = false;
    rate->add_option("scenario", scenario_path, "scenario JSON file")->required();
    rate->add_option("--methods", methods_arg, "comma-separated methods")
        ->capture_default_str();
    rate->add_option("--out", out_path, "output CSV path (default: stdout)");
    rate->add_option("--mc-trials", mc_trials, "override MC trial count");
    rate->add_option("--seed", seed, "override MC seed");
    rate->add_flag("--timing", timing, "record wall-clock times in the wall_ms column");
    rate->add_option("--Q", Q, "override truncation parameter Q");
    rate->add_option("--M-over-Q", m_over_q, "override discretization ratio M/Q");
    rate->add_option("--threads", threads, "worker threads")->capture_default_str();

    // compare
    auto* compare = app.add_subcommand("compare", "compare two sweep CSVs");
    std::string csv_a, csv_b;
    double tol = 1e-3;
    compare->add_option("a", csv_a, "first CSV")->required();
    compare->add_option("b", csv_b, "second CSV")->required();
    compare->add_option("--tol", tol, "deviation tolerance")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (rate->parsed()) {
            has_seed = rate->count("--seed") > 0;
            hcap::cli::ScenarioFile sc = hcap::cli::parse_scenario_file(scenario_path);
            if (mc_trials > 0) sc.mc.trials = mc_trials;
            if (has_seed) sc.mc.seed = seed;
            if (rate->count("--Q") || rate->count("--M-over-Q")) {
                const double new_q = rate->count("--Q") ? Q : sc.approx.Q;
                const double new_ratio = rate->count("--M-over-Q")
                                             ? m_over_q
                                             : sc.approx.M / sc.approx.Q;
                sc.approx = hcap::effrate::ApproxConfig::from_ratio(
                    new_q, new_ratio, sc.approx.series_kmax, sc.approx.series_tol);
            }
            hcap::cli::SweepOptions opt;
            opt.threads = threads;
            opt.timing = timing;
            const std::string csv = hcap::cli::run_sweep(sc, parse_methods(methods_arg), opt);
            if (out_path.empty() || out_path == "-") {
                std::cout << csv;
            } else {
                std::ofstream out(out_path, std::ios::binary);
                if (!out) throw hcap::ParseError("cannot write output file: " + out_path);
                out << csv;
            }
            return 0;
        }

        const auto rep = hcap::cli::compare_report(read_file(csv_a), read_file(csv_b), tol);
        std::cout << "rows_compared," << rep.rows_compared << "\n";
        std::cout << "max_abs_dev," << hcap::cli::format_double(rep.max_abs_dev) << "\n";
        std::cout << "max_rel_dev," << hcap::cli::format_double(rep.max_rel_dev) << "\n";
        if (!rep.exceeded.empty()) {
            std::cerr << rep.exceeded.size() << " row(s) beyond tolerance " << tol << ":\n";
            for (const auto& r : rep.exceeded) std::cerr << "  " << r << "\n";
            return 4;
        }
        return 0;
    } catch (const hcap::ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const hcap::Error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
