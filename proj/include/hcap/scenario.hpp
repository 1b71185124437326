// SPDX-License-Identifier: Apache-2.0
//
// Scenario files, rate sweeps and CSV comparison: the batch front end shared
// by the command-line tool and the acceptance suite.

#ifndef HCAP_SCENARIO_HPP
#define HCAP_SCENARIO_HPP

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hcap/effrate.hpp"
#include "hcap/mcsim.hpp"

namespace hcap::cli {

enum class Method {
    Quadrature,
    Trapezoid,
    InidHyper,
    ClosedForm,
    CorrGenK,
    Mc,
};

std::string method_name(Method m);
Method method_from_name(const std::string& name); // throws ParseError

/// A parsed scenario: QoS grid, link, SNR grid (dB), approximation and MC
/// configuration.
struct ScenarioFile {
    std::string id;
    std::vector<effrate::QosSpec> qos;
    effrate::LinkSpec link;
    std::vector<double> snr_db;
    effrate::ApproxConfig approx;
    mcsim::McConfig mc;
};

/// Parses a scenario document; diagnostics name the offending field.
ScenarioFile parse_scenario_text(const std::string& json_text);
ScenarioFile parse_scenario_file(const std::string& path);

struct SweepOptions {
    int threads = 1;
    bool timing = false; // wall_ms column stays 0 unless enabled, so output is byte-stable
};

/// Runs the requested methods over the scenario grid and returns the CSV
/// table (one row per (A, snr_db, method); fixed 10-significant-digit float
/// formatting, '.' decimal separator, '\n' line endings).
std::string run_sweep(const ScenarioFile& scenario, const std::set<Method>& methods,
                      const SweepOptions& opt = {});

/// Row-level deviation summary between two sweep CSVs. Rows are joined on
/// (scenario_id, A, snr_db, method); when the files share no method, the
/// method field is dropped from the key (each file must then be unambiguous).
/// Deviations against a row that carries a confidence interval measure the
/// distance from the other rate to that interval.
struct CompareReport {
    double max_abs_dev = 0.0;
    double max_rel_dev = 0.0;
    std::size_t rows_compared = 0;
    std::vector<std::string> exceeded; // rows beyond tolerance
    bool within_tolerance() const { return exceeded.empty() && rows_compared > 0; }
};

CompareReport compare_report(const std::string& csv_a, const std::string& csv_b, double tol);

/// Fixed CSV float format shared by all emitters (10 significant digits).
std::string format_double(double v);

} // namespace hcap::cli

#endif
