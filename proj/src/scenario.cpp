// SPDX-License-Identifier: Apache-2.0

#include "hcap/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace hcap::cli {
namespace {

using json = nlohmann::json;

constexpr Method method_order[] = {Method::Quadrature, Method::Trapezoid, Method::InidHyper,
                                   Method::ClosedForm, Method::CorrGenK, Method::Mc};

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw ParseError("scenario field \"" + field + "\": " + what);
}

double get_number(const json& j, const std::string& field) {
    if (!j.is_number()) fail(field, "expected a number");
    return j.get<double>();
}

std::vector<double> number_list(const json& j, const std::string& field) {
    std::vector<double> out;
    if (j.is_number()) {
        out.push_back(j.get<double>());
    } else if (j.is_array()) {
        for (const auto& v : j) {
            if (!v.is_number()) fail(field, "expected numbers");
            out.push_back(v.get<double>());
        }
    } else {
        fail(field, "expected a number or an array of numbers");
    }
    return out;
}

fading::ChannelModel parse_channel(const json& j, const std::string& field) {
    if (!j.is_object() || !j.contains("kind")) fail(field, "expected an object with \"kind\"");
    const std::string kind = j["kind"].get<std::string>();
    const json params = j.value("params", json::object());
    const double mean_power = j.value("mean_power", 1.0);
    const auto p = [&](const char* name, double fallback = std::nan("")) {
        if (params.contains(name)) return get_number(params[name], field + ".params." + name);
        if (std::isnan(fallback)) fail(field, std::string("missing parameter \"") + name + "\"");
        return fallback;
    };
    try {
        std::optional<fading::ChannelModel> model;
        if (kind == "rayleigh") {
            model = fading::ChannelModel::rayleigh(mean_power);
        } else if (kind == "nakagami" || kind == "nakagami_m") {
            model = fading::ChannelModel::nakagami(p("m"), mean_power);
        } else if (kind == "weibull") {
            model = fading::ChannelModel::weibull(p("beta"), mean_power);
        } else if (kind == "weibull_gamma") {
            model = fading::ChannelModel::weibull_gamma(p("beta"), p("psi"), mean_power);
        } else if (kind == "generalized_k") {
            model = fading::ChannelModel::generalized_k(p("m"), p("psi"), mean_power);
        } else if (kind == "custom_hyper_h") {
            if (!j.contains("terms")) fail(field, "custom_hyper_h needs \"terms\"");
            model = fading::ChannelModel::custom_hyper_h(
                hseq::hyperfox_from_json(json{{"terms", j["terms"]}}.dump()), mean_power);
        }
        if (model) {
            (void)fading::pdf_params(*model); // surface range violations here
            return *model;
        }
    } catch (const DomainError& e) {
        fail(field, e.what());
    }
    fail(field, "unknown channel kind \"" + kind + "\"");
}

std::string fmt(double v) { return format_double(v); }

struct Row {
    double A;
    double snr_db;
    Method method;
    std::string rate, err_trunc, err_discr, ci_low, ci_high, wall_ms;
};

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    threads = std::clamp(threads, 1, std::max(1, n));
    if (threads == 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<size_t>(threads));
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[static_cast<size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// CSV row model for compare_report
struct ParsedRow {
    std::string scenario, A, snr, method;
    double rate;
    bool has_ci = false;
    double lo = 0.0, hi = 0.0;
};

std::vector<ParsedRow> parse_csv(const std::string& text, const char* which) {
    std::vector<ParsedRow> rows;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string cur;
        for (char ch : line) {
            if (ch == ',') {
                f.push_back(cur);
                cur.clear();
            } else
                cur.push_back(ch);
        }
        f.push_back(cur);
        if (header) {
            header = false;
            if (f.empty() || f[0] != "scenario_id")
                throw ParseError(std::string(which) + ": unexpected CSV header");
            continue;
        }
        if (f.size() < 10) throw ParseError(std::string(which) + ": short CSV row: " + line);
        ParsedRow r;
        r.scenario = f[0];
        r.A = f[1];
        r.snr = f[2];
        r.method = f[3];
        r.rate = std::strtod(f[4].c_str(), nullptr);
        if (!f[7].empty() && !f[8].empty()) {
            r.has_ci = true;
            r.lo = std::strtod(f[7].c_str(), nullptr);
            r.hi = std::strtod(f[8].c_str(), nullptr);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

double interval_distance(double x, double lo, double hi) {
    if (x < lo) return lo - x;
    if (x > hi) return x - hi;
    return 0.0;
}

} // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::Quadrature: return "quadrature";
        case Method::Trapezoid: return "trapezoid";
        case Method::InidHyper: return "inid_hyper";
        case Method::ClosedForm: return "closed_form";
        case Method::CorrGenK: return "corr_genk";
        case Method::Mc: return "mc";
    }
    return "unknown";
}

Method method_from_name(const std::string& name) {
    for (Method m : method_order)
        if (method_name(m) == name) return m;
    throw ParseError("unknown method \"" + name + "\"");
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 10);
    return std::string(buf, res.ptr);
}

ScenarioFile parse_scenario_text(const std::string& json_text) try {
    json j = json::parse(json_text, nullptr, false);
    if (j.is_discarded()) throw ParseError("scenario: invalid JSON document");

    ScenarioFile sc;
    if (!j.contains("id") || !j["id"].is_string()) fail("id", "required string");
    sc.id = j["id"].get<std::string>();

    // qos: either A values or theta values (with optional T, B)
    if (!j.contains("qos") || !j["qos"].is_object()) fail("qos", "required object");
    const json& q = j["qos"];
    const double T = q.value("T", effrate::QosSpec::default_T);
    const double B = q.value("B", effrate::QosSpec::default_B);
    try {
        if (q.contains("A")) {
            for (double a : number_list(q["A"], "qos.A"))
                sc.qos.push_back(effrate::QosSpec::from_a(a, T, B));
        } else if (q.contains("theta")) {
            for (double th : number_list(q["theta"], "qos.theta"))
                sc.qos.push_back(effrate::QosSpec::from_theta(th, T, B));
        } else {
            fail("qos", "needs \"A\" or \"theta\"");
        }
    } catch (const DomainError& e) {
        fail("qos", e.what());
    }
    if (sc.qos.empty()) fail("qos", "empty grid");

    // link
    if (!j.contains("link") || !j["link"].is_object()) fail("link", "required object");
    const json& l = j["link"];
    if (!l.contains("N") || !l["N"].is_number_integer()) fail("link.N", "required integer");
    sc.link.N = l["N"].get<int>();
    if (sc.link.N < 1) fail("link.N", "must be at least 1");
    if (l.contains("correlated_genk")) {
        const json& c = l["correlated_genk"];
        effrate::CorrelatedGenKSpec spec;
        spec.N = sc.link.N;
        spec.m1 = get_number(c.value("m1", json()), "link.correlated_genk.m1");
        spec.m2 = get_number(c.value("m2", json()), "link.correlated_genk.m2");
        if (c.contains("sigma")) {
            const json& sg = c["sigma"];
            if (!sg.is_array() || static_cast<int>(sg.size()) != spec.N)
                fail("link.correlated_genk.sigma", "expected an N x N matrix");
            for (const auto& row : sg)
                for (const auto& v : row) spec.Sigma.push_back(v.get<double>());
        } else if (c.contains("r")) {
            const double r = get_number(c["r"], "link.correlated_genk.r");
            spec.Sigma.assign(static_cast<size_t>(spec.N) * spec.N, r);
            for (int i = 0; i < spec.N; ++i) spec.Sigma[static_cast<size_t>(i) * spec.N + i] = 1.0;
        } else {
            fail("link.correlated_genk", "needs \"r\" or \"sigma\"");
        }
        try {
            spec.validate();
        } catch (const DomainError& e) {
            fail("link.correlated_genk", e.what());
        }
        sc.link.channels = std::move(spec);
    } else if (l.contains("channels")) {
        if (!l["channels"].is_array()) fail("link.channels", "expected an array");
        std::vector<fading::ChannelModel> models;
        int idx = 0;
        for (const auto& c : l["channels"])
            models.push_back(parse_channel(c, "link.channels[" + std::to_string(idx++) + "]"));
        if (static_cast<int>(models.size()) != sc.link.N)
            fail("link.channels", "count must equal N");
        sc.link.channels = std::move(models);
    } else {
        fail("link", "needs \"channels\" or \"correlated_genk\"");
    }

    // snr grid
    if (!j.contains("snr_db")) fail("snr_db", "required");
    const json& s = j["snr_db"];
    if (s.is_array()) {
        sc.snr_db = number_list(s, "snr_db");
    } else if (s.is_object()) {
        const double start = get_number(s.value("start", json()), "snr_db.start");
        const double stop = get_number(s.value("stop", json()), "snr_db.stop");
        const double step = get_number(s.value("step", json()), "snr_db.step");
        if (!(step > 0.0)) fail("snr_db.step", "must be positive");
        for (double v = start; v <= stop + 1e-9; v += step) sc.snr_db.push_back(v);
    } else {
        fail("snr_db", "expected an array or {start, stop, step}");
    }
    if (sc.snr_db.empty()) fail("snr_db", "empty grid");

    // approx
    const json a = j.value("approx", json::object());
    try {
        sc.approx = effrate::ApproxConfig::from_ratio(
            a.value("Q", 15.0), a.value("M_over_Q", 300.0), a.value("series_kmax", 40),
            a.value("series_tol", 1e-8));
    } catch (const DomainError& e) {
        fail("approx", e.what());
    }

    // mc
    const json m = j.value("mc", json::object());
    sc.mc.trials = m.value("trials", std::uint64_t{1'000'000});
    sc.mc.seed = m.value("seed", std::uint64_t{42});
    sc.mc.batch = m.value("batches", 50);
    return sc;
} catch (const json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
}

ScenarioFile parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str());
}

std::string run_sweep(const ScenarioFile& sc, const std::set<Method>& methods,
                      const SweepOptions& opt) {
    if (methods.empty()) throw ParseError("run_sweep: no methods requested");

    // applicability
    const bool corr = sc.link.correlated();
    for (Method m : methods) {
        if (corr && (m == Method::InidHyper || m == Method::ClosedForm))
            throw ParseError("method " + method_name(m) + " does not apply to correlated links");
        if (!corr && m == Method::CorrGenK)
            throw ParseError("method corr_genk needs a correlated link");
    }

    // analytic preparation
    std::vector<fading::MgfRepr> mgfs;
    std::optional<double> closed_m_hat;
    const std::vector<fading::ChannelModel>* models = nullptr;
    if (!corr) {
        models = &std::get<std::vector<fading::ChannelModel>>(sc.link.channels);
        for (const auto& model : *models) mgfs.push_back(fading::mgf_params(model));
        if (methods.count(Method::ClosedForm) && sc.link.N > 1) {
            double mh = 0.0;
            bool ok = true;
            for (const auto& model : *models) {
                double this_m;
                if (model.kind == fading::ChannelKind::Rayleigh)
                    this_m = 1.0;
                else if (model.kind == fading::ChannelKind::NakagamiM ||
                         (model.kind == fading::ChannelKind::GeneralizedK && model.psi == 0.0))
                    this_m = model.m_hat;
                else {
                    ok = false;
                    break;
                }
                if (mh == 0.0)
                    mh = this_m;
                else if (mh != this_m)
                    ok = false;
            }
            if (!ok)
                throw ParseError(
                    "method closed_form needs N=1 or i.i.d. Nakagami/Rayleigh channels");
            closed_m_hat = mh;
        }
    }
    const effrate::CorrelatedGenKSpec* corr_spec =
        corr ? &std::get<effrate::CorrelatedGenKSpec>(sc.link.channels) : nullptr;

    // MC grid, one pass for all cells
    std::vector<std::vector<mcsim::McEstimate>> mc_grid;
    double mc_ms_per_cell = 0.0;
    if (methods.count(Method::Mc)) {
        mcsim::McConfig mcfg = sc.mc;
        mcfg.threads = opt.threads;
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<double> rho_lin;
        for (double db : sc.snr_db) rho_lin.push_back(std::pow(10.0, db / 10.0));
        mc_grid = mcsim::simulate_rate_grid(sc.link, sc.qos, rho_lin, mcfg);
        const auto t1 = std::chrono::steady_clock::now();
        mc_ms_per_cell = std::chrono::duration<double, std::milli>(t1 - t0).count() /
                         static_cast<double>(sc.qos.size() * sc.snr_db.size());
    }

    struct Task {
        size_t qi, si;
        Method method;
    };
    std::vector<Task> tasks;
    for (size_t qi = 0; qi < sc.qos.size(); ++qi)
        for (size_t si = 0; si < sc.snr_db.size(); ++si)
            for (Method m : method_order)
                if (methods.count(m)) tasks.push_back({qi, si, m});

    std::vector<Row> rows(tasks.size());
    const auto mgf_fn = corr ? effrate::corr_genk_mgf(*corr_spec, sc.approx)
                             : effrate::product_mgf(mgfs);

    parallel_for(static_cast<int>(tasks.size()), opt.threads, [&](int ti) {
        const Task& task = tasks[static_cast<size_t>(ti)];
        const effrate::QosSpec& qos = sc.qos[task.qi];
        const double rho = std::pow(10.0, sc.snr_db[task.si] / 10.0);
        Row& row = rows[static_cast<size_t>(ti)];
        row.A = qos.A;
        row.snr_db = sc.snr_db[task.si];
        row.method = task.method;
        const auto t0 = std::chrono::steady_clock::now();
        switch (task.method) {
            case Method::Quadrature:
                row.rate = fmt(effrate::rate_from_mgf_quadrature(mgf_fn, qos, rho, sc.link.N));
                break;
            case Method::Trapezoid: {
                row.rate = fmt(corr ? effrate::rate_trapezoid(mgf_fn, qos, rho, sc.link.N,
                                                              sc.approx)
                                    : effrate::rate_trapezoid(mgfs, qos, rho, sc.link.N,
                                                              sc.approx));
                const auto eb = effrate::error_bounds(qos, sc.approx, mgf_fn, rho, sc.link.N);
                row.err_trunc = fmt(eb.truncation_bound);
                row.err_discr = fmt(eb.discretization_estimate);
                break;
            }
            case Method::InidHyper: {
                row.rate = fmt(effrate::rate_inid_hyper(mgfs, qos, rho, sc.approx));
                const auto eb = effrate::error_bounds(qos, sc.approx, mgf_fn, rho, sc.link.N);
                row.err_trunc = fmt(eb.truncation_bound);
                row.err_discr = fmt(eb.discretization_estimate);
                break;
            }
            case Method::ClosedForm:
                row.rate = fmt(sc.link.N == 1
                                   ? effrate::rate_siso_hyper(mgfs[0], qos, rho)
                                   : effrate::rate_iid_nakagami_closed(*closed_m_hat, sc.link.N,
                                                                       qos, rho));
                break;
            case Method::CorrGenK: {
                row.rate = fmt(effrate::rate_corr_genk(*corr_spec, qos, rho, sc.approx));
                const auto eb = effrate::error_bounds(qos, sc.approx, mgf_fn, rho, sc.link.N);
                row.err_trunc = fmt(eb.truncation_bound);
                row.err_discr = fmt(eb.discretization_estimate);
                break;
            }
            case Method::Mc: {
                const auto& est = mc_grid[task.qi][task.si];
                row.rate = fmt(est.rate);
                row.ci_low = fmt(est.rate_ci_low);
                row.ci_high = fmt(est.rate_ci_high);
                break;
            }
        }
        if (opt.timing) {
            const auto t1 = std::chrono::steady_clock::now();
            double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            if (task.method == Method::Mc) ms = mc_ms_per_cell;
            row.wall_ms = fmt(ms);
        } else {
            row.wall_ms = "0";
        }
    });

    std::ostringstream out;
    out << "scenario_id,A,snr_db,method,rate,err_trunc_bound,err_discr_est,ci_low,ci_high,wall_ms\n";
    for (const Row& r : rows) {
        out << sc.id << ',' << fmt(r.A) << ',' << fmt(r.snr_db) << ',' << method_name(r.method)
            << ',' << r.rate << ',' << r.err_trunc << ',' << r.err_discr << ',' << r.ci_low << ','
            << r.ci_high << ',' << r.wall_ms << '\n';
    }
    return out.str();
}

CompareReport compare_report(const std::string& csv_a, const std::string& csv_b, double tol) {
    const auto rows_a = parse_csv(csv_a, "first CSV");
    const auto rows_b = parse_csv(csv_b, "second CSV");

    std::set<std::string> methods_a, methods_b;
    for (const auto& r : rows_a) methods_a.insert(r.method);
    for (const auto& r : rows_b) methods_b.insert(r.method);
    bool shared_method = false;
    for (const auto& m : methods_a)
        if (methods_b.count(m)) shared_method = true;

    const auto key_of = [&](const ParsedRow& r) {
        std::string k = r.scenario + "|" + r.A + "|" + r.snr;
        if (shared_method) k += "|" + r.method;
        return k;
    };
    const auto index = [&](const std::vector<ParsedRow>& rows, const char* which) {
        std::map<std::string, const ParsedRow*> m;
        for (const auto& r : rows) {
            if (!m.emplace(key_of(r), &r).second)
                throw ParseError(std::string(which) + ": duplicate row key " + key_of(r));
        }
        return m;
    };
    const auto map_a = index(rows_a, "first CSV");
    const auto map_b = index(rows_b, "second CSV");

    std::vector<std::string> missing;
    for (const auto& [k, _] : map_a)
        if (!map_b.count(k)) missing.push_back(k + " (only in first)");
    for (const auto& [k, _] : map_b)
        if (!map_a.count(k)) missing.push_back(k + " (only in second)");
    if (!missing.empty()) {
        std::string msg = "compare: row keys do not match:";
        for (const auto& k : missing) msg += "\n  " + k;
        throw ParseError(msg);
    }

    CompareReport rep;
    for (const auto& [k, ra] : map_a) {
        const ParsedRow* rb = map_b.at(k);
        double dev = std::abs(ra->rate - rb->rate);
        if (rb->has_ci) dev = std::min(dev, interval_distance(ra->rate, rb->lo, rb->hi));
        if (ra->has_ci) dev = std::min(dev, interval_distance(rb->rate, ra->lo, ra->hi));
        const double denom = std::max({std::abs(ra->rate), std::abs(rb->rate), 1e-12});
        rep.max_abs_dev = std::max(rep.max_abs_dev, dev);
        rep.max_rel_dev = std::max(rep.max_rel_dev, dev / denom);
        ++rep.rows_compared;
        if (dev > tol)
            rep.exceeded.push_back(k + ": rate_a=" + fmt(ra->rate) + " rate_b=" + fmt(rb->rate) +
                                   " dev=" + fmt(dev));
    }
    return rep;
}

} // namespace hcap::cli
