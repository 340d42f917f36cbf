// ducktrap command-line front end: simulate, sweep, criticals, fold-scaling,
// and the charts coordinate utility.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ducktrap/ducktrap.hpp"

namespace {

using namespace ducktrap;

struct CommonFlags {
    std::string config_path;
    std::optional<std::string> kind, preset, h;
    std::optional<double> eps, lambda, rho, mu, x10, lambda0, a1, a2;
    std::optional<double> rtol, atol, max_time;
    std::optional<std::string> lambda_grid;
    std::vector<std::string> starts;
    std::optional<std::string> csv_path, json_path;
    std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->set_help_flag("--help", "print help");  // frees -h / --h for the fold field
    cmd->add_option("--config", f.config_path, "scenario file (key = value sections)");
    cmd->add_option("--system", f.kind,
                    "classical-fold|piecewise-fold|classical-canard|piecewise-canard");
    cmd->add_option("--preset", f.preset, "g-family preset (paper-fig) or 'custom'");
    cmd->add_option("--h", f.h, "fold interior field: zero | affine:c0,cx,cy");
    cmd->add_option("--eps", f.eps, "time-scale ratio epsilon");
    cmd->add_option("--lambda", f.lambda, "parameter lambda");
    cmd->add_option("--lambda-grid", f.lambda_grid, "comma list of lambda values (sweep)");
    cmd->add_option("--rho", f.rho, "blow-up radius rho");
    cmd->add_option("--mu", f.mu, "chart lambda bound mu");
    cmd->add_option("--x10", f.x10, "K1 chart half-width x_{1,0}");
    cmd->add_option("--lambda0", f.lambda0, "admissible |lambda| bound");
    cmd->add_option("--a1", f.a1, "a1 = dx g1(0,0,0)");
    cmd->add_option("--a2", f.a2, "a2 = g3(0,0,0)");
    cmd->add_option("--rtol", f.rtol, "integrator relative tolerance");
    cmd->add_option("--atol", f.atol, "integrator absolute tolerance");
    cmd->add_option("--max-time", f.max_time, "fast-time budget");
    cmd->add_option("--start", f.starts, "start point 'x,y' (repeatable)");
    cmd->add_option("--csv", f.csv_path, "CSV output path ('-' for stdout)");
    cmd->add_option("--json", f.json_path, "JSON output path ('-' for stdout)");
    cmd->add_option("--threads", f.threads, "sweep worker cap (0 = hardware)");
}

ScenarioConfig build_config(const CommonFlags& f) {
    ScenarioConfig c;
    if (!f.config_path.empty()) {
        std::ifstream in(f.config_path);
        if (!in) throw ConfigError("cannot open config file: " + f.config_path);
        std::ostringstream ss;
        ss << in.rdbuf();
        c = parse_scenario(ss.str());
    }
    if (f.kind) c.kind = system_kind_from_string(*f.kind);
    if (f.preset) c.preset = *f.preset;
    if (f.h) {
        if (*f.h == "zero") { c.h_zero = true; }
        else if (f.h->rfind("affine:", 0) == 0) {
            const auto v = detail::parse_list(f.h->substr(7));
            if (v.size() != 3) throw ConfigError("--h affine:c0,cx,cy");
            c.h_zero = false;
            std::copy(v.begin(), v.end(), c.h_affine.begin());
        } else throw ConfigError("--h must be zero or affine:c0,cx,cy");
    }
    if (f.eps) c.eps = *f.eps;
    if (f.lambda) c.lambda = *f.lambda;
    if (f.lambda_grid) c.lambda_grid = detail::parse_list(*f.lambda_grid);
    if (f.rho) c.rho = *f.rho;
    if (f.mu) c.mu = *f.mu;
    if (f.x10) c.x10 = *f.x10;
    if (f.lambda0) c.lambda0 = *f.lambda0;
    if (f.a1) c.a1 = *f.a1;
    if (f.a2) c.a2 = *f.a2;
    if (f.rtol) c.rtol = *f.rtol;
    if (f.atol) c.atol = *f.atol;
    if (f.max_time) c.max_time = *f.max_time;
    for (const auto& s : f.starts) c.starts.push_back(detail::parse_point(s));
    if (f.csv_path) c.csv_path = *f.csv_path;
    if (f.json_path) c.json_path = *f.json_path;
    if (f.threads) c.threads = *f.threads;
    return c;
}

void write_text(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << text;
}

int cmd_simulate(const ScenarioConfig& cfg) {
    if (cfg.starts.empty()) throw ConfigError("simulate: needs at least one --start");
    const SystemSpec spec = cfg.to_spec();
    StopPolicy stop;
    stop.max_time = cfg.max_time;
    int idx = 0;
    for (const auto& p0 : cfg.starts) {
        const auto traj = integrate(spec, p0, stop, cfg.integrator_options());
        const std::string tag = cfg.starts.size() > 1 ? "." + std::to_string(idx) : "";
        if (!cfg.csv_path.empty()) {
            std::ostringstream ss;
            write_csv(traj, ss);
            write_text(cfg.csv_path == "-" ? "-" : cfg.csv_path + tag, ss.str());
        }
        if (!cfg.json_path.empty()) {
            write_text(cfg.json_path == "-" ? "-" : cfg.json_path + tag,
                       to_json(traj).dump(2) + "\n");
        }
        const auto& ev = traj.last_event();
        std::cerr << "start (" << p0.x << ", " << p0.y << "): " << to_string(ev.kind) << " at t="
                  << ev.time << " (" << ev.point.x << ", " << ev.point.y << ")"
                  << (detect_trapping(traj) ? " [trapped in C0]" : "") << "\n";
        ++idx;
    }
    return 0;
}

int cmd_sweep(const ScenarioConfig& cfg) {
    const auto rows = run_sweep(cfg);
    std::ostringstream ss;
    write_sweep_csv(rows, ss);
    write_text(cfg.csv_path.empty() ? "-" : cfg.csv_path, ss.str());
    if (!cfg.json_path.empty()) {
        nlohmann::ordered_json j;
        j["schema"] = 1;
        auto& out = j["rows"] = nlohmann::ordered_json::array();
        for (const auto& r : rows) {
            nlohmann::ordered_json row;
            row["lambda"] = r.lambda;
            row["start"] = {r.start.x, r.start.y};
            if (r.result) {
                row["outcome"] = to_string(r.result->outcome);
                row["exit"] = {{"kind", to_string(r.result->exit.kind)},
                               {"x", r.result->exit.point.x},
                               {"y", r.result->exit.point.y}};
                row["rel_P_minus"] = to_string(r.result->rel_P_minus);
                row["rel_P_plus"] = to_string(r.result->rel_P_plus);
                row["start_rel_P_c"] = to_string(r.result->start_rel_P_c);
            }
            if (!r.error.empty()) row["error"] = r.error;
            out.push_back(std::move(row));
        }
        write_text(cfg.json_path, j.dump(2) + "\n");
    }
    return 0;
}

int cmd_criticals(const ScenarioConfig& cfg, bool skip_lambda_star) {
    const SystemSpec spec = cfg.to_spec();
    const auto opts = cfg.integrator_options();
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["eps"] = spec.params.eps;
    const double lH = lambda_H_numeric(spec);
    j["lambda_H"] = {{"leading", lambda_H_leading(spec.params)}, {"numeric", lH}};
    const double lc = lambda_c_numeric(spec, 1e-11, opts);
    j["lambda_c"] = {{"leading", lambda_c_leading(spec.params)}, {"numeric", lc}};
    const double lsc = lambda_sc_numeric(spec, 1e-11, opts);
    j["lambda_sc"] = {{"numeric", lsc}};
    if (!skip_lambda_star) {
        try {
            j["lambda_star"] = {{"numeric", lambda_star_numeric(spec, cfg.uset_config(), opts)}};
        } catch (const BracketFailure& e) {
            j["lambda_star"] = {{"error", e.what()}};
        }
    }
    if (cfg.lambda > lH && cfg.lambda < lsc) {
        try {
            const auto hc = half_cycle(spec, cfg.lambda, opts);
            nlohmann::ordered_json arc = nlohmann::ordered_json::array();
            for (const auto& p : hc.arc) arc.push_back({p.x, p.y});
            j["half_cycle"] = {{"lambda", cfg.lambda},
                               {"p_minus", {hc.p_minus.x, hc.p_minus.y}},
                               {"p_plus", {hc.p_plus.x, hc.p_plus.y}},
                               {"arc", std::move(arc)}};
        } catch (const NoCycle&) {
        }
    }
    if (cfg.lambda > lc) {
        const auto pc = find_Pc(spec, cfg.lambda, lc, opts, cfg.uset_config());
        const char* kind = pc.kind == PcResult::Kind::Abscissa ? "abscissa"
                           : pc.kind == PcResult::Kind::MinusInfinity ? "minus-infinity"
                                                                      : "at-collar-edge";
        j["P_c"] = {{"kind", kind}, {"x", pc.x}, {"lambda", cfg.lambda}};
    }
    j["uset_config"] = {{"C1", cfg.c1}, {"C2", cfg.c2}, {"C5", cfg.c5},
                        {"C6", cfg.c6}, {"C7", cfg.c7}, {"disc_radius", cfg.disc_radius}};
    write_text(cfg.json_path.empty() ? "-" : cfg.json_path, j.dump(2) + "\n");
    return 0;
}

int cmd_fold_scaling(const ScenarioConfig& cfg, const std::string& eps_list_str, double x_in) {
    ScenarioConfig c = cfg;
    if (c.kind != SystemKind::PiecewiseFold && c.kind != SystemKind::ClassicalFold)
        c.kind = SystemKind::PiecewiseFold;
    const SystemSpec spec = c.to_spec();
    std::vector<double> eps_list = eps_list_str.empty()
                                       ? std::vector<double>{1e-4, 3e-4, 1e-3, 3e-3, 1e-2}
                                       : detail::parse_list(eps_list_str);
    const auto fit = fold_scaling_fit(spec, eps_list, x_in, c.integrator_options());
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["exponent"] = fit.exponent;
    auto& rows = j["rows"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < eps_list.size(); ++i)
        rows.push_back({{"eps", eps_list[i]}, {"y_out", fit.y_out[i]}});
    write_text(cfg.json_path.empty() ? "-" : cfg.json_path, j.dump(2) + "\n");
    return 0;
}

int cmd_charts(const std::string& chart, const std::string& push_arg,
               const std::string& pull_arg) {
    const bool is_push = !push_arg.empty();
    const auto v = detail::parse_list(is_push ? push_arg : pull_arg);
    auto print4 = [](double a, double b, double c, double d) {
        std::cout << format_double(a) << "," << format_double(b) << "," << format_double(c)
                  << "," << format_double(d) << "\n";
    };
    auto print3 = [](double a, double b, double c) {
        std::cout << format_double(a) << "," << format_double(b) << "," << format_double(c)
                  << "\n";
    };
    if (chart == "k1") {
        if (is_push) {
            if (v.size() != 4) throw ConfigError("k1 push: x1,r1,eps1,lambda1");
            const auto e = phi1_push({v[0], v[1], v[2], v[3]});
            print4(e.x, e.y, e.eps, e.lambda);
        } else {
            if (v.size() != 4) throw ConfigError("k1 pull: x,y,eps,lambda");
            const auto q = phi1_pull(v[0], v[1], v[2], v[3]);
            print4(q.x1, q.r1, q.eps1, q.lambda1);
        }
    } else if (chart == "k2") {
        if (is_push) {
            if (v.size() != 4) throw ConfigError("k2 push: x2,y2,r2,lambda2");
            const auto e = phi2_push({v[0], v[1], v[2], v[3]});
            print4(e.x, e.y, e.eps, e.lambda);
        } else {
            if (v.size() != 4) throw ConfigError("k2 pull: x,y,eps,lambda");
            const auto q = phi2_pull(v[0], v[1], v[2], v[3]);
            print4(q.x2, q.y2, q.r2, q.lambda2);
        }
    } else if (chart == "k1f" || chart == "k2f" || chart == "k3f") {
        const FoldChart fc = chart == "k1f" ? FoldChart::K1f
                             : chart == "k2f" ? FoldChart::K2f
                                              : FoldChart::K3f;
        if (v.size() != 3) throw ConfigError(chart + ": three coordinates");
        if (is_push) {
            const auto e = fold_push({fc, {v[0], v[1], v[2]}});
            print3(e[0], e[1], e[2]);
        } else {
            const auto q = fold_pull(fc, v[0], v[1], v[2]);
            print3(q.coords[0], q.coords[1], q.coords[2]);
        }
    } else {
        throw ConfigError("chart must be one of k1, k2, k1f, k2f, k3f");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ducktrap: planar fast-slow systems with a two-dimensional critical manifold"};
    app.require_subcommand(1);

    CommonFlags sim_f, sweep_f, crit_f, fold_f;
    auto* sim = app.add_subcommand("simulate", "integrate trajectories and export them");
    add_common(sim, sim_f);
    auto* sw = app.add_subcommand("sweep", "classification table over a lambda grid");
    add_common(sw, sweep_f);
    auto* crit = app.add_subcommand("criticals", "critical parameter values report");
    add_common(crit, crit_f);
    bool skip_lambda_star = false;
    crit->add_flag("--no-lambda-star", skip_lambda_star, "skip the lambda_* bisection");
    auto* fold = app.add_subcommand("fold-scaling", "fold transition-map scaling fit");
    add_common(fold, fold_f);
    std::string fold_eps_list;
    double fold_x_in = 0.0;
    fold->add_option("--eps-list", fold_eps_list, "comma list of eps values");
    fold->add_option("--x-in", fold_x_in, "entry abscissa on Delta_in (default -(rho+0.1))");
    auto* charts = app.add_subcommand("charts", "push/pull chart coordinate conversion");
    std::string chart_name, push_arg, pull_arg;
    charts->add_option("--chart", chart_name, "k1|k2|k1f|k2f|k3f")->required();
    charts->add_option("--push", push_arg, "chart coordinates to push to (x,y,eps[,lambda])");
    charts->add_option("--pull", pull_arg, "plane coordinates to pull into the chart");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(build_config(sim_f));
        if (sw->parsed()) return cmd_sweep(build_config(sweep_f));
        if (crit->parsed()) return cmd_criticals(build_config(crit_f), skip_lambda_star);
        if (fold->parsed())
            return cmd_fold_scaling(build_config(fold_f), fold_eps_list, fold_x_in);
        if (charts->parsed()) {
            if (push_arg.empty() == pull_arg.empty())
                throw ConfigError("charts: give exactly one of --push / --pull");
            return cmd_charts(chart_name, push_arg, pull_arg);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const PreconditionError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
