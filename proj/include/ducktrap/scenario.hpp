// Declarative scenario configuration (key = value sections), its parser and
// canonical serializer, and the parallel sweep engine behind the CLI.
#pragma once

#include <array>
#include <atomic>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ducktrap/analysis.hpp"
#include "ducktrap/io.hpp"

namespace ducktrap {

struct ScenarioConfig {
    // [system]
    SystemKind kind = SystemKind::PiecewiseCanard;
    std::string preset = "paper-fig";  // "paper-fig" or "custom"
    std::array<std::array<double, 4>, 3> gtable{{{1, 1, 0, 0}, {1, 0, 0, 0}, {0.9, 0, 0, 0}}};
    double a1 = 1.0, a2 = 0.9;
    double eps = 0.01;
    double lambda = 0.0;
    std::vector<double> lambda_grid;
    double rho = 0.3, mu = 0.3, x10 = 3.0, lambda0 = 0.05;
    std::array<double, 3> h_affine{0, 0, 0};  // fold interior h = c0 + cx x + cy y
    bool h_zero = true;

    // [starts]
    std::vector<PlanePoint> starts;

    // [stop]
    double max_time = 2e5;

    // [integrator]
    double rtol = 1e-10, atol = 1e-10, max_step = 5.0;

    // [usets]
    double c1 = 1, c2 = 1, c5 = 2, c6 = 1, c7 = 3;
    std::optional<double> lambda_star;  // empty: "auto"
    double disc_radius = 4.0;

    // [output]
    std::string csv_path, json_path;

    // [run]
    unsigned seed = 42;
    unsigned threads = 0;  // 0: hardware concurrency (capped by DUCKTRAP_THREADS)

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;

    SystemSpec to_spec() const {
        SystemSpec s;
        s.kind = kind;
        s.params.eps = eps;
        s.params.lambda = lambda;
        s.params.a1 = a1;
        s.params.a2 = a2;
        s.params.rho = rho;
        s.params.mu = mu;
        s.params.x10 = x10;
        s.params.lambda0 = lambda0;
        if (s.canard()) {
            s.g = preset == "paper-fig" ? GFamily::paper_fig()
                                        : GFamily::affine(gtable[0], gtable[1], gtable[2]);
        }
        if (s.kind == SystemKind::PiecewiseFold && !h_zero) {
            const auto c = h_affine;
            s.h = [c](double x, double y) { return c[0] + c[1] * x + c[2] * y; };
        }
        s.validate();
        return s;
    }

    USetConfig uset_config() const {
        USetConfig u;
        u.C1 = c1; u.C2 = c2; u.C5 = c5; u.C6 = c6; u.C7 = c7;
        u.lambda_star = lambda_star;
        u.disc_radius = disc_radius;
        return u;
    }

    IntegratorOptions integrator_options() const {
        IntegratorOptions o;
        o.rtol = rtol;
        o.atol = atol;
        o.max_step = max_step;
        o.disc_radius = disc_radius;
        return o;
    }

    std::vector<double> lambdas() const {
        return lambda_grid.empty() ? std::vector<double>{lambda} : lambda_grid;
    }
};

inline SystemKind system_kind_from_string(const std::string& s) {
    if (s == "classical-fold") return SystemKind::ClassicalFold;
    if (s == "piecewise-fold" || s == "fold") return SystemKind::PiecewiseFold;
    if (s == "classical-canard") return SystemKind::ClassicalCanard;
    if (s == "piecewise-canard" || s == "canard") return SystemKind::PiecewiseCanard;
    throw ConfigError("unknown system kind: " + s);
}

namespace detail {

inline double parse_double(const std::string& s) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + s + "'");
    }
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw ConfigError("trailing junk in number: '" + s + "'");
    return v;
}

inline std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(parse_double(tok));
    return out;
}

inline PlanePoint parse_point(const std::string& s) {
    const auto v = parse_list(s);
    if (v.size() != 2) throw ConfigError("point needs two coordinates: '" + s + "'");
    return {v[0], v[1]};
}

} // namespace detail

inline ScenarioConfig parse_scenario(const std::string& text) {
    ScenarioConfig c;
    c.starts.clear();
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("bad section at line " + std::to_string(lineno));
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value at line " + std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        using detail::parse_double;
        using detail::parse_list;
        using detail::parse_point;

        if (section == "system") {
            if (key == "kind") c.kind = system_kind_from_string(val);
            else if (key == "preset") c.preset = val;
            else if (key == "g1" || key == "g2" || key == "g3") {
                const auto v = parse_list(val);
                if (v.size() != 4) throw ConfigError(key + " needs 4 coefficients");
                std::copy(v.begin(), v.end(), c.gtable[key[1] - '1'].begin());
            } else if (key == "a1") c.a1 = parse_double(val);
            else if (key == "a2") c.a2 = parse_double(val);
            else if (key == "eps") c.eps = parse_double(val);
            else if (key == "lambda") c.lambda = parse_double(val);
            else if (key == "lambda_grid") c.lambda_grid = parse_list(val);
            else if (key == "rho") c.rho = parse_double(val);
            else if (key == "mu") c.mu = parse_double(val);
            else if (key == "x10") c.x10 = parse_double(val);
            else if (key == "lambda0") c.lambda0 = parse_double(val);
            else if (key == "h") {
                if (val == "zero") { c.h_zero = true; c.h_affine = {0, 0, 0}; }
                else if (val.rfind("affine:", 0) == 0) {
                    const auto v = parse_list(val.substr(7));
                    if (v.size() != 3) throw ConfigError("h = affine:c0,cx,cy");
                    c.h_zero = false;
                    std::copy(v.begin(), v.end(), c.h_affine.begin());
                } else throw ConfigError("h must be 'zero' or 'affine:c0,cx,cy'");
            } else throw ConfigError("unknown [system] key: " + key);
        } else if (section == "starts") {
            if (key == "point") c.starts.push_back(parse_point(val));
            else throw ConfigError("unknown [starts] key: " + key);
        } else if (section == "stop") {
            if (key == "max_time") c.max_time = parse_double(val);
            else throw ConfigError("unknown [stop] key: " + key);
        } else if (section == "integrator") {
            if (key == "rtol") c.rtol = parse_double(val);
            else if (key == "atol") c.atol = parse_double(val);
            else if (key == "max_step") c.max_step = parse_double(val);
            else throw ConfigError("unknown [integrator] key: " + key);
        } else if (section == "usets") {
            if (key == "c1") c.c1 = parse_double(val);
            else if (key == "c2") c.c2 = parse_double(val);
            else if (key == "c5") c.c5 = parse_double(val);
            else if (key == "c6") c.c6 = parse_double(val);
            else if (key == "c7") c.c7 = parse_double(val);
            else if (key == "lambda_star")
                c.lambda_star = val == "auto" ? std::nullopt
                                              : std::optional<double>(parse_double(val));
            else if (key == "disc_radius") c.disc_radius = parse_double(val);
            else throw ConfigError("unknown [usets] key: " + key);
        } else if (section == "output") {
            if (key == "csv") c.csv_path = val;
            else if (key == "json") c.json_path = val;
            else throw ConfigError("unknown [output] key: " + key);
        } else if (section == "run") {
            if (key == "seed") c.seed = static_cast<unsigned>(parse_double(val));
            else if (key == "threads") c.threads = static_cast<unsigned>(parse_double(val));
            else throw ConfigError("unknown [run] key: " + key);
        } else {
            throw ConfigError("unknown section [" + section + "]");
        }
    }
    return c;
}

inline std::string serialize_scenario(const ScenarioConfig& c) {
    std::ostringstream os;
    auto d = [](double v) { return format_double(v); };
    os << "[system]\n";
    os << "kind = " << to_string(c.kind) << "\n";
    os << "preset = " << c.preset << "\n";
    for (int i = 0; i < 3; ++i) {
        os << "g" << i + 1 << " = ";
        for (int j = 0; j < 4; ++j) os << (j ? "," : "") << d(c.gtable[i][j]);
        os << "\n";
    }
    os << "a1 = " << d(c.a1) << "\n";
    os << "a2 = " << d(c.a2) << "\n";
    os << "eps = " << d(c.eps) << "\n";
    os << "lambda = " << d(c.lambda) << "\n";
    if (!c.lambda_grid.empty()) {
        os << "lambda_grid = ";
        for (std::size_t i = 0; i < c.lambda_grid.size(); ++i)
            os << (i ? "," : "") << d(c.lambda_grid[i]);
        os << "\n";
    }
    os << "rho = " << d(c.rho) << "\n";
    os << "mu = " << d(c.mu) << "\n";
    os << "x10 = " << d(c.x10) << "\n";
    os << "lambda0 = " << d(c.lambda0) << "\n";
    if (c.h_zero) os << "h = zero\n";
    else os << "h = affine:" << d(c.h_affine[0]) << "," << d(c.h_affine[1]) << ","
            << d(c.h_affine[2]) << "\n";
    os << "\n[starts]\n";
    for (const auto& p : c.starts) os << "point = " << d(p.x) << "," << d(p.y) << "\n";
    os << "\n[stop]\n";
    os << "max_time = " << d(c.max_time) << "\n";
    os << "\n[integrator]\n";
    os << "rtol = " << d(c.rtol) << "\n";
    os << "atol = " << d(c.atol) << "\n";
    os << "max_step = " << d(c.max_step) << "\n";
    os << "\n[usets]\n";
    os << "c1 = " << d(c.c1) << "\n";
    os << "c2 = " << d(c.c2) << "\n";
    os << "c5 = " << d(c.c5) << "\n";
    os << "c6 = " << d(c.c6) << "\n";
    os << "c7 = " << d(c.c7) << "\n";
    os << "lambda_star = " << (c.lambda_star ? d(*c.lambda_star) : std::string("auto")) << "\n";
    os << "disc_radius = " << d(c.disc_radius) << "\n";
    os << "\n[output]\n";
    if (!c.csv_path.empty()) os << "csv = " << c.csv_path << "\n";
    if (!c.json_path.empty()) os << "json = " << c.json_path << "\n";
    os << "\n[run]\n";
    os << "seed = " << c.seed << "\n";
    os << "threads = " << c.threads << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Sweep engine: one classification row per (lambda, start).
// ---------------------------------------------------------------------------

struct SweepRow {
    double lambda = 0.0;
    PlanePoint start;
    std::optional<OrbitClass> result;
    std::string error;
};

inline unsigned sweep_thread_count(const ScenarioConfig& c) {
    unsigned n = c.threads ? c.threads : std::max(1u, std::thread::hardware_concurrency());
    if (const char* cap = std::getenv("DUCKTRAP_THREADS")) {
        const unsigned m = static_cast<unsigned>(std::strtoul(cap, nullptr, 10));
        if (m > 0) n = std::min(n, m);
    }
    return std::max(1u, n);
}

/// Classifies every (lambda, start) pair; rows with errors carry a marker and
/// the run continues. Lambda groups execute in a worker pool, the per-lambda
/// context is built once per group, and output order is deterministic.
inline std::vector<SweepRow> run_sweep(const ScenarioConfig& cfg) {
    const auto lambdas = cfg.lambdas();
    if (lambdas.empty() || cfg.starts.empty())
        throw ConfigError("sweep: needs a lambda grid and at least one start");
    const auto n_lam = lambdas.size();
    const auto n_st = cfg.starts.size();
    std::vector<SweepRow> rows(n_lam * n_st);

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t li = next.fetch_add(1);
            if (li >= n_lam) return;
            ScenarioConfig c = cfg;
            c.lambda = lambdas[li];
            std::optional<SystemSpec> spec;
            std::optional<ClassificationContext> ctx;
            std::string group_error;
            try {
                spec = c.to_spec();
                ctx = make_classification_context(*spec, c.uset_config(), c.integrator_options());
            } catch (const std::exception& e) {
                group_error = e.what();
            }
            for (std::size_t si = 0; si < n_st; ++si) {
                SweepRow& row = rows[li * n_st + si];
                row.lambda = lambdas[li];
                row.start = cfg.starts[si];
                if (!group_error.empty()) {
                    row.error = group_error;
                    continue;
                }
                try {
                    row.result = classify_orbit(*spec, row.start, *ctx, c.integrator_options());
                } catch (const std::exception& e) {
                    row.error = e.what();
                }
            }
        }
    };
    const unsigned nthreads = std::min<std::size_t>(sweep_thread_count(cfg), n_lam);
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < nthreads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return rows;
}

/// Stable column set: lambda,x0,y0,outcome,exit_kind,exit_x,exit_y,exit_side,
/// rel_P_minus,rel_P_plus,start_rel_P_c,error
inline void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
    os << "lambda,x0,y0,outcome,exit_kind,exit_x,exit_y,exit_side,"
          "rel_P_minus,rel_P_plus,start_rel_P_c,error\n";
    for (const auto& r : rows) {
        os << format_double(r.lambda) << ',' << format_double(r.start.x) << ','
           << format_double(r.start.y) << ',';
        if (r.result) {
            const auto& oc = *r.result;
            os << to_string(oc.outcome) << ',' << to_string(oc.exit.kind) << ','
               << format_double(oc.exit.point.x) << ',' << format_double(oc.exit.point.y) << ','
               << to_string(oc.exit.side) << ',' << to_string(oc.rel_P_minus) << ','
               << to_string(oc.rel_P_plus) << ',' << to_string(oc.start_rel_P_c) << ',';
        } else {
            os << ",,,,,,,,";
        }
        os << r.error << '\n';
    }
}

} // namespace ducktrap
