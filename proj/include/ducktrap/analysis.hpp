// Derived objects of the canard analysis: critical parameter values, the
// equilibrium curve, the K2 constant of motion, half cycles, the separating
// line P_c, the linearized return map, slow-manifold expansions, and the
// orbit classifier.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "ducktrap/blowup.hpp"
#include "ducktrap/core.hpp"
#include "ducktrap/geometry.hpp"
#include "ducktrap/integrate.hpp"

namespace ducktrap {

inline SystemSpec with_lambda(const SystemSpec& spec, double lambda) {
    SystemSpec s = spec;
    s.params.lambda = lambda;
    return s;
}

inline SystemSpec as_classical(const SystemSpec& spec) {
    SystemSpec s = spec;
    s.kind = spec.canard() ? SystemKind::ClassicalCanard : SystemKind::ClassicalFold;
    return s;
}

// ---------------------------------------------------------------------------
// Critical value expansions and numerical counterparts.
// ---------------------------------------------------------------------------

inline double lambda_H_leading(const Params& p) { return -0.5 * p.a2 * p.eps; }

inline double lambda_c_leading(const Params& p) { return 0.25 * (p.a1 - p.a2) * p.eps; }

/// Hopf location of the classical linearization: the zero of
/// trace J(p_e(lambda)) = 2 x_e + eps dyg(p_e), located by bisection.
inline double lambda_H_numeric(const SystemSpec& spec) {
    auto trace = [&](double lam) {
        const SystemSpec s = with_lambda(spec, lam);
        const PlanePoint pe = equilibrium_point(s);
        const double h = 1e-7;
        const double gy = (s.g_eval(pe.x, pe.y + h) - s.g_eval(pe.x, pe.y - h)) / (2 * h);
        return 2.0 * pe.x + s.params.eps * gy;
    };
    double lo = -spec.params.lambda0, hi = 0.0;
    double flo = trace(lo), fhi = trace(hi);
    if (flo * fhi > 0.0) throw BracketFailure("lambda_H_numeric: trace does not change sign");
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = trace(mid);
        if ((fm < 0) == (flo < 0)) { lo = mid; flo = fm; } else hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// First-order slow-manifold expansion x(y) below the parabola;
/// attracting branch -sqrt(y), repelling +sqrt(y).
enum class Branch { Attracting, Repelling };

inline double slow_manifold_x(double y, Branch branch, const Params& p) {
    if (!(y >= p.eps) || !(y < p.rho * p.rho))
        throw DomainError("slow_manifold_x: y must lie in [eps, rho^2)");
    const double s = branch == Branch::Attracting ? -1.0 : 1.0;
    const double sq = std::sqrt(y);
    return s * sq + p.eps / (4.0 * y) * (s * sq + (p.a1 + p.a2) * y - p.lambda);
}

namespace detail {

// Entry point of the attracting slow manifold near the top of the strip.
inline PlanePoint funnel_start(const Params& p) {
    const double y0 = 0.98 * p.rho * p.rho;
    return {slow_manifold_x(y0, Branch::Attracting, p), y0};
}

// Piecewise maximal-canard discriminator: true if the orbit from the
// attracting-manifold funnel re-enters C0 before crossing x = rho below it.
inline bool canard_reenters(const SystemSpec& spec, const IntegratorOptions& opts) {
    StopPolicy stop;
    stop.max_time = 400.0 * spec.params.rho * spec.params.rho / spec.params.eps + 1e4;
    stop.stop_on_enter_c0 = true;
    stop.sections.push_back({'x', spec.params.rho, +1, "escape"});
    IntegratorOptions o = opts;
    o.store_samples = false;
    const auto traj = integrate(spec, funnel_start(spec.params), stop, o);
    switch (traj.last_event().kind) {
        case EventKind::EnterC0: return true;
        case EventKind::ReachSection: return false;
        case EventKind::ExitV: return switching_value(traj.last_event().point) >= 0.0;
        default:
            throw BracketFailure("canard discriminator: orbit reached neither class");
    }
}

} // namespace detail

/// Maximal-canard parameter by bisection on the re-enter/escape discriminator.
/// The default tolerance is eps^2; internal callers tighten it.
inline double lambda_c_numeric(const SystemSpec& spec, double tol = -1.0,
                               const IntegratorOptions& opts = {}) {
    if (!spec.canard()) throw PreconditionError("lambda_c_numeric: canard kinds only");
    const double eps = spec.params.eps;
    if (tol <= 0.0) tol = eps * eps;
    double lo = lambda_H_leading(spec.params);
    double hi = 2.0 * lambda_c_leading(spec.params) + std::pow(eps, 1.5);
    if (!detail::canard_reenters(with_lambda(spec, lo), opts) ||
        detail::canard_reenters(with_lambda(spec, hi), opts))
        throw BracketFailure("lambda_c_numeric: discriminator classes agree at bracket ends");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (detail::canard_reenters(with_lambda(spec, mid), opts)) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Equilibrium curve Gamma_e and the K2 constant of motion.
// ---------------------------------------------------------------------------

/// Nodes (x, u_e(x)) of the equilibrium curve g(x, u, lambda) = 0 restricted
/// to C0 and V. Nodes outside C0 or V are dropped; losing every node (or the
/// root itself) raises RootLost.
inline Polyline gamma_e(const SystemSpec& spec, const std::vector<double>& x_grid) {
    if (!spec.canard()) throw PreconditionError("gamma_e: canard kinds only");
    const Params& P = spec.params;
    VGeometry vg(P);
    Polyline out;
    double guess = 0.0;
    bool have_guess = false;
    for (double x : x_grid) {
        double u = have_guess ? guess : (P.lambda - x) / P.a2;
        bool ok = false;
        for (int it = 0; it < 60; ++it) {
            const double f = spec.g_eval(x, u);
            if (std::abs(f) < 1e-13) { ok = true; break; }
            const double h = 1e-7 * (1.0 + std::abs(u));
            const double df = (spec.g_eval(x, u + h) - spec.g_eval(x, u - h)) / (2 * h);
            if (df == 0.0) break;
            u -= f / df;
            if (!std::isfinite(u)) break;
        }
        if (!ok) throw RootLost("gamma_e: Newton failed to find u_e at x=" + std::to_string(x));
        guess = u;
        have_guess = true;
        if (u >= x * x && vg.contains({x, u})) out.push_back({x, u});
    }
    if (out.empty()) throw RootLost("gamma_e: curve leaves C0 or V on the whole grid");
    return out;
}

/// Constant of motion of the reduced K2 system.
inline double H_value(double x2, double y2) {
    return 0.5 * std::exp(-2.0 * y2) * (y2 - x2 * x2 + 0.5);
}

/// Height of the parabola touch points of the level set H = h.
inline double c_of_h(double h) {
    if (!(h > 0.0) || h > 0.25) throw DomainError("c_of_h: h must lie in (0, 1/4]");
    return -0.5 * std::log(4.0 * h);
}

/// The H = 0 solution (the maximal canard of the reduced K2 system).
inline PlanePoint gamma_c2(double t2) { return {0.5 * t2, 0.25 * t2 * t2 - 0.5}; }

// ---------------------------------------------------------------------------
// Half cycles of the classical system and lambda_sc.
// ---------------------------------------------------------------------------

struct HalfCycle {
    Polyline arc;          // exterior arc of the cycle, p_minus to p_plus
    PlanePoint p_minus;    // left crossing with C_d
    PlanePoint p_plus;     // right crossing with C_d
    double verify_residual = 0.0;  // |piecewise reentry - p_plus.x|
};

namespace detail {

// Iterates the classical Poincare map on the down-crossing abscissa until
// the crossing pair converges; Aitken reseeding accelerates the tail.
inline std::optional<std::pair<double, double>> iterate_cycle(const SystemSpec& spec,
                                                              const IntegratorOptions& opts,
                                                              int max_revs = 400,
                                                              double tol = 1e-8) {
    const SystemSpec cls = as_classical(spec);
    IntegratorOptions o = opts;
    o.store_samples = false;
    StopPolicy down, up;
    down.stop_on_exit_c0 = true;
    down.max_time = up.max_time = 2000.0 / cls.params.eps;
    up.stop_on_enter_c0 = true;

    // Aitken extrapolation of a near-geometric tail; falls back to the last value.
    auto aitken = [](const std::vector<double>& v) {
        if (v.size() < 3) return v.back();
        const double d1 = v[v.size() - 2] - v[v.size() - 3];
        const double d2 = v[v.size() - 1] - v[v.size() - 2];
        const double den = d2 - d1;
        if (std::abs(den) < 1e-300 || std::abs(d2) >= std::abs(d1)) return v.back();
        const double acc = v.back() - d2 * d2 / den;
        return std::isfinite(acc) && std::abs(acc - v.back()) < 0.1 ? acc : v.back();
    };

    PlanePoint p = funnel_start(cls.params);
    double pm_prev = 0.0, pp_prev = 0.0;
    std::vector<double> pms, pps;
    for (int rev = 0; rev < max_revs; ++rev) {
        // to the next down-crossing
        auto t1 = integrate(cls, p, down, o);
        if (!t1.ended_with(EventKind::ExitC0)) return std::nullopt;  // escaped or stalled
        const double pm = t1.last_event().point.x;
        // to the next up-crossing
        auto t2 = integrate(cls, t1.last_event().point, up, o);
        if (!t2.ended_with(EventKind::EnterC0)) return std::nullopt;
        const double pp = t2.last_event().point.x;
        p = t2.last_event().point;
        if (pp - pm < 1e-7) return std::nullopt;  // collapsing onto the equilibrium
        pms.push_back(pm);
        pps.push_back(pp);
        if (rev > 0 && std::abs(pm - pm_prev) < tol && std::abs(pp - pp_prev) < tol) {
            // extrapolate the geometric tail; exact fixed points are unchanged
            const double pmf = aitken(pms), ppf = aitken(pps);
            if (ppf - pmf < 1e-7) return std::nullopt;
            return std::make_pair(pmf, ppf);
        }
        pm_prev = pm;
        pp_prev = pp;
        if (pms.size() >= 3) {
            const double acc = aitken(pms);
            VGeometry vg(cls.params);
            if (acc != pms.back() && std::abs(acc) < 0.999 * cls.params.rho &&
                vg.contains({acc, acc * acc})) {
                p = {acc, acc * acc};  // reseed on the parabola
                pms.clear();
                pps.clear();
            }
        }
    }
    return std::nullopt;
}

} // namespace detail

/// Attracting half cycle of the piecewise system: the classical limit cycle's
/// below-C0 arc plus the crossing pair (p-, p+). Throws NoCycle outside the
/// (lambda_H, lambda_sc) window.
inline HalfCycle half_cycle(const SystemSpec& spec, double lambda,
                            const IntegratorOptions& opts = {}) {
    if (!spec.canard()) throw PreconditionError("half_cycle: canard kinds only");
    if (lambda <= lambda_H_numeric(spec))
        throw NoCycle("half_cycle: lambda at or below the Hopf value");
    const SystemSpec sp = with_lambda(spec, lambda);
    const auto pair = detail::iterate_cycle(sp, opts);
    if (!pair) throw NoCycle("half_cycle: no attracting cycle at lambda=" + std::to_string(lambda));
    const auto [pm, pp] = *pair;

    // final instrumented revolution of the classical flow from (pm, pm^2)
    const SystemSpec cls = as_classical(sp);
    StopPolicy up;
    up.stop_on_enter_c0 = true;
    up.max_time = 2000.0 / sp.params.eps;
    IntegratorOptions o = opts;
    o.store_samples = true;
    const auto rev = integrate(cls, {pm, pm * pm}, up, o);
    if (!rev.ended_with(EventKind::EnterC0))
        throw NoCycle("half_cycle: final revolution lost the cycle");

    HalfCycle hc;
    hc.p_minus = {pm, pm * pm};
    hc.p_plus = rev.last_event().point;
    for (const auto& arc : rev.arcs)
        for (const auto& [t, q] : arc.samples)
            if (switching_value(q) <= 0.0) hc.arc.push_back(q);
    hc.arc.front() = hc.p_minus;
    hc.arc.back() = hc.p_plus;
    if (!(hc.p_minus.x < hc.p_plus.x))
        throw NoCycle("half_cycle: degenerate crossing pair");

    // the piecewise orbit entering at P- on C_d must reproduce the arc
    StopPolicy pw;
    pw.stop_on_enter_c0 = true;
    pw.max_time = up.max_time;
    IntegratorOptions o2 = opts;
    o2.store_samples = false;
    const auto pwt = integrate(sp, {pm, pm * pm}, pw, o2);
    if (pwt.ended_with(EventKind::EnterC0))
        hc.verify_residual = std::abs(pwt.last_event().point.x - hc.p_plus.x);
    else
        hc.verify_residual = std::numeric_limits<double>::infinity();
    return hc;
}

/// Upper end of the cycle window by bisection on cycle existence; returns the
/// last cycle-bearing bracket end, so lambda_c_numeric - lambda_sc stays
/// positive structurally.
inline double lambda_sc_numeric(const SystemSpec& spec, double tol = 1e-11,
                                const IntegratorOptions& opts = {}) {
    if (!spec.canard()) throw PreconditionError("lambda_sc_numeric: canard kinds only");
    const double lc = lambda_c_numeric(spec, std::min(tol, 1e-11), opts);
    const double lH = lambda_H_numeric(spec);
    auto exists = [&](double lam) {
        return detail::iterate_cycle(with_lambda(spec, lam), opts).has_value();
    };
    double lo = 0.5 * (lH + lc);
    double hi = lc + std::max(1e-6, 0.01 * spec.params.eps * spec.params.eps);
    if (!exists(lo)) throw BracketFailure("lambda_sc_numeric: no cycle at the lower bracket end");
    if (exists(hi)) throw BracketFailure("lambda_sc_numeric: cycle persists above lambda_c");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (exists(mid)) lo = mid;
        else hi = mid;
    }
    return lo;
}

/// lambda_* located as the parameter where p_+ leaves the U_2^2 collar.
inline double lambda_star_numeric(const SystemSpec& spec, const USetConfig& cfg,
                                  const IntegratorOptions& opts = {}) {
    const double lH = lambda_H_numeric(spec);
    const double lsc = lambda_sc_numeric(spec, 1e-9, opts);
    auto pplus_in_collar = [&](double lam) {
        const HalfCycle hc = half_cycle(spec, lam, opts);
        const SystemSpec sp = with_lambda(spec, lam);
        const auto u = nullcline_abscissa(sp, hc.p_plus.y);
        if (!u) return false;
        const double r2 = std::sqrt(sp.params.eps);
        const double xt2 = (hc.p_plus.x - *u) / r2;
        const double w = cfg.C5 * (sp.params.eps + std::abs(lam));
        return std::abs(xt2) < w;
    };
    double lo = lH + std::max(1e-8, 1e-4 * (lsc - lH));
    double hi = lsc - std::max(1e-7, 1e-4 * (lsc - lH));
    if (!pplus_in_collar(lo))
        throw BracketFailure("lambda_star_numeric: p_+ already outside the collar near lambda_H");
    if (pplus_in_collar(hi))
        throw BracketFailure("lambda_star_numeric: p_+ still inside the collar near lambda_sc");
    for (int i = 0; i < 40 && hi - lo > 1e-7; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (pplus_in_collar(mid)) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct CriticalValues {
    double lambda_H_lead = 0.0;
    double lambda_c_lead = 0.0;
    std::optional<double> lambda_H_num, lambda_c_num, lambda_sc_num, lambda_star_num;
};

// ---------------------------------------------------------------------------
// Linearized return map in chart K2.
// ---------------------------------------------------------------------------

struct ReturnMapPrediction {
    double reentry_x2 = 0.0;
    double flight_time = 0.0;
};

/// Closed-form reentry of the linearization at p_e in chart K2: abscissa
/// lambda2 + c after time pi/k, k = sqrt(|(2 lambda2 - r2 a2)^2 - 4|)/2.
inline ReturnMapPrediction return_map_linearized(double r2, double lambda2, double a2, double c) {
    if (!(c > 0.0)) throw PreconditionError("return_map_linearized: c must be positive");
    const double w = 2.0 * lambda2 - r2 * a2;
    if (w * w >= 4.0)
        throw DomainError("return_map_linearized: (2 lambda2 - r2 a2)^2 >= 4, rotation degenerates");
    const double k = 0.5 * std::sqrt(std::abs(w * w - 4.0));
    return {lambda2 + c, M_PI / k};
}

// ---------------------------------------------------------------------------
// The separating line P_c for lambda > lambda_c.
// ---------------------------------------------------------------------------

struct PcResult {
    enum class Kind { Abscissa, MinusInfinity, AtCollarEdge } kind = Kind::Abscissa;
    double x = 0.0;

    bool is_abscissa() const { return kind == Kind::Abscissa; }
};

namespace detail {

// True if the parabola start (x0, x0^2) re-enters C0 before leaving V.
inline bool parabola_start_reenters(const SystemSpec& spec, double x0,
                                    const IntegratorOptions& opts) {
    StopPolicy stop;
    stop.stop_on_enter_c0 = true;
    stop.max_time = 400.0 * spec.params.rho * spec.params.rho / spec.params.eps + 1e4;
    IntegratorOptions o = opts;
    o.store_samples = false;
    const auto traj = integrate(spec, {x0, x0 * x0}, stop, o);
    if (traj.ended_with(EventKind::EnterC0)) return true;
    if (traj.ended_with(EventKind::ExitV)) return false;
    throw BracketFailure("find_Pc: start at x0=" + std::to_string(x0) + " reached no class");
}

} // namespace detail

/// Boundary abscissa between parabola starts that escape below C0 (left
/// class) and those that re-enter C0 (right class), for lambda > lambda_c.
inline PcResult find_Pc(const SystemSpec& spec, double lambda,
                        std::optional<double> lambda_c_hint = std::nullopt,
                        const IntegratorOptions& opts = {}, const USetConfig& cfg = {}) {
    if (!spec.canard()) throw PreconditionError("find_Pc: canard kinds only");
    const SystemSpec sp = with_lambda(spec, lambda);
    const double lc = lambda_c_hint ? *lambda_c_hint : lambda_c_numeric(spec, -1.0, opts);
    if (!(lambda > lc) || lambda > spec.params.lambda0 + 1e-15)
        throw PreconditionError("find_Pc: requires lambda in (lambda_c_numeric, lambda0]");

    // right end: the rightmost U0^- abscissa on the parabola inside V
    const double pe_x = equilibrium_point(sp).x;
    double lo = -sp.params.rho * 0.999;
    double hi = pe_x;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        const auto lbl = classify_U(sp, {mid, mid * mid}, cfg);
        if (lbl.region == RegionLabel::Uminus) lo = mid;
        else hi = mid;
    }
    const double x_right = lo - 1e-9;
    const double x_left = -sp.params.rho * 0.999;

    const bool right_reenters = detail::parabola_start_reenters(sp, x_right, opts);
    if (!right_reenters) return {PcResult::Kind::AtCollarEdge, x_right};
    const bool left_reenters = detail::parabola_start_reenters(sp, x_left, opts);
    if (left_reenters) return {PcResult::Kind::MinusInfinity, x_left};

    double a = x_left, b = x_right;  // a escapes, b reenters
    while (b - a > 1e-8) {
        const double mid = 0.5 * (a + b);
        if (detail::parabola_start_reenters(sp, mid, opts)) b = mid;
        else a = mid;
    }
    return {PcResult::Kind::Abscissa, 0.5 * (a + b)};
}

// ---------------------------------------------------------------------------
// Orbit classifier.
// ---------------------------------------------------------------------------

enum class OrbitOutcome {
    ExitsInU0plus,
    ExitsBelowC0,
    ConvergesToEquilibriumSide,
    HalfCycleExterior,
    HalfCycleInterior,
    MaximalCanardShadow,
    Unclassifiable
};

inline std::string to_string(OrbitOutcome o) {
    switch (o) {
        case OrbitOutcome::ExitsInU0plus: return "ExitsInU0plus";
        case OrbitOutcome::ExitsBelowC0: return "ExitsBelowC0";
        case OrbitOutcome::ConvergesToEquilibriumSide: return "ConvergesToEquilibriumSide";
        case OrbitOutcome::HalfCycleExterior: return "HalfCycleExterior";
        case OrbitOutcome::HalfCycleInterior: return "HalfCycleInterior";
        case OrbitOutcome::MaximalCanardShadow: return "MaximalCanardShadow";
        case OrbitOutcome::Unclassifiable: return "Unclassifiable";
    }
    return "?";
}

enum class LineRelation { NA, Left, On, Right };

inline std::string to_string(LineRelation r) {
    switch (r) {
        case LineRelation::NA: return "na";
        case LineRelation::Left: return "left";
        case LineRelation::On: return "on";
        case LineRelation::Right: return "right";
    }
    return "?";
}

/// Total left/right relation of a point to a vertical line through x = c,
/// decided through relative_position with the documented 1e-8 margin.
inline LineRelation relation_to_vertical(PlanePoint p, double c, double margin = 1e-8) {
    const Polyline point{p};
    const Polyline line{{c, -1.0}, {c, 1.0}};
    const bool left = relative_position(point, line, PositionMode::Left, PositionScope::Total, margin);
    const bool right = relative_position(line, point, PositionMode::Left, PositionScope::Total, margin);
    if (left && right) return LineRelation::On;
    if (left) return LineRelation::Left;
    if (right) return LineRelation::Right;
    return LineRelation::NA;
}

struct OrbitClass {
    OrbitOutcome outcome = OrbitOutcome::Unclassifiable;
    Event exit;
    std::vector<RegionLabel> crossed;          // labels at crossing events and exit
    LineRelation rel_P_minus = LineRelation::NA;  // exit vs P-
    LineRelation rel_P_plus = LineRelation::NA;   // exit vs P+
    LineRelation start_rel_P_c = LineRelation::NA;
};

struct ClassificationContext {
    USetConfig cfg;
    double lambda_H_num = 0.0;
    std::optional<HalfCycle> cycle;
    std::optional<double> lambda_c_num;
    std::optional<PcResult> pc;
};

/// Builds the per-lambda context the classifier compares against: the half
/// cycle in the cycle window and P_c above lambda_c.
inline ClassificationContext make_classification_context(const SystemSpec& spec,
                                                          const USetConfig& cfg = {},
                                                          const IntegratorOptions& opts = {}) {
    ClassificationContext ctx;
    ctx.cfg = cfg;
    if (!spec.canard()) return ctx;  // fold kinds carry no collar context
    ctx.lambda_H_num = lambda_H_numeric(spec);
    const double lam = spec.params.lambda;
    if (lam > ctx.lambda_H_num) {
        try {
            ctx.cycle = half_cycle(spec, lam, opts);
        } catch (const NoCycle&) {
        }
    }
    if (!ctx.cycle && lam > lambda_c_leading(spec.params) - 0.5 * std::abs(lambda_H_leading(spec.params))) {
        const double lc = lambda_c_numeric(spec, 0.01 * spec.params.eps * spec.params.eps, opts);
        ctx.lambda_c_num = lc;
        if (lam > lc) ctx.pc = find_Pc(spec, lam, lc, opts, cfg);
    }
    return ctx;
}

/// Runs the orbit and derives its regime class; the context caches
/// the half cycle / P_c comparisons.
inline OrbitClass classify_orbit(const SystemSpec& spec, PlanePoint p0,
                                 const ClassificationContext& ctx,
                                 const IntegratorOptions& opts = {}) {
    if (spec.canard()) {
        const auto l0 = classify_U(spec, p0, ctx.cfg);
        if (l0.region == RegionLabel::Uzero)
            throw PreconditionError("classify_orbit: start lies inside the U^0 collar");
    }
    StopPolicy stop;
    stop.max_time = 2000.0 / spec.params.eps;
    stop.stop_on_equilibrium = true;
    IntegratorOptions o = opts;
    o.store_samples = true;
    const auto traj = integrate(spec, p0, stop, o);

    OrbitClass oc;
    oc.exit = traj.last_event();
    auto label_at = [&](const PlanePoint& q) -> std::optional<RegionLabel> {
        if (!spec.canard()) return std::nullopt;
        // event localization can leave exit points a few ulp outside the
        // closed V boundary; retry once nudged toward the origin
        for (double shrink : {0.0, 1e-12, 1e-9}) {
            const PlanePoint qq{q.x * (1.0 - shrink), q.y * (1.0 - shrink)};
            try {
                return classify_U(spec, qq, ctx.cfg).region;
            } catch (const DomainError&) {
            }
        }
        return std::nullopt;
    };
    if (auto l = label_at(p0)) oc.crossed.push_back(*l);
    std::optional<double> reentry_x;
    for (const auto& ev : traj.events) {
        if (ev.kind == EventKind::EnterC0) reentry_x = ev.point.x;
        if (ev.kind == EventKind::EnterC0 || ev.kind == EventKind::ExitC0)
            if (auto l = label_at(ev.point)) oc.crossed.push_back(*l);
    }
    if (auto l = label_at(oc.exit.point)) oc.crossed.push_back(*l);

    if (ctx.cycle) {
        oc.rel_P_minus = relation_to_vertical(oc.exit.point, ctx.cycle->p_minus.x);
        oc.rel_P_plus = relation_to_vertical(oc.exit.point, ctx.cycle->p_plus.x);
    }
    if (ctx.pc && ctx.pc->is_abscissa())
        oc.start_rel_P_c = relation_to_vertical(p0, ctx.pc->x);

    const bool started_below = switching_value(p0) < 0.0;
    switch (oc.exit.kind) {
        case EventKind::ExitV: {
            if (!spec.canard()) {
                oc.outcome = switching_value(oc.exit.point) < 0.0 ? OrbitOutcome::ExitsBelowC0
                                                                  : OrbitOutcome::Unclassifiable;
                break;
            }
            if (switching_value(oc.exit.point) >= -1e-12) {
                const auto l = label_at(oc.exit.point);
                if (l && *l == RegionLabel::Uplus) {
                    if (ctx.cycle && started_below && reentry_x) {
                        if (*reentry_x > ctx.cycle->p_plus.x + 1e-8)
                            oc.outcome = OrbitOutcome::HalfCycleExterior;
                        else if (*reentry_x > ctx.cycle->p_minus.x + 1e-8)
                            oc.outcome = OrbitOutcome::HalfCycleInterior;
                        else
                            oc.outcome = OrbitOutcome::ExitsInU0plus;
                    } else {
                        oc.outcome = OrbitOutcome::ExitsInU0plus;
                    }
                } else {
                    oc.outcome = OrbitOutcome::Unclassifiable;  // exit inside U^0 (or in U^-)
                }
            } else {
                // left V below C0: maximal-canard shadowing vs jump escape
                double track_lo = 0.0, track_hi = 0.0;
                bool tracking = false;
                const Params& P = spec.params;
                for (const auto& arc : traj.arcs) {
                    if (arc.regime != Regime::Exterior) continue;
                    for (const auto& [t, q] : arc.samples) {
                        if (!(q.x > 0.0) || !(q.y > P.eps) || !(q.y < P.rho * P.rho)) continue;
                        const double xr = slow_manifold_x(q.y, Branch::Repelling, P);
                        if (std::abs(q.x - xr) < P.eps) {
                            if (!tracking) { track_lo = track_hi = q.x; tracking = true; }
                            track_lo = std::min(track_lo, q.x);
                            track_hi = std::max(track_hi, q.x);
                        }
                    }
                }
                oc.outcome = (tracking && track_hi - track_lo > 0.5 * P.rho)
                                 ? OrbitOutcome::MaximalCanardShadow
                                 : OrbitOutcome::ExitsBelowC0;
            }
            break;
        }
        case EventKind::Equilibrium:
            oc.outcome = OrbitOutcome::ConvergesToEquilibriumSide;
            break;
        case EventKind::MaxTime: {
            const double gv = spec.canard() ? spec.g_eval(oc.exit.point.x, oc.exit.point.y) : 1.0;
            oc.outcome = std::abs(gv) < 1e-6 ? OrbitOutcome::ConvergesToEquilibriumSide
                                             : OrbitOutcome::Unclassifiable;
            break;
        }
        default:
            oc.outcome = OrbitOutcome::Unclassifiable;
    }
    return oc;
}

inline OrbitClass classify_orbit(const SystemSpec& spec, PlanePoint p0,
                                 const IntegratorOptions& opts = {}) {
    return classify_orbit(spec, p0, make_classification_context(spec, {}, opts), opts);
}

// ---------------------------------------------------------------------------
// Fold scaling fit.
// ---------------------------------------------------------------------------

struct FoldScalingFit {
    double exponent = 0.0;
    std::vector<double> y_out;
};

/// Least-squares slope of log|y_out| against log eps for the fold transition
/// map from a fixed entry abscissa.
inline FoldScalingFit fold_scaling_fit(const SystemSpec& spec, const std::vector<double>& eps_list,
                                       double x_in = 0.0, const IntegratorOptions& opts = {}) {
    if (spec.kind != SystemKind::PiecewiseFold && spec.kind != SystemKind::ClassicalFold)
        throw PreconditionError("fold_scaling_fit: fold kinds only");
    if (eps_list.size() < 2) throw PreconditionError("fold_scaling_fit: need at least two eps");
    const auto [mn, mx] = std::minmax_element(eps_list.begin(), eps_list.end());
    if (*mx / *mn < std::pow(10.0, 1.5))
        throw PreconditionError("fold_scaling_fit: eps range must span >= 1.5 decades");
    if (x_in == 0.0) x_in = -(spec.params.rho + 0.1);

    FoldScalingFit fit;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double e : eps_list) {
        SystemSpec s = spec;
        s.params.eps = e;
        const double yo = transition_map_fold(s, x_in, opts);
        fit.y_out.push_back(yo);
        const double lx = std::log(e), ly = std::log(std::abs(yo));
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    const double n = static_cast<double>(eps_list.size());
    fit.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return fit;
}

} // namespace ducktrap
