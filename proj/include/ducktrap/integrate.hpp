// Hybrid event-driven integration of the piecewise systems: adaptive DP5(4)
// stepping with dense output, parabola-crossing and V-exit localization,
// frozen-x scalar flow inside C0 for the canard kinds, and the fold
// transition map.
#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ducktrap/blowup.hpp"
#include "ducktrap/core.hpp"
#include "ducktrap/rk.hpp"

namespace ducktrap {

enum class EventKind { EnterC0, ExitC0, ExitV, ReachSection, Equilibrium, MaxTime };

inline std::string to_string(EventKind k) {
    switch (k) {
        case EventKind::EnterC0: return "EnterC0";
        case EventKind::ExitC0: return "ExitC0";
        case EventKind::ExitV: return "ExitV";
        case EventKind::ReachSection: return "ReachSection";
        case EventKind::Equilibrium: return "Equilibrium";
        case EventKind::MaxTime: return "MaxTime";
    }
    return "?";
}

struct Event {
    EventKind kind = EventKind::MaxTime;
    double time = 0.0;
    PlanePoint point;
    std::string section;              // ReachSection only
    ExitSide side = ExitSide::None;   // ExitV only
};

inline Event make_event(EventKind kind, double time, PlanePoint point) {
    Event ev;
    ev.kind = kind;
    ev.time = time;
    ev.point = point;
    return ev;
}

enum class Regime { Interior, Exterior };

struct Arc {
    Regime regime = Regime::Exterior;
    std::vector<std::pair<double, PlanePoint>> samples;
};

struct HybridTrajectory {
    std::vector<Arc> arcs;
    std::vector<Event> events;

    const Event& last_event() const { return events.back(); }
    bool ended_with(EventKind k) const { return !events.empty() && events.back().kind == k; }
};

struct Section {
    char axis = 'x';  // 'x' or 'y'
    double value = 0.0;
    int direction = 0;  // +1 increasing, -1 decreasing, 0 both
    std::string name;
};

struct StopPolicy {
    double max_time = 1e6;
    std::vector<Section> sections;     // terminal when crossed
    bool stop_on_exit_v = true;
    bool stop_on_enter_c0 = false;
    bool stop_on_exit_c0 = false;
    bool stop_on_equilibrium = false;
    std::size_t max_crossings = 0;     // 0: unlimited parabola crossings
};

struct IntegratorOptions {
    double rtol = 1e-10;
    double atol = 1e-10;
    double max_step = 5.0;
    bool store_samples = true;
    double equilibrium_tol = 1e-12;
    double disc_radius = 4.0;
    std::size_t max_arcs = 100000;
};

namespace detail {

// Event function over raw state; for scalar interior arcs state[0] is y.
struct ArcEvent {
    std::function<double(double, const double*)> phi;
    int direction = 0;
    int id = 0;
};

// Localizes the crossing inside a dense step: bisection to ~1e-14 relative
// in time, then a short Newton polish on the residual.
template <int N>
double localize(const DenseStep<N>& ds, const ArcEvent& ev, double f0, double f1) {
    double lo = ds.t0, hi = ds.t1();
    double flo = f0;
    (void)f1;
    for (int i = 0; i < 90; ++i) {
        if (hi - lo <= 1e-14 * std::max(1.0, std::abs(hi))) break;
        const double mid = 0.5 * (lo + hi);
        const auto y = ds.eval(mid);
        const double fm = ev.phi(mid, y.data());
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    double tr = 0.5 * (lo + hi);
    const double dt = 1e-7 * ds.h;
    for (int it = 0; it < 2; ++it) {
        const auto y = ds.eval(tr);
        const double f = ev.phi(tr, y.data());
        if (f == 0.0) break;
        const double ta = std::max(ds.t0, tr - dt), tb = std::min(ds.t1(), tr + dt);
        const auto ya = ds.eval(ta), yb = ds.eval(tb);
        const double df = (ev.phi(tb, yb.data()) - ev.phi(ta, ya.data())) / (tb - ta);
        if (df == 0.0) break;
        double tn = tr - f / df;
        if (tn < ds.t0) tn = ds.t0;
        if (tn > ds.t1()) tn = ds.t1();
        tr = tn;
    }
    return tr;
}

template <int N>
struct ArcOutcome {
    double t = 0.0;
    Vec<N> y{};
    int event_id = -1;  // -1: reached t_max
};

// Runs one arc until the earliest event fires or t_max is reached.
template <int N, class Rhs, class SampleCb>
ArcOutcome<N> run_arc(Dopri5<N, Rhs>& st, double t_max, std::vector<ArcEvent>& events,
                      SampleCb&& on_sample, const std::function<bool(const Vec<N>&)>& eq_check) {
    std::vector<double> prev(events.size());
    for (std::size_t i = 0; i < events.size(); ++i)
        prev[i] = events[i].phi(st.t(), st.y().data());

    bool first_step = true;
    while (st.t() < t_max) {
        const DenseStep<N> ds = st.step(t_max);
        if (first_step) {
            // An event function that is exactly zero at the arc start (point
            // sitting on the parabola or the V boundary) takes its outgoing
            // sign just inside the step; leaving in the watched direction
            // counts as a crossing at the start itself.
            for (std::size_t i = 0; i < events.size(); ++i)
                if (prev[i] == 0.0) {
                    const double te = ds.t0 + 1e-6 * ds.h;
                    const auto ye = ds.eval(te);
                    const double fe = events[i].phi(te, ye.data());
                    if (events[i].direction != 0 &&
                        ((events[i].direction > 0 && fe > 0.0) ||
                         (events[i].direction < 0 && fe < 0.0))) {
                        ArcOutcome<N> out;
                        out.t = ds.t0;
                        out.y = ds.eval(ds.t0);
                        out.event_id = events[i].id;
                        return out;
                    }
                    prev[i] = fe;
                }
            first_step = false;
        }
        int best = -1;
        double t_best = 0.0;
        for (std::size_t i = 0; i < events.size(); ++i) {
            const double f1 = events[i].phi(st.t(), st.y().data());
            const double f0 = prev[i];
            const bool down = f0 > 0.0 && f1 <= 0.0 && f1 != f0;
            const bool up = f0 < 0.0 && f1 >= 0.0 && f1 != f0;
            const bool crossed = (events[i].direction >= 0 && up) ||
                                 (events[i].direction <= 0 && down);
            prev[i] = f1;
            if (!crossed) continue;
            const double tc = localize<N>(ds, events[i], f0, f1);
            if (best < 0 || tc < t_best) {
                best = static_cast<int>(i);
                t_best = tc;
            }
        }
        if (best >= 0) {
            ArcOutcome<N> out;
            out.t = t_best;
            out.y = ds.eval(t_best);
            out.event_id = events[best].id;
            return out;
        }
        on_sample(st.t(), st.y());
        if (eq_check && eq_check(st.y())) {
            ArcOutcome<N> out;
            out.t = st.t();
            out.y = st.y();
            out.event_id = -2;  // equilibrium
            return out;
        }
    }
    ArcOutcome<N> out;
    out.t = st.t();
    out.y = st.y();
    out.event_id = -1;
    return out;
}

// Planar hybrid model over (x, y): either the physical systems or chart K2.
struct PlanarModel {
    std::function<double(double, double)> fast;       // exterior dx/dt
    std::function<double(double, double)> slow;       // dy/dt (both regimes)
    std::function<double(double, double)> interior_dx;  // empty: x frozen inside C0
    bool smooth = false;                              // classical kinds: fast branch everywhere
    std::function<double(const PlanePoint&)> v_residual;  // empty: no V boundary
    std::function<ExitSide(const PlanePoint&)> v_side;
};

inline PlanarModel make_plane_model(const SystemSpec& spec, const IntegratorOptions& opts) {
    PlanarModel m;
    m.fast = [](double x, double y) { return -y + x * x; };
    switch (spec.kind) {
        case SystemKind::ClassicalFold:
            m.smooth = true;
            m.slow = [e = spec.params.eps](double, double) { return -e; };
            break;
        case SystemKind::PiecewiseFold:
            m.slow = [e = spec.params.eps](double, double) { return -e; };
            m.interior_dx = [&spec](double x, double y) { return spec.h_eval(x, y); };
            break;
        case SystemKind::ClassicalCanard:
            m.smooth = true;
            m.slow = [&spec](double x, double y) { return spec.params.eps * spec.g_eval(x, y); };
            break;
        case SystemKind::PiecewiseCanard:
            m.slow = [&spec](double x, double y) { return spec.params.eps * spec.g_eval(x, y); };
            break;
    }
    VGeometry vg(spec.params, opts.disc_radius);
    m.v_residual = [vg](const PlanePoint& p) { return vg.residual(p); };
    m.v_side = [vg](const PlanePoint& p) { return vg.side(p); };
    return m;
}

inline PlanarModel make_k2_model(const SystemSpec& spec, double r2, double lambda2,
                                 const IntegratorOptions& opts) {
    PlanarModel m;
    m.fast = [](double x, double y) { return -y + x * x; };
    m.slow = [&spec, r2, lambda2](double x, double y) {
        return k2_rhs_y2(spec, ChartPointK2{x, y, r2, lambda2});
    };
    const double rd = opts.disc_radius;
    m.v_residual = [rd](const PlanePoint& p) { return rd * rd - (p.x * p.x + p.y * p.y); };
    m.v_side = [](const PlanePoint&) { return ExitSide::EllipseArc; };
    return m;
}

inline HybridTrajectory run_hybrid(const PlanarModel& model, PlanePoint p0,
                                   const StopPolicy& stop, const IntegratorOptions& opts) {
    if (!finite(p0)) throw NonFiniteError("integrate: non-finite start");
    HybridTrajectory traj;
    RKOptions rk{opts.rtol, opts.atol, opts.max_step, 0.0};

    double t = 0.0;
    PlanePoint p = p0;
    const double s0 = switching_value(p);
    Regime regime;
    if (std::abs(s0) <= 4e-16 * std::max({1.0, std::abs(p.y), p.x * p.x})) {
        // start on C_d: the slow component decides which side the orbit takes
        regime = model.slow(p.x, p.y) >= 0.0 ? Regime::Interior : Regime::Exterior;
    } else {
        regime = s0 >= 0.0 ? Regime::Interior : Regime::Exterior;
    }
    Regime smooth_regime = regime;
    std::size_t crossings = 0;

    // event ids
    enum { EV_PARAB = 0, EV_V = 1, EV_SECTION_BASE = 100 };

    for (std::size_t arc_i = 0; arc_i < opts.max_arcs; ++arc_i) {
        Arc arc;
        arc.regime = model.smooth ? smooth_regime : regime;
        if (opts.store_samples) arc.samples.push_back({t, p});

        const bool frozen = !model.smooth && regime == Regime::Interior && !model.interior_dx;
        detail::ArcOutcome<2> out2;
        detail::ArcOutcome<1> out1;
        bool used_scalar = false;

        if (frozen) {
            used_scalar = true;
            const double xf = p.x;
            auto rhs = [&model, xf](double, const Vec<1>& y, Vec<1>& dy) {
                dy[0] = model.slow(xf, y[0]);
            };
            Dopri5<1, decltype(rhs)> st(rhs, rk);
            st.init(t, Vec<1>{p.y});
            std::vector<ArcEvent> evs;
            evs.push_back({[xf](double, const double* y) { return y[0] - xf * xf; }, -1, EV_PARAB});
            if (model.v_residual && stop.stop_on_exit_v)
                evs.push_back({[&model, xf](double, const double* y) {
                                   return model.v_residual({xf, y[0]});
                               },
                               -1, EV_V});
            for (std::size_t si = 0; si < stop.sections.size(); ++si) {
                const Section& sec = stop.sections[si];
                if (sec.axis != 'y') continue;  // x is frozen
                evs.push_back({[v = sec.value](double, const double* y) { return y[0] - v; },
                               sec.direction, EV_SECTION_BASE + static_cast<int>(si)});
            }
            auto sample = [&](double ts, const Vec<1>& ys) {
                if (opts.store_samples) arc.samples.push_back({ts, {xf, ys[0]}});
            };
            out1 = run_arc<1>(st, stop.max_time, evs, sample,
                              std::function<bool(const Vec<1>&)>{});
            t = out1.t;
            p = {xf, out1.y[0]};
        } else {
            const bool interior2 = !model.smooth && regime == Regime::Interior;
            auto rhs = [&model, interior2](double, const Vec<2>& z, Vec<2>& dz) {
                dz[0] = interior2 ? model.interior_dx(z[0], z[1]) : model.fast(z[0], z[1]);
                dz[1] = model.slow(z[0], z[1]);
            };
            Dopri5<2, decltype(rhs)> st(rhs, rk);
            st.init(t, Vec<2>{p.x, p.y});
            std::vector<ArcEvent> evs;
            const int pdir = model.smooth ? 0 : (regime == Regime::Interior ? -1 : +1);
            evs.push_back(
                {[](double, const double* z) { return z[1] - z[0] * z[0]; }, pdir, EV_PARAB});
            if (model.v_residual && stop.stop_on_exit_v)
                evs.push_back({[&model](double, const double* z) {
                                   return model.v_residual({z[0], z[1]});
                               },
                               -1, EV_V});
            for (std::size_t si = 0; si < stop.sections.size(); ++si) {
                const Section& sec = stop.sections[si];
                const int ax = sec.axis == 'x' ? 0 : 1;
                evs.push_back(
                    {[ax, v = sec.value](double, const double* z) { return z[ax] - v; },
                     sec.direction, EV_SECTION_BASE + static_cast<int>(si)});
            }
            auto sample = [&](double ts, const Vec<2>& zs) {
                if (opts.store_samples) arc.samples.push_back({ts, {zs[0], zs[1]}});
            };
            std::function<bool(const Vec<2>&)> eqc;
            if (stop.stop_on_equilibrium)
                eqc = [&model, &opts](const Vec<2>& z) {
                    const double fx = model.fast(z[0], z[1]);
                    const double fy = model.slow(z[0], z[1]);
                    const double sc = 1.0 + std::abs(z[0]) + std::abs(z[1]);
                    return std::max(std::abs(fx), std::abs(fy)) < opts.equilibrium_tol * sc;
                };
            out2 = run_arc<2>(st, stop.max_time, evs, sample, eqc);
            t = out2.t;
            p = {out2.y[0], out2.y[1]};
        }
        if (!finite(p)) throw NonFiniteError("integrate: trajectory became non-finite");

        const int eid = used_scalar ? out1.event_id : out2.event_id;
        if (opts.store_samples) arc.samples.push_back({t, p});
        traj.arcs.push_back(std::move(arc));

        if (eid == -1) {
            traj.events.push_back(make_event(EventKind::MaxTime, t, p));
            return traj;
        }
        if (eid == -2) {
            traj.events.push_back(make_event(EventKind::Equilibrium, t, p));
            return traj;
        }
        if (eid >= EV_SECTION_BASE) {
            const Section& sec = stop.sections[eid - EV_SECTION_BASE];
            if (sec.axis == 'x') p.x = sec.value; else p.y = sec.value;
            Event ev = make_event(EventKind::ReachSection, t, p);
            ev.section = sec.name;
            traj.events.push_back(std::move(ev));
            return traj;
        }
        if (eid == EV_V) {
            Event ev = make_event(EventKind::ExitV, t, p);
            ev.side = model.v_side ? model.v_side(p) : ExitSide::None;
            traj.events.push_back(ev);
            return traj;
        }
        // parabola crossing: snap exactly onto C_d and flip regime
        p.y = p.x * p.x;
        ++crossings;
        EventKind kind;
        if (model.smooth) {
            // ds/dt = y' on the parabola, so the slow component gives the direction
            kind = model.slow(p.x, p.y) > 0.0 ? EventKind::EnterC0 : EventKind::ExitC0;
            smooth_regime = kind == EventKind::EnterC0 ? Regime::Interior : Regime::Exterior;
        } else {
            kind = regime == Regime::Exterior ? EventKind::EnterC0 : EventKind::ExitC0;
        }
        traj.events.push_back(make_event(kind, t, p));
        if ((kind == EventKind::EnterC0 && stop.stop_on_enter_c0) ||
            (kind == EventKind::ExitC0 && stop.stop_on_exit_c0))
            return traj;
        if (stop.max_crossings && crossings >= stop.max_crossings) return traj;
        if (!model.smooth) regime = regime == Regime::Interior ? Regime::Exterior : Regime::Interior;
        if (t >= stop.max_time) {
            traj.events.push_back(make_event(EventKind::MaxTime, t, p));
            return traj;
        }
    }
    traj.events.push_back(make_event(EventKind::MaxTime, t, p));
    return traj;
}

} // namespace detail

/// Integrates a SystemSpec trajectory from p0 under the given stop policy.
inline HybridTrajectory integrate(const SystemSpec& spec, PlanePoint p0, const StopPolicy& stop,
                                  const IntegratorOptions& opts = {}) {
    spec.validate();
    if (!finite(p0)) throw NonFiniteError("integrate: non-finite start");
    const auto model = detail::make_plane_model(spec, opts);
    if (stop.stop_on_exit_v) {
        VGeometry vg(spec.params, opts.disc_radius);
        if (!vg.contains(p0))
            throw PreconditionError("integrate: start lies outside V_eps");
    }
    return detail::run_hybrid(model, p0, stop, opts);
}

/// Integrates the chart-K2 system (exact pulled-back slow term) from q0;
/// "ExitV" means leaving the disc D of radius opts.disc_radius.
inline HybridTrajectory integrate_k2(const SystemSpec& spec, double r2, double lambda2,
                                     PlanePoint q0, const StopPolicy& stop,
                                     const IntegratorOptions& opts = {}) {
    if (!spec.canard()) throw PreconditionError("integrate_k2: canard kinds only");
    const auto model = detail::make_k2_model(spec, r2, lambda2, opts);
    return detail::run_hybrid(model, q0, stop, opts);
}

/// Transition map of the fold: integrates from (x_in, rho^2) until the
/// section x = rho; returns the crossing ordinate.
inline double transition_map_fold(const SystemSpec& spec, double x_in,
                                  const IntegratorOptions& opts = {}) {
    if (spec.kind != SystemKind::PiecewiseFold && spec.kind != SystemKind::ClassicalFold)
        throw PreconditionError("transition_map_fold: fold kinds only");
    const double rho = spec.params.rho;
    if (!(x_in < -rho))
        throw PreconditionError("transition_map_fold: x_in must lie in J subset (-inf, -rho)");
    StopPolicy stop;
    stop.stop_on_exit_v = false;
    stop.sections.push_back({'x', rho, +1, "delta_out"});
    stop.max_time = 200.0 * rho * rho / spec.params.eps + 1e4;
    IntegratorOptions o = opts;
    o.store_samples = false;
    const auto traj = integrate(spec, {x_in, rho * rho}, stop, o);
    if (!traj.ended_with(EventKind::ReachSection))
        throw SectionNotReached("transition_map_fold: section x = rho not reached");
    return traj.last_event().point.y;
}

/// True iff the final arc is interior and the orbit left V inside C0.
inline bool detect_trapping(const HybridTrajectory& traj) {
    if (traj.arcs.empty() || traj.events.empty()) return false;
    return traj.arcs.back().regime == Regime::Interior &&
           traj.events.back().kind == EventKind::ExitV;
}

} // namespace ducktrap
