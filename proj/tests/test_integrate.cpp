#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ducktrap/analysis.hpp"
#include "ducktrap/integrate.hpp"

using namespace ducktrap;
using Catch::Approx;

namespace {

// Independent fine-step RK4 oracle for the reduced K2 system (r2 = lambda2 = 0):
// x' = x^2 - y below the parabola (0 inside), y' = x. Crossing located by
// stepping into the sign change and bisecting the step.
double k2_reduced_reentry_oracle(double x0, double y0, double hstep = 2e-5) {
    double x = x0, y = y0;
    auto fx = [](double x_, double y_) { return y_ < x_ * x_ ? x_ * x_ - y_ : 0.0; };
    auto fy = [](double x_, double /*y*/) { return x_; };
    bool below = y < x * x;
    for (long n = 0; n < 200000000L; ++n) {
        const double k1x = fx(x, y), k1y = fy(x, y);
        const double k2x = fx(x + 0.5 * hstep * k1x, y + 0.5 * hstep * k1y);
        const double k2y = fy(x + 0.5 * hstep * k1x, y + 0.5 * hstep * k1y);
        const double k3x = fx(x + 0.5 * hstep * k2x, y + 0.5 * hstep * k2y);
        const double k3y = fy(x + 0.5 * hstep * k2x, y + 0.5 * hstep * k2y);
        const double k4x = fx(x + hstep * k3x, y + hstep * k3y);
        const double k4y = fy(x + hstep * k3x, y + hstep * k3y);
        const double xn = x + hstep / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
        const double yn = y + hstep / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
        if (below && yn >= xn * xn && xn > 0.0) {
            // bisect the step on s = y - x^2
            double lo = 0.0, hi = 1.0;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double xm = x + mid * (xn - x), ym = y + mid * (yn - y);
                if (ym - xm * xm < 0.0) lo = mid;
                else hi = mid;
            }
            return x + 0.5 * (lo + hi) * (xn - x);
        }
        below = yn < xn * xn;
        x = xn;
        y = yn;
    }
    FAIL("oracle did not reach the parabola");
    return 0.0;
}

} // namespace

TEST_CASE("interior descent exits C0 vertically", "[integrate]") {
    const auto spec = SystemSpec::paper_fig(0.01, 0.0);
    StopPolicy stop;
    stop.stop_on_exit_c0 = true;
    const auto traj = integrate(spec, {-0.1, 0.05}, stop);
    REQUIRE(traj.ended_with(EventKind::ExitC0));
    CHECK(traj.last_event().point.x == -0.1);  // x frozen bit-exactly
    CHECK(traj.last_event().point.y == Approx(0.01).margin(1e-10));
}

TEST_CASE("K2 reduced flow: descent, level-set arc, reentry at +c", "[integrate]") {
    const auto spec = SystemSpec::paper_fig(0.01, 0.0);
    StopPolicy stop;
    stop.max_time = 1e4;
    stop.stop_on_enter_c0 = true;
    const auto traj = integrate_k2(spec, 0.0, 0.0, {-0.5, 1.25}, stop);
    REQUIRE(traj.events.size() >= 2);
    CHECK(traj.events.front().kind == EventKind::ExitC0);
    CHECK(traj.events.front().point.x == -0.5);
    CHECK(traj.events.front().point.y == Approx(0.25).margin(1e-10));
    REQUIRE(traj.ended_with(EventKind::EnterC0));
    const double reentry = traj.last_event().point.x;
    CHECK(reentry == Approx(0.5).margin(1e-6));
    CHECK(reentry == Approx(k2_reduced_reentry_oracle(-0.5, 0.25 - 1e-13)).margin(1e-6));
}

TEST_CASE("figure trajectory regressions", "[integrate]") {
    StopPolicy stop;
    stop.max_time = 4e4;
    // panel (d) parameters: lambda = 0.2 * lambda_c_appr
    {
        const auto spec = SystemSpec::paper_fig(0.01, 5e-5);
        const auto traj = integrate(spec, {-0.2, 0.09}, stop);
        REQUIRE(traj.ended_with(EventKind::ExitV));
        CHECK(traj.last_event().point.x == Approx(0.1514808875).margin(2e-6));
        CHECK(traj.last_event().side == ExitSide::TopStrip);
        CHECK(detect_trapping(traj));
    }
    // lambda = 1.5 * lambda_H_appr: re-enters close to the equilibrium
    {
        const auto spec = SystemSpec::paper_fig(0.01, -6.75e-3);
        const auto traj = integrate(spec, {-0.2, 0.09}, stop);
        REQUIRE(traj.ended_with(EventKind::ExitV));
        CHECK(traj.last_event().point.x == Approx(0.0505826326).margin(2e-6));
        CHECK(switching_value(traj.last_event().point) > 0.0);
        CHECK(detect_trapping(traj));
    }
}

TEST_CASE("event residuals and interior verticality", "[integrate][property]") {
    const auto spec = SystemSpec::paper_fig(0.01, 5e-5);
    StopPolicy stop;
    stop.max_time = 4e4;
    const auto traj = integrate(spec, {-0.2, 0.09}, stop);
    VGeometry vg(spec.params);
    for (const auto& ev : traj.events) {
        if (ev.kind == EventKind::EnterC0 || ev.kind == EventKind::ExitC0)
            CHECK(std::abs(switching_value(ev.point)) < 1e-10);
        if (ev.kind == EventKind::ExitV)
            CHECK(std::abs(vg.residual(ev.point)) < 1e-10);
    }
    for (const auto& arc : traj.arcs) {
        if (arc.regime != Regime::Interior) continue;
        REQUIRE_FALSE(arc.samples.empty());
        const double x0 = arc.samples.front().second.x;
        for (const auto& [t, p] : arc.samples) CHECK(std::abs(p.x - x0) < 1e-10);
    }
    // regimes alternate and switch exactly at the crossing events
    for (std::size_t i = 1; i < traj.arcs.size(); ++i)
        CHECK(traj.arcs[i].regime != traj.arcs[i - 1].regime);
}

TEST_CASE("step-halving changes the terminal abscissa within 10x tolerance", "[integrate]") {
    const auto spec = SystemSpec::paper_fig(0.01, -6.75e-3);
    StopPolicy stop;
    stop.max_time = 4e4;
    IntegratorOptions coarse, fine;
    coarse.rtol = coarse.atol = 1e-8;
    fine.rtol = fine.atol = 5e-9;
    const auto a = integrate(spec, {-0.2, 0.09}, stop, coarse);
    const auto b = integrate(spec, {-0.2, 0.09}, stop, fine);
    REQUIRE(a.ended_with(EventKind::ExitV));
    REQUIRE(b.ended_with(EventKind::ExitV));
    CHECK(std::abs(a.last_event().point.x - b.last_event().point.x) < 10.0 * coarse.rtol);
}

TEST_CASE("H is conserved along exterior K2 arcs", "[integrate][property]") {
    const auto spec = SystemSpec::paper_fig(0.01, 0.0);
    StopPolicy stop;
    stop.max_time = 1e4;
    stop.stop_on_enter_c0 = true;
    const auto traj = integrate_k2(spec, 0.0, 0.0, {-0.5, 1.25}, stop);
    for (const auto& arc : traj.arcs) {
        if (arc.regime != Regime::Exterior || arc.samples.size() < 2) continue;
        const auto& s0 = arc.samples.front();
        const double h0 = H_value(s0.second.x, s0.second.y);
        for (const auto& [t, p] : arc.samples) {
            const double span = std::max(1.0, t - s0.first);
            CHECK(std::abs(H_value(p.x, p.y) - h0) < 1e-8 * span);
        }
    }
}

TEST_CASE("fold transition map", "[integrate]") {
    SystemSpec fold;
    fold.kind = SystemKind::PiecewiseFold;
    fold.params.rho = 0.1;
    fold.params.eps = 1e-3;
    // oracle-frozen crossing ordinate; |y_out| = O(eps^(2/3))
    const double yo = transition_map_fold(fold, -0.2);
    CHECK(yo == Approx(-0.0167123503).margin(1e-8));
    CHECK(std::abs(yo) < 0.05);
    CHECK(std::abs(yo) > 0.0);
    // entry abscissa outside J
    CHECK_THROWS_AS(transition_map_fold(fold, -0.05), PreconditionError);

    // contraction at the default rho = 0.3: entry orbits collapse onto the
    // attracting manifold long before the fold
    SystemSpec fold3;
    fold3.kind = SystemKind::PiecewiseFold;
    fold3.params.rho = 0.3;
    fold3.params.eps = 1e-3;
    const double ya = transition_map_fold(fold3, -0.4);
    const double yb = transition_map_fold(fold3, -0.45);
    CHECK(std::abs(ya - yb) < 1e-8);
}

TEST_CASE("fold invariance: orbits below C0 stay below", "[integrate][property]") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int run = 0; run < 25; ++run) {
        SystemSpec fold;
        fold.kind = SystemKind::PiecewiseFold;
        fold.params.eps = (run % 2) ? 1e-2 : 1e-3;
        const double c0 = 0.4 * u(rng) - 0.2, cx = 0.6 * u(rng) - 0.3, cy = 0.6 * u(rng) - 0.3;
        fold.h = [c0, cx, cy](double x, double y) { return c0 + cx * x + cy * y; };
        // start below C0 with margin
        const double x0 = -0.25 + 0.5 * u(rng);
        const double y0 = x0 * x0 - 0.01 - 0.05 * u(rng);
        if (!in_V(fold.params, {x0, y0}, fold.params.eps)) continue;
        StopPolicy stop;
        stop.max_time = 1e4;
        const auto traj = integrate(fold, {x0, y0}, stop);
        for (const auto& ev : traj.events) CHECK(ev.kind != EventKind::EnterC0);
        for (const auto& arc : traj.arcs)
            for (const auto& [t, p] : arc.samples) CHECK(switching_value(p) < 1e-8);
    }
}

TEST_CASE("trapping detection", "[integrate]") {
    StopPolicy stop;
    stop.max_time = 4e4;
    // canard run ending inside C0
    const auto spec = SystemSpec::paper_fig(0.01, -6.75e-3);
    CHECK(detect_trapping(integrate(spec, {-0.2, 0.09}, stop)));
    // fold orbit below C0 never traps
    SystemSpec fold;
    fold.kind = SystemKind::PiecewiseFold;
    fold.params.eps = 1e-2;
    const auto ft = integrate(fold, {-0.2, 0.02}, stop);
    CHECK_FALSE(detect_trapping(ft));
    // large lambda, start left of P_c: escapes below C0
    const auto specL = SystemSpec::paper_fig(0.01, 0.05);
    const auto lt = integrate(specL, {-0.2, 0.09}, stop);
    REQUIRE(lt.ended_with(EventKind::ExitV));
    CHECK(switching_value(lt.last_event().point) < 0.0);
    CHECK_FALSE(detect_trapping(lt));
}

TEST_CASE("integration failures are reported", "[integrate]") {
    const auto spec = SystemSpec::paper_fig(0.01, 0.0);
    StopPolicy stop;
    CHECK_THROWS_AS(integrate(spec, {std::nan(""), 0.0}, stop), NonFiniteError);
    // a start outside V is refused while V exit detection is active
    CHECK_THROWS_AS(integrate(spec, {2.0, 2.0}, stop), PreconditionError);
    // with no stopping surface the fold fast flow blows up in finite time and
    // the step size collapses
    SystemSpec fold;
    fold.kind = SystemKind::PiecewiseFold;
    fold.params.eps = 1e-2;
    StopPolicy nothing;
    nothing.stop_on_exit_v = false;
    nothing.max_time = 1e9;
    CHECK_THROWS_AS(integrate(fold, {0.5, 0.0}, nothing), StepSizeUnderflow);
}
