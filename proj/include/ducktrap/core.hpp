// Piecewise-smooth planar fast-slow vector fields (fold and canard normal
// forms) and the geometric predicates the rest of the library builds on.
//
// Fast-time dynamics:
//   canard kinds:  x' = -y + x^2 below the parabola, 0 inside C0;
//                  y' = eps * g(x, y, lambda),  g = x g1 - lambda g2 + y g3
//   fold kinds:    x' = -y + x^2 below, h(x, y) inside;  y' = -eps
//
// C0 = { y >= x^2 } is the two-dimensional critical manifold, its boundary
// C_d = { y = x^2 } the switching parabola.
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "ducktrap/errors.hpp"

namespace ducktrap {

struct PlanePoint {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const PlanePoint&, const PlanePoint&) = default;
};

inline bool finite(const PlanePoint& p) {
    return std::isfinite(p.x) && std::isfinite(p.y);
}

/// Signed distance to the switching parabola: > 0 inside C0, 0 on C_d.
/// This is the single branch discriminator used everywhere.
inline double switching_value(const PlanePoint& p) {
    return p.y - p.x * p.x;
}

struct Params {
    double eps = 0.01;
    double lambda = 0.0;
    double a1 = 1.0;
    double a2 = 0.9;
    double rho = 0.3;
    double mu = 0.3;
    double lambda0 = 0.05;
    double x10 = 3.0;

    double eps0() const { return rho * rho; }

    void validate() const {
        if (!(rho > 0.0) || !(mu > 0.0) || !(lambda0 > 0.0) || !(x10 > 0.0))
            throw PreconditionError("Params: rho, mu, lambda0, x10 must be positive");
        if (!(a1 > 0.0) || !(a2 > 0.0))
            throw PreconditionError("Params: a1, a2 must be positive");
        if (!(eps > 0.0) || eps > eps0())
            throw PreconditionError("Params: need 0 < eps <= rho^2");
        if (std::abs(lambda) > lambda0)
            throw PreconditionError("Params: |lambda| exceeds lambda0");
    }
};

/// Scalar coefficient function of (x, y, lambda).
using CoeffFn = std::function<double(double, double, double)>;

/// The slow-equation family g = x*g1 - lambda*g2 + y*g3 with
/// g1(0,0,0) = g2(0,0,0) = 1, dx g1(0,0,0) = a1, g3(0,0,0) = a2.
class GFamily {
  public:
    GFamily(CoeffFn g1, CoeffFn g2, CoeffFn g3)
        : g1_(std::move(g1)), g2_(std::move(g2)), g3_(std::move(g3)) {}

    double operator()(double x, double y, double lambda) const {
        return x * g1_(x, y, lambda) - lambda * g2_(x, y, lambda) + y * g3_(x, y, lambda);
    }

    double g1(double x, double y, double l) const { return g1_(x, y, l); }
    double g2(double x, double y, double l) const { return g2_(x, y, l); }
    double g3(double x, double y, double l) const { return g3_(x, y, l); }

    /// Checks the normalization at the origin and consistency with (a1, a2).
    void validate(double a1, double a2) const {
        if (std::abs(g1_(0, 0, 0) - 1.0) > 1e-12)
            throw PreconditionError("GFamily: g1(0,0,0) != 1");
        if (std::abs(g2_(0, 0, 0) - 1.0) > 1e-12)
            throw PreconditionError("GFamily: g2(0,0,0) != 1");
        const double h = 1e-6;
        const double dg1 = (g1_(h, 0, 0) - g1_(-h, 0, 0)) / (2 * h);
        if (std::abs(dg1 - a1) > 1e-6 * (1.0 + std::abs(a1)))
            throw PreconditionError("GFamily: dx g1(0,0,0) inconsistent with a1");
        if (std::abs(g3_(0, 0, 0) - a2) > 1e-9 * (1.0 + std::abs(a2)))
            throw PreconditionError("GFamily: g3(0,0,0) inconsistent with a2");
    }

    /// The family used in the numerical figures: g = x(1+x) - lambda + 0.9 y.
    static GFamily paper_fig() {
        return GFamily([](double x, double, double) { return 1.0 + x; },
                       [](double, double, double) { return 1.0; },
                       [](double, double, double) { return 0.9; });
    }

    /// Affine coefficient table: gi = ci0 + ci1 x + ci2 y + ci3 lambda.
    static GFamily affine(const std::array<double, 4>& c1,
                          const std::array<double, 4>& c2,
                          const std::array<double, 4>& c3) {
        auto mk = [](std::array<double, 4> c) {
            return CoeffFn([c](double x, double y, double l) {
                return c[0] + c[1] * x + c[2] * y + c[3] * l;
            });
        };
        return GFamily(mk(c1), mk(c2), mk(c3));
    }

  private:
    CoeffFn g1_, g2_, g3_;
};

enum class SystemKind { ClassicalFold, PiecewiseFold, ClassicalCanard, PiecewiseCanard };

inline std::string to_string(SystemKind k) {
    switch (k) {
        case SystemKind::ClassicalFold: return "classical-fold";
        case SystemKind::PiecewiseFold: return "piecewise-fold";
        case SystemKind::ClassicalCanard: return "classical-canard";
        case SystemKind::PiecewiseCanard: return "piecewise-canard";
    }
    return "?";
}

/// Interior replacement field h(x, y) for the piecewise fold; empty means h == 0.
using InteriorFn = std::function<double(double, double)>;

struct SystemSpec {
    SystemKind kind = SystemKind::PiecewiseCanard;
    Params params;
    std::optional<GFamily> g;  // canard kinds only
    InteriorFn h;              // PiecewiseFold only; empty == zero field

    bool canard() const {
        return kind == SystemKind::ClassicalCanard || kind == SystemKind::PiecewiseCanard;
    }
    bool piecewise() const {
        return kind == SystemKind::PiecewiseFold || kind == SystemKind::PiecewiseCanard;
    }
    bool has_h() const { return static_cast<bool>(h); }

    double g_eval(double x, double y) const { return (*g)(x, y, params.lambda); }
    double h_eval(double x, double y) const { return h ? h(x, y) : 0.0; }

    void validate() const {
        params.validate();
        if (canard()) {
            if (!g) throw PreconditionError("SystemSpec: canard kind requires a GFamily");
            g->validate(params.a1, params.a2);
        }
    }

    static SystemSpec paper_fig(double eps = 0.01, double lambda = 0.0) {
        SystemSpec s;
        s.kind = SystemKind::PiecewiseCanard;
        s.params.eps = eps;
        s.params.lambda = lambda;
        s.params.a1 = 1.0;
        s.params.a2 = 0.9;
        s.g = GFamily::paper_fig();
        return s;
    }
};

struct Velocity {
    double dx = 0.0;
    double dy = 0.0;
};

/// Fast-time right-hand side at p. On C_d the interior branch is taken;
/// both branches agree there for the canard kinds and for h == 0.
inline Velocity eval_rhs(const SystemSpec& spec, const PlanePoint& p) {
    if (!finite(p)) throw NonFiniteError("eval_rhs: non-finite coordinates");
    const double s = switching_value(p);
    Velocity v;
    switch (spec.kind) {
        case SystemKind::ClassicalFold:
            v.dx = -p.y + p.x * p.x;
            v.dy = -spec.params.eps;
            break;
        case SystemKind::PiecewiseFold:
            v.dx = s < 0.0 ? -p.y + p.x * p.x : spec.h_eval(p.x, p.y);
            v.dy = -spec.params.eps;
            break;
        case SystemKind::ClassicalCanard:
            v.dx = -p.y + p.x * p.x;
            v.dy = spec.params.eps * spec.g_eval(p.x, p.y);
            break;
        case SystemKind::PiecewiseCanard:
            v.dx = s < 0.0 ? -p.y + p.x * p.x : 0.0;
            v.dy = spec.params.eps * spec.g_eval(p.x, p.y);
            break;
    }
    return v;
}

/// Root of q(x) = g(x, x^2, lambda) on [-rho, rho]: the equilibrium p_e on C_d.
/// Bracketing bisection refined by Newton; residual below 1e-12.
inline PlanePoint equilibrium_point(const SystemSpec& spec) {
    if (!spec.canard())
        throw PreconditionError("equilibrium_point: canard kinds only");
    const double rho = spec.params.rho;
    auto q = [&](double x) { return spec.g_eval(x, x * x); };
    double lo = -rho, hi = rho;
    double qlo = q(lo), qhi = q(hi);
    if (qlo == 0.0) return {lo, lo * lo};
    if (qhi == 0.0) return {hi, hi * hi};
    if (qlo * qhi > 0.0)
        throw NoRootInWindow("equilibrium_point: no sign change of g on [-rho, rho]");
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double qm = q(mid);
        if (qm == 0.0) { lo = hi = mid; break; }
        if (qm * qlo < 0.0) hi = mid; else { lo = mid; qlo = qm; }
    }
    double x = 0.5 * (lo + hi);
    for (int i = 0; i < 8; ++i) {
        const double f = q(x);
        if (std::abs(f) < 1e-13) break;
        const double h = 1e-7 * (1.0 + std::abs(x));
        const double df = (q(x + h) - q(x - h)) / (2 * h);
        if (df == 0.0) break;
        const double xn = x - f / df;
        if (xn < -rho || xn > rho) break;
        x = xn;
    }
    if (std::abs(q(x)) >= 1e-12)
        throw NoRootInWindow("equilibrium_point: residual did not reach 1e-12");
    return {x, x * x};
}

} // namespace ducktrap
