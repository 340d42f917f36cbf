// Weighted polar blow-up machinery: directional charts K1/K2 for the canard
// (weights 1,2,2,1), the three fold charts (weights 1,2,3), the neighbourhood
// V_eps, and the nullcline-collar sets U^0 / U^- / U^+.
#pragma once

#include <array>
#include <cmath>
#include <optional>

#include "ducktrap/core.hpp"

namespace ducktrap {

struct ExtendedPoint {
    double x = 0.0, y = 0.0, eps = 0.0, lambda = 0.0;
};

// ---------------------------------------------------------------------------
// Canard charts. Phi1: x = r1 x1, y = r1^2, eps = r1^2 eps1, lambda = r1 lambda1.
//                Phi2: x = r2 x2, y = r2^2 y2, eps = r2^2, lambda = r2 lambda2.
// ---------------------------------------------------------------------------

struct ChartPointK1 {
    double x1 = 0.0, r1 = 0.0, eps1 = 0.0, lambda1 = 0.0;
};

struct ChartPointK2 {
    double x2 = 0.0, y2 = 0.0, r2 = 0.0, lambda2 = 0.0;
};

inline ExtendedPoint phi1_push(const ChartPointK1& q) {
    return {q.r1 * q.x1, q.r1 * q.r1, q.r1 * q.r1 * q.eps1, q.r1 * q.lambda1};
}

inline ChartPointK1 phi1_pull(double x, double y, double eps, double lambda) {
    if (!(y > 0.0)) throw DomainError("phi1_pull: requires y > 0");
    const double r1 = std::sqrt(y);
    return {x / r1, r1, eps / y, lambda / r1};
}

inline ExtendedPoint phi2_push(const ChartPointK2& q) {
    return {q.r2 * q.x2, q.r2 * q.r2 * q.y2, q.r2 * q.r2, q.r2 * q.lambda2};
}

inline ChartPointK2 phi2_pull(double x, double y, double eps, double lambda) {
    if (!(eps > 0.0)) throw DomainError("phi2_pull: requires eps > 0");
    const double r2 = std::sqrt(eps);
    return {x / r2, y / eps, r2, lambda / r2};
}

// ---------------------------------------------------------------------------
// The neighbourhood V_eps: union of the K1 strip and the K2 disc image.
// ---------------------------------------------------------------------------

enum class ExitSide { TopStrip, Left, Right, EllipseArc, None };

/// Geometry of V_eps for one working leaf eps. The disc D in chart K2 has
/// radius disc_radius (paper: "sufficiently large"; default 4).
struct VGeometry {
    double rho = 0.3;
    double x10 = 3.0;
    double eps = 0.01;
    double disc_radius = 4.0;

    VGeometry() = default;
    VGeometry(const Params& p, double disc = 4.0)
        : rho(p.rho), x10(p.x10), eps(p.eps), disc_radius(disc) {}

    // positive inside the strip {eps < y <= rho^2, |x| < x10 sqrt(y)}
    double strip_residual(const PlanePoint& p) const {
        if (!(p.y > 0.0)) return -1.0;
        return std::min({p.y - eps, rho * rho - p.y, x10 * std::sqrt(p.y) - std::abs(p.x)});
    }

    // positive inside the ellipse image of the K2 disc
    double ellipse_residual(const PlanePoint& p) const {
        const double x2 = p.x / std::sqrt(eps);
        const double y2 = p.y / eps;
        return disc_radius * disc_radius - (x2 * x2 + y2 * y2);
    }

    double residual(const PlanePoint& p) const {
        return std::max(strip_residual(p), ellipse_residual(p));
    }

    bool contains(const PlanePoint& p) const {
        // top edge y = rho^2 closed, the rest open
        if (p.y > 0.0 && p.y > eps && p.y <= rho * rho &&
            std::abs(p.x) < x10 * std::sqrt(p.y))
            return true;
        return ellipse_residual(p) > 0.0;
    }

    ExitSide side(const PlanePoint& p) const {
        const double se = ellipse_residual(p);
        const double ss = strip_residual(p);
        if (se >= ss) return ExitSide::EllipseArc;
        if (!(p.y > 0.0)) return ExitSide::EllipseArc;
        const double top = rho * rho - p.y;
        const double lat = x10 * std::sqrt(p.y) - std::abs(p.x);
        const double bot = p.y - eps;
        if (top <= lat && top <= bot) return ExitSide::TopStrip;
        return p.x < 0.0 ? ExitSide::Left : ExitSide::Right;
    }
};

inline bool in_V(const Params& params, const PlanePoint& p, double eps, double disc_radius = 4.0) {
    if (!(eps > 0.0) || eps > params.rho * params.rho)
        throw PreconditionError("in_V: need 0 < eps <= rho^2");
    VGeometry vg(params, disc_radius);
    vg.eps = eps;
    return vg.contains(p);
}

// ---------------------------------------------------------------------------
// Desingularized canard chart fields. F and the K2 slow component are
// evaluated from the exact pulled-back g, so the higher-order remainder is
// realized rather than truncated.
// ---------------------------------------------------------------------------

struct VelK1 {
    double dx1 = 0.0, dr1 = 0.0, deps1 = 0.0, dlambda1 = 0.0;
};

struct VelK2 {
    double dx2 = 0.0, dy2 = 0.0;  // r2' = 0, lambda2' = 0
};

/// F(r1, x1, eps1, lambda1) = g(Phi1(q)) / r1, with the exact r1 -> 0 limit
/// x1 g1(0,0,0) - lambda1 g2(0,0,0).
inline double k1_F(const SystemSpec& spec, const ChartPointK1& q) {
    const GFamily& g = *spec.g;
    if (q.r1 == 0.0)
        return q.x1 * g.g1(0, 0, 0) - q.lambda1 * g.g2(0, 0, 0);
    const double x = q.r1 * q.x1, y = q.r1 * q.r1, l = q.r1 * q.lambda1;
    return g(x, y, l) / q.r1;
}

inline bool in_V1(const Params& p, const ChartPointK1& q) {
    return std::abs(q.x1) < p.x10 && std::abs(q.r1) <= p.rho && q.eps1 >= 0.0 &&
           q.eps1 < 1.0 && std::abs(q.lambda1) < p.mu;
}

inline VelK1 k1_canard_field(const SystemSpec& spec, const ChartPointK1& q) {
    if (!spec.canard()) throw PreconditionError("k1_canard_field: canard kinds only");
    if (!in_V1(spec.params, q)) throw DomainError("k1_canard_field: point outside V1");
    const double F = k1_F(spec, q);
    VelK1 v;
    v.dx1 = std::abs(q.x1) > 1.0 ? -1.0 + q.x1 * q.x1 - 0.5 * q.eps1 * q.x1 * F
                                 : -0.5 * q.eps1 * q.x1 * F;
    v.dr1 = 0.5 * q.r1 * q.eps1 * F;
    v.deps1 = -q.eps1 * q.eps1 * F;
    v.dlambda1 = -0.5 * q.lambda1 * q.eps1 * F;
    return v;
}

/// Slow component of the K2 field: g(Phi2(q)) / r2 with the exact r2 -> 0
/// limit x2 g1(0,0,0) - lambda2 g2(0,0,0).
inline double k2_rhs_y2(const SystemSpec& spec, const ChartPointK2& q) {
    const GFamily& g = *spec.g;
    if (q.r2 == 0.0)
        return q.x2 * g.g1(0, 0, 0) - q.lambda2 * g.g2(0, 0, 0);
    const double x = q.r2 * q.x2, y = q.r2 * q.r2 * q.y2, l = q.r2 * q.lambda2;
    return g(x, y, l) / q.r2;
}

inline bool in_V2(const Params& p, const ChartPointK2& q, double disc_radius = 4.0) {
    return q.x2 * q.x2 + q.y2 * q.y2 <= disc_radius * disc_radius && q.r2 >= 0.0 &&
           q.r2 <= p.rho && std::abs(q.lambda2) < p.mu;
}

inline VelK2 k2_canard_field(const SystemSpec& spec, const ChartPointK2& q,
                             double disc_radius = 4.0) {
    if (!spec.canard()) throw PreconditionError("k2_canard_field: canard kinds only");
    if (!in_V2(spec.params, q, disc_radius)) throw DomainError("k2_canard_field: point outside V2");
    VelK2 v;
    v.dx2 = q.y2 < q.x2 * q.x2 ? -q.y2 + q.x2 * q.x2 : 0.0;
    v.dy2 = k2_rhs_y2(spec, q);
    return v;
}

// ---------------------------------------------------------------------------
// Fold charts, weights (1, 2, 3). Coordinate orderings:
//   K1f: (x1, r1, eps1)   x = r1 x1, y = r1^2,    eps = r1^3 eps1
//   K2f: (x2, y2, r2)     x = r2 x2, y = r2^2 y2, eps = r2^3
//   K3f: (r3, y3, eps3)   x = r3,    y = r3^2 y3, eps = r3^3 eps3
// ---------------------------------------------------------------------------

enum class FoldChart { K1f, K2f, K3f };

struct FoldChartPoint {
    FoldChart chart = FoldChart::K1f;
    std::array<double, 3> coords{};
};

inline std::array<double, 3> fold_push(const FoldChartPoint& q) {
    const auto& c = q.coords;
    switch (q.chart) {
        case FoldChart::K1f: return {c[1] * c[0], c[1] * c[1], c[1] * c[1] * c[1] * c[2]};
        case FoldChart::K2f: return {c[2] * c[0], c[2] * c[2] * c[1], c[2] * c[2] * c[2]};
        case FoldChart::K3f: return {c[0], c[0] * c[0] * c[1], c[0] * c[0] * c[0] * c[2]};
    }
    return {};
}

inline FoldChartPoint fold_pull(FoldChart chart, double x, double y, double eps) {
    FoldChartPoint q;
    q.chart = chart;
    switch (chart) {
        case FoldChart::K1f: {
            if (!(y > 0.0)) throw DomainError("fold_pull K1f: requires y > 0");
            const double r1 = std::sqrt(y);
            q.coords = {x / r1, r1, eps / (y * r1)};
            break;
        }
        case FoldChart::K2f: {
            if (!(eps > 0.0)) throw DomainError("fold_pull K2f: requires eps > 0");
            const double r2 = std::cbrt(eps);
            q.coords = {x / r2, y / (r2 * r2), r2};
            break;
        }
        case FoldChart::K3f: {
            if (!(x > 0.0)) throw DomainError("fold_pull K3f: requires x > 0");
            q.coords = {x, y / (x * x), eps / (x * x * x)};
            break;
        }
    }
    return q;
}

/// Piecewise desingularized fold fields. The interior branch divides h by a
/// power of the radial variable, which is unbounded as r -> 0; evaluation is
/// refused there when h is not identically zero.
inline std::array<double, 3> fold_chart_fields(FoldChart chart, const std::array<double, 3>& c,
                                               const InteriorFn& h) {
    const bool has_h = static_cast<bool>(h);
    auto interior_guard = [&](double r) {
        if (has_h && std::abs(r) < 1e-10)
            throw UnboundedInteriorTerm("fold_chart_fields: (1/r) h with |r| < 1e-10");
    };
    switch (chart) {
        case FoldChart::K1f: {
            const double x1 = c[0], r1 = c[1], e1 = c[2];
            double dx1;
            if (std::abs(x1) > 1.0) {
                dx1 = -1.0 + x1 * x1 + 0.5 * e1 * x1;
            } else if (!has_h) {
                dx1 = 0.5 * e1 * x1;
            } else {
                interior_guard(r1);
                dx1 = h(r1 * x1, r1 * r1) / r1 + 0.5 * e1 * x1;
            }
            return {dx1, -0.5 * r1 * e1, 1.5 * e1 * e1};
        }
        case FoldChart::K2f: {
            const double x2 = c[0], y2 = c[1], r2 = c[2];
            double dx2;
            if (y2 < x2 * x2) {
                dx2 = -y2 + x2 * x2;
            } else if (!has_h) {
                dx2 = 0.0;
            } else {
                interior_guard(r2);
                dx2 = h(r2 * x2, r2 * r2 * y2) / r2;
            }
            return {dx2, -1.0, 0.0};
        }
        case FoldChart::K3f: {
            const double r3 = c[0], y3 = c[1], e3 = c[2];
            if (y3 < 1.0)
                return {r3 * (-y3 + 1.0), -e3 - 2.0 * y3 * (-y3 + 1.0), -3.0 * e3 * (1.0 - y3)};
            if (!has_h) return {0.0, -e3, 0.0};
            interior_guard(r3);
            const double hv = h(r3, r3 * r3 * y3);
            return {hv / r3, -e3 - 2.0 * y3 * hv / (r3 * r3), -3.0 * e3 * hv / (r3 * r3)};
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// Domain separation U^0 / U^- / U^+ around the slow nullcline.
// ---------------------------------------------------------------------------

/// Collar constants of the nullcline neighbourhood. lambda_star is optional; when
/// unset, the wide-left collar is used for lambda <= 0 and the narrow one
/// otherwise (lambda_star lies in (lambda_H, lambda_sc), which brackets 0
/// for the families considered).
struct USetConfig {
    double C1 = 1.0, C2 = 1.0, C5 = 2.0, C6 = 1.0, C7 = 3.0;
    std::optional<double> lambda_star;
    double disc_radius = 4.0;

    void validate(const Params& p) const {
        if (!(C1 > 0 && C2 > 0 && C5 > 0 && C6 > 0 && C7 > 0))
            throw PreconditionError("USetConfig: constants must be positive");
        // C6 (r2 + r2|l2|) > C5 (r2^2 + r2|l2|) on r2 in (0, rho], |l2| <= mu
        if (!(C6 * (1.0 + p.mu) > C5 * (p.rho + p.mu)))
            throw PreconditionError("USetConfig: C6(1+mu) > C5(rho+mu) violated");
    }

    bool wide_left(double lambda) const {
        return lambda_star ? lambda < *lambda_star : lambda <= 0.0;
    }
};

enum class RegionLabel { Uminus, Uzero, Uplus };

inline std::string to_string(RegionLabel r) {
    switch (r) {
        case RegionLabel::Uminus: return "U-";
        case RegionLabel::Uzero: return "U0";
        case RegionLabel::Uplus: return "U+";
    }
    return "?";
}

struct ULabel {
    RegionLabel region = RegionLabel::Uzero;
    bool in_c0 = false;  // true: the label is one of U0^-, U0^0, U0^+
};

/// Nullcline abscissa: the root of u -> g(u, y, lambda) on the right-curved
/// branch u > -1/(2 a1). Empty when the branch has no root at this height.
inline std::optional<double> nullcline_abscissa(const SystemSpec& spec, double y) {
    const double a1 = spec.params.a1;
    double lo = -0.98 / (2.0 * a1);
    double hi = std::max(1.0, spec.params.x10 * spec.params.rho);
    auto f = [&](double u) { return spec.g_eval(u, y); };
    double flo = f(lo), fhi = f(hi);
    if (flo * fhi > 0.0) return std::nullopt;
    for (int i = 0; i < 200 && hi - lo > 1e-16 * (1.0 + std::abs(lo)); ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if (fm * flo < 0.0) hi = mid;
        else { lo = mid; flo = fm; }
    }
    return 0.5 * (lo + hi);
}

namespace detail {

// U_1^1 membership on the physical leaf r1 lambda1 = lambda: the base point
// solves (a1 x1^2 + a2) r^2 + x1 r - lambda = 0 with r* in [0, rho].
inline bool in_U1_collar(const SystemSpec& spec, const PlanePoint& p, const USetConfig& cfg) {
    if (!(p.y > 0.0)) return false;
    const double lambda = spec.params.lambda;
    const double sq = std::sqrt(p.y);
    const double x1 = p.x / sq;
    const double A = spec.params.a1 * x1 * x1 + spec.params.a2;
    const double disc = x1 * x1 + 4.0 * A * lambda;
    if (disc < 0.0) return false;
    const double sd = std::sqrt(disc);
    double best = -1.0;
    for (double r : {(-x1 + sd) / (2.0 * A), (-x1 - sd) / (2.0 * A)}) {
        if (r < 0.0 || r > spec.params.rho) continue;
        if (best < 0.0 || std::abs(r - sq) < std::abs(best - sq)) best = r;
    }
    if (best < 0.0) return false;
    const double rt = sq - best;
    if (std::abs(rt) > cfg.C1 * best * best) return false;
    if (lambda != 0.0 && rt * rt > cfg.C2 * sq * best) return false;
    return true;
}

// U_2^2 (or tilde U_2^2) membership: horizontal offset from the nullcline in
// chart-K2 units against the C5/C6 collar widths.
inline bool in_U2_collar(const SystemSpec& spec, const PlanePoint& p, const USetConfig& cfg) {
    const double eps = spec.params.eps;
    const double lambda = spec.params.lambda;
    const double r2 = std::sqrt(eps);
    const double x2 = p.x / r2, y2 = p.y / eps;
    if (x2 * x2 + y2 * y2 > cfg.disc_radius * cfg.disc_radius) return false;
    const auto u = nullcline_abscissa(spec, p.y);
    if (!u) return false;
    const double xt2 = (p.x - *u) / r2;
    const double w_right = cfg.C5 * (eps + std::abs(lambda));
    const double w_left = cfg.wide_left(lambda) ? cfg.C6 * (r2 + std::abs(lambda)) : w_right;
    return xt2 > -w_left && xt2 < w_right;
}

} // namespace detail

/// Region of p relative to the nullcline collar U^0 = U^1 union U^2;
/// sign of g decides U^- vs U^+ outside the collar.
inline ULabel classify_U(const SystemSpec& spec, const PlanePoint& p, const USetConfig& cfg) {
    if (!spec.canard()) throw PreconditionError("classify_U: canard kinds only");
    if (!in_V(spec.params, p, spec.params.eps, cfg.disc_radius))
        throw DomainError("classify_U: point outside V");
    ULabel out;
    out.in_c0 = switching_value(p) >= 0.0;
    if (detail::in_U2_collar(spec, p, cfg) || detail::in_U1_collar(spec, p, cfg)) {
        out.region = RegionLabel::Uzero;
        return out;
    }
    out.region = spec.g_eval(p.x, p.y) < 0.0 ? RegionLabel::Uminus : RegionLabel::Uplus;
    return out;
}

/// Collar half-widths of U^2 in physical x units at the working leaf.
inline std::pair<double, double> u2_halfwidths(const SystemSpec& spec, const USetConfig& cfg) {
    const double eps = spec.params.eps;
    const double lambda = spec.params.lambda;
    const double r2 = std::sqrt(eps);
    const double w_right = r2 * cfg.C5 * (eps + std::abs(lambda));
    const double w_left =
        cfg.wide_left(lambda) ? r2 * cfg.C6 * (r2 + std::abs(lambda)) : w_right;
    return {w_left, w_right};
}

} // namespace ducktrap
