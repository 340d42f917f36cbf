// Relative-position predicates between planar sets given as polyline samples.
//
// A is locally left of B when on every horizontal line meeting both, all
// A-abscissae are <= all B-abscissae; totally left when a separating vertical
// line exists. "Below" is the transposed notion.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ducktrap/core.hpp"

namespace ducktrap {

/// Connected polyline; a single vertex is a point, vertices are joined in order.
using Polyline = std::vector<PlanePoint>;

enum class PositionMode { Left, Below };
enum class PositionScope { Local, Total };

namespace detail {

// Abscissa interval cut out of a polyline by the level line {coord = c}.
// For mode Left the level is horizontal (c is a y value) and the interval is
// in x; for Below the roles are transposed.
inline bool level_interval(const Polyline& poly, PositionMode mode, double c,
                           double& lo, double& hi) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    auto along = [&](const PlanePoint& p) { return mode == PositionMode::Left ? p.x : p.y; };
    auto across = [&](const PlanePoint& p) { return mode == PositionMode::Left ? p.y : p.x; };
    bool hit = false;
    if (poly.size() == 1) {
        if (across(poly[0]) == c) {
            lo = hi = along(poly[0]);
            return true;
        }
        return false;
    }
    for (size_t i = 0; i + 1 < poly.size(); ++i) {
        const double u0 = across(poly[i]), u1 = across(poly[i + 1]);
        const double v0 = along(poly[i]), v1 = along(poly[i + 1]);
        if ((u0 - c) * (u1 - c) > 0.0) continue;
        if (u0 == c && u1 == c) {  // segment lies on the level line
            lo = std::min({lo, v0, v1});
            hi = std::max({hi, v0, v1});
            hit = true;
            continue;
        }
        const double t = (c - u0) / (u1 - u0);
        if (t < 0.0 || t > 1.0) continue;
        const double v = v0 + t * (v1 - v0);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        hit = true;
    }
    return hit;
}

inline void collect_levels(const Polyline& poly, PositionMode mode, std::vector<double>& out) {
    for (const auto& p : poly) out.push_back(mode == PositionMode::Left ? p.y : p.x);
}

} // namespace detail

/// The quantified definition evaluated on samples. Vacuously true when no
/// common level line exists. Checking the vertex levels is exact for
/// polylines: between consecutive vertex levels the A-maximum is convex in
/// the level and the B-minimum concave, so violations must show at vertices.
inline bool relative_position(const Polyline& A, const Polyline& B, PositionMode mode,
                              PositionScope scope, double tol = 0.0) {
    if (A.empty() || B.empty()) return true;
    auto along = [&](const PlanePoint& p) { return mode == PositionMode::Left ? p.x : p.y; };
    if (scope == PositionScope::Total) {
        double amax = -std::numeric_limits<double>::infinity();
        double bmin = std::numeric_limits<double>::infinity();
        for (const auto& p : A) amax = std::max(amax, along(p));
        for (const auto& p : B) bmin = std::min(bmin, along(p));
        return amax <= bmin + tol;
    }
    std::vector<double> levels;
    detail::collect_levels(A, mode, levels);
    detail::collect_levels(B, mode, levels);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    for (double c : levels) {
        double alo, ahi, blo, bhi;
        if (!detail::level_interval(A, mode, c, alo, ahi)) continue;
        if (!detail::level_interval(B, mode, c, blo, bhi)) continue;
        if (ahi > blo + tol) return false;
    }
    return true;
}

/// Closed circle sampled as a polyline (helper for set-based tests).
inline Polyline sample_circle(double cx, double cy, double r, int n = 256) {
    Polyline out;
    out.reserve(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double th = 2.0 * M_PI * i / n;
        out.push_back({cx + r * std::cos(th), cy + r * std::sin(th)});
    }
    return out;
}

/// Circular arc from angle a0 to a1 (radians), sampled as a polyline.
inline Polyline sample_arc(double cx, double cy, double r, double a0, double a1, int n = 256) {
    Polyline out;
    out.reserve(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double th = a0 + (a1 - a0) * i / n;
        out.push_back({cx + r * std::cos(th), cy + r * std::sin(th)});
    }
    return out;
}

} // namespace ducktrap
