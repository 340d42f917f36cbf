// Trajectory serialization: CSV with header t,x,y,regime and a versioned
// JSON document with arcs and events. Field order is part of the format.
#pragma once

#include <cstdio>
#include <ostream>
#include <string>

#include <json.hpp>

#include "ducktrap/integrate.hpp"

namespace ducktrap {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline const char* regime_tag(Regime r) { return r == Regime::Interior ? "int" : "ext"; }

/// CSV rows are the concatenated arc samples in time order; columns are
/// exactly t,x,y,regime with regime in {int, ext}.
inline void write_csv(const HybridTrajectory& traj, std::ostream& os) {
    os << "t,x,y,regime\n";
    for (const auto& arc : traj.arcs)
        for (const auto& [t, p] : arc.samples)
            os << format_double(t) << ',' << format_double(p.x) << ',' << format_double(p.y)
               << ',' << regime_tag(arc.regime) << '\n';
}

inline std::string to_string(ExitSide s) {
    switch (s) {
        case ExitSide::TopStrip: return "top-strip";
        case ExitSide::Left: return "left";
        case ExitSide::Right: return "right";
        case ExitSide::EllipseArc: return "ellipse-arc";
        case ExitSide::None: return "none";
    }
    return "?";
}

inline nlohmann::ordered_json to_json(const HybridTrajectory& traj) {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    auto& arcs = j["arcs"] = nlohmann::ordered_json::array();
    for (const auto& arc : traj.arcs) {
        nlohmann::ordered_json ja;
        ja["regime"] = regime_tag(arc.regime);
        auto& samples = ja["samples"] = nlohmann::ordered_json::array();
        for (const auto& [t, p] : arc.samples) samples.push_back({t, p.x, p.y});
        arcs.push_back(std::move(ja));
    }
    auto& events = j["events"] = nlohmann::ordered_json::array();
    for (const auto& ev : traj.events) {
        nlohmann::ordered_json je;
        je["kind"] = to_string(ev.kind);
        je["t"] = ev.time;
        je["x"] = ev.point.x;
        je["y"] = ev.point.y;
        if (ev.kind == EventKind::ReachSection) je["section"] = ev.section;
        if (ev.kind == EventKind::ExitV) je["side"] = to_string(ev.side);
        events.push_back(std::move(je));
    }
    return j;
}

} // namespace ducktrap
