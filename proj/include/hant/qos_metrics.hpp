#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hant/error.hpp"
#include "hant/net_model.hpp"

namespace hant {

// Ordered node list plus the interface level used for each hop
// (levels[k] carries nodes[k] -> nodes[k+1]).
struct Route {
    std::vector<NodeId> nodes;
    std::vector<Level> levels;

    friend bool operator==(const Route&, const Route&) = default;

    std::size_t hops() const { return levels.size(); }
    bool empty() const { return nodes.empty(); }
    bool contains(NodeId n) const { return std::find(nodes.begin(), nodes.end(), n) != nodes.end(); }
    NodeId source() const { return nodes.front(); }
    NodeId destination() const { return nodes.back(); }
};

inline Route route_on_level(std::vector<NodeId> nodes, Level level) {
    Route r;
    r.levels.assign(nodes.empty() ? 0 : nodes.size() - 1, level);
    r.nodes = std::move(nodes);
    return r;
}

// Uses the lowest level at which each consecutive pair is linked.
inline Route resolve_route(const NetworkState& state, std::vector<NodeId> nodes) {
    Route r;
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
        auto l = state.lowest_link_level(nodes[k], nodes[k + 1]);
        if (!l)
            throw Error("broken-path", "no link between " + to_string(nodes[k]) + " and " + to_string(nodes[k + 1]));
        r.levels.push_back(*l);
    }
    r.nodes = std::move(nodes);
    return r;
}

inline std::string to_string(const Route& r) {
    std::string s;
    for (std::size_t k = 0; k < r.nodes.size(); ++k) {
        if (k > 0) s += "-" + std::to_string(idx(r.levels[k - 1])) + "-";
        s += to_string(r.nodes[k]);
    }
    return s;
}

inline LinkAttributes require_link(const NetworkState& state, NodeId a, NodeId b, Level l) {
    auto link = state.link(a, b, l);
    if (!link)
        throw Error("broken-path", "no level-" + std::to_string(idx(l)) + " link between " + to_string(a) + " and " + to_string(b));
    return *link;
}

inline void require_nonempty(const Route& route) {
    if (route.empty()) throw Error("empty-path", "route has no nodes");
    if (route.levels.size() + 1 != route.nodes.size()) throw Error("malformed-route", "hop levels do not match node count");
}

// D(R): every link delay plus the processing delay of every node, endpoints included.
inline double path_delay(const Route& route, const NetworkState& state) {
    require_nonempty(route);
    double d = 0.0;
    for (std::size_t k = 0; k < route.hops(); ++k) d += require_link(state, route.nodes[k], route.nodes[k + 1], route.levels[k]).delay;
    for (NodeId n : route.nodes) d += state.node(n).node_delay;
    return d;
}

inline double path_bandwidth(const Route& route, const NetworkState& state) {
    require_nonempty(route);
    if (route.hops() == 0) throw Error("empty-path", "bandwidth is undefined for a zero-hop route");
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < route.hops(); ++k)
        b = std::min(b, require_link(state, route.nodes[k], route.nodes[k + 1], route.levels[k]).bandwidth);
    return b;
}

inline double path_energy(const Route& route, const NetworkState& state) {
    require_nonempty(route);
    double e = std::numeric_limits<double>::infinity();
    for (NodeId n : route.nodes) e = std::min(e, state.node(n).energy);
    return e;
}

// +inf for a single-node route (no link can expire).
inline double path_let(const Route& route, const NetworkState& state) {
    require_nonempty(route);
    double t = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < route.hops(); ++k)
        t = std::min(t, require_link(state, route.nodes[k], route.nodes[k + 1], route.levels[k]).let);
    return t;
}

inline std::size_t hop_count(const Route& route) {
    require_nonempty(route);
    return route.nodes.size();
}

struct PathMetrics {
    double delay = 0.0;
    double bandwidth = std::numeric_limits<double>::infinity();
    double energy = std::numeric_limits<double>::infinity();
    double let = std::numeric_limits<double>::infinity();
    std::size_t hop_count = 0; // number of nodes on the path

    friend bool operator==(const PathMetrics&, const PathMetrics&) = default;

    double hop_visibility() const { return hop_count == 0 ? 0.0 : 1.0 / static_cast<double>(hop_count); }
};

inline PathMetrics measure_path(const Route& route, const NetworkState& state) {
    return PathMetrics{path_delay(route, state), path_bandwidth(route, state), path_energy(route, state),
                       path_let(route, state), hop_count(route)};
}

// Metrics of R1 || R2 where R1 ends at the node R2 starts from. That shared
// node's processing delay is counted once.
inline PathMetrics concat(const PathMetrics& first, const PathMetrics& second, double shared_node_delay) {
    if (first.hop_count == 0 || second.hop_count == 0) throw Error("empty-path", "cannot concatenate an empty path");
    return PathMetrics{first.delay + second.delay - shared_node_delay, std::min(first.bandwidth, second.bandwidth),
                       std::min(first.energy, second.energy), std::min(first.let, second.let),
                       first.hop_count + second.hop_count - 1};
}

struct DepositParams {
    double lambda_b = 1.0;
    double lambda_e = 1.0;
    double lambda_t = 1.0;
    double lambda_d = 1.0;
    double lambda_hc = 1.0;

    friend bool operator==(const DepositParams&, const DepositParams&) = default;
};

struct MetricRatios {
    double delay = 0.0;
    double bandwidth = 0.0;
    double energy = 0.0;
    double let = 0.0;
    double hop_count = 0.0;
};

// Reference scales that turn SI metric values into dimensionless ratios
// before they are raised to configurable powers. LET is clipped at let_cap
// so that static links (infinite LET) stay usable.
struct MetricScales {
    double delay = 1.0;
    double bandwidth = 1.0;
    double energy = 1.0;
    double let = 1.0;
    double hop_count = 1.0;
    double let_cap = 1000.0;

    friend bool operator==(const MetricScales&, const MetricScales&) = default;

    MetricRatios normalize(const PathMetrics& m) const {
        return MetricRatios{m.delay / delay, m.bandwidth / bandwidth, m.energy / energy, std::min(m.let, let_cap) / let,
                            static_cast<double>(m.hop_count) / hop_count};
    }
};

inline void validate(const MetricScales& s) {
    for (double v : {s.delay, s.bandwidth, s.energy, s.let, s.hop_count, s.let_cap})
        if (!(v > 0.0) || !std::isfinite(v)) throw Error("scale-range", "metric scales must be finite and > 0");
}

// Pheromone quantity laid on every link of a found route:
// (B^lb + E^le + T^lt) / (D^ld + HC^lhc), on normalised metrics.
inline double pheromone_deposit(const PathMetrics& m, const DepositParams& p, const MetricScales& scales = {}) {
    const MetricRatios r = scales.normalize(m);
    for (double v : {r.delay, r.bandwidth, r.energy, r.let, r.hop_count})
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error("bad-metric", "path metrics must be finite and >= 0");
    const double num = std::pow(r.bandwidth, p.lambda_b) + std::pow(r.energy, p.lambda_e) + std::pow(r.let, p.lambda_t);
    const double den = std::pow(r.delay, p.lambda_d) + std::pow(r.hop_count, p.lambda_hc);
    if (!(den > 0.0)) throw Error("degenerate-route", "deposit denominator is zero");
    const double dt = num / den;
    if (!std::isfinite(dt)) throw Error("degenerate-route", "deposit is not finite");
    return dt;
}

} // namespace hant
