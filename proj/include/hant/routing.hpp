#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hant/ants.hpp"
#include "hant/clustering.hpp"
#include "hant/error.hpp"
#include "hant/net_model.hpp"
#include "hant/qos_metrics.hpp"
#include "hant/rng.hpp"
#include "hant/trace.hpp"

namespace hant {

// Exponents of the preference product, in order: pheromone, delay, hop
// count, bandwidth, energy, link expiration time.
struct PreferenceParams {
    std::array<double, 6> alpha{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    double theta_p = 0.0;

    friend bool operator==(const PreferenceParams&, const PreferenceParams&) = default;
};

struct QosRequirement {
    double min_bandwidth = 0.0;
    double min_energy = 0.0;
    double min_let = 0.0;
    double max_delay = std::numeric_limits<double>::infinity();

    friend bool operator==(const QosRequirement&, const QosRequirement&) = default;

    bool admits(const PathMetrics& m) const {
        return m.bandwidth >= min_bandwidth && m.energy >= min_energy && m.let >= min_let && m.delay <= max_delay;
    }
};

struct PreferenceCandidate {
    NodeId via;
    PathMetrics metrics;
    double pheromone = 0.0;
};

// Unnormalised preference product. Delay and hop count enter as 1/D and
// 1/HC so every factor is higher-is-better.
inline double preference_score(const PreferenceCandidate& c, const PreferenceParams& p, const MetricScales& scales) {
    const MetricRatios r = scales.normalize(c.metrics);
    if (!(c.pheromone >= 0.0) || !std::isfinite(c.pheromone)) throw Error("bad-metric", "pheromone must be finite and >= 0");
    if (!(r.delay > 0.0) || !(r.hop_count > 0.0)) throw Error("bad-metric", "delay and hop count must be > 0");
    for (double v : {r.bandwidth, r.energy, r.let})
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error("bad-metric", "bandwidth, energy and LET must be finite and >= 0");
    return std::pow(c.pheromone, p.alpha[0]) * std::pow(1.0 / r.delay, p.alpha[1]) * std::pow(1.0 / r.hop_count, p.alpha[2]) *
           std::pow(r.bandwidth, p.alpha[3]) * std::pow(r.energy, p.alpha[4]) * std::pow(r.let, p.alpha[5]);
}

inline std::vector<double> path_preference_probability(std::span<const PreferenceCandidate> candidates,
                                                       const PreferenceParams& p, const MetricScales& scales = {}) {
    if (candidates.empty()) throw Error("no-candidates", "preference needs at least one candidate");
    std::vector<double> s;
    s.reserve(candidates.size());
    double total = 0.0;
    for (const auto& c : candidates) {
        s.push_back(preference_score(c, p, scales));
        total += s.back();
    }
    if (!(total > 0.0) || !std::isfinite(total)) throw Error("all-degenerate", "all candidates degenerate");
    for (double& v : s) v /= total;
    return s;
}

inline void validate_q(double q) {
    if (!(q > 0.0 && q <= 1.0)) throw Error("q-range", "evaporation factor q must lie in (0,1]");
}

// tau[(next hop, destination)] held by one node.
class PheromoneTable {
public:
    double get(NodeId via, NodeId dst) const {
        auto it = tau_.find({via, dst});
        return it == tau_.end() ? 0.0 : it->second;
    }
    void set(NodeId via, NodeId dst, double v) { tau_[{via, dst}] = v; }

    void scale(double k) {
        for (auto& [_, t] : tau_) t *= k;
    }
    void erase_node(NodeId n) {
        std::erase_if(tau_, [n](const auto& kv) { return kv.first.first == n || kv.first.second == n; });
    }

    const std::map<std::pair<NodeId, NodeId>, double>& entries() const { return tau_; }

private:
    std::map<std::pair<NodeId, NodeId>, double> tau_;
};

struct PheromonePlane {
    double q = 0.1;
    std::map<NodeId, PheromoneTable> tables;

    double get(NodeId at, NodeId via, NodeId dst) const {
        auto it = tables.find(at);
        return it == tables.end() ? 0.0 : it->second.get(via, dst);
    }

    double max_entry() const {
        double m = 0.0;
        for (const auto& [_, t] : tables)
            for (const auto& [__, v] : t.entries()) m = std::max(m, v);
        return m;
    }
};

// tau <- (1-q) tau + delta on every hop (i, j) of the route, toward its destination.
inline void deposit_on_route(PheromonePlane& plane, const Route& route, double delta) {
    validate_q(plane.q);
    if (!(delta >= 0.0)) throw Error("bad-deposit", "pheromone deposit must be >= 0");
    if (route.nodes.size() < 2) return;
    const NodeId dst = route.destination();
    for (std::size_t k = 0; k + 1 < route.nodes.size(); ++k) {
        auto& t = plane.tables[route.nodes[k]];
        t.set(route.nodes[k + 1], dst, (1.0 - plane.q) * t.get(route.nodes[k + 1], dst) + delta);
    }
}

// tau <- (1-q) tau on every entry.
inline void evaporate(PheromonePlane& plane, double q) {
    validate_q(q);
    for (auto& [_, t] : plane.tables) t.scale(1.0 - q);
}

struct RouteCacheEntry {
    NodeId destination;
    Route path;
    PathMetrics metrics;
    double preference = 0.0;
    double expires_at = 0.0;
};

class RouteCache {
public:
    explicit RouteCache(std::size_t capacity = 16) : capacity_(std::max<std::size_t>(1, capacity)) {}

    // Highest-preference entry for dst that is still alive at `now` and meets the floors.
    std::optional<RouteCacheEntry> lookup(NodeId dst, double now, const QosRequirement& qos) const {
        const RouteCacheEntry* best = nullptr;
        for (const auto& e : entries_) {
            if (e.destination != dst || e.expires_at <= now || !qos.admits(e.metrics)) continue;
            if (!best || e.preference > best->preference) best = &e;
        }
        if (!best) return std::nullopt;
        return *best;
    }

    // Same destination and path replaces in place; otherwise the entry
    // with the earliest expiry makes room.
    void insert(RouteCacheEntry entry) {
        for (auto& e : entries_)
            if (e.destination == entry.destination && e.path == entry.path) {
                e = std::move(entry);
                return;
            }
        if (entries_.size() >= capacity_) {
            auto victim = std::min_element(entries_.begin(), entries_.end(),
                                           [](const auto& a, const auto& b) { return a.expires_at < b.expires_at; });
            entries_.erase(victim);
        }
        entries_.push_back(std::move(entry));
    }

    void purge_node(NodeId n) {
        std::erase_if(entries_, [n](const auto& e) { return e.path.contains(n); });
    }
    void purge_expired(double now) {
        std::erase_if(entries_, [now](const auto& e) { return e.expires_at <= now; });
    }
    void erase_path(NodeId dst, const Route& path) {
        std::erase_if(entries_, [&](const auto& e) { return e.destination == dst && e.path == path; });
    }

    const std::vector<RouteCacheEntry>& entries() const { return entries_; }
    std::size_t capacity() const { return capacity_; }

private:
    std::size_t capacity_;
    std::vector<RouteCacheEntry> entries_;
};

// Best route toward a destination that a node has learned through one neighbour.
struct KnownRoute {
    Route path;
    PathMetrics metrics;
    double quality = 0.0;
    double expires_at = 0.0;
};

struct NodeRouting {
    std::map<NodeId, std::map<NodeId, KnownRoute>> known; // dst -> via -> route
    RouteCache cache;
};

// Routing state of one plane: plane 0 serves intra-cluster (Knave) search,
// planes 1 and 2 the head overlays (King) at those levels.
struct RoutingPlane {
    PheromonePlane pheromone;
    std::map<NodeId, NodeRouting> nodes;
};

struct RoutingParams {
    double q = 0.1;
    int ant_rounds = 30;
    int flood_copies = 2;
    double exploration = 0.1;
    int max_hops = 16;
    std::size_t cache_capacity = 16;
    double cache_max_age = 30.0;
    double tau_min = 1e-9;
    double ant_size_bits = 512.0;
    PreferenceParams preference;
    DepositParams deposit;
    MetricScales scales;

    friend bool operator==(const RoutingParams&, const RoutingParams&) = default;
};

inline void validate(const RoutingParams& p) {
    validate_q(p.q);
    validate(p.scales);
    if (p.ant_rounds < 1) throw Error("ant-rounds-range", "ant_rounds must be >= 1");
    if (p.flood_copies < 1) throw Error("flood-copies-range", "flood_copies must be >= 1");
    if (!(p.exploration >= 0.0 && p.exploration <= 1.0)) throw Error("exploration-range", "exploration must lie in [0,1]");
    if (p.max_hops < 1) throw Error("max-hops-range", "max_hops must be >= 1");
    if (p.cache_capacity < 1) throw Error("cache-capacity-range", "cache_capacity must be >= 1");
    if (!(p.cache_max_age > 0.0)) throw Error("cache-age-range", "cache_max_age must be > 0");
    if (!(p.tau_min > 0.0)) throw Error("tau-min-range", "tau_min must be > 0");
    for (double a : p.preference.alpha)
        if (!std::isfinite(a)) throw Error("alpha-range", "preference exponents must be finite");
    for (double l : {p.deposit.lambda_b, p.deposit.lambda_e, p.deposit.lambda_t, p.deposit.lambda_d, p.deposit.lambda_hc})
        if (!std::isfinite(l)) throw Error("lambda-range", "deposit exponents must be finite");
}

struct RoutingState {
    std::array<RoutingPlane, 3> planes;
    std::size_t cache_capacity = 16;

    RoutingState() = default;
    explicit RoutingState(const RoutingParams& p) : cache_capacity(p.cache_capacity) {
        for (auto& pl : planes) pl.pheromone.q = p.q;
    }

    RoutingPlane& plane(Level l) { return planes[idx(l)]; }
    const RoutingPlane& plane(Level l) const { return planes[idx(l)]; }

    NodeRouting& node(Level l, NodeId n) { return plane(l).nodes.try_emplace(n, NodeRouting{{}, RouteCache(cache_capacity)}).first->second; }

    // Forget every cached or learned route that passes through n.
    void purge_node(NodeId n) {
        for (auto& pl : planes) {
            pl.nodes.erase(n);
            for (auto& [_, nr] : pl.nodes) {
                nr.cache.purge_node(n);
                nr.known.erase(n);
                for (auto& [__, vias] : nr.known)
                    std::erase_if(vias, [n](const auto& kv) { return kv.first == n || kv.second.path.contains(n); });
            }
            pl.pheromone.tables.erase(n);
            for (auto& [_, t] : pl.pheromone.tables) t.erase_node(n);
        }
    }

    void evaporate_all(double q) {
        for (auto& pl : planes) evaporate(pl.pheromone, q);
    }
};

// Hooks for instrumentation: every ant transmission, every preference
// vector computed, every radio transmission (for energy accounting).
struct RoutingObserver {
    std::function<void(const AntPacket&)> on_ant;
    std::function<void(std::span<const double>)> on_preference;
    std::function<void(NodeId from, NodeId to, double bits)> on_transmit;
};

enum class DiscoveryStatus { found, no_route, no_admissible_route };

enum class DiscoveryCase { none, direct, cached, intra_cluster, same_region, region_head, cross_region };

inline std::string_view to_string(DiscoveryStatus s) {
    switch (s) {
        case DiscoveryStatus::found: return "found";
        case DiscoveryStatus::no_route: return "no-route";
        case DiscoveryStatus::no_admissible_route: return "no-admissible-route";
    }
    return "?";
}

inline std::string_view to_string(DiscoveryCase c) {
    switch (c) {
        case DiscoveryCase::none: return "none";
        case DiscoveryCase::direct: return "direct";
        case DiscoveryCase::cached: return "cached";
        case DiscoveryCase::intra_cluster: return "intra-cluster";
        case DiscoveryCase::same_region: return "same-region";
        case DiscoveryCase::region_head: return "region-head";
        case DiscoveryCase::cross_region: return "cross-region";
    }
    return "?";
}

struct DiscoveryResult {
    DiscoveryStatus status = DiscoveryStatus::no_route;
    DiscoveryCase path_case = DiscoveryCase::none;
    Route route;
    PathMetrics metrics;
    double preference = 0.0;
    std::size_t ant_transmissions = 0;

    bool found() const { return status == DiscoveryStatus::found; }

    const Route& value() const {
        if (status == DiscoveryStatus::no_route) throw Error("no-route", "destination unreachable at every level");
        if (status == DiscoveryStatus::no_admissible_route) throw Error("no-admissible-route", "no route meets the QoS floors");
        return route;
    }
};

// True when every hop of the route is currently linked at its level.
inline bool route_is_live(const NetworkState& net, const Route& r) {
    if (r.empty()) return false;
    for (NodeId n : r.nodes)
        if (!net.contains(n) || !net.node(n).alive) return false;
    for (std::size_t k = 0; k < r.hops(); ++k)
        if (!net.linked(r.nodes[k], r.nodes[k + 1], r.levels[k])) return false;
    return true;
}

// Cuts every cycle out of a route, keeping the hop levels of what remains.
inline Route remove_loops(const Route& r) {
    Route out;
    for (std::size_t k = 0; k < r.nodes.size(); ++k) {
        auto it = std::find(out.nodes.begin(), out.nodes.end(), r.nodes[k]);
        if (it != out.nodes.end()) {
            const auto keep = static_cast<std::size_t>(it - out.nodes.begin()) + 1;
            out.nodes.resize(keep);
            out.levels.resize(keep - 1);
        } else {
            if (!out.nodes.empty()) out.levels.push_back(r.levels[k - 1]);
            out.nodes.push_back(r.nodes[k]);
        }
    }
    return out;
}

// Appends `tail` to `head`. When they do not already meet at a common node
// the two ends are joined by one hop at `joint`.
inline void append_route(Route& head, const Route& tail, Level joint) {
    if (tail.empty()) return;
    if (head.empty()) {
        head = tail;
        return;
    }
    std::size_t start = 0;
    if (head.destination() == tail.source()) start = 1;
    else head.levels.push_back(joint);
    for (std::size_t k = start; k < tail.nodes.size(); ++k) {
        if (k > 0) head.levels.push_back(tail.levels[k - 1]);
        head.nodes.push_back(tail.nodes[k]);
    }
}

// Route discovery over a fixed snapshot of the network and cluster state.
// Ant traversal is carried out synchronously at `now`; every transmission is
// reported to the observer and, at trace level 2, written to the trace.
class Router {
public:
    Router(const NetworkState& net, const ClusterState& clusters, RoutingState& routing, const RoutingParams& params,
           Rng& rng, Trace* trace = nullptr, RoutingObserver observer = {})
        : net_(net), clusters_(clusters), routing_(routing), params_(params), rng_(rng), trace_(trace),
          observer_(std::move(observer)) {}

    DiscoveryResult discover_route(NodeId src, NodeId dst, const QosRequirement& qos, double now) {
        net_.node(src);
        net_.node(dst);
        if (src == dst) throw Error("same-endpoint", "source and destination are the same node");
        now_ = now;
        transmissions_ = 0;
        saw_candidate_ = false;
        DiscoveryResult res = cascade(src, dst, qos);
        res.ant_transmissions = transmissions_;
        if (!res.found() && saw_candidate_) res.status = DiscoveryStatus::no_admissible_route;
        if (trace_)
            trace_->emit(1, Json{{"t", jnum(now)}, {"ev", "discovery"}, {"src", src.value}, {"dst", dst.value},
                                 {"status", to_string(res.status)}, {"case", to_string(res.path_case)},
                                 {"route", res.found() ? to_string(res.route) : ""}, {"ants", res.ant_transmissions}});
        return res;
    }

    // One ant search from src to dst restricted to `scope`, over links of
    // `level`, consulting src's route cache first. Exposed for tests.
    DiscoveryResult search_segment(Level level, std::span<const NodeId> scope, NodeId src, NodeId dst,
                                   const QosRequirement& qos, bool king) {
        DiscoveryResult res;
        auto& src_state = routing_.node(level, src);
        src_state.cache.purge_expired(now_);
        while (auto hit = src_state.cache.lookup(dst, now_, qos)) {
            if (route_is_live(net_, hit->path)) {
                res.status = DiscoveryStatus::found;
                res.path_case = DiscoveryCase::cached;
                res.route = hit->path;
                res.metrics = measure_path(hit->path, net_);
                res.preference = hit->preference;
                return res;
            }
            src_state.cache.erase_path(dst, hit->path);
        }

        build_adjacency(level, scope);
        if (!adjacency_.count(src) || !adjacency_.count(dst)) return res;
        flood_round(level, src, dst, qos, king);
        for (int r = 1; r < params_.ant_rounds; ++r) stochastic_round(level, src, dst, qos, king);
        return select_best(level, src, dst, qos);
    }

private:
    DiscoveryResult cascade(NodeId src, NodeId dst, const QosRequirement& qos) {
        DiscoveryResult none;
        if (!net_.node(src).alive || !net_.node(dst).alive) return none;

        if (auto l = net_.lowest_link_level(src, dst)) {
            Route r{{src, dst}, {*l}};
            PathMetrics m = measure_path(r, net_);
            if (qos.admits(m)) return found(r, m, 1.0, DiscoveryCase::direct);
            saw_candidate_ = true;
        }

        const auto& l0 = clusters_.at(Level::L0);
        const auto h0 = l0.head(src);
        const auto hd0 = l0.head(dst);
        if (!h0 || !hd0) return none;
        if (!route_ant(src, *h0, src, dst, false, Level::L0)) return none;

        if (*hd0 == *h0) {
            route_ant(*h0, src, src, dst, true, Level::L0);
            auto scope = l0.cluster_of(*h0);
            DiscoveryResult seg = search_segment(Level::L0, scope, src, dst, qos, false);
            if (!seg.found()) return seg;
            if (seg.path_case != DiscoveryCase::cached) seg.path_case = DiscoveryCase::intra_cluster;
            return finish(seg.route, qos, seg.preference, seg.path_case);
        }

        const auto& l1 = clusters_.at(Level::L1);
        const auto h1 = l1.head(*h0);
        if (!h1) return none;
        if (!route_ant(*h0, *h1, src, dst, false, Level::L1)) return none;
        Route lead = hop_route(src, *h0, Level::L0);

        if (l1.head(*hd0) == h1) {
            if (*hd0 == *h1) {
                Route r = lead;
                append_route(r, hop_route(*h0, *h1, Level::L1), Level::L1);
                append_route(r, hop_route(*h1, dst, Level::L0), Level::L0);
                return finish(r, qos, 1.0, DiscoveryCase::region_head);
            }
            route_ant(*h1, *h0, src, dst, true, Level::L1);
            auto scope = l1.cluster_of(*h1);
            DiscoveryResult seg = search_segment(Level::L1, scope, *h0, *hd0, qos, true);
            if (!seg.found()) return seg;
            Route r = lead;
            append_route(r, seg.route, Level::L1);
            append_route(r, hop_route(*hd0, dst, Level::L0), Level::L0);
            return finish(r, qos, seg.preference, DiscoveryCase::same_region);
        }

        const auto& l2 = clusters_.at(Level::L2);
        const auto h2 = l2.head(*h1);
        const auto hd1 = l1.head(*hd0);
        if (!h2 || !hd1) return none;
        if (!route_ant(*h1, *h2, src, dst, false, Level::L2)) return none;
        std::vector<NodeId> scope;
        if (l2.head(*hd1) == h2) {
            scope = l2.cluster_of(*h2);
        } else {
            for (const auto& [n, _] : l2.head_of) scope.push_back(n);
        }
        route_ant(*h2, *h1, src, dst, true, Level::L2);
        DiscoveryResult seg = search_segment(Level::L2, scope, *h1, *hd1, qos, true);
        if (!seg.found()) return seg;
        Route r = lead;
        append_route(r, hop_route(*h0, *h1, Level::L1), Level::L1);
        append_route(r, seg.route, Level::L2);
        append_route(r, hop_route(*hd1, *hd0, Level::L1), Level::L1);
        append_route(r, hop_route(*hd0, dst, Level::L0), Level::L0);
        return finish(r, qos, seg.preference, DiscoveryCase::cross_region);
    }

    static Route hop_route(NodeId a, NodeId b, Level l) {
        if (a == b) return Route{{a}, {}};
        return Route{{a, b}, {l}};
    }

    DiscoveryResult found(Route r, PathMetrics m, double pref, DiscoveryCase c) {
        DiscoveryResult res;
        res.status = DiscoveryStatus::found;
        res.path_case = c;
        res.route = std::move(r);
        res.metrics = m;
        res.preference = pref;
        return res;
    }

    // Validates a composed route, checks admission and lays pheromone along it.
    DiscoveryResult finish(Route r, const QosRequirement& qos, double pref, DiscoveryCase c) {
        r = remove_loops(r);
        if (r.nodes.size() < 2 || !route_is_live(net_, r)) return DiscoveryResult{};
        const PathMetrics m = measure_path(r, net_);
        if (!qos.admits(m)) {
            saw_candidate_ = true;
            return DiscoveryResult{};
        }
        const double delta = safe_deposit(m);
        for (std::size_t k = 0; k < r.hops(); ++k) {
            auto& plane = routing_.plane(r.levels[k]).pheromone;
            auto& t = plane.tables[r.nodes[k]];
            t.set(r.nodes[k + 1], r.destination(), (1.0 - plane.q) * t.get(r.nodes[k + 1], r.destination()) + delta);
        }
        return found(std::move(r), m, pref, c);
    }

    double safe_deposit(const PathMetrics& m) const {
        try {
            return pheromone_deposit(m, params_.deposit, params_.scales);
        } catch (const Error&) {
            return 0.0;
        }
    }

    void transmit(NodeId from, NodeId to, const AntPacket& ant) {
        ++transmissions_;
        if (observer_.on_ant) observer_.on_ant(ant);
        if (observer_.on_transmit) observer_.on_transmit(from, to, params_.ant_size_bits);
        if (trace_ && trace_->enabled(2))
            trace_->emit(2, Json{{"t", jnum(now_)}, {"ev", "ant"}, {"from", from.value}, {"to", to.value}, {"ant", to_json(ant)}});
    }

    // Unicast of a RouteAnt over a one-hop link; false when the hop is down.
    bool route_ant(NodeId from, NodeId to, NodeId src, NodeId dst, bool flag, Level level) {
        if (from == to) return true;
        if (!net_.linked(from, to, level)) return false;
        transmit(from, to, RouteAnt{src, dst, flag});
        return true;
    }

    void build_adjacency(Level level, std::span<const NodeId> scope) {
        adjacency_.clear();
        std::set<NodeId> allowed(scope.begin(), scope.end());
        for (NodeId n : allowed) {
            if (!net_.contains(n)) continue;
            auto& row = adjacency_[n];
            for (NodeId m : neighbors(net_, n, level))
                if (allowed.count(m)) row.push_back(m);
        }
    }

    template <class Tag>
    void send_request(NodeId from, NodeId to, NodeId src, NodeId dst, const QosRequirement& qos, const std::vector<NodeId>& visited) {
        RequestAnt<Tag> ant{now_, qos.min_bandwidth, src, dst, visited};
        if (has_duplicate(ant.visited)) throw Error("ant-loop", "request ant visited a node twice");
        transmit(from, to, ant);
    }

    void send_request(bool king, NodeId from, NodeId to, NodeId src, NodeId dst, const QosRequirement& qos,
                      const std::vector<NodeId>& visited) {
        if (king) send_request<KingTag>(from, to, src, dst, qos, visited);
        else send_request<KnaveTag>(from, to, src, dst, qos, visited);
    }

    bool usable(Level level, NodeId a, NodeId b, const QosRequirement& qos) const {
        auto link = net_.link(a, b, level);
        return link && link->bandwidth >= qos.min_bandwidth;
    }

    // Broadcast round: request copies spread in order of accumulated delay;
    // each node forwards at most flood_copies of them and the destination
    // answers at most flood_copies.
    void flood_round(Level level, NodeId src, NodeId dst, const QosRequirement& qos, bool king) {
        struct Flight {
            double key;
            std::uint64_t seq;
            std::vector<NodeId> visited;
        };
        auto later = [](const Flight& a, const Flight& b) { return std::tie(a.key, a.seq) > std::tie(b.key, b.seq); };
        std::priority_queue<Flight, std::vector<Flight>, decltype(later)> pq(later);
        std::uint64_t seq = 0;
        std::map<NodeId, int> forwarded;
        int replies = 0;

        auto spread = [&](const std::vector<NodeId>& visited, double key) {
            const NodeId x = visited.back();
            if (static_cast<int>(visited.size()) > params_.max_hops) return;
            for (NodeId y : adjacency_.at(x)) {
                if (std::find(visited.begin(), visited.end(), y) != visited.end() || !usable(level, x, y, qos)) continue;
                send_request(king, x, y, src, dst, qos, visited);
                std::vector<NodeId> next = visited;
                next.push_back(y);
                const double k = key + net_.link(x, y, level)->delay + net_.node(y).node_delay;
                pq.push(Flight{k, seq++, std::move(next)});
            }
        };

        spread({src}, net_.node(src).node_delay);
        while (!pq.empty()) {
            Flight f = pq.top();
            pq.pop();
            const NodeId x = f.visited.back();
            if (x == dst) {
                if (replies < params_.flood_copies) {
                    ++replies;
                    reply(level, f.visited, qos, king);
                }
                continue;
            }
            if (forwarded[x] >= params_.flood_copies) continue;
            ++forwarded[x];
            spread(f.visited, f.key);
        }
    }

    // Unicast round: one ant per neighbour of src, each hop chosen by the
    // preference probabilities the current node holds toward dst, or
    // uniformly when it knows nothing or explores.
    void stochastic_round(Level level, NodeId src, NodeId dst, const QosRequirement& qos, bool king) {
        for (NodeId first : adjacency_.at(src)) {
            if (!usable(level, src, first, qos)) continue;
            std::vector<NodeId> visited{src};
            NodeId x = src, next = first;
            while (true) {
                send_request(king, x, next, src, dst, qos, visited);
                visited.push_back(next);
                x = next;
                if (x == dst) {
                    reply(level, visited, qos, king);
                    break;
                }
                if (static_cast<int>(visited.size()) > params_.max_hops) break;
                std::vector<NodeId> open;
                for (NodeId y : adjacency_.at(x))
                    if (std::find(visited.begin(), visited.end(), y) == visited.end() && usable(level, x, y, qos)) open.push_back(y);
                if (open.empty()) break;
                next = choose_next(level, x, dst, open);
            }
        }
    }

    NodeId choose_next(Level level, NodeId at, NodeId dst, const std::vector<NodeId>& open) {
        std::vector<PreferenceCandidate> cands;
        auto& nr = routing_.node(level, at);
        if (auto it = nr.known.find(dst); it != nr.known.end())
            for (NodeId y : open)
                if (auto k = it->second.find(y); k != it->second.end() && k->second.expires_at > now_)
                    cands.push_back(candidate(level, at, dst, y, k->second));
        const double explore = rng_.uniform();
        if (cands.empty() || explore < params_.exploration) return open[rng_.index(open.size())];
        try {
            auto p = path_preference_probability(cands, params_.preference, params_.scales);
            if (observer_.on_preference) observer_.on_preference(p);
            return cands[rng_.pick_weighted(p)].via;
        } catch (const Error&) {
            return open[rng_.index(open.size())];
        }
    }

    PreferenceCandidate candidate(Level level, NodeId at, NodeId dst, NodeId via, const KnownRoute& k) const {
        return PreferenceCandidate{via, k.metrics, std::max(params_.tau_min, routing_.plane(level).pheromone.get(at, via, dst))};
    }

    // Destination turns the request into a reply that walks the request's
    // stack backwards. Each node on the way lays pheromone, refreshes what
    // it knows about the path via the previous hop, recomputes preference
    // and caches the path when it clears the QoS floors.
    void reply(Level level, const std::vector<NodeId>& visited, const QosRequirement& qos, bool king) {
        const Route full = route_on_level(visited, level);
        const PathMetrics full_m = measure_path(full, net_);
        const double delta = safe_deposit(full_m);
        const NodeId src = visited.front();
        const NodeId dst = visited.back();
        auto& plane = routing_.plane(level);

        PathMetrics seg{net_.node(dst).node_delay, std::numeric_limits<double>::infinity(), net_.node(dst).energy,
                        std::numeric_limits<double>::infinity(), 1};
        for (std::size_t i = visited.size() - 1; i-- > 0;) {
            const NodeId at = visited[i];
            const NodeId via = visited[i + 1];
            std::vector<NodeId> to_visit(visited.rbegin() + static_cast<std::ptrdiff_t>(visited.size() - i), visited.rend());
            if (king) transmit(via, at, ReplyKingAnt{seg.hop_count, seg.delay, seg.energy, seg.let, seg.bandwidth, dst, src, to_visit});
            else transmit(via, at, ReplyKnaveAnt{seg.hop_count, seg.delay, seg.energy, seg.let, seg.bandwidth, dst, src, to_visit});

            const LinkAttributes link = *net_.link(at, via, level);
            const auto& na = net_.node(at);
            seg.delay += link.delay + na.node_delay;
            seg.bandwidth = std::min(seg.bandwidth, link.bandwidth);
            seg.energy = std::min(seg.energy, na.energy);
            seg.let = std::min(seg.let, link.let);
            seg.hop_count += 1;

            auto& table = plane.pheromone.tables[at];
            table.set(via, dst, (1.0 - plane.pheromone.q) * table.get(via, dst) + delta);

            Route suffix = route_on_level(std::vector<NodeId>(visited.begin() + static_cast<std::ptrdiff_t>(i), visited.end()), level);
            KnownRoute fresh{suffix, seg, safe_deposit(seg), now_ + std::min(seg.let, params_.cache_max_age)};
            auto& nr = routing_.node(level, at);
            auto& slot = nr.known[dst];
            auto it = slot.find(via);
            if (it == slot.end() || it->second.expires_at <= now_ || it->second.path == suffix || fresh.quality >= it->second.quality)
                slot[via] = fresh;

            std::vector<PreferenceCandidate> cands;
            for (const auto& [v, k] : slot)
                if (k.expires_at > now_) cands.push_back(candidate(level, at, dst, v, k));
            std::vector<double> p;
            try {
                p = path_preference_probability(cands, params_.preference, params_.scales);
            } catch (const Error&) {
                continue;
            }
            if (observer_.on_preference) observer_.on_preference(p);
            for (std::size_t c = 0; c < cands.size(); ++c) {
                if (cands[c].via != via) continue;
                const KnownRoute& k = slot.at(via);
                if (!qos.admits(k.metrics)) {
                    saw_candidate_ = true;
                    break;
                }
                if (p[c] > params_.preference.theta_p)
                    nr.cache.insert(RouteCacheEntry{dst, k.path, k.metrics, p[c], k.expires_at});
            }
        }
    }

    // Highest-preference admissible path learned at src.
    DiscoveryResult select_best(Level level, NodeId src, NodeId dst, const QosRequirement& qos) {
        DiscoveryResult res;
        auto& nr = routing_.node(level, src);
        auto it = nr.known.find(dst);
        if (it == nr.known.end()) return res;
        std::erase_if(it->second, [&](const auto& kv) { return kv.second.expires_at <= now_ || !route_is_live(net_, kv.second.path); });
        std::vector<PreferenceCandidate> cands;
        for (const auto& [v, k] : it->second) cands.push_back(candidate(level, src, dst, v, k));
        if (cands.empty()) return res;
        std::vector<double> p;
        try {
            p = path_preference_probability(cands, params_.preference, params_.scales);
        } catch (const Error&) {
            p.assign(cands.size(), 1.0 / static_cast<double>(cands.size()));
        }
        if (observer_.on_preference) observer_.on_preference(p);
        std::optional<std::size_t> best;
        for (std::size_t c = 0; c < cands.size(); ++c) {
            const KnownRoute& k = it->second.at(cands[c].via);
            if (!qos.admits(k.metrics) || !(p[c] > params_.preference.theta_p)) {
                saw_candidate_ = true;
                continue;
            }
            if (!best || p[c] > p[*best]) best = c;
        }
        if (!best) return res;
        const KnownRoute& k = it->second.at(cands[*best].via);
        return found(k.path, measure_path(k.path, net_), p[*best], DiscoveryCase::intra_cluster);
    }

    const NetworkState& net_;
    const ClusterState& clusters_;
    RoutingState& routing_;
    const RoutingParams& params_;
    Rng& rng_;
    Trace* trace_;
    RoutingObserver observer_;

    double now_ = 0.0;
    std::size_t transmissions_ = 0;
    bool saw_candidate_ = false;
    std::map<NodeId, std::vector<NodeId>> adjacency_;
};

} // namespace hant
