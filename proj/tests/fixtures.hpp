#pragma once

// Hand-built topologies shared by the unit tests and the acceptance run.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "hant/hant.hpp"

namespace fixture {

using namespace hant;

// Three regions, each served by a 3-interface node at its centre with two
// 2-interface level-0 heads 100 m away and two single-interface members per
// head. Level-1 range covers a region, level-2 range reaches every centre.
struct ThreeRegions {
    NetworkState net;
    std::vector<NodeId> centres;
    std::vector<NodeId> members;
    std::vector<int> region_of; // indexed by node id
};

inline ThreeRegions three_regions() {
    ThreeRegions f;
    const Vec2 centres[3] = {{0, 0}, {400, 0}, {200, 300}};
    std::uint32_t id = 0;
    auto put = [&](Vec2 p, Level l, int region) {
        NodeAttributes a;
        a.position = p;
        a.energy = 100;
        a.max_level = l;
        a.tx_range = {60, 150, 500};
        f.net.add_node(NodeId{id}, a);
        f.region_of.push_back(region);
        return NodeId{id++};
    };
    for (int r = 0; r < 3; ++r) {
        const Vec2 c = centres[r];
        f.centres.push_back(put(c, Level::L2, r));
        const Vec2 heads[3] = {c, c + Vec2{-100, 0}, c + Vec2{100, 0}};
        for (int h = 1; h < 3; ++h) put(heads[h], Level::L1, r);
        for (Vec2 hp : heads)
            for (double dy : {40.0, -40.0}) f.members.push_back(put(hp + Vec2{0, dy}, Level::L0, r));
    }
    return f;
}

// One cluster: node 0 at the centre with a long range, the rest scattered in
// a disc around it so that all of them hear it. Link delays are jittered so
// the minimum-delay path between two non-adjacent members is not obvious.
struct SingleCluster {
    NetworkState net;
    ClusterState clusters;
    NodeId src;
    NodeId dst;
};

inline SingleCluster single_cluster(std::uint64_t seed, std::size_t max_nodes = 20) {
    Rng rng(seed);
    while (true) {
        SingleCluster s;
        const std::size_t n = 8 + rng.index(max_nodes - 7);
        const double r = 70.0;
        NodeAttributes a;
        a.energy = 50;
        a.tx_range = {1000, 0, 0};
        a.node_delay = rng.uniform(5e-4, 2e-3);
        s.net.add_node(NodeId{0}, a);
        a.tx_range = {r, 0, 0};
        for (std::uint32_t i = 1; i < n; ++i) {
            double x, y;
            do {
                x = rng.uniform(-r, r);
                y = rng.uniform(-r, r);
            } while (x * x + y * y > r * r);
            a.position = {x, y};
            a.node_delay = rng.uniform(5e-4, 2e-3);
            s.net.add_node(NodeId{i}, a);
        }
        s.net.link_model().jitter = 0.9;
        s.net.link_model().seed = rng.next();
        auto& l0 = s.clusters.at(Level::L0);
        l0.make_head(NodeId{0});
        for (std::uint32_t i = 1; i < n; ++i) l0.add_member(NodeId{0}, NodeId{i});

        std::vector<std::pair<NodeId, NodeId>> far;
        for (std::uint32_t i = 1; i < n; ++i)
            for (std::uint32_t j = i + 1; j < n; ++j)
                if (!s.net.linked(NodeId{i}, NodeId{j}, Level::L0)) far.emplace_back(NodeId{i}, NodeId{j});
        if (far.empty()) continue;
        std::tie(s.src, s.dst) = far[rng.index(far.size())];
        return s;
    }
}

// Routing parameters under which only delay matters.
inline RoutingParams delay_only() {
    RoutingParams p;
    p.deposit = DepositParams{0, 0, 0, 1, 0};
    p.preference.alpha = {0, 1, 0, 0, 0, 0};
    p.ant_rounds = 30;
    return p;
}

// A clustered network with beacon bookkeeping that can be stepped one beacon
// interval at a time. Records every maintenance label seen.
class Live {
public:
    NetworkState net;
    ClusterState clusters;
    BeaconState beacons;
    WeightParams wp;
    RoutingState routing;
    Rng rng{7};
    double now = 0.0;
    std::vector<std::pair<double, MaintenanceRecord>> log;
    std::set<Level> elected;

    explicit Live(NetworkState n, std::uint64_t seed = 1) : net(std::move(n)) {
        Rng r(seed);
        clusters = cluster_network(net, wp, r);
        beacons.reset(clusters, now);
    }
    Live(const Live&) = delete;

    MaintenanceReport step(Trace* trace = nullptr) {
        now += beacons.params.interval;
        Maintainer m(net, clusters, beacons, wp, rng, trace, &routing);
        auto rep = m.tick(now);
        for (const auto& r : rep.records) log.emplace_back(now, r);
        elected.insert(rep.elected.begin(), rep.elected.end());
        return rep;
    }

    bool sound() const { return check_invariants(net, clusters).empty(); }

    bool saw(std::string_view label) const {
        return std::any_of(log.begin(), log.end(), [&](const auto& e) { return e.second.label == label; });
    }

    std::optional<double> first_time(std::string_view label) const {
        for (const auto& [t, r] : log)
            if (r.label == label) return t;
        return std::nullopt;
    }

    void clear_log() {
        log.clear();
        elected.clear();
    }

    // Runs beacon rounds until the hierarchy is sound again or `window`
    // seconds have passed since `since`; returns the restoration time.
    std::optional<double> settle(double since, double window) {
        while (now - since < window - 1e-9) {
            step();
            if (sound()) return now;
        }
        return sound() ? std::optional<double>(now) : std::nullopt;
    }
};

// Nodes of the three_regions fixture by role: centre of region r, its two level-0
// heads, and the two members of each head.
inline NodeId centre(int r) { return NodeId{static_cast<std::uint32_t>(9 * r)}; }
inline NodeId side_head(int r, int k) { return NodeId{static_cast<std::uint32_t>(9 * r + 1 + k)}; }
inline NodeId member(int r, int head, int k) { return NodeId{static_cast<std::uint32_t>(9 * r + 3 + 2 * head + k)}; }

} // namespace fixture
