#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "hant/error.hpp"
#include "hant/rng.hpp"

namespace hant {

struct NodeId {
    std::uint32_t value = 0;

    friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

inline std::string to_string(NodeId id) { return std::to_string(id.value); }

inline std::ostream& operator<<(std::ostream& os, NodeId id) { return os << id.value; }

// Interface level. A node whose highest level is L<k> owns k+1 interfaces and
// can talk on every level up to and including k.
enum class Level : std::uint8_t { L0 = 0, L1 = 1, L2 = 2 };

inline constexpr std::array<Level, 3> kLevels{Level::L0, Level::L1, Level::L2};

constexpr std::size_t idx(Level l) { return static_cast<std::size_t>(l); }

constexpr int interface_count(Level max_level) { return static_cast<int>(max_level) + 1; }

inline Level level_from_int(int v) {
    if (v < 0 || v > 2) throw Error("bad-level", "interface level must be 0, 1 or 2, got " + std::to_string(v));
    return static_cast<Level>(v);
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }

    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) {
    if (!std::isfinite(a.x) || !std::isfinite(a.y) || !std::isfinite(b.x) || !std::isfinite(b.y))
        throw Error("non-finite", "distance requires finite coordinates");
    return (a - b).norm();
}

struct NodeAttributes {
    Vec2 position;
    Vec2 velocity;
    double energy = 0.0;      // joules
    double mobility = 0.0;    // running-average speed, m/s
    Level max_level = Level::L0;
    std::array<double, 3> tx_range{0.0, 0.0, 0.0};
    double node_delay = 1e-3; // processing + queueing, seconds
    bool alive = true;

    bool supports(Level l) const { return idx(l) <= idx(max_level); }
    double range(Level l) const { return supports(l) ? tx_range[idx(l)] : 0.0; }
};

inline void validate(const NodeAttributes& a) {
    if (!(a.energy >= 0.0)) throw Error("energy-range", "node energy must be >= 0");
    if (!(a.mobility >= 0.0)) throw Error("mobility-range", "node mobility must be >= 0");
    if (!(a.node_delay >= 0.0)) throw Error("delay-range", "node delay must be >= 0");
    for (std::size_t l = 0; l <= idx(a.max_level); ++l) {
        if (!(a.tx_range[l] > 0.0)) throw Error("range-positive", "transmission range must be > 0");
        if (l > 0 && !(a.tx_range[l] > a.tx_range[l - 1]))
            throw Error("range-monotone", "transmission range must strictly increase with level");
    }
}

struct LinkAttributes {
    double delay = 0.0;     // seconds
    double bandwidth = 0.0; // bits/second
    double let = 0.0;       // seconds, may be +inf
};

struct ClusterAddress {
    Level level = Level::L0;
    NodeId head;

    friend auto operator<=>(const ClusterAddress&, const ClusterAddress&) = default;
    std::string to_string() const { return "C" + std::to_string(idx(level)) + "." + hant::to_string(head); }
};

// "<node>.<level>" label of one interface of a node.
inline std::string interface_label(NodeId n, Level l) { return hant::to_string(n) + "." + std::to_string(idx(l)); }

// Time until two nodes moving at constant velocity drift apart to `range`.
// Positive root of |dp + t dv|^2 = range^2; +inf with no relative motion.
inline double link_expiration_time(const NodeAttributes& a, const NodeAttributes& b, double range) {
    const Vec2 dp = b.position - a.position;
    const Vec2 dv = b.velocity - a.velocity;
    const double d = distance(a.position, b.position);
    if (d > range * (1.0 + 1e-12))
        throw Error("out-of-range", "nodes are " + std::to_string(d) + " m apart, beyond range " + std::to_string(range));
    const double qa = dv.dot(dv);
    if (qa == 0.0) return std::numeric_limits<double>::infinity();
    const double qb = 2.0 * dp.dot(dv);
    const double qc = std::min(0.0, dp.dot(dp) - range * range);
    const double disc = std::sqrt(qb * qb - 4.0 * qa * qc);
    // Pick the cancellation-free form of the larger root.
    double t = qb <= 0.0 ? (-qb + disc) / (2.0 * qa) : (2.0 * qc) / (-qb - disc);
    return std::max(0.0, t);
}

struct LinkQuality {
    double delay = 0.0;
    double bandwidth = 0.0;

    friend bool operator==(const LinkQuality&, const LinkQuality&) = default;
};

// Per-level nominal link delay and bandwidth. With jitter > 0 every
// (pair, level) gets a fixed pseudo-random factor in [1-jitter, 1+jitter]
// derived from the seed, so repeated queries agree.
struct LinkModel {
    std::array<double, 3> delay{2e-3, 1e-3, 5e-4};
    std::array<double, 3> bandwidth{2e6, 11e6, 54e6};
    double jitter = 0.0;
    std::uint64_t seed = 0;
    std::map<std::tuple<NodeId, NodeId, Level>, LinkQuality> overrides;

    void set(NodeId a, NodeId b, Level l, LinkQuality q) { overrides[key(a, b, l)] = q; }

    LinkQuality quality(NodeId a, NodeId b, Level l) const {
        if (auto it = overrides.find(key(a, b, l)); it != overrides.end()) return it->second;
        LinkQuality q{delay[idx(l)], bandwidth[idx(l)]};
        if (jitter > 0.0) {
            auto [lo, hi, lv] = key(a, b, l);
            const std::uint64_t h = splitmix64(seed ^ splitmix64((std::uint64_t{lo.value} << 32) | hi.value) ^
                                               (static_cast<std::uint64_t>(idx(lv)) << 60));
            const double u1 = static_cast<double>(h >> 11) * 0x1.0p-53;
            const double u2 = static_cast<double>(splitmix64(h) >> 11) * 0x1.0p-53;
            q.delay *= 1.0 + jitter * (2.0 * u1 - 1.0);
            q.bandwidth *= 1.0 + jitter * (2.0 * u2 - 1.0);
        }
        return q;
    }

    static std::tuple<NodeId, NodeId, Level> key(NodeId a, NodeId b, Level l) {
        return a < b ? std::tuple{a, b, l} : std::tuple{b, a, l};
    }
};

class NetworkState {
public:
    void add_node(NodeId id, NodeAttributes attrs) {
        validate(attrs);
        if (!nodes_.emplace(id, attrs).second) throw Error("duplicate-node", "node " + hant::to_string(id) + " already exists");
    }

    bool contains(NodeId id) const { return nodes_.count(id) != 0; }

    const NodeAttributes& node(NodeId id) const {
        auto it = nodes_.find(id);
        if (it == nodes_.end()) throw Error("unknown-node", "no node with id " + hant::to_string(id));
        return it->second;
    }

    NodeAttributes& node(NodeId id) { return const_cast<NodeAttributes&>(std::as_const(*this).node(id)); }

    const std::map<NodeId, NodeAttributes>& nodes() const { return nodes_; }

    std::vector<NodeId> ids() const {
        std::vector<NodeId> out;
        out.reserve(nodes_.size());
        for (const auto& [id, _] : nodes_) out.push_back(id);
        return out;
    }

    std::size_t size() const { return nodes_.size(); }

    LinkModel& link_model() { return links_; }
    const LinkModel& link_model() const { return links_; }

    // Both endpoints alive, both support the level, and within the shorter
    // of their two ranges at that level.
    bool linked(NodeId a, NodeId b, Level l) const {
        if (a == b) return false;
        const auto& na = node(a);
        const auto& nb = node(b);
        if (!na.alive || !nb.alive || !na.supports(l) || !nb.supports(l)) return false;
        return distance(na.position, nb.position) <= std::min(na.range(l), nb.range(l));
    }

    std::optional<LinkAttributes> link(NodeId a, NodeId b, Level l) const {
        if (!linked(a, b, l)) return std::nullopt;
        const auto& na = node(a);
        const auto& nb = node(b);
        const LinkQuality q = links_.quality(a, b, l);
        return LinkAttributes{q.delay, q.bandwidth, link_expiration_time(na, nb, std::min(na.range(l), nb.range(l)))};
    }

    std::optional<Level> lowest_link_level(NodeId a, NodeId b) const {
        for (Level l : kLevels)
            if (linked(a, b, l)) return l;
        return std::nullopt;
    }

private:
    std::map<NodeId, NodeAttributes> nodes_;
    LinkModel links_;
};

// Sorted one-hop neighbour set of n at a level. Empty when n is dead or has no
// interface at that level.
inline std::vector<NodeId> neighbors(const NetworkState& state, NodeId n, Level level) {
    const auto& self = state.node(n);
    std::vector<NodeId> out;
    if (!self.alive || !self.supports(level)) return out;
    for (const auto& [id, _] : state.nodes())
        if (state.linked(n, id, level)) out.push_back(id);
    return out;
}

} // namespace hant
