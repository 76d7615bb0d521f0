#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "hant/clustering.hpp"
#include "hant/error.hpp"
#include "hant/maintenance.hpp"
#include "hant/net_model.hpp"
#include "hant/qos_metrics.hpp"
#include "hant/routing.hpp"

namespace hant {

inline constexpr int kScenarioVersion = 1;

struct ArenaConfig {
    double width = 1000.0;
    double height = 1000.0;

    friend bool operator==(const ArenaConfig&, const ArenaConfig&) = default;
};

struct NodeSpec {
    NodeId id;
    Vec2 position;
    int max_level = 0;
    std::optional<double> energy;
    std::optional<std::array<double, 3>> ranges;
    bool mobile = true;

    friend bool operator==(const NodeSpec& a, const NodeSpec& b) {
        return a.id == b.id && a.position.x == b.position.x && a.position.y == b.position.y && a.max_level == b.max_level &&
               a.energy == b.energy && a.ranges == b.ranges && a.mobile == b.mobile;
    }
};

// Either `counts` (nodes per highest interface level, placed uniformly in the
// arena) or an explicit `list`, not both.
struct NodesConfig {
    std::array<int, 3> counts{30, 15, 5};
    double energy = 100.0;
    std::array<double, 3> ranges{200.0, 450.0, 900.0};
    double node_delay = 1e-3;
    std::vector<NodeSpec> list;

    friend bool operator==(const NodesConfig&, const NodesConfig&) = default;

    std::size_t total() const {
        if (!list.empty()) return list.size();
        return static_cast<std::size_t>(std::max(0, counts[0]) + std::max(0, counts[1]) + std::max(0, counts[2]));
    }
};

struct LinkOverride {
    NodeId a;
    NodeId b;
    int level = 0;
    double delay = 0.0;
    double bandwidth = 0.0;

    friend bool operator==(const LinkOverride&, const LinkOverride&) = default;
};

struct LinksConfig {
    std::array<double, 3> delay{2e-3, 1e-3, 5e-4};
    std::array<double, 3> bandwidth{2e6, 11e6, 54e6};
    double jitter = 0.0;
    std::vector<LinkOverride> overrides;

    friend bool operator==(const LinksConfig&, const LinksConfig&) = default;
};

struct MobilityConfig {
    std::string model = "random_waypoint"; // or "static"
    double speed_min = 0.5;
    double speed_max = 2.0;
    double pause_min = 0.0;
    double pause_max = 5.0;
    double update_interval = 1.0;
    int window = 10;

    friend bool operator==(const MobilityConfig&, const MobilityConfig&) = default;
};

struct EnergyConfig {
    double tx_per_bit = 1e-7;
    double rx_per_bit = 5e-8;
    double tx_per_packet = 0.0;
    double rx_per_packet = 0.0;
    double beacon_per_packet = 1e-5;

    friend bool operator==(const EnergyConfig&, const EnergyConfig&) = default;
};

struct FlowConfig {
    NodeId src;
    NodeId dst;
    double start = 0.0;
    int packet_count = 1;
    double packet_interval = 1.0;
    QosRequirement qos;

    friend bool operator==(const FlowConfig&, const FlowConfig&) = default;
};

struct ScenarioConfig {
    int version = kScenarioVersion;
    std::uint64_t seed = 1;
    double duration = 100.0;
    ArenaConfig arena;
    NodesConfig nodes;
    LinksConfig links;
    WeightParams clustering;
    RoutingParams routing;
    double evaporation_interval = 1.0;
    BeaconParams beacon;
    MobilityConfig mobility;
    EnergyConfig energy;
    double packet_bits = 1024.0;
    std::vector<FlowConfig> flows;

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct ConfigIssue {
    std::string path;
    std::string code;
    std::string message;

    std::string to_string() const { return path + ": " + code + ": " + message; }
};

class ScenarioError : public Error {
public:
    explicit ScenarioError(std::vector<ConfigIssue> issues)
        : Error(issues.empty() ? "invalid-scenario" : issues.front().code, summary(issues)), issues_(std::move(issues)) {}

    const std::vector<ConfigIssue>& issues() const { return issues_; }

private:
    static std::string summary(const std::vector<ConfigIssue>& issues) {
        std::string s;
        for (const auto& i : issues) s += (s.empty() ? "" : "; ") + i.path + " (" + i.message + ")";
        return s;
    }
    std::vector<ConfigIssue> issues_;
};

namespace detail {

inline Json num_json(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

class Reader {
public:
    Reader(const Json& j, std::string path, std::vector<ConfigIssue>& issues) : j_(j), path_(std::move(path)), issues_(issues) {
        if (!j_.is_object()) fail(path_, "type", "expected an object");
    }

    ~Reader() {
        if (!j_.is_object()) return;
        for (const auto& [k, _] : j_.items())
            if (!seen_.count(k)) fail(at(k), "unknown-key", "unknown key");
    }

    Reader(const Reader&) = delete;
    Reader& operator=(const Reader&) = delete;

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const Json* find(const std::string& key) {
        seen_.insert(key);
        if (!j_.is_object()) return nullptr;
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    template <class T>
    void field(const std::string& key, T& out) {
        if (const Json* v = find(key)) read(*v, at(key), out);
    }

    void fail(const std::string& path, const std::string& code, const std::string& msg) { issues_.push_back({path, code, msg}); }

    void read(const Json& v, const std::string& p, double& out) {
        if (v.is_number()) out = v.get<double>();
        else if (v == "inf") out = std::numeric_limits<double>::infinity();
        else if (v == "-inf") out = -std::numeric_limits<double>::infinity();
        else fail(p, "type", "expected a number");
    }
    void read(const Json& v, const std::string& p, int& out) {
        if (v.is_number_integer() && v.get<long long>() >= std::numeric_limits<int>::min() &&
            v.get<long long>() <= std::numeric_limits<int>::max())
            out = v.get<int>();
        else fail(p, "type", "expected an integer");
    }
    void read(const Json& v, const std::string& p, std::uint64_t& out) {
        if (v.is_number_unsigned()) out = v.get<std::uint64_t>();
        else if (v.is_number_integer() && v.get<long long>() >= 0) out = static_cast<std::uint64_t>(v.get<long long>());
        else fail(p, "type", "expected a nonnegative integer");
    }
    void read(const Json& v, const std::string& p, bool& out) {
        if (v.is_boolean()) out = v.get<bool>();
        else fail(p, "type", "expected true or false");
    }
    void read(const Json& v, const std::string& p, std::string& out) {
        if (v.is_string()) out = v.get<std::string>();
        else fail(p, "type", "expected a string");
    }
    void read(const Json& v, const std::string& p, NodeId& out) {
        std::uint64_t t = 0;
        const std::size_t before = issues_.size();
        read(v, p, t);
        if (issues_.size() != before) return;
        if (t > std::numeric_limits<std::uint32_t>::max()) fail(p, "type", "node id out of range");
        else out = NodeId{static_cast<std::uint32_t>(t)};
    }
    template <class T, std::size_t N>
    void read(const Json& v, const std::string& p, std::array<T, N>& out) {
        if (!v.is_array() || v.size() != N) {
            fail(p, "type", "expected an array of " + std::to_string(N));
            return;
        }
        for (std::size_t i = 0; i < N; ++i) read(v[i], p + "[" + std::to_string(i) + "]", out[i]);
    }

private:
    const Json& j_;
    std::string path_;
    std::vector<ConfigIssue>& issues_;
    std::set<std::string> seen_;
};

} // namespace detail

inline Json to_json(const QosRequirement& q) {
    using detail::num_json;
    return Json{{"min_bandwidth", num_json(q.min_bandwidth)}, {"min_energy", num_json(q.min_energy)},
                {"min_let", num_json(q.min_let)}, {"max_delay", num_json(q.max_delay)}};
}

inline Json serialize_json(const ScenarioConfig& c) {
    using detail::num_json;
    Json list = Json::array();
    for (const auto& n : c.nodes.list) {
        Json e{{"id", n.id.value}, {"x", n.position.x}, {"y", n.position.y}, {"max_level", n.max_level}, {"mobile", n.mobile}};
        if (n.energy) e["energy"] = *n.energy;
        if (n.ranges) e["ranges"] = *n.ranges;
        list.push_back(e);
    }
    Json overrides = Json::array();
    for (const auto& o : c.links.overrides)
        overrides.push_back(Json{{"a", o.a.value}, {"b", o.b.value}, {"level", o.level}, {"delay", o.delay}, {"bandwidth", o.bandwidth}});
    Json flows = Json::array();
    for (const auto& f : c.flows)
        flows.push_back(Json{{"src", f.src.value},
                             {"dst", f.dst.value},
                             {"start", f.start},
                             {"packet_count", f.packet_count},
                             {"packet_interval", f.packet_interval},
                             {"qos", to_json(f.qos)}});
    const auto& r = c.routing;
    return Json{
        {"version", c.version},
        {"seed", c.seed},
        {"duration", c.duration},
        {"arena", {{"width", c.arena.width}, {"height", c.arena.height}}},
        {"nodes",
         {{"counts", c.nodes.counts}, {"energy", c.nodes.energy}, {"ranges", c.nodes.ranges}, {"node_delay", c.nodes.node_delay}, {"list", list}}},
        {"links", {{"delay", c.links.delay}, {"bandwidth", c.links.bandwidth}, {"jitter", c.links.jitter}, {"overrides", overrides}}},
        {"clustering",
         {{"w1", c.clustering.w1},
          {"w2", c.clustering.w2},
          {"w3", c.clustering.w3},
          {"w4", c.clustering.w4},
          {"theta_w", num_json(c.clustering.theta_w)},
          {"theta_tau", num_json(c.clustering.theta_tau)},
          {"rho", c.clustering.rho},
          {"n_iter", c.clustering.n_iter}}},
        {"deposit",
         {{"lambda_b", r.deposit.lambda_b},
          {"lambda_e", r.deposit.lambda_e},
          {"lambda_t", r.deposit.lambda_t},
          {"lambda_d", r.deposit.lambda_d},
          {"lambda_hc", r.deposit.lambda_hc}}},
        {"scales",
         {{"delay", r.scales.delay},
          {"bandwidth", r.scales.bandwidth},
          {"energy", r.scales.energy},
          {"let", r.scales.let},
          {"hop_count", r.scales.hop_count},
          {"let_cap", r.scales.let_cap}}},
        {"preference", {{"alpha", r.preference.alpha}, {"theta_p", r.preference.theta_p}}},
        {"routing",
         {{"q", r.q},
          {"ant_rounds", r.ant_rounds},
          {"flood_copies", r.flood_copies},
          {"exploration", r.exploration},
          {"max_hops", r.max_hops},
          {"cache_capacity", r.cache_capacity},
          {"cache_max_age", r.cache_max_age},
          {"tau_min", r.tau_min},
          {"ant_size_bits", r.ant_size_bits},
          {"evaporation_interval", c.evaporation_interval}}},
        {"beacon", {{"interval", c.beacon.interval}, {"miss_threshold", c.beacon.miss_threshold}, {"beacon_bits", c.beacon.beacon_bits}}},
        {"mobility",
         {{"model", c.mobility.model},
          {"speed_min", c.mobility.speed_min},
          {"speed_max", c.mobility.speed_max},
          {"pause_min", c.mobility.pause_min},
          {"pause_max", c.mobility.pause_max},
          {"update_interval", c.mobility.update_interval},
          {"window", c.mobility.window}}},
        {"energy",
         {{"tx_per_bit", c.energy.tx_per_bit},
          {"rx_per_bit", c.energy.rx_per_bit},
          {"tx_per_packet", c.energy.tx_per_packet},
          {"rx_per_packet", c.energy.rx_per_packet},
          {"beacon_per_packet", c.energy.beacon_per_packet}}},
        {"traffic", {{"packet_bits", c.packet_bits}}},
        {"flows", flows},
    };
}

inline std::string serialize(const ScenarioConfig& c) { return serialize_json(c).dump(2) + "\n"; }

// Checks every cross-field constraint. Returns one issue per violation.
inline std::vector<ConfigIssue> validate_scenario(const ScenarioConfig& c) {
    std::vector<ConfigIssue> out;
    auto bad = [&](std::string path, std::string code, std::string msg) { out.push_back({std::move(path), std::move(code), std::move(msg)}); };
    auto check = [&](const std::string& path, auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            bad(path, e.code(), e.what());
        }
    };
    auto finite_pos = [](double v) { return v > 0.0 && std::isfinite(v); };
    auto finite_nonneg = [](double v) { return v >= 0.0 && std::isfinite(v); };

    if (c.version != kScenarioVersion) bad("version", "version", "unsupported scenario version " + std::to_string(c.version));
    if (!finite_pos(c.duration)) bad("duration", "duration-range", "duration must be > 0");
    if (!finite_pos(c.arena.width)) bad("arena.width", "arena-range", "arena width must be > 0");
    if (!finite_pos(c.arena.height)) bad("arena.height", "arena-range", "arena height must be > 0");

    const auto& n = c.nodes;
    for (std::size_t i = 0; i < 3; ++i)
        if (n.counts[i] < 0) bad("nodes.counts[" + std::to_string(i) + "]", "count-range", "node counts must be >= 0");
    if (!n.list.empty() && (n.counts[0] | n.counts[1] | n.counts[2]) != 0)
        bad("nodes", "nodes-exclusive", "give either counts or list, not both");
    if (n.total() == 0) bad("nodes", "no-nodes", "scenario needs at least one node");
    if (!finite_nonneg(n.energy)) bad("nodes.energy", "energy-range", "energy must be >= 0");
    if (!finite_nonneg(n.node_delay)) bad("nodes.node_delay", "delay-range", "node delay must be >= 0");
    check("nodes.ranges", [&] {
        NodeAttributes a;
        a.max_level = Level::L2;
        a.tx_range = n.ranges;
        validate(a);
    });
    std::set<NodeId> ids;
    for (std::size_t i = 0; i < n.list.size(); ++i) {
        const auto& s = n.list[i];
        const std::string p = "nodes.list[" + std::to_string(i) + "]";
        if (!ids.insert(s.id).second) bad(p + ".id", "duplicate-node", "node id " + to_string(s.id) + " repeated");
        if (s.max_level < 0 || s.max_level > 2) bad(p + ".max_level", "level-range", "max_level must be 0, 1 or 2");
        if (!std::isfinite(s.position.x) || !std::isfinite(s.position.y)) bad(p, "non-finite", "position must be finite");
        if (s.energy && !finite_nonneg(*s.energy)) bad(p + ".energy", "energy-range", "energy must be >= 0");
        if (s.ranges && s.max_level >= 0 && s.max_level <= 2)
            check(p + ".ranges", [&] {
                NodeAttributes a;
                a.max_level = level_from_int(s.max_level);
                a.tx_range = *s.ranges;
                validate(a);
            });
    }
    if (n.list.empty())
        for (std::uint32_t i = 0; i < n.total(); ++i) ids.insert(NodeId{i});

    for (std::size_t i = 0; i < 3; ++i) {
        if (!finite_nonneg(c.links.delay[i])) bad("links.delay[" + std::to_string(i) + "]", "delay-range", "link delay must be >= 0");
        if (!finite_pos(c.links.bandwidth[i]))
            bad("links.bandwidth[" + std::to_string(i) + "]", "bandwidth-range", "link bandwidth must be > 0");
    }
    if (!(c.links.jitter >= 0.0 && c.links.jitter < 1.0)) bad("links.jitter", "jitter-range", "jitter must lie in [0,1)");
    for (std::size_t i = 0; i < c.links.overrides.size(); ++i) {
        const auto& o = c.links.overrides[i];
        const std::string p = "links.overrides[" + std::to_string(i) + "]";
        if (!ids.count(o.a) || !ids.count(o.b)) bad(p, "unknown-node", "override names an unknown node");
        if (o.level < 0 || o.level > 2) bad(p + ".level", "level-range", "level must be 0, 1 or 2");
        if (!finite_nonneg(o.delay)) bad(p + ".delay", "delay-range", "link delay must be >= 0");
        if (!finite_pos(o.bandwidth)) bad(p + ".bandwidth", "bandwidth-range", "link bandwidth must be > 0");
    }

    check("clustering", [&] { validate(c.clustering); });
    check("routing", [&] { validate(c.routing); });
    if (!finite_pos(c.evaporation_interval))
        bad("routing.evaporation_interval", "evaporation-interval-range", "evaporation interval must be > 0");
    check("beacon", [&] { validate(c.beacon); });

    const auto& m = c.mobility;
    if (m.model != "random_waypoint" && m.model != "static") bad("mobility.model", "mobility-model", "model must be random_waypoint or static");
    if (!finite_nonneg(m.speed_min) || !finite_nonneg(m.speed_max) || m.speed_min > m.speed_max)
        bad("mobility.speed_min", "speed-range", "need 0 <= speed_min <= speed_max");
    if (!finite_nonneg(m.pause_min) || !finite_nonneg(m.pause_max) || m.pause_min > m.pause_max)
        bad("mobility.pause_min", "pause-range", "need 0 <= pause_min <= pause_max");
    if (!finite_pos(m.update_interval)) bad("mobility.update_interval", "interval-range", "update interval must be > 0");
    if (m.window < 1) bad("mobility.window", "window-range", "window must be >= 1");

    const auto& e = c.energy;
    for (auto [name, v] : {std::pair{"tx_per_bit", e.tx_per_bit}, std::pair{"rx_per_bit", e.rx_per_bit},
                           std::pair{"tx_per_packet", e.tx_per_packet}, std::pair{"rx_per_packet", e.rx_per_packet},
                           std::pair{"beacon_per_packet", e.beacon_per_packet}})
        if (!finite_nonneg(v)) bad(std::string("energy.") + name, "cost-range", "energy costs must be >= 0");
    if (!finite_nonneg(c.packet_bits)) bad("traffic.packet_bits", "size-range", "packet size must be >= 0");

    for (std::size_t i = 0; i < c.flows.size(); ++i) {
        const auto& f = c.flows[i];
        const std::string p = "flows[" + std::to_string(i) + "]";
        if (!ids.count(f.src)) bad(p + ".src", "unknown-node", "unknown source node");
        if (!ids.count(f.dst)) bad(p + ".dst", "unknown-node", "unknown destination node");
        if (f.src == f.dst) bad(p, "same-endpoint", "source and destination must differ");
        if (!finite_nonneg(f.start)) bad(p + ".start", "start-range", "start must be >= 0");
        if (f.packet_count < 1) bad(p + ".packet_count", "count-range", "packet_count must be >= 1");
        if (!finite_pos(f.packet_interval)) bad(p + ".packet_interval", "interval-range", "packet_interval must be > 0");
        if (std::isnan(f.qos.min_bandwidth) || std::isnan(f.qos.min_energy) || std::isnan(f.qos.min_let) || std::isnan(f.qos.max_delay))
            bad(p + ".qos", "qos-range", "QoS floors must be numbers");
    }
    return out;
}

inline ScenarioConfig parse_scenario_json(const Json& j) {
    ScenarioConfig c;
    std::vector<ConfigIssue> issues;
    {
        detail::Reader top(j, "", issues);
        top.field("version", c.version);
        if (!top.find("version")) issues.push_back({"version", "missing-key", "version is required"});
        top.field("seed", c.seed);
        top.field("duration", c.duration);
        if (const Json* v = top.find("arena")) {
            detail::Reader r(*v, "arena", issues);
            r.field("width", c.arena.width);
            r.field("height", c.arena.height);
        }
        if (const Json* v = top.find("nodes")) {
            detail::Reader r(*v, "nodes", issues);
            r.field("counts", c.nodes.counts);
            r.field("energy", c.nodes.energy);
            r.field("ranges", c.nodes.ranges);
            r.field("node_delay", c.nodes.node_delay);
            if (const Json* l = r.find("list")) {
                if (!l->is_array()) issues.push_back({"nodes.list", "type", "expected an array"});
                else
                    for (std::size_t i = 0; i < l->size(); ++i) {
                        NodeSpec s;
                        detail::Reader e((*l)[i], "nodes.list[" + std::to_string(i) + "]", issues);
                        e.field("id", s.id);
                        e.field("x", s.position.x);
                        e.field("y", s.position.y);
                        e.field("max_level", s.max_level);
                        e.field("mobile", s.mobile);
                        if (const Json* en = e.find("energy")) {
                            double x = 0.0;
                            e.read(*en, e.at("energy"), x);
                            s.energy = x;
                        }
                        if (const Json* rg = e.find("ranges")) {
                            std::array<double, 3> x{};
                            e.read(*rg, e.at("ranges"), x);
                            s.ranges = x;
                        }
                        c.nodes.list.push_back(s);
                    }
            }
            if (!c.nodes.list.empty() && !v->contains("counts")) c.nodes.counts = {0, 0, 0};
        }
        if (const Json* v = top.find("links")) {
            detail::Reader r(*v, "links", issues);
            r.field("delay", c.links.delay);
            r.field("bandwidth", c.links.bandwidth);
            r.field("jitter", c.links.jitter);
            if (const Json* l = r.find("overrides")) {
                if (!l->is_array()) issues.push_back({"links.overrides", "type", "expected an array"});
                else
                    for (std::size_t i = 0; i < l->size(); ++i) {
                        LinkOverride o;
                        detail::Reader e((*l)[i], "links.overrides[" + std::to_string(i) + "]", issues);
                        e.field("a", o.a);
                        e.field("b", o.b);
                        e.field("level", o.level);
                        e.field("delay", o.delay);
                        e.field("bandwidth", o.bandwidth);
                        c.links.overrides.push_back(o);
                    }
            }
        }
        if (const Json* v = top.find("clustering")) {
            detail::Reader r(*v, "clustering", issues);
            r.field("w1", c.clustering.w1);
            r.field("w2", c.clustering.w2);
            r.field("w3", c.clustering.w3);
            r.field("w4", c.clustering.w4);
            r.field("theta_w", c.clustering.theta_w);
            r.field("theta_tau", c.clustering.theta_tau);
            r.field("rho", c.clustering.rho);
            r.field("n_iter", c.clustering.n_iter);
        }
        auto& rt = c.routing;
        if (const Json* v = top.find("deposit")) {
            detail::Reader r(*v, "deposit", issues);
            r.field("lambda_b", rt.deposit.lambda_b);
            r.field("lambda_e", rt.deposit.lambda_e);
            r.field("lambda_t", rt.deposit.lambda_t);
            r.field("lambda_d", rt.deposit.lambda_d);
            r.field("lambda_hc", rt.deposit.lambda_hc);
        }
        if (const Json* v = top.find("scales")) {
            detail::Reader r(*v, "scales", issues);
            r.field("delay", rt.scales.delay);
            r.field("bandwidth", rt.scales.bandwidth);
            r.field("energy", rt.scales.energy);
            r.field("let", rt.scales.let);
            r.field("hop_count", rt.scales.hop_count);
            r.field("let_cap", rt.scales.let_cap);
        }
        if (const Json* v = top.find("preference")) {
            detail::Reader r(*v, "preference", issues);
            r.field("alpha", rt.preference.alpha);
            r.field("theta_p", rt.preference.theta_p);
        }
        if (const Json* v = top.find("routing")) {
            detail::Reader r(*v, "routing", issues);
            r.field("q", rt.q);
            r.field("ant_rounds", rt.ant_rounds);
            r.field("flood_copies", rt.flood_copies);
            r.field("exploration", rt.exploration);
            r.field("max_hops", rt.max_hops);
            r.field("cache_capacity", rt.cache_capacity);
            r.field("cache_max_age", rt.cache_max_age);
            r.field("tau_min", rt.tau_min);
            r.field("ant_size_bits", rt.ant_size_bits);
            r.field("evaporation_interval", c.evaporation_interval);
        }
        if (const Json* v = top.find("beacon")) {
            detail::Reader r(*v, "beacon", issues);
            r.field("interval", c.beacon.interval);
            r.field("miss_threshold", c.beacon.miss_threshold);
            r.field("beacon_bits", c.beacon.beacon_bits);
        }
        if (const Json* v = top.find("mobility")) {
            detail::Reader r(*v, "mobility", issues);
            r.field("model", c.mobility.model);
            r.field("speed_min", c.mobility.speed_min);
            r.field("speed_max", c.mobility.speed_max);
            r.field("pause_min", c.mobility.pause_min);
            r.field("pause_max", c.mobility.pause_max);
            r.field("update_interval", c.mobility.update_interval);
            r.field("window", c.mobility.window);
        }
        if (const Json* v = top.find("energy")) {
            detail::Reader r(*v, "energy", issues);
            r.field("tx_per_bit", c.energy.tx_per_bit);
            r.field("rx_per_bit", c.energy.rx_per_bit);
            r.field("tx_per_packet", c.energy.tx_per_packet);
            r.field("rx_per_packet", c.energy.rx_per_packet);
            r.field("beacon_per_packet", c.energy.beacon_per_packet);
        }
        if (const Json* v = top.find("traffic")) {
            detail::Reader r(*v, "traffic", issues);
            r.field("packet_bits", c.packet_bits);
        }
        if (const Json* v = top.find("flows")) {
            if (!v->is_array()) issues.push_back({"flows", "type", "expected an array"});
            else
                for (std::size_t i = 0; i < v->size(); ++i) {
                    FlowConfig f;
                    const std::string p = "flows[" + std::to_string(i) + "]";
                    detail::Reader e((*v)[i], p, issues);
                    e.field("src", f.src);
                    e.field("dst", f.dst);
                    e.field("start", f.start);
                    e.field("packet_count", f.packet_count);
                    e.field("packet_interval", f.packet_interval);
                    if (const Json* q = e.find("qos")) {
                        detail::Reader qr(*q, p + ".qos", issues);
                        qr.field("min_bandwidth", f.qos.min_bandwidth);
                        qr.field("min_energy", f.qos.min_energy);
                        qr.field("min_let", f.qos.min_let);
                        qr.field("max_delay", f.qos.max_delay);
                    }
                    c.flows.push_back(f);
                }
        }
    }
    if (issues.empty()) issues = validate_scenario(c);
    if (!issues.empty()) throw ScenarioError(std::move(issues));
    return c;
}

inline ScenarioConfig parse_scenario(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        throw ScenarioError({{"", "syntax", e.what()}});
    }
    return parse_scenario_json(j);
}

} // namespace hant
