#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <vector>

#include "hant/ants.hpp"
#include "hant/clustering.hpp"
#include "hant/error.hpp"
#include "hant/maintenance.hpp"
#include "hant/net_model.hpp"
#include "hant/qos_metrics.hpp"
#include "hant/rng.hpp"
#include "hant/routing.hpp"
#include "hant/scenario.hpp"
#include "hant/trace.hpp"

namespace hant {

enum class EventKind { packet_delivery, beacon, mobility_update, traffic_start, maintenance, election };

inline std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::packet_delivery: return "packet_delivery";
        case EventKind::beacon: return "beacon";
        case EventKind::mobility_update: return "mobility_update";
        case EventKind::traffic_start: return "traffic_start";
        case EventKind::maintenance: return "maintenance";
        case EventKind::election: return "election";
    }
    return "?";
}

struct Event {
    double time = 0.0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::election;
    std::size_t a = 0; // flow index or packet id, by kind
    std::size_t b = 0;
};

// Min-queue on (time, seq); seq is the insertion counter.
class EventQueue {
public:
    std::uint64_t push(double time, EventKind kind, std::size_t a = 0, std::size_t b = 0) {
        if (!std::isfinite(time)) throw Error("bad-time", "event time must be finite");
        heap_.push(Event{time, next_seq_, kind, a, b});
        return next_seq_++;
    }
    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    const Event& top() const { return heap_.top(); }
    Event pop() {
        Event e = heap_.top();
        heap_.pop();
        return e;
    }

private:
    struct Later {
        bool operator()(const Event& x, const Event& y) const { return std::tie(x.time, x.seq) > std::tie(y.time, y.seq); }
    };
    std::priority_queue<Event, std::vector<Event>, Later> heap_;
    std::uint64_t next_seq_ = 0;
};

// Random-waypoint state of one node.
struct MobilityState {
    Vec2 waypoint;
    double speed = 0.0;
    double pause_until = 0.0;
    bool needs_waypoint = true;
    bool mobile = true;
    std::deque<double> samples;
};

inline void draw_waypoint(MobilityState& s, const MobilityConfig& cfg, const ArenaConfig& arena, Rng& rng) {
    s.waypoint = Vec2{rng.uniform(0.0, arena.width), rng.uniform(0.0, arena.height)};
    s.speed = rng.uniform(cfg.speed_min, cfg.speed_max);
    s.needs_waypoint = false;
}

// Advances one node by dt starting at `now`: walk toward the waypoint at
// the current speed; on arrival pause, then draw the next waypoint and
// speed. The node's mobility is the mean speed over the last `window` steps.
inline NodeAttributes mobility_update(NodeAttributes a, MobilityState& s, double dt, double now, const MobilityConfig& cfg,
                                      const ArenaConfig& arena, Rng& rng) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("dt-range", "mobility step must be > 0");
    double remaining = dt;
    double t = now;
    double travelled = 0.0;
    bool moving = false;
    Vec2 dir;
    while (s.mobile && remaining > 0.0) {
        if (s.pause_until > t) {
            const double wait = std::min(remaining, s.pause_until - t);
            t += wait;
            remaining -= wait;
            moving = false;
            continue;
        }
        if (s.needs_waypoint) draw_waypoint(s, cfg, arena, rng);
        if (!(s.speed > 0.0)) {
            moving = false;
            break;
        }
        const Vec2 gap = s.waypoint - a.position;
        const double dist = gap.norm();
        if (dist == 0.0) {
            s.needs_waypoint = true;
            s.pause_until = t + rng.uniform(cfg.pause_min, cfg.pause_max);
            continue;
        }
        dir = (1.0 / dist) * gap;
        const double reach = dist / s.speed;
        if (reach > remaining) {
            a.position = a.position + (s.speed * remaining) * dir;
            travelled += s.speed * remaining;
            remaining = 0.0;
            moving = true;
        } else {
            a.position = s.waypoint;
            travelled += dist;
            remaining -= reach;
            t += reach;
            moving = false;
            s.needs_waypoint = true;
            s.pause_until = t + rng.uniform(cfg.pause_min, cfg.pause_max);
        }
    }
    a.velocity = moving ? s.speed * dir : Vec2{};
    s.samples.push_back(travelled / dt);
    while (static_cast<int>(s.samples.size()) > std::max(1, cfg.window)) s.samples.pop_front();
    double sum = 0.0;
    for (double v : s.samples) sum += v;
    a.mobility = sum / static_cast<double>(s.samples.size());
    return a;
}

enum class EnergyAction { tx, rx, beacon };

inline double energy_cost(const EnergyConfig& c, EnergyAction action, double bits) {
    switch (action) {
        case EnergyAction::tx: return c.tx_per_packet + c.tx_per_bit * bits;
        case EnergyAction::rx: return c.rx_per_packet + c.rx_per_bit * bits;
        case EnergyAction::beacon: return c.beacon_per_packet + c.tx_per_bit * bits;
    }
    return 0.0;
}

// energy' = max(0, energy - cost). A node whose energy reaches 0 through a
// positive cost dies; returns true exactly when this call killed it.
inline bool energy_debit(NodeAttributes& a, EnergyAction action, double bits, const EnergyConfig& c) {
    const double cost = energy_cost(c, action, bits);
    if (!(cost > 0.0)) return false;
    a.energy = std::max(0.0, a.energy - cost);
    if (a.energy <= 0.0 && a.alive) {
        a.alive = false;
        return true;
    }
    return false;
}

struct FlowStats {
    NodeId src;
    NodeId dst;
    std::size_t sent = 0;
    std::size_t delivered = 0;
    std::size_t dropped = 0;
    std::size_t in_flight = 0;
    double delay_sum = 0.0;
    std::size_t discoveries = 0;
    std::size_t admitted = 0;
    std::size_t no_route = 0;
    std::size_t no_admissible_route = 0;

    Json to_json() const {
        return Json{{"src", src.value},
                    {"dst", dst.value},
                    {"sent", sent},
                    {"delivered", delivered},
                    {"dropped", dropped},
                    {"in_flight", in_flight},
                    {"mean_delay", delivered ? jnum(delay_sum / static_cast<double>(delivered)) : Json(nullptr)},
                    {"discoveries", discoveries},
                    {"admitted", admitted},
                    {"no_route", no_route},
                    {"no_admissible_route", no_admissible_route}};
    }
};

struct RunStats {
    std::uint64_t seed = 0;
    double duration = 0.0;
    std::size_t packets_sent = 0;
    std::size_t packets_delivered = 0;
    std::size_t packets_dropped = 0;
    std::size_t packets_in_flight = 0;
    double delay_sum = 0.0;
    std::size_t ant_packets = 0;
    std::size_t beacon_packets = 0;
    std::array<std::size_t, 3> elections{}; // cluster heads elected, per level
    std::size_t deaths = 0;
    std::size_t events = 0;
    std::vector<FlowStats> flows;

    double mean_delay() const { return packets_delivered ? delay_sum / static_cast<double>(packets_delivered) : 0.0; }
    std::size_t control_overhead() const { return ant_packets + beacon_packets; }
    double delivery_ratio() const {
        return packets_sent ? static_cast<double>(packets_delivered) / static_cast<double>(packets_sent) : 0.0;
    }

    Json to_json() const {
        Json flows_j = Json::array();
        for (const auto& f : flows) flows_j.push_back(f.to_json());
        return Json{{"seed", seed},
                    {"duration", jnum(duration)},
                    {"packets_sent", packets_sent},
                    {"packets_delivered", packets_delivered},
                    {"packets_dropped", packets_dropped},
                    {"packets_in_flight", packets_in_flight},
                    {"delivery_ratio", jnum(delivery_ratio())},
                    {"mean_delay", jnum(mean_delay())},
                    {"ant_packets", ant_packets},
                    {"beacon_packets", beacon_packets},
                    {"control_overhead", control_overhead()},
                    {"elections", elections},
                    {"deaths", deaths},
                    {"events", events},
                    {"flows", flows_j}};
    }
};

// Node ids 0..N-1 in order of interface level when generated from counts,
// placed uniformly in the arena with the topology stream.
inline NetworkState build_network(const ScenarioConfig& c, Rng& topology) {
    NetworkState net;
    auto& lm = net.link_model();
    lm.delay = c.links.delay;
    lm.bandwidth = c.links.bandwidth;
    lm.jitter = c.links.jitter;
    lm.seed = splitmix64(c.seed ^ fnv1a("links"));
    auto base = [&](int level) {
        NodeAttributes a;
        a.energy = c.nodes.energy;
        a.tx_range = c.nodes.ranges;
        a.node_delay = c.nodes.node_delay;
        a.max_level = level_from_int(level);
        return a;
    };
    if (!c.nodes.list.empty()) {
        for (const auto& s : c.nodes.list) {
            NodeAttributes a = base(s.max_level);
            a.position = s.position;
            if (s.energy) a.energy = *s.energy;
            if (s.ranges) a.tx_range = *s.ranges;
            validate(a);
            net.add_node(s.id, a);
        }
    } else {
        std::uint32_t id = 0;
        for (int level = 0; level < 3; ++level)
            for (int k = 0; k < c.nodes.counts[static_cast<std::size_t>(level)]; ++k) {
                NodeAttributes a = base(level);
                a.position = Vec2{topology.uniform(0.0, c.arena.width), topology.uniform(0.0, c.arena.height)};
                validate(a);
                net.add_node(NodeId{id++}, a);
            }
    }
    for (const auto& o : c.links.overrides) lm.set(o.a, o.b, level_from_int(o.level), LinkQuality{o.delay, o.bandwidth});
    return net;
}

// Optional instrumentation for tests and the acceptance gate.
struct SimHooks {
    std::function<void(const AntPacket&)> on_ant;
    std::function<void(std::span<const double>)> on_preference;
    std::function<void(const Event&)> on_event;
    std::function<void(const NetworkState&, double now)> after_event;
};

// One simulator instance. Everything it touches is reachable from the
// instance, so separate instances can run on separate threads.
class Simulator {
public:
    explicit Simulator(ScenarioConfig cfg, std::ostream* trace_out = nullptr, int verbosity = 1)
        : cfg_(std::move(cfg)), trace_(trace_out ? Trace(*trace_out, verbosity) : Trace()), root_(cfg_.seed),
          topology_(root_.fork("topology")), mobility_rng_(root_.fork("mobility")), election_rng_(root_.fork("election")),
          routing_rng_(root_.fork("routing")), routing_(cfg_.routing) {
        if (auto issues = validate_scenario(cfg_); !issues.empty()) throw ScenarioError(std::move(issues));
        beacons_.params = cfg_.beacon;
        net_ = build_network(cfg_, topology_);
        for (const auto& [id, _] : net_.nodes()) {
            MobilityState s;
            s.mobile = cfg_.mobility.model == "random_waypoint";
            for (const auto& spec : cfg_.nodes.list)
                if (spec.id == id) s.mobile = s.mobile && spec.mobile;
            mobility_[id] = s;
        }
    }

    SimHooks hooks;

    const ScenarioConfig& config() const { return cfg_; }
    const NetworkState& network() const { return net_; }
    NetworkState& network() { return net_; }
    const ClusterState& clusters() const { return clusters_; }
    const RoutingState& routing() const { return routing_; }
    const RunStats& stats() const { return stats_; }

    RunStats run() {
        if (ran_) throw Error("already-run", "a simulator instance runs once");
        ran_ = true;
        stats_ = RunStats{};
        stats_.seed = cfg_.seed;
        stats_.duration = cfg_.duration;
        for (const auto& f : cfg_.flows) stats_.flows.push_back(FlowStats{f.src, f.dst});
        flow_routes_.assign(cfg_.flows.size(), std::nullopt);

        trace_.emit(1, Json{{"t", jnum(0.0)}, {"ev", "start"}, {"seed", cfg_.seed}, {"nodes", net_.size()}, {"flows", cfg_.flows.size()},
                            {"duration", jnum(cfg_.duration)}});

        queue_.push(0.0, EventKind::election);
        queue_.push(cfg_.beacon.interval, EventKind::beacon);
        queue_.push(cfg_.evaporation_interval, EventKind::maintenance);
        if (cfg_.mobility.model == "random_waypoint") queue_.push(cfg_.mobility.update_interval, EventKind::mobility_update);
        for (std::size_t f = 0; f < cfg_.flows.size(); ++f) queue_.push(cfg_.flows[f].start, EventKind::traffic_start, f, 0);

        double clock = 0.0;
        while (!queue_.empty() && queue_.top().time <= cfg_.duration) {
            Event ev = queue_.pop();
            if (ev.time < clock) throw Error("clock", "event time went backwards");
            clock = ev.time;
            ++stats_.events;
            if (hooks.on_event) hooks.on_event(ev);
            dispatch(ev);
            if (hooks.after_event) hooks.after_event(net_, clock);
        }
        for (const auto& [_, p] : in_flight_) ++stats_.flows[p.flow].in_flight;
        stats_.packets_in_flight = in_flight_.size();
        stats_.elections = maintainer_elections();
        for (std::size_t l = 0; l < 3; ++l) stats_.elections[l] += initial_elections_[l];
        trace_.emit(1, Json{{"t", jnum(cfg_.duration)}, {"ev", "summary"}, {"stats", stats_.to_json()}});
        return stats_;
    }

private:
    struct Packet {
        std::size_t flow = 0;
        Route route;
        std::size_t at = 0; // index of the node now holding the packet
        double sent = 0.0;
    };

    void dispatch(const Event& ev) {
        switch (ev.kind) {
            case EventKind::election: initial_election(ev.time); break;
            case EventKind::beacon: beacon_round(ev.time); break;
            case EventKind::maintenance: housekeeping(ev.time); break;
            case EventKind::mobility_update: move_all(ev.time); break;
            case EventKind::traffic_start: send_packet(ev.time, ev.a, ev.b); break;
            case EventKind::packet_delivery: deliver(ev.time, ev.a); break;
        }
    }

    std::array<std::size_t, 3> maintainer_elections() const { return maintainer_ ? maintainer_->elections() : std::array<std::size_t, 3>{}; }

    void initial_election(double now) {
        clusters_ = cluster_network(net_, cfg_.clustering, election_rng_);
        beacons_.reset(clusters_, now);
        maintainer_.emplace(net_, clusters_, beacons_, cfg_.clustering, election_rng_, &trace_, &routing_);
        maintainer_->on_beacon = [this](NodeId from, NodeId to) {
            ++stats_.beacon_packets;
            pending_.push_back({from, from == to ? EnergyAction::beacon : EnergyAction::tx, cfg_.beacon.beacon_bits});
            if (from != to) pending_.push_back({to, EnergyAction::rx, cfg_.beacon.beacon_bits});
        };
        for (Level l : kLevels) {
            const auto& lc = clusters_.at(l);
            initial_elections_[idx(l)] = lc.members.size();
            if (lc.members.empty()) continue;
            Json heads = Json::array();
            for (const auto& [h, _] : lc.members) heads.push_back(h.value);
            trace_.emit(1, Json{{"t", jnum(now)}, {"ev", "election"}, {"level", idx(l)}, {"nodes", lc.size()}, {"heads", heads}});
        }
    }

    void beacon_round(double now) {
        if (maintainer_) {
            maintainer_->tick(now);
            settle_energy(now);
        }
        queue_.push(now + cfg_.beacon.interval, EventKind::beacon);
    }

    void housekeeping(double now) {
        routing_.evaporate_all(cfg_.routing.q);
        for (auto& pl : routing_.planes)
            for (auto& [_, nr] : pl.nodes) nr.cache.purge_expired(now);
        queue_.push(now + cfg_.evaporation_interval, EventKind::maintenance);
    }

    void move_all(double now) {
        const double dt = cfg_.mobility.update_interval;
        for (auto& [id, s] : mobility_) {
            auto& a = net_.node(id);
            if (!a.alive) {
                a.velocity = Vec2{};
                continue;
            }
            a = mobility_update(a, s, dt, now - dt, cfg_.mobility, cfg_.arena, mobility_rng_);
        }
        if (trace_.enabled(2)) {
            Json pos = Json::object();
            for (const auto& [id, a] : net_.nodes()) pos[to_string(id)] = Json::array({jnum(a.position.x), jnum(a.position.y)});
            trace_.emit(2, Json{{"t", jnum(now)}, {"ev", "move"}, {"positions", pos}});
        }
        queue_.push(now + dt, EventKind::mobility_update);
    }

    struct Debit {
        NodeId node;
        EnergyAction action;
        double bits;
    };

    void settle_energy(double now) {
        for (const auto& d : pending_) {
            if (energy_debit(net_.node(d.node), d.action, d.bits, cfg_.energy)) {
                ++stats_.deaths;
                trace_.emit(1, Json{{"t", jnum(now)}, {"ev", "death"}, {"node", d.node.value}});
            }
        }
        pending_.clear();
    }

    void drop(double now, std::size_t flow, const std::string& reason, std::optional<std::size_t> id = {}) {
        ++stats_.packets_dropped;
        ++stats_.flows[flow].dropped;
        if (trace_.enabled(2)) {
            Json j{{"t", jnum(now)}, {"ev", "drop"}, {"flow", flow}, {"reason", reason}};
            if (id) j["packet"] = *id;
            trace_.emit(2, j);
        }
    }

    void send_packet(double now, std::size_t flow, std::size_t k) {
        const auto& f = cfg_.flows[flow];
        if (k + 1 < static_cast<std::size_t>(f.packet_count))
            queue_.push(now + f.packet_interval, EventKind::traffic_start, flow, k + 1);
        if (!net_.node(f.src).alive) return;

        ++stats_.packets_sent;
        auto& fs = stats_.flows[flow];
        ++fs.sent;
        auto& route = flow_routes_[flow];
        if (route && (!route_is_live(net_, *route) || !f.qos.admits(measure_path(*route, net_)))) route.reset();
        if (!route) {
            ++fs.discoveries;
            RoutingObserver obs;
            obs.on_ant = [this](const AntPacket& a) {
                ++stats_.ant_packets;
                if (hooks.on_ant) hooks.on_ant(a);
            };
            obs.on_preference = hooks.on_preference;
            obs.on_transmit = [this](NodeId from, NodeId to, double bits) {
                pending_.push_back({from, EnergyAction::tx, bits});
                pending_.push_back({to, EnergyAction::rx, bits});
            };
            Router router(net_, clusters_, routing_, cfg_.routing, routing_rng_, &trace_, std::move(obs));
            DiscoveryResult res = router.discover_route(f.src, f.dst, f.qos, now);
            if (res.found()) {
                ++fs.admitted;
                route = res.route;
            } else if (res.status == DiscoveryStatus::no_admissible_route) {
                ++fs.no_admissible_route;
            } else {
                ++fs.no_route;
            }
        }
        const std::size_t id = next_packet_++;
        if (!route) {
            settle_energy(now);
            drop(now, flow, "no-route", id);
            return;
        }
        in_flight_[id] = Packet{flow, *route, 0, now};
        if (trace_.enabled(2))
            trace_.emit(2, Json{{"t", jnum(now)}, {"ev", "send"}, {"flow", flow}, {"packet", id}, {"route", to_string(*route)}});
        forward(now, id, net_.node(route->source()).node_delay);
        settle_energy(now);
    }

    // Pushes the packet one hop on from where it is; the hop takes the link
    // delay plus the receiver's node delay (plus `extra` at the source).
    void forward(double now, std::size_t id, double extra = 0.0) {
        auto& p = in_flight_.at(id);
        const NodeId from = p.route.nodes[p.at];
        const NodeId to = p.route.nodes[p.at + 1];
        const Level l = p.route.levels[p.at];
        const auto link = net_.link(from, to, l);
        if (!net_.node(from).alive || !link) {
            const std::size_t flow = p.flow;
            in_flight_.erase(id);
            flow_routes_[flow].reset();
            drop(now, flow, "link-broken", id);
            return;
        }
        pending_.push_back({from, EnergyAction::tx, cfg_.packet_bits});
        pending_.push_back({to, EnergyAction::rx, cfg_.packet_bits});
        queue_.push(now + extra + link->delay + net_.node(to).node_delay, EventKind::packet_delivery, id);
    }

    void deliver(double now, std::size_t id) {
        auto it = in_flight_.find(id);
        if (it == in_flight_.end()) return;
        auto& p = it->second;
        ++p.at;
        const NodeId here = p.route.nodes[p.at];
        if (!net_.node(here).alive) {
            const std::size_t flow = p.flow;
            in_flight_.erase(it);
            flow_routes_[flow].reset();
            drop(now, flow, "node-dead", id);
            return;
        }
        if (here == p.route.destination()) {
            const double delay = now - p.sent;
            ++stats_.packets_delivered;
            stats_.delay_sum += delay;
            auto& fs = stats_.flows[p.flow];
            ++fs.delivered;
            fs.delay_sum += delay;
            if (trace_.enabled(2))
                trace_.emit(2, Json{{"t", jnum(now)}, {"ev", "deliver"}, {"flow", p.flow}, {"packet", id}, {"delay", jnum(delay)}});
            in_flight_.erase(it);
            return;
        }
        forward(now, id);
        settle_energy(now);
    }

    ScenarioConfig cfg_;
    Trace trace_;
    Rng root_;
    Rng topology_;
    Rng mobility_rng_;
    Rng election_rng_;
    Rng routing_rng_;

    NetworkState net_;
    ClusterState clusters_;
    RoutingState routing_;
    BeaconState beacons_;
    std::optional<Maintainer> maintainer_;
    std::map<NodeId, MobilityState> mobility_;

    EventQueue queue_;
    RunStats stats_;
    std::array<std::size_t, 3> initial_elections_{};
    std::vector<std::optional<Route>> flow_routes_;
    std::map<std::size_t, Packet> in_flight_;
    std::size_t next_packet_ = 0;
    std::vector<Debit> pending_;
    bool ran_ = false;
};

inline RunStats run(const ScenarioConfig& cfg, std::ostream* trace_out = nullptr, int verbosity = 1) {
    Simulator sim(cfg, trace_out, verbosity);
    return sim.run();
}

} // namespace hant
