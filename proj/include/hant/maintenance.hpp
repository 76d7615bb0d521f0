#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hant/clustering.hpp"
#include "hant/error.hpp"
#include "hant/net_model.hpp"
#include "hant/rng.hpp"
#include "hant/routing.hpp"
#include "hant/trace.hpp"

namespace hant {

struct BeaconParams {
    double interval = 1.0;
    int miss_threshold = 3;
    double beacon_bits = 256.0;

    friend bool operator==(const BeaconParams&, const BeaconParams&) = default;

    double detection_window() const { return interval * miss_threshold; }
};

inline void validate(const BeaconParams& p) {
    if (!(p.interval > 0.0) || !std::isfinite(p.interval)) throw Error("beacon-interval-range", "beacon interval must be > 0");
    if (p.miss_threshold < 1) throw Error("miss-threshold-range", "miss_threshold must be >= 1");
    if (!(p.beacon_bits >= 0.0)) throw Error("beacon-bits-range", "beacon size must be >= 0");
}

// last_heard[level][(listener, speaker)]: when the listener last received a
// beacon (member from head) or an acknowledgement (head from member).
struct BeaconState {
    BeaconParams params;
    std::array<std::map<std::pair<NodeId, NodeId>, double>, 3> last_heard;
    std::array<std::map<NodeId, double>, 3> last_beacon; // head -> last time it beaconed

    double heard(Level l, NodeId listener, NodeId speaker, double fallback) const {
        const auto& m = last_heard[idx(l)];
        auto it = m.find({listener, speaker});
        return it == m.end() ? fallback : it->second;
    }

    bool expired(double last, double now) const { return now - last >= params.detection_window() - 1e-9; }

    bool stale(Level l, NodeId listener, NodeId speaker, double now) const {
        return expired(heard(l, listener, speaker, now), now);
    }

    // Marks every current head/member pair as heard at `now`.
    void reset(const ClusterState& clusters, double now) {
        for (Level l : kLevels) {
            last_heard[idx(l)].clear();
            last_beacon[idx(l)].clear();
            refresh(clusters, l, now);
        }
    }

    // Keeps entries for current pairs only; new pairs start fresh at `now`.
    void refresh(const ClusterState& clusters, Level l, double now) {
        std::map<std::pair<NodeId, NodeId>, double> next;
        std::map<NodeId, double> beacons;
        for (const auto& [h, ms] : clusters.at(l).members) {
            beacons[h] = last_beacon[idx(l)].count(h) ? last_beacon[idx(l)].at(h) : now;
            for (NodeId m : ms) {
                next[{m, h}] = heard(l, m, h, now);
                next[{h, m}] = heard(l, h, m, now);
            }
        }
        last_heard[idx(l)] = std::move(next);
        last_beacon[idx(l)] = std::move(beacons);
    }
};

inline bool participates(const NetworkState& net, const ClusterState& clusters, Level l, NodeId n) {
    if (!net.contains(n)) return false;
    const auto& a = net.node(n);
    if (!a.alive || !a.supports(l)) return false;
    return l == Level::L0 || clusters.at(static_cast<Level>(idx(l) - 1)).is_head(n);
}

struct BeaconTick {
    std::size_t beacons = 0;
    std::size_t acks = 0;
    std::vector<NodeId> newcomers;      // uncovered participants that answered
    std::vector<NodeId> heads_in_range; // other heads that heard the beacon (level 0)
};

// One beacon from `head` at level l. Members in range refresh their view
// of the head and acknowledge; uncovered participants in range answer too.
inline BeaconTick beacon_tick(Level l, NodeId head, const NetworkState& net, const ClusterState& clusters,
                              BeaconState& beacons, double now,
                              const std::function<void(NodeId from, NodeId to)>& on_send = {}) {
    BeaconTick out;
    const auto& lc = clusters.at(l);
    if (!lc.is_head(head) || !net.node(head).alive) return out;
    beacons.last_beacon[idx(l)][head] = now;
    ++out.beacons;
    if (on_send) on_send(head, head);
    auto& heard = beacons.last_heard[idx(l)];
    for (NodeId v : neighbors(net, head, l)) {
        const auto h = lc.head(v);
        if (h && *h == head) {
            heard[{v, head}] = now;
            heard[{head, v}] = now;
        } else if (!h && participates(net, clusters, l, v)) {
            out.newcomers.push_back(v);
        } else if (l == Level::L0 && lc.is_head(v)) {
            out.heads_in_range.push_back(v);
            continue;
        } else {
            continue;
        }
        ++out.acks;
        if (on_send) on_send(v, head);
    }
    return out;
}

enum class ChangeKind { member_left, head_left, member_joined, heads_in_range };

struct ChangeEvent {
    ChangeKind kind = ChangeKind::member_left;
    Level level = Level::L0;
    NodeId node;
    std::optional<NodeId> other;
};

struct MaintenanceRecord {
    std::string label;
    Level level = Level::L0;
    NodeId node;

    friend bool operator==(const MaintenanceRecord&, const MaintenanceRecord&) = default;
};

struct MaintenanceReport {
    std::vector<MaintenanceRecord> records;
    std::set<Level> elected;
    std::vector<NodeId> departed;
    std::size_t beacons = 0;
    std::size_t acks = 0;

    bool has(std::string_view label) const {
        return std::any_of(records.begin(), records.end(), [&](const auto& r) { return r.label == label; });
    }
};

inline std::string leave_label(Level l, bool head) {
    switch (l) {
        case Level::L0: return head ? "1.2" : "1.1";
        case Level::L1: return head ? "4.1" : "4.2";
        case Level::L2: return head ? "6.1" : "6.2";
    }
    return "?";
}

inline std::string join_label(Level l) {
    switch (l) {
        case Level::L0: return "2";
        case Level::L1: return "5";
        case Level::L2: return "7";
    }
    return "?";
}

// Beacon-driven upkeep of the three-level hierarchy. tick() runs one beacon
// round on every level and repairs whatever it detected; apply() takes the
// change events directly and repairs level by level, bottom up, so each
// level sees the heads the level below settled on.
class Maintainer {
public:
    Maintainer(const NetworkState& net, ClusterState& clusters, BeaconState& beacons, const WeightParams& weights, Rng& rng,
               Trace* trace = nullptr, RoutingState* routing = nullptr)
        : net_(net), clusters_(clusters), beacons_(beacons), wp_(weights), rng_(rng), trace_(trace), routing_(routing) {}

    std::function<void(NodeId from, NodeId to)> on_beacon;

    MaintenanceReport tick(double now) {
        std::size_t sent = 0, acks = 0;
        for (Level l : kLevels) {
            for (NodeId h : clusters_.at(l).heads()) {
                auto t = beacon_tick(l, h, net_, clusters_, beacons_, now, on_beacon);
                sent += t.beacons;
                acks += t.acks;
                if (trace_ && trace_->enabled(2) && t.beacons)
                    trace_->emit(2, Json{{"t", jnum(now)}, {"ev", "beacon"}, {"level", idx(l)}, {"head", h.value}, {"acks", t.acks}});
            }
        }
        auto rep = apply(detect(now), now);
        rep.beacons = sent;
        rep.acks = acks;
        return rep;
    }

    // Departures visible from the beacon bookkeeping at `now`.
    std::vector<ChangeEvent> detect(double now) const {
        std::vector<ChangeEvent> out;
        for (Level l : kLevels) {
            for (const auto& [h, ms] : clusters_.at(l).members) {
                if (ms.empty()) {
                    const auto& lb = beacons_.last_beacon[idx(l)];
                    const double last = lb.count(h) ? lb.at(h) : now;
                    if (!net_.node(h).alive && beacons_.expired(last, now)) out.push_back({ChangeKind::head_left, l, h, {}});
                    continue;
                }
                const bool lost = std::all_of(ms.begin(), ms.end(), [&](NodeId m) { return beacons_.stale(l, m, h, now); });
                if (lost) {
                    out.push_back({ChangeKind::head_left, l, h, {}});
                    continue;
                }
                for (NodeId m : ms)
                    if (beacons_.stale(l, h, m, now)) out.push_back({ChangeKind::member_left, l, m, h});
            }
        }
        return out;
    }

    MaintenanceReport apply(std::span<const ChangeEvent> events, double now) {
        for (const auto& ev : events) {
            net_.node(ev.node);
            if (ev.other) net_.node(*ev.other);
        }
        now_ = now;
        MaintenanceReport rep;
        for (Level l : kLevels) {
            std::vector<NodeId> arrivals;
            std::set<NodeId> reelect; // heads whose clusters must re-elect outright
            std::vector<std::pair<NodeId, NodeId>> merges;
            for (const auto& ev : events) {
                if (ev.level != l) continue;
                switch (ev.kind) {
                    case ChangeKind::member_left: leave(rep, l, ev.node, reelect); break;
                    case ChangeKind::head_left: leave(rep, l, ev.node, reelect); break;
                    case ChangeKind::member_joined: join(rep, l, ev.node, ev.other, arrivals); break;
                    case ChangeKind::heads_in_range:
                        if (l != Level::L0) throw Error("bad-level", "heads_in_range applies to level 0 only");
                        if (ev.other) merges.emplace_back(ev.node, *ev.other);
                        break;
                }
            }
            if (l != Level::L0) {
                const Level below = static_cast<Level>(idx(l) - 1);
                std::vector<NodeId> gone;
                for (const auto& [n, _] : clusters_.at(l).head_of) {
                    const auto& a = net_.node(n);
                    if (!a.supports(l) || !clusters_.at(below).is_head(n)) gone.push_back(n);
                }
                for (NodeId n : gone) leave(rep, l, n, reelect, true);
            }
            cover(rep, l, arrivals);
            for (NodeId h : reelect)
                if (clusters_.at(l).is_head(h)) reelect_cluster(rep, l, h, "reelect");
            if (l == Level::L0) merge_adjacent(rep, merges);
            triggers(rep, l, arrivals);
            beacons_.refresh(clusters_, l, now);
        }
        if (routing_)
            for (NodeId n : rep.departed) routing_->purge_node(n);
        return rep;
    }

    const std::array<std::size_t, 3>& elections() const { return elections_; }
    const ElectionStats& election_stats() const { return stats_; }

private:
    void record(MaintenanceReport& rep, const std::string& label, Level l, NodeId n) {
        rep.records.push_back({label, l, n});
        if (trace_)
            trace_->emit(1, Json{{"t", jnum(now_)}, {"ev", "maintenance"}, {"case", label}, {"level", idx(l)}, {"node", n.value}});
    }

    // Takes n out of its level-l cluster. A departing head orphans its
    // members; a head that is still alive keeps a cluster of its own.
    void leave(MaintenanceReport& rep, Level l, NodeId n, std::set<NodeId>& reelect, bool structural = false) {
        auto& lc = clusters_.at(l);
        const auto h = lc.head(n);
        if (!h) return;
        const bool was_head = *h == n;
        record(rep, leave_label(l, was_head), l, n);
        if (!structural && std::find(rep.departed.begin(), rep.departed.end(), n) == rep.departed.end()) rep.departed.push_back(n);
        lc.remove(n);
        if (was_head) {
            reelect.erase(n);
            if (!structural && participates(net_, clusters_, l, n)) lc.make_head(n);
        } else if (l == Level::L2 && lc.is_head(*h)) {
            // A level-2 member leaving restarts the level-2 election in its cluster.
            reelect.insert(*h);
        }
    }

    void join(MaintenanceReport& rep, Level l, NodeId n, std::optional<NodeId> head, std::vector<NodeId>& arrivals) {
        auto& lc = clusters_.at(l);
        if (lc.covers(n) || !participates(net_, clusters_, l, n)) return;
        if (!head || !lc.is_head(*head) || !net_.linked(*head, n, l)) return;
        lc.add_member(*head, n);
        arrivals.push_back(n);
        record(rep, join_label(l), l, n);
    }

    double weight_of(Level l, NodeId n) const {
        const auto& w = clusters_.at(l).weight;
        auto it = w.find(n);
        return it == w.end() ? 0.0 : it->second;
    }

    // Uncovered participants join an adjacent head (highest weight, then
    // lowest id); the rest elect among themselves.
    void cover(MaintenanceReport& rep, Level l, std::vector<NodeId>& arrivals) {
        auto& lc = clusters_.at(l);
        std::vector<NodeId> rest;
        for (NodeId u : participants(net_, clusters_, l)) {
            if (lc.covers(u)) continue;
            std::optional<NodeId> best;
            for (NodeId h : lc.heads()) {
                if (!net_.linked(h, u, l)) continue;
                if (!best || weight_of(l, h) > weight_of(l, *best)) best = h;
            }
            if (best) {
                lc.add_member(*best, u);
                arrivals.push_back(u);
                record(rep, join_label(l), l, u);
            } else {
                rest.push_back(u);
            }
        }
        if (!rest.empty()) elect_set(rep, l, rest);
    }

    void elect_set(MaintenanceReport& rep, Level l, const std::vector<NodeId>& nodes) {
        auto& lc = clusters_.at(l);
        LevelClusters sub;
        try {
            sub = select_cluster_heads(net_, l, wp_, rng_, nodes, lc.pheromone, &stats_);
        } catch (const ElectionBudgetExceeded& e) {
            sub = e.partial();
            for (NodeId n : nodes)
                if (!sub.covers(n)) sub.make_head(n);
        }
        for (const auto& [h, ms] : sub.members) {
            lc.make_head(h);
            for (NodeId m : ms) lc.add_member(h, m);
        }
        for (const auto& [n, t] : sub.pheromone) lc.pheromone[n] = t;
        for (const auto& [n, w] : sub.weight) lc.weight[n] = w;
        elections_[idx(l)] += sub.members.size();
        rep.elected.insert(l);
        if (trace_) {
            Json heads = Json::array();
            for (const auto& [h, _] : sub.members) heads.push_back(h.value);
            trace_->emit(1, Json{{"t", jnum(now_)}, {"ev", "election"}, {"level", idx(l)}, {"nodes", nodes.size()}, {"heads", heads}});
        }
    }

    std::vector<NodeId> dissolve(Level l, NodeId h) {
        auto& lc = clusters_.at(l);
        std::vector<NodeId> set = lc.cluster_of(h);
        lc.remove(h);
        return set;
    }

    // Nodes that no longer answer drop out of the election and are gone from
    // the level; everyone else is re-clustered.
    void reelect_cluster(MaintenanceReport& rep, Level l, NodeId h, const std::string& label) {
        record(rep, label, l, h);
        std::vector<NodeId> set;
        for (NodeId n : dissolve(l, h)) {
            if (participates(net_, clusters_, l, n)) {
                set.push_back(n);
                continue;
            }
            record(rep, leave_label(l, n == h), l, n);
            if (std::find(rep.departed.begin(), rep.departed.end(), n) == rep.departed.end()) rep.departed.push_back(n);
        }
        if (!set.empty()) elect_set(rep, l, set);
    }

    // Two level-0 heads within range of each other hold one election over
    // both clusters, repeated until no two heads are adjacent.
    void merge_adjacent(MaintenanceReport& rep, std::vector<std::pair<NodeId, NodeId>> seeds) {
        auto& lc = clusters_.at(Level::L0);
        const std::size_t cap = lc.members.size() + seeds.size() + 1;
        for (std::size_t round = 0; round < cap; ++round) {
            std::optional<std::pair<NodeId, NodeId>> pair;
            while (!seeds.empty() && !pair) {
                auto [a, b] = seeds.front();
                seeds.erase(seeds.begin());
                if (lc.is_head(a) && lc.is_head(b) && a != b && net_.linked(a, b, Level::L0)) pair = std::pair{a, b};
            }
            if (!pair) {
                for (NodeId a : lc.heads()) {
                    for (NodeId b : neighbors(net_, a, Level::L0))
                        if (b > a && lc.is_head(b)) {
                            pair = std::pair{a, b};
                            break;
                        }
                    if (pair) break;
                }
            }
            if (!pair) return;
            record(rep, "3", Level::L0, std::min(pair->first, pair->second));
            auto u = dissolve(Level::L0, pair->first);
            auto v = dissolve(Level::L0, pair->second);
            u.insert(u.end(), v.begin(), v.end());
            std::sort(u.begin(), u.end());
            elect_set(rep, Level::L0, u);
        }
    }

    // Head weight under threshold, or a newcomer outweighing its head. A
    // cluster where nobody clears the threshold is left alone so the same
    // election is not rerun on every beacon.
    void triggers(MaintenanceReport& rep, Level l, const std::vector<NodeId>& arrivals) {
        std::vector<Arrival> arr;
        for (NodeId n : arrivals) arr.push_back({l, n});
        const auto flagged = check_reelection_triggers(net_, clusters_, wp_, arr);
        if (flagged.empty()) return;
        const auto parts = participants(net_, clusters_, l);
        const auto w = combined_weights(net_, neighbor_table(net_, l, parts), wp_);
        for (const auto& addr : flagged) {
            if (addr.level != l || !clusters_.at(l).is_head(addr.head)) continue;
            const auto set = clusters_.at(l).cluster_of(addr.head);
            if (set.size() < 2) continue;
            // Higher tiers win elections outright, so only a node of at least
            // the head's tier can replace it.
            const Level tier = net_.node(addr.head).max_level;
            const bool any_pass = std::any_of(set.begin(), set.end(), [&](NodeId n) {
                return w.count(n) && w.at(n) >= wp_.theta_w && idx(net_.node(n).max_level) >= idx(tier);
            });
            const bool outweighed = std::any_of(arrivals.begin(), arrivals.end(), [&](NodeId n) {
                return clusters_.at(l).head(n) == addr.head && w.count(n) && w.count(addr.head) && w.at(n) > w.at(addr.head);
            });
            if (!any_pass && !outweighed) continue;
            reelect_cluster(rep, l, addr.head, outweighed ? "stronger-arrival" : "weight-threshold");
        }
    }

    const NetworkState& net_;
    ClusterState& clusters_;
    BeaconState& beacons_;
    const WeightParams& wp_;
    Rng& rng_;
    Trace* trace_;
    RoutingState* routing_;

    double now_ = 0.0;
    std::array<std::size_t, 3> elections_{};
    ElectionStats stats_;
};

// Single-event entry points.
inline MaintenanceReport handle_membership_change(Maintainer& m, const ChangeEvent& ev, double now) {
    return m.apply(std::span<const ChangeEvent>(&ev, 1), now);
}

inline MaintenanceReport propagate_hierarchy_change(Maintainer& m, double now) { return m.apply({}, now); }

} // namespace hant
