#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hant/error.hpp"
#include "hant/net_model.hpp"
#include "hant/rng.hpp"

namespace hant {

struct WeightParams {
    double w1 = 0.25; // connectivity
    double w2 = 0.25; // residual energy
    double w3 = 0.25; // mobility (subtracted)
    double w4 = 0.25; // sum of neighbour distances
    double theta_w = 0.0;
    double theta_tau = 0.0;
    double rho = 0.5;
    int n_iter = 100;

    friend bool operator==(const WeightParams&, const WeightParams&) = default;
};

inline void validate(const WeightParams& p) {
    for (double w : {p.w1, p.w2, p.w3, p.w4})
        if (!(w >= 0.0 && w <= 1.0)) throw Error("weight-range", "each weight coefficient must lie in [0,1]");
    if (std::abs(p.w1 + p.w2 + p.w3 + p.w4 - 1.0) > 1e-9) throw Error("weight-sum", "w1+w2+w3+w4 must equal 1");
    if (!(p.rho > 0.0 && p.rho < 1.0)) throw Error("rho-range", "rho must lie in (0,1)");
    if (p.n_iter < 1) throw Error("n-iter-range", "iteration budget must be >= 1");
    if (!std::isfinite(p.theta_w) || !std::isfinite(p.theta_tau)) throw Error("threshold-range", "thresholds must be finite");
}

// weight = w1*c + w2*e - w3*m + w4*d
inline double node_weight(double c, double e, double m, double d, const WeightParams& p) {
    if (std::abs(p.w1 + p.w2 + p.w3 + p.w4 - 1.0) > 1e-9) throw Error("weight-sum", "w1+w2+w3+w4 must equal 1");
    return p.w1 * c + p.w2 * e - p.w3 * m + p.w4 * d;
}

// P_i = tau_i / sum_k tau_k
inline std::vector<double> ch_selection_probability(std::span<const double> tau) {
    double total = 0.0;
    for (double t : tau) {
        if (!(t >= 0.0)) throw Error("negative-pheromone", "pheromone values must be >= 0");
        total += t;
    }
    if (!(total > 0.0)) throw Error("no-pheromone-mass", "pheromone vector sums to zero");
    std::vector<double> p;
    p.reserve(tau.size());
    for (double t : tau) p.push_back(t / total);
    return p;
}

// tau' = (1 - rho) tau + rho weight, floored at zero so that negative
// combined weights cannot drive pheromone below zero.
inline double ch_pheromone_update(double tau, double rho, double weight) {
    if (!(rho > 0.0 && rho < 1.0)) throw Error("rho-range", "rho must lie in (0,1)");
    return std::max(0.0, (1.0 - rho) * tau + rho * weight);
}

struct WeightInputs {
    double connectivity = 0.0;
    double energy = 0.0;
    double mobility = 0.0;
    double distance_sum = 0.0;
};

// Clusters at one level. Every covered node maps to its head; heads map to themselves.
struct LevelClusters {
    std::map<NodeId, std::vector<NodeId>> members; // head -> sorted members, head excluded
    std::map<NodeId, NodeId> head_of;
    std::map<NodeId, double> pheromone;
    std::map<NodeId, double> weight;

    friend bool operator==(const LevelClusters&, const LevelClusters&) = default;

    bool covers(NodeId n) const { return head_of.count(n) != 0; }
    bool is_head(NodeId n) const { return members.count(n) != 0; }

    std::optional<NodeId> head(NodeId n) const {
        auto it = head_of.find(n);
        if (it == head_of.end()) return std::nullopt;
        return it->second;
    }

    std::vector<NodeId> heads() const {
        std::vector<NodeId> out;
        for (const auto& [h, _] : members) out.push_back(h);
        return out;
    }

    // Head first, then members.
    std::vector<NodeId> cluster_of(NodeId head) const {
        std::vector<NodeId> out{head};
        if (auto it = members.find(head); it != members.end()) out.insert(out.end(), it->second.begin(), it->second.end());
        return out;
    }

    void make_head(NodeId h) {
        members.try_emplace(h);
        head_of[h] = h;
    }

    void add_member(NodeId h, NodeId m) {
        auto& list = members.at(h);
        list.insert(std::lower_bound(list.begin(), list.end(), m), m);
        head_of[m] = h;
    }

    // Drops n from the tables. If n was a head its former members are returned
    // and left uncovered.
    std::vector<NodeId> remove(NodeId n) {
        std::vector<NodeId> orphans;
        auto it = head_of.find(n);
        if (it == head_of.end()) return orphans;
        const NodeId h = it->second;
        head_of.erase(it);
        if (h == n) {
            orphans = members.at(n);
            members.erase(n);
            for (NodeId m : orphans) head_of.erase(m);
        } else {
            auto& list = members.at(h);
            list.erase(std::remove(list.begin(), list.end(), n), list.end());
        }
        return orphans;
    }

    std::size_t size() const { return head_of.size(); }
};

struct ClusterState {
    std::array<LevelClusters, 3> levels;

    friend bool operator==(const ClusterState&, const ClusterState&) = default;

    LevelClusters& at(Level l) { return levels[idx(l)]; }
    const LevelClusters& at(Level l) const { return levels[idx(l)]; }

    std::optional<ClusterAddress> address(NodeId n, Level l) const {
        auto h = at(l).head(n);
        if (!h) return std::nullopt;
        return ClusterAddress{l, *h};
    }
};

// Nodes that take part in clustering at a level: every live node at L0, live
// level-capable heads of the level below otherwise.
inline std::vector<NodeId> participants(const NetworkState& state, const ClusterState& clusters, Level level) {
    std::vector<NodeId> out;
    for (const auto& [id, n] : state.nodes()) {
        if (!n.alive || !n.supports(level)) continue;
        if (level != Level::L0 && !clusters.at(static_cast<Level>(idx(level) - 1)).is_head(id)) continue;
        out.push_back(id);
    }
    return out;
}

inline std::map<NodeId, std::vector<NodeId>> neighbor_table(const NetworkState& state, Level level,
                                                            std::span<const NodeId> candidates) {
    std::set<NodeId> allowed(candidates.begin(), candidates.end());
    std::map<NodeId, std::vector<NodeId>> table;
    for (NodeId n : candidates) {
        auto& row = table[n];
        for (NodeId m : neighbors(state, n, level))
            if (allowed.count(m)) row.push_back(m);
    }
    return table;
}

inline std::map<NodeId, WeightInputs> weight_inputs(const NetworkState& state,
                                                    const std::map<NodeId, std::vector<NodeId>>& table) {
    std::map<NodeId, WeightInputs> out;
    for (const auto& [n, nbrs] : table) {
        const auto& a = state.node(n);
        WeightInputs in{static_cast<double>(nbrs.size()), a.energy, a.mobility, 0.0};
        for (NodeId m : nbrs) in.distance_sum += distance(a.position, state.node(m).position);
        out[n] = in;
    }
    return out;
}

// Combined weights with each input rescaled to [0,1] by its maximum over the
// candidate set, so the coefficients compare like with like.
inline std::map<NodeId, double> combined_weights(const NetworkState& state,
                                                 const std::map<NodeId, std::vector<NodeId>>& table,
                                                 const WeightParams& p) {
    const auto inputs = weight_inputs(state, table);
    WeightInputs mx;
    for (const auto& [_, in] : inputs) {
        mx.connectivity = std::max(mx.connectivity, in.connectivity);
        mx.energy = std::max(mx.energy, in.energy);
        mx.mobility = std::max(mx.mobility, in.mobility);
        mx.distance_sum = std::max(mx.distance_sum, in.distance_sum);
    }
    auto scaled = [](double v, double m) { return m > 0.0 ? v / m : 0.0; };
    std::map<NodeId, double> out;
    for (const auto& [n, in] : inputs)
        out[n] = node_weight(scaled(in.connectivity, mx.connectivity), scaled(in.energy, mx.energy),
                             scaled(in.mobility, mx.mobility), scaled(in.distance_sum, mx.distance_sum), p);
    return out;
}

class ElectionBudgetExceeded : public Error {
public:
    ElectionBudgetExceeded(LevelClusters partial, std::size_t uncovered)
        : Error("election-budget", "iteration budget exhausted with " + std::to_string(uncovered) + " nodes uncovered"),
          partial_(std::move(partial)) {}

    const LevelClusters& partial() const { return partial_; }

private:
    LevelClusters partial_;
};

struct ElectionStats {
    std::size_t draws = 0;
    std::size_t stalled_sweeps = 0;
};

namespace detail {

// A node with more interfaces outranks one with fewer. Within a tier, h
// outranks v when it is at least as good on both weight and pheromone and
// strictly better on one; full ties go to the lower id.
inline bool outranks(NodeId h, NodeId v, const std::map<NodeId, double>& w, const std::map<NodeId, double>& tau,
                     const std::map<NodeId, int>& tier = {}) {
    if (!tier.empty()) {
        const int rh = tier.at(h), rv = tier.at(v);
        if (rh != rv) return rh > rv;
    }
    const double wh = w.at(h), wv = w.at(v), th = tau.at(h), tv = tau.at(v);
    if (wh == wv && th == tv) return h < v;
    return wh >= wv && th >= tv;
}

} // namespace detail

// ACO cluster-head election over an explicit neighbour table.
//
// Pheromone phase: every candidate cluster (a node and its neighbours) gets
// a random initial head, then repeated roulette draws by tau share, each
// draw pulling the drawn node's tau toward its weight, until the cluster's
// pheromone has settled or n_iter draws are spent.
//
// Decision phase: among still-undecided nodes, those that outrank every
// undecided neighbour (interface tier, then weight and pheromone) become heads (thresholds
// apply unless nobody passes them, in which case coverage wins), and their
// undecided neighbours join the best adjacent new head. A round with no
// such node triggers one more reinforcement sweep; more than n_iter such
// sweeps raises ElectionBudgetExceeded carrying the partial assignment.
inline LevelClusters elect(const std::map<NodeId, std::vector<NodeId>>& table, const std::map<NodeId, double>& weights,
                           const std::map<NodeId, double>& initial_tau, const WeightParams& p, Rng& rng,
                           ElectionStats* stats = nullptr, const std::map<NodeId, int>& tier = {}) {
    validate(p);
    ElectionStats local;
    ElectionStats& st = stats ? *stats : local;

    std::map<NodeId, double> tau;
    for (const auto& [n, _] : table) {
        auto it = initial_tau.find(n);
        tau[n] = it != initial_tau.end() ? std::max(0.0, it->second) : std::max(0.0, weights.at(n));
    }

    auto closed = [&](NodeId u) {
        std::vector<NodeId> c{u};
        const auto& nb = table.at(u);
        c.insert(c.end(), nb.begin(), nb.end());
        std::sort(c.begin(), c.end());
        return c;
    };
    auto reinforce = [&](NodeId s) {
        tau[s] = ch_pheromone_update(tau[s], p.rho, weights.at(s));
        ++st.draws;
    };
    auto draw = [&](const std::vector<NodeId>& c) {
        std::vector<double> t;
        t.reserve(c.size());
        for (NodeId v : c) t.push_back(tau[v]);
        return c[rng.pick_weighted(t)];
    };
    auto settled = [&](const std::vector<NodeId>& c) {
        for (NodeId v : c)
            if (std::abs(tau[v] - std::max(0.0, weights.at(v))) > 1e-12) return false;
        return true;
    };

    for (const auto& [u, _] : table) {
        const auto c = closed(u);
        reinforce(c[rng.index(c.size())]);
        for (int it = 1; it < p.n_iter && !settled(c); ++it) reinforce(draw(c));
    }

    LevelClusters out;
    std::set<NodeId> undecided;
    for (const auto& [n, _] : table) undecided.insert(n);

    while (!undecided.empty()) {
        std::vector<NodeId> cand;
        for (NodeId v : undecided) {
            bool top = true;
            for (NodeId u : table.at(v))
                if (undecided.count(u) && !detail::outranks(v, u, weights, tau, tier)) {
                    top = false;
                    break;
                }
            if (top) cand.push_back(v);
        }
        if (cand.empty()) {
            if (static_cast<int>(st.stalled_sweeps) >= p.n_iter) {
                for (const auto& [n, t] : tau) out.pheromone[n] = t;
                throw ElectionBudgetExceeded(out, undecided.size());
            }
            ++st.stalled_sweeps;
            for (NodeId v : std::vector<NodeId>(undecided.begin(), undecided.end())) {
                std::vector<NodeId> c;
                for (NodeId u : closed(v))
                    if (undecided.count(u)) c.push_back(u);
                reinforce(draw(c));
            }
            continue;
        }
        std::vector<NodeId> elected;
        for (NodeId v : cand)
            if (weights.at(v) > p.theta_w && tau[v] > p.theta_tau) elected.push_back(v);
        if (elected.empty()) elected = cand;

        for (NodeId h : elected) {
            out.make_head(h);
            undecided.erase(h);
        }
        std::set<NodeId> fresh(elected.begin(), elected.end());
        for (NodeId v : std::vector<NodeId>(undecided.begin(), undecided.end())) {
            std::optional<NodeId> best;
            for (NodeId h : table.at(v)) {
                if (!fresh.count(h)) continue;
                if (!best || weights.at(h) > weights.at(*best) || (weights.at(h) == weights.at(*best) && h < *best)) best = h;
            }
            if (best) {
                out.add_member(*best, v);
                undecided.erase(v);
            }
        }
    }
    for (const auto& [n, t] : tau) out.pheromone[n] = t;
    for (const auto& [n, _] : table) out.weight[n] = weights.at(n);
    return out;
}

// Election at one level over the given candidates (default: every live node
// supporting the level). Pheromone is seeded from initial_tau where present.
inline LevelClusters select_cluster_heads(const NetworkState& state, Level level, const WeightParams& p, Rng& rng,
                                          std::optional<std::vector<NodeId>> candidates = std::nullopt,
                                          const std::map<NodeId, double>& initial_tau = {},
                                          ElectionStats* stats = nullptr) {
    std::vector<NodeId> cands;
    if (candidates) {
        cands = *candidates;
        std::sort(cands.begin(), cands.end());
    } else {
        for (const auto& [id, n] : state.nodes())
            if (n.alive && n.supports(level)) cands.push_back(id);
    }
    const auto table = neighbor_table(state, level, cands);
    const auto weights = combined_weights(state, table, p);
    std::map<NodeId, int> tier;
    for (NodeId n : cands) tier[n] = static_cast<int>(idx(state.node(n).max_level));
    return elect(table, weights, initial_tau, p, rng, stats, tier);
}

// Level-1 election among level-0 heads with a second interface, then level-2
// among level-1 heads with a third.
inline ClusterState form_hierarchy(const NetworkState& state, const LevelClusters& l0, const WeightParams& p, Rng& rng,
                                   ElectionStats* stats = nullptr) {
    ClusterState cs;
    cs.at(Level::L0) = l0;
    for (Level l : {Level::L1, Level::L2}) {
        auto cands = participants(state, cs, l);
        if (cands.empty()) continue;
        cs.at(l) = select_cluster_heads(state, l, p, rng, cands, {}, stats);
    }
    return cs;
}

inline ClusterState cluster_network(const NetworkState& state, const WeightParams& p, Rng& rng, ElectionStats* stats = nullptr) {
    return form_hierarchy(state, select_cluster_heads(state, Level::L0, p, rng, std::nullopt, {}, stats), p, rng, stats);
}

struct Arrival {
    Level level = Level::L0;
    NodeId node;
};

// Clusters that need a fresh election: the head's recomputed weight fell
// below theta_w, or a node that just joined outweighs the head.
inline std::set<ClusterAddress> check_reelection_triggers(const NetworkState& state, const ClusterState& clusters,
                                                          const WeightParams& p, std::span<const Arrival> arrivals = {}) {
    std::set<ClusterAddress> out;
    for (Level l : kLevels) {
        const auto& lc = clusters.at(l);
        if (lc.members.empty()) continue;
        const auto cands = participants(state, clusters, l);
        const auto weights = combined_weights(state, neighbor_table(state, l, cands), p);
        auto w = [&](NodeId n) {
            auto it = weights.find(n);
            return it != weights.end() ? it->second : -std::numeric_limits<double>::infinity();
        };
        for (const auto& [h, _] : lc.members)
            if (w(h) < p.theta_w) out.insert({l, h});
        for (const Arrival& a : arrivals) {
            if (a.level != l) continue;
            auto h = lc.head(a.node);
            if (h && *h != a.node && w(a.node) > w(*h)) out.insert({l, *h});
        }
    }
    return out;
}

// Coverage, one-hop membership, level containment and table consistency.
// Returns one message per violation; empty means the state is sound.
inline std::vector<std::string> check_invariants(const NetworkState& state, const ClusterState& clusters) {
    std::vector<std::string> bad;
    for (Level l : kLevels) {
        const auto& lc = clusters.at(l);
        const std::string tag = "L" + std::to_string(idx(l)) + ": ";
        const auto parts = participants(state, clusters, l);
        const std::set<NodeId> pset(parts.begin(), parts.end());
        for (NodeId n : parts)
            if (!lc.covers(n)) bad.push_back(tag + "node " + to_string(n) + " is not covered");
        for (const auto& [n, h] : lc.head_of) {
            if (!pset.count(n)) bad.push_back(tag + "node " + to_string(n) + " is not a participant at this level");
            if (!lc.is_head(h)) bad.push_back(tag + "node " + to_string(n) + " points at non-head " + to_string(h));
        }
        for (const auto& [h, ms] : lc.members) {
            auto hh = lc.head(h);
            if (!hh || *hh != h) bad.push_back(tag + "head " + to_string(h) + " does not map to itself");
            for (NodeId m : ms) {
                auto mh = lc.head(m);
                if (!mh || *mh != h) bad.push_back(tag + "member " + to_string(m) + " listed under " + to_string(h) + " maps elsewhere");
                if (!state.linked(h, m, l))
                    bad.push_back(tag + "member " + to_string(m) + " is not a one-hop neighbour of head " + to_string(h));
            }
        }
    }
    return bad;
}

} // namespace hant
