#pragma once

#include <algorithm>
#include <set>
#include <string_view>
#include <variant>
#include <vector>

#include "hant/net_model.hpp"
#include "hant/trace.hpp"

namespace hant {

// Asks a cluster head whether dst is among its members; flag=1 on the
// answer means "found".
struct RouteAnt {
    NodeId src;
    NodeId dst;
    bool flag = false;

    friend bool operator==(const RouteAnt&, const RouteAnt&) = default;
};

struct KnaveTag {
    static constexpr std::string_view request = "RequestKnaveAnt";
    static constexpr std::string_view reply = "ReplyKnaveAnt";
    static constexpr std::string_view src_key = "src_member";
    static constexpr std::string_view dst_key = "dst_member";
};

struct KingTag {
    static constexpr std::string_view request = "RequestKingAnt";
    static constexpr std::string_view reply = "ReplyKingAnt";
    static constexpr std::string_view src_key = "src_head";
    static constexpr std::string_view dst_key = "dst_head";
};

// Knave ants search inside one cluster, King ants over the head overlay.
// The layouts are identical apart from whose ids they carry.
template <class Tag>
struct RequestAnt {
    double start_time = 0.0;
    double bandwidth_min = 0.0;
    NodeId src;
    NodeId dst;
    std::vector<NodeId> visited;

    friend bool operator==(const RequestAnt&, const RequestAnt&) = default;
};

template <class Tag>
struct ReplyAnt {
    std::size_t hop_count = 0;
    double delay = 0.0;
    double energy = 0.0;
    double let = 0.0;
    double bandwidth = 0.0;
    NodeId dst;
    NodeId src;
    std::vector<NodeId> to_visit;

    friend bool operator==(const ReplyAnt&, const ReplyAnt&) = default;
};

using RequestKnaveAnt = RequestAnt<KnaveTag>;
using ReplyKnaveAnt = ReplyAnt<KnaveTag>;
using RequestKingAnt = RequestAnt<KingTag>;
using ReplyKingAnt = ReplyAnt<KingTag>;

using AntPacket = std::variant<RouteAnt, RequestKnaveAnt, ReplyKnaveAnt, RequestKingAnt, ReplyKingAnt>;

inline Json ids_json(const std::vector<NodeId>& v) {
    Json a = Json::array();
    for (NodeId n : v) a.push_back(n.value);
    return a;
}

inline Json to_json(const RouteAnt& a) {
    return Json{{"type", "RouteAnt"}, {"src", a.src.value}, {"dst", a.dst.value}, {"flag", a.flag ? 1 : 0}};
}

template <class Tag>
Json to_json(const RequestAnt<Tag>& a) {
    Json j{{"type", Tag::request}, {"start_time", jnum(a.start_time)}, {"bandwidth_min", jnum(a.bandwidth_min)},
           {"visited", ids_json(a.visited)}};
    j[std::string(Tag::src_key)] = a.src.value;
    j[std::string(Tag::dst_key)] = a.dst.value;
    return j;
}

template <class Tag>
Json to_json(const ReplyAnt<Tag>& a) {
    Json j{{"type", Tag::reply}, {"hop_count", a.hop_count}, {"delay", jnum(a.delay)}, {"energy", jnum(a.energy)},
           {"let", jnum(a.let)}, {"bandwidth", jnum(a.bandwidth)}, {"to_visit", ids_json(a.to_visit)}};
    j[std::string(Tag::src_key)] = a.src.value;
    j[std::string(Tag::dst_key)] = a.dst.value;
    return j;
}

inline Json to_json(const AntPacket& p) {
    return std::visit([](const auto& a) { return to_json(a); }, p);
}

inline std::string_view ant_name(const AntPacket& p) {
    return std::visit(
        [](const auto& a) -> std::string_view {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, RouteAnt>) return "RouteAnt";
            else if constexpr (std::is_same_v<T, RequestKnaveAnt>) return KnaveTag::request;
            else if constexpr (std::is_same_v<T, ReplyKnaveAnt>) return KnaveTag::reply;
            else if constexpr (std::is_same_v<T, RequestKingAnt>) return KingTag::request;
            else return KingTag::reply;
        },
        p);
}

// Visited stack of a request ant, empty for the other kinds.
inline const std::vector<NodeId>* visited_stack(const AntPacket& p) {
    if (auto* r = std::get_if<RequestKnaveAnt>(&p)) return &r->visited;
    if (auto* r = std::get_if<RequestKingAnt>(&p)) return &r->visited;
    return nullptr;
}

inline bool has_duplicate(const std::vector<NodeId>& v) {
    std::set<NodeId> seen;
    for (NodeId n : v)
        if (!seen.insert(n).second) return true;
    return false;
}

} // namespace hant
