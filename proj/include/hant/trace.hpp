#pragma once

#include <cmath>
#include <ostream>

#include "json.hpp"

namespace hant {

using Json = nlohmann::json;

// JSON cannot carry infinities; they are written as the string "inf".
inline Json jnum(double v) {
    if (std::isinf(v)) return v > 0 ? Json("inf") : Json("-inf");
    return Json(v);
}

// Line-delimited trace: one compact JSON object per record. Level 1 carries
// structural events (elections, maintenance cases, discoveries, drops),
// level 2 adds every packet, beacon round and ant transmission.
class Trace {
public:
    Trace() = default;
    Trace(std::ostream& os, int verbosity) : os_(&os), verbosity_(verbosity) {}

    bool enabled(int level) const { return os_ != nullptr && level <= verbosity_; }

    void emit(int level, const Json& record) {
        if (!enabled(level)) return;
        *os_ << record.dump() << '\n';
    }

    int verbosity() const { return os_ ? verbosity_ : 0; }

private:
    std::ostream* os_ = nullptr;
    int verbosity_ = 0;
};

} // namespace hant
