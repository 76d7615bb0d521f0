#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hant/error.hpp"
#include "hant/scenario.hpp"
#include "hant/sim.hpp"

namespace hant {

// "7" or "1..20" (inclusive).
inline std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
    auto number = [&](const std::string& s) {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
            throw Error("seed-range", "bad seed range '" + text + "'");
        try {
            return static_cast<std::uint64_t>(std::stoull(s));
        } catch (const std::exception&) {
            throw Error("seed-range", "bad seed range '" + text + "'");
        }
    };
    std::vector<std::uint64_t> out;
    const auto dots = text.find("..");
    if (dots == std::string::npos) {
        out.push_back(number(text));
        return out;
    }
    const auto lo = number(text.substr(0, dots));
    const auto hi = number(text.substr(dots + 2));
    if (hi < lo) throw Error("seed-range", "seed range is empty");
    if (hi - lo >= 1000000) throw Error("seed-range", "seed range too large");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
    return out;
}

// Writes through a temporary file in the same directory, then renames it
// into place, so readers never see a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("io", "cannot write " + tmp.string());
        f << content;
        f.flush();
        if (!f) throw Error("io", "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

struct SweepSummary {
    std::vector<RunStats> runs;
    double mean_delivery_ratio = 0.0;
    double stddev_delivery_ratio = 0.0; // sample standard deviation (n-1)

    Json to_json() const {
        Json per = Json::array();
        for (const auto& r : runs) per.push_back(Json{{"seed", r.seed}, {"delivery_ratio", jnum(r.delivery_ratio())}});
        return Json{{"runs", runs.size()},
                    {"mean_delivery_ratio", jnum(mean_delivery_ratio)},
                    {"stddev_delivery_ratio", jnum(stddev_delivery_ratio)},
                    {"per_run", per}};
    }
};

inline SweepSummary summarize(std::vector<RunStats> runs) {
    SweepSummary s;
    s.runs = std::move(runs);
    const auto n = static_cast<double>(s.runs.size());
    if (s.runs.empty()) return s;
    double sum = 0.0;
    for (const auto& r : s.runs) sum += r.delivery_ratio();
    s.mean_delivery_ratio = sum / n;
    if (s.runs.size() > 1) {
        double ss = 0.0;
        for (const auto& r : s.runs) ss += (r.delivery_ratio() - s.mean_delivery_ratio) * (r.delivery_ratio() - s.mean_delivery_ratio);
        s.stddev_delivery_ratio = std::sqrt(ss / (n - 1.0));
    }
    return s;
}

// Runs the scenario once per seed on up to `threads` workers. With an
// output directory each run's summary lands in run-<seed>.json.
inline SweepSummary sweep(const ScenarioConfig& base, const std::vector<std::uint64_t>& seeds, unsigned threads = 1,
                          const std::optional<std::filesystem::path>& out_dir = std::nullopt) {
    std::vector<RunStats> results(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < seeds.size(); i = next++) {
            try {
                ScenarioConfig cfg = base;
                cfg.seed = seeds[i];
                results[i] = run(cfg);
                if (out_dir)
                    write_atomic(*out_dir / ("run-" + std::to_string(seeds[i]) + ".json"), results[i].to_json().dump(2) + "\n");
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(seeds.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return summarize(std::move(results));
}

} // namespace hant
