// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <grtx/accel.hpp>
#include <grtx/metrics.hpp>

#include <json.hpp>

#include <sstream>
#include <string>
#include <vector>

namespace grtx {

enum class ReportFormat { Json, Csv };

// Flat, serializable view of one regime's run; every ratio in the efficiency
// comparisons can be recomputed from these fields.
struct StatsRecord {
    std::string regime;
    uint64_t rays = 0;
    uint64_t rounds = 0;
    uint64_t node_fetches = 0;
    uint64_t internal_node_fetches = 0;
    uint64_t instance_fetches = 0;
    uint64_t prim_fetches = 0;
    uint64_t unique_node_fetches = 0;   // per-ray unique, summed over rays
    uint64_t global_unique_nodes = 0;   // frame-global unique
    uint64_t box_tests = 0;
    uint64_t tri_tests = 0;
    uint64_t sphere_tests = 0;
    uint64_t evictions = 0;
    uint64_t checkpoint_seeds = 0;
    uint64_t overflow_fallbacks = 0;
    uint64_t blended = 0;
    uint64_t alpha_skipped = 0;
    uint64_t buffer_memory_bytes = 0;
    uint64_t as_size_bytes = 0;
    uint64_t as_node_count = 0;
    uint64_t as_height = 0;
    uint64_t traversal_footprint_bytes = 0;  // unique structure bytes touched
    double l1_hit_rate = -1.0;               // negative when no cache model ran
    double l2_hit_rate = -1.0;

    static StatsRecord from(const std::string& regime, const FrameStats& s) {
        StatsRecord r;
        r.regime = regime;
        r.rays = s.rays;
        r.rounds = s.rounds;
        r.node_fetches = s.node_fetches;
        r.internal_node_fetches = s.internal_node_fetches;
        r.instance_fetches = s.instance_fetches;
        r.prim_fetches = s.prim_fetches;
        r.unique_node_fetches = s.unique_node_fetches;
        r.global_unique_nodes = s.global_unique.size();
        r.box_tests = s.box_tests;
        r.tri_tests = s.tri_tests;
        r.sphere_tests = s.sphere_tests;
        r.evictions = s.evictions;
        r.checkpoint_seeds = s.checkpoint_seeds;
        r.overflow_fallbacks = s.overflow_fallbacks;
        r.blended = s.blended;
        r.alpha_skipped = s.alpha_skipped;
        return r;
    }

    bool operator==(const StatsRecord& o) const = default;
};

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson record_to_json(const StatsRecord& r) {
    ojson j;
    j["regime"] = r.regime;
    j["rays"] = r.rays;
    j["rounds"] = r.rounds;
    j["node_fetches"] = r.node_fetches;
    j["internal_node_fetches"] = r.internal_node_fetches;
    j["instance_fetches"] = r.instance_fetches;
    j["prim_fetches"] = r.prim_fetches;
    j["unique_node_fetches"] = r.unique_node_fetches;
    j["global_unique_nodes"] = r.global_unique_nodes;
    j["box_tests"] = r.box_tests;
    j["tri_tests"] = r.tri_tests;
    j["sphere_tests"] = r.sphere_tests;
    j["evictions"] = r.evictions;
    j["checkpoint_seeds"] = r.checkpoint_seeds;
    j["overflow_fallbacks"] = r.overflow_fallbacks;
    j["blended"] = r.blended;
    j["alpha_skipped"] = r.alpha_skipped;
    j["buffer_memory_bytes"] = r.buffer_memory_bytes;
    j["as_size_bytes"] = r.as_size_bytes;
    j["as_node_count"] = r.as_node_count;
    j["as_height"] = r.as_height;
    j["traversal_footprint_bytes"] = r.traversal_footprint_bytes;
    if (r.l1_hit_rate >= 0.0) j["l1_hit_rate"] = r.l1_hit_rate;
    if (r.l2_hit_rate >= 0.0) j["l2_hit_rate"] = r.l2_hit_rate;
    return j;
}

inline StatsRecord record_from_json(const nlohmann::json& j) {
    StatsRecord r;
    r.regime = j.at("regime").get<std::string>();
    r.rays = j.at("rays").get<uint64_t>();
    r.rounds = j.at("rounds").get<uint64_t>();
    r.node_fetches = j.at("node_fetches").get<uint64_t>();
    r.internal_node_fetches = j.at("internal_node_fetches").get<uint64_t>();
    r.instance_fetches = j.at("instance_fetches").get<uint64_t>();
    r.prim_fetches = j.at("prim_fetches").get<uint64_t>();
    r.unique_node_fetches = j.at("unique_node_fetches").get<uint64_t>();
    r.global_unique_nodes = j.at("global_unique_nodes").get<uint64_t>();
    r.box_tests = j.at("box_tests").get<uint64_t>();
    r.tri_tests = j.at("tri_tests").get<uint64_t>();
    r.sphere_tests = j.at("sphere_tests").get<uint64_t>();
    r.evictions = j.at("evictions").get<uint64_t>();
    r.checkpoint_seeds = j.at("checkpoint_seeds").get<uint64_t>();
    r.overflow_fallbacks = j.at("overflow_fallbacks").get<uint64_t>();
    r.blended = j.at("blended").get<uint64_t>();
    r.alpha_skipped = j.at("alpha_skipped").get<uint64_t>();
    r.buffer_memory_bytes = j.at("buffer_memory_bytes").get<uint64_t>();
    r.as_size_bytes = j.at("as_size_bytes").get<uint64_t>();
    r.as_node_count = j.at("as_node_count").get<uint64_t>();
    r.as_height = j.at("as_height").get<uint64_t>();
    r.traversal_footprint_bytes = j.at("traversal_footprint_bytes").get<uint64_t>();
    if (j.contains("l1_hit_rate")) r.l1_hit_rate = j.at("l1_hit_rate").get<double>();
    if (j.contains("l2_hit_rate")) r.l2_hit_rate = j.at("l2_hit_rate").get<double>();
    return r;
}

constexpr const char* kCsvHeader =
    "regime,rays,rounds,node_fetches,internal_node_fetches,instance_fetches,prim_fetches,"
    "unique_node_fetches,global_unique_nodes,box_tests,tri_tests,sphere_tests,evictions,"
    "checkpoint_seeds,overflow_fallbacks,blended,alpha_skipped,buffer_memory_bytes,"
    "as_size_bytes,as_node_count,as_height,traversal_footprint_bytes,l1_hit_rate,l2_hit_rate";

}  // namespace detail

// Schema "grtx-stats/1": a versioned JSON document (or a fixed-header CSV)
// with one record per regime, fields in a stable order.
inline std::string emit_report(const std::vector<StatsRecord>& records, ReportFormat format) {
    if (format == ReportFormat::Json) {
        detail::ojson j;
        j["schema"] = "grtx-stats/1";
        j["regimes"] = detail::ojson::array();
        for (const StatsRecord& r : records) j["regimes"].push_back(detail::record_to_json(r));
        return j.dump(2) + "\n";
    }
    std::ostringstream out;
    out << detail::kCsvHeader << "\n";
    for (const StatsRecord& r : records) {
        out << r.regime << ',' << r.rays << ',' << r.rounds << ',' << r.node_fetches << ','
            << r.internal_node_fetches << ',' << r.instance_fetches << ',' << r.prim_fetches
            << ',' << r.unique_node_fetches << ',' << r.global_unique_nodes << ',' << r.box_tests
            << ',' << r.tri_tests << ',' << r.sphere_tests << ',' << r.evictions << ','
            << r.checkpoint_seeds << ',' << r.overflow_fallbacks << ',' << r.blended << ','
            << r.alpha_skipped << ',' << r.buffer_memory_bytes << ',' << r.as_size_bytes << ','
            << r.as_node_count << ',' << r.as_height << ',' << r.traversal_footprint_bytes << ','
            << r.l1_hit_rate << ',' << r.l2_hit_rate << "\n";
    }
    return out.str();
}

inline std::vector<StatsRecord> parse_report(const std::string& json_text) {
    const nlohmann::json j = nlohmann::json::parse(json_text);
    if (j.at("schema").get<std::string>() != "grtx-stats/1")
        throw FormatError("unknown stats schema");
    std::vector<StatsRecord> records;
    for (const auto& rj : j.at("regimes")) records.push_back(detail::record_from_json(rj));
    return records;
}

inline std::string stats_json(const AccelStats& s) {
    detail::ojson j;
    j["schema"] = "grtx-as-stats/1";
    j["node_count"] = s.node_count;
    j["height"] = s.height;
    j["size_bytes"] = s.size_bytes;
    j["top_node_count"] = s.top_node_count;
    j["instance_count"] = s.instance_count;
    j["blas_node_count"] = s.blas_node_count;
    j["triangle_count"] = s.triangle_count;
    j["triangle_bytes"] = s.triangle_bytes;
    j["shared_blas_bytes"] = s.shared_blas_bytes;
    return j.dump(2) + "\n";
}

}  // namespace grtx
