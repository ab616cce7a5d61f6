// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0

#include <grtx/metrics.hpp>
#include <grtx/render.hpp>
#include <grtx/report.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <list>
#include <map>

using namespace grtx;

namespace {

// Independent reference model: per-set recency lists, maps keyed by tag.
class ReferenceLru {
public:
    ReferenceLru(uint64_t capacity, uint64_t line, uint64_t ways)
        : line_(line), ways_(ways), sets_(capacity / (line * ways)) {}

    bool access(uint64_t line_addr) {
        const uint64_t block = line_addr / line_;
        const uint64_t set = block % sets_;
        const uint64_t tag = block / sets_;
        auto& lru = sets_state_[set];
        for (auto it = lru.begin(); it != lru.end(); ++it) {
            if (*it == tag) {
                lru.erase(it);
                lru.push_front(tag);
                ++hits_;
                return true;
            }
        }
        lru.push_front(tag);
        if (lru.size() > ways_) lru.pop_back();
        ++misses_;
        return false;
    }

    uint64_t hits_ = 0, misses_ = 0;

private:
    uint64_t line_, ways_, sets_;
    std::map<uint64_t, std::list<uint64_t>> sets_state_;
};

}  // namespace

TEST_CASE("record_fetch counts totals and uniques") {
    RayCounters c;
    record_fetch(c, 0x40, 64);
    record_fetch(c, 0x40, 64);
    CHECK(c.node_fetches == 2);
    CHECK(c.unique_nodes.size() == 1);

    std::vector<FetchEvent> trace;
    c.trace = &trace;
    record_fetch(c, 0x80, 32);
    REQUIRE(trace.size() == 1);
    CHECK(trace[0].address == 0x80);
    CHECK(trace[0].size == 32);
}

TEST_CASE("frame stats merge is fieldwise and associative") {
    Rng rng(81);
    const auto random_counters = [&rng]() {
        RayCounters c;
        c.node_fetches = rng.next_u64() % 100;
        c.box_tests = rng.next_u64() % 100;
        c.tri_tests = rng.next_u64() % 100;
        c.sphere_tests = rng.next_u64() % 100;
        c.rounds = rng.next_u64() % 5;
        c.evictions = rng.next_u64() % 10;
        for (int i = 0; i < 5; ++i) c.unique_nodes.insert(rng.next_u64() % 64);
        return c;
    };

    // disjoint merge is a fieldwise sum
    RayCounters a = random_counters(), b = random_counters();
    FrameStats ab;
    ab.absorb(a);
    ab.absorb(b);
    CHECK(ab.node_fetches == a.node_fetches + b.node_fetches);
    CHECK(ab.unique_node_fetches == a.unique_nodes.size() + b.unique_nodes.size());
    CHECK(ab.rays == 2);

    // associativity over three random stats
    FrameStats s1, s2, s3;
    s1.absorb(random_counters());
    s2.absorb(random_counters());
    s3.absorb(random_counters());
    FrameStats left = s1;
    left.merge(s2);
    left.merge(s3);
    FrameStats right23 = s2;
    right23.merge(s3);
    FrameStats right = s1;
    right.merge(right23);
    CHECK(left.node_fetches == right.node_fetches);
    CHECK(left.unique_node_fetches == right.unique_node_fetches);
    CHECK(left.rounds == right.rounds);
    CHECK(left.global_unique == right.global_unique);
}

TEST_CASE("cache: repeated access to one line") {
    CacheModel cache({{"l1", 1024, 64, 2}});
    for (int i = 0; i < 10; ++i) cache.access(0x100, 8);
    CHECK(cache.misses(0) == 1);
    CHECK(cache.hits(0) == 9);
    CHECK(cache.hit_rate(0) == Catch::Approx(0.9));
}

TEST_CASE("cache: conflict-free working set gives full hits after warmup") {
    // direct-mapped, 16 lines of 64B; a sequential 1 KB working set maps each
    // line to its own set
    CacheModel cache({{"l1", 1024, 64, 1}});
    for (int pass = 0; pass < 3; ++pass)
        for (uint64_t a = 0; a < 1024; a += 64) cache.access(a, 1);
    CHECK(cache.misses(0) == 16);
    CHECK(cache.hits(0) == 32);
}

TEST_CASE("cache matches the reference LRU on random traces") {
    Rng rng(82);
    for (int trial = 0; trial < 10; ++trial) {
        const uint64_t ways = 1ull << (rng.next_u64() % 3);       // 1, 2, 4
        const uint64_t line = 32ull << (rng.next_u64() % 2);      // 32, 64
        const uint64_t sets = 4ull << (rng.next_u64() % 2);       // 4, 8
        const uint64_t capacity = ways * line * sets;
        CacheModel cache({{"l1", capacity, line, ways}});
        ReferenceLru ref(capacity, line, ways);
        for (int i = 0; i < 20000; ++i) {
            const uint64_t addr = (rng.next_u64() % (capacity * 4)) & ~7ull;
            cache.access(addr, 1);
            ref.access(addr / line * line);
        }
        CHECK(cache.hits(0) == ref.hits_);
        CHECK(cache.misses(0) == ref.misses_);
    }
}

TEST_CASE("multi-level cache probes the next level on miss") {
    CacheModel cache({{"l1", 256, 64, 1}, {"l2", 1024, 64, 2}});
    const uint64_t stride = 64;
    // eight lines: working set fits L2 (16 lines) but thrashes L1 (4 lines)
    for (int pass = 0; pass < 4; ++pass)
        for (uint64_t i = 0; i < 8; ++i) cache.access(i * stride * 5, 1);  // conflicting map
    CHECK(cache.hits(0) + cache.misses(0) == 32);
    CHECK(cache.hits(1) + cache.misses(1) == cache.misses(0));
    CHECK(cache.misses(1) <= 8 + 4);  // cold misses plus limited churn
}

TEST_CASE("accesses spanning lines touch each line once") {
    CacheModel cache({{"l1", 1024, 64, 2}});
    cache.access(60, 8);  // straddles the 0 and 64 lines
    CHECK(cache.hits(0) + cache.misses(0) == 2);
    CHECK_THROWS_AS(CacheModel({{"bad", 1000, 64, 3}}), ShapeError);
}

TEST_CASE("buffer memory report is exact") {
    CHECK(buffer_memory_report(1, 1024, 1024) == 28672);
    CHECK(buffer_memory_report(0, 1024, 1024) == 0);
    CHECK(buffer_memory_report(2, 1024, 1024) == 2 * 28672);
    CHECK(buffer_memory_report(7, 16, 4) == 7 * (16 * 20 + 4 * 8));
}

TEST_CASE("report round trip and CSV shape") {
    // all-zero record stays valid
    const StatsRecord zero = StatsRecord::from("sw", FrameStats{});
    const std::string json = emit_report({zero}, ReportFormat::Json);
    const auto parsed = parse_report(json);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0] == zero);

    Rng rng(83);
    std::vector<StatsRecord> records;
    for (const char* name : {"baseline", "sw", "sw+hw"}) {
        FrameStats s;
        RayCounters c;
        c.node_fetches = rng.next_u64() % 1000;
        c.box_tests = rng.next_u64() % 1000;
        c.rounds = 3;
        c.unique_nodes.insert(1);
        s.absorb(c);
        StatsRecord r = StatsRecord::from(name, s);
        r.buffer_memory_bytes = buffer_memory_report(4, 1024, 1024);
        r.as_size_bytes = rng.next_u64() % 100000;
        r.l1_hit_rate = 0.75;
        r.l2_hit_rate = 0.5;
        records.push_back(r);
    }
    const auto back = parse_report(emit_report(records, ReportFormat::Json));
    REQUIRE(back.size() == records.size());
    for (size_t i = 0; i < records.size(); ++i) CHECK(back[i] == records[i]);

    const std::string csv = emit_report(records, ReportFormat::Csv);
    size_t lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 1 + records.size());
    CHECK(csv.rfind("regime,rays,rounds,", 0) == 0);
}

TEST_CASE("redundancy gap exists for multi-round traversal at small k") {
    const Scene s = generate_synthetic(200, 84, {{-1, -1, -1}, {1, 1, 1}}, 0.08, 0.3);
    const AccelStructure as = build_two_level(s, BlasKind::UnitSphere, CutoffPolicy::fixed(3.0), 2);
    RenderConfig cfg;
    cfg.regime = Regime::TwoLevelSW;
    cfg.k = 4;
    Traverser tr(s, as);
    bool gap_seen = false;
    Rng rng(85);
    for (int trial = 0; trial < 64 && !gap_seen; ++trial) {
        const Ray ray{{rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), -3.0},
                      normalize({rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), 1.0})};
        RayCounters counters;
        render_ray(s, as, ray, cfg, tr, counters);
        if (counters.rounds >= 2 && counters.node_fetches > counters.unique_nodes.size())
            gap_seen = true;
    }
    CHECK(gap_seen);
}

TEST_CASE("fetch traces drive the cache model deterministically") {
    const Scene s = generate_synthetic(150, 86, {{-1, -1, -1}, {1, 1, 1}}, 0.05, 0.2);
    const AccelStructure as = build_two_level(s, BlasKind::UnitSphere, CutoffPolicy::fixed(3.0), 2);
    const Camera cam = Camera::look_at({0, 0, -3.2}, {0, 0, 0}, 45.0, 12, 12);
    RenderConfig cfg;
    cfg.regime = Regime::TwoLevelSW;
    cfg.collect_trace = true;
    const FrameResult frame = render_frame(s, as, cam, cfg);
    REQUIRE(!frame.trace.empty());
    CacheModel a({{"l1", 128 * 1024, 128, 16}});
    CacheModel b({{"l1", 128 * 1024, 128, 16}});
    for (const FetchEvent& e : frame.trace) {
        a.access(e.address, e.size);
        b.access(e.address, e.size);
    }
    CHECK(a.hits(0) == b.hits(0));
    CHECK(a.hit_rate(0) > 0.0);
}
