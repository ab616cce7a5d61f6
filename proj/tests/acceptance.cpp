// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance suite. Each check prints one PASS/FAIL line; the
// process exit code is the number of failed checks.

#include <grtx/grtx.hpp>

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

using namespace grtx;

namespace {

int g_failures = 0;

void report(int index, const char* name, bool pass, const std::string& detail, double seconds) {
    std::printf("[%s] %2d. %-38s %s  (%.2fs)\n", pass ? "PASS" : "FAIL", index, name,
                detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void run(int index, const char* name, const std::function<std::pair<bool, std::string>()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
        std::tie(pass, detail) = fn();
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(index, name, pass, detail, secs);
}

Scene reference_scene() {
    return generate_synthetic(500, 42, {{-1, -1, -1}, {1, 1, 1}}, 0.03, 0.12);
}

Camera reference_camera(uint32_t res = 64) {
    return Camera::look_at({0, 0, -3.2}, {0, 0, 0}, 50.0, res, res);
}

// Dense low-opacity scene that forces deep multi-round traversal at k = 4.
Scene dense_scene() {
    Scene s = generate_synthetic(400, 7, {{-1, -1, -1}, {1, 1, 1}}, 0.12, 0.3);
    for (Gaussian& g : s.gaussians) g.opacity = 0.25;
    return s;
}

std::string fmt(const char* f, ...) {
    char buf[256];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

// 1. Every regime matches the brute-force oracle within 1e-4 per channel.
std::pair<bool, std::string> oracle_equivalence() {
    const Scene scene = reference_scene();
    const Camera cam = reference_camera(64);
    RenderConfig cfg;  // defaults: k=16, ERT on at 0.999
    Image oracle_img(cam.width, cam.height);
    for (uint32_t y = 0; y < cam.height; ++y) {
        for (uint32_t x = 0; x < cam.width; ++x) {
            const PixelResult pr = oracle_render_pixel(scene, cam, x, y, cfg);
            double* px = oracle_img.pixel(x, y);
            px[0] = pr.rgb.x;
            px[1] = pr.rgb.y;
            px[2] = pr.rgb.z;
            px[3] = pr.alpha;
        }
    }
    double worst = 0.0;
    for (Regime regime :
         {Regime::MonolithicBaseline, Regime::TwoLevelSW, Regime::TwoLevelSWCheckpointHW}) {
        RenderConfig rc = cfg;
        rc.regime = regime;
        const BlasKind blas =
            regime == Regime::MonolithicBaseline ? BlasKind::Icosphere20 : BlasKind::UnitSphere;
        const AccelStructure as = build_for_regime(scene, rc, blas, 2);
        const FrameResult frame = render_frame(scene, as, cam, rc);
        worst = std::max(worst, max_channel_diff(frame.image, oracle_img));
    }
    return {worst <= 1e-4, fmt("max |regime - oracle| = %.3g (tol 1e-4)", worst)};
}

// 2. Checkpoint/replay blends the exact baseline sequence; images bit-equal.
std::pair<bool, std::string> checkpoint_exactness() {
    const Scene scene = reference_scene();
    const AccelStructure as =
        build_two_level(scene, BlasKind::UnitSphere, CutoffPolicy::fixed(3.0), 2);
    RenderConfig sw;
    sw.regime = Regime::TwoLevelSW;
    sw.k = 8;
    RenderConfig hw = sw;
    hw.regime = Regime::TwoLevelSWCheckpointHW;

    Traverser tr(scene, as);
    Rng rng(2024);
    size_t sequences_equal = 0;
    bool rgba_equal = true;
    for (int i = 0; i < 1024; ++i) {
        const Ray ray{{rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), -3.2},
                      normalize({rng.uniform(-0.35, 0.35), rng.uniform(-0.35, 0.35), 1.0})};
        std::vector<BlendEvent> a, b;
        RayCounters ca, cb;
        const PixelResult pa = render_ray(scene, as, ray, sw, tr, ca, &a);
        const PixelResult pb = render_ray(scene, as, ray, hw, tr, cb, &b);
        bool same = a.size() == b.size();
        for (size_t j = 0; same && j < a.size(); ++j)
            same = a[j].prim_id == b[j].prim_id && a[j].t_hit == b[j].t_hit;
        if (same) ++sequences_equal;
        if (!(pa.rgb == pb.rgb) || pa.alpha != pb.alpha) rgba_equal = false;
    }
    const Camera cam = reference_camera(32);
    const FrameResult fa = render_frame(scene, as, cam, sw);
    const FrameResult fb = render_frame(scene, as, cam, hw);
    const bool frames_equal = fa.image.data == fb.image.data;
    return {sequences_equal == 1024 && rgba_equal && frames_equal,
            fmt("blend sequences equal on %zu/1024 rays, frames bit-identical=%d",
                sequences_equal, int(frames_equal))};
}

// 3. The worked any-hit example: k = 4 buffer topped by (2.85, 33), incoming
// (3.2, 5) is reported, evicted and seeds the next round first.
std::pair<bool, std::string> walkthrough() {
    KBuffer kbuf(4);
    kbuf.insert({1.1, 12});
    kbuf.insert({1.7, 40});
    kbuf.insert({2.2, 8});
    kbuf.insert({2.85, 33});
    CheckpointContext ctx;
    const AnyHitVerdict v = kbuf.insert({3.2, 5});
    bool ok = v.action == AnyHitVerdict::Action::Accept && v.new_t_max == 3.2 &&
              v.has_rejected && v.rejected.prim_id == 5 && v.rejected.t_hit == 3.2;
    ctx.evict_push(v.rejected);
    ok = ok && ctx.evictions().size() == 1 && ctx.evictions()[0].prim_id == 5 &&
         ctx.evictions()[0].t_hit == 3.2;
    ctx.prepare_round(kbuf, HitKey{2.85, 33});
    ok = ok && kbuf.size() == 1 && kbuf[0].t_hit == 3.2 && kbuf[0].prim_id == 5;
    return {ok, "accept(new_t_max=3.2), eviction (5, 3.2), reseeded first"};
}

// 4. Multi-round redundancy exists (total/unique >= 1.2) and checkpointing
// removes it (<= 0.8x total, never more per ray).
std::pair<bool, std::string> redundancy_elimination() {
    const Scene scene = dense_scene();
    const AccelStructure as =
        build_two_level(scene, BlasKind::UnitSphere, CutoffPolicy::fixed(3.0), 2);
    const Camera cam = Camera::look_at({0, 0, -3.2}, {0, 0, 0}, 45.0, 32, 32);
    RenderConfig sw;
    sw.regime = Regime::TwoLevelSW;
    sw.k = 4;
    RenderConfig hw = sw;
    hw.regime = Regime::TwoLevelSWCheckpointHW;

    Traverser tr(scene, as);
    uint64_t base_total = 0, base_unique = 0, ckpt_total = 0;
    uint32_t deep_rays = 0, rays = 0, per_ray_violations = 0;
    for (uint32_t y = 0; y < cam.height; ++y) {
        for (uint32_t x = 0; x < cam.width; ++x) {
            RayCounters a, b;
            render_pixel(scene, as, cam, x, y, sw, tr, a);
            render_pixel(scene, as, cam, x, y, hw, tr, b);
            ++rays;
            if (a.rounds >= 3) ++deep_rays;
            base_total += a.node_fetches;
            base_unique += a.unique_nodes.size();
            ckpt_total += b.node_fetches;
            if (b.node_fetches > a.node_fetches) ++per_ray_violations;
        }
    }
    const double deep_frac = double(deep_rays) / double(rays);
    const double gap = double(base_total) / double(base_unique);
    const double reduction = double(ckpt_total) / double(base_total);
    const bool ok =
        deep_frac >= 0.5 && gap >= 1.2 && per_ray_violations == 0 && reduction <= 0.8;
    return {ok, fmt(">=3-round rays %.0f%%, total/unique %.2f (>=1.2), ckpt/base %.3f (<=0.8), "
                    "per-ray violations %u",
                    100.0 * deep_frac, gap, reduction, per_ray_violations)};
}

// 5. Size model: shared-BLAS structure is <20% of the monolithic one and the
// sphere BLAS undercuts the icosphere, at every scene size.
std::pair<bool, std::string> structure_size() {
    bool ok = true;
    std::ostringstream detail;
    for (size_t n : {size_t(1000), size_t(10000), size_t(100000)}) {
        const Scene scene = generate_synthetic(n, 7, {{-2, -2, -2}, {2, 2, 2}}, 0.02, 0.1);
        const auto mono =
            as_stats(build_monolithic(scene, icosahedron_mesh(0), CutoffPolicy::fixed(3.0), 2));
        const auto tl20 =
            as_stats(build_two_level(scene, BlasKind::Icosphere20, CutoffPolicy::fixed(3.0), 2));
        const auto tls =
            as_stats(build_two_level(scene, BlasKind::UnitSphere, CutoffPolicy::fixed(3.0), 2));
        const double ratio = double(tl20.size_bytes) / double(mono.size_bytes);
        ok = ok && ratio < 0.2 && tls.size_bytes < tl20.size_bytes;
        detail << "N=" << n << " ratio=" << fmt("%.3f", ratio) << " ";
    }
    return {ok, detail.str() + "(tol <0.2, sphere < ico20)"};
}

// 6. Transform-then-unit-sphere equals the analytic ellipsoid quadric;
// icosphere proxies never miss a true ellipsoid hit.
std::pair<bool, std::string> unit_sphere_exactness() {
    Rng rng(606);
    const TriMesh ico20 = icosahedron_mesh(0);
    const TriMesh ico80 = icosahedron_mesh(1);
    uint32_t mismatches = 0, false_negatives = 0, hits = 0;
    double worst_t = 0.0;
    for (int i = 0; i < 10000; ++i) {
        Gaussian g;
        g.mean = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        g.rotation = rng.uniform_quaternion();
        g.scale = {rng.uniform(0.05, 0.8), rng.uniform(0.05, 0.8), rng.uniform(0.05, 0.8)};
        g.opacity = 0.9;
        g.sh = {Vec3{0, 0, 0}};
        const Ray ray{{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)},
                      normalize({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)})};

        const auto sphere_t = ellipsoid_hit_t(g, 3.0, ray);          // transform + unit sphere
        const auto quadric_t = oracle_ellipsoid_entry(g, 3.0, ray);  // analytic world quadric
        if (sphere_t.has_value() != quadric_t.has_value()) {
            ++mismatches;
            continue;
        }
        if (!sphere_t) continue;
        ++hits;
        worst_t = std::max(worst_t, std::fabs(*sphere_t - *quadric_t));
        if (std::fabs(*sphere_t - *quadric_t) > 1e-6) ++mismatches;

        // icosphere proxies: a true hit must intersect some proxy face
        const Ray local = transform_ray(ray, world_from_local(g, 3.0).second);
        for (const TriMesh* mesh : {&ico20, &ico80}) {
            bool proxy_hit = false;
            for (const auto& f : mesh->faces) {
                if (ray_triangle(local, mesh->vertices[f[0]], mesh->vertices[f[1]],
                                 mesh->vertices[f[2]], {0.0, kInf})) {
                    proxy_hit = true;
                    break;
                }
            }
            if (!proxy_hit) ++false_negatives;
        }
    }
    const bool ok = mismatches == 0 && false_negatives == 0 && hits > 500;
    return {ok, fmt("%u hits, bool/t mismatches %u, max |dt| %.2g, proxy false negatives %u",
                    hits, mismatches, worst_t, false_negatives)};
}

// 7. With termination off, multi-round output equals single-round
// sort-then-blend exactly.
std::pair<bool, std::string> multi_equals_single() {
    const Scene scene = reference_scene();
    const AccelStructure as =
        build_two_level(scene, BlasKind::UnitSphere, CutoffPolicy::fixed(3.0), 2);
    const Camera cam = reference_camera(64);
    Traverser tr(scene, as);
    Rng rng(707);
    size_t equal = 0;
    const size_t trials = 256;
    for (size_t i = 0; i < trials; ++i) {
        const uint32_t px = uint32_t(rng.next_u64() % cam.width);
        const uint32_t py = uint32_t(rng.next_u64() % cam.height);
        const Ray ray = generate_ray(cam, px, py);
        bool all_k_equal = true;
        for (uint32_t k : {4u, 8u, 16u}) {
            RenderConfig cfg;
            cfg.regime = Regime::TwoLevelSW;
            cfg.ert_enabled = false;
            cfg.k = k;
            RayCounters ca, cb;
            const PixelResult multi = render_ray(scene, as, ray, cfg, tr, ca);
            const auto hits = tr.trace_single_round(ray, cb);
            PixelState st;
            for (const HitRecord& h : hits) {
                if (st.terminated) break;
                detail::blend_hit(st, scene[h.prim_id], ray, cfg);
            }
            const Vec3 single = st.color + cfg.background * st.transmittance;
            all_k_equal = all_k_equal && multi.rgb == single &&
                          multi.alpha == st.accumulated_alpha();
        }
        if (all_k_equal) ++equal;
    }
    return {equal == trials, fmt("%zu/%zu pixels identical across k in {4,8,16}", equal, trials)};
}

// 8. Cache trend: replaying the fetch trace through the L1 model, the shared
// BLAS structure out-hits the monolithic one on the same rays.
std::pair<bool, std::string> cache_trend() {
    const Scene scene = reference_scene();
    const Camera cam = reference_camera(48);
    const auto hit_rate = [&](Regime regime, BlasKind blas) {
        RenderConfig cfg;
        cfg.regime = regime;
        cfg.collect_trace = true;
        const AccelStructure as = build_for_regime(scene, cfg, blas, 2);
        const FrameResult frame = render_frame(scene, as, cam, cfg);
        CacheModel l1({{"l1", 128 * 1024, 128, 16}});
        for (const FetchEvent& e : frame.trace) l1.access(e.address, e.size);
        return l1.hit_rate(0);
    };
    const double mono = hit_rate(Regime::MonolithicBaseline, BlasKind::Icosphere20);
    const double two = hit_rate(Regime::TwoLevelSW, BlasKind::UnitSphere);
    return {two > mono, fmt("L1 hit rate: sw %.3f > baseline %.3f", two, mono)};
}

// 9. Rounds per ray are nonincreasing in k; eviction counts stay finite and
// reported.
std::pair<bool, std::string> k_sweep_monotonic() {
    const Scene scene = reference_scene();
    const AccelStructure as =
        build_two_level(scene, BlasKind::UnitSphere, CutoffPolicy::fixed(3.0), 2);
    const Camera cam = reference_camera(16);
    Traverser tr(scene, as);
    uint32_t violations = 0;
    uint64_t total_evictions = 0;
    std::vector<uint64_t> prev_rounds(size_t(cam.width) * cam.height, ~0ull);
    for (uint32_t k : {4u, 8u, 16u, 32u}) {
        RenderConfig cfg;
        cfg.regime = Regime::TwoLevelSWCheckpointHW;
        cfg.k = k;
        size_t idx = 0;
        for (uint32_t y = 0; y < cam.height; ++y) {
            for (uint32_t x = 0; x < cam.width; ++x, ++idx) {
                RayCounters counters;
                render_pixel(scene, as, cam, x, y, cfg, tr, counters);
                if (counters.rounds > prev_rounds[idx]) ++violations;
                prev_rounds[idx] = counters.rounds;
                total_evictions += counters.evictions;
            }
        }
    }
    return {violations == 0, fmt("0 monotonicity violations expected, saw %u; evictions=%llu",
                                 violations, (unsigned long long)total_evictions)};
}

// 10. Serialized checkpoint entries are exactly 20 bytes and eviction
// entries exactly 8, byte-for-byte against independently written goldens.
std::pair<bool, std::string> buffer_layout_golden() {
    const auto read_file = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("missing golden file " + path);
        return std::vector<unsigned char>((std::istreambuf_iterator<char>(in)), {});
    };
    const std::string dir = GRTX_GOLDEN_DIR;
    const auto ckpt_golden = read_file(dir + "/checkpoint_entries.bin");
    const auto evict_golden = read_file(dir + "/eviction_entries.bin");

    const CheckpointEntry ckpts[3] = {{0x40, kNoTlasLeaf, 3.5},
                                      {0xA0, 0x80, 2.25},
                                      {0x1F4, kNoTlasLeaf, 10.0}};
    std::vector<unsigned char> ckpt_bytes(3 * 20);
    for (int i = 0; i < 3; ++i) serialize_entry(ckpts[i], ckpt_bytes.data() + i * 20);

    const EvictionEntry evicts[3] = {{5, 3.2}, {33, 2.85}, {7, 0.5}};
    std::vector<unsigned char> evict_bytes(3 * 8);
    for (int i = 0; i < 3; ++i) serialize_entry(evicts[i], evict_bytes.data() + i * 8);

    const bool ok = ckpt_bytes == ckpt_golden && evict_bytes == evict_golden &&
                    ckpt_golden.size() == 60 && evict_golden.size() == 24;
    return {ok, fmt("checkpoint 3x20=%zu bytes, eviction 3x8=%zu bytes, byte-exact=%d",
                    ckpt_golden.size(), evict_golden.size(), int(ok))};
}

}  // namespace

int main() {
    std::printf("acceptance suite\n================\n");
    run(1, "oracle image equivalence", oracle_equivalence);
    run(2, "checkpoint/replay exactness", checkpoint_exactness);
    run(3, "any-hit walkthrough", walkthrough);
    run(4, "redundancy gap and elimination", redundancy_elimination);
    run(5, "structure size ratios", structure_size);
    run(6, "unit-sphere exactness / proxy safety", unit_sphere_exactness);
    run(7, "multi-round equals single-round", multi_equals_single);
    run(8, "cache hit-rate trend", cache_trend);
    run(9, "k-sweep round monotonicity", k_sweep_monotonic);
    run(10, "buffer layout golden files", buffer_layout_golden);
    if (g_failures == 0)
        std::printf("all 10 acceptance checks passed\n");
    else
        std::printf("%d acceptance check(s) failed\n", g_failures);
    return g_failures;
}
