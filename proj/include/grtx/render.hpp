// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <grtx/camera.hpp>
#include <grtx/image.hpp>
#include <grtx/traversal.hpp>

#include <thread>

namespace grtx {

// The three traversal regimes under comparison. Baseline: monolithic BVH
// over per-Gaussian proxy meshes. TwoLevelSW: TLAS with one shared BLAS.
// TwoLevelSWCheckpointHW: the same structure plus checkpoint/replay rounds.
enum class Regime { MonolithicBaseline, TwoLevelSW, TwoLevelSWCheckpointHW };

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::MonolithicBaseline: return "baseline";
        case Regime::TwoLevelSW: return "sw";
        default: return "sw+hw";
    }
}

struct RenderConfig {
    Regime regime = Regime::TwoLevelSWCheckpointHW;
    uint32_t k = 16;
    bool ert_enabled = true;
    double ert_threshold = 0.999;  // on accumulated alpha
    double min_alpha = 1.0 / 255.0;
    CutoffPolicy cutoff = CutoffPolicy::fixed(3.0);
    int sh_degree = -1;  // cap; -1 renders at each Gaussian's stored degree
    Vec3 background{0, 0, 0};
    uint32_t threads = 1;
    size_t checkpoint_capacity = 1024;
    size_t evict_capacity = 1024;
    TraceLimits limits;
    bool collect_trace = false;

    bool uses_checkpoints() const { return regime == Regime::TwoLevelSWCheckpointHW; }

    void validate() const {
        if (k < 1) throw DataError("config: k must be >= 1");
        if (!(ert_threshold > 0.0 && ert_threshold <= 1.0))
            throw DataError("config: ert threshold must be in (0, 1]");
        if (threads < 1) throw DataError("config: thread count must be >= 1");
    }
};

// Builds the acceleration structure a regime calls for. The baseline proxy
// mesh and the icosphere BLAS come from the same insphere-scaled templates.
inline AccelStructure build_for_regime(const Scene& scene, const RenderConfig& config,
                                       BlasKind blas, int arity) {
    if (config.regime == Regime::MonolithicBaseline) {
        if (blas == BlasKind::UnitSphere)
            throw DataError("the monolithic baseline needs a triangle proxy (ico20 or ico80)");
        return build_monolithic(scene, icosahedron_mesh(blas_subdiv(blas)), config.cutoff, arity);
    }
    return build_two_level(scene, blas, config.cutoff, arity);
}

struct PixelState {
    Vec3 color;                  // accumulated premultiplied radiance
    double transmittance = 1.0;  // starts at 1, nonincreasing
    uint32_t blended = 0;
    uint32_t alpha_skipped = 0;
    bool terminated = false;

    double accumulated_alpha() const { return 1.0 - transmittance; }
};

// One blended (or alpha-skipped) hit; acceptance tests compare these
// sequences across regimes.
struct BlendEvent {
    uint32_t prim_id = 0;
    double t_hit = 0.0;
};

namespace detail {

inline void blend_hit(PixelState& state, const Gaussian& g, const Ray& ray,
                      const RenderConfig& config) {
    const double alpha = particle_alpha(g, ray);
    if (alpha < config.min_alpha) {
        ++state.alpha_skipped;
        return;
    }
    const int degree = config.sh_degree < 0 ? g.sh_degree()
                                            : std::min(config.sh_degree, g.sh_degree());
    const Vec3 c = eval_sh_color(g.sh.data(), g.sh.size(), ray.direction, degree);
    state.color += c * (state.transmittance * alpha);
    state.transmittance *= 1.0 - alpha;
    ++state.blended;
    if (config.ert_enabled && state.accumulated_alpha() >= config.ert_threshold)
        state.terminated = true;
}

}  // namespace detail

// Composites the buffered hits front to back (Eq. of volume rendering:
// C = sum_i alpha_i c_i prod_j<i (1 - alpha_j)), with alpha evaluated at the
// point of maximum response. Hits below min_alpha are consumed but not
// blended. Returns the key of the last consumed entry, which becomes the
// next round's resume point; termination stops consumption immediately.
inline HitKey blend_round(PixelState& state, const KBuffer& kbuf, const Ray& ray,
                          const Scene& scene, const RenderConfig& config,
                          std::vector<BlendEvent>* blend_log = nullptr,
                          HitKey resume = HitKey{0.0, ~0u}) {
    for (size_t i = 0; i < kbuf.size() && !state.terminated; ++i) {
        const HitRecord& hit = kbuf[i];
        resume = hit.key();
        if (blend_log) blend_log->push_back({hit.prim_id, hit.t_hit});
        detail::blend_hit(state, scene[hit.prim_id], ray, config);
    }
    return resume;
}

struct PixelResult {
    Vec3 rgb;
    double alpha = 0.0;
    PixelState state;
};

// Multi-round per-pixel driver: trace a round, blend it, resume past the
// last consumed hit; stop on early termination or when a round comes back
// short (scene exhausted). With the checkpoint regime, rounds after the
// first replay from checkpointed nodes and eviction-buffer seeds.
inline PixelResult render_ray(const Scene& scene, const AccelStructure& as, const Ray& ray,
                              const RenderConfig& config, Traverser& traverser,
                              RayCounters& counters,
                              std::vector<BlendEvent>* blend_log = nullptr) {
    PixelState state;
    HitKey resume{0.0, ~0u};
    KBuffer kbuf(config.k);
    CheckpointContext ctx(config.checkpoint_capacity, config.evict_capacity);
    const bool use_ckpt = config.uses_checkpoints();
    if (use_ckpt) ctx.bind_structure(as.build_id);

    for (;;) {
        if (use_ckpt) {
            ctx.prepare_round(kbuf, resume);
        } else {
            kbuf.clear();
        }
        traverser.trace_round(ray, resume, kbuf, counters, use_ckpt ? &ctx : nullptr);
        if (kbuf.empty()) break;
        resume = blend_round(state, kbuf, ray, scene, config, blend_log, resume);
        if (state.terminated) break;
        if (kbuf.size() < config.k) break;
    }
    counters.overflow_fallbacks += ctx.overflow_fallbacks();

    PixelResult r;
    r.state = state;
    r.alpha = state.accumulated_alpha();
    r.rgb = state.color + config.background * state.transmittance;
    return r;
}

inline PixelResult render_pixel(const Scene& scene, const AccelStructure& as,
                                const Camera& camera, uint32_t px, uint32_t py,
                                const RenderConfig& config, Traverser& traverser,
                                RayCounters& counters,
                                std::vector<BlendEvent>* blend_log = nullptr) {
    return render_ray(scene, as, generate_ray(camera, px, py), config, traverser, counters,
                      blend_log);
}

// Ground-truth renderer: tests the ray against every Gaussian's cutoff
// ellipsoid analytically (no acceleration structure, world-space quadric),
// sorts by (t, id) and blends with the same termination rules.
inline std::optional<double> oracle_ellipsoid_entry(const Gaussian& g, double kappa_eff,
                                                    const Ray& ray) {
    const Mat3 rot = rotation_matrix(g.rotation);
    Mat3 a;  // (kappa Sigma^(1/2))^-2, i.e. R diag(1/(kappa s)^2) R^T
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            a.m[i][j] = 0.0;
            for (int k = 0; k < 3; ++k) {
                const double sk = kappa_eff * g.scale[k];
                a.m[i][j] += rot.m[i][k] * rot.m[j][k] / (sk * sk);
            }
        }
    }
    const Vec3 f = ray.origin - g.mean;
    const double qa = dot(ray.direction, a * ray.direction);
    const double qb = dot(ray.direction, a * f);
    const double qc = dot(f, a * f) - 1.0;
    const double disc = qb * qb - qa * qc;
    if (disc < 0.0 || qa <= 0.0) return std::nullopt;
    const double root = std::sqrt(disc);
    const double t0 = (-qb - root) / qa;
    const double t1 = (-qb + root) / qa;
    if (t0 > 0.0) return t0;
    if (t1 > 0.0) return t1;
    return std::nullopt;
}

inline PixelResult oracle_render_ray(const Scene& scene, const Ray& ray,
                                     const RenderConfig& config,
                                     std::vector<BlendEvent>* blend_log = nullptr) {
    std::vector<HitRecord> hits;
    for (uint32_t i = 0; i < scene.size(); ++i) {
        const double kappa = cutoff_radius(scene[i], config.cutoff);
        if (const auto t = oracle_ellipsoid_entry(scene[i], kappa, ray))
            hits.push_back({*t, i});
    }
    std::sort(hits.begin(), hits.end(),
              [](const HitRecord& a, const HitRecord& b) { return a.key() < b.key(); });

    PixelState state;
    for (const HitRecord& hit : hits) {
        if (state.terminated) break;
        if (blend_log) blend_log->push_back({hit.prim_id, hit.t_hit});
        detail::blend_hit(state, scene[hit.prim_id], ray, config);
    }
    PixelResult r;
    r.state = state;
    r.alpha = state.accumulated_alpha();
    r.rgb = state.color + config.background * state.transmittance;
    return r;
}

inline PixelResult oracle_render_pixel(const Scene& scene, const Camera& camera, uint32_t px,
                                       uint32_t py, const RenderConfig& config) {
    return oracle_render_ray(scene, generate_ray(camera, px, py), config);
}

struct FrameResult {
    Image image;
    FrameStats stats;
    std::vector<FetchEvent> trace;  // pixel-major, filled when collect_trace
};

// Renders the full frame, optionally across worker threads. Pixels are
// partitioned into contiguous row bands and all merging happens in pixel
// order, so the image, the stats and the fetch trace are independent of the
// worker count.
inline FrameResult render_frame(const Scene& scene, const AccelStructure& as,
                                const Camera& camera, const RenderConfig& config) {
    config.validate();
    camera.validate();
    FrameResult out;
    out.image = Image(camera.width, camera.height);

    const uint32_t workers = std::min<uint32_t>(config.threads, camera.height);
    std::vector<FrameStats> worker_stats(workers);
    std::vector<std::vector<FetchEvent>> worker_traces(workers);

    const auto run_band = [&](uint32_t w, uint32_t row_begin, uint32_t row_end) {
        Traverser traverser(scene, as, config.limits);
        FrameStats& stats = worker_stats[w];
        std::vector<FetchEvent>& trace = worker_traces[w];
        for (uint32_t y = row_begin; y < row_end; ++y) {
            for (uint32_t x = 0; x < camera.width; ++x) {
                RayCounters counters;
                if (config.collect_trace) counters.trace = &trace;
                const PixelResult pr =
                    render_pixel(scene, as, camera, x, y, config, traverser, counters);
                double* px = out.image.pixel(x, y);
                px[0] = pr.rgb.x;
                px[1] = pr.rgb.y;
                px[2] = pr.rgb.z;
                px[3] = pr.alpha;
                stats.absorb(counters);
                stats.blended += pr.state.blended;
                stats.alpha_skipped += pr.state.alpha_skipped;
            }
        }
    };

    if (workers <= 1) {
        run_band(0, 0, camera.height);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (uint32_t w = 0; w < workers; ++w) {
            const uint32_t row_begin = uint32_t(uint64_t(camera.height) * w / workers);
            const uint32_t row_end = uint32_t(uint64_t(camera.height) * (w + 1) / workers);
            pool.emplace_back(run_band, w, row_begin, row_end);
        }
        for (std::thread& t : pool) t.join();
    }

    for (uint32_t w = 0; w < workers; ++w) {
        out.stats.merge(worker_stats[w]);
        out.trace.insert(out.trace.end(), worker_traces[w].begin(), worker_traces[w].end());
    }
    return out;
}

}  // namespace grtx
