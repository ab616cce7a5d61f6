// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: renders Gaussian scenes under the three traversal
// regimes, compares them, sweeps k, reports structure stats and generates
// synthetic scenes.

#include <grtx/grtx.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>

namespace {

using namespace grtx;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw UsageError("cannot parse number '" + s + "' for " + what);
    }
}

// Inline camera spec: pos=X,Y,Z,look=X,Y,Z,fov=F,res=WxH[,up=X,Y,Z]
Camera parse_camera_inline(const std::string& spec) {
    std::map<std::string, std::vector<std::string>> kv;
    std::string key;
    for (const std::string& tok : split(spec, ',')) {
        const size_t eq = tok.find('=');
        if (eq != std::string::npos) {
            key = tok.substr(0, eq);
            kv[key].push_back(tok.substr(eq + 1));
        } else if (!key.empty()) {
            kv[key].push_back(tok);
        } else {
            throw UsageError("camera spec must start with key=value, got '" + tok + "'");
        }
    }
    const auto vec3_of = [&](const std::string& k) {
        const auto it = kv.find(k);
        if (it == kv.end() || it->second.size() != 3)
            throw UsageError("camera spec needs " + k + "=X,Y,Z");
        return Vec3{parse_double(it->second[0], k), parse_double(it->second[1], k),
                    parse_double(it->second[2], k)};
    };
    if (!kv.count("fov") || kv["fov"].size() != 1) throw UsageError("camera spec needs fov=F");
    if (!kv.count("res") || kv["res"].size() != 1)
        throw UsageError("camera spec needs res=WxH");
    const auto wh = split(kv["res"][0], 'x');
    if (wh.size() != 2) throw UsageError("camera res must be WxH");
    const Vec3 up = kv.count("up") ? vec3_of("up") : Vec3{0, 1, 0};
    return Camera::look_at(vec3_of("pos"), vec3_of("look"),
                           parse_double(kv["fov"][0], "fov"),
                           uint32_t(parse_double(wh[0], "res")),
                           uint32_t(parse_double(wh[1], "res")), up);
}

Camera parse_camera_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open camera file '" + path + "'");
    nlohmann::json j;
    in >> j;
    const auto vec3_of = [&](const char* k) {
        const auto& a = j.at(k);
        return Vec3{a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()};
    };
    const Vec3 up = j.contains("up") ? vec3_of("up") : Vec3{0, 1, 0};
    return Camera::look_at(vec3_of("pos"), vec3_of("look"), j.at("fov").get<double>(),
                           j.at("res").at(0).get<uint32_t>(), j.at("res").at(1).get<uint32_t>(),
                           up);
}

Regime parse_regime(const std::string& s) {
    if (s == "baseline") return Regime::MonolithicBaseline;
    if (s == "sw") return Regime::TwoLevelSW;
    if (s == "sw+hw") return Regime::TwoLevelSWCheckpointHW;
    throw UsageError("--regime must be one of baseline|sw|sw+hw, got '" + s + "'");
}

BlasKind parse_blas(const std::string& s) {
    if (s == "sphere") return BlasKind::UnitSphere;
    if (s == "ico20") return BlasKind::Icosphere20;
    if (s == "ico80") return BlasKind::Icosphere80;
    throw UsageError("--blas must be one of sphere|ico20|ico80, got '" + s + "'");
}

CutoffPolicy parse_kappa(const std::string& s) {
    const auto parts = split(s, ':');
    if (parts.size() == 1) return CutoffPolicy::fixed(parse_double(parts[0], "--kappa"));
    if (parts.size() == 2 && parts[0] == "fixed")
        return CutoffPolicy::fixed(parse_double(parts[1], "--kappa"));
    if (parts.size() == 2 && parts[0] == "adaptive")
        return CutoffPolicy::adaptive(parse_double(parts[1], "--kappa"));
    throw UsageError("--kappa must be K, fixed:K or adaptive:ALPHA_MIN, got '" + s + "'");
}

// Flags shared by the rendering subcommands.
struct CommonOpts {
    std::string scene_path;
    bool pre_activated = false;
    std::string cam_spec;
    std::string cam_json;
    std::string regime = "sw+hw";
    std::string blas = "sphere";
    bool blas_given = false;
    uint32_t k = 16;
    std::string ert = "0.999";
    std::string kappa = "fixed:3";
    int arity = 2;
    int sh_degree = -1;
    uint32_t threads = 1;
    std::vector<double> background{0, 0, 0};
    bool cache = false;

    void add_to(CLI::App* cmd, bool needs_camera = true) {
        cmd->add_option("--scene", scene_path, "input PLY scene")->required();
        cmd->add_flag("--pre-activated", pre_activated,
                      "scene stores activated opacity/scale values");
        if (needs_camera) {
            cmd->add_option("--cam", cam_spec,
                            "inline camera: pos=X,Y,Z,look=X,Y,Z,fov=F,res=WxH[,up=X,Y,Z]");
            cmd->add_option("--cam-json", cam_json, "camera JSON file");
        }
        cmd->add_option("--regime", regime, "traversal regime: baseline|sw|sw+hw");
        cmd->add_option("--blas", blas, "proxy/BLAS geometry: sphere|ico20|ico80")
            ->each([this](const std::string&) { blas_given = true; });
        cmd->add_option("--k", k, "k-buffer capacity");
        cmd->add_option("--ert", ert, "early-termination alpha threshold, or 'off'");
        cmd->add_option("--kappa", kappa, "cutoff policy: K, fixed:K or adaptive:ALPHA_MIN");
        cmd->add_option("--arity", arity, "BVH arity (2-6)");
        cmd->add_option("--sh-degree", sh_degree, "cap SH degree (-1 uses the scene's)");
        cmd->add_option("--threads", threads, "render worker count");
        cmd->add_option("--background", background, "background color r g b")->expected(3);
        cmd->add_flag("--cache", cache, "replay node fetches through the cache model");
    }

    RenderConfig make_config() const {
        RenderConfig cfg;
        cfg.regime = parse_regime(regime);
        if (k < 1) throw UsageError("--k must be >= 1");
        cfg.k = k;
        if (ert == "off") {
            cfg.ert_enabled = false;
        } else {
            cfg.ert_threshold = parse_double(ert, "--ert");
            if (!(cfg.ert_threshold > 0.0 && cfg.ert_threshold <= 1.0))
                throw UsageError("--ert must be in (0, 1] or 'off'");
        }
        cfg.cutoff = parse_kappa(kappa);
        if (arity < kMinArity || arity > kMaxArity) throw UsageError("--arity must be in 2..6");
        if (threads < 1) throw UsageError("--threads must be >= 1");
        cfg.threads = threads;
        cfg.sh_degree = sh_degree;
        cfg.background = {background[0], background[1], background[2]};
        cfg.collect_trace = cache;
        return cfg;
    }

    // The monolithic baseline is a triangle-mesh structure; sphere only makes
    // sense for the two-level regimes. An unset --blas falls back to ico20.
    BlasKind blas_for(Regime r) const {
        BlasKind b = parse_blas(blas);
        if (r == Regime::MonolithicBaseline && b == BlasKind::UnitSphere) {
            if (blas_given)
                throw UsageError("--blas sphere is not available with --regime baseline");
            b = BlasKind::Icosphere20;
        }
        return b;
    }

    Camera camera() const {
        if (!cam_json.empty()) return parse_camera_json(cam_json);
        if (!cam_spec.empty()) return parse_camera_inline(cam_spec);
        throw UsageError("a camera is required (--cam or --cam-json)");
    }
};

std::vector<CacheLevelConfig> default_cache_levels() {
    return {{"l1", 128 * 1024, 128, 16}, {"l2", 4 * 1024 * 1024, 128, 16}};
}

void apply_trace_analysis(StatsRecord& rec, const std::vector<FetchEvent>& trace) {
    CacheModel model(default_cache_levels());
    std::map<uint64_t, uint32_t> touched;  // address -> widest fetch
    for (const FetchEvent& e : trace) {
        model.access(e.address, e.size);
        uint32_t& w = touched[e.address];
        w = std::max(w, e.size);
    }
    rec.l1_hit_rate = model.hit_rate(0);
    rec.l2_hit_rate = model.hit_rate(1);
    rec.traversal_footprint_bytes = 0;
    for (const auto& [addr, size] : touched) rec.traversal_footprint_bytes += size;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
}

void write_image_auto(const Image& img, const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".png")
        write_png(img, path);
    else
        write_ppm(img, path);
}

StatsRecord run_regime(const Scene& scene, const Camera& cam, const CommonOpts& opts,
                       Regime regime, Image* image_out) {
    RenderConfig cfg = opts.make_config();
    cfg.regime = regime;
    const AccelStructure as = build_for_regime(scene, cfg, opts.blas_for(regime), opts.arity);
    const FrameResult frame = render_frame(scene, as, cam, cfg);
    StatsRecord rec = StatsRecord::from(regime_name(regime), frame.stats);
    const AccelStats astats = as_stats(as);
    rec.as_size_bytes = astats.size_bytes;
    rec.as_node_count = astats.node_count;
    rec.as_height = astats.height;
    rec.buffer_memory_bytes =
        cfg.uses_checkpoints()
            ? buffer_memory_report(frame.stats.rays, cfg.checkpoint_capacity, cfg.evict_capacity)
            : 0;
    if (opts.cache) apply_trace_analysis(rec, frame.trace);
    if (image_out) *image_out = frame.image;
    return rec;
}

// ---- subcommands -------------------------------------------------------------

int cmd_render(const CommonOpts& opts, const std::string& out_path,
               const std::string& stats_path, const std::string& stats_format) {
    const RenderConfig cfg = opts.make_config();  // validates flags before any I/O
    (void)cfg;
    const Camera cam = opts.camera();
    const Scene scene = load_ply(opts.scene_path, opts.pre_activated);
    Image image;
    const StatsRecord rec = run_regime(scene, cam, opts, parse_regime(opts.regime), &image);
    if (!out_path.empty()) write_image_auto(image, out_path);
    const ReportFormat fmt = stats_format == "csv" ? ReportFormat::Csv : ReportFormat::Json;
    write_text(stats_path, emit_report({rec}, fmt));
    return kExitOk;
}

int cmd_compare(const CommonOpts& opts, const std::vector<std::string>& regimes,
                double tolerance, const std::string& stats_path, const std::string& out_prefix) {
    if (regimes.size() < 2) throw UsageError("--regimes needs at least two regimes");
    std::vector<Regime> parsed;
    for (const std::string& r : regimes) parsed.push_back(parse_regime(r));
    const Camera cam = opts.camera();
    const Scene scene = load_ply(opts.scene_path, opts.pre_activated);

    std::vector<StatsRecord> records;
    std::vector<Image> images;
    for (Regime r : parsed) {
        Image img;
        records.push_back(run_regime(scene, cam, opts, r, &img));
        images.push_back(std::move(img));
        if (!out_prefix.empty())
            write_image_auto(images.back(), out_prefix + records.back().regime + ".ppm");
    }

    double worst = 0.0;
    std::cout << "pairwise max per-channel image differences:\n";
    for (size_t i = 0; i < images.size(); ++i) {
        for (size_t j = i + 1; j < images.size(); ++j) {
            const double d = max_channel_diff(images[i], images[j]);
            worst = std::max(worst, d);
            std::cout << "  " << records[i].regime << " vs " << records[j].regime << ": " << d
                      << "\n";
        }
    }
    std::cout << "node-fetch ratio vs " << records[0].regime << ":\n";
    for (size_t i = 0; i < records.size(); ++i) {
        const double ratio = records[i].node_fetches == 0
                                 ? 0.0
                                 : double(records[0].node_fetches) / double(records[i].node_fetches);
        std::cout << "  " << records[i].regime << ": " << ratio << "\n";
    }
    write_text(stats_path, emit_report(records, ReportFormat::Json));
    if (worst > tolerance) {
        std::cerr << "max image difference " << worst << " exceeds tolerance " << tolerance
                  << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_bench(const CommonOpts& opts, const std::vector<uint32_t>& k_sweep,
              const std::string& stats_path) {
    if (k_sweep.empty()) throw UsageError("--k-sweep needs at least one k value");
    for (uint32_t k : k_sweep)
        if (k < 1) throw UsageError("--k-sweep values must be >= 1");
    const Camera cam = opts.camera();
    const Scene scene = load_ply(opts.scene_path, opts.pre_activated);
    const Regime regime = parse_regime(opts.regime);

    RenderConfig cfg = opts.make_config();
    const AccelStructure as = build_for_regime(scene, cfg, opts.blas_for(regime), opts.arity);

    std::vector<StatsRecord> records;
    std::cout << "k,rounds,node_fetches,evictions,checkpoint_seeds\n";
    for (uint32_t k : k_sweep) {
        cfg.k = k;
        const FrameResult frame = render_frame(scene, as, cam, cfg);
        StatsRecord rec = StatsRecord::from(std::string(regime_name(regime)) +
                                                ":k=" + std::to_string(k),
                                            frame.stats);
        std::cout << k << "," << rec.rounds << "," << rec.node_fetches << "," << rec.evictions
                  << "," << rec.checkpoint_seeds << "\n";
        records.push_back(std::move(rec));
    }
    if (!stats_path.empty()) write_text(stats_path, emit_report(records, ReportFormat::Json));
    return kExitOk;
}

int cmd_as_stats(const CommonOpts& opts, const std::string& stats_path,
                 const std::string& dump_path) {
    RenderConfig cfg = opts.make_config();
    const Scene scene = load_ply(opts.scene_path, opts.pre_activated);
    const Regime regime = parse_regime(opts.regime);
    const AccelStructure as = build_for_regime(scene, cfg, opts.blas_for(regime), opts.arity);
    write_text(stats_path, stats_json(as_stats(as)));
    if (!dump_path.empty()) {
        const std::vector<unsigned char> bytes = serialize(as);
        std::ofstream out(dump_path, std::ios::binary);
        if (!out) throw IoError("cannot open '" + dump_path + "' for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    }
    return kExitOk;
}

int cmd_gen_scene(size_t count, uint64_t seed, const std::vector<double>& bounds,
                  const std::vector<double>& scale_range, int sh_degree,
                  const std::string& out_path) {
    if (count < 1) throw UsageError("--count must be >= 1");
    if (scale_range.size() != 2 || !(scale_range[0] > 0) || scale_range[1] < scale_range[0])
        throw UsageError("--scale-range needs LO HI with 0 < LO <= HI");
    const Aabb box{{bounds[0], bounds[1], bounds[2]}, {bounds[3], bounds[4], bounds[5]}};
    if (!(box.min.x <= box.max.x && box.min.y <= box.max.y && box.min.z <= box.max.z))
        throw UsageError("--bounds must satisfy min <= max per axis");
    const Scene scene =
        generate_synthetic(count, seed, box, scale_range[0], scale_range[1], sh_degree);
    save_ply(scene, out_path);
    std::cout << "wrote " << scene.size() << " gaussians to " << out_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CPU ray tracer for 3D Gaussian scenes with instrumented BVH traversal"};
    app.require_subcommand(1);

    CommonOpts render_opts, compare_opts, bench_opts, stats_opts;
    std::string out_path, render_stats = "-", render_stats_format = "json";
    auto* render = app.add_subcommand("render", "render one regime to an image + stats");
    render_opts.add_to(render);
    render->add_option("--out", out_path, "output image (.ppm or .png)");
    render->add_option("--stats-out", render_stats, "stats destination ('-' for stdout)");
    render->add_option("--stats-format", render_stats_format, "json|csv");

    std::vector<std::string> regimes;
    double tolerance = 1e-4;
    std::string compare_stats = "-", compare_prefix;
    auto* compare = app.add_subcommand("compare", "render several regimes and diff them");
    compare_opts.add_to(compare);
    compare->add_option("--regimes", regimes, "two or more of baseline|sw|sw+hw")
        ->required()
        ->delimiter(',');
    compare->add_option("--tolerance", tolerance, "max allowed per-channel difference");
    compare->add_option("--stats-out", compare_stats, "stats destination");
    compare->add_option("--out-prefix", compare_prefix, "write each regime's image here");

    std::vector<uint32_t> k_sweep;
    std::string bench_stats;
    auto* bench = app.add_subcommand("bench", "sweep k-buffer sizes");
    bench_opts.add_to(bench);
    bench->add_option("--k-sweep", k_sweep, "k values")->required()->delimiter(',');
    bench->add_option("--stats-out", bench_stats, "stats destination");

    std::string as_stats_out = "-", as_dump;
    auto* astats = app.add_subcommand("as-stats", "build a structure and report its size model");
    stats_opts.add_to(astats, /*needs_camera=*/false);
    astats->add_option("--stats-out", as_stats_out, "stats destination");
    astats->add_option("--dump", as_dump, "write the serialized structure container here");

    size_t gen_count = 500;
    uint64_t gen_seed = 42;
    std::vector<double> gen_bounds{-1, -1, -1, 1, 1, 1};
    std::vector<double> gen_scale{0.03, 0.12};
    int gen_sh_degree = 1;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen-scene", "write a synthetic scene PLY");
    gen->add_option("--count", gen_count, "number of gaussians");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--bounds", gen_bounds, "minX minY minZ maxX maxY maxZ")->expected(6);
    gen->add_option("--scale-range", gen_scale, "LO HI standard deviations")->expected(2);
    gen->add_option("--sh-degree", gen_sh_degree, "SH degree 0..3");
    gen->add_option("--out", gen_out, "output PLY path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*render)
            return cmd_render(render_opts, out_path, render_stats, render_stats_format);
        if (*compare)
            return cmd_compare(compare_opts, regimes, tolerance, compare_stats, compare_prefix);
        if (*bench) return cmd_bench(bench_opts, k_sweep, bench_stats);
        if (*astats) return cmd_as_stats(stats_opts, as_stats_out, as_dump);
        if (*gen)
            return cmd_gen_scene(gen_count, gen_seed, gen_bounds, gen_scale, gen_sh_degree,
                                 gen_out);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
