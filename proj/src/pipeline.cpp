#include "affchan/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "affchan/cache.hpp"
#include "affchan/common.hpp"
#include "affchan/detector.hpp"
#include "affchan/features.hpp"
#include "affchan/frames.hpp"
#include "affchan/gist.hpp"
#include "affchan/manifest.hpp"
#include "affchan/parallel.hpp"
#include "affchan/rng.hpp"
#include "affchan/stats.hpp"

namespace affchan {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

const std::vector<AffectDim> kDims = {AffectDim::Valence, AffectDim::Arousal};

void atomic_write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IntegrityError("cannot write " + tmp.string());
        out.write(text.data(), std::streamsize(text.size()));
        if (!out) throw IntegrityError("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string blur_mode_name(BlurMode m) {
    switch (m) {
        case BlurMode::Exact: return "exact";
        case BlurMode::Fast: return "fast";
        default: return "auto";
    }
}

BlurMode blur_mode_from_name(const std::string& s) {
    if (s == "exact") return BlurMode::Exact;
    if (s == "fast") return BlurMode::Fast;
    if (s == "auto") return BlurMode::Auto;
    throw ParseError("unknown blur mode: " + s);
}

template <typename T, typename F>
std::vector<T> parse_slug_list(const nlohmann::json& arr, const char* what, F from_slug) {
    if (!arr.is_array()) throw ParseError(std::string("config: ") + what + " must be an array");
    std::vector<T> out;
    for (const auto& e : arr) out.push_back(from_slug(e.get<std::string>()));
    return out;
}

template <typename T>
void dedupe_keep_order(std::vector<T>& v) {
    std::vector<T> out;
    for (const T& x : v)
        if (std::find(out.begin(), out.end(), x) == out.end()) out.push_back(x);
    v = std::move(out);
}

void validate_config(const RunConfig& c) {
    if (c.workers < 1) throw ValidationError("workers must be >= 1");
    if (c.cv_repetitions < 1) throw ValidationError("repetitions must be >= 1");
    if (c.cv_folds < 2) throw ValidationError("folds must be >= 2");
    if (c.channels.empty()) throw ValidationError("channel list is empty");
    if (c.classifiers.empty()) throw ValidationError("classifier list is empty");
    if (c.windows.empty()) throw ValidationError("window list is empty");
    if (!(c.fdr_q > 0.0 && c.fdr_q < 1.0)) throw ValidationError("fdr_q must be in (0, 1)");
    if (!(c.fixation_dispersion_px > 0.0)) throw ValidationError("dispersion_px must be > 0");
    if (c.fixation_duration_ms < 0) throw ValidationError("fixation_duration_ms must be >= 0");
    if (c.heatmap.cell_px < 1) throw ValidationError("heatmap cell_px must be >= 1");
    if (c.heatmap.kernel_cells < 1 || c.heatmap.kernel_cells % 2 == 0)
        throw ValidationError("heatmap kernel_cells must be odd and positive");
}

// --- fingerprints ------------------------------------------------------------

std::uint64_t mix(std::uint64_t h, std::string_view s) { return hash_combine(h, fnv1a64(s)); }

std::uint64_t mix(std::uint64_t h, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return mix(h, std::string_view(buf));
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) { return hash_combine(h, v); }

std::uint64_t mix_file(std::uint64_t h, const fs::path& p) {
    std::error_code ec;
    if (!fs::exists(p, ec)) return mix(h, "missing:" + p.string());
    return hash_combine(h, file_fingerprint(p));
}

std::uint64_t mix_channels(std::uint64_t h, const std::vector<ChannelKind>& ch) {
    for (ChannelKind k : ch) h = mix(h, channel_slug(k));
    return h;
}

bool wants(const RunConfig& c, ChannelKind k) {
    return std::find(c.channels.begin(), c.channels.end(), k) != c.channels.end();
}

std::uint64_t synth_fingerprint(const RunConfig& c, const DatasetManifest& m) {
    std::uint64_t h = fnv1a64("synth");
    h = mix_file(h, c.manifest_path);
    h = mix(h, blur_mode_name(c.blur_mode));
    h = mix(h, c.detector_confidence);
    for (ChannelKind k : {ChannelKind::Video, ChannelKind::ConstantBlur, ChannelKind::AdaptiveBlur,
                          ChannelKind::ObjectCrops, ChannelKind::ObjectRetained})
        if (wants(c, k)) h = mix(h, channel_slug(k));
    if (!m.sidecars.detections_dir.empty())
        for (const auto& v : m.videos)
            h = mix_file(h, m.sidecars.detections_dir / (v.id + ".json"));
    return h;
}

std::uint64_t gaze_fingerprint(const RunConfig& c, const DatasetManifest& m) {
    std::uint64_t h = fnv1a64("gaze");
    h = mix_file(h, c.manifest_path);
    for (const auto& g : m.gaze) h = mix_file(h, g.path);
    h = mix(h, c.fixation_dispersion_px);
    h = mix(h, double(c.fixation_duration_ms));
    h = mix(h, double(c.warm_threshold));
    h = mix(h, double(c.heatmap.cell_px));
    h = mix(h, double(c.heatmap.kernel_cells));
    h = mix(h, c.heatmap.kernel_sigma);
    h = mix(h, c.heatmap.fixations_only ? "fix" : "raw");
    h = mix(h, c.gaze_hist.transpose_spatial_patches ? "t" : "n");
    h = mix(h, blur_mode_name(c.blur_mode));
    for (ChannelKind k : {ChannelKind::EyeRoi, ChannelKind::EyeHist, ChannelKind::EyeRoiContextBlur})
        if (wants(c, k)) h = mix(h, channel_slug(k));
    return h;
}

std::uint64_t features_fingerprint(const RunConfig& c, const DatasetManifest& m) {
    std::uint64_t h = fnv1a64("features");
    h = mix(h, synth_fingerprint(c, m));
    h = mix(h, gaze_fingerprint(c, m));
    h = mix_channels(h, c.channels);
    if (!m.sidecars.features_dir.empty())
        for (const auto& v : m.videos)
            for (ChannelKind k : c.channels)
                h = mix_file(h, feature_table_path(m.sidecars.features_dir, k, v.id));
    return h;
}

std::uint64_t eval_fingerprint(const RunConfig& c, const DatasetManifest& m) {
    std::uint64_t h = fnv1a64("eval");
    h = mix(h, features_fingerprint(c, m));
    h = mix(h, c.seed);
    h = mix(h, double(c.cv_repetitions));
    h = mix(h, double(c.cv_folds));
    h = mix(h, c.majority_vote ? "mv" : "frame");
    h = mix(h, c.std_over_reps ? "reps" : "folds");
    for (ClassifierKind k : c.classifiers) h = mix(h, classifier_slug(k));
    for (Window w : c.windows) h = mix(h, window_name(w));
    for (double v : c.grid.C_values) h = mix(h, v);
    for (double v : c.grid.gamma_values) h = mix(h, v);
    return h;
}

void skip(StageResult& r, std::string msg) {
    r.skips.push_back(std::move(msg));
    r.exit_code = 2;
}

std::int64_t frame_ms(int index) { return std::llround(kFrameStepS * 1000.0 * index); }

}  // namespace

// --- config ------------------------------------------------------------------

RunConfig load_run_config(const std::optional<fs::path>& config_file, const RunConfig& flags) {
    RunConfig c = flags;
    if (config_file) {
        std::ifstream in(*config_file, std::ios::binary);
        if (!in) throw MissingDataError("config file not found: " + config_file->string());
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("config: " + std::string(e.what()));
        }
        if (!j.is_object()) throw ParseError("config: top level must be an object");
        try {
            for (const auto& [key, val] : j.items()) {
                if (key == "manifest") c.manifest_path = val.get<std::string>();
                else if (key == "out") c.out_dir = val.get<std::string>();
                else if (key == "channels")
                    c.channels = parse_slug_list<ChannelKind>(val, "channels", channel_from_slug);
                else if (key == "classifiers")
                    c.classifiers =
                        parse_slug_list<ClassifierKind>(val, "classifiers", classifier_from_slug);
                else if (key == "seed") c.seed = val.get<std::uint64_t>();
                else if (key == "workers") c.workers = val.get<int>();
                else if (key == "windows")
                    c.windows = parse_slug_list<Window>(val, "windows", window_from_name);
                else if (key == "repetitions") c.cv_repetitions = val.get<int>();
                else if (key == "folds") c.cv_folds = val.get<int>();
                else if (key == "majority_vote") c.majority_vote = val.get<bool>();
                else if (key == "std_over_reps") c.std_over_reps = val.get<bool>();
                else if (key == "dispersion_px") c.fixation_dispersion_px = val.get<double>();
                else if (key == "fixation_duration_ms")
                    c.fixation_duration_ms = val.get<std::int64_t>();
                else if (key == "warm_threshold") c.warm_threshold = val.get<double>();
                else if (key == "heatmap") {
                    for (const auto& [hk, hv] : val.items()) {
                        if (hk == "cell_px") c.heatmap.cell_px = hv.get<int>();
                        else if (hk == "kernel_cells") c.heatmap.kernel_cells = hv.get<int>();
                        else if (hk == "kernel_sigma") c.heatmap.kernel_sigma = hv.get<double>();
                        else if (hk == "fixations_only") c.heatmap.fixations_only = hv.get<bool>();
                        else throw ParseError("config: unknown heatmap key: " + hk);
                    }
                } else if (key == "transpose_spatial_patches")
                    c.gaze_hist.transpose_spatial_patches = val.get<bool>();
                else if (key == "C_values") c.grid.C_values = val.get<std::vector<double>>();
                else if (key == "gamma_values")
                    c.grid.gamma_values = val.get<std::vector<double>>();
                else if (key == "blur_mode")
                    c.blur_mode = blur_mode_from_name(val.get<std::string>());
                else if (key == "detector_confidence") c.detector_confidence = val.get<double>();
                else if (key == "fdr_q") c.fdr_q = val.get<double>();
                else throw ParseError("config: unknown key: " + key);
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("config: " + std::string(e.what()));
        }
    }
    dedupe_keep_order(c.channels);
    dedupe_keep_order(c.classifiers);
    dedupe_keep_order(c.windows);
    validate_config(c);
    if (c.manifest_path.empty()) throw ValidationError("no manifest given (flag or config)");
    return c;
}

std::string config_fingerprint(const RunConfig& c) {
    ordered_json j;
    j["manifest"] = c.manifest_path.string();
    j["out"] = c.out_dir.string();
    ordered_json ch = ordered_json::array();
    for (ChannelKind k : c.channels) ch.push_back(channel_slug(k));
    j["channels"] = ch;
    ordered_json cl = ordered_json::array();
    for (ClassifierKind k : c.classifiers) cl.push_back(classifier_slug(k));
    j["classifiers"] = cl;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    ordered_json wn = ordered_json::array();
    for (Window w : c.windows) wn.push_back(window_name(w));
    j["windows"] = wn;
    j["repetitions"] = c.cv_repetitions;
    j["folds"] = c.cv_folds;
    j["majority_vote"] = c.majority_vote;
    j["std_over_reps"] = c.std_over_reps;
    j["dispersion_px"] = c.fixation_dispersion_px;
    j["fixation_duration_ms"] = c.fixation_duration_ms;
    j["warm_threshold"] = c.warm_threshold;
    j["heatmap"] = {{"cell_px", c.heatmap.cell_px},
                    {"kernel_cells", c.heatmap.kernel_cells},
                    {"kernel_sigma", c.heatmap.kernel_sigma},
                    {"fixations_only", c.heatmap.fixations_only}};
    j["transpose_spatial_patches"] = c.gaze_hist.transpose_spatial_patches;
    j["C_values"] = c.grid.C_values;
    j["gamma_values"] = c.grid.gamma_values;
    j["blur_mode"] = blur_mode_name(c.blur_mode);
    j["detector_confidence"] = c.detector_confidence;
    j["fdr_q"] = c.fdr_q;
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
    return buf;
}

// --- synth -------------------------------------------------------------------

StageResult cmd_synth(const RunConfig& c) {
    StageResult res;
    DatasetManifest m = load_manifest(c.manifest_path);
    StageCache cache(c.cache_dir());
    const std::uint64_t fp = synth_fingerprint(c, m);
    if (cache.is_fresh("synth", fp)) {
        res.notes.push_back("synth: up to date, skipped");
        return res;
    }

    std::vector<ChannelKind> wanted;
    for (ChannelKind k : {ChannelKind::Video, ChannelKind::ConstantBlur, ChannelKind::AdaptiveBlur,
                          ChannelKind::ObjectCrops, ChannelKind::ObjectRetained})
        if (wants(c, k)) wanted.push_back(k);
    if (wanted.empty()) {
        res.notes.push_back("synth: no synthesized channel requested");
        cache.mark_done("synth", fp);
        return res;
    }

    const bool need_detector =
        wants(c, ChannelKind::AdaptiveBlur) || wants(c, ChannelKind::ObjectCrops) ||
        wants(c, ChannelKind::ObjectRetained);
    std::unique_ptr<FileBackedDetector> detector;
    if (need_detector) {
        if (m.sidecars.detections_dir.empty() || !fs::exists(m.sidecars.detections_dir)) {
            for (ChannelKind k :
                 {ChannelKind::AdaptiveBlur, ChannelKind::ObjectCrops, ChannelKind::ObjectRetained})
                if (wants(c, k))
                    skip(res, "synth: " + channel_slug(k) + ": detections sidecar dir missing");
            wanted.erase(std::remove_if(wanted.begin(), wanted.end(),
                                        [](ChannelKind k) {
                                            return k == ChannelKind::AdaptiveBlur ||
                                                   k == ChannelKind::ObjectCrops ||
                                                   k == ChannelKind::ObjectRetained;
                                        }),
                         wanted.end());
            if (wanted.empty()) return res;
        } else {
            detector = std::make_unique<FileBackedDetector>(m.sidecars.detections_dir,
                                                            c.detector_confidence);
        }
    }

    struct VideoOut {
        std::vector<std::string> skips, notes;
        std::map<int, int> iter_hist;
        int frames = 0;
    };
    std::vector<VideoOut> outs(m.videos.size());

    parallel_for(m.videos.size(), c.workers, [&](std::size_t vi) {
        const VideoRecord& v = m.videos[vi];
        VideoOut& o = outs[vi];
        std::map<ChannelKind, fs::path> dirs;
        for (ChannelKind k : wanted) {
            dirs[k] = c.channels_dir() / channel_slug(k) / v.id;
            fs::create_directories(dirs[k]);
        }
        const int n = frame_count_for_duration(v.duration_s);
        for (int i = 0; i < n; ++i) {
            FrameSample frame;
            try {
                frame = load_frame(v, i);
            } catch (const Error& e) {
                o.skips.push_back("synth: " + v.id + ": " + e.what());
                return;  // raw frames unusable; drop the whole video
            }
            ++o.frames;
            for (ChannelKind k : wanted) {
                const fs::path out_png = frame_path(dirs[k], i);
                try {
                    switch (k) {
                        case ChannelKind::Video:
                            save_image(out_png, frame.pixels);
                            break;
                        case ChannelKind::ConstantBlur:
                            save_image(out_png, constant_blur(frame, c.blur_mode).pixels);
                            break;
                        case ChannelKind::AdaptiveBlur: {
                            ChannelImage ci = adaptive_blur(frame, *detector,
                                                            kAdaptiveBlurMaxIter, c.blur_mode);
                            ++o.iter_hist[ci.meta.iterations];
                            save_image(out_png, ci.pixels);
                            break;
                        }
                        case ChannelKind::ObjectCrops: {
                            auto dets = detector->detect(v.id, i, 0);
                            std::vector<std::string> warn;
                            auto crops = object_crops(frame, dets, &warn);
                            for (std::size_t ci = 0; ci < crops.size(); ++ci) {
                                fs::path p = dirs[k] / (std::to_string(frame_ms(i)) + "_c" +
                                                        std::to_string(ci) + ".png");
                                save_image(p, crops[ci].pixels);
                            }
                            for (auto& w : warn)
                                o.notes.push_back("synth: " + v.id + "/" +
                                                  std::to_string(frame_ms(i)) + ": " + w);
                            break;
                        }
                        case ChannelKind::ObjectRetained: {
                            auto dets = detector->detect(v.id, i, 0);
                            save_image(out_png, object_retained(frame, dets).pixels);
                            break;
                        }
                        default: break;
                    }
                } catch (const ConvergenceError& e) {
                    o.skips.push_back("synth: " + channel_slug(k) + "/" + v.id + "/" +
                                      std::to_string(frame_ms(i)) + ": " + e.what());
                } catch (const MissingDataError& e) {
                    o.skips.push_back("synth: " + channel_slug(k) + "/" + v.id + ": " + e.what());
                    return;  // sidecar for this video is absent; further frames identical
                }
            }
        }
    });

    std::map<int, int> iter_hist;
    int frames = 0;
    for (auto& o : outs) {
        for (auto& s : o.skips) skip(res, s);
        res.notes.insert(res.notes.end(), o.notes.begin(), o.notes.end());
        for (auto& [it, cnt] : o.iter_hist) iter_hist[it] += cnt;
        frames += o.frames;
    }

    ordered_json summary;
    summary["videos"] = m.videos.size();
    summary["frames"] = frames;
    ordered_json hist = ordered_json::object();
    for (auto& [it, cnt] : iter_hist) hist[std::to_string(it)] = cnt;
    summary["adaptive_iterations"] = hist;
    summary["skips"] = res.skips;
    atomic_write_text(c.out_dir / "synth_summary.json", summary.dump(2) + "\n");

    if (res.exit_code == 0) cache.mark_done("synth", fp);
    return res;
}

// --- gaze --------------------------------------------------------------------

StageResult cmd_gaze(const RunConfig& c) {
    StageResult res;
    DatasetManifest m = load_manifest(c.manifest_path);
    StageCache cache(c.cache_dir());
    const std::uint64_t fp = gaze_fingerprint(c, m);
    if (cache.is_fresh("gaze", fp)) {
        res.notes.push_back("gaze: up to date, skipped");
        return res;
    }

    std::vector<std::string> roster = m.ratings.raters;
    if (roster.empty()) {
        std::set<std::string> distinct;
        for (const auto& g : m.gaze) distinct.insert(g.rater_id);
        roster.assign(distinct.begin(), distinct.end());
    }

    const bool want_roi = wants(c, ChannelKind::EyeRoi);
    const bool want_ctx = wants(c, ChannelKind::EyeRoiContextBlur);
    const bool want_hist = wants(c, ChannelKind::EyeHist);

    struct VideoOut {
        std::vector<std::string> skips, notes;
    };
    std::vector<VideoOut> outs(m.videos.size());

    parallel_for(m.videos.size(), c.workers, [&](std::size_t vi) {
        const VideoRecord& v = m.videos[vi];
        VideoOut& o = outs[vi];

        std::vector<GazeTrace> traces;
        std::map<std::string, RaterEvents> events;
        for (const auto& g : m.gaze) {
            if (g.video_id != v.id) continue;
            GazeLoadResult r;
            try {
                r = load_gaze_trace(g.path, g.rater_id, g.video_id);
            } catch (const Error& e) {
                o.skips.push_back("gaze: " + g.rater_id + "/" + v.id + ": " + e.what());
                continue;
            }
            if (r.malformed > 0)
                o.notes.push_back("gaze: " + g.rater_id + "/" + v.id + ": skipped " +
                                  std::to_string(r.malformed) + "/" +
                                  std::to_string(r.total_rows) + " malformed rows");
            RaterEvents ev;
            ev.fixations = detect_fixations(r.trace, c.fixation_duration_ms,
                                            c.fixation_dispersion_px);
            ev.saccades = derive_saccades(ev.fixations);
            save_fixations_csv(c.gaze_dir() / "fixations" / (v.id + "_" + g.rater_id + ".csv"),
                               g.rater_id, v.id, ev.fixations);
            save_saccades_csv(c.gaze_dir() / "saccades" / (v.id + "_" + g.rater_id + ".csv"),
                              g.rater_id, v.id, ev.saccades);
            events.emplace(g.rater_id, std::move(ev));
            traces.push_back(std::move(r.trace));
        }
        if (traces.empty()) {
            o.skips.push_back("gaze: " + v.id + ": no usable gaze traces");
            return;
        }

        if (want_hist) {
            std::vector<double> feat = gaze_histogram_features(events, roster, c.gaze_hist);
            FeatureTable t;
            t.video_id = v.id;
            t.channel = ChannelKind::EyeHist;
            t.dim = feat.size();
            t.frame_index = {-1};
            t.rows.push_back(std::vector<float>(feat.begin(), feat.end()));
            save_feature_table(t, feature_table_path(c.features_dir(), t.channel, v.id));
        }

        const fs::path heat_dir = c.gaze_dir() / "heatmaps" / v.id;
        fs::create_directories(heat_dir);
        fs::path roi_dir, ctx_dir;
        if (want_roi) {
            roi_dir = c.channels_dir() / channel_slug(ChannelKind::EyeRoi) / v.id;
            fs::create_directories(roi_dir);
        }
        if (want_ctx) {
            ctx_dir = c.channels_dir() / channel_slug(ChannelKind::EyeRoiContextBlur) / v.id;
            fs::create_directories(ctx_dir);
        }

        bool frames_ok = true;
        const int n = frame_count_for_duration(v.duration_s);
        for (int i = 0; i < n; ++i) {
            Heatmap heat = build_heatmap(traces, kFrameStepS * i, kScreenW, kScreenH, c.heatmap);
            PlaneF frame_heat =
                map_to_frame(heat, kScreenW, kScreenH, v.frame_width, v.frame_height);
            save_heatmap_png(frame_path(heat_dir, i), frame_heat);
            if ((want_roi || want_ctx) && frames_ok) {
                FrameSample frame;
                try {
                    frame = load_frame(v, i);
                } catch (const Error& e) {
                    o.skips.push_back("gaze: " + v.id + ": " + e.what());
                    frames_ok = false;  // keep writing heatmaps, drop roi outputs
                    continue;
                }
                if (want_roi)
                    save_image(frame_path(roi_dir, i),
                               eye_roi(frame, frame_heat, float(c.warm_threshold)).pixels);
                if (want_ctx)
                    save_image(frame_path(ctx_dir, i),
                               eye_roi_context_blur(frame, frame_heat, float(c.warm_threshold),
                                                    c.blur_mode)
                                   .pixels);
            }
        }
    });

    for (auto& o : outs) {
        for (auto& s : o.skips) skip(res, s);
        res.notes.insert(res.notes.end(), o.notes.begin(), o.notes.end());
    }
    if (res.exit_code == 0) cache.mark_done("gaze", fp);
    return res;
}

// --- features ----------------------------------------------------------------

namespace {

// Softmax sanity for ingested class-posterior tables.
void validate_fc8_table(const FeatureTable& t, int n_frames) {
    if (t.dim != kFc8Dim)
        throw ValidationError(t.video_id + ": fc8 dim " + std::to_string(t.dim));
    std::set<int> seen;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        double sum = 0.0;
        for (float x : t.rows[r]) {
            if (!(x >= 0.0f && x <= 1.0f))
                throw ValidationError(t.video_id + ": fc8 entry outside [0, 1]");
            sum += x;
        }
        if (std::abs(sum - 1.0) > 1e-3)
            throw ValidationError(t.video_id + ": fc8 row sums to " + std::to_string(sum));
        int fi = t.frame_index[r];
        if (fi < 0 || fi >= n_frames || !seen.insert(fi).second)
            throw IntegrityError(t.video_id + ": bad fc8 frame index " + std::to_string(fi));
    }
}

bool sidecar_has_any(const fs::path& dir, ChannelKind ch,
                     const std::vector<VideoRecord>& videos) {
    if (dir.empty()) return false;
    for (const auto& v : videos) {
        fs::path p = feature_table_path(dir, ch, v.id);
        if (fs::exists(p)) return true;
        p.replace_extension(".csv");
        if (fs::exists(p)) return true;
    }
    return false;
}

// Gist rows from the channel's rendered frames (or the raw frames for
// channels whose source is the video itself).
FeatureTable gist_table(const RunConfig& c, const VideoRecord& v, ChannelKind ch,
                        std::vector<std::string>& skips) {
    FeatureTable t;
    t.video_id = v.id;
    t.channel = ch;
    t.dim = kGistDim;
    const bool raw = ch == ChannelKind::Video || ch == ChannelKind::Gist;
    const fs::path dir = c.channels_dir() / channel_slug(ch) / v.id;
    if (!raw && !fs::exists(dir)) {
        skips.push_back("features: " + channel_slug(ch) + "/" + v.id +
                        ": channel frames missing (run synth/gaze first)");
        return t;
    }
    const int n = frame_count_for_duration(v.duration_s);
    for (int i = 0; i < n; ++i) {
        if (ch == ChannelKind::ObjectCrops) {
            for (int k = 0;; ++k) {
                fs::path p = dir / (std::to_string(frame_ms(i)) + "_c" + std::to_string(k) +
                                    ".png");
                if (!fs::exists(p)) break;
                std::vector<double> d = gist_descriptor(load_image(p));
                t.frame_index.push_back(i);
                t.rows.push_back(std::vector<float>(d.begin(), d.end()));
            }
            continue;
        }
        Image img;
        if (raw) {
            try {
                img = load_frame(v, i).pixels;
            } catch (const Error& e) {
                skips.push_back("features: " + channel_slug(ch) + "/" + v.id + ": " + e.what());
                t.rows.clear();
                t.frame_index.clear();
                return t;
            }
        } else {
            fs::path p = frame_path(dir, i);
            if (!fs::exists(p)) continue;  // frame skipped upstream (e.g. blur cap)
            img = load_image(p);
        }
        std::vector<double> d = gist_descriptor(img);
        t.frame_index.push_back(i);
        t.rows.push_back(std::vector<float>(d.begin(), d.end()));
    }
    return t;
}

}  // namespace

StageResult cmd_features(const RunConfig& c) {
    StageResult res;
    DatasetManifest m = load_manifest(c.manifest_path);
    StageCache cache(c.cache_dir());
    const std::uint64_t fp = features_fingerprint(c, m);
    if (cache.is_fresh("features", fp)) {
        res.notes.push_back("features: up to date, skipped");
        return res;
    }

    std::vector<fs::path> search = {c.features_dir()};
    if (!m.sidecars.features_dir.empty()) search.push_back(m.sidecars.features_dir);
    FeatureStore store(search);

    struct Job {
        ChannelKind channel;
        std::size_t video;
    };
    std::vector<Job> jobs;
    std::map<ChannelKind, bool> sidecar_backed;
    for (ChannelKind ch : c.channels) {
        sidecar_backed[ch] = sidecar_has_any(m.sidecars.features_dir, ch, m.videos);
        for (std::size_t vi = 0; vi < m.videos.size(); ++vi) jobs.push_back({ch, vi});
    }

    std::vector<std::vector<std::string>> job_skips(jobs.size()), job_notes(jobs.size());
    parallel_for(jobs.size(), c.workers, [&](std::size_t ji) {
        const ChannelKind ch = jobs[ji].channel;
        const VideoRecord& v = m.videos[jobs[ji].video];
        auto& skips = job_skips[ji];
        auto& notes = job_notes[ji];
        const std::string tag = channel_slug(ch) + "/" + v.id;

        std::optional<FeatureTable> existing;
        try {
            existing = store.try_load(ch, v.id);
        } catch (const Error& e) {
            skips.push_back("features: " + tag + ": " + e.what());
            return;
        }

        if (ch == ChannelKind::Fc8) {
            if (!existing) {
                skips.push_back("features: " + tag + ": no precomputed table");
                return;
            }
            try {
                validate_fc8_table(*existing, frame_count_for_duration(v.duration_s));
            } catch (const Error& e) {
                skips.push_back("features: " + tag + ": " + e.what());
                return;
            }
            if (int(existing->n_rows()) < frame_count_for_duration(v.duration_s))
                notes.push_back("features: " + tag + ": rows for " +
                                std::to_string(existing->n_rows()) + "/" +
                                std::to_string(frame_count_for_duration(v.duration_s)) +
                                " frames");
            return;
        }
        if (ch == ChannelKind::EyeHist) {
            if (!existing)
                skips.push_back("features: " + tag + ": produced by the gaze stage, not found");
            return;
        }
        if (existing) return;  // already computed or supplied
        if (sidecar_backed[ch]) {
            // Other videos of this channel came precomputed; do not mix sources.
            skips.push_back("features: " + tag + ": no precomputed table");
            return;
        }
        FeatureTable t = gist_table(c, v, ch, skips);
        if (t.rows.empty() && !skips.empty()) return;
        save_feature_table(t, feature_table_path(c.features_dir(), ch, v.id));
    });

    for (std::size_t i = 0; i < jobs.size(); ++i) {
        for (auto& s : job_skips[i]) skip(res, s);
        res.notes.insert(res.notes.end(), job_notes[i].begin(), job_notes[i].end());
    }
    if (res.exit_code == 0) cache.mark_done("features", fp);
    return res;
}

// --- eval --------------------------------------------------------------------

StageResult cmd_eval(const RunConfig& c) {
    StageResult res;
    DatasetManifest m = load_manifest(c.manifest_path);
    StageCache cache(c.cache_dir());
    const std::uint64_t fp = eval_fingerprint(c, m);
    if (cache.is_fresh("eval", fp)) {
        res.notes.push_back("eval: up to date, skipped");
        return res;
    }
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();

    std::vector<fs::path> search = {c.features_dir()};
    if (!m.sidecars.features_dir.empty()) search.push_back(m.sidecars.features_dir);
    FeatureStore store(search);

    DesignSet designs;
    std::vector<std::string> assembly_warnings;
    for (ChannelKind ch : c.channels)
        for (AffectDim dim : kDims)
            for (Window win : c.windows) {
                const std::string key = design_key(ch, dim, win);
                try {
                    designs[key] = assemble_design_matrix(m, store, ch, win, AffectTask{dim},
                                                          &assembly_warnings);
                } catch (const Error& e) {
                    skip(res, "eval: " + key + ": " + e.what());
                }
            }
    const auto t1 = clock::now();

    CvPlan plan;
    plan.repetitions = c.cv_repetitions;
    plan.folds = c.cv_folds;
    plan.seed = c.seed;
    plan.majority_vote = c.majority_vote;
    plan.std_over_reps = c.std_over_reps;
    EvalReport report = run_protocol(designs, c.channels, c.classifiers, plan,
                                     standard_learner_factory(c.grid), c.workers);
    report.warnings.insert(report.warnings.begin(), assembly_warnings.begin(),
                           assembly_warnings.end());
    const auto t2 = clock::now();

    emit_report(report, c.out_dir);
    for (const auto& [key, cell] : report.cells)
        if (!cell.available) skip(res, "eval: " + key + ": no scores (NA)");

    RunMeta meta;
    meta.seed = c.seed;
    meta.config_hash = config_fingerprint(c);
    auto secs = [](clock::duration d) {
        return std::chrono::duration_cast<std::chrono::duration<double>>(d).count();
    };
    meta.timings_s.emplace_back("assemble", secs(t1 - t0));
    meta.timings_s.emplace_back("protocol", secs(t2 - t1));
    write_run_meta(meta, c.out_dir / "run_meta.json");

    if (res.exit_code == 0) cache.mark_done("eval", fp);
    return res;
}

// --- stats -------------------------------------------------------------------

StageResult cmd_stats(const RunConfig& c) {
    StageResult res;
    DatasetManifest m = load_manifest(c.manifest_path);
    if (m.ratings.n_raters() == 0 || m.ratings.n_items() == 0)
        throw MissingDataError("stats: manifest has no ratings");
    StageCache cache(c.cache_dir());
    std::uint64_t fp = fnv1a64("stats");
    fp = mix_file(fp, c.manifest_path);
    fp = mix(fp, c.fdr_q);
    if (cache.is_fresh("stats", fp)) {
        res.notes.push_back("stats: up to date, skipped");
        return res;
    }
    write_agreement_report(m, c.out_dir / "agreement.json", c.fdr_q);
    cache.mark_done("stats", fp);
    return res;
}

// --- report ------------------------------------------------------------------

namespace {

std::string md_cell(const CellStat& s) {
    if (!s.available) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f ± %.4f", s.mean, s.stddev);
    std::string out = buf;
    if (s.best) out = "**" + out + "**";
    return out;
}

void agreement_section(std::ostringstream& md, const fs::path& path) {
    md << "## Rater agreement\n\n";
    if (!fs::exists(path)) {
        md << "Not computed (run the stats stage).\n";
        return;
    }
    std::ifstream in(path, std::ios::binary);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("agreement.json: " + std::string(e.what()));
    }
    md << "| statistic | valence | arousal |\n|---|---|---|\n";
    auto cell = [&](const nlohmann::json& node) -> std::string {
        if (node.is_number()) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.4f", node.get<double>());
            return buf;
        }
        if (node.is_object() && node.contains("error")) return "—";
        return "—";
    };
    const char* dims[2] = {"valence", "arousal"};
    md << "| Krippendorff α (ordinal) |";
    for (const char* d : dims) md << " " << cell(j.at("alpha").at(d)) << " |";
    md << "\n| Fleiss κ (rater-mean split) |";
    for (const char* d : dims) md << " " << cell(j.at("kappa").at("per_rater_mean").at(d)) << " |";
    md << "\n| Fleiss κ (grand-mean split) |";
    for (const char* d : dims) md << " " << cell(j.at("kappa").at("grand_mean").at(d)) << " |";
    md << "\n| Rank-sum p (expert High vs Low) |";
    for (const char* d : dims) {
        const auto& rs = j.at("ranksum").at(d);
        if (rs.contains("error")) md << " — |";
        else md << " " << cell(rs.at("p")) << " |";
    }
    md << "\n\n";
    if (j.contains("pearson")) {
        const auto& tests = j.at("pearson").at("tests");
        int sig = 0, tot = 0;
        for (const auto& t : tests)
            if (!t.contains("error")) {
                ++tot;
                if (t.at("significant").get<bool>()) ++sig;
            }
        md << sig << " of " << tot
           << " rater-vs-expert correlations significant after FDR control (q = "
           << j.at("pearson").at("q").get<double>() << ").\n";
    }
}

}  // namespace

StageResult cmd_report(const RunConfig& c) {
    StageResult res;
    const fs::path csv = c.out_dir / "results.csv";
    if (!fs::exists(csv))
        throw MissingDataError("report: " + csv.string() + " not found (run eval first)");
    StageCache cache(c.cache_dir());
    std::uint64_t fp = fnv1a64("report");
    fp = mix_file(fp, csv);
    fp = mix_file(fp, c.out_dir / "agreement.json");
    if (cache.is_fresh("report", fp)) {
        res.notes.push_back("report: up to date, skipped");
        return res;
    }

    EvalReport rep = parse_results_csv(csv);
    std::ostringstream md;
    md << "# Ad affect classification\n\n";
    for (AffectDim dim : kDims) {
        md << "## " << (dim == AffectDim::Valence ? "Valence" : "Arousal") << "\n\n";
        md << "| channel | classifier | full video | last 30 s | last 10 s |\n";
        md << "|---|---|---|---|---|\n";
        for (ChannelKind ch : rep.channels)
            for (ClassifierKind cl : rep.classifiers) {
                md << "| " << channel_slug(ch) << " | " << classifier_slug(cl) << " |";
                for (Window w : all_windows()) {
                    auto it = rep.cells.find(cell_key(ch, cl, dim, w));
                    md << " " << (it == rep.cells.end() ? "NA" : md_cell(it->second)) << " |";
                }
                md << "\n";
            }
        md << "\nF1 mean ± std over the repeated group-aware folds; bold marks the column "
              "best.\n\n";
    }
    agreement_section(md, c.out_dir / "agreement.json");
    atomic_write_text(c.out_dir / "report.md", md.str());
    cache.mark_done("report", fp);
    return res;
}

}  // namespace affchan
