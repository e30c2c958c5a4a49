#include "affchan/gaze.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "affchan/common.hpp"

namespace affchan {

GazeLoadResult load_gaze_trace(const std::filesystem::path& path, const std::string& rater_id,
                               const std::string& video_id) {
    std::ifstream f(path);
    if (!f) throw MissingDataError("gaze trace missing: " + path.string());
    GazeLoadResult out;
    out.trace.rater_id = rater_id;
    out.trace.video_id = video_id;

    std::string line;
    if (!std::getline(f, line)) throw ParseError("gaze trace empty: " + path.string());
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line != "t_ms,x_px,y_px")
        throw ParseError("gaze trace " + path.string() + ": bad header \"" + line + "\"");

    std::int64_t prev_t = std::numeric_limits<std::int64_t>::min();
    while (std::getline(f, line)) {
        if (line.size() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++out.total_rows;
        GazeSample s;
        char trailing;
        if (std::sscanf(line.c_str(), "%ld,%lf,%lf%c", &s.t_ms, &s.x, &s.y, &trailing) != 3 ||
            s.t_ms <= prev_t) {
            ++out.malformed;
            continue;
        }
        prev_t = s.t_ms;
        // validity filter: off-screen / lost-tracking samples are dropped
        if (!(s.x >= 0.0 && s.x < kScreenW && s.y >= 0.0 && s.y < kScreenH)) {
            ++out.off_screen;
            continue;
        }
        out.trace.samples.push_back(s);
    }
    if (out.total_rows > 0 && double(out.malformed) > 0.10 * double(out.total_rows))
        throw ParseError("gaze trace " + path.string() + ": " + std::to_string(out.malformed) +
                         " of " + std::to_string(out.total_rows) + " rows malformed (>10%)");
    return out;
}

std::vector<Fixation> detect_fixations(const GazeTrace& trace,
                                       std::int64_t duration_threshold_ms, double dispersion_px,
                                       std::int64_t max_gap_ms) {
    std::vector<Fixation> out;
    const auto& s = trace.samples;
    if (s.size() < 2) return out;

    std::size_t begin = 0;
    double sum_x = s[0].x, sum_y = s[0].y;
    std::size_t count = 1;

    auto close = [&](std::size_t end) {  // cluster = samples [begin, end)
        std::int64_t dur = s[end - 1].t_ms - s[begin].t_ms;
        if (dur >= duration_threshold_ms) {
            Fixation fx;
            fx.start_ms = s[begin].t_ms;
            fx.end_ms = s[end - 1].t_ms;
            fx.x = sum_x / double(count);
            fx.y = sum_y / double(count);
            out.push_back(fx);
        }
    };

    for (std::size_t i = 1; i < s.size(); ++i) {
        double cx = sum_x / double(count), cy = sum_y / double(count);
        double d = std::hypot(s[i].x - cx, s[i].y - cy);
        bool gap = s[i].t_ms - s[i - 1].t_ms > max_gap_ms;
        if (d <= dispersion_px && !gap) {
            sum_x += s[i].x;
            sum_y += s[i].y;
            ++count;
        } else {
            close(i);
            begin = i;
            sum_x = s[i].x;
            sum_y = s[i].y;
            count = 1;
        }
    }
    close(s.size());
    return out;
}

std::vector<Saccade> derive_saccades(const std::vector<Fixation>& fixations) {
    std::vector<Saccade> out;
    for (std::size_t i = 1; i < fixations.size(); ++i) {
        const Fixation& a = fixations[i - 1];
        const Fixation& b = fixations[i];
        Saccade sc;
        sc.from_x = a.x;
        sc.from_y = a.y;
        sc.to_x = b.x;
        sc.to_y = b.y;
        double dx = b.x - a.x, dy = b.y - a.y;
        sc.length = std::hypot(dx, dy);
        sc.duration_ms = b.start_ms - a.end_ms;
        sc.velocity = sc.length / double(std::max<std::int64_t>(sc.duration_ms, 1));
        if (dx == 0.0)
            sc.slope = dy > 0.0 ? 10.0 : (dy < 0.0 ? -10.0 : 0.0);
        else
            sc.slope = std::clamp(dy / dx, -10.0, 10.0);
        double deg = std::atan2(dy, dx) * 180.0 / M_PI;
        if (deg < 0.0) deg += 360.0;
        if (deg >= 360.0) deg = 0.0;
        sc.orientation_deg = deg;
        out.push_back(sc);
    }
    return out;
}

std::vector<double> minmax_histogram(const std::vector<double>& values, int bins) {
    std::vector<double> hist(bins, 0.0);
    if (values.empty()) return hist;
    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : values) {
        int b = 0;
        if (hi > lo) b = std::clamp(int((v - lo) / (hi - lo) * bins), 0, bins - 1);
        hist[b] += 1.0;
    }
    return hist;
}

namespace {

struct SpatialGrid {
    int patch_w, patch_h, nx, ny;
};

SpatialGrid spatial_grid(const GazeHistConfig& cfg) {
    SpatialGrid g;
    g.patch_w = cfg.transpose_spatial_patches ? 40 : 20;
    g.patch_h = cfg.transpose_spatial_patches ? 20 : 40;
    g.nx = (kScreenW + g.patch_w - 1) / g.patch_w;
    g.ny = (kScreenH + g.patch_h - 1) / g.patch_h;
    return g;
}

}  // namespace

std::size_t gaze_hist_block_dim(const GazeHistConfig& cfg) {
    SpatialGrid g = spatial_grid(cfg);
    return 50 + 30 + 60 + 50 + 36 + 60 + std::size_t(g.nx) * g.ny;
}

std::vector<double> rater_histogram_block(const RaterEvents& ev, const GazeHistConfig& cfg) {
    std::vector<double> block;
    block.reserve(gaze_hist_block_dim(cfg));

    auto collect = [&](auto getter) {
        std::vector<double> vals;
        vals.reserve(ev.saccades.size());
        for (const auto& s : ev.saccades) vals.push_back(getter(s));
        return vals;
    };
    auto append = [&](const std::vector<double>& h) {
        block.insert(block.end(), h.begin(), h.end());
    };

    append(minmax_histogram(collect([](const Saccade& s) { return s.length; }), 50));
    append(minmax_histogram(collect([](const Saccade& s) { return s.slope; }), 30));
    append(minmax_histogram(collect([](const Saccade& s) { return double(s.duration_ms); }), 60));
    append(minmax_histogram(collect([](const Saccade& s) { return s.velocity; }), 50));

    // fixed 10-degree bins, not min-max
    std::vector<double> orient(36, 0.0);
    for (const auto& s : ev.saccades)
        orient[std::clamp(int(s.orientation_deg / 10.0), 0, 35)] += 1.0;
    append(orient);

    std::vector<double> fix_dur;
    fix_dur.reserve(ev.fixations.size());
    for (const auto& f : ev.fixations) fix_dur.push_back(double(f.duration_ms()));
    append(minmax_histogram(fix_dur, 60));

    SpatialGrid g = spatial_grid(cfg);
    std::vector<double> spatial(std::size_t(g.nx) * g.ny, 0.0);
    for (const auto& f : ev.fixations) {
        int gx = std::clamp(int(f.x / g.patch_w), 0, g.nx - 1);
        int gy = std::clamp(int(f.y / g.patch_h), 0, g.ny - 1);
        spatial[std::size_t(gy) * g.nx + gx] += 1.0;
    }
    append(spatial);
    return block;
}

std::vector<double> gaze_histogram_features(const std::map<std::string, RaterEvents>& by_rater,
                                            const std::vector<std::string>& roster,
                                            const GazeHistConfig& cfg) {
    std::size_t block_dim = gaze_hist_block_dim(cfg);
    std::vector<double> out;
    out.reserve(roster.size() * block_dim);
    for (const auto& rater : roster) {
        auto it = by_rater.find(rater);
        if (it == by_rater.end()) {
            out.insert(out.end(), block_dim, 0.0);
        } else {
            std::vector<double> block = rater_histogram_block(it->second, cfg);
            out.insert(out.end(), block.begin(), block.end());
        }
    }
    return out;
}

void save_fixations_csv(const std::filesystem::path& path, const std::string& rater,
                        const std::string& video, const std::vector<Fixation>& fixations) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path.string());
    f << "rater,video,start_ms,end_ms,x,y\n";
    char buf[64];
    for (const auto& fx : fixations) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f", fx.x, fx.y);
        f << rater << ',' << video << ',' << fx.start_ms << ',' << fx.end_ms << ',' << buf
          << '\n';
    }
}

void save_saccades_csv(const std::filesystem::path& path, const std::string& rater,
                       const std::string& video, const std::vector<Saccade>& saccades) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path.string());
    f << "rater,video,from_x,from_y,to_x,to_y,length,duration_ms,velocity,slope,"
         "orientation_deg\n";
    char buf[160];
    for (const auto& s : saccades) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f,%.2f,%.2f,%.3f,%ld,%.4f,%.3f,%.2f", s.from_x,
                      s.from_y, s.to_x, s.to_y, s.length, long(s.duration_ms), s.velocity,
                      s.slope, s.orientation_deg);
        f << rater << ',' << video << ',' << buf << '\n';
    }
}

}  // namespace affchan
