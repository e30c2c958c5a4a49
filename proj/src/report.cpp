// Table emission: results.csv / results.json / run_meta.json.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "affchan/common.hpp"
#include "affchan/eval.hpp"

namespace affchan {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string csv_header() {
    std::string h = "channel,classifier";
    for (AffectDim dim : {AffectDim::Valence, AffectDim::Arousal})
        for (Window win : all_windows())
            for (const char* suffix : {"mean", "std", "best"})
                h += "," + affect_dim_name(dim) + "_" + window_name(win) + "_" + suffix;
    return h;
}

void atomic_write(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("report: cannot write " + tmp.string());
        out << content;
        if (!out) throw Error("report: write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace

void emit_report(const EvalReport& r, const std::filesystem::path& out_dir) {
    std::string csv = csv_header() + "\n";
    json jrows = json::array();
    for (ChannelKind ch : r.channels) {
        for (ClassifierKind cl : r.classifiers) {
            std::string line = channel_slug(ch) + "," + classifier_slug(cl);
            json jr;
            jr["channel"] = channel_slug(ch);
            jr["classifier"] = classifier_slug(cl);
            for (AffectDim dim : {AffectDim::Valence, AffectDim::Arousal}) {
                for (Window win : all_windows()) {
                    const CellStat& c = r.cells.at(cell_key(ch, cl, dim, win));
                    std::string base = affect_dim_name(dim) + "_" + window_name(win);
                    if (c.available) {
                        line += "," + fmt4(c.mean) + "," + fmt4(c.stddev) + "," +
                                (c.best ? "1" : "0");
                        jr[base + "_mean"] = c.mean;
                        jr[base + "_std"] = c.stddev;
                        jr[base + "_best"] = c.best;
                    } else {
                        line += ",NA,NA,NA";
                        jr[base + "_mean"] = "NA";
                        jr[base + "_std"] = "NA";
                        jr[base + "_best"] = "NA";
                    }
                }
            }
            csv += line + "\n";
            jrows.push_back(std::move(jr));
        }
    }
    atomic_write(out_dir / "results.csv", csv);
    json top;
    top["rows"] = std::move(jrows);
    top["warnings"] = r.warnings;
    atomic_write(out_dir / "results.json", top.dump(2) + "\n");
}

EvalReport parse_results_csv(const std::filesystem::path& csv) {
    std::ifstream in(csv);
    if (!in) throw MissingDataError("results csv missing: " + csv.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError("results csv empty: " + csv.string());
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line != csv_header())
        throw ParseError("results csv " + csv.string() + ": unexpected header");

    EvalReport r;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.size() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() != 2 + 2 * 3 * 3)
            throw ParseError("results csv " + csv.string() + ":" + std::to_string(lineno) +
                             ": expected " + std::to_string(2 + 18) + " fields");
        ChannelKind ch = channel_from_slug(cells[0]);
        ClassifierKind cl = classifier_from_slug(cells[1]);
        if (std::find(r.channels.begin(), r.channels.end(), ch) == r.channels.end())
            r.channels.push_back(ch);
        if (std::find(r.classifiers.begin(), r.classifiers.end(), cl) == r.classifiers.end())
            r.classifiers.push_back(cl);

        std::size_t idx = 2;
        for (AffectDim dim : {AffectDim::Valence, AffectDim::Arousal}) {
            for (Window win : all_windows()) {
                const std::string& ms = cells[idx++];
                const std::string& ss = cells[idx++];
                const std::string& bs = cells[idx++];
                CellStat c;
                if (ms == "NA") {
                    if (ss != "NA" || bs != "NA")
                        throw ParseError("results csv " + csv.string() + ":" +
                                         std::to_string(lineno) + ": partial NA cell");
                } else {
                    c.available = true;
                    try {
                        c.mean = std::stod(ms);
                        c.stddev = std::stod(ss);
                    } catch (const std::exception&) {
                        throw ParseError("results csv " + csv.string() + ":" +
                                         std::to_string(lineno) + ": bad number");
                    }
                    if (bs == "1") c.best = true;
                    else if (bs != "0")
                        throw ParseError("results csv " + csv.string() + ":" +
                                         std::to_string(lineno) + ": bad best flag '" + bs + "'");
                }
                r.cells[cell_key(ch, cl, dim, win)] = c;
            }
        }
    }
    return r;
}

void write_run_meta(const RunMeta& m, const std::filesystem::path& path) {
    json j;
    j["seed"] = m.seed;
    j["config_hash"] = m.config_hash;
    json t = json::object();
    for (const auto& [stage, secs] : m.timings_s) t[stage] = secs;
    j["timings_s"] = std::move(t);
    atomic_write(path, j.dump(2) + "\n");
}

}  // namespace affchan
