// Command-line front end: one subcommand per pipeline stage.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "affchan/common.hpp"
#include "affchan/pipeline.hpp"

namespace {

using affchan::RunConfig;
using affchan::StageResult;

StageResult dispatch(const std::string& name, const RunConfig& c) {
    if (name == "synth") return affchan::cmd_synth(c);
    if (name == "gaze") return affchan::cmd_gaze(c);
    if (name == "features") return affchan::cmd_features(c);
    if (name == "eval") return affchan::cmd_eval(c);
    if (name == "stats") return affchan::cmd_stats(c);
    return affchan::cmd_report(c);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ad affect via visual and gaze channels"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string manifest;
    std::string out = "out";
    std::string config;
    std::vector<std::string> channels, classifiers, windows;
    std::uint64_t seed = 17;
    int workers = 1;

    app.add_option("--manifest", manifest, "Dataset manifest (JSON)");
    app.add_option("--out", out, "Output directory")->capture_default_str();
    app.add_option("--channels", channels, "Channels to process (comma-separated slugs)")
        ->delimiter(',');
    app.add_option("--classifiers", classifiers, "Classifiers to evaluate (comma-separated)")
        ->delimiter(',');
    app.add_option("--seed", seed, "Base seed for every stochastic step")->capture_default_str();
    app.add_option("--workers", workers, "Worker threads")->capture_default_str();
    app.add_option("--window", windows, "Evaluation windows: all,l30,l10")->delimiter(',');
    app.add_option("--config", config, "JSON config file; its settings override flags");

    app.add_subcommand("synth", "Render the synthesized visual channels");
    app.add_subcommand("gaze", "Fixations, saccades, heatmaps and gaze-derived channels");
    app.add_subcommand("features", "Build or ingest per-channel feature tables");
    app.add_subcommand("eval", "Repeated group-aware cross-validation over all cells");
    app.add_subcommand("stats", "Annotator agreement and correlation statistics");
    app.add_subcommand("report", "Render results.csv (+ agreement) as markdown");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        RunConfig flags;
        flags.manifest_path = manifest;
        flags.out_dir = out;
        flags.seed = seed;
        flags.workers = workers;
        if (!channels.empty()) {
            flags.channels.clear();
            for (const auto& s : channels) flags.channels.push_back(affchan::channel_from_slug(s));
        }
        if (!classifiers.empty()) {
            flags.classifiers.clear();
            for (const auto& s : classifiers)
                flags.classifiers.push_back(affchan::classifier_from_slug(s));
        }
        if (!windows.empty()) {
            flags.windows.clear();
            for (const auto& s : windows) flags.windows.push_back(affchan::window_from_name(s));
        }
        std::optional<std::filesystem::path> cfg;
        if (!config.empty()) cfg = config;
        const RunConfig c = affchan::load_run_config(cfg, flags);

        const std::string sub = app.get_subcommands().front()->get_name();
        const StageResult r = dispatch(sub, c);
        for (const auto& n : r.notes) std::cout << n << "\n";
        for (const auto& s : r.skips) std::cerr << "skip: " << s << "\n";
        if (r.exit_code == 0) std::cout << sub << ": ok\n";
        else std::cerr << sub << ": completed with " << r.skips.size() << " skip(s)\n";
        return r.exit_code;
    } catch (const affchan::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
