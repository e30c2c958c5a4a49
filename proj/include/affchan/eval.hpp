#pragma once

// Repeated group-aware cross-validation, F1 scoring, and the report table.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "affchan/features.hpp"
#include "affchan/learners.hpp"
#include "affchan/types.hpp"

namespace affchan {

inline constexpr int kCvRepeats = 10;
inline constexpr int kCvFolds = 5;

// Harmonic mean of precision and recall over the +1 class; 0 when both
// degenerate.
double f1_score(const std::vector<int>& y_true, const std::vector<int>& y_pred);

// Distinct groups in first-appearance order are shuffled by the seeded RNG
// and dealt round-robin, so fold sizes differ by at most one group. Returns a
// fold id in [0, k) per row.
std::vector<int> assign_group_folds(const std::vector<std::string>& groups, int k,
                                    std::uint64_t seed);

struct CvPlan {
    int repetitions = kCvRepeats;
    int folds = kCvFolds;
    std::uint64_t seed = 0;
    bool majority_vote = false;  // score per-video majority instead of frames
    bool std_over_reps = false;  // sigma over repetition means, not fold scores
};

// Thin trainable interface so the harness can run mocks alongside the real
// classifiers. Rows of X align with y and groups.
class Learner {
  public:
    virtual ~Learner() = default;
    virtual void fit(const Matrix& X, const std::vector<int>& y,
                     const std::vector<std::string>& groups, std::uint64_t seed) = 0;
    virtual int predict(const std::vector<double>& x) const = 0;
};

using LearnerFactory = std::function<std::unique_ptr<Learner>(ClassifierKind)>;

// Standardize, inner-select hyperparameters where the classifier has any,
// train. The factory form keyed by kind serves run_protocol.
std::unique_ptr<Learner> make_standard_learner(ClassifierKind kind, const HyperGrid& grid);
LearnerFactory standard_learner_factory(const HyperGrid& grid = default_hyper_grid());

struct CellStat {
    bool available = false;
    double mean = 0.0;
    double stddev = 0.0;
    bool best = false;               // column max among available cells
    std::vector<double> scores;      // fold scores, repetition-major
};

std::string design_key(ChannelKind channel, AffectDim dim, Window window);
std::string cell_key(ChannelKind channel, ClassifierKind classifier, AffectDim dim,
                     Window window);

// Design matrices keyed by design_key; absent keys become unavailable cells.
using DesignSet = std::map<std::string, DesignMatrix>;

struct EvalReport {
    std::vector<ChannelKind> channels;        // row order
    std::vector<ClassifierKind> classifiers;  // row order within a channel
    std::map<std::string, CellStat> cells;    // keyed by cell_key
    std::vector<std::string> warnings;
};

// The protocol: per repetition, shuffle groups and deal them into folds; per
// fold, fit on the complement and score F1 on the held-out rows; repetitions
// x folds scores per cell. Identical inputs and seed reproduce the report
// bit-for-bit. Cells whose design is missing or has fewer groups than folds
// are marked unavailable and the run continues.
EvalReport run_protocol(const DesignSet& designs, const std::vector<ChannelKind>& channels,
                        const std::vector<ClassifierKind>& classifiers, const CvPlan& plan,
                        const LearnerFactory& factory = standard_learner_factory(),
                        int workers = 1);

// results.csv + results.json: one row per (channel, classifier), columns
// <dim>_<window>_{mean,std,best}, "NA" for unavailable cells, fixed 4-decimal
// formatting. Emission is deterministic byte-for-byte.
void emit_report(const EvalReport& r, const std::filesystem::path& out_dir);

// Parses a results.csv produced by emit_report; re-emitting the result writes
// identical bytes (scores themselves are not stored in the CSV).
EvalReport parse_results_csv(const std::filesystem::path& csv);

struct RunMeta {
    std::uint64_t seed = 0;
    std::string config_hash;                  // hex fingerprint of the config
    std::vector<std::pair<std::string, double>> timings_s;
};

void write_run_meta(const RunMeta& m, const std::filesystem::path& path);

}  // namespace affchan
