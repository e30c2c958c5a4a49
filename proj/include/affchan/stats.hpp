#pragma once

// Annotation-analysis suite: agreement coefficients, thresholded labels,
// correlation with FDR control, and rank-sum tests.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "affchan/types.hpp"

namespace affchan {

// Rows are raters, columns are items; nullopt marks a missing rating.
using RatingGrid = std::vector<std::vector<std::optional<int>>>;

enum class AgreementMetric { Ordinal, Nominal };

// 1 - D_observed/D_expected through the coincidence-matrix formulation.
// Missing cells are tolerated; items rated by fewer than two raters drop out.
// All-identical ratings leave D_expected = 0 and raise DegenerateInputError.
double krippendorff_alpha(const RatingGrid& grid,
                          AgreementMetric metric = AgreementMetric::Ordinal);

// Fleiss kappa over a complete grid (categories are whatever values appear).
// Every rater in one category across the board makes chance agreement 1 and
// raises DegenerateInputError.
double fleiss_kappa(const std::vector<std::vector<int>>& grid);

enum class ThresholdScheme { PerRaterMean, GrandMean };

// Binarize: 1 iff score > threshold (strict). PerRaterMean thresholds each
// rater by their own mean and requires a complete grid; GrandMean uses the
// all-ratings mean and keeps missing cells missing.
RatingGrid threshold_labels(const RatingGrid& grid, ThresholdScheme scheme);

// nullopt unless every cell is present.
std::optional<std::vector<std::vector<int>>> dense_grid(const RatingGrid& grid);

struct CorrelationTest {
    double r = 0.0;
    double p = 1.0;
    bool significant = false;  // filled by the BH pass
};

// Product-moment r with a two-sided t-test on n-2 degrees of freedom.
// Requires n >= 3; zero variance in either input raises DegenerateInputError.
CorrelationTest pearson_test(const std::vector<double>& x, const std::vector<double>& y);

// Benjamini-Hochberg step-up: find the largest k with p_(k) <= k*q/m and
// reject the k smallest p-values.
std::vector<bool> benjamini_hochberg(const std::vector<double>& p_values, double q = 0.05);

struct RankSumResult {
    double rank_sum = 0.0;  // sum of (mid)ranks of the first sample
    double U = 0.0;         // rank_sum - n_a(n_a+1)/2
    double p = 1.0;         // two-sided; exact when pooled n <= 12
    double p_normal = 1.0;  // tie-corrected normal approximation, always set
    bool exact = false;
};

RankSumResult wilcoxon_ranksum(const std::vector<double>& a, const std::vector<double>& b);

// agreement.json: alpha per dimension, kappa per thresholding scheme (omitted
// with a reason when the grid is incomplete), per-rater valence-arousal
// correlations under BH control, and High-vs-Low rank-sum comparisons of
// per-item mean ratings against the expert labels.
void write_agreement_report(const DatasetManifest& manifest, const std::filesystem::path& path,
                            double q = 0.05);

}  // namespace affchan
