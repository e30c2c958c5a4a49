#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace affchan {

using Matrix = std::vector<std::vector<double>>;  // row-major samples

enum class ClassifierKind { Lda, LinearSvm, RbfSvm };

const std::string& classifier_slug(ClassifierKind k);
ClassifierKind classifier_from_slug(const std::string& slug);
const std::vector<ClassifierKind>& all_classifiers();

// Per-dimension z-scoring; constant dimensions keep scale 1 so they map to 0.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> inv_std;

    void fit(const Matrix& X);
    std::vector<double> transform(const std::vector<double>& x) const;
    Matrix transform(const Matrix& X) const;
};

struct LdaModel {
    std::vector<double> w;
    double b = 0.0;
    double log_prior_ratio = 0.0;  // ln(n+/n-), already folded into b

    double decision(const std::vector<double>& x) const;
    int predict(const std::vector<double>& x) const;  // +1 / -1
};

// Fisher discriminant on the shrinkage-regularized pooled covariance:
// w = (S + shrinkage*(tr(S)/d)*I)^-1 (mu+ - mu-); the boundary sits midway
// between the class means, shifted by the log prior ratio.
LdaModel train_lda(const Matrix& X, const std::vector<int>& y, double shrinkage = 1e-6);

enum class KernelKind { Linear, Rbf };

struct SvmKernel {
    KernelKind kind = KernelKind::Linear;
    double gamma = 1.0;  // Rbf only
};

double kernel_eval(const SvmKernel& k, const std::vector<double>& a,
                   const std::vector<double>& b);

struct SvmModel {
    SvmKernel kernel;
    double C = 1.0;
    Matrix sv;                    // support vectors (alpha > 0)
    std::vector<double> alpha;    // in (0, C]
    std::vector<int> sv_y;        // +1 / -1
    double b = 0.0;
    bool converged = true;

    double decision(const std::vector<double>& x) const;
    int predict(const std::vector<double>& x) const;
};

struct SvmTrainResult {
    SvmModel model;
    std::vector<double> alpha;  // one per training row
    bool converged = true;
    int sweeps = 0;
};

// Soft-margin dual via SMO-style pairwise updates; the partner index is
// chosen by the max-|E_i - E_j| heuristic with seeded random fallbacks.
// Convergence = a full sweep without updates; hitting max_passes returns the
// best iterate with converged = false.
SvmTrainResult train_svm(const Matrix& X, const std::vector<int>& y, const SvmKernel& kernel,
                         double C, double tol = 1e-3, int max_passes = 200,
                         std::uint64_t seed = 1);

// Diagnostics for tests: largest KKT violation over the training set, and the
// dual objective value of a given alpha vector.
double svm_max_kkt_violation(const SvmModel& m, const Matrix& X, const std::vector<int>& y,
                             const std::vector<double>& alpha);
double svm_dual_objective(const SvmKernel& kernel, const Matrix& X, const std::vector<int>& y,
                          const std::vector<double>& alpha);

struct HyperGrid {
    std::vector<double> C_values;
    std::vector<double> gamma_values;  // ignored for linear kernels
};

HyperGrid default_hyper_grid();  // 7 log-spaced points, 1e-3 .. 1e3

struct HyperChoice {
    double C = 1.0;
    double gamma = 1.0;
    double mean_f1 = 0.0;
};

// Group-aware inner k-fold selection maximizing mean F1; ties prefer smaller
// C then smaller gamma. Fewer groups than k reduces k (warning recorded).
// Standardization is fit on each inner-train portion, mirroring the outer
// harness.
HyperChoice inner_cv_select(const Matrix& X, const std::vector<int>& y,
                            const std::vector<std::string>& groups, ClassifierKind kind,
                            const HyperGrid& grid, int k = 5, std::uint64_t seed = 1,
                            std::vector<std::string>* warnings = nullptr);

// Model persistence (JSON; doubles round-trip exactly).
void save_lda_model(const LdaModel& m, const std::filesystem::path& path);
LdaModel load_lda_model(const std::filesystem::path& path);
void save_svm_model(const SvmModel& m, const std::filesystem::path& path);
SvmModel load_svm_model(const std::filesystem::path& path);

}  // namespace affchan
