// Inner cross-validated hyperparameter search shared by both SVM variants.

#include <algorithm>
#include <cmath>
#include <vector>

#include "affchan/common.hpp"
#include "affchan/eval.hpp"
#include "affchan/learners.hpp"
#include "affchan/rng.hpp"

namespace affchan {

HyperGrid default_hyper_grid() {
    HyperGrid g;
    for (int e = -3; e <= 3; ++e) {
        g.C_values.push_back(std::pow(10.0, e));
        g.gamma_values.push_back(std::pow(10.0, e));
    }
    return g;
}

namespace {

struct GridPoint {
    double C = 0.0;
    double gamma = 0.0;
};

std::vector<GridPoint> grid_points(ClassifierKind kind, const HyperGrid& grid) {
    std::vector<double> Cs = grid.C_values;
    std::vector<double> gammas = grid.gamma_values;
    std::sort(Cs.begin(), Cs.end());
    std::sort(gammas.begin(), gammas.end());
    std::vector<GridPoint> pts;
    switch (kind) {
        case ClassifierKind::Lda:
            pts.push_back({});  // no hyperparameters; one pass for the score
            break;
        case ClassifierKind::LinearSvm:
            for (double C : Cs) pts.push_back({C, 0.0});
            break;
        case ClassifierKind::RbfSvm:
            for (double C : Cs)
                for (double g : gammas) pts.push_back({C, g});
            break;
    }
    return pts;
}

// Grid value nearest 1.0 in log space; ties toward the smaller value.
double mid_value(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double best = v.front();
    double score = std::abs(std::log10(best));
    for (double x : v) {
        double s = std::abs(std::log10(x));
        if (s < score) {
            best = x;
            score = s;
        }
    }
    return best;
}

}  // namespace

HyperChoice inner_cv_select(const Matrix& X, const std::vector<int>& y,
                            const std::vector<std::string>& groups, ClassifierKind kind,
                            const HyperGrid& grid, int k, std::uint64_t seed,
                            std::vector<std::string>* warnings) {
    if (X.size() != y.size() || X.size() != groups.size())
        throw ContractError("inner_cv_select: shape mismatch");
    if (X.empty()) throw EmptyDesignError("inner_cv_select: empty design");
    if (kind != ClassifierKind::Lda && grid.C_values.empty())
        throw ValidationError("inner_cv_select: empty hyperparameter grid");
    if (k < 1) throw ValidationError("inner_cv_select: k must be positive");

    std::vector<std::string> distinct;
    for (const auto& g : groups)
        if (std::find(distinct.begin(), distinct.end(), g) == distinct.end())
            distinct.push_back(g);
    int k_eff = std::min<int>(k, int(distinct.size()));
    if (k_eff < k && warnings)
        warnings->push_back("inner cv: only " + std::to_string(distinct.size()) +
                            " groups, k reduced to " + std::to_string(k_eff));

    if (k_eff < 2) {
        if (warnings)
            warnings->push_back("inner cv: fewer than 2 groups, defaulting hyperparameters");
        HyperChoice c;
        if (kind != ClassifierKind::Lda) c.C = mid_value(grid.C_values);
        if (kind == ClassifierKind::RbfSvm)
            c.gamma = mid_value(grid.gamma_values.empty() ? grid.C_values : grid.gamma_values);
        return c;
    }

    std::vector<int> fold = assign_group_folds(groups, k_eff, seed);
    auto pts = grid_points(kind, grid);

    HyperChoice best;
    bool have = false;
    for (std::size_t pi = 0; pi < pts.size(); ++pi) {
        const GridPoint& pt = pts[pi];
        double total = 0.0;
        for (int f = 0; f < k_eff; ++f) {
            Matrix Xtr, Xva;
            std::vector<int> ytr, yva;
            for (std::size_t i = 0; i < X.size(); ++i) {
                if (fold[i] == f) {
                    Xva.push_back(X[i]);
                    yva.push_back(y[i]);
                } else {
                    Xtr.push_back(X[i]);
                    ytr.push_back(y[i]);
                }
            }
            Standardizer sc;
            sc.fit(Xtr);
            Matrix Xtr_s = sc.transform(Xtr);
            std::vector<int> pred;
            pred.reserve(Xva.size());
            try {
                if (kind == ClassifierKind::Lda) {
                    LdaModel m = train_lda(Xtr_s, ytr);
                    for (const auto& row : Xva) pred.push_back(m.predict(sc.transform(row)));
                } else {
                    SvmKernel kern;
                    kern.kind = kind == ClassifierKind::RbfSvm ? KernelKind::Rbf
                                                               : KernelKind::Linear;
                    kern.gamma = pt.gamma;
                    SvmTrainResult r =
                        train_svm(Xtr_s, ytr, kern, pt.C, 1e-3, 200,
                                  hash_combine(hash_combine(seed, pi), std::uint64_t(f)));
                    for (const auto& row : Xva)
                        pred.push_back(r.model.predict(sc.transform(row)));
                }
                total += f1_score(yva, pred);
            } catch (const DegenerateInputError&) {
                // single-class inner-train fold scores zero for this point
            }
        }
        double mean = total / double(k_eff);
        if (!have || mean > best.mean_f1) {
            best.C = pt.C;
            best.gamma = pt.gamma;
            best.mean_f1 = mean;
            have = true;
        }
    }
    return best;
}

}  // namespace affchan
