#include "affchan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "affchan/cache.hpp"
#include "affchan/common.hpp"
#include "affchan/parallel.hpp"
#include "affchan/rng.hpp"

namespace affchan {

double f1_score(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.size() != y_pred.size()) throw ContractError("f1_score: length mismatch");
    if (y_true.empty()) throw ContractError("f1_score: empty inputs");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        bool t = y_true[i] == 1, p = y_pred[i] == 1;
        if (t && p) ++tp;
        else if (!t && p) ++fp;
        else if (t && !p) ++fn;
    }
    double prec = tp + fp ? double(tp) / double(tp + fp) : 0.0;
    double rec = tp + fn ? double(tp) / double(tp + fn) : 0.0;
    if (prec + rec == 0.0) return 0.0;
    return 2.0 * prec * rec / (prec + rec);
}

std::vector<int> assign_group_folds(const std::vector<std::string>& groups, int k,
                                    std::uint64_t seed) {
    if (k < 1) throw ValidationError("assign_group_folds: k must be positive");
    std::vector<std::string> order;
    for (const auto& g : groups)
        if (std::find(order.begin(), order.end(), g) == order.end()) order.push_back(g);
    Rng rng(seed);
    rng.shuffle(order);
    std::map<std::string, int> fold_of;
    for (std::size_t i = 0; i < order.size(); ++i) fold_of[order[i]] = int(i % std::size_t(k));
    std::vector<int> out;
    out.reserve(groups.size());
    for (const auto& g : groups) out.push_back(fold_of.at(g));
    return out;
}

namespace {

class LdaLearner : public Learner {
  public:
    void fit(const Matrix& X, const std::vector<int>& y,
             const std::vector<std::string>&, std::uint64_t) override {
        scaler_.fit(X);
        model_ = train_lda(scaler_.transform(X), y);
    }
    int predict(const std::vector<double>& x) const override {
        return model_.predict(scaler_.transform(x));
    }

  private:
    Standardizer scaler_;
    LdaModel model_;
};

class SvmLearner : public Learner {
  public:
    SvmLearner(ClassifierKind kind, HyperGrid grid) : kind_(kind), grid_(std::move(grid)) {}

    void fit(const Matrix& X, const std::vector<int>& y,
             const std::vector<std::string>& groups, std::uint64_t seed) override {
        scaler_.fit(X);
        Matrix Xs = scaler_.transform(X);
        HyperChoice c = inner_cv_select(Xs, y, groups, kind_, grid_, kCvFolds, seed);
        SvmKernel kern;
        kern.kind = kind_ == ClassifierKind::RbfSvm ? KernelKind::Rbf : KernelKind::Linear;
        kern.gamma = kind_ == ClassifierKind::RbfSvm ? c.gamma : 1.0;
        model_ = train_svm(Xs, y, kern, c.C, 1e-3, 200, hash_combine(seed, 0x5f17)).model;
    }
    int predict(const std::vector<double>& x) const override {
        return model_.predict(scaler_.transform(x));
    }

  private:
    ClassifierKind kind_;
    HyperGrid grid_;
    Standardizer scaler_;
    SvmModel model_;
};

}  // namespace

std::unique_ptr<Learner> make_standard_learner(ClassifierKind kind, const HyperGrid& grid) {
    if (kind == ClassifierKind::Lda) return std::make_unique<LdaLearner>();
    return std::make_unique<SvmLearner>(kind, grid);
}

LearnerFactory standard_learner_factory(const HyperGrid& grid) {
    return [grid](ClassifierKind k) { return make_standard_learner(k, grid); };
}

std::string design_key(ChannelKind channel, AffectDim dim, Window window) {
    return channel_slug(channel) + "/" + affect_dim_name(dim) + "/" + window_name(window);
}

std::string cell_key(ChannelKind channel, ClassifierKind classifier, AffectDim dim,
                     Window window) {
    return channel_slug(channel) + "/" + classifier_slug(classifier) + "/" +
           affect_dim_name(dim) + "/" + window_name(window);
}

namespace {

struct CellJob {
    std::string key;
    const DesignMatrix* design = nullptr;
    ClassifierKind classifier = ClassifierKind::Lda;
    std::string dkey;  // design key: same fold partitions for every classifier
};

// One cell = repetitions x folds scores in repetition-major order.
std::vector<double> run_cell(const DesignMatrix& d, ClassifierKind kind, const CvPlan& plan,
                             const LearnerFactory& factory, const std::string& dkey,
                             std::vector<std::string>& warnings) {
    std::vector<double> scores;
    scores.reserve(std::size_t(plan.repetitions) * std::size_t(plan.folds));
    for (int rep = 0; rep < plan.repetitions; ++rep) {
        std::uint64_t fold_seed =
            hash_combine(hash_combine(plan.seed, fnv1a64(dkey)), std::uint64_t(rep));
        std::vector<int> fold = assign_group_folds(d.groups, plan.folds, fold_seed);
        for (int f = 0; f < plan.folds; ++f) {
            Matrix Xtr, Xte;
            std::vector<int> ytr, yte;
            std::vector<std::string> gtr, gte;
            for (std::size_t i = 0; i < d.X.size(); ++i) {
                if (fold[i] == f) {
                    Xte.push_back(d.X[i]);
                    yte.push_back(d.y[i]);
                    gte.push_back(d.groups[i]);
                } else {
                    Xtr.push_back(d.X[i]);
                    ytr.push_back(d.y[i]);
                    gtr.push_back(d.groups[i]);
                }
            }
            std::uint64_t fit_seed = hash_combine(fold_seed, std::uint64_t(f) + 1);
            double score = 0.0;
            try {
                auto learner = factory(kind);
                learner->fit(Xtr, ytr, gtr, fit_seed);
                std::vector<int> pred;
                pred.reserve(Xte.size());
                for (const auto& row : Xte) pred.push_back(learner->predict(row));
                if (plan.majority_vote) {
                    std::vector<std::string> vids;
                    std::vector<int> vt, vp;
                    for (std::size_t i = 0; i < gte.size(); ++i) {
                        if (std::find(vids.begin(), vids.end(), gte[i]) != vids.end()) continue;
                        vids.push_back(gte[i]);
                        int sum = 0;
                        for (std::size_t j = 0; j < gte.size(); ++j)
                            if (gte[j] == gte[i]) sum += pred[j];
                        vt.push_back(yte[i]);
                        vp.push_back(sum >= 0 ? 1 : -1);
                    }
                    score = f1_score(vt, vp);
                } else {
                    score = f1_score(yte, pred);
                }
            } catch (const DegenerateInputError& e) {
                warnings.push_back(dkey + " rep " + std::to_string(rep) + " fold " +
                                   std::to_string(f) + ": " + e.what() + " (scored 0)");
            }
            scores.push_back(score);
        }
    }
    return scores;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / double(v.size());
}

double sample_std(const std::vector<double>& v, double mu) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / double(v.size() - 1));
}

}  // namespace

EvalReport run_protocol(const DesignSet& designs, const std::vector<ChannelKind>& channels,
                        const std::vector<ClassifierKind>& classifiers, const CvPlan& plan,
                        const LearnerFactory& factory, int workers) {
    if (plan.repetitions < 1) throw ValidationError("cv plan: repetitions must be >= 1");
    if (plan.folds < 2) throw ValidationError("cv plan: folds must be >= 2");

    EvalReport rep;
    rep.channels = channels;
    rep.classifiers = classifiers;

    std::vector<CellJob> jobs;
    for (ChannelKind ch : channels) {
        for (ClassifierKind cl : classifiers) {
            for (AffectDim dim : {AffectDim::Valence, AffectDim::Arousal}) {
                for (Window win : all_windows()) {
                    std::string key = cell_key(ch, cl, dim, win);
                    rep.cells.emplace(key, CellStat{});
                    std::string dkey = design_key(ch, dim, win);
                    auto it = designs.find(dkey);
                    if (it == designs.end()) {
                        rep.warnings.push_back(key + ": no design matrix, marked NA");
                        continue;
                    }
                    std::vector<std::string> distinct;
                    for (const auto& g : it->second.groups)
                        if (std::find(distinct.begin(), distinct.end(), g) == distinct.end())
                            distinct.push_back(g);
                    if (int(distinct.size()) < plan.folds) {
                        rep.warnings.push_back(key + ": only " +
                                               std::to_string(distinct.size()) +
                                               " groups for " + std::to_string(plan.folds) +
                                               " folds, marked NA");
                        continue;
                    }
                    jobs.push_back({key, &it->second, cl, dkey});
                }
            }
        }
    }

    std::vector<std::vector<double>> job_scores(jobs.size());
    std::vector<std::vector<std::string>> job_warnings(jobs.size());
    parallel_for(jobs.size(), workers, [&](std::size_t i) {
        job_scores[i] = run_cell(*jobs[i].design, jobs[i].classifier, plan, factory,
                                 jobs[i].dkey, job_warnings[i]);
    });

    for (std::size_t i = 0; i < jobs.size(); ++i) {
        CellStat& c = rep.cells.at(jobs[i].key);
        c.available = true;
        c.scores = std::move(job_scores[i]);
        c.mean = mean_of(c.scores);
        if (plan.std_over_reps) {
            std::vector<double> rep_means;
            for (int r = 0; r < plan.repetitions; ++r) {
                std::vector<double> chunk(c.scores.begin() + r * plan.folds,
                                          c.scores.begin() + (r + 1) * plan.folds);
                rep_means.push_back(mean_of(chunk));
            }
            c.stddev = sample_std(rep_means, mean_of(rep_means));
        } else {
            c.stddev = sample_std(c.scores, c.mean);
        }
        for (auto& w : job_warnings[i]) rep.warnings.push_back(std::move(w));
    }

    // best = column max per (dimension, window) among available cells
    for (AffectDim dim : {AffectDim::Valence, AffectDim::Arousal}) {
        for (Window win : all_windows()) {
            double top = -1.0;
            for (ChannelKind ch : channels)
                for (ClassifierKind cl : classifiers) {
                    const CellStat& c = rep.cells.at(cell_key(ch, cl, dim, win));
                    if (c.available) top = std::max(top, c.mean);
                }
            if (top < 0.0) continue;
            for (ChannelKind ch : channels)
                for (ClassifierKind cl : classifiers) {
                    CellStat& c = rep.cells.at(cell_key(ch, cl, dim, win));
                    if (c.available && c.mean == top) c.best = true;
                }
        }
    }
    return rep;
}

}  // namespace affchan
