#include <cmath>
#include <fstream>

#include <json.hpp>

#include "affchan/common.hpp"
#include "affchan/kernels.hpp"
#include "affchan/learners.hpp"

namespace affchan {

namespace {

const std::vector<std::pair<ClassifierKind, std::string>> kClassifierSlugs = {
    {ClassifierKind::Lda, "lda"},
    {ClassifierKind::LinearSvm, "lsvm"},
    {ClassifierKind::RbfSvm, "rsvm"},
};

// In-place Cholesky solve of A x = rhs for symmetric positive-definite A.
std::vector<double> cholesky_solve(std::vector<double> A, std::vector<double> rhs, int d) {
    for (int j = 0; j < d; ++j) {
        double diag = A[std::size_t(j) * d + j];
        for (int k = 0; k < j; ++k) {
            double v = A[std::size_t(j) * d + k];
            diag -= v * v;
        }
        if (!(diag > 0.0))
            throw DegenerateInputError("covariance not positive definite; raise shrinkage");
        double l = std::sqrt(diag);
        A[std::size_t(j) * d + j] = l;
        for (int i = j + 1; i < d; ++i) {
            double v = A[std::size_t(i) * d + j];
            for (int k = 0; k < j; ++k)
                v -= A[std::size_t(i) * d + k] * A[std::size_t(j) * d + k];
            A[std::size_t(i) * d + j] = v / l;
        }
    }
    // forward then back substitution
    for (int i = 0; i < d; ++i) {
        double v = rhs[i];
        for (int k = 0; k < i; ++k) v -= A[std::size_t(i) * d + k] * rhs[k];
        rhs[i] = v / A[std::size_t(i) * d + i];
    }
    for (int i = d - 1; i >= 0; --i) {
        double v = rhs[i];
        for (int k = i + 1; k < d; ++k) v -= A[std::size_t(k) * d + i] * rhs[k];
        rhs[i] = v / A[std::size_t(i) * d + i];
    }
    return rhs;
}

}  // namespace

const std::string& classifier_slug(ClassifierKind k) {
    for (const auto& [kind, slug] : kClassifierSlugs)
        if (kind == k) return slug;
    throw Error("unknown classifier kind");
}

ClassifierKind classifier_from_slug(const std::string& slug) {
    for (const auto& [kind, s] : kClassifierSlugs)
        if (s == slug) return kind;
    throw ParseError("unknown classifier: " + slug);
}

const std::vector<ClassifierKind>& all_classifiers() {
    static const std::vector<ClassifierKind> all = {ClassifierKind::Lda,
                                                    ClassifierKind::LinearSvm,
                                                    ClassifierKind::RbfSvm};
    return all;
}

void Standardizer::fit(const Matrix& X) {
    if (X.empty()) throw DegenerateInputError("cannot standardize an empty matrix");
    std::size_t d = X[0].size();
    mean.assign(d, 0.0);
    inv_std.assign(d, 1.0);
    for (const auto& row : X)
        for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
    for (std::size_t j = 0; j < d; ++j) mean[j] /= double(X.size());
    std::vector<double> var(d, 0.0);
    for (const auto& row : X)
        for (std::size_t j = 0; j < d; ++j) {
            double c = row[j] - mean[j];
            var[j] += c * c;
        }
    for (std::size_t j = 0; j < d; ++j) {
        double sd = std::sqrt(var[j] / double(X.size()));
        inv_std[j] = sd > 0.0 ? 1.0 / sd : 1.0;
    }
}

std::vector<double> Standardizer::transform(const std::vector<double>& x) const {
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) * inv_std[j];
    return out;
}

Matrix Standardizer::transform(const Matrix& X) const {
    Matrix out;
    out.reserve(X.size());
    for (const auto& row : X) out.push_back(transform(row));
    return out;
}

double LdaModel::decision(const std::vector<double>& x) const {
    return kern::dot_f64(w.data(), x.data(), w.size()) + b;
}

int LdaModel::predict(const std::vector<double>& x) const {
    return decision(x) >= 0.0 ? 1 : -1;
}

LdaModel train_lda(const Matrix& X, const std::vector<int>& y, double shrinkage) {
    if (X.empty() || X.size() != y.size())
        throw ContractError("train_lda: X and y must be non-empty and aligned");
    std::size_t n = X.size(), d = X[0].size();
    std::size_t n_pos = 0;
    for (int v : y) n_pos += v > 0;
    std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw DegenerateInputError("train_lda: both classes must be present");

    std::vector<double> mu_pos(d, 0.0), mu_neg(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto& mu = y[i] > 0 ? mu_pos : mu_neg;
        for (std::size_t j = 0; j < d; ++j) mu[j] += X[i][j];
    }
    for (std::size_t j = 0; j < d; ++j) {
        mu_pos[j] /= double(n_pos);
        mu_neg[j] /= double(n_neg);
    }

    // pooled within-class scatter, denominator n-2
    std::vector<double> S(d * d, 0.0);
    std::vector<double> c(d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& mu = y[i] > 0 ? mu_pos : mu_neg;
        for (std::size_t j = 0; j < d; ++j) c[j] = X[i][j] - mu[j];
        for (std::size_t j = 0; j < d; ++j) {
            double cj = c[j];
            if (cj == 0.0) continue;
            double* row = S.data() + j * d;
            kern::axpy_f64(cj, c.data(), row, d);
        }
    }
    double denom = n >= 3 ? double(n - 2) : 1.0;
    for (double& v : S) v /= denom;

    double tr = 0.0;
    for (std::size_t j = 0; j < d; ++j) tr += S[j * d + j];
    if (tr > 0.0) {
        double ridge = shrinkage * tr / double(d);
        for (std::size_t j = 0; j < d; ++j) S[j * d + j] += ridge;
    } else {
        // all points coincide with their class mean: fall back to identity so
        // the direction becomes the mean difference
        for (std::size_t j = 0; j < d; ++j) S[j * d + j] = 1.0;
    }

    std::vector<double> diff(d);
    for (std::size_t j = 0; j < d; ++j) diff[j] = mu_pos[j] - mu_neg[j];

    LdaModel m;
    m.w = cholesky_solve(std::move(S), std::move(diff), int(d));
    double mid = 0.0;
    for (std::size_t j = 0; j < d; ++j) mid += m.w[j] * (mu_pos[j] + mu_neg[j]);
    m.log_prior_ratio = std::log(double(n_pos) / double(n_neg));
    m.b = -0.5 * mid + m.log_prior_ratio;
    for (double v : m.w)
        if (!std::isfinite(v)) throw DegenerateInputError("train_lda: non-finite weights");
    return m;
}

using json = nlohmann::ordered_json;

void save_lda_model(const LdaModel& m, const std::filesystem::path& path) {
    json j;
    j["type"] = "lda";
    j["w"] = m.w;
    j["b"] = m.b;
    j["log_prior_ratio"] = m.log_prior_ratio;
    std::ofstream f(path);
    if (!f) throw Error("cannot write model: " + path.string());
    f << j.dump(2) << "\n";
}

LdaModel load_lda_model(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw MissingDataError("model missing: " + path.string());
    json j = json::parse(f, nullptr, true);
    if (j.value("type", "") != "lda") throw ParseError("not an lda model: " + path.string());
    LdaModel m;
    m.w = j.at("w").get<std::vector<double>>();
    m.b = j.at("b").get<double>();
    m.log_prior_ratio = j.at("log_prior_ratio").get<double>();
    return m;
}

}  // namespace affchan
