// Soft-margin SVM trained by SMO-style pairwise coordinate ascent.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "affchan/common.hpp"
#include "affchan/kernels.hpp"
#include "affchan/learners.hpp"
#include "affchan/rng.hpp"

namespace affchan {

using json = nlohmann::ordered_json;

double kernel_eval(const SvmKernel& k, const std::vector<double>& a,
                   const std::vector<double>& b) {
    if (a.size() != b.size())
        throw ContractError("kernel_eval: dimension mismatch");
    if (k.kind == KernelKind::Linear)
        return kern::dot_f64(a.data(), b.data(), a.size());
    return std::exp(-k.gamma * kern::sqdist_f64(a.data(), b.data(), a.size()));
}

double SvmModel::decision(const std::vector<double>& x) const {
    double s = b;
    for (std::size_t i = 0; i < sv.size(); ++i)
        s += alpha[i] * sv_y[i] * kernel_eval(kernel, sv[i], x);
    return s;
}

int SvmModel::predict(const std::vector<double>& x) const {
    return decision(x) >= 0.0 ? 1 : -1;
}

namespace {

void check_training_input(const Matrix& X, const std::vector<int>& y, double C,
                          double tol) {
    if (X.empty()) throw EmptyDesignError("svm: empty design matrix");
    if (X.size() != y.size())
        throw ContractError("svm: label count does not match row count");
    for (const auto& row : X)
        if (row.size() != X.front().size())
            throw ContractError("svm: ragged design matrix");
    if (C <= 0.0) throw ValidationError("svm: C must be positive");
    if (tol <= 0.0) throw ValidationError("svm: tol must be positive");
    bool pos = false, neg = false;
    for (int v : y) {
        if (v == 1) pos = true;
        else if (v == -1) neg = true;
        else throw ValidationError("svm: labels must be +1 or -1");
    }
    if (!pos || !neg)
        throw DegenerateInputError("svm: training set holds a single class");
}

struct Smo {
    const Matrix& X;
    const std::vector<int>& y;
    double C;
    double tol;
    Rng rng;
    std::size_t n;
    std::vector<std::vector<double>> G;  // Gram, symmetric
    std::vector<double> alpha;
    std::vector<double> f;  // f_k = sum_j alpha_j y_j G[j][k], excludes b
    double b = 0.0;

    Smo(const Matrix& X_, const std::vector<int>& y_, const SvmKernel& kernel,
        double C_, double tol_, std::uint64_t seed)
        : X(X_), y(y_), C(C_), tol(tol_), rng(seed), n(X_.size()) {
        G.assign(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j)
                G[i][j] = G[j][i] = kernel_eval(kernel, X[i], X[j]);
        alpha.assign(n, 0.0);
        f.assign(n, 0.0);
    }

    double err(std::size_t k) const { return f[k] + b - y[k]; }

    bool attempt(std::size_t i, std::size_t j) {
        if (i == j) return false;
        double ai = alpha[i], aj = alpha[j];
        double s = double(y[i]) * double(y[j]);
        double L, H;
        if (s > 0.0) {
            L = std::max(0.0, ai + aj - C);
            H = std::min(C, ai + aj);
        } else {
            L = std::max(0.0, aj - ai);
            H = std::min(C, C + aj - ai);
        }
        if (H - L < 1e-12) return false;
        double eta = 2.0 * G[i][j] - G[i][i] - G[j][j];
        if (eta > -1e-12) return false;  // coincident points: no curvature
        double Ei = err(i), Ej = err(j);
        double aj_new = std::clamp(aj - y[j] * (Ei - Ej) / eta, L, H);
        if (std::abs(aj_new - aj) < 1e-9 * (aj_new + aj + 1e-6)) return false;
        double ai_new = std::clamp(ai + s * (aj - aj_new), 0.0, C);
        double di = ai_new - ai, dj = aj_new - aj;
        double b1 = b - Ei - y[i] * di * G[i][i] - y[j] * dj * G[i][j];
        double b2 = b - Ej - y[i] * di * G[i][j] - y[j] * dj * G[j][j];
        if (ai_new > 0.0 && ai_new < C) b = b1;
        else if (aj_new > 0.0 && aj_new < C) b = b2;
        else b = 0.5 * (b1 + b2);
        kern::axpy_f64(di * y[i], G[i].data(), f.data(), n);
        kern::axpy_f64(dj * y[j], G[j].data(), f.data(), n);
        alpha[i] = ai_new;
        alpha[j] = aj_new;
        return true;
    }

    bool examine(std::size_t i) {
        double Ei = err(i);
        double r = Ei * y[i];
        bool violates = (r < -tol && alpha[i] < C) || (r > tol && alpha[i] > 0.0);
        if (!violates) return false;

        std::vector<std::size_t> nonbound;
        for (std::size_t k = 0; k < n; ++k)
            if (alpha[k] > 0.0 && alpha[k] < C) nonbound.push_back(k);

        if (!nonbound.empty()) {
            std::size_t best = nonbound.front();
            double gap = -1.0;
            for (std::size_t k : nonbound) {
                double g = std::abs(Ei - err(k));
                if (g > gap) { gap = g; best = k; }
            }
            if (attempt(i, best)) return true;
            std::size_t off = rng.below(nonbound.size());
            for (std::size_t t = 0; t < nonbound.size(); ++t)
                if (attempt(i, nonbound[(t + off) % nonbound.size()])) return true;
        }
        std::size_t off = rng.below(n);
        for (std::size_t t = 0; t < n; ++t)
            if (attempt(i, (t + off) % n)) return true;
        return false;
    }

    // Recompute b from the optimal alpha: average over margin vectors when
    // any exist, otherwise the midpoint of the interval the bound vectors
    // leave feasible.
    double final_bias() const {
        double eps = 1e-9 * C;
        double sum = 0.0;
        int margin = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (alpha[i] > eps && alpha[i] < C - eps) {
                sum += y[i] - f[i];
                ++margin;
            }
        }
        if (margin > 0) return sum / margin;
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            bool at_zero = alpha[i] <= eps;
            if (y[i] > 0) {
                if (at_zero) lo = std::max(lo, 1.0 - f[i]);
                else hi = std::min(hi, 1.0 - f[i]);
            } else {
                if (at_zero) hi = std::min(hi, -1.0 - f[i]);
                else lo = std::max(lo, -1.0 - f[i]);
            }
        }
        if (std::isfinite(lo) && std::isfinite(hi) && lo <= hi)
            return 0.5 * (lo + hi);
        return b;
    }
};

}  // namespace

SvmTrainResult train_svm(const Matrix& X, const std::vector<int>& y,
                         const SvmKernel& kernel, double C, double tol,
                         int max_passes, std::uint64_t seed) {
    check_training_input(X, y, C, tol);
    if (kernel.kind == KernelKind::Rbf && kernel.gamma <= 0.0)
        throw ValidationError("svm: rbf gamma must be positive");

    Smo smo(X, y, kernel, C, tol, seed);
    bool converged = false;
    int sweeps = 0;
    for (; sweeps < max_passes; ++sweeps) {
        std::size_t changed = 0;
        for (std::size_t i = 0; i < smo.n; ++i)
            if (smo.examine(i)) ++changed;
        if (changed == 0) { converged = true; ++sweeps; break; }
    }
    smo.b = smo.final_bias();

    SvmTrainResult out;
    out.alpha = smo.alpha;
    out.converged = converged;
    out.sweeps = sweeps;
    out.model.kernel = kernel;
    out.model.C = C;
    out.model.b = smo.b;
    out.model.converged = converged;
    for (std::size_t i = 0; i < smo.n; ++i) {
        if (smo.alpha[i] > 1e-12) {
            out.model.sv.push_back(X[i]);
            out.model.alpha.push_back(smo.alpha[i]);
            out.model.sv_y.push_back(y[i]);
        }
    }
    return out;
}

double svm_max_kkt_violation(const SvmModel& m, const Matrix& X,
                             const std::vector<int>& y,
                             const std::vector<double>& alpha) {
    if (X.size() != y.size() || X.size() != alpha.size())
        throw ContractError("svm_max_kkt_violation: shape mismatch");
    std::size_t n = X.size();
    double eps = 1e-6 * std::max(1.0, m.C);
    double worst = 0.0;
    double balance = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        balance += alpha[i] * y[i];
        double g = m.b;
        for (std::size_t j = 0; j < n; ++j)
            if (alpha[j] > 0.0)
                g += alpha[j] * y[j] * kernel_eval(m.kernel, X[j], X[i]);
        double margin = y[i] * g;
        double v;
        if (alpha[i] <= eps) v = std::max(0.0, 1.0 - margin);
        else if (alpha[i] >= m.C - eps) v = std::max(0.0, margin - 1.0);
        else v = std::abs(1.0 - margin);
        worst = std::max(worst, v);
    }
    return std::max(worst, std::abs(balance));
}

double svm_dual_objective(const SvmKernel& kernel, const Matrix& X,
                          const std::vector<int>& y,
                          const std::vector<double>& alpha) {
    if (X.size() != y.size() || X.size() != alpha.size())
        throw ContractError("svm_dual_objective: shape mismatch");
    std::size_t n = X.size();
    double lin = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (alpha[j] == 0.0) continue;
            quad += alpha[i] * alpha[j] * y[i] * y[j] *
                    kernel_eval(kernel, X[i], X[j]);
        }
    }
    return lin - 0.5 * quad;
}

void save_svm_model(const SvmModel& m, const std::filesystem::path& path) {
    json j;
    j["type"] = "svm";
    j["kernel"] = m.kernel.kind == KernelKind::Linear ? "linear" : "rbf";
    j["gamma"] = m.kernel.gamma;
    j["C"] = m.C;
    j["b"] = m.b;
    j["converged"] = m.converged;
    j["alpha"] = m.alpha;
    j["sv_y"] = m.sv_y;
    j["sv"] = m.sv;
    std::ofstream out(path);
    if (!out) throw Error("svm: cannot write " + path.string());
    out << j.dump(2) << "\n";
}

SvmModel load_svm_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingDataError("svm: cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError("svm model " + path.string() + ": " + e.what());
    }
    if (j.value("type", "") != "svm")
        throw ParseError("svm model " + path.string() + ": wrong type tag");
    SvmModel m;
    std::string kind = j.at("kernel").get<std::string>();
    if (kind == "linear") m.kernel.kind = KernelKind::Linear;
    else if (kind == "rbf") m.kernel.kind = KernelKind::Rbf;
    else throw ParseError("svm model: unknown kernel '" + kind + "'");
    m.kernel.gamma = j.at("gamma").get<double>();
    m.C = j.at("C").get<double>();
    m.b = j.at("b").get<double>();
    m.converged = j.at("converged").get<bool>();
    m.alpha = j.at("alpha").get<std::vector<double>>();
    m.sv_y = j.at("sv_y").get<std::vector<int>>();
    m.sv = j.at("sv").get<Matrix>();
    if (m.sv.size() != m.alpha.size() || m.sv.size() != m.sv_y.size())
        throw IntegrityError("svm model " + path.string() + ": ragged arrays");
    return m;
}

}  // namespace affchan
