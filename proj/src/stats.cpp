#include "affchan/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "affchan/common.hpp"

namespace affchan {

using json = nlohmann::ordered_json;

double krippendorff_alpha(const RatingGrid& grid, AgreementMetric metric) {
    // category set, ordered
    std::vector<int> cats;
    for (const auto& row : grid)
        for (const auto& cell : row)
            if (cell && std::find(cats.begin(), cats.end(), *cell) == cats.end())
                cats.push_back(*cell);
    std::sort(cats.begin(), cats.end());
    std::size_t nc = cats.size();
    auto cat_index = [&](int v) {
        return std::size_t(std::lower_bound(cats.begin(), cats.end(), v) - cats.begin());
    };

    std::size_t n_items = grid.empty() ? 0 : grid.front().size();
    for (const auto& row : grid)
        if (row.size() != n_items) throw ContractError("krippendorff: ragged grid");

    // coincidence matrix over items with >= 2 ratings
    std::vector<std::vector<double>> o(nc, std::vector<double>(nc, 0.0));
    std::size_t usable_items = 0;
    for (std::size_t u = 0; u < n_items; ++u) {
        std::vector<std::size_t> vals;
        for (const auto& row : grid)
            if (row[u]) vals.push_back(cat_index(*row[u]));
        if (vals.size() < 2) continue;
        ++usable_items;
        double w = 1.0 / double(vals.size() - 1);
        for (std::size_t i = 0; i < vals.size(); ++i)
            for (std::size_t j = 0; j < vals.size(); ++j)
                if (i != j) o[vals[i]][vals[j]] += w;
    }
    if (usable_items < 2)
        throw DegenerateInputError("krippendorff: need at least 2 items with 2+ ratings");

    std::vector<double> margin(nc, 0.0);
    double n_total = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
        for (std::size_t k = 0; k < nc; ++k) margin[c] += o[c][k];
        n_total += margin[c];
    }

    auto delta2 = [&](std::size_t c, std::size_t k) {
        if (c == k) return 0.0;
        if (metric == AgreementMetric::Nominal) return 1.0;
        std::size_t lo = std::min(c, k), hi = std::max(c, k);
        double s = 0.0;
        for (std::size_t g = lo; g <= hi; ++g) s += margin[g];
        s -= (margin[lo] + margin[hi]) / 2.0;
        return s * s;
    };

    double d_obs = 0.0, d_exp = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
        for (std::size_t k = c + 1; k < nc; ++k) {
            double d2 = delta2(c, k);
            d_obs += o[c][k] * d2;
            d_exp += margin[c] * margin[k] * d2;
        }
    }
    if (d_exp == 0.0)
        throw DegenerateInputError("krippendorff: expected disagreement is zero "
                                   "(all ratings identical)");
    return 1.0 - (n_total - 1.0) * d_obs / d_exp;
}

double fleiss_kappa(const std::vector<std::vector<int>>& grid) {
    std::size_t n_raters = grid.size();
    if (n_raters < 2) throw ValidationError("fleiss: need at least 2 raters");
    std::size_t n_items = grid.front().size();
    if (n_items < 2) throw ValidationError("fleiss: need at least 2 items");
    for (const auto& row : grid)
        if (row.size() != n_items) throw ContractError("fleiss: ragged grid");

    std::vector<int> cats;
    for (const auto& row : grid)
        for (int v : row)
            if (std::find(cats.begin(), cats.end(), v) == cats.end()) cats.push_back(v);
    std::sort(cats.begin(), cats.end());

    double n = double(n_raters);
    double p_bar = 0.0;
    std::vector<double> p_cat(cats.size(), 0.0);
    for (std::size_t u = 0; u < n_items; ++u) {
        double agree = 0.0;
        for (std::size_t c = 0; c < cats.size(); ++c) {
            double n_uc = 0.0;
            for (std::size_t r = 0; r < n_raters; ++r)
                if (grid[r][u] == cats[c]) n_uc += 1.0;
            agree += n_uc * n_uc;
            p_cat[c] += n_uc;
        }
        p_bar += (agree - n) / (n * (n - 1.0));
    }
    p_bar /= double(n_items);
    double pe = 0.0;
    for (double& pc : p_cat) {
        pc /= n * double(n_items);
        pe += pc * pc;
    }
    if (pe >= 1.0)
        throw DegenerateInputError("fleiss: chance agreement is 1 (single category)");
    return (p_bar - pe) / (1.0 - pe);
}

RatingGrid threshold_labels(const RatingGrid& grid, ThresholdScheme scheme) {
    RatingGrid out(grid.size());
    if (scheme == ThresholdScheme::PerRaterMean) {
        for (std::size_t r = 0; r < grid.size(); ++r) {
            double sum = 0.0;
            for (const auto& cell : grid[r]) {
                if (!cell)
                    throw MissingDataError("threshold_labels: per-rater-mean needs a "
                                           "complete grid");
                sum += *cell;
            }
            if (grid[r].empty()) throw ValidationError("threshold_labels: empty rater row");
            double mean = sum / double(grid[r].size());
            out[r].reserve(grid[r].size());
            for (const auto& cell : grid[r]) out[r].push_back(int(*cell > mean));
        }
        return out;
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& row : grid)
        for (const auto& cell : row)
            if (cell) {
                sum += *cell;
                ++count;
            }
    if (count == 0) throw MissingDataError("threshold_labels: no ratings present");
    double mean = sum / double(count);
    for (std::size_t r = 0; r < grid.size(); ++r) {
        out[r].reserve(grid[r].size());
        for (const auto& cell : grid[r]) {
            if (cell) out[r].push_back(int(*cell > mean));
            else out[r].push_back(std::nullopt);
        }
    }
    return out;
}

std::optional<std::vector<std::vector<int>>> dense_grid(const RatingGrid& grid) {
    std::vector<std::vector<int>> out(grid.size());
    for (std::size_t r = 0; r < grid.size(); ++r) {
        out[r].reserve(grid[r].size());
        for (const auto& cell : grid[r]) {
            if (!cell) return std::nullopt;
            out[r].push_back(*cell);
        }
    }
    return out;
}

CorrelationTest pearson_test(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ContractError("pearson: length mismatch");
    std::size_t n = x.size();
    if (n < 3) throw ValidationError("pearson: need at least 3 pairs");
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / double(n);
    double my = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw DegenerateInputError("pearson: zero variance input");
    CorrelationTest t;
    t.r = sxy / std::sqrt(sxx * syy);
    t.r = std::clamp(t.r, -1.0, 1.0);
    double r2 = t.r * t.r;
    if (r2 >= 1.0) {
        t.p = 0.0;
        return t;
    }
    double tstat = t.r * std::sqrt(double(n - 2) / (1.0 - r2));
    boost::math::students_t dist(double(n - 2));
    t.p = 2.0 * boost::math::cdf(dist, -std::abs(tstat));
    return t;
}

std::vector<bool> benjamini_hochberg(const std::vector<double>& p_values, double q) {
    if (q <= 0.0 || q >= 1.0) throw ValidationError("benjamini_hochberg: q must be in (0,1)");
    std::size_t m = p_values.size();
    std::vector<bool> out(m, false);
    if (m == 0) return out;
    for (double p : p_values)
        if (!(p >= 0.0 && p <= 1.0))
            throw ValidationError("benjamini_hochberg: p-values must lie in [0,1]");

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
    std::size_t k = 0;  // 1-based rank of the last rejected test
    for (std::size_t i = 0; i < m; ++i)
        if (p_values[order[i]] <= double(i + 1) * q / double(m)) k = i + 1;
    for (std::size_t i = 0; i < k; ++i) out[order[i]] = true;
    return out;
}

namespace {

// midranks over the pooled sample; returned doubled so ties stay integral
std::vector<long long> doubled_midranks(const std::vector<double>& pooled) {
    std::size_t n = pooled.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
    std::vector<long long> rank2(n, 0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && pooled[order[j]] == pooled[order[i]]) ++j;
        // ranks i+1 .. j averaged; doubled = (i+1 + j)
        long long r2 = (long long)(i + 1 + j);
        for (std::size_t t = i; t < j; ++t) rank2[order[t]] = r2;
        i = j;
    }
    return rank2;
}

double norm_sf2(double z) {  // two-sided tail mass for |Z| >= |z|
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

}  // namespace

RankSumResult wilcoxon_ranksum(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty())
        throw ValidationError("wilcoxon: both samples must be non-empty");
    std::size_t na = a.size(), nb = b.size(), n = na + nb;
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<long long> rank2 = doubled_midranks(pooled);

    long long w2 = 0;  // doubled rank sum of sample a
    for (std::size_t i = 0; i < na; ++i) w2 += rank2[i];

    RankSumResult res;
    res.rank_sum = double(w2) / 2.0;
    res.U = res.rank_sum - double(na) * double(na + 1) / 2.0;

    // tie-corrected normal approximation with continuity correction
    std::map<long long, std::size_t> tie_count;
    for (long long r : rank2) ++tie_count[r];
    double tie_term = 0.0;
    for (const auto& [r, t] : tie_count) {
        double td = double(t);
        tie_term += td * td * td - td;
    }
    double mu = double(na) * double(n + 1) / 2.0;
    double var = double(na) * double(nb) / 12.0 *
                 (double(n + 1) - tie_term / (double(n) * double(n - 1)));
    if (var <= 0.0) {
        res.p_normal = 1.0;
    } else {
        double d = res.rank_sum - mu;
        double cc = d > 0.5 ? -0.5 : (d < -0.5 ? 0.5 : -d);  // shrink toward 0
        double z = (d + cc) / std::sqrt(var);
        res.p_normal = norm_sf2(z);
    }

    if (n <= 12) {
        // exact: every assignment of pooled values to the first sample is
        // equally likely under the null
        std::size_t below = 0, above = 0, total = 0;
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
            if (std::size_t(__builtin_popcount(mask)) != na) continue;
            long long s2 = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (1u << i)) s2 += rank2[i];
            ++total;
            if (s2 <= w2) ++below;
            if (s2 >= w2) ++above;
        }
        double lo = double(std::min(below, above)) / double(total);
        res.p = std::min(1.0, 2.0 * lo);
        res.exact = true;
    } else {
        res.p = res.p_normal;
    }
    return res;
}

void write_agreement_report(const DatasetManifest& manifest, const std::filesystem::path& path,
                            double q) {
    const RatingMatrix& rm = manifest.ratings;
    if (rm.raters.empty() || rm.items.empty())
        throw MissingDataError("stats: manifest carries no ratings");

    json j;

    for (AffectDim dim : {AffectDim::Valence, AffectDim::Arousal}) {
        const RatingGrid& grid = rm.grid(dim);
        json& slot = j["alpha"][affect_dim_name(dim)];
        try {
            slot = krippendorff_alpha(grid, AgreementMetric::Ordinal);
        } catch (const DegenerateInputError& e) {
            slot = json{{"error", e.what()}};
        }
    }

    for (ThresholdScheme scheme : {ThresholdScheme::PerRaterMean, ThresholdScheme::GrandMean}) {
        const char* sname = scheme == ThresholdScheme::PerRaterMean ? "per_rater_mean"
                                                                    : "grand_mean";
        for (AffectDim dim : {AffectDim::Valence, AffectDim::Arousal}) {
            json& slot = j["kappa"][sname][affect_dim_name(dim)];
            try {
                auto dense = dense_grid(threshold_labels(rm.grid(dim), scheme));
                if (!dense) {
                    slot = json{{"error", "incomplete rating grid"}};
                    continue;
                }
                slot = fleiss_kappa(*dense);
            } catch (const Error& e) {
                slot = json{{"error", e.what()}};
            }
        }
    }

    // per-rater valence-arousal correlation, BH over the rater family
    json tests = json::array();
    std::vector<double> ps;
    std::vector<std::size_t> test_rows;  // index into `tests`
    for (std::size_t r = 0; r < rm.n_raters(); ++r) {
        std::vector<double> xs, ys;
        for (std::size_t u = 0; u < rm.n_items(); ++u)
            if (rm.valence[r][u] && rm.arousal[r][u]) {
                xs.push_back(double(*rm.valence[r][u]));
                ys.push_back(double(*rm.arousal[r][u]));
            }
        json row;
        row["rater"] = rm.raters[r];
        row["n"] = xs.size();
        try {
            CorrelationTest t = pearson_test(xs, ys);
            row["r"] = t.r;
            row["p"] = t.p;
            test_rows.push_back(tests.size());
            ps.push_back(t.p);
        } catch (const Error& e) {
            row["error"] = e.what();
        }
        tests.push_back(std::move(row));
    }
    std::vector<bool> sig = benjamini_hochberg(ps, q);
    for (std::size_t i = 0; i < test_rows.size(); ++i)
        tests[test_rows[i]]["significant"] = bool(sig[i]);
    j["pearson"]["q"] = q;
    j["pearson"]["tests"] = std::move(tests);

    // High-vs-Low rank sums over per-item mean ratings
    for (AffectDim dim : {AffectDim::Valence, AffectDim::Arousal}) {
        const RatingGrid& grid = rm.grid(dim);
        std::vector<double> high, low;
        std::vector<std::string> skipped;
        for (std::size_t u = 0; u < rm.n_items(); ++u) {
            const VideoRecord* v = manifest.find_video(rm.items[u]);
            if (!v) {
                skipped.push_back(rm.items[u]);
                continue;
            }
            double sum = 0.0;
            std::size_t cnt = 0;
            for (std::size_t r = 0; r < rm.n_raters(); ++r)
                if (grid[r][u]) {
                    sum += *grid[r][u];
                    ++cnt;
                }
            if (cnt == 0) {
                skipped.push_back(rm.items[u]);
                continue;
            }
            ExpertLabel lab =
                dim == AffectDim::Valence ? v->expert_valence : v->expert_arousal;
            (lab == ExpertLabel::High ? high : low).push_back(sum / double(cnt));
        }
        json& slot = j["ranksum"][affect_dim_name(dim)];
        if (high.empty() || low.empty()) {
            slot = json{{"error", "need items under both expert labels"}};
        } else {
            RankSumResult rs = wilcoxon_ranksum(high, low);
            slot["n_high"] = high.size();
            slot["n_low"] = low.size();
            slot["rank_sum"] = rs.rank_sum;
            slot["U"] = rs.U;
            slot["p"] = rs.p;
            slot["exact"] = rs.exact;
        }
        if (!skipped.empty()) slot["skipped_items"] = skipped;
    }

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw Error("stats: cannot write " + tmp.string());
        out << j.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace affchan
