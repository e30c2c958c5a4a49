#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include <json.hpp>

#include "affchan/common.hpp"
#include "affchan/rng.hpp"
#include "affchan/stats.hpp"
#include "support/testutil.hpp"

using namespace affchan;

namespace {

// ---- alpha oracle: straight from the pairwise definition -------------------

struct AlphaDegenerate {};

double alpha_oracle(const RatingGrid& grid, AgreementMetric metric) {
    // values kept per item (items with >= 2 ratings), as raw ints
    std::vector<std::vector<int>> items;
    std::size_t n_items = grid.empty() ? 0 : grid.front().size();
    for (std::size_t u = 0; u < n_items; ++u) {
        std::vector<int> vals;
        for (const auto& row : grid)
            if (row[u]) vals.push_back(*row[u]);
        if (vals.size() >= 2) items.push_back(std::move(vals));
    }
    if (items.size() < 2) throw AlphaDegenerate{};

    std::vector<int> all;
    for (const auto& it : items) all.insert(all.end(), it.begin(), it.end());
    double n = double(all.size());

    // frequency of each category over the kept values
    auto freq = [&](int c) {
        return double(std::count(all.begin(), all.end(), c));
    };
    auto delta2 = [&](int a, int b) {
        if (a == b) return 0.0;
        if (metric == AgreementMetric::Nominal) return 1.0;
        int lo = std::min(a, b), hi = std::max(a, b);
        double s = 0.0;
        for (int g = lo; g <= hi; ++g) s += freq(g);
        s -= (freq(lo) + freq(hi)) / 2.0;
        return s * s;
    };

    double d_obs = 0.0;
    for (const auto& vals : items) {
        double within = 0.0;
        for (std::size_t i = 0; i < vals.size(); ++i)
            for (std::size_t j = 0; j < vals.size(); ++j)
                if (i != j) within += delta2(vals[i], vals[j]);
        d_obs += within / double(vals.size() - 1);
    }
    d_obs /= n;

    double d_exp = 0.0;
    for (int a : all)
        for (int b : all) d_exp += delta2(a, b);
    d_exp /= n * (n - 1.0);

    if (d_exp == 0.0) throw AlphaDegenerate{};
    return 1.0 - d_obs / d_exp;
}

// ---- kappa oracle: pairwise rater agreement --------------------------------

double kappa_oracle(const std::vector<std::vector<int>>& grid) {
    std::size_t nr = grid.size(), ni = grid.front().size();
    double p_bar = 0.0;
    for (std::size_t u = 0; u < ni; ++u) {
        double agree = 0.0;
        for (std::size_t i = 0; i < nr; ++i)
            for (std::size_t j = 0; j < nr; ++j)
                if (i != j && grid[i][u] == grid[j][u]) agree += 1.0;
        p_bar += agree / (double(nr) * double(nr - 1));
    }
    p_bar /= double(ni);

    std::vector<int> cats;
    for (const auto& row : grid)
        for (int v : row)
            if (std::find(cats.begin(), cats.end(), v) == cats.end()) cats.push_back(v);
    double pe = 0.0;
    for (int c : cats) {
        double cnt = 0.0;
        for (const auto& row : grid) cnt += double(std::count(row.begin(), row.end(), c));
        double pc = cnt / (double(nr) * double(ni));
        pe += pc * pc;
    }
    return (p_bar - pe) / (1.0 - pe);
}

// ---- student-t tail oracle: simpson integration of the density -------------

double t_density(double x, double nu) {
    double lc = std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0) -
                0.5 * std::log(nu * M_PI);
    return std::exp(lc - (nu + 1.0) / 2.0 * std::log1p(x * x / nu));
}

double t_two_sided_p(double t, double nu) {
    t = std::abs(t);
    if (t == 0.0) return 1.0;
    // central mass on [-t, t] by simpson with a fine grid
    int steps = 20000;
    double h = 2.0 * t / steps;
    double s = t_density(-t, nu) + t_density(t, nu);
    for (int i = 1; i < steps; ++i)
        s += t_density(-t + i * h, nu) * (i % 2 ? 4.0 : 2.0);
    double central = s * h / 3.0;
    return std::max(0.0, 1.0 - central);
}

// ---- rank-sum oracle: enumeration with plain double midranks ---------------

double ranksum_exact_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::size_t n = pooled.size(), na = a.size();
    // midranks the textbook way
    std::vector<double> rank(n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && pooled[order[j]] == pooled[order[i]]) ++j;
        double mid = (double(i + 1) + double(j)) / 2.0;
        for (std::size_t t = i; t < j; ++t) rank[order[t]] = mid;
        i = j;
    }
    double w = 0.0;
    for (std::size_t i = 0; i < na; ++i) w += rank[i];

    std::vector<bool> pick(n, false);
    std::fill(pick.begin(), pick.begin() + long(na), true);
    std::sort(pick.begin(), pick.end());  // lowest lexicographic arrangement
    std::size_t below = 0, above = 0, total = 0;
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (pick[i]) s += rank[i];
        ++total;
        if (s <= w + 1e-9) ++below;
        if (s >= w - 1e-9) ++above;
    } while (std::next_permutation(pick.begin(), pick.end()));
    return std::min(1.0, 2.0 * double(std::min(below, above)) / double(total));
}

RatingGrid to_grid(const std::vector<std::vector<int>>& g) {
    RatingGrid out;
    for (const auto& row : g) {
        out.emplace_back();
        for (int v : row) out.back().push_back(v);
    }
    return out;
}

}  // namespace

TEST_CASE("alpha matches the pairwise definition on random grids") {
    Rng rng(801);
    int compared = 0;
    for (int it = 0; it < 100; ++it) {
        std::size_t nr = 2 + rng.below(4), ni = 4 + rng.below(5);
        RatingGrid g(nr, std::vector<std::optional<int>>(ni));
        for (auto& row : g)
            for (auto& cell : row)
                if (rng.uniform() > 0.15) cell = int(rng.below(5)) - 2;
        AgreementMetric metric = it % 2 ? AgreementMetric::Ordinal : AgreementMetric::Nominal;
        std::optional<double> want;
        try {
            want = alpha_oracle(g, metric);
        } catch (const AlphaDegenerate&) {
            CHECK_THROWS_AS(krippendorff_alpha(g, metric), DegenerateInputError);
            continue;
        }
        CHECK(krippendorff_alpha(g, metric) == doctest::Approx(*want).epsilon(1e-9));
        ++compared;
    }
    CHECK(compared > 50);  // the generator mostly produces live instances
}

TEST_CASE("alpha endpoints and structure") {
    // two raters in perfect agreement over varied ratings
    RatingGrid perfect = to_grid({{0, 1, 2, 0, 1}, {0, 1, 2, 0, 1}});
    CHECK(krippendorff_alpha(perfect) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(krippendorff_alpha(perfect, AgreementMetric::Nominal) ==
          doctest::Approx(1.0).epsilon(1e-12));

    // items with a single rating drop out: adding one must not move alpha
    RatingGrid padded = perfect;
    for (auto& row : padded) row.push_back(std::nullopt);
    padded[0].back() = 2;
    CHECK(krippendorff_alpha(padded) == doctest::Approx(krippendorff_alpha(perfect)));

    // ordinal weighs distant categories harder than nominal on this grid
    RatingGrid off = to_grid({{0, 1, 2, 2}, {2, 1, 0, 2}});
    CHECK(krippendorff_alpha(off, AgreementMetric::Ordinal) !=
          doctest::Approx(krippendorff_alpha(off, AgreementMetric::Nominal)).epsilon(1e-6));

    CHECK_THROWS_AS(krippendorff_alpha(to_grid({{1, 1}, {1, 1}})), DegenerateInputError);
    RatingGrid ragged = to_grid({{1, 2}, {1, 2}});
    ragged[1].pop_back();
    CHECK_THROWS_AS(krippendorff_alpha(ragged), ContractError);
    // only one usable item
    RatingGrid thin(2, std::vector<std::optional<int>>(3));
    thin[0][0] = 1;
    thin[1][0] = 2;
    thin[0][1] = 1;
    CHECK_THROWS_AS(krippendorff_alpha(thin), DegenerateInputError);
}

TEST_CASE("fleiss kappa matches the pairwise expansion on random grids") {
    Rng rng(802);
    int compared = 0;
    for (int it = 0; it < 100; ++it) {
        std::size_t nr = 2 + rng.below(5), ni = 2 + rng.below(7);
        std::vector<std::vector<int>> g(nr, std::vector<int>(ni));
        for (auto& row : g)
            for (int& v : row) v = int(rng.below(3));
        bool single = true;
        for (const auto& row : g)
            for (int v : row) single = single && v == g[0][0];
        if (single) {
            CHECK_THROWS_AS(fleiss_kappa(g), DegenerateInputError);
            continue;
        }
        CHECK(fleiss_kappa(g) == doctest::Approx(kappa_oracle(g)).epsilon(1e-9));
        ++compared;
    }
    CHECK(compared > 90);
}

TEST_CASE("fleiss kappa endpoints") {
    CHECK(fleiss_kappa({{0, 1, 0, 1}, {0, 1, 0, 1}, {0, 1, 0, 1}}) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(fleiss_kappa({{1, 1}, {1, 1}}), DegenerateInputError);
    CHECK_THROWS_AS(fleiss_kappa({{1, 2}}), ValidationError);                // one rater
    CHECK_THROWS_AS(fleiss_kappa({{1}, {2}}), ValidationError);             // one item
    CHECK_THROWS_AS(fleiss_kappa({{1, 2}, {1, 2}, {1}}), ContractError);    // ragged
}

TEST_CASE("null-distribution kappa centers on zero") {
    Rng rng(803);
    double acc = 0.0;
    int n_grids = 200;
    for (int it = 0; it < n_grids; ++it) {
        std::vector<std::vector<int>> g(6, std::vector<int>(40));
        for (auto& row : g)
            for (int& v : row) v = int(rng.below(2));
        acc += fleiss_kappa(g);
    }
    CHECK(std::abs(acc / n_grids) < 0.05);
}

TEST_CASE("thresholding") {
    SUBCASE("per-rater mean, strict inequality") {
        RatingGrid g = to_grid({{1, 2, 2}, {2, 2, 2}});
        RatingGrid lab = threshold_labels(g, ThresholdScheme::PerRaterMean);
        CHECK(lab[0] == std::vector<std::optional<int>>{0, 1, 1});  // mean 5/3
        CHECK(lab[1] == std::vector<std::optional<int>>{0, 0, 0});  // 2 > 2 is false
    }
    SUBCASE("per-rater mean demands completeness") {
        RatingGrid g = to_grid({{1, 2}, {1, 2}});
        g[1][0] = std::nullopt;
        CHECK_THROWS_AS(threshold_labels(g, ThresholdScheme::PerRaterMean), MissingDataError);
    }
    SUBCASE("grand mean pools every rating and keeps holes") {
        RatingGrid g = to_grid({{0, 4}, {0, 2}});
        g[1][0] = std::nullopt;  // ratings 0, 4, 2 -> mean 2
        RatingGrid lab = threshold_labels(g, ThresholdScheme::GrandMean);
        CHECK(lab[0] == std::vector<std::optional<int>>{0, 1});
        CHECK_FALSE(lab[1][0].has_value());
        CHECK(lab[1][1] == 0);  // 2 > 2 is false
    }
    SUBCASE("no ratings at all") {
        RatingGrid g(2, std::vector<std::optional<int>>(3));
        CHECK_THROWS_AS(threshold_labels(g, ThresholdScheme::GrandMean), MissingDataError);
    }
}

TEST_CASE("dense grid") {
    RatingGrid g = to_grid({{1, 2}, {3, 4}});
    auto d = dense_grid(g);
    REQUIRE(d.has_value());
    CHECK(*d == std::vector<std::vector<int>>{{1, 2}, {3, 4}});
    g[0][1] = std::nullopt;
    CHECK_FALSE(dense_grid(g).has_value());
}

TEST_CASE("pearson test against an integration oracle") {
    Rng rng(804);
    for (int it = 0; it < 25; ++it) {
        std::size_t n = 4 + rng.below(12);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.gauss();
            y[i] = 0.6 * x[i] + rng.gauss();
        }
        CorrelationTest t = pearson_test(x, y);
        CHECK(t.r >= -1.0);
        CHECK(t.r <= 1.0);
        if (t.r * t.r >= 1.0) continue;
        double tstat = t.r * std::sqrt(double(n - 2) / (1.0 - t.r * t.r));
        CHECK(t.p == doctest::Approx(t_two_sided_p(tstat, double(n - 2))).epsilon(1e-6));
    }
}

TEST_CASE("pearson endpoints and failure modes") {
    CHECK(pearson_test({0, 1, 2}, {0, 2, 4}).p == 0.0);
    CHECK(pearson_test({0, 1, 2}, {0, 2, 4}).r == doctest::Approx(1.0));
    CHECK(pearson_test({0, 1, 2}, {4, 2, 0}).r == doctest::Approx(-1.0));
    CHECK(pearson_test({0, 1, 2}, {1, 0, 1}).r == doctest::Approx(0.0));
    CHECK(pearson_test({0, 1, 2}, {1, 0, 1}).p == doctest::Approx(1.0));

    // more correlation, less p, same n
    std::vector<double> x = {0, 1, 2, 3, 4, 5};
    CHECK(pearson_test(x, {0.1, 0.9, 2.2, 2.8, 4.1, 4.9}).p <
          pearson_test(x, {1.0, 0.0, 2.5, 2.0, 5.0, 3.0}).p);

    CHECK_THROWS_AS(pearson_test({1, 2}, {1, 2, 3}), ContractError);
    CHECK_THROWS_AS(pearson_test({1, 2}, {1, 2}), ValidationError);
    CHECK_THROWS_AS(pearson_test({1, 1, 1}, {1, 2, 3}), DegenerateInputError);
}

namespace {

// step-up search spelled top-down
std::vector<bool> bh_oracle(const std::vector<double>& p, double q) {
    std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    std::vector<bool> out(m, false);
    for (std::size_t k = m; k >= 1; --k) {
        if (p[order[k - 1]] <= double(k) * q / double(m)) {
            for (std::size_t i = 0; i < k; ++i) out[order[i]] = true;
            break;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("benjamini-hochberg matches enumeration") {
    Rng rng(805);
    for (int it = 0; it < 300; ++it) {
        std::size_t m = 1 + rng.below(12);
        std::vector<double> p(m);
        for (auto& v : p) v = rng.below(4) == 0 ? rng.uniform() * 0.08 : rng.uniform();
        double q = 0.01 + rng.uniform() * 0.2;
        CHECK(benjamini_hochberg(p, q) == bh_oracle(p, q));
    }
}

TEST_CASE("benjamini-hochberg behavior") {
    // the step-up jump: no p passes its own threshold until the last rank
    std::vector<bool> all = benjamini_hochberg({0.04, 0.045, 0.046}, 0.05);
    CHECK(all == std::vector<bool>{true, true, true});

    std::vector<bool> two = benjamini_hochberg({0.01, 0.9, 0.02, 0.04}, 0.05);
    CHECK(two == std::vector<bool>{true, false, true, false});

    CHECK(benjamini_hochberg({}, 0.05).empty());

    // growing q never drops a rejection
    Rng rng(806);
    for (int it = 0; it < 50; ++it) {
        std::vector<double> p(8);
        for (auto& v : p) v = rng.uniform();
        auto lo = benjamini_hochberg(p, 0.05);
        auto hi = benjamini_hochberg(p, 0.2);
        for (std::size_t i = 0; i < p.size(); ++i)
            if (lo[i]) CHECK(hi[i]);
    }

    CHECK_THROWS_AS(benjamini_hochberg({0.5}, 0.0), ValidationError);
    CHECK_THROWS_AS(benjamini_hochberg({0.5}, 1.0), ValidationError);
    CHECK_THROWS_AS(benjamini_hochberg({1.5}, 0.05), ValidationError);
    CHECK_THROWS_AS(benjamini_hochberg({-0.1}, 0.05), ValidationError);
}

TEST_CASE("rank sum on separated samples") {
    RankSumResult r = wilcoxon_ranksum({1, 2, 3}, {10, 11, 12});
    CHECK(r.rank_sum == 6.0);
    CHECK(r.U == 0.0);
    CHECK(r.exact);
    CHECK(r.p == doctest::Approx(0.1).epsilon(1e-12));  // 2 * 1/20
    CHECK(r.p_normal > 0.0);
    CHECK(r.p_normal < 1.0);
}

TEST_CASE("rank sum with ties and identical samples") {
    SUBCASE("identical multisets are maximally null") {
        RankSumResult r = wilcoxon_ranksum({1, 2}, {1, 2});
        CHECK(r.p == 1.0);
        CHECK(r.rank_sum == 5.0);  // midranks 1.5 + 3.5
    }
    SUBCASE("midranks") {
        RankSumResult r = wilcoxon_ranksum({1, 1}, {1, 2});
        CHECK(r.rank_sum == 4.0);  // two midranks of 2
    }
    SUBCASE("all values equal") {
        RankSumResult r = wilcoxon_ranksum({3, 3, 3}, {3, 3});
        CHECK(r.p == 1.0);
        CHECK(r.p_normal == 1.0);
    }
}

TEST_CASE("rank sum invariances") {
    Rng rng(807);
    std::vector<double> a, b;
    for (int i = 0; i < 5; ++i) a.push_back(rng.gauss());
    for (int i = 0; i < 6; ++i) b.push_back(rng.gauss() + 0.7);

    RankSumResult base = wilcoxon_ranksum(a, b);
    auto a2 = a;
    auto b2 = b;
    rng.shuffle(a2);
    rng.shuffle(b2);
    RankSumResult shuffled = wilcoxon_ranksum(a2, b2);
    CHECK(shuffled.rank_sum == base.rank_sum);
    CHECK(shuffled.p == base.p);

    RankSumResult swapped = wilcoxon_ranksum(b, a);
    CHECK(swapped.U == doctest::Approx(5.0 * 6.0 - base.U));
    CHECK(swapped.p == doctest::Approx(base.p).epsilon(1e-12));
}

TEST_CASE("rank sum exact path matches an independent enumeration") {
    Rng rng(808);
    for (int it = 0; it < 30; ++it) {
        std::size_t na = 2 + rng.below(4), nb = 2 + rng.below(4);
        std::vector<double> a(na), b(nb);
        for (auto& v : a) v = double(rng.below(6));  // coarse values force ties
        for (auto& v : b) v = double(rng.below(6));
        RankSumResult r = wilcoxon_ranksum(a, b);
        REQUIRE(r.exact);
        CHECK(r.p == doctest::Approx(ranksum_exact_oracle(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("rank sum normal approximation tracks the exact tail at 6+6") {
    Rng rng(809);
    for (int it = 0; it < 50; ++it) {
        std::vector<double> a(6), b(6);
        for (auto& v : a) v = rng.gauss();
        for (auto& v : b) v = rng.gauss() + (it % 3 == 0 ? 1.5 : 0.0);
        RankSumResult r = wilcoxon_ranksum(a, b);
        REQUIRE(r.exact);
        CHECK(std::abs(r.p - r.p_normal) <= 0.02);
    }
}

TEST_CASE("rank sum switches to the approximation past twelve") {
    std::vector<double> a = {1, 2, 3, 4, 5, 6, 7};
    std::vector<double> b = {1.5, 2.5, 3.5, 4.5, 5.5, 6.5};
    RankSumResult r = wilcoxon_ranksum(a, b);
    CHECK_FALSE(r.exact);
    CHECK(r.p == r.p_normal);

    CHECK_THROWS_AS(wilcoxon_ranksum({}, {1.0}), ValidationError);
    CHECK_THROWS_AS(wilcoxon_ranksum({1.0}, {}), ValidationError);
}

namespace {

DatasetManifest ratings_manifest() {
    DatasetManifest m;
    const int n_items = 8;
    for (int i = 0; i < n_items; ++i) {
        VideoRecord v;
        v.id = "ad" + std::to_string(i);
        v.duration_s = 30.0;
        v.frame_width = 64;
        v.frame_height = 64;
        v.expert_valence = i % 2 ? ExpertLabel::High : ExpertLabel::Low;
        v.expert_arousal = i < 4 ? ExpertLabel::High : ExpertLabel::Low;
        m.videos.push_back(v);
    }
    RatingMatrix& rm = m.ratings;
    rm.raters = {"r1", "r2", "r3"};
    for (int i = 0; i < n_items; ++i) rm.items.push_back("ad" + std::to_string(i));
    Rng rng(810);
    rm.valence.assign(3, std::vector<std::optional<int>>(n_items));
    rm.arousal.assign(3, std::vector<std::optional<int>>(n_items));
    for (std::size_t r = 0; r < 3; ++r)
        for (int u = 0; u < n_items; ++u) {
            int base = u % 2 ? 1 : -1;
            rm.valence[r][std::size_t(u)] = std::clamp(base + int(rng.below(3)) - 1, -2, 2);
            rm.arousal[r][std::size_t(u)] = std::clamp(2 + base + int(rng.below(3)) - 1, 0, 4);
        }
    return m;
}

}  // namespace

TEST_CASE("agreement report structure") {
    tu::TempDir td("stats_rep");
    DatasetManifest m = ratings_manifest();
    auto p = td.path() / "agreement.json";
    write_agreement_report(m, p, 0.1);
    auto j = nlohmann::json::parse(tu::read_text(p));

    CHECK(j.at("alpha").at("valence").is_number());
    CHECK(j.at("alpha").at("arousal").is_number());
    for (const char* scheme : {"per_rater_mean", "grand_mean"})
        for (const char* dim : {"valence", "arousal"})
            CHECK(j.at("kappa").at(scheme).at(dim).is_number());

    CHECK(j.at("pearson").at("q").get<double>() == 0.1);
    const auto& tests = j.at("pearson").at("tests");
    REQUIRE(tests.size() == 3);
    for (const auto& row : tests) {
        CHECK(row.contains("rater"));
        CHECK(row.at("n").get<int>() == 8);
        CHECK(row.contains("r"));
        CHECK(row.contains("p"));
        CHECK(row.contains("significant"));
    }

    for (const char* dim : {"valence", "arousal"}) {
        const auto& rs = j.at("ranksum").at(dim);
        CHECK(rs.at("n_high").get<int>() == 4);
        CHECK(rs.at("n_low").get<int>() == 4);
        CHECK(rs.at("exact").get<bool>());
        CHECK(rs.at("p").get<double>() <= 1.0);
        CHECK_FALSE(rs.contains("skipped_items"));
    }
}

TEST_CASE("agreement report error branches") {
    tu::TempDir td("stats_err");
    DatasetManifest m = ratings_manifest();

    SUBCASE("no ratings at all") {
        m.ratings = RatingMatrix{};
        CHECK_THROWS_AS(write_agreement_report(m, td.path() / "a.json"), MissingDataError);
    }
    SUBCASE("constant valence degrades gracefully") {
        for (auto& row : m.ratings.valence)
            for (auto& cell : row) cell = 1;
        write_agreement_report(m, td.path() / "a.json");
        auto j = nlohmann::json::parse(tu::read_text(td.path() / "a.json"));
        CHECK(j.at("alpha").at("valence").contains("error"));
        CHECK(j.at("alpha").at("arousal").is_number());
        // constant ratings also sink the per-rater pearson tests
        for (const auto& row : j.at("pearson").at("tests")) CHECK(row.contains("error"));
    }
    SUBCASE("a hole in the grid disables the kappas but not alpha") {
        m.ratings.valence[1][2] = std::nullopt;
        write_agreement_report(m, td.path() / "a.json");
        auto j = nlohmann::json::parse(tu::read_text(td.path() / "a.json"));
        CHECK(j.at("kappa").at("per_rater_mean").at("valence").contains("error"));
        CHECK(j.at("kappa").at("grand_mean").at("valence").contains("error"));
        CHECK(j.at("kappa").at("per_rater_mean").at("arousal").is_number());
        CHECK(j.at("alpha").at("valence").is_number());
    }
    SUBCASE("items outside the manifest are listed as skipped") {
        m.ratings.items[5] = "ghost";
        write_agreement_report(m, td.path() / "a.json");
        auto j = nlohmann::json::parse(tu::read_text(td.path() / "a.json"));
        auto sk = j.at("ranksum").at("valence").at("skipped_items");
        REQUIRE(sk.size() == 1);
        CHECK(sk[0].get<std::string>() == "ghost");
    }
    SUBCASE("one-sided expert labels") {
        for (auto& v : m.videos) v.expert_valence = ExpertLabel::High;
        write_agreement_report(m, td.path() / "a.json");
        auto j = nlohmann::json::parse(tu::read_text(td.path() / "a.json"));
        CHECK(j.at("ranksum").at("valence").contains("error"));
        CHECK_FALSE(j.at("ranksum").at("arousal").contains("error"));
    }
}
