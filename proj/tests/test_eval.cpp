#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "affchan/common.hpp"
#include "affchan/eval.hpp"
#include "affchan/rng.hpp"
#include "support/testutil.hpp"

using namespace affchan;

namespace {

// f1 spelled through the equivalent single-fraction form
double f1_oracle(const std::vector<int>& t, const std::vector<int>& p) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] == 1 && p[i] == 1) tp++;
        if (t[i] != 1 && p[i] == 1) fp++;
        if (t[i] == 1 && p[i] != 1) fn++;
    }
    double denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2 * tp / denom;
}

// design over `n_groups` videos, `per` rows each, alternating labels inside a
// group, clearly separable in the first coordinate
DesignMatrix separable_design(Rng& rng, int n_groups, int per, std::size_t d = 2) {
    DesignMatrix m;
    m.dim = d;
    for (int g = 0; g < n_groups; ++g)
        for (int i = 0; i < per; ++i) {
            int cls = i % 2 == 0 ? 1 : -1;
            std::vector<double> row(d, 0.0);
            row[0] = cls * 5.0 + rng.gauss() * 0.3;
            for (std::size_t j = 1; j < d; ++j) row[j] = rng.gauss();
            m.X.push_back(std::move(row));
            m.y.push_back(cls);
            m.groups.push_back("vid" + std::to_string(g));
        }
    return m;
}

DesignSet all_keys(const DesignMatrix& d, ChannelKind ch) {
    DesignSet s;
    for (AffectDim dim : {AffectDim::Valence, AffectDim::Arousal})
        for (Window w : all_windows()) s.emplace(design_key(ch, dim, w), d);
    return s;
}

}  // namespace

TEST_CASE("f1 matches the closed form on random label vectors") {
    Rng rng(701);
    for (int it = 0; it < 2000; ++it) {
        std::size_t n = 1 + rng.below(30);
        std::vector<int> t(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = rng.below(2) ? 1 : -1;
            p[i] = rng.below(2) ? 1 : -1;
        }
        CHECK(f1_score(t, p) == doctest::Approx(f1_oracle(t, p)).epsilon(1e-12));
    }
    CHECK(f1_score({1, 1, -1}, {1, 1, -1}) == 1.0);
    CHECK(f1_score({1, -1}, {-1, 1}) == 0.0);
    CHECK(f1_score({-1, -1}, {-1, -1}) == 0.0);  // positive-free is scored zero
    CHECK(f1_score({1, 1, 1, -1}, {1, 1, -1, 1}) ==
          doctest::Approx(2.0 * 2 / (2.0 * 2 + 1 + 1)));
    CHECK_THROWS_AS(f1_score({1}, {1, 1}), ContractError);
    CHECK_THROWS_AS(f1_score({}, {}), ContractError);
}

TEST_CASE("group fold assignment properties") {
    Rng rng(702);
    for (int it = 0; it < 100; ++it) {
        int k = int(2 + rng.below(6));
        int n_groups = int(std::uint64_t(k) + rng.below(20));
        std::vector<std::string> groups;
        for (int g = 0; g < n_groups; ++g) {
            int reps = int(1 + rng.below(4));
            for (int r = 0; r < reps; ++r) groups.push_back("g" + std::to_string(g));
        }
        rng.shuffle(groups);
        auto fold = assign_group_folds(groups, k, it);
        REQUIRE(fold.size() == groups.size());

        std::map<std::string, int> fold_of;
        for (std::size_t i = 0; i < groups.size(); ++i) {
            CHECK(fold[i] >= 0);
            CHECK(fold[i] < k);
            auto [pos, fresh] = fold_of.emplace(groups[i], fold[i]);
            if (!fresh) CHECK(pos->second == fold[i]);  // a group never splits
        }
        std::vector<int> per_fold(std::size_t(k), 0);
        for (const auto& [g, f] : fold_of) per_fold[std::size_t(f)]++;
        auto [lo, hi] = std::minmax_element(per_fold.begin(), per_fold.end());
        CHECK(*hi - *lo <= 1);

        CHECK(assign_group_folds(groups, k, it) == fold);  // seeded determinism
    }
    CHECK_THROWS_AS(assign_group_folds({"a"}, 0, 1), ValidationError);

    // the seed actually moves the partition
    std::vector<std::string> g;
    for (int i = 0; i < 20; ++i) g.push_back("g" + std::to_string(i));
    CHECK(assign_group_folds(g, 4, 1) != assign_group_folds(g, 4, 2));
}

namespace {

// remembers the training groups; flags any held-out row whose group it saw
class LeakProbe : public Learner {
  public:
    void fit(const Matrix& X, const std::vector<int>&, const std::vector<std::string>&,
             std::uint64_t) override {
        seen_.clear();
        for (const auto& r : X) seen_.insert(r[0]);
    }
    int predict(const std::vector<double>& x) const override {
        return seen_.count(x[0]) ? -1 : 1;
    }

  private:
    std::set<double> seen_;
};

}  // namespace

TEST_CASE("no video group ever leaks between train and test") {
    // rows carry their group id in x[0]; every label is +1, so a clean
    // partition scores exactly 1 on every fold and any leak drops below 1
    Rng rng(703);
    for (std::uint64_t plan_it = 0; plan_it < 100; ++plan_it) {
        int n_groups = int(5 + rng.below(20));
        DesignMatrix d;
        d.dim = 1;
        for (int g = 0; g < n_groups; ++g) {
            int rows = int(1 + rng.below(4));
            for (int r = 0; r < rows; ++r) {
                d.X.push_back({double(g)});
                d.y.push_back(1);
                d.groups.push_back("v" + std::to_string(g));
            }
        }
        CvPlan plan;
        plan.repetitions = 2;
        plan.folds = 5;
        plan.seed = plan_it;
        DesignSet designs;
        designs.emplace(design_key(ChannelKind::Video, AffectDim::Valence, Window::All), d);
        auto rep = run_protocol(designs, {ChannelKind::Video}, {ClassifierKind::Lda}, plan,
                                [](ClassifierKind) { return std::make_unique<LeakProbe>(); });
        const CellStat& c = rep.cells.at(
            cell_key(ChannelKind::Video, ClassifierKind::Lda, AffectDim::Valence, Window::All));
        REQUIRE(c.available);
        REQUIRE(c.scores.size() == 10);
        for (double s : c.scores) CHECK(s == 1.0);
    }
}

TEST_CASE("a full plan yields exactly repetitions x folds scores") {
    Rng rng(704);
    DesignMatrix d = separable_design(rng, 8, 4);
    CvPlan plan;
    plan.repetitions = 10;
    plan.folds = 5;
    plan.seed = 9;
    DesignSet designs;
    designs.emplace(design_key(ChannelKind::Gist, AffectDim::Valence, Window::All), d);
    auto rep = run_protocol(designs, {ChannelKind::Gist}, {ClassifierKind::Lda}, plan);
    const CellStat& c = rep.cells.at(
        cell_key(ChannelKind::Gist, ClassifierKind::Lda, AffectDim::Valence, Window::All));
    REQUIRE(c.available);
    CHECK(c.scores.size() == 50);
    // separable data with mixed groups: every fold is perfect
    CHECK(c.mean == 1.0);
    CHECK(c.stddev == 0.0);
    CHECK(c.best);
}

TEST_CASE("missing designs and starved groups become NA cells") {
    Rng rng(705);
    DesignMatrix d = separable_design(rng, 3, 4);  // 3 groups < 5 folds
    CvPlan plan;
    DesignSet designs = all_keys(d, ChannelKind::Gist);
    designs.erase(design_key(ChannelKind::Gist, AffectDim::Arousal, Window::L10));
    auto rep = run_protocol(designs, {ChannelKind::Gist}, {ClassifierKind::Lda}, plan);
    for (AffectDim dim : {AffectDim::Valence, AffectDim::Arousal})
        for (Window w : all_windows()) {
            const CellStat& c =
                rep.cells.at(cell_key(ChannelKind::Gist, ClassifierKind::Lda, dim, w));
            CHECK_FALSE(c.available);
            CHECK(c.scores.empty());
        }
    CHECK(rep.warnings.size() == 6);
    int starved = 0, missing = 0;
    for (const auto& w : rep.warnings) {
        starved += w.find("groups for") != std::string::npos;
        missing += w.find("no design matrix") != std::string::npos;
    }
    CHECK(starved == 5);
    CHECK(missing == 1);
}

TEST_CASE("protocol plan validation") {
    DesignSet designs;
    CvPlan plan;
    plan.repetitions = 0;
    CHECK_THROWS_AS(run_protocol(designs, {}, {}, plan), ValidationError);
    plan.repetitions = 1;
    plan.folds = 1;
    CHECK_THROWS_AS(run_protocol(designs, {}, {}, plan), ValidationError);
}

namespace {

class SignProbe : public Learner {
  public:
    void fit(const Matrix&, const std::vector<int>&, const std::vector<std::string>&,
             std::uint64_t) override {}
    int predict(const std::vector<double>& x) const override { return x[0] >= 0 ? 1 : -1; }
};

}  // namespace

TEST_CASE("majority vote scores per video") {
    // video a: frames vote 2-1 for +1; video b: frames vote 2-1 for -1
    DesignMatrix d;
    d.dim = 1;
    d.X = {{1}, {1}, {-1}, {-1}, {-1}, {1}};
    d.y = {1, 1, 1, -1, -1, -1};
    d.groups = {"a", "a", "a", "b", "b", "b"};
    DesignSet designs;
    designs.emplace(design_key(ChannelKind::Video, AffectDim::Valence, Window::All), d);
    auto factory = [](ClassifierKind) { return std::make_unique<SignProbe>(); };

    CvPlan plan;
    plan.repetitions = 1;
    plan.folds = 2;

    auto frame_rep = run_protocol(designs, {ChannelKind::Video}, {ClassifierKind::Lda}, plan,
                                  factory);
    plan.majority_vote = true;
    auto mv_rep = run_protocol(designs, {ChannelKind::Video}, {ClassifierKind::Lda}, plan,
                               factory);

    auto key =
        cell_key(ChannelKind::Video, ClassifierKind::Lda, AffectDim::Valence, Window::All);
    auto frame = frame_rep.cells.at(key).scores;
    auto mv = mv_rep.cells.at(key).scores;
    std::sort(frame.begin(), frame.end());
    std::sort(mv.begin(), mv.end());
    // frame level: held-out a drops a positive, held-out b has one false alarm
    REQUIRE(frame.size() == 2);
    CHECK(frame[0] == 0.0);
    CHECK(frame[1] == doctest::Approx(0.8).epsilon(1e-12));
    // vote level: a flips clean to +1, b's false alarm is outvoted
    CHECK(mv == std::vector<double>{0.0, 1.0});
}

TEST_CASE("majority vote breaks ties toward the positive class") {
    DesignMatrix d;
    d.dim = 1;
    d.X = {{1}, {-1}, {-1}, {-1}};
    d.y = {1, 1, -1, -1};
    d.groups = {"c", "c", "d", "d"};
    DesignSet designs;
    designs.emplace(design_key(ChannelKind::Video, AffectDim::Valence, Window::All), d);
    CvPlan plan;
    plan.repetitions = 1;
    plan.folds = 2;
    plan.majority_vote = true;
    auto rep = run_protocol(designs, {ChannelKind::Video}, {ClassifierKind::Lda}, plan,
                            [](ClassifierKind) { return std::make_unique<SignProbe>(); });
    auto scores = rep.cells
                      .at(cell_key(ChannelKind::Video, ClassifierKind::Lda,
                                   AffectDim::Valence, Window::All))
                      .scores;
    std::sort(scores.begin(), scores.end());
    // held-out c: frame votes split 1-1, the tie resolves to +1 == truth
    CHECK(scores == std::vector<double>{0.0, 1.0});
}

namespace {

// deterministic but fold-dependent scores: correct only on even-numbered groups
class ParityProbe : public Learner {
  public:
    void fit(const Matrix&, const std::vector<int>&, const std::vector<std::string>&,
             std::uint64_t) override {}
    int predict(const std::vector<double>& x) const override {
        return int(x[0]) % 2 == 0 ? 1 : -1;
    }
};

}  // namespace

TEST_CASE("sigma over folds vs sigma over repetition means") {
    DesignMatrix d;
    d.dim = 1;
    for (int g = 0; g < 10; ++g) {
        d.X.push_back({double(g)});
        d.y.push_back(1);
        d.groups.push_back("v" + std::to_string(g));
    }
    DesignSet designs;
    designs.emplace(design_key(ChannelKind::Video, AffectDim::Valence, Window::All), d);
    auto factory = [](ClassifierKind) { return std::make_unique<ParityProbe>(); };
    auto key =
        cell_key(ChannelKind::Video, ClassifierKind::Lda, AffectDim::Valence, Window::All);

    CvPlan plan;
    plan.repetitions = 4;
    plan.folds = 5;
    plan.seed = 31;

    auto fold_rep = run_protocol(designs, {ChannelKind::Video}, {ClassifierKind::Lda}, plan,
                                 factory);
    plan.std_over_reps = true;
    auto reps_rep = run_protocol(designs, {ChannelKind::Video}, {ClassifierKind::Lda}, plan,
                                 factory);

    const auto& a = fold_rep.cells.at(key);
    const auto& b = reps_rep.cells.at(key);
    CHECK(a.scores == b.scores);  // the sigma mode never moves the scores
    CHECK(a.mean == b.mean);

    auto mean_of = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x;
        return s / double(v.size());
    };
    auto sstd = [&](const std::vector<double>& v) {
        double mu = mean_of(v), s = 0;
        for (double x : v) s += (x - mu) * (x - mu);
        return std::sqrt(s / double(v.size() - 1));
    };
    CHECK(a.stddev == doctest::Approx(sstd(a.scores)).epsilon(1e-12));
    std::vector<double> rep_means;
    for (int r = 0; r < 4; ++r)
        rep_means.push_back(mean_of({a.scores.begin() + r * 5, a.scores.begin() + (r + 1) * 5}));
    CHECK(b.stddev == doctest::Approx(sstd(rep_means)).epsilon(1e-12));
    CHECK(a.stddev > 0.0);  // the probe really does vary across folds
    CHECK(a.stddev != b.stddev);
}

namespace {

class YesProbe : public Learner {
  public:
    void fit(const Matrix&, const std::vector<int>&, const std::vector<std::string>&,
             std::uint64_t) override {}
    int predict(const std::vector<double>&) const override { return 1; }
};

class RecordingProbe : public Learner {
  public:
    RecordingProbe(ClassifierKind kind, std::vector<std::pair<ClassifierKind, std::string>>* log)
        : kind_(kind), log_(log) {}
    void fit(const Matrix&, const std::vector<int>&, const std::vector<std::string>& groups,
             std::uint64_t) override {
        std::vector<std::string> uniq;
        for (const auto& g : groups)
            if (std::find(uniq.begin(), uniq.end(), g) == uniq.end()) uniq.push_back(g);
        std::sort(uniq.begin(), uniq.end());
        std::string sig;
        for (const auto& g : uniq) sig += g + "|";
        log_->push_back({kind_, sig});
    }
    int predict(const std::vector<double>&) const override { return 1; }

  private:
    ClassifierKind kind_;
    std::vector<std::pair<ClassifierKind, std::string>>* log_;
};

}  // namespace

TEST_CASE("every classifier sees identical fold partitions") {
    Rng rng(706);
    DesignMatrix d = separable_design(rng, 9, 2);
    DesignSet designs;
    designs.emplace(design_key(ChannelKind::Gist, AffectDim::Valence, Window::All), d);
    CvPlan plan;
    plan.repetitions = 3;
    plan.folds = 3;
    plan.seed = 77;
    std::vector<std::pair<ClassifierKind, std::string>> log;
    run_protocol(designs, {ChannelKind::Gist},
                 {ClassifierKind::Lda, ClassifierKind::LinearSvm}, plan,
                 [&](ClassifierKind k) { return std::make_unique<RecordingProbe>(k, &log); });

    std::vector<std::string> lda, lsvm;
    for (const auto& [k, sig] : log)
        (k == ClassifierKind::Lda ? lda : lsvm).push_back(sig);
    REQUIRE(lda.size() == 9);
    CHECK(lda == lsvm);
}

TEST_CASE("best flags mark the column maxima") {
    Rng rng(707);
    DesignMatrix d = separable_design(rng, 8, 4);
    DesignSet designs = all_keys(d, ChannelKind::Gist);
    CvPlan plan;
    plan.repetitions = 2;
    plan.folds = 4;
    // lda probe is perfect, the all-positive probe is not
    auto factory = [](ClassifierKind k) -> std::unique_ptr<Learner> {
        if (k == ClassifierKind::Lda) return std::make_unique<SignProbe>();
        return std::make_unique<YesProbe>();
    };
    auto rep = run_protocol(designs, {ChannelKind::Gist},
                            {ClassifierKind::Lda, ClassifierKind::LinearSvm}, plan, factory);
    for (AffectDim dim : {AffectDim::Valence, AffectDim::Arousal})
        for (Window w : all_windows()) {
            const auto& lda =
                rep.cells.at(cell_key(ChannelKind::Gist, ClassifierKind::Lda, dim, w));
            const auto& lsvm =
                rep.cells.at(cell_key(ChannelKind::Gist, ClassifierKind::LinearSvm, dim, w));
            CHECK(lda.mean > lsvm.mean);
            CHECK(lda.best);
            CHECK_FALSE(lsvm.best);
        }
}

TEST_CASE("fixed seed reproduces results byte for byte") {
    tu::TempDir td("eval_det");
    Rng rng(708);
    DesignMatrix d = separable_design(rng, 8, 3, 3);
    DesignSet designs = all_keys(d, ChannelKind::Gist);
    CvPlan plan;
    plan.repetitions = 3;
    plan.folds = 3;
    plan.seed = 12345;

    for (const char* sub : {"one", "two"}) {
        auto rep = run_protocol(designs, {ChannelKind::Gist}, {ClassifierKind::Lda}, plan);
        emit_report(rep, td.path() / sub);
    }
    CHECK(tu::read_text(td.path() / "one" / "results.csv") ==
          tu::read_text(td.path() / "two" / "results.csv"));
    CHECK(tu::read_text(td.path() / "one" / "results.json") ==
          tu::read_text(td.path() / "two" / "results.json"));
    CHECK(tu::read_text(td.path() / "one" / "results.csv").find("NA") == std::string::npos);
}

TEST_CASE("results csv round-trips through the parser") {
    tu::TempDir td("eval_csv");
    EvalReport r;
    r.channels = {ChannelKind::ConstantBlur, ChannelKind::Gist};
    r.classifiers = {ClassifierKind::Lda, ClassifierKind::LinearSvm};
    Rng rng(709);
    for (ChannelKind ch : r.channels)
        for (ClassifierKind cl : r.classifiers)
            for (AffectDim dim : {AffectDim::Valence, AffectDim::Arousal})
                for (Window w : all_windows()) {
                    CellStat c;
                    // gist/lsvm column stays NA
                    if (!(ch == ChannelKind::Gist && cl == ClassifierKind::LinearSvm)) {
                        c.available = true;
                        // values exactly representable at four decimals
                        c.mean = double(rng.below(10000)) / 10000.0;
                        c.stddev = double(rng.below(1000)) / 10000.0;
                        c.best = ch == ChannelKind::ConstantBlur && cl == ClassifierKind::Lda;
                    }
                    r.cells[cell_key(ch, cl, dim, w)] = c;
                }
    emit_report(r, td.path() / "first");
    EvalReport parsed = parse_results_csv(td.path() / "first" / "results.csv");
    CHECK(parsed.channels == r.channels);
    CHECK(parsed.classifiers == r.classifiers);
    emit_report(parsed, td.path() / "second");
    CHECK(tu::read_text(td.path() / "first" / "results.csv") ==
          tu::read_text(td.path() / "second" / "results.csv"));
}

TEST_CASE("results csv parser rejects malformed input") {
    tu::TempDir td("eval_badcsv");
    auto p = td.path() / "results.csv";

    std::string header = "channel,classifier";
    for (const char* dim : {"valence", "arousal"})
        for (const char* win : {"all", "l30", "l10"})
            for (const char* suf : {"mean", "std", "best"})
                header += std::string(",") + dim + "_" + win + "_" + suf;

    SUBCASE("missing file") { CHECK_THROWS_AS(parse_results_csv(p), MissingDataError); }
    SUBCASE("empty file") {
        tu::write_text(p, "");
        CHECK_THROWS_AS(parse_results_csv(p), ParseError);
    }
    SUBCASE("foreign header") {
        tu::write_text(p, "channel,classifier,score\n");
        CHECK_THROWS_AS(parse_results_csv(p), ParseError);
    }
    SUBCASE("short row") {
        tu::write_text(p, header + "\ngist,lda,0.5\n");
        CHECK_THROWS_AS(parse_results_csv(p), ParseError);
    }
    SUBCASE("partial NA") {
        std::string row = "gist,lda,NA,0.1,0";
        for (int i = 0; i < 5; ++i) row += ",NA,NA,NA";
        tu::write_text(p, header + "\n" + row + "\n");
        CHECK_THROWS_AS(parse_results_csv(p), ParseError);
    }
    SUBCASE("bad best flag") {
        std::string row = "gist,lda,0.5,0.1,yes";
        for (int i = 0; i < 5; ++i) row += ",NA,NA,NA";
        tu::write_text(p, header + "\n" + row + "\n");
        CHECK_THROWS_AS(parse_results_csv(p), ParseError);
    }
    SUBCASE("bad number") {
        std::string row = "gist,lda,half,0.1,0";
        for (int i = 0; i < 5; ++i) row += ",NA,NA,NA";
        tu::write_text(p, header + "\n" + row + "\n");
        CHECK_THROWS_AS(parse_results_csv(p), ParseError);
    }
    SUBCASE("unknown channel") {
        std::string row = "warp,lda";
        for (int i = 0; i < 6; ++i) row += ",NA,NA,NA";
        tu::write_text(p, header + "\n" + row + "\n");
        CHECK_THROWS_AS(parse_results_csv(p), ParseError);
    }
}

TEST_CASE("run meta lands on disk as json") {
    tu::TempDir td("eval_meta");
    RunMeta m;
    m.seed = 99;
    m.config_hash = "deadbeef00112233";
    m.timings_s = {{"assemble", 1.5}, {"protocol", 2.25}};
    write_run_meta(m, td.path() / "run_meta.json");
    auto j = nlohmann::json::parse(tu::read_text(td.path() / "run_meta.json"));
    CHECK(j.at("seed").get<std::uint64_t>() == 99);
    CHECK(j.at("config_hash").get<std::string>() == "deadbeef00112233");
    CHECK(j.at("timings_s").at("assemble").get<double>() == 1.5);
    CHECK(j.at("timings_s").at("protocol").get<double>() == 2.25);
}
