#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "affchan/common.hpp"
#include "affchan/features.hpp"
#include "affchan/rng.hpp"
#include "support/testutil.hpp"

using namespace affchan;
namespace fs = std::filesystem;

namespace {

FeatureTable make_table(ChannelKind ch, const std::string& vid, std::size_t dim,
                        std::vector<int> frame_index, std::uint64_t seed) {
    FeatureTable t;
    t.channel = ch;
    t.video_id = vid;
    t.dim = dim;
    t.frame_index = std::move(frame_index);
    Rng rng(seed);
    for (std::size_t r = 0; r < t.frame_index.size(); ++r) {
        std::vector<float> row(dim);
        for (auto& v : row) v = float(rng.uniform() * 2.0 - 1.0);
        t.rows.push_back(std::move(row));
    }
    return t;
}

VideoRecord make_video(const std::string& id, double dur, ExpertLabel val, ExpertLabel aro) {
    VideoRecord v;
    v.id = id;
    v.duration_s = dur;
    v.frame_width = 64;
    v.frame_height = 64;
    v.expert_valence = val;
    v.expert_arousal = aro;
    return v;
}

void append_byte(const fs::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::app);
    out.put('\0');
}

}  // namespace

TEST_CASE("binary feature table round-trips bit-exactly") {
    tu::TempDir td("feat_rt");
    auto t = make_table(ChannelKind::Gist, "ad01", 7, {0, 1, 2, 5}, 11);
    t.rows[1][3] = 0.0f;
    t.rows[2][0] = -0.0f;
    fs::path p = feature_table_path(td.path(), t.channel, t.video_id);
    save_feature_table(t, p);

    FeatureTable u = load_feature_table(p);
    CHECK(u.channel == t.channel);
    CHECK(u.video_id == t.video_id);
    CHECK(u.dim == t.dim);
    CHECK(u.frame_index == t.frame_index);
    REQUIRE(u.rows.size() == t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        for (std::size_t j = 0; j < t.dim; ++j)
            CHECK(std::bit_cast<std::uint32_t>(u.rows[r][j]) ==
                  std::bit_cast<std::uint32_t>(t.rows[r][j]));
}

TEST_CASE("video-scoped table round-trips") {
    tu::TempDir td("feat_vs");
    auto t = make_table(ChannelKind::EyeHist, "ad02", 1666, {-1}, 12);
    fs::path p = feature_table_path(td.path(), t.channel, t.video_id);
    save_feature_table(t, p);
    FeatureTable u = load_feature_table(p);
    CHECK(u.frame_index == std::vector<int>{-1});
    CHECK(u.dim == 1666);
    CHECK(u.rows == t.rows);
}

TEST_CASE("save rejects inconsistent tables") {
    tu::TempDir td("feat_bad");
    auto t = make_table(ChannelKind::Gist, "x", 3, {0, 1}, 13);
    SUBCASE("index length mismatch") {
        t.frame_index.push_back(2);
        CHECK_THROWS_AS(save_feature_table(t, td.path() / "x.fv"), ContractError);
    }
    SUBCASE("ragged rows") {
        t.rows[1].push_back(0.0f);
        CHECK_THROWS_AS(save_feature_table(t, td.path() / "x.fv"), ContractError);
    }
}

TEST_CASE("load rejects corrupted tables") {
    tu::TempDir td("feat_corrupt");
    auto t = make_table(ChannelKind::Gist, "ad03", 4, {0, 1, 2}, 14);
    fs::path p = feature_table_path(td.path(), t.channel, t.video_id);
    fs::path idx = p;
    idx.replace_extension(".idx");

    SUBCASE("missing file") { CHECK_THROWS_AS(load_feature_table(p), MissingSidecarError); }
    SUBCASE("bad magic") {
        fs::create_directories(p.parent_path());
        tu::write_text(p, "XXXXZZZZpayload");
        CHECK_THROWS_AS(load_feature_table(p), ParseError);
    }
    SUBCASE("too short for a header") {
        fs::create_directories(p.parent_path());
        tu::write_text(p, "AFV1");
        CHECK_THROWS_AS(load_feature_table(p), ParseError);
    }
    SUBCASE("truncated header") {
        fs::create_directories(p.parent_path());
        std::string bytes = "AFV1";
        bytes += '\xff';
        bytes += '\0';
        bytes += '\0';
        bytes += '\0';  // claims 255-byte header
        bytes += "{}";
        tu::write_text(p, bytes);
        CHECK_THROWS_AS(load_feature_table(p), ParseError);
    }
    SUBCASE("payload size mismatch") {
        save_feature_table(t, p);
        append_byte(p);
        CHECK_THROWS_AS(load_feature_table(p), IntegrityError);
    }
    SUBCASE("missing index sidecar") {
        save_feature_table(t, p);
        fs::remove(idx);
        CHECK_THROWS_AS(load_feature_table(p), MissingSidecarError);
    }
    SUBCASE("index row count mismatch") {
        save_feature_table(t, p);
        tu::write_text(idx, "0\n1\n2\n3\n");
        CHECK_THROWS_AS(load_feature_table(p), IntegrityError);
    }
    SUBCASE("garbage index line") {
        save_feature_table(t, p);
        tu::write_text(idx, "0\nnope\n2\n");
        CHECK_THROWS_AS(load_feature_table(p), ParseError);
    }
}

TEST_CASE("csv feature tables") {
    tu::TempDir td("feat_csv");
    fs::path p = td.path() / "t.csv";
    SUBCASE("well-formed, crlf and blank lines tolerated") {
        tu::write_text(p, "frame_index,f0,f1\r\n0,1.5,-2\n\n1,0.25,4\r\n");
        FeatureTable t = load_feature_table_csv(p, ChannelKind::Gist, "vid");
        CHECK(t.dim == 2);
        CHECK(t.frame_index == std::vector<int>{0, 1});
        CHECK(t.rows[0] == std::vector<float>{1.5f, -2.0f});
        CHECK(t.rows[1] == std::vector<float>{0.25f, 4.0f});
        CHECK(t.channel == ChannelKind::Gist);
        CHECK(t.video_id == "vid");
    }
    SUBCASE("missing header") {
        tu::write_text(p, "0,1.5,-2\n");
        CHECK_THROWS_AS(load_feature_table_csv(p, ChannelKind::Gist, "vid"), ParseError);
    }
    SUBCASE("ragged rows") {
        tu::write_text(p, "frame_index,f0,f1\n0,1,2\n1,3\n");
        CHECK_THROWS_AS(load_feature_table_csv(p, ChannelKind::Gist, "vid"), ParseError);
    }
    SUBCASE("non-numeric cell") {
        tu::write_text(p, "frame_index,f0\n0,banana\n");
        CHECK_THROWS_AS(load_feature_table_csv(p, ChannelKind::Gist, "vid"), ParseError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_feature_table_csv(p, ChannelKind::Gist, "vid"),
                        MissingSidecarError);
    }
}

TEST_CASE("feature store search semantics") {
    tu::TempDir td("feat_store");
    fs::path primary = td.path() / "a";
    fs::path fallback = td.path() / "b";

    auto in_a = make_table(ChannelKind::Gist, "v1", 3, {0}, 21);
    auto in_b = make_table(ChannelKind::Gist, "v1", 3, {0}, 22);
    save_feature_table(in_b, feature_table_path(fallback, ChannelKind::Gist, "v1"));

    FeatureStore store({primary, fallback});

    SUBCASE("later dir serves when earlier lacks the table") {
        auto t = store.try_load(ChannelKind::Gist, "v1");
        REQUIRE(t.has_value());
        CHECK(t->rows == in_b.rows);
    }
    SUBCASE("earlier dir wins once present") {
        save_feature_table(in_a, feature_table_path(primary, ChannelKind::Gist, "v1"));
        auto t = store.try_load(ChannelKind::Gist, "v1");
        REQUIRE(t.has_value());
        CHECK(t->rows == in_a.rows);
    }
    SUBCASE("binary beats csv within one dir") {
        save_feature_table(in_a, feature_table_path(primary, ChannelKind::Gist, "v1"));
        fs::path csv = feature_table_path(primary, ChannelKind::Gist, "v1");
        csv.replace_extension(".csv");
        tu::write_text(csv, "frame_index,f0\n0,9\n");
        auto t = store.try_load(ChannelKind::Gist, "v1");
        REQUIRE(t.has_value());
        CHECK(t->dim == 3);
    }
    SUBCASE("csv accepted when no binary") {
        fs::path csv = feature_table_path(primary, ChannelKind::Gist, "v2");
        csv.replace_extension(".csv");
        fs::create_directories(csv.parent_path());
        tu::write_text(csv, "frame_index,f0\n0,9\n");
        auto t = store.try_load(ChannelKind::Gist, "v2");
        REQUIRE(t.has_value());
        CHECK(t->rows[0][0] == 9.0f);
    }
    SUBCASE("absent everywhere") {
        CHECK_FALSE(store.try_load(ChannelKind::Gist, "nope").has_value());
        CHECK_THROWS_AS(store.load(ChannelKind::Gist, "nope"), MissingSidecarError);
    }
    SUBCASE("header naming another video is rejected") {
        auto bad = make_table(ChannelKind::Gist, "other", 3, {0}, 23);
        // file sits where v9's table should be, header disagrees
        fs::path p = feature_table_path(primary, ChannelKind::Gist, "v9");
        bad.video_id = "other";
        save_feature_table(bad, p);
        CHECK_THROWS_AS(store.try_load(ChannelKind::Gist, "v9"), IntegrityError);
    }
}

TEST_CASE("frame keys") {
    CHECK(frame_key("ad07", 3) == "ad07#3");
    CHECK(frame_key("x", 0) == "x#0");
}

TEST_CASE("deep feature ingestion") {
    tu::TempDir td("feat_deep");
    DatasetManifest m;
    m.videos.push_back(make_video("v1", 12.0, ExpertLabel::High, ExpertLabel::Low));
    const int n = 4;  // 12 s at one frame per 3 s

    auto softmax_table = [&](std::vector<int> fis) {
        FeatureTable t;
        t.channel = ChannelKind::Fc8;
        t.video_id = "v1";
        t.dim = kFc8Dim;
        for (std::size_t r = 0; r < fis.size(); ++r) {
            std::vector<float> row(kFc8Dim, 0.0f);
            row[r % kFc8Dim] = 1.0f;
            t.rows.push_back(std::move(row));
        }
        t.frame_index = std::move(fis);
        return t;
    };
    fs::path p = feature_table_path(td.path(), ChannelKind::Fc8, "v1");

    SUBCASE("complete table maps every frame") {
        save_feature_table(softmax_table({0, 1, 2, 3}), p);
        auto out = load_deep_features(m, td.path(), ChannelKind::Fc8);
        CHECK(out.missing.empty());
        CHECK(out.by_key.size() == std::size_t(n));
        auto it = out.by_key.find(frame_key("v1", 2));
        REQUIRE(it != out.by_key.end());
        CHECK(it->second.channel == ChannelKind::Fc8);
        CHECK(it->second.values.size() == kFc8Dim);
        CHECK(it->second.values[2] == 1.0);
    }
    SUBCASE("absent table lists every frame as missing") {
        auto out = load_deep_features(m, td.path(), ChannelKind::Fc8);
        CHECK(out.by_key.empty());
        REQUIRE(out.missing.size() == std::size_t(n));
        CHECK(out.missing[0] == "v1#0");
        CHECK(out.missing[3] == "v1#3");
    }
    SUBCASE("gaps are reported per frame") {
        save_feature_table(softmax_table({0, 2}), p);
        auto out = load_deep_features(m, td.path(), ChannelKind::Fc8);
        CHECK(out.by_key.size() == 2);
        CHECK(out.missing == std::vector<std::string>{"v1#1", "v1#3"});
    }
    SUBCASE("wrong width") {
        auto t = make_table(ChannelKind::Fc8, "v1", 999, {0}, 31);
        save_feature_table(t, p);
        CHECK_THROWS_AS(load_deep_features(m, td.path(), ChannelKind::Fc8), ParseError);
    }
    SUBCASE("frame index out of range") {
        save_feature_table(softmax_table({0, 4}), p);
        CHECK_THROWS_AS(load_deep_features(m, td.path(), ChannelKind::Fc8), IntegrityError);
    }
    SUBCASE("duplicate frame index") {
        save_feature_table(softmax_table({1, 1}), p);
        CHECK_THROWS_AS(load_deep_features(m, td.path(), ChannelKind::Fc8), IntegrityError);
    }
    SUBCASE("softmax entry outside the unit interval") {
        auto t = softmax_table({0});
        t.rows[0][0] = 1.5f;
        save_feature_table(t, p);
        CHECK_THROWS_AS(load_deep_features(m, td.path(), ChannelKind::Fc8), ValidationError);
    }
    SUBCASE("softmax sum off by more than 1e-3") {
        auto t = softmax_table({0});
        t.rows[0][1] = 0.6f;  // 1.6 total
        save_feature_table(t, p);
        CHECK_THROWS_AS(load_deep_features(m, td.path(), ChannelKind::Fc8), ValidationError);
    }
    SUBCASE("penultimate-layer channels want 4096") {
        auto t = make_table(ChannelKind::ConstantBlur, "v1", kFc7Dim, {0, 1, 2, 3}, 32);
        save_feature_table(t, feature_table_path(td.path(), ChannelKind::ConstantBlur, "v1"));
        auto out = load_deep_features(m, td.path(), ChannelKind::ConstantBlur);
        CHECK(out.missing.empty());
        CHECK(out.by_key.at(frame_key("v1", 0)).values.size() == kFc7Dim);
    }
}

TEST_CASE("window names") {
    CHECK(window_name(Window::All) == "all");
    CHECK(window_name(Window::L30) == "l30");
    CHECK(window_name(Window::L10) == "l10");
    for (Window w : all_windows()) CHECK(window_from_name(window_name(w)) == w);
    CHECK(all_windows().size() == 3);
    CHECK_THROWS_AS(window_from_name("last5"), ValidationError);
}

namespace {

// three 60 s videos with per-frame tables (20 frames each)
struct DesignFixture {
    tu::TempDir td{"feat_design"};
    DatasetManifest m;
    FeatureStore store;

    DesignFixture() : store({td.path()}) {
        m.videos.push_back(make_video("a", 60.0, ExpertLabel::High, ExpertLabel::Low));
        m.videos.push_back(make_video("b", 60.0, ExpertLabel::Low, ExpertLabel::High));
        m.videos.push_back(make_video("c", 60.0, ExpertLabel::High, ExpertLabel::High));
        std::uint64_t seed = 41;
        for (const auto& v : m.videos) {
            std::vector<int> fis(20);
            for (int i = 0; i < 20; ++i) fis[std::size_t(i)] = i;
            auto t = make_table(ChannelKind::Gist, v.id, 5, fis, seed++);
            save_feature_table(t, feature_table_path(td.path(), ChannelKind::Gist, v.id));
        }
    }
};

}  // namespace

TEST_CASE("design matrix windows and labels") {
    DesignFixture fx;
    AffectTask val{AffectDim::Valence};
    AffectTask aro{AffectDim::Arousal};

    auto all = assemble_design_matrix(fx.m, fx.store, ChannelKind::Gist, Window::All, val);
    auto l30 = assemble_design_matrix(fx.m, fx.store, ChannelKind::Gist, Window::L30, val);
    auto l10 = assemble_design_matrix(fx.m, fx.store, ChannelKind::Gist, Window::L10, val);

    CHECK(all.X.size() == 60);
    CHECK(l30.X.size() == 30);  // t = 30..57
    CHECK(l10.X.size() == 9);   // t = 51, 54, 57
    CHECK(all.dim == 5);

    // window rows nest: every l10 row appears in l30, every l30 row in all
    auto contains = [](const DesignMatrix& big, const std::vector<double>& row) {
        return std::find(big.X.begin(), big.X.end(), row) != big.X.end();
    };
    for (const auto& r : l10.X) CHECK(contains(l30, r));
    for (const auto& r : l30.X) CHECK(contains(all, r));

    // labels follow the task dimension; groups name the owning video
    for (std::size_t i = 0; i < all.X.size(); ++i) {
        int want = all.groups[i] == "b" ? -1 : 1;
        CHECK(all.y[i] == want);
    }
    auto aro_d = assemble_design_matrix(fx.m, fx.store, ChannelKind::Gist, Window::All, aro);
    for (std::size_t i = 0; i < aro_d.X.size(); ++i) {
        int want = aro_d.groups[i] == "a" ? -1 : 1;
        CHECK(aro_d.y[i] == want);
    }
    CHECK(std::count(all.groups.begin(), all.groups.end(), "a") == 20);
    CHECK(std::count(l10.groups.begin(), l10.groups.end(), "a") == 3);
}

TEST_CASE("design matrix with a video-scoped channel") {
    DesignFixture fx;
    for (const auto& v : fx.m.videos) {
        auto t = make_table(ChannelKind::EyeHist, v.id, 6, {-1}, 77);
        save_feature_table(t, feature_table_path(fx.td.path(), ChannelKind::EyeHist, v.id));
    }
    AffectTask val{AffectDim::Valence};

    std::vector<std::string> warnings;
    auto d = assemble_design_matrix(fx.m, fx.store, ChannelKind::EyeHist, Window::All, val,
                                    &warnings);
    CHECK(d.X.size() == 3);
    CHECK(warnings.empty());

    auto d10 = assemble_design_matrix(fx.m, fx.store, ChannelKind::EyeHist, Window::L10, val,
                                      &warnings);
    CHECK(d10.X.size() == 3);  // window has no effect on per-video rows
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("eye_hist") != std::string::npos);
}

TEST_CASE("design matrix integrity failures") {
    DesignFixture fx;
    AffectTask val{AffectDim::Valence};

    SUBCASE("empty manifest") {
        DatasetManifest empty;
        CHECK_THROWS_AS(
            assemble_design_matrix(empty, fx.store, ChannelKind::Gist, Window::All, val),
            EmptyDesignError);
    }
    SUBCASE("dim drifts between videos") {
        auto t = make_table(ChannelKind::Gist, "b", 9, {0}, 51);
        save_feature_table(t, feature_table_path(fx.td.path(), ChannelKind::Gist, "b"));
        CHECK_THROWS_AS(
            assemble_design_matrix(fx.m, fx.store, ChannelKind::Gist, Window::All, val),
            IntegrityError);
    }
    SUBCASE("video-scoped row inside a frame-scoped channel") {
        auto t = make_table(ChannelKind::Gist, "b", 5, {-1}, 52);
        save_feature_table(t, feature_table_path(fx.td.path(), ChannelKind::Gist, "b"));
        CHECK_THROWS_AS(
            assemble_design_matrix(fx.m, fx.store, ChannelKind::Gist, Window::All, val),
            IntegrityError);
    }
    SUBCASE("frame row inside a video-scoped channel") {
        for (const auto& v : fx.m.videos) {
            auto t = make_table(ChannelKind::EyeHist, v.id, 6, {0}, 53);
            save_feature_table(t, feature_table_path(fx.td.path(), ChannelKind::EyeHist, v.id));
        }
        CHECK_THROWS_AS(
            assemble_design_matrix(fx.m, fx.store, ChannelKind::EyeHist, Window::All, val),
            IntegrityError);
    }
    SUBCASE("window that selects nothing") {
        // early frames only: none survive the 10 s tail
        for (const auto& v : fx.m.videos) {
            auto t = make_table(ChannelKind::Gist, v.id, 5, {0, 1}, 54);
            save_feature_table(t, feature_table_path(fx.td.path(), ChannelKind::Gist, v.id));
        }
        CHECK_THROWS_AS(
            assemble_design_matrix(fx.m, fx.store, ChannelKind::Gist, Window::L10, val),
            EmptyDesignError);
    }
}
