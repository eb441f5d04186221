#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include "pcw/datagen.hpp"
#include "pcw/error.hpp"
#include "pcw/image.hpp"

using namespace pcw;
using namespace pcw::data;

namespace {

std::string fresh_dir(const char* name) {
    namespace fs = std::filesystem;
    const fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    return p.string();
}

// The labelling rule, restated from the exported scene geometry: warning iff
// some agent's bottom pixel row contains a column whose centre lies between
// the road edges of that row.
int label_oracle(const Scene& scene, std::size_t w) {
    for (const AgentFootprint& f : scene.footprints) {
        const double l = scene.road_left[f.y_b];
        const double r = scene.road_right[f.y_b];
        for (long x = std::max<long>(0, f.x0); x <= std::min<long>(static_cast<long>(w) - 1, f.x1);
             ++x) {
            const double c = static_cast<double>(x) + 0.5;
            if (l <= c && c < r) return 1;
        }
    }
    return 0;
}

}  // namespace

TEST_CASE("scenes are deterministic in the seed") {
    Scene a = make_scene(64, 32, 12345, true);
    Scene b = make_scene(64, 32, 12345, true);
    Scene c = make_scene(64, 32, 12346, true);
    CHECK(a.image.pixels == b.image.pixels);
    CHECK(a.seg == b.seg);
    CHECK(a.image.pixels != c.image.pixels);
}

TEST_CASE("every scene carries at least one agent and only palette ids") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const bool want = seed % 2 == 0;
        Scene s = make_scene(64, 32, seed, want);
        CHECK(s.warning == (want ? 1 : 0));
        bool has_agent = false;
        for (std::uint8_t id : s.seg) {
            CHECK(id < kSceneClassCount);
            has_agent = has_agent || id == kPedestrian || id == kCyclist;
        }
        CHECK(has_agent);
        for (double v : s.image.pixels) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("warning label re-derives from exported road edges and footprints") {
    for (std::uint64_t seed = 100; seed < 300; ++seed) {
        const bool want = seed % 2 == 0;
        Scene s = make_scene(64, 32, seed, want);
        REQUIRE(s.road_left.size() == 32);
        REQUIRE(s.road_right.size() == 32);
        REQUIRE(!s.footprints.empty());
        CHECK(label_oracle(s, 64) == s.warning);
    }

    // The exported edges describe a real corridor: empty above the horizon,
    // a nonempty widening interval below it.
    Scene s = make_scene(64, 32, 4242, true);
    std::size_t horizon = 0;
    while (horizon < 32 && s.road_right[horizon] <= s.road_left[horizon]) ++horizon;
    CHECK(horizon > 0);
    CHECK(horizon < 32);
    for (std::size_t y = horizon; y < 32; ++y) CHECK(s.road_right[y] > s.road_left[y]);
    CHECK(s.road_right[31] - s.road_left[31] > s.road_right[horizon] - s.road_left[horizon]);
}

TEST_CASE("generated dataset: manifests, quotas, palette files") {
    DatasetConfig cfg;
    cfg.width = 48;
    cfg.height = 24;
    cfg.train_count = 60;
    cfg.eval_count = 30;
    cfg.warning_fraction = 1.0 / 6.0;
    cfg.seed = 7;
    const std::string dir = fresh_dir("pcw_dataset_test");
    generate_dataset(cfg, dir);

    auto train = load_manifest(dir + "/train.csv");
    auto eval = load_manifest(dir + "/eval.csv");
    REQUIRE(train.size() == 60);
    REQUIRE(eval.size() == 30);
    auto warn_count = [](const std::vector<SampleRef>& refs) {
        std::size_t n = 0;
        for (const auto& r : refs) n += static_cast<std::size_t>(r.warning);
        return n;
    };
    CHECK(warn_count(train) == 10);  // round(60/6)
    CHECK(warn_count(eval) == 5);    // round(30/6)

    // Warning labels are shuffled, not a prefix.
    bool prefix = true;
    for (std::size_t i = 0; i < 10; ++i) prefix = prefix && train[i].warning == 1;
    CHECK_FALSE(prefix);

    // Segmentation PGMs hold exactly the palette values id*51.
    Image seg = read_pnm(dir + "/" + train[0].seg_path);
    std::set<int> vals;
    for (double v : seg.pixels) vals.insert(static_cast<int>(std::lround(v * 255.0)));
    for (int v : vals) CHECK(v % 51 == 0);

    // Samples load with seg values id/5 and matching geometry.
    Sample s = load_sample(dir, train[0]);
    CHECK(s.image.shape() == std::vector<std::size_t>({1, 24, 48}));
    CHECK(s.seg.numel() == 48 * 24);
    for (double v : s.seg.values()) {
        CHECK(std::abs(v * 5.0 - std::lround(v * 5.0)) < 1e-9);
    }

    SampleSet split = load_split(dir, "eval.csv");
    CHECK(split.samples.size() == 30);
    CHECK(split.width == 48);
    CHECK(split.height == 24);
}

TEST_CASE("regeneration is byte-identical") {
    DatasetConfig cfg;
    cfg.width = 32;
    cfg.height = 16;
    cfg.train_count = 8;
    cfg.eval_count = 4;
    cfg.warning_fraction = 0.25;
    cfg.seed = 99;
    const std::string a = fresh_dir("pcw_dataset_a");
    const std::string b = fresh_dir("pcw_dataset_b");
    generate_dataset(cfg, a);
    generate_dataset(cfg, b);

    namespace fs = std::filesystem;
    std::vector<std::string> rel;
    for (auto& e : fs::recursive_directory_iterator(a)) {
        if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), a).string());
    }
    std::sort(rel.begin(), rel.end());
    REQUIRE(rel.size() == 2 + 12 * 2);  // two manifests, image+seg per scene
    for (const auto& r : rel) {
        std::ifstream fa(fs::path(a) / r, std::ios::binary);
        std::ifstream fb(fs::path(b) / r, std::ios::binary);
        std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
        std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
        CHECK(sa == sb);
    }
}

TEST_CASE("dataset config validation") {
    DatasetConfig cfg;
    cfg.width = 8;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = DatasetConfig{};
    cfg.warning_fraction = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.warning_fraction = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = DatasetConfig{};
    cfg.train_count = 4;
    cfg.warning_fraction = 0.01;  // quota rounds to zero
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("balancing: 500/2500 gives every warning index five appearances") {
    std::vector<int> labels(3000, 0);
    for (std::size_t i = 0; i < 500; ++i) labels[i * 6] = 1;  // spread them out
    const auto idx = balanced_indices(labels);
    REQUIRE(idx.size() == 5000);

    std::map<std::size_t, std::size_t> count;
    for (std::size_t i : idx) ++count[i];
    std::size_t zeros = 0, ones = 0;
    for (const auto& [i, n] : count) {
        if (labels[i] == 1) {
            CHECK(n == 5);
            ones += n;
        } else {
            CHECK(n == 1);
            zeros += n;
        }
    }
    CHECK(zeros == 2500);
    CHECK(ones == 2500);

    // The original order survives as a prefix.
    for (std::size_t i = 0; i < labels.size(); ++i) CHECK(idx[i] == i);
}

TEST_CASE("balancing: non-divisible counts split the remainder deterministically") {
    // 3 warning / 7 clear: copies (3, 2, 2) by the stated rule.
    std::vector<int> labels = {1, 0, 0, 1, 0, 0, 0, 1, 0, 0};
    const auto idx = balanced_indices(labels);
    REQUIRE(idx.size() == 14);
    std::map<std::size_t, std::size_t> count;
    for (std::size_t i : idx) ++count[i];
    CHECK(count[0] == 3);
    CHECK(count[3] == 2);
    CHECK(count[7] == 2);
    std::size_t ones = 0;
    for (std::size_t i : idx) ones += static_cast<std::size_t>(labels[i]);
    CHECK(ones == 7);

    // Balanced input is returned unchanged.
    std::vector<int> even = {0, 1, 1, 0};
    const auto same = balanced_indices(even);
    REQUIRE(same.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(same[i] == i);

    // Majority-warning inputs balance the other way round.
    std::vector<int> flipped = {1, 1, 1, 0};
    const auto f = balanced_indices(flipped);
    std::size_t zs = 0;
    for (std::size_t i : f) zs += static_cast<std::size_t>(flipped[i] == 0);
    CHECK(zs == 3);
    CHECK(f.size() == 6);

    CHECK_THROWS_AS(balanced_indices(std::vector<int>{0, 0}), ContractError);
}

TEST_CASE("agent_boxes finds per-class connected components") {
    // 8x4 map: one pedestrian blob, one cyclist blob, one diagonal pedestrian
    // pair that 4-connectivity must keep separate.
    const std::size_t w = 8, h = 4;
    std::vector<std::uint8_t> seg(w * h, kRoad);
    auto set = [&](std::size_t x, std::size_t y, std::uint8_t c) { seg[y * w + x] = c; };
    set(1, 1, kPedestrian);
    set(1, 2, kPedestrian);
    set(2, 1, kPedestrian);
    set(4, 2, kCyclist);
    set(5, 2, kCyclist);
    set(6, 0, kPedestrian);
    set(7, 1, kPedestrian);  // diagonal neighbour only

    auto boxes = agent_boxes(seg, w, h);
    REQUIRE(boxes.size() == 4);
    std::size_t peds = 0, cyc = 0;
    for (const auto& b : boxes) {
        if (b.cls == kPedestrian) ++peds;
        if (b.cls == kCyclist) ++cyc;
    }
    CHECK(peds == 3);
    CHECK(cyc == 1);
    bool found_main = false;
    for (const auto& b : boxes) {
        if (b.cls == kPedestrian && b.x0 == 1 && b.y0 == 1 && b.x1 == 2 && b.y1 == 2) {
            found_main = true;
        }
    }
    CHECK(found_main);

    CHECK(agent_boxes(std::vector<std::uint8_t>(w * h, kRoad), w, h).empty());
}
