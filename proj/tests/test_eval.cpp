#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "pcw/error.hpp"
#include "pcw/eval.hpp"
#include "pcw/rng.hpp"

using namespace pcw;
using namespace pcw::eval;

namespace {

// AUC as the Mann-Whitney ordering statistic: over all positive/negative
// pairs, count a win when the positive outscores the negative and half a win
// on ties.
double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("perfect, inverted, and random-tie curves") {
    // Perfect separation.
    RocCurve perfect = roc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0});
    CHECK(perfect.auc == doctest::Approx(1.0));
    CHECK(tpr_at_fpr(perfect, 0.15) == doctest::Approx(1.0));
    CHECK(perfect.points.front().fpr == 0.0);
    CHECK(perfect.points.front().tpr == 0.0);
    CHECK(perfect.points.back().fpr == 1.0);
    CHECK(perfect.points.back().tpr == 1.0);

    // Perfectly wrong ranking.
    RocCurve inverted = roc({0.1, 0.2, 0.8, 0.9}, {1, 1, 0, 0});
    CHECK(inverted.auc == doctest::Approx(0.0));

    // All scores tied: one step from (0,0) to (1,1), AUC one half, and the
    // step convention yields TPR 0 at any target below 1.
    RocCurve tied = roc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0});
    CHECK(tied.auc == doctest::Approx(0.5));
    REQUIRE(tied.points.size() == 2);
    CHECK(tpr_at_fpr(tied, 0.15) == 0.0);
    CHECK(tpr_at_fpr(tied, 0.9999) == 0.0);
    CHECK(tpr_at_fpr(tied, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("hand-built four-point curve") {
    // scores: pos {0.9, 0.4}, neg {0.6, 0.3}. Sweep: t=0.9 -> (0, .5);
    // t=0.6 -> (.5, .5); t=0.4 -> (.5, 1); t=0.3 -> (1, 1).
    RocCurve c = roc({0.9, 0.4, 0.6, 0.3}, {1, 1, 0, 0});
    REQUIRE(c.points.size() == 5);  // anchor + 4 thresholds
    CHECK(c.points[0].threshold == std::numeric_limits<double>::infinity());
    CHECK(c.points[1].fpr == 0.0);
    CHECK(c.points[1].tpr == 0.5);
    CHECK(c.points[2].fpr == 0.5);
    CHECK(c.points[2].tpr == 0.5);
    CHECK(c.points[3].fpr == 0.5);
    CHECK(c.points[3].tpr == 1.0);
    CHECK(c.points[4].fpr == 1.0);
    CHECK(c.points[4].tpr == 1.0);
    CHECK(c.auc == doctest::Approx(0.75));
    CHECK(tpr_at_fpr(c, 0.15) == doctest::Approx(0.5));
    CHECK(tpr_at_fpr(c, 0.5) == doctest::Approx(1.0));
    CHECK(tpr_at_fpr(c, 0.0) == doctest::Approx(0.5));
}

TEST_CASE("tpr_at_fpr is nondecreasing in the target") {
    Rng rng(5);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 150; ++i) {
        scores.push_back(rng.uniform() < 0.3 ? 0.25 : rng.uniform());  // plenty of ties
        labels.push_back(rng.uniform() < 0.4 ? 1 : 0);
    }
    RocCurve c = roc(scores, labels);
    double prev = -1.0;
    for (double t = 0.0; t <= 1.0 + 1e-9; t += 0.01) {
        const double v = tpr_at_fpr(c, std::min(t, 1.0));
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("curve is invariant under strictly increasing score transforms") {
    Rng rng(6);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 80; ++i) {
        scores.push_back(rng.uniform(-3.0, 3.0));
        labels.push_back(rng.uniform() < 0.5 ? 1 : 0);
    }
    RocCurve base = roc(scores, labels);
    std::vector<double> warped = scores;
    for (double& s : warped) s = std::exp(0.7 * s) + 3.0;
    RocCurve after = roc(warped, labels);
    CHECK(base.auc == doctest::Approx(after.auc).epsilon(1e-15));
    REQUIRE(base.points.size() == after.points.size());
    for (std::size_t i = 0; i < base.points.size(); ++i) {
        CHECK(base.points[i].fpr == after.points[i].fpr);
        CHECK(base.points[i].tpr == after.points[i].tpr);
    }
}

TEST_CASE("sentinel minimal scores form one tie group at the curve tail") {
    // Half the negatives and one positive never fire: they share the
    // sentinel. The curve must end with a single jump containing them.
    const double sentinel = -1e9;
    std::vector<double> scores = {0.9, 0.7, sentinel, 0.5, sentinel, sentinel};
    std::vector<int> labels = {1, 1, 1, 0, 0, 0};
    RocCurve c = roc(scores, labels);
    CHECK(c.points.back().fpr == 1.0);
    CHECK(c.points.back().tpr == 1.0);
    CHECK(c.points.back().threshold == sentinel);
    // Before the sentinel group: fpr 1/3 (only 0.5 fired), tpr 2/3.
    const RocPoint& before = c.points[c.points.size() - 2];
    CHECK(before.fpr == doctest::Approx(1.0 / 3.0));
    CHECK(before.tpr == doctest::Approx(2.0 / 3.0));
    CHECK(c.auc == doctest::Approx(pairwise_auc(scores, labels)).epsilon(1e-14));
}

TEST_CASE("auc equals the pairwise ordering statistic on random sets") {
    Rng rng(77);
    double worst = 0.0;
    for (int set = 0; set < 100; ++set) {
        const std::size_t n = 2 + rng.uniform_below(199);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        // Coarse quantisation forces plenty of exact ties.
        const double q = 1.0 + static_cast<double>(rng.uniform_below(12));
        bool has_pos = false, has_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = std::floor(rng.uniform() * q) / q;
            labels[i] = rng.uniform() < 0.5 ? 1 : 0;
            has_pos = has_pos || labels[i] == 1;
            has_neg = has_neg || labels[i] == 0;
        }
        if (!has_pos) labels[0] = 1;
        if (!has_neg) labels[n - 1] = 0;
        const double got = roc(scores, labels).auc;
        const double want = pairwise_auc(scores, labels);
        worst = std::max(worst, std::abs(got - want));
    }
    INFO("worst |auc - pairwise| ", worst);
    CHECK(worst < 1e-12);
}

TEST_CASE("roc input contracts") {
    CHECK_THROWS_AS(roc({0.1, 0.2}, {1, 1, 0}), ContractError);   // length mismatch
    CHECK_THROWS_AS(roc({0.1, 0.2}, {1, 1}), ContractError);      // no negative
    CHECK_THROWS_AS(roc({0.1, 0.2}, {0, 0}), ContractError);      // no positive
    CHECK_THROWS_AS(roc({}, {}), ContractError);                  // empty
    CHECK_THROWS_AS(roc({0.1, 0.3}, {1, 2}), ContractError);      // bad label
    CHECK_THROWS_AS(roc({std::nan(""), 0.3}, {1, 0}), ContractError);
    CHECK_THROWS_AS(tpr_at_fpr(roc({0.2, 0.1}, {1, 0}), 1.5), ContractError);
}

TEST_CASE("report and plot files") {
    namespace fs = std::filesystem;
    RocCurve a = roc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0});
    RocCurve b = roc({0.9, 0.1, 0.8, 0.2}, {1, 1, 0, 0});
    std::vector<MethodResult> results = {{"hog", b}, {"cnn_no_seg", a}, {"cnn_with_seg", a}};

    const std::string dir = (fs::temp_directory_path() / "pcw_eval_test").string();
    fs::create_directories(dir);

    write_roc_csv(dir + "/roc.csv", a);
    std::ifstream roc_f(dir + "/roc.csv");
    std::string line;
    std::getline(roc_f, line);
    CHECK(line == "threshold,fpr,tpr");
    std::size_t rows = 0;
    while (std::getline(roc_f, line)) ++rows;
    CHECK(rows == a.points.size());

    write_report_csv(dir + "/report.csv", results, 0.15);
    std::ifstream rep_f(dir + "/report.csv");
    std::getline(rep_f, line);
    CHECK(line == "method,auc,tpr_at_015");
    std::getline(rep_f, line);
    CHECK(line.substr(0, 4) == "hog,");
    std::getline(rep_f, line);
    CHECK(line.substr(0, 11) == "cnn_no_seg,");
    std::getline(rep_f, line);
    CHECK(line.substr(0, 13) == "cnn_with_seg,");

    // Identical inputs produce identical report rows apart from the name.
    const std::string row_a = line.substr(13);
    std::ifstream rep_f2(dir + "/report.csv");
    std::getline(rep_f2, line);
    std::getline(rep_f2, line);
    std::getline(rep_f2, line);
    CHECK(line.substr(11) == row_a);

    write_roc_svg(dir + "/roc.svg", results);
    std::ifstream svg_f(dir + "/roc.svg");
    std::string svg((std::istreambuf_iterator<char>(svg_f)), std::istreambuf_iterator<char>());
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("hog") != std::string::npos);
    CHECK(svg.find("cnn_with_seg") != std::string::npos);
    CHECK(svg.find("0.35") != std::string::npos);  // zoom panel axis label

    const std::string table = comparison_table(results, 0.15);
    CHECK(table.find("hog") != std::string::npos);
    CHECK(table.find("auc") != std::string::npos);
}
