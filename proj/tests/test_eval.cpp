#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>

#include "textae/eval.hpp"

using namespace textae;

namespace {

// 20 one-dimensional points: a tight cluster per class plus one mislabeled
// outlier that is never any other point's nearest neighbor. 1-NN therefore
// errs on exactly that one point, wherever the folds fall.
struct NnCase {
    SparseMatrix x;
    std::vector<int> y;
};

NnCase make_nn_case() {
    std::vector<std::tuple<std::size_t, std::size_t, double>> trips;
    std::vector<int> y;
    for (std::size_t i = 0; i < 9; ++i) {
        trips.emplace_back(i, 0, 0.01 * static_cast<double>(i) + 0.001);
        y.push_back(0);
    }
    trips.emplace_back(9, 0, 2.0);  // mislabeled: sits alone, tagged class 1
    y.push_back(1);
    for (std::size_t i = 10; i < 20; ++i) {
        trips.emplace_back(i, 0, 10.0 + 0.01 * static_cast<double>(i));
        y.push_back(1);
    }
    return {SparseMatrix::from_triplets(20, 1, trips), y};
}

PipelineFn nn_pipeline() {
    return [](const SparseMatrix& x_train, const std::vector<int>& y_train, std::uint64_t) {
        const DenseMatrix train = to_dense(x_train);
        const std::vector<int> labels = y_train;
        return Predictor([train, labels](const SparseMatrix& x_test) {
            const DenseMatrix test = to_dense(x_test);
            std::vector<int> pred;
            for (std::size_t i = 0; i < test.n_rows; ++i) {
                double best = std::numeric_limits<double>::infinity();
                int lab = 0;
                for (std::size_t t = 0; t < train.n_rows; ++t) {
                    const double d = std::abs(test(i, 0) - train(t, 0));
                    if (d < best) {
                        best = d;
                        lab = labels[t];
                    }
                }
                pred.push_back(lab);
            }
            return pred;
        });
    };
}

}  // namespace

TEST_CASE("confusion and metrics") {
    SECTION("perfect predictions") {
        const auto m = metrics(confusion({1, 0, 1, 0}, {1, 0, 1, 0}));
        CHECK(m.accuracy == 1.0);
        CHECK(*m.precision == 1.0);
        CHECK(*m.recall == 1.0);
        CHECK(*m.f1 == 1.0);
    }
    SECTION("all-negative predictions leave precision undefined") {
        const auto cm = confusion({1, 1, 0, 0}, {0, 0, 0, 0});
        CHECK(cm.tp == 0);
        CHECK(cm.fp == 0);
        CHECK(cm.fn == 2);
        CHECK(cm.tn == 2);
        const auto m = metrics(cm);
        CHECK(m.accuracy == 0.5);
        CHECK_FALSE(m.precision.has_value());
        REQUIRE(m.recall.has_value());
        CHECK(*m.recall == 0.0);
        CHECK_FALSE(m.f1.has_value());
    }
    SECTION("hand-worked mixed case") {
        // TP 3, FN 2, FP 1, TN 4
        const std::vector<int> y_true{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
        const std::vector<int> y_pred{1, 1, 1, 0, 0, 1, 0, 0, 0, 0};
        const auto m = metrics(confusion(y_true, y_pred));
        CHECK(m.accuracy == Catch::Approx(0.7).margin(1e-15));
        CHECK(*m.precision == Catch::Approx(0.75).margin(1e-15));
        CHECK(*m.recall == Catch::Approx(0.6).margin(1e-15));
        CHECK(*m.f1 == Catch::Approx(2.0 / 3.0).margin(1e-15));
    }
    SECTION("validation") {
        CHECK_THROWS_AS(confusion({0, 1}, {0}), ShapeError);
        CHECK_THROWS_AS(confusion({0, 2}, {0, 1}), DomainError);
        CHECK_THROWS_AS(confusion({0, 1}, {0, 3}), DomainError);
        CHECK_THROWS_AS(metrics(ConfusionMatrix{}), DomainError);
    }
}

TEST_CASE("split is stratified, disjoint, and deterministic") {
    std::vector<int> y(100, 0);
    for (std::size_t i = 0; i < 36; ++i) y[i] = 1;

    const auto s = split(y, {0.6, 0.2, 0.2}, 7);
    CHECK(s.train.size() == 60);
    CHECK(s.val.size() == 20);
    CHECK(s.test.size() == 20);

    std::size_t train_pos = 0;
    for (std::size_t i : s.train) train_pos += y[i];
    CHECK(train_pos == 22);  // llround(0.6 * 36)
    std::size_t val_pos = 0;
    for (std::size_t i : s.val) val_pos += y[i];
    CHECK(val_pos == 7);

    SECTION("partition covers every index exactly once") {
        std::vector<std::size_t> all;
        all.insert(all.end(), s.train.begin(), s.train.end());
        all.insert(all.end(), s.val.begin(), s.val.end());
        all.insert(all.end(), s.test.begin(), s.test.end());
        std::sort(all.begin(), all.end());
        for (std::size_t i = 0; i < 100; ++i) REQUIRE(all[i] == i);
        CHECK(std::is_sorted(s.train.begin(), s.train.end()));
        CHECK(std::is_sorted(s.val.begin(), s.val.end()));
    }
    SECTION("same seed reproduces, different seed moves") {
        const auto s2 = split(y, {0.6, 0.2, 0.2}, 7);
        CHECK(s2.train == s.train);
        CHECK(s2.test == s.test);
        const auto s3 = split(y, {0.6, 0.2, 0.2}, 8);
        CHECK(s3.train != s.train);
    }
    SECTION("zero ratio parts may be empty") {
        const auto s2 = split(y, {0.8, 0.0, 0.2}, 7);
        CHECK(s2.val.empty());
        CHECK(s2.train.size() + s2.test.size() == 100);
    }
    SECTION("ratio validation") {
        CHECK_THROWS_AS(split(y, {0.5, 0.2, 0.2}, 7), ConfigError);
        CHECK_THROWS_AS(split(y, {1.2, -0.1, -0.1}, 7), ConfigError);
    }
    SECTION("a class too small to stratify raises") {
        std::vector<int> tiny(10, 0);
        tiny[0] = 1;
        CHECK_THROWS_AS(split(tiny, {0.6, 0.2, 0.2}, 7), DomainError);
    }
}

TEST_CASE("stratified_folds") {
    std::vector<int> y(20, 0);
    for (std::size_t i = 12; i < 20; ++i) y[i] = 1;

    const auto folds = stratified_folds(y, 4, 3);
    REQUIRE(folds.size() == 4);

    SECTION("fold sizes and class mix are balanced") {
        for (const auto& f : folds) {
            CHECK(f.size() == 5);
            std::size_t pos = 0;
            for (std::size_t i : f) pos += y[i];
            CHECK(pos == 2);
        }
    }
    SECTION("folds partition the index range") {
        std::vector<std::size_t> all;
        for (const auto& f : folds) {
            CHECK(std::is_sorted(f.begin(), f.end()));
            all.insert(all.end(), f.begin(), f.end());
        }
        std::sort(all.begin(), all.end());
        for (std::size_t i = 0; i < 20; ++i) REQUIRE(all[i] == i);
    }
    SECTION("validation") {
        CHECK_THROWS_AS(stratified_folds(y, 1, 3), ConfigError);
        CHECK_THROWS_AS(stratified_folds(y, 9, 3), DomainError);  // class 1 has 8
    }
    SECTION("deterministic under the seed") {
        const auto again = stratified_folds(y, 4, 3);
        CHECK(again == folds);
    }
}

TEST_CASE("cross_validate with a constant predictor") {
    std::vector<int> y(20, 0);
    for (std::size_t i = 10; i < 20; ++i) y[i] = 1;
    std::vector<std::tuple<std::size_t, std::size_t, double>> trips;
    for (std::size_t i = 0; i < 20; ++i) trips.emplace_back(i, 0, 1.0);
    const auto x = SparseMatrix::from_triplets(20, 1, trips);

    const PipelineFn constant = [](const SparseMatrix&, const std::vector<int>&, std::uint64_t) {
        return Predictor(
            [](const SparseMatrix& t) { return std::vector<int>(t.n_rows, 0); });
    };
    const auto report = cross_validate(constant, x, y, 5, 11);
    REQUIRE(report.folds.size() == 5);
    for (const auto& f : report.folds) {
        CHECK(f.m.accuracy == 0.5);  // 2 of 4 per fold by stratification
        CHECK_FALSE(f.m.precision.has_value());
        CHECK(*f.m.recall == 0.0);
    }
    CHECK(report.accuracy.mean == 0.5);
    CHECK(report.accuracy.stddev == 0.0);
    CHECK(report.precision.defined == 0);
    CHECK(std::isnan(report.precision.mean));
    CHECK(report.recall.defined == 5);
    CHECK(report.recall.mean == 0.0);
}

TEST_CASE("cross_validate counts exactly one 1-NN error") {
    const auto c = make_nn_case();
    const auto report = cross_validate(nn_pipeline(), c.x, c.y, 5, 17);
    // every fold has 4 samples; only the outlier's fold drops to 3/4
    CHECK(report.accuracy.mean == Catch::Approx(0.95).margin(1e-15));
    CHECK(report.accuracy.stddev == Catch::Approx(0.1).margin(1e-12));
    CHECK(report.accuracy.min == 0.75);
    CHECK(report.accuracy.max == 1.0);
    std::size_t total_errors = 0;
    for (const auto& f : report.folds) total_errors += f.cm.fn + f.cm.fp;
    CHECK(total_errors == 1);

    SECTION("a different seed moves folds but not the error count") {
        const auto r2 = cross_validate(nn_pipeline(), c.x, c.y, 5, 99);
        CHECK(r2.accuracy.mean == Catch::Approx(0.95).margin(1e-15));
    }
    SECTION("same seed reproduces fold-by-fold") {
        const auto r2 = cross_validate(nn_pipeline(), c.x, c.y, 5, 17);
        for (std::size_t f = 0; f < 5; ++f) {
            CHECK(r2.folds[f].cm.tp == report.folds[f].cm.tp);
            CHECK(r2.folds[f].cm.fn == report.folds[f].cm.fn);
            CHECK(r2.folds[f].cm.fp == report.folds[f].cm.fp);
            CHECK(r2.folds[f].cm.tn == report.folds[f].cm.tn);
        }
    }
}

TEST_CASE("cross_validate never hands test rows to the pipeline") {
    // feature value = index + 1, so received rows are identifiable
    std::vector<std::tuple<std::size_t, std::size_t, double>> trips;
    std::vector<int> y;
    for (std::size_t i = 0; i < 20; ++i) {
        trips.emplace_back(i, 0, static_cast<double>(i + 1));
        y.push_back(i < 10 ? 0 : 1);
    }
    const auto x = SparseMatrix::from_triplets(20, 1, trips);

    double value_sum = 0.0;
    std::vector<std::size_t> train_rows;
    std::set<std::uint64_t> seeds;
    const PipelineFn probe = [&](const SparseMatrix& x_train, const std::vector<int>& y_train,
                                 std::uint64_t seed) {
        train_rows.push_back(x_train.n_rows);
        seeds.insert(seed);
        const auto d = to_dense(x_train);
        for (std::size_t i = 0; i < d.n_rows; ++i) {
            value_sum += d(i, 0);
            // the label leaked into the feature must match what we receive
            REQUIRE(y_train[i] == (d(i, 0) > 10.5 ? 1 : 0));
        }
        return Predictor([](const SparseMatrix& t) {
            const auto d = to_dense(t);
            std::vector<int> pred;
            for (std::size_t i = 0; i < d.n_rows; ++i) pred.push_back(d(i, 0) > 10.5 ? 1 : 0);
            return pred;
        });
    };
    const auto report = cross_validate(probe, x, y, 5, 23);

    // each call trains on exactly 16 rows; every sample appears in 4 train sets
    CHECK(train_rows == std::vector<std::size_t>{16, 16, 16, 16, 16});
    CHECK(value_sum == 4.0 * (20.0 * 21.0 / 2.0));
    CHECK(seeds.size() == 5);  // one derived seed per fold
    // the feature determines the label, so every fold is perfect
    CHECK(report.accuracy.mean == 1.0);
    CHECK(report.f1.mean == 1.0);
}

TEST_CASE("aggregate") {
    SECTION("four defined values") {
        const auto a = aggregate({1.0, 2.0, 3.0, 4.0});
        CHECK(a.defined == 4);
        CHECK(a.mean == 2.5);
        CHECK(a.stddev == Catch::Approx(std::sqrt(1.25)).margin(1e-15));
        CHECK(a.min == 1.0);
        CHECK(a.q1 == 1.75);
        CHECK(a.median == 2.5);
        CHECK(a.q3 == 3.25);
        CHECK(a.max == 4.0);
    }
    SECTION("undefined entries are skipped") {
        const auto a = aggregate({1.0, std::nullopt, 3.0});
        CHECK(a.defined == 2);
        CHECK(a.mean == 2.0);
    }
    SECTION("nothing defined") {
        const auto a = aggregate({std::nullopt, std::nullopt});
        CHECK(a.defined == 0);
        CHECK(std::isnan(a.mean));
        CHECK(std::isnan(a.median));
    }
    SECTION("single value collapses the quantiles") {
        const auto a = aggregate({0.7});
        CHECK(a.stddev == 0.0);
        CHECK(a.q1 == 0.7);
        CHECK(a.median == 0.7);
        CHECK(a.q3 == 0.7);
    }
}

TEST_CASE("learning_curve with a constant predictor is flat") {
    std::vector<std::tuple<std::size_t, std::size_t, double>> trips;
    std::vector<int> y;
    for (std::size_t i = 0; i < 40; ++i) {
        trips.emplace_back(i, 0, 1.0);
        y.push_back(i % 2 == 0 ? 0 : 1);
    }
    const auto x = SparseMatrix::from_triplets(40, 1, trips);
    const PipelineFn constant = [](const SparseMatrix&, const std::vector<int>&, std::uint64_t) {
        return Predictor(
            [](const SparseMatrix& t) { return std::vector<int>(t.n_rows, 0); });
    };
    const auto curve = learning_curve(constant, x, y, {2, 10, 30}, 5);
    REQUIRE(curve.size() == 3);
    for (const auto& p : curve) {
        // proportional interleave keeps every prefix at the pool's class mix
        CHECK(p.train_score.accuracy == 0.5);
        CHECK(p.val_score.accuracy == 0.5);
    }
    CHECK(curve[0].train_size == 2);
    CHECK(curve[2].train_size == 30);
}

TEST_CASE("learning_curve subsets are nested and sized as asked") {
    std::vector<std::tuple<std::size_t, std::size_t, double>> trips;
    std::vector<int> y;
    for (std::size_t i = 0; i < 40; ++i) {
        trips.emplace_back(i, 0, static_cast<double>(i + 1));
        y.push_back(i < 20 ? 0 : 1);
    }
    const auto x = SparseMatrix::from_triplets(40, 1, trips);

    std::vector<std::set<double>> received;
    const PipelineFn probe = [&](const SparseMatrix& x_train, const std::vector<int>&,
                                 std::uint64_t) {
        std::set<double> vals;
        const auto d = to_dense(x_train);
        for (std::size_t i = 0; i < d.n_rows; ++i) vals.insert(d(i, 0));
        received.push_back(std::move(vals));
        return Predictor([](const SparseMatrix& t) { return std::vector<int>(t.n_rows, 0); });
    };
    learning_curve(probe, x, y, {4, 12, 30}, 9);
    REQUIRE(received.size() == 3);
    CHECK(received[0].size() == 4);
    CHECK(received[1].size() == 12);
    CHECK(received[2].size() == 30);
    CHECK(std::includes(received[1].begin(), received[1].end(), received[0].begin(),
                        received[0].end()));
    CHECK(std::includes(received[2].begin(), received[2].end(), received[1].begin(),
                        received[1].end()));

    SECTION("size validation") {
        CHECK_THROWS_AS(learning_curve(probe, x, y, {0}, 9), ConfigError);
        CHECK_THROWS_AS(learning_curve(probe, x, y, {31}, 9), ConfigError);  // pool is 30
        CHECK_THROWS_AS(learning_curve(probe, x, y, {}, 9), ConfigError);
    }
}

TEST_CASE("a memorizing model shows the train/val gap") {
    const auto c = make_nn_case();
    const auto curve = learning_curve(nn_pipeline(), c.x, c.y, {4, 14}, 13);
    for (const auto& p : curve) {
        // 1-NN reproduces its own training set exactly
        CHECK(p.train_score.accuracy == 1.0);
        CHECK(p.val_score.accuracy >= 0.5);
        CHECK(p.train_score.accuracy >= p.val_score.accuracy);
    }
}

TEST_CASE("report CSV layout") {
    EvalReport r;
    FoldResult a;
    a.cm = confusion({1, 0}, {1, 0});
    a.m = metrics(a.cm);
    FoldResult b;
    b.cm = confusion({1, 1, 0, 0}, {0, 0, 0, 0});
    b.m = metrics(b.cm);
    r.folds = {a, b};
    std::stringstream ss;
    save_report_csv(ss, r);
    std::string line;
    std::getline(ss, line);
    CHECK(line == "fold,acc,pre,rec,f1");
    std::getline(ss, line);
    CHECK(line.rfind("0,1,1,1,1", 0) == 0);
    std::getline(ss, line);
    // undefined precision/f1 leave empty cells: "1,0.5,,0,"
    CHECK(line == "1,0.5,,0,");
}

TEST_CASE("learning curve CSV layout") {
    LearningCurvePoint p;
    p.train_size = 8;
    p.train_score.accuracy = 1.0;
    p.train_score.f1 = 1.0;
    p.val_score.accuracy = 0.75;
    std::stringstream ss;
    save_learning_curve_csv(ss, {p});
    std::string line;
    std::getline(ss, line);
    CHECK(line == "size,train_acc,val_acc,train_f1,val_f1");
    std::getline(ss, line);
    CHECK(line == "8,1,0.75,1,");
}
