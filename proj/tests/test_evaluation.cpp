#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "fbgskin/evaluation.hpp"
#include "fbgskin/random.hpp"
#include "wilcoxon_oracle.hpp"

using namespace fbgskin;
using testing::oracle_two_sided_p;

TEST_CASE("median and interquartile range") {
    CHECK(median_iqr({1, 2, 3, 4, 5}).median == doctest::Approx(3.0));
    CHECK(median_iqr({1, 2, 3, 4, 5}).iqr == doctest::Approx(2.0));
    CHECK(median_iqr({7}).median == 7.0);
    CHECK(median_iqr({7}).iqr == 0.0);
    CHECK_THROWS_AS(median_iqr({}), std::invalid_argument);

    SUBCASE("permutation invariant") {
        std::vector<double> v = {4.5, -1.0, 3.25, 9.0, 0.5, 2.0, 2.0};
        const MedianIqr a = median_iqr(v);
        std::reverse(v.begin(), v.end());
        const MedianIqr b = median_iqr(v);
        CHECK(a.median == b.median);
        CHECK(a.iqr == b.iqr);
    }
    SUBCASE("uniform sample distribution") {
        RngStream rng(8);
        std::vector<double> v(100000);
        for (auto& x : v) x = rng.uniform();
        const MedianIqr m = median_iqr(v);
        CHECK(m.median == doctest::Approx(0.5).epsilon(0.02));
        CHECK(m.iqr == doctest::Approx(0.5).epsilon(0.02));
    }
}

TEST_CASE("random-guess baselines") {
    CHECK(rg_force_baseline({1.0, 2.0, 3.0}) == doctest::Approx(2.0));
    const SurfacePoint c = rg_loc_baseline({{0, 0}, {2, 10}, {4, 20}});
    CHECK(c.x == doctest::Approx(2.0));
    CHECK(c.y == doctest::Approx(10.0));
    CHECK_THROWS_AS(rg_force_baseline({}), std::invalid_argument);
}

TEST_CASE("localization error is symmetric") {
    const SurfacePoint p{3.0, 4.0}, q{-1.0, 60.0};
    CHECK(localization_error(p, q) == localization_error(q, p));
    CHECK(localization_error(p, p) == 0.0);
}

TEST_CASE("wilcoxon signed-rank test") {
    SUBCASE("five positive differences, exact two-sided p") {
        const std::vector<double> x = {1, 2, 3, 4, 5};
        const std::vector<double> y = {0, 0, 0, 0, 0};
        const WilcoxonResult r = wilcoxon_signed_rank(x, y);
        CHECK(r.exact);
        CHECK(r.w == doctest::Approx(15.0));
        CHECK(r.p == doctest::Approx(2.0 / 32.0).epsilon(1e-12));
    }
    SUBCASE("perfectly antisymmetric differences give p = 1") {
        const std::vector<double> x = {1, -1, 2, -2, 3, -3};
        const std::vector<double> y(6, 0.0);
        const WilcoxonResult r = wilcoxon_signed_rank(x, y);
        CHECK(r.p == doctest::Approx(1.0));
    }
    SUBCASE("matches an independent enumeration oracle for n <= 10") {
        RngStream rng(31);
        for (int n = 5; n <= 10; ++n) {
            for (int rep = 0; rep < 20; ++rep) {
                std::vector<double> x(n), y(n, 0.0);
                for (int i = 0; i < n; ++i) {
                    x[i] = std::round(rng.uniform(-5.0, 8.0));
                    if (x[i] == 0.0) x[i] = 1.0;
                }
                const WilcoxonResult r = wilcoxon_signed_rank(x, y);
                CHECK(r.p == doctest::Approx(oracle_two_sided_p(x)).epsilon(1e-12));
            }
        }
    }
    SUBCASE("normal approximation stays within 5e-2 of exact for n <= 10") {
        // with tie-free differences; mid-ranked ties can disagree by ~0.1
        RngStream rng(32);
        for (int n = 6; n <= 10; ++n) {
            for (int rep = 0; rep < 20; ++rep) {
                std::vector<double> x(n), y(n, 0.0);
                for (int i = 0; i < n; ++i) {
                    x[i] = rng.uniform(-1.0, 2.0);
                    if (x[i] == 0.0) x[i] = 0.5;
                }
                const double pe = wilcoxon_signed_rank(x, y, WilcoxonMethod::Exact).p;
                const double pn = wilcoxon_signed_rank(x, y, WilcoxonMethod::Normal).p;
                CHECK(std::abs(pe - pn) < 5e-2);
            }
        }
    }
    SUBCASE("n = 12: exact enumeration matches the oracle; normal stays close") {
        RngStream rng(33);
        for (int rep = 0; rep < 10; ++rep) {
            std::vector<double> x(12), y(12, 0.0);
            for (int i = 0; i < 12; ++i) x[i] = rng.uniform(-0.8, 1.3);
            const WilcoxonResult r = wilcoxon_signed_rank(x, y);  // auto -> exact
            CHECK(r.exact);
            CHECK(r.p == doctest::Approx(oracle_two_sided_p(x)).epsilon(1e-12));
            const double pn = wilcoxon_signed_rank(x, y, WilcoxonMethod::Normal).p;
            CHECK(std::abs(r.p - pn) < 5e-2);
        }
    }
    SUBCASE("all-zero differences are undefined") {
        const std::vector<double> x(6, 1.0), y(6, 1.0);
        CHECK_THROWS_AS(wilcoxon_signed_rank(x, y), std::runtime_error);
    }
    SUBCASE("unequal lengths rejected") {
        CHECK_THROWS_AS(wilcoxon_signed_rank({1, 2, 3, 4, 5}, {1, 2, 3, 4}),
                        std::invalid_argument);
    }
}

TEST_CASE("effect size") {
    CHECK(cohens_d({1.0, -1.0}) == doctest::Approx(0.0));
    CHECK(cohens_d({2.0, 0.0}) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(cohens_d({3.0, 3.0, 3.0}), std::runtime_error);
    CHECK_THROWS_AS(cohens_d({3.0}), std::invalid_argument);
}

TEST_CASE("error-vs-force profile") {
    SUBCASE("perfectly linear medians fit with R^2 = 1") {
        std::vector<std::pair<double, double>> pairs;
        for (int b = 0; b < 10; ++b) {
            const double center = 0.05 + (2.45 / 10) * (b + 0.5);
            for (int k = 0; k < 5; ++k) pairs.push_back({center, 0.02 * center + 0.001});
        }
        const ForceProfile prof = error_vs_force_profile(pairs, 10);
        CHECK(prof.slope == doctest::Approx(0.02).epsilon(1e-9));
        CHECK(prof.intercept == doctest::Approx(0.001).epsilon(1e-6));
        CHECK(prof.r2 == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("constant medians give slope 0 and R^2 = 0") {
        std::vector<std::pair<double, double>> pairs;
        for (int b = 0; b < 10; ++b) {
            const double center = 0.05 + (2.45 / 10) * (b + 0.5);
            pairs.push_back({center, 0.5});
        }
        const ForceProfile prof = error_vs_force_profile(pairs, 10);
        CHECK(prof.slope == doctest::Approx(0.0));
        CHECK(prof.r2 == 0.0);
    }
    SUBCASE("needs two non-empty bins") {
        CHECK_THROWS_AS(error_vs_force_profile({{1.0, 0.5}}, 10), std::invalid_argument);
    }
}

TEST_CASE("split plans") {
    SUBCASE("published sizes for 2700 indentations") {
        const SplitPlan plan = make_split(2700, 0.15, 5, 9);
        CHECK(plan.test_ids.size() == 405);
        CHECK(plan.train_ids.size() == 2295);
        for (const auto& fold : plan.folds) CHECK(fold.size() == 459);
        plan.validate(2700);
    }
    SUBCASE("folds partition the train set exactly") {
        const SplitPlan plan = make_split(103, 0.15, 5, 3);
        std::vector<int> joined;
        for (const auto& f : plan.folds) joined.insert(joined.end(), f.begin(), f.end());
        std::vector<int> train = plan.train_ids;
        std::sort(joined.begin(), joined.end());
        std::sort(train.begin(), train.end());
        CHECK(joined == train);
        // fold sizes differ by at most one
        size_t lo = 1e9, hi = 0;
        for (const auto& f : plan.folds) {
            lo = std::min(lo, f.size());
            hi = std::max(hi, f.size());
        }
        CHECK(hi - lo <= 1);
    }
    SUBCASE("deterministic") {
        const SplitPlan a = make_split(500, 0.15, 5, 77);
        const SplitPlan b = make_split(500, 0.15, 5, 77);
        CHECK(a.train_ids == b.train_ids);
        CHECK(a.test_ids == b.test_ids);
        CHECK(a.folds == b.folds);
    }
    SUBCASE("too many folds rejected") {
        CHECK_THROWS_AS(make_split(6, 0.15, 10, 1), std::invalid_argument);
    }
}

TEST_CASE("receptive-field characterization") {
    const SkinLayout layout = build_default_layout();

    SUBCASE("default fields have a single hot spot each") {
        const ReceptiveFieldReport rf = receptive_field_report(layout, FieldParams{});
        REQUIRE(rf.lobe_counts.size() == 16);
        for (int c : rf.lobe_counts) CHECK(c == 1);
        CHECK(rf.median_area_mm2 > 15.9 * 0.7);
        CHECK(rf.median_area_mm2 < 15.9 * 1.3);
    }
    SUBCASE("dual-lobe preset splits sensors 2, 12 and 13") {
        const FieldParams params = with_dual_lobe_preset(FieldParams{}, layout);
        const ReceptiveFieldReport rf = receptive_field_report(layout, params);
        for (int s = 0; s < 16; ++s) {
            const int idx = s + 1;
            const bool twin = idx == 2 || idx == 12 || idx == 13;
            CHECK(rf.lobe_counts[s] == (twin ? 2 : 1));
        }
    }
}

TEST_CASE("train statistics ignore the test split (canary audit)") {
    const SkinLayout layout = build_default_layout();
    const FieldParams params;
    IndentProtocol light;
    light.frames = 40;
    light.ramp_fraction = 0.5;
    Dataset ds = generate_dataset(layout, params, 20, 4, light);
    const SplitPlan plan = make_split(ds, 0.2, 3, 2);

    PipelineConfig cfg;
    cfg.frames_per_indentation = 5;
    const auto grids = build_grids();
    const TrainingSamples before = extract_training_samples(ds, plan.train_ids, cfg, grids);

    // poison a test-set indentation and recompute
    const int canary = plan.test_ids.front();
    for (auto& fr : ds.indentations[canary].frames) fr.shifts.array() += 123.456;
    const TrainingSamples after = extract_training_samples(ds, plan.train_ids, cfg, grids);

    CHECK(std::memcmp(before.force_stats.mean.data(), after.force_stats.mean.data(),
                      sizeof(double) * before.force_stats.mean.size()) == 0);
    CHECK(std::memcmp(before.force_stats.std.data(), after.force_stats.std.data(),
                      sizeof(double) * before.force_stats.std.size()) == 0);
    CHECK(std::memcmp(before.loc_stats.mean.data(), after.loc_stats.mean.data(),
                      sizeof(double) * before.loc_stats.mean.size()) == 0);

    // normalized training features are standardized
    for (long j = 0; j < before.loc_features.cols(); ++j) {
        const auto col = before.loc_features.col(j);
        CHECK(std::abs(col.mean()) < 1e-9);
        const double sd = std::sqrt(col.squaredNorm() / col.size() -
                                    col.mean() * col.mean());
        CHECK(sd == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("evaluation report structure on a small run") {
    const SkinLayout layout = build_default_layout();
    const FieldParams params;
    IndentProtocol light;
    light.frames = 60;
    light.ramp_fraction = 0.5;
    const Dataset ds = generate_dataset(layout, params, 24, 6, light);
    const SplitPlan plan = make_split(ds, 0.25, 3, 5);

    PipelineConfig cfg;
    cfg.frames_per_indentation = 6;
    cfg.loc_hidden = {16, 16, 8};
    cfg.force_train.epochs = 2;
    cfg.loc_train.epochs = 2;
    cfg.seed = 12;

    const PipelineModel model = train_pipeline(ds, plan, cfg);
    EvalConfig ecfg;
    ecfg.force_bins = 5;
    const EvalReport report = evaluate(model, ds, plan, cfg, ecfg);

    CHECK(report.force_cv.size() == 3);
    CHECK(report.loc_cv.size() == 3);
    CHECK(report.n_force_test > 0);
    CHECK(report.n_loc_test > 0);
    CHECK(report.rg_force_err.median > 0.0);
    CHECK(report.rg_loc_err.median > 0.0);
    CHECK(report.force_map.nx == 18);
    CHECK(report.force_map.ny == 24);
    CHECK(report.rf.areas_mm2.size() == 16);
    for (int g = 0; g < 5; ++g) CHECK(report.loc_test[g].median >= 0.0);

    SUBCASE("evaluation is a pure function of its inputs") {
        const EvalReport again = evaluate(model, ds, plan, cfg, ecfg);
        CHECK(again.force_test.median == report.force_test.median);
        CHECK(again.loc_test[4].median == report.loc_test[4].median);
        CHECK(again.wilcoxon_force.p == report.wilcoxon_force.p);
        for (size_t f = 0; f < report.force_cv.size(); ++f) {
            CHECK(again.force_cv[f].val.median == report.force_cv[f].val.median);
            CHECK(again.loc_cv[f].val[4].median == report.loc_cv[f].val[4].median);
        }
    }
}
