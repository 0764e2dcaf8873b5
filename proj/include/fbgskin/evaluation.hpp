#pragma once

#include <array>
#include <utility>
#include <vector>

#include "fbgskin/pipeline.hpp"
#include "fbgskin/split.hpp"

namespace fbgskin {

struct MedianIqr {
    double median = 0.0;
    double iqr = 0.0;
};

// Linear-interpolation percentiles; IQR = Q3 - Q1.
MedianIqr median_iqr(const std::vector<double>& values);

double localization_error(const SurfacePoint& pred, const SurfacePoint& truth);

// Random-guess constants: per-dimension medians of the training targets.
double rg_force_baseline(const std::vector<double>& train_forces);
SurfacePoint rg_loc_baseline(const std::vector<SurfacePoint>& train_points);

enum class WilcoxonMethod { Auto, Exact, Normal };

struct WilcoxonResult {
    double w = 0.0;   // sum of positive ranks
    double p = 1.0;
    int n = 0;        // pairs after dropping zero differences
    bool exact = false;
};

// Paired two-sided signed-rank test: zero differences dropped, ties
// mid-ranked; exact enumeration for n <= 12, tie-corrected normal
// approximation with continuity correction above.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x,
                                    const std::vector<double>& y,
                                    WilcoxonMethod method = WilcoxonMethod::Auto);

// mean / sample std (n-1) of paired differences.
double cohens_d(const std::vector<double>& diffs);

struct ForceProfile {
    std::vector<double> bin_centers;
    std::vector<double> bin_medians;
    std::vector<int> bin_counts;
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

// Medians of |error| in equal-width force bins over [0.05, 2.5] N plus an
// ordinary least-squares line through (bin center, bin median).
ForceProfile error_vs_force_profile(const std::vector<std::pair<double, double>>& pairs,
                                    int bins);

struct ReceptiveFieldReport {
    std::vector<double> areas_mm2;   // hot-spot area per sensor
    double median_area_mm2 = 0.0;
    std::vector<int> lobe_counts;    // connected hot-spot regions per sensor
    double pitch = 0.5;
    std::vector<Eigen::MatrixXd> force_for_shift;  // F* maps (N), when kept
};

ReceptiveFieldReport receptive_field_report(const SkinLayout& layout,
                                            const FieldParams& params, double pitch = 0.5,
                                            bool keep_maps = false);

struct SpatialMap {
    double pitch = 5.0;
    int nx = 0, ny = 0;
    Eigen::MatrixXd median_err;  // row = y cell, col = x cell; NaN when empty
    Eigen::MatrixXd counts;
};

// Raw per-sample evaluation material for one id set.
struct SampleErrors {
    std::vector<double> force_truth, force_err;
    std::vector<double> loc_force_truth;
    std::array<std::vector<double>, 5> loc_err;  // SG, VSG, HSG, DSG, UNION
    std::vector<SurfacePoint> loc_truth;
    std::vector<double> rg_force_err, rg_loc_err;  // filled when constants given
};

struct FoldForceRow {
    MedianIqr train, val;
};

struct FoldLocRow {
    std::array<MedianIqr, 5> train, val;  // SG, VSG, HSG, DSG, UNION
};

struct EvalConfig {
    int force_bins = 10;
    double map_pitch = 5.0;
    bool run_cv = true;
    bool parallel_folds = true;
};

struct EvalReport {
    // cross-validation (one row per fold)
    std::vector<FoldForceRow> force_cv;
    std::vector<FoldLocRow> loc_cv;
    // held-out test set
    MedianIqr force_test;
    std::array<MedianIqr, 5> loc_test;  // SG, VSG, HSG, DSG, UNION
    long n_force_test = 0, n_loc_test = 0;
    // random-guess baselines (constants from the train split)
    double rg_force_const = 0.0;
    SurfacePoint rg_loc_const;
    MedianIqr rg_force_err, rg_loc_err;
    // significance vs the baselines
    WilcoxonResult wilcoxon_force, wilcoxon_loc;
    double cohens_d_force = 0.0, cohens_d_loc = 0.0;
    // error structure
    ForceProfile force_profile, loc_profile;
    SpatialMap force_map, loc_map;
    ReceptiveFieldReport rf;
};

// Grid-net names in reporting order (matches loc_err slots 0..4).
extern const std::array<const char*, 5> kLocNetNames;

SampleErrors collect_sample_errors(const PipelineModel& model, const Dataset& dataset,
                                   const std::vector<int>& ids, const PipelineConfig& pcfg,
                                   const double* rg_force, const SurfacePoint* rg_loc);

EvalReport evaluate(const PipelineModel& model, const Dataset& dataset,
                    const SplitPlan& plan, const PipelineConfig& pcfg,
                    const EvalConfig& ecfg = {});

}  // namespace fbgskin
