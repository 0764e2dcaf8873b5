#include "fbgskin/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "fbgskin/percentile.hpp"

namespace fbgskin {

const std::array<const char*, 5> kLocNetNames = {"SG-NN", "VSG-NN", "HSG-NN", "DSG-NN",
                                                 "UNION"};

MedianIqr median_iqr(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("median_iqr of empty list");
    MedianIqr out;
    out.median = percentile(values, 0.5);
    out.iqr = percentile(values, 0.75) - percentile(values, 0.25);
    return out;
}

double localization_error(const SurfacePoint& pred, const SurfacePoint& truth) {
    return surface_distance(pred, truth);
}

double rg_force_baseline(const std::vector<double>& train_forces) {
    if (train_forces.empty()) throw std::invalid_argument("empty train forces");
    return percentile(train_forces, 0.5);
}

SurfacePoint rg_loc_baseline(const std::vector<SurfacePoint>& train_points) {
    if (train_points.empty()) throw std::invalid_argument("empty train points");
    std::vector<double> xs, ys;
    xs.reserve(train_points.size());
    ys.reserve(train_points.size());
    for (const auto& p : train_points) {
        xs.push_back(p.x);
        ys.push_back(p.y);
    }
    return {percentile(xs, 0.5), percentile(ys, 0.5)};
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x,
                                    const std::vector<double>& y, WilcoxonMethod method) {
    if (x.size() != y.size()) throw std::invalid_argument("wilcoxon: unpaired samples");
    if (x.size() < 5) throw std::invalid_argument("wilcoxon: need >= 5 pairs");
    std::vector<double> d;
    for (size_t i = 0; i < x.size(); ++i) {
        const double v = x[i] - y[i];
        if (v != 0.0) d.push_back(v);
    }
    const int n = static_cast<int>(d.size());
    if (n == 0) throw std::runtime_error("wilcoxon undefined: all differences zero");

    // mid-ranks of |d|
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return std::abs(d[a]) < std::abs(d[b]); });
    std::vector<double> rank(n, 0.0);
    std::vector<int> tie_sizes;
    for (int i = 0; i < n;) {
        int j = i;
        while (j < n && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
        const double mid = 0.5 * (i + 1 + j);  // average of ranks i+1 .. j
        for (int k = i; k < j; ++k) rank[order[k]] = mid;
        tie_sizes.push_back(j - i);
        i = j;
    }

    WilcoxonResult res;
    res.n = n;
    for (int i = 0; i < n; ++i)
        if (d[i] > 0.0) res.w += rank[i];

    const bool use_exact =
        method == WilcoxonMethod::Exact || (method == WilcoxonMethod::Auto && n <= 12);
    if (use_exact) {
        if (n > 25) throw std::invalid_argument("exact wilcoxon limited to n <= 25");
        // enumerate sign assignments over the observed rank multiset
        const std::uint64_t total = 1ULL << n;
        std::uint64_t le = 0, ge = 0;
        const double eps = 1e-9;
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            double t = 0.0;
            for (int i = 0; i < n; ++i)
                if (mask & (1ULL << i)) t += rank[i];
            if (t <= res.w + eps) ++le;
            if (t >= res.w - eps) ++ge;
        }
        const double p_le = static_cast<double>(le) / static_cast<double>(total);
        const double p_ge = static_cast<double>(ge) / static_cast<double>(total);
        res.p = std::min(1.0, 2.0 * std::min(p_le, p_ge));
        res.exact = true;
    } else {
        const double mu = n * (n + 1) / 4.0;
        double tie_corr = 0.0;
        for (int t : tie_sizes) tie_corr += static_cast<double>(t) * t * t - t;
        const double var = n * (n + 1) * (2.0 * n + 1.0) / 24.0 - tie_corr / 48.0;
        if (!(var > 0.0)) throw std::runtime_error("wilcoxon undefined: zero variance");
        const double dev = res.w - mu;
        const double cc = (dev > 0.0) ? -0.5 : (dev < 0.0 ? 0.5 : 0.0);
        const double z = (dev + cc) / std::sqrt(var);
        res.p = std::min(1.0, 2.0 * normal_cdf(-std::abs(z)));
        res.exact = false;
    }
    return res;
}

double cohens_d(const std::vector<double>& diffs) {
    const int n = static_cast<int>(diffs.size());
    if (n < 2) throw std::invalid_argument("cohens_d needs >= 2 samples");
    const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : diffs) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1));
    if (!(sd > 0.0)) throw std::runtime_error("cohens_d undefined: zero variance");
    return mean / sd;
}

ForceProfile error_vs_force_profile(const std::vector<std::pair<double, double>>& pairs,
                                    int bins) {
    if (bins < 2) throw std::invalid_argument("need >= 2 bins");
    const double lo = 0.05, hi = 2.5;
    const double width = (hi - lo) / bins;
    std::vector<std::vector<double>> bucket(bins);
    for (const auto& [force, err] : pairs) {
        if (force < lo || force > hi) continue;
        int b = static_cast<int>((force - lo) / width);
        b = std::min(b, bins - 1);
        bucket[b].push_back(err);
    }
    ForceProfile prof;
    for (int b = 0; b < bins; ++b) {
        if (bucket[b].empty()) continue;
        prof.bin_centers.push_back(lo + (b + 0.5) * width);
        prof.bin_medians.push_back(percentile(bucket[b], 0.5));
        prof.bin_counts.push_back(static_cast<int>(bucket[b].size()));
    }
    const int m = static_cast<int>(prof.bin_centers.size());
    if (m < 2) throw std::invalid_argument("fewer than 2 non-empty force bins");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < m; ++i) {
        sx += prof.bin_centers[i];
        sy += prof.bin_medians[i];
        sxx += prof.bin_centers[i] * prof.bin_centers[i];
        sxy += prof.bin_centers[i] * prof.bin_medians[i];
    }
    const double denom = m * sxx - sx * sx;
    prof.slope = (m * sxy - sx * sy) / denom;
    prof.intercept = (sy - prof.slope * sx) / m;
    double ss_res = 0, ss_tot = 0;
    const double ybar = sy / m;
    for (int i = 0; i < m; ++i) {
        const double fit = prof.slope * prof.bin_centers[i] + prof.intercept;
        ss_res += (prof.bin_medians[i] - fit) * (prof.bin_medians[i] - fit);
        ss_tot += (prof.bin_medians[i] - ybar) * (prof.bin_medians[i] - ybar);
    }
    prof.r2 = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 0.0;
    return prof;
}

namespace {

int count_components(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask) {
    const int ny = static_cast<int>(mask.rows());
    const int nx = static_cast<int>(mask.cols());
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> seen(ny, nx);
    seen.setConstant(false);
    int comps = 0;
    std::vector<std::pair<int, int>> stack;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            if (!mask(j, i) || seen(j, i)) continue;
            ++comps;
            stack.push_back({j, i});
            seen(j, i) = true;
            while (!stack.empty()) {
                auto [r, c] = stack.back();
                stack.pop_back();
                const int dr[4] = {1, -1, 0, 0};
                const int dc[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    const int rr = r + dr[k], cc = c + dc[k];
                    if (rr < 0 || rr >= ny || cc < 0 || cc >= nx) continue;
                    if (mask(rr, cc) && !seen(rr, cc)) {
                        seen(rr, cc) = true;
                        stack.push_back({rr, cc});
                    }
                }
            }
        }
    }
    return comps;
}

}  // namespace

ReceptiveFieldReport receptive_field_report(const SkinLayout& layout,
                                            const FieldParams& params, double pitch,
                                            bool keep_maps) {
    params.validate();
    ReceptiveFieldReport report;
    report.pitch = pitch;
    const double level = kHotspotShift / kHotspotMaxForce;
    for (size_t s = 0; s < layout.sensors.size(); ++s) {
        const Eigen::MatrixXd r =
            per_newton_response_raster(layout, params, static_cast<int>(s), pitch);
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask =
            (r.array() >= level).matrix();
        report.areas_mm2.push_back(static_cast<double>(mask.count()) * pitch * pitch);
        report.lobe_counts.push_back(count_components(mask));
        if (keep_maps) {
            report.force_for_shift.push_back(
                (kHotspotShift / r.array().max(1e-300)).matrix());
        }
    }
    report.median_area_mm2 = median_of(report.areas_mm2);
    return report;
}

SampleErrors collect_sample_errors(const PipelineModel& model, const Dataset& dataset,
                                   const std::vector<int>& ids, const PipelineConfig& pcfg,
                                   const double* rg_force, const SurfacePoint* rg_loc) {
    SampleErrors out;
    const int W = model.window;
    for (int id : ids) {
        const Indentation& ind = dataset.indentations.at(id);
        for (int t : ramp_sample_indices(ind, pcfg.frames_per_indentation)) {
            const Eigen::MatrixXd win = window_at(ind, t, W);
            const double truth = ind.frames[t].force_z;
            const double est = force_estimate(model, win);
            out.force_truth.push_back(truth);
            out.force_err.push_back(std::abs(est - truth));
            if (rg_force) out.rg_force_err.push_back(std::abs(*rg_force - truth));

            if (truth > model.gate) {
                const auto outputs = loc_outputs(model, ind.frames[t].shifts);
                for (int g = 0; g < 4; ++g) {
                    int best = 0;
                    outputs[g].maxCoeff(&best);
                    const SurfacePoint pred =
                        from_grid_coords(model.grids[g].cell_center(best));
                    out.loc_err[g].push_back(localization_error(pred, ind.location));
                }
                const SurfacePoint fused = nip_integrate(outputs, model.grids);
                out.loc_err[4].push_back(localization_error(fused, ind.location));
                out.loc_truth.push_back(ind.location);
                out.loc_force_truth.push_back(truth);
                if (rg_loc) out.rg_loc_err.push_back(localization_error(*rg_loc, ind.location));
            }
        }
    }
    return out;
}

namespace {

struct FoldOutcome {
    FoldForceRow force;
    FoldLocRow loc;
};

FoldOutcome run_fold(const Dataset& dataset, const SplitPlan& plan, int fold,
                     const PipelineConfig& pcfg) {
    std::vector<int> train_ids;
    for (int f = 0; f < static_cast<int>(plan.folds.size()); ++f) {
        if (f == fold) continue;
        train_ids.insert(train_ids.end(), plan.folds[f].begin(), plan.folds[f].end());
    }
    PipelineConfig fold_cfg = pcfg;
    fold_cfg.seed = derive_seed(pcfg.seed, 1000 + static_cast<std::uint64_t>(fold));
    const PipelineModel m = train_pipeline_on_ids(dataset, train_ids, fold_cfg);

    FoldOutcome out;
    const SampleErrors tr =
        collect_sample_errors(m, dataset, train_ids, pcfg, nullptr, nullptr);
    const SampleErrors va =
        collect_sample_errors(m, dataset, plan.folds[fold], pcfg, nullptr, nullptr);
    out.force.train = median_iqr(tr.force_err);
    out.force.val = median_iqr(va.force_err);
    for (int g = 0; g < 5; ++g) {
        out.loc.train[g] = median_iqr(tr.loc_err[g]);
        out.loc.val[g] = median_iqr(va.loc_err[g]);
    }
    return out;
}

SpatialMap build_spatial_map(const std::vector<SurfacePoint>& points,
                             const std::vector<double>& errors, double pitch) {
    SpatialMap map;
    map.pitch = pitch;
    map.nx = static_cast<int>(std::lround(kAreaWidth / pitch));
    map.ny = static_cast<int>(std::lround(kAreaHeight / pitch));
    std::vector<std::vector<std::vector<double>>> cells(
        map.ny, std::vector<std::vector<double>>(map.nx));
    for (size_t i = 0; i < points.size(); ++i) {
        const Vec2 uv = to_grid_coords(points[i]);
        int cx = std::min(static_cast<int>(uv.x() / pitch), map.nx - 1);
        int cy = std::min(static_cast<int>(uv.y() / pitch), map.ny - 1);
        cx = std::max(cx, 0);
        cy = std::max(cy, 0);
        cells[cy][cx].push_back(errors[i]);
    }
    map.median_err = Eigen::MatrixXd::Constant(map.ny, map.nx,
                                               std::numeric_limits<double>::quiet_NaN());
    map.counts = Eigen::MatrixXd::Zero(map.ny, map.nx);
    for (int j = 0; j < map.ny; ++j) {
        for (int i = 0; i < map.nx; ++i) {
            map.counts(j, i) = static_cast<double>(cells[j][i].size());
            if (!cells[j][i].empty()) map.median_err(j, i) = median_of(cells[j][i]);
        }
    }
    return map;
}

}  // namespace

EvalReport evaluate(const PipelineModel& model, const Dataset& dataset,
                    const SplitPlan& plan, const PipelineConfig& pcfg,
                    const EvalConfig& ecfg) {
    plan.validate(static_cast<int>(dataset.indentations.size()));
    EvalReport report;

    // random-guess constants come from the train split only
    {
        TrainingSamples train =
            extract_training_samples(dataset, plan.train_ids, pcfg, model.grids);
        std::vector<double> forces(train.force_targets.data(),
                                   train.force_targets.data() + train.force_targets.rows());
        report.rg_force_const = rg_force_baseline(forces);
        report.rg_loc_const = rg_loc_baseline(train.loc_points);
    }

    if (ecfg.run_cv) {
        const int k = static_cast<int>(plan.folds.size());
        report.force_cv.resize(k);
        report.loc_cv.resize(k);
        if (ecfg.parallel_folds) {
            std::vector<std::future<FoldOutcome>> futs;
            for (int f = 0; f < k; ++f)
                futs.push_back(std::async(std::launch::async, run_fold, std::cref(dataset),
                                          std::cref(plan), f, std::cref(pcfg)));
            for (int f = 0; f < k; ++f) {
                const FoldOutcome out = futs[f].get();
                report.force_cv[f] = out.force;
                report.loc_cv[f] = out.loc;
            }
        } else {
            for (int f = 0; f < k; ++f) {
                const FoldOutcome out = run_fold(dataset, plan, f, pcfg);
                report.force_cv[f] = out.force;
                report.loc_cv[f] = out.loc;
            }
        }
    }

    // held-out test evaluation with the provided model
    const SampleErrors test = collect_sample_errors(
        model, dataset, plan.test_ids, pcfg, &report.rg_force_const, &report.rg_loc_const);
    report.force_test = median_iqr(test.force_err);
    for (int g = 0; g < 5; ++g) report.loc_test[g] = median_iqr(test.loc_err[g]);
    report.n_force_test = static_cast<long>(test.force_err.size());
    report.n_loc_test = static_cast<long>(test.loc_err[4].size());
    report.rg_force_err = median_iqr(test.rg_force_err);
    report.rg_loc_err = median_iqr(test.rg_loc_err);

    report.wilcoxon_force = wilcoxon_signed_rank(test.rg_force_err, test.force_err);
    report.wilcoxon_loc = wilcoxon_signed_rank(test.rg_loc_err, test.loc_err[4]);
    {
        std::vector<double> dF(test.force_err.size()), dL(test.loc_err[4].size());
        for (size_t i = 0; i < dF.size(); ++i) dF[i] = test.rg_force_err[i] - test.force_err[i];
        for (size_t i = 0; i < dL.size(); ++i) dL[i] = test.rg_loc_err[i] - test.loc_err[4][i];
        report.cohens_d_force = cohens_d(dF);
        report.cohens_d_loc = cohens_d(dL);
    }

    std::vector<std::pair<double, double>> force_pairs, loc_pairs;
    for (size_t i = 0; i < test.force_err.size(); ++i)
        force_pairs.push_back({test.force_truth[i], test.force_err[i]});
    for (size_t i = 0; i < test.loc_err[4].size(); ++i)
        loc_pairs.push_back({test.loc_force_truth[i], test.loc_err[4][i]});
    report.force_profile = error_vs_force_profile(force_pairs, ecfg.force_bins);
    report.loc_profile = error_vs_force_profile(loc_pairs, ecfg.force_bins);

    // spatial maps keyed by the true contact location
    {
        std::vector<SurfacePoint> force_pts;
        for (int id : plan.test_ids) {
            const auto& ind = dataset.indentations.at(id);
            const auto idx = ramp_sample_indices(ind, pcfg.frames_per_indentation);
            for (size_t j = 0; j < idx.size(); ++j) force_pts.push_back(ind.location);
        }
        report.force_map = build_spatial_map(force_pts, test.force_err, ecfg.map_pitch);
        report.loc_map = build_spatial_map(test.loc_truth, test.loc_err[4], ecfg.map_pitch);
    }

    report.rf = receptive_field_report(dataset.layout, dataset.params);
    return report;
}

}  // namespace fbgskin
