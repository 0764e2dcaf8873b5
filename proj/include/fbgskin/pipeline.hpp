#pragma once

#include <array>
#include <string>
#include <vector>

#include "fbgskin/neural.hpp"
#include "fbgskin/simulator.hpp"
#include "fbgskin/split.hpp"

namespace fbgskin {

// Grids live in rebased surface coordinates: u = x + 45 in [0, 90],
// v = y in [0, 120].
constexpr double kAreaWidth = 90.0;
constexpr double kAreaHeight = 120.0;

inline Vec2 to_grid_coords(const SurfacePoint& p) { return Vec2(p.x + 45.0, p.y); }
inline SurfacePoint from_grid_coords(const Vec2& uv) { return {uv.x() - 45.0, uv.y()}; }

struct GridSpec {
    std::string name;
    double x_off = 0.0, y_off = 0.0;  // grid origin offset, mm
    int cols = 0, rows = 0;
    double cell_w = 18.0, cell_h = 20.0;

    int cell_count() const { return cols * rows; }
    Vec2 cell_center(int index) const;  // rebased coords
};

// The four half-pitch-shifted virtual grids (30/35/36/42 cells).
std::array<GridSpec, 4> build_grids();

// Cell index (row * cols + col) of a rebased point; cells are half-open,
// with the outermost boundary closed. Throws outside the sensed area.
int cell_of(const GridSpec& grid, double u, double v);
int cell_of(const GridSpec& grid, const Vec2& uv);

// Overlap fusion: scores the 10 x 12 raster of 9 x 10 mm subcells with the
// sum of the four class weights covering each subcell center and returns
// the weighted barycenter, clamped to the sensed rectangle.
SurfacePoint nip_integrate(const std::array<Eigen::VectorXd, 4>& weights,
                           const std::array<GridSpec, 4>& grids);

nn::NetworkSpec force_net_spec(int window);
nn::NetworkSpec loc_net_spec(int cells, const std::array<int, 3>& hidden, double dropout);

struct PipelineConfig {
    int window = 8;                       // CNN time steps
    double gate = 0.050;                  // N; localization runs above this
    std::array<int, 3> loc_hidden{128, 128, 64};
    double loc_dropout = 0.2;
    int frames_per_indentation = 24;      // training frames sampled per ramp
    nn::TrainConfig force_train{0.002, 0.9, 50, 50, 0};
    nn::TrainConfig loc_train{0.02, 0.9, 50, 12, 0};
    std::uint64_t seed = 1;

    void validate() const;
};

struct PipelineModel {
    int window = 8;
    double gate = 0.050;
    std::array<GridSpec, 4> grids;
    nn::Network force_net;
    nn::NormStats force_stats;        // per channel
    std::vector<nn::Network> loc_nets;  // one per grid, same order
    nn::NormStats loc_stats;          // per channel
};

struct ContactEstimate {
    bool contact = false;
    double force = 0.0;     // N, the force-net estimate
    SurfacePoint point;     // valid only when contact
};

// Training samples drawn from the increasing-load phase of each ramp.
struct TrainingSamples {
    std::vector<nn::Tensor> force_windows;  // normalized (channels, window)
    Eigen::MatrixXd force_targets;          // n x 1, N
    Eigen::MatrixXd loc_features;           // normalized, n x channels
    std::array<Eigen::VectorXi, 4> loc_labels;
    std::vector<SurfacePoint> loc_points;
    Eigen::VectorXd loc_forces;
    nn::NormStats force_stats;  // fitted here, from these samples only
    nn::NormStats loc_stats;
};

// Raw (channels, window) block ending at frame t; windows reaching before
// the trial start are left-padded with idle (zero-shift) frames.
Eigen::MatrixXd window_at(const Indentation& ind, int t, int window);

// Frame indices sampled from one increasing-load phase.
std::vector<int> ramp_sample_indices(const Indentation& ind, int frames_per_indentation);

TrainingSamples extract_training_samples(const Dataset& dataset,
                                         const std::vector<int>& ids,
                                         const PipelineConfig& cfg,
                                         const std::array<GridSpec, 4>& grids);

// Trains the force regressor and the four grid classifiers on the plan's
// train split; throws on a leaky plan.
PipelineModel train_pipeline(const Dataset& dataset, const SplitPlan& plan,
                             const PipelineConfig& cfg);
PipelineModel train_pipeline_on_ids(const Dataset& dataset, const std::vector<int>& ids,
                                    const PipelineConfig& cfg);

double force_estimate(const PipelineModel& model, const Eigen::MatrixXd& raw_window);
std::array<Eigen::VectorXd, 4> loc_outputs(const PipelineModel& model,
                                           const Eigen::VectorXd& raw_frame);

ContactEstimate infer(const PipelineModel& model, const Eigen::MatrixXd& raw_window);

void save_model_bundle(const PipelineModel& model, const std::string& dir);
PipelineModel load_model_bundle(const std::string& dir);

}  // namespace fbgskin
