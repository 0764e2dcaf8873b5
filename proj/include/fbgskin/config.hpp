#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fbgskin/neural.hpp"
#include "fbgskin/pipeline.hpp"
#include "fbgskin/simulator.hpp"

namespace fbgskin {

// Flat run configuration; persisted as plain-text key=value with flag
// overrides on top. Unknown keys are rejected.
struct RunConfig {
    // simulator / layout
    double peak_sensitivity = 0.0485;  // nm/N
    double sigma_par = 18.0;           // mm
    double sigma_perp = 13.0;          // mm
    double thickness_exp_s = 0.008;
    double thickness_exp_w = 1.0;
    double noise_pm = 0.3;             // interrogator sigma, pm
    bool dual_lobe = false;
    double thickness = 8.0;            // mm

    // dataset generation
    int n_indentations = 2700;
    std::uint64_t gen_seed = 7;
    bool gzip = false;

    // pipeline / training
    int window = 8;
    double gate_n = 0.050;
    int hidden1 = 128, hidden2 = 128, hidden3 = 64;
    double dropout = 0.2;
    int frames_per_indentation = 24;
    double force_lr = 0.002;
    int force_epochs = 50;
    double loc_lr = 0.02;
    int loc_epochs = 12;
    int minibatch = 50;
    std::uint64_t train_seed = 1;

    // split
    double test_frac = 0.15;
    int folds = 5;
    std::uint64_t split_seed = 42;

    // evaluation / reporting
    int force_bins = 10;
    double map_pitch = 5.0;
    double rf_map_pitch = 1.0;
    bool fit_on_log_force = false;  // psychometric sensitivity switch

    void set(const std::string& key, const std::string& value);  // throws on unknown key
    std::vector<std::pair<std::string, std::string>> entries() const;  // sorted
    std::uint64_t hash() const;

    SkinLayout make_layout() const;
    FieldParams make_field_params() const;
    PipelineConfig make_pipeline_config() const;
};

RunConfig load_config(const std::string& path);  // key=value lines, '#' comments

// key=value manifest, one per line, UTF-8, LF; no timestamps so reruns
// are byte-identical.
void write_manifest(const RunConfig& cfg, const std::string& command,
                    const std::string& out_dir);

}  // namespace fbgskin
