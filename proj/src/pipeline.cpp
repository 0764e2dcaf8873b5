#include "fbgskin/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fbgskin {

namespace fs = std::filesystem;

Vec2 GridSpec::cell_center(int index) const {
    if (index < 0 || index >= cell_count()) throw std::out_of_range("cell index");
    const int row = index / cols;
    const int col = index % cols;
    return Vec2(x_off + (col + 0.5) * cell_w, y_off + (row + 0.5) * cell_h);
}

std::array<GridSpec, 4> build_grids() {
    GridSpec sg{"SG", 0.0, 0.0, 5, 6};
    GridSpec vsg{"VSG", 0.0, -10.0, 5, 7};
    GridSpec hsg{"HSG", -9.0, 0.0, 6, 6};
    GridSpec dsg{"DSG", -9.0, -10.0, 6, 7};
    return {sg, vsg, hsg, dsg};
}

int cell_of(const GridSpec& grid, double u, double v) {
    if (!(u >= 0.0 && u <= kAreaWidth && v >= 0.0 && v <= kAreaHeight))
        throw std::domain_error("point outside the sensed area");
    int col = static_cast<int>(std::floor((u - grid.x_off) / grid.cell_w));
    int row = static_cast<int>(std::floor((v - grid.y_off) / grid.cell_h));
    // outermost boundary belongs to the last cell
    col = std::min(std::max(col, 0), grid.cols - 1);
    row = std::min(std::max(row, 0), grid.rows - 1);
    return row * grid.cols + col;
}

int cell_of(const GridSpec& grid, const Vec2& uv) { return cell_of(grid, uv.x(), uv.y()); }

SurfacePoint nip_integrate(const std::array<Eigen::VectorXd, 4>& weights,
                           const std::array<GridSpec, 4>& grids) {
    for (int g = 0; g < 4; ++g) {
        if (weights[g].size() != grids[g].cell_count())
            throw std::invalid_argument("weight vector does not match grid cell count");
        if (std::abs(weights[g].sum() - 1.0) > 1e-6)
            throw std::invalid_argument("class weights must sum to 1");
    }
    const int nx = 10, ny = 12;
    const double cw = kAreaWidth / nx, ch = kAreaHeight / ny;  // 9 x 10 mm
    double total = 0.0;
    Vec2 acc(0.0, 0.0);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const Vec2 center((i + 0.5) * cw, (j + 0.5) * ch);
            double score = 0.0;
            for (int g = 0; g < 4; ++g) score += weights[g][cell_of(grids[g], center)];
            acc += score * center;
            total += score;
        }
    }
    if (!(total > 0.0)) throw std::runtime_error("degenerate class weights");
    Vec2 bary = acc / total;
    bary.x() = std::min(std::max(bary.x(), 0.0), kAreaWidth);
    bary.y() = std::min(std::max(bary.y(), 0.0), kAreaHeight);
    return from_grid_coords(bary);
}

nn::NetworkSpec force_net_spec(int window) {
    if (window < 8) throw std::invalid_argument("force net window must be >= 8");
    nn::NetworkSpec spec;
    for (int i = 0; i < 3; ++i) {
        spec.push_back(nn::LayerSpec::conv(16, 1, 1, nn::Activation::ReLU));
        spec.push_back(nn::LayerSpec::maxpool(2));
    }
    spec.push_back(nn::LayerSpec::flatten());
    spec.push_back(nn::LayerSpec::dense(100, nn::Activation::ReLU));
    spec.push_back(nn::LayerSpec::dense(1, nn::Activation::Linear));
    return spec;
}

nn::NetworkSpec loc_net_spec(int cells, const std::array<int, 3>& hidden, double dropout) {
    nn::NetworkSpec spec;
    for (int h : hidden) spec.push_back(nn::LayerSpec::dense(h, nn::Activation::ReLU));
    spec.push_back(nn::LayerSpec::dropout(dropout));
    spec.push_back(nn::LayerSpec::dense(cells, nn::Activation::Softmax));
    return spec;
}

void PipelineConfig::validate() const {
    if (window < 8) throw std::invalid_argument("window must be >= 8");
    if (!(gate > 0.0)) throw std::invalid_argument("gate threshold must be > 0");
    if (frames_per_indentation < 1)
        throw std::invalid_argument("frames_per_indentation must be >= 1");
    if (loc_dropout < 0.0 || loc_dropout >= 1.0)
        throw std::invalid_argument("dropout rate must be in [0,1)");
    force_train.validate();
    loc_train.validate();
}

Eigen::MatrixXd window_at(const Indentation& ind, int t, int window) {
    const int channels = static_cast<int>(ind.frames.at(t).shifts.size());
    Eigen::MatrixXd win = Eigen::MatrixXd::Zero(channels, window);
    for (int k = 0; k < window; ++k) {
        const int src = t - window + 1 + k;
        if (src >= 0) win.col(k) = ind.frames[src].shifts;
    }
    return win;
}

std::vector<int> ramp_sample_indices(const Indentation& ind, int m) {
    std::vector<int> idx;
    const int last = ind.ramp_end - 1;
    if (last < 0) return idx;
    for (int j = 0; j < m; ++j) {
        idx.push_back((m == 1) ? last
                               : static_cast<int>(std::lround(
                                     static_cast<double>(j) * last / (m - 1))));
    }
    return idx;
}

TrainingSamples extract_training_samples(const Dataset& dataset,
                                         const std::vector<int>& ids,
                                         const PipelineConfig& cfg,
                                         const std::array<GridSpec, 4>& grids) {
    cfg.validate();
    const int W = cfg.window;
    const int m = cfg.frames_per_indentation;
    const int channels = static_cast<int>(dataset.layout.sensors.size());

    // pass 1: collect raw windows / frames
    std::vector<Eigen::MatrixXd> raw_windows;
    std::vector<double> force_targets;
    std::vector<Eigen::VectorXd> raw_frames;
    std::vector<SurfacePoint> loc_points;
    std::vector<double> loc_forces;
    std::array<std::vector<int>, 4> labels;

    for (int id : ids) {
        const Indentation& ind = dataset.indentations.at(id);
        // even coverage of the ramp plus a dense prefix through the gate
        // region, so the force net learns the idle-to-touch transition
        std::vector<int> sample_at = ramp_sample_indices(ind, m);
        for (int t = 0; t < std::min(W, ind.ramp_end); ++t) sample_at.push_back(t);
        std::sort(sample_at.begin(), sample_at.end());
        sample_at.erase(std::unique(sample_at.begin(), sample_at.end()), sample_at.end());
        // pre-contact anchors: idle readouts (noise only), zero force
        RngStream idle_rng(derive_seed(dataset.seed, 0xa11c00ULL + id));
        for (int a = 0; a < 2; ++a) {
            Eigen::MatrixXd idle(channels, W);
            for (int k = 0; k < W; ++k)
                for (int c = 0; c < channels; ++c)
                    idle(c, k) = dataset.params.noise_sigma * idle_rng.gaussian();
            raw_windows.push_back(std::move(idle));
            force_targets.push_back(0.0);
        }
        for (const int t : sample_at) {
            raw_windows.push_back(window_at(ind, t, W));
            force_targets.push_back(ind.frames[t].force_z);

            if (ind.frames[t].force_z > cfg.gate) {
                raw_frames.push_back(ind.frames[t].shifts);
                loc_points.push_back(ind.location);
                loc_forces.push_back(ind.frames[t].force_z);
                const Vec2 uv = to_grid_coords(ind.location);
                for (int g = 0; g < 4; ++g) labels[g].push_back(cell_of(grids[g], uv));
            }
        }
    }
    if (raw_windows.empty()) throw std::runtime_error("no usable training frames");

    TrainingSamples out;

    // channel stats over every window entry of the training split
    {
        const long n_entries = static_cast<long>(raw_windows.size()) * W;
        Eigen::MatrixXd all(n_entries, channels);
        long r = 0;
        for (const auto& win : raw_windows)
            for (int k = 0; k < W; ++k) all.row(r++) = win.col(k).transpose();
        out.force_stats = nn::zscore_fit(all);
    }
    out.force_windows.reserve(raw_windows.size());
    for (const auto& win : raw_windows) {
        Eigen::MatrixXd norm = (win.colwise() - out.force_stats.mean).array().colwise() /
                               out.force_stats.std.array();
        out.force_windows.push_back(nn::Tensor::from_matrix(norm));
    }
    out.force_targets.resize(static_cast<long>(force_targets.size()), 1);
    for (size_t i = 0; i < force_targets.size(); ++i)
        out.force_targets(static_cast<long>(i), 0) = force_targets[i];

    if (raw_frames.size() >= 2) {
        Eigen::MatrixXd feats(static_cast<long>(raw_frames.size()), channels);
        for (size_t i = 0; i < raw_frames.size(); ++i)
            feats.row(static_cast<long>(i)) = raw_frames[i].transpose();
        out.loc_stats = nn::zscore_fit(feats);
        out.loc_features = nn::zscore_apply(out.loc_stats, feats);
    } else {
        throw std::runtime_error("not enough above-gate frames for localization training");
    }
    for (int g = 0; g < 4; ++g) {
        out.loc_labels[g] =
            Eigen::Map<const Eigen::VectorXi>(labels[g].data(), labels[g].size());
    }
    out.loc_points = std::move(loc_points);
    out.loc_forces = Eigen::Map<const Eigen::VectorXd>(loc_forces.data(), loc_forces.size());
    return out;
}

PipelineModel train_pipeline_on_ids(const Dataset& dataset, const std::vector<int>& ids,
                                    const PipelineConfig& cfg) {
    cfg.validate();
    PipelineModel model;
    model.window = cfg.window;
    model.gate = cfg.gate;
    model.grids = build_grids();

    TrainingSamples samples = extract_training_samples(dataset, ids, cfg, model.grids);
    model.force_stats = samples.force_stats;
    model.loc_stats = samples.loc_stats;

    const int channels = static_cast<int>(dataset.layout.sensors.size());
    model.force_net = nn::Network(force_net_spec(cfg.window), {channels, cfg.window});
    nn::TrainConfig fcfg = cfg.force_train;
    fcfg.seed = derive_seed(cfg.seed, 100);
    nn::fit(model.force_net, samples.force_windows, samples.force_targets, nn::Loss::MSE,
            fcfg);

    const long n_loc = samples.loc_features.rows();
    std::vector<nn::Tensor> loc_inputs;
    loc_inputs.reserve(n_loc);
    for (long i = 0; i < n_loc; ++i)
        loc_inputs.push_back(nn::Tensor::from_vector(samples.loc_features.row(i)));

    for (int g = 0; g < 4; ++g) {
        const int cells = model.grids[g].cell_count();
        nn::Network net(loc_net_spec(cells, cfg.loc_hidden, cfg.loc_dropout), {channels});
        Eigen::MatrixXd one_hot = Eigen::MatrixXd::Zero(n_loc, cells);
        for (long i = 0; i < n_loc; ++i) one_hot(i, samples.loc_labels[g][i]) = 1.0;
        nn::TrainConfig lcfg = cfg.loc_train;
        lcfg.seed = derive_seed(cfg.seed, 200 + g);
        nn::fit(net, loc_inputs, one_hot, nn::Loss::CrossEntropy, lcfg);
        model.loc_nets.push_back(std::move(net));
    }
    return model;
}

PipelineModel train_pipeline(const Dataset& dataset, const SplitPlan& plan,
                             const PipelineConfig& cfg) {
    plan.validate(static_cast<int>(dataset.indentations.size()));
    return train_pipeline_on_ids(dataset, plan.train_ids, cfg);
}

double force_estimate(const PipelineModel& model, const Eigen::MatrixXd& raw_window) {
    const int channels = static_cast<int>(model.force_stats.mean.size());
    if (raw_window.rows() != channels || raw_window.cols() != model.window)
        throw std::invalid_argument("window shape does not match the model");
    Eigen::MatrixXd norm = (raw_window.colwise() - model.force_stats.mean).array().colwise() /
                           model.force_stats.std.array();
    // weights are fixed here; const_cast only bypasses the cache-mutating API
    auto& net = const_cast<nn::Network&>(model.force_net);
    return net.forward(nn::Tensor::from_matrix(norm)).data[0];
}

std::array<Eigen::VectorXd, 4> loc_outputs(const PipelineModel& model,
                                           const Eigen::VectorXd& raw_frame) {
    const Eigen::VectorXd feat = nn::zscore_apply_vec(model.loc_stats, raw_frame);
    std::array<Eigen::VectorXd, 4> out;
    for (int g = 0; g < 4; ++g) {
        auto& net = const_cast<nn::Network&>(model.loc_nets[g]);
        out[g] = net.forward(nn::Tensor::from_vector(feat)).data;
    }
    return out;
}

ContactEstimate infer(const PipelineModel& model, const Eigen::MatrixXd& raw_window) {
    ContactEstimate est;
    est.force = force_estimate(model, raw_window);
    if (!(est.force > model.gate)) return est;
    est.contact = true;
    const Eigen::VectorXd latest = raw_window.col(raw_window.cols() - 1);
    est.point = nip_integrate(loc_outputs(model, latest), model.grids);
    return est;
}

namespace {

void write_stats_line(std::ostream& os, const std::string& key, const Eigen::VectorXd& v) {
    os << key;
    char buf[40];
    for (long i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof(buf), " %.17g", v[i]);
        os << buf;
    }
    os << "\n";
}

Eigen::VectorXd read_stats_line(std::istream& is, const std::string& expect) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("stats file truncated");
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key != expect) throw std::runtime_error("stats file: expected " + expect);
    std::vector<double> vals;
    double v;
    while (ss >> v) vals.push_back(v);
    return Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
}

const std::array<const char*, 4> kLocCkptNames = {"loc_sg.ckpt", "loc_vsg.ckpt",
                                                  "loc_hsg.ckpt", "loc_dsg.ckpt"};

}  // namespace

void save_model_bundle(const PipelineModel& model, const std::string& dir) {
    fs::create_directories(dir);
    nn::save_checkpoint(model.force_net, (fs::path(dir) / "force.ckpt").string());
    for (int g = 0; g < 4; ++g)
        nn::save_checkpoint(model.loc_nets[g], (fs::path(dir) / kLocCkptNames[g]).string());

    std::ofstream stats((fs::path(dir) / "stats.txt").string());
    if (!stats) throw std::runtime_error("cannot write model stats");
    write_stats_line(stats, "force_mean", model.force_stats.mean);
    write_stats_line(stats, "force_std", model.force_stats.std);
    write_stats_line(stats, "loc_mean", model.loc_stats.mean);
    write_stats_line(stats, "loc_std", model.loc_stats.std);

    std::ofstream mf((fs::path(dir) / "manifest.txt").string());
    if (!mf) throw std::runtime_error("cannot write model manifest");
    char buf[128];
    mf << "window=" << model.window << "\n";
    std::snprintf(buf, sizeof(buf), "gate_n=%.17g\n", model.gate);
    mf << buf;
    for (const auto& g : model.grids) {
        std::snprintf(buf, sizeof(buf), "grid=%s,%d,%d,%.17g,%.17g,%.17g,%.17g\n",
                      g.name.c_str(), g.cols, g.rows, g.x_off, g.y_off, g.cell_w, g.cell_h);
        mf << buf;
    }
    for (int g = 0; g < 4; ++g)
        mf << "loc_net_" << model.grids[g].name << "=" << model.loc_nets[g].descriptor()
           << "\n";
    mf << "force_net=" << model.force_net.descriptor() << "\n";
}

PipelineModel load_model_bundle(const std::string& dir) {
    const fs::path base(dir);
    if (!fs::exists(base / "manifest.txt")) {
        throw std::invalid_argument("model bundle not found: " + dir);
    }
    PipelineModel model;
    model.grids = {};
    std::ifstream mf((base / "manifest.txt").string());
    std::string line;
    int grid_i = 0;
    std::array<std::string, 4> loc_desc;
    int loc_i = 0;
    std::string force_desc;
    while (std::getline(mf, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "window") {
            model.window = std::stoi(val);
        } else if (key == "gate_n") {
            model.gate = std::stod(val);
        } else if (key == "grid") {
            if (grid_i >= 4) throw std::runtime_error("model manifest: too many grids");
            GridSpec g;
            char name[16];
            if (std::sscanf(val.c_str(), "%15[^,],%d,%d,%lf,%lf,%lf,%lf", name, &g.cols,
                            &g.rows, &g.x_off, &g.y_off, &g.cell_w, &g.cell_h) != 7)
                throw std::runtime_error("model manifest: bad grid line");
            g.name = name;
            model.grids[grid_i++] = g;
        } else if (key.rfind("loc_net_", 0) == 0) {
            if (loc_i >= 4) throw std::runtime_error("model manifest: too many loc nets");
            loc_desc[loc_i++] = val;  // order matches the grid lines
        } else if (key == "force_net") {
            force_desc = val;
        }
    }
    if (grid_i != 4 || loc_i != 4 || force_desc.empty())
        throw std::runtime_error("model manifest incomplete in " + dir);

    std::ifstream stats((base / "stats.txt").string());
    if (!stats) throw std::runtime_error("model stats not found in " + dir);
    model.force_stats.mean = read_stats_line(stats, "force_mean");
    model.force_stats.std = read_stats_line(stats, "force_std");
    model.loc_stats.mean = read_stats_line(stats, "loc_mean");
    model.loc_stats.std = read_stats_line(stats, "loc_std");

    model.force_net = nn::network_from_descriptor(force_desc);
    nn::load_checkpoint(model.force_net, (base / "force.ckpt").string());
    for (int g = 0; g < 4; ++g) {
        nn::Network net = nn::network_from_descriptor(loc_desc[g]);
        nn::load_checkpoint(net, (base / kLocCkptNames[g]).string());
        model.loc_nets.push_back(std::move(net));
    }
    return model;
}

}  // namespace fbgskin
