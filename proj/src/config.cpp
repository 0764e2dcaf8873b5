#include "fbgskin/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fbgskin/errors.hpp"

namespace fbgskin {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (...) {
        throw std::invalid_argument("config: bad numeric value for " + key + ": " + v);
    }
}

long parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (...) {
        throw std::invalid_argument("config: bad integer value for " + key + ": " + v);
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const unsigned long long d = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (...) {
        throw std::invalid_argument("config: bad seed value for " + key + ": " + v);
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("config: bad boolean value for " + key + ": " + v);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& v) {
    if (key == "peak_sensitivity") peak_sensitivity = parse_double(key, v);
    else if (key == "sigma_par") sigma_par = parse_double(key, v);
    else if (key == "sigma_perp") sigma_perp = parse_double(key, v);
    else if (key == "thickness_exp_s") thickness_exp_s = parse_double(key, v);
    else if (key == "thickness_exp_w") thickness_exp_w = parse_double(key, v);
    else if (key == "noise_pm") noise_pm = parse_double(key, v);
    else if (key == "dual_lobe") dual_lobe = parse_bool(key, v);
    else if (key == "thickness") thickness = parse_double(key, v);
    else if (key == "n_indentations") n_indentations = static_cast<int>(parse_int(key, v));
    else if (key == "gen_seed") gen_seed = parse_u64(key, v);
    else if (key == "gzip") gzip = parse_bool(key, v);
    else if (key == "window") window = static_cast<int>(parse_int(key, v));
    else if (key == "gate_n") gate_n = parse_double(key, v);
    else if (key == "hidden1") hidden1 = static_cast<int>(parse_int(key, v));
    else if (key == "hidden2") hidden2 = static_cast<int>(parse_int(key, v));
    else if (key == "hidden3") hidden3 = static_cast<int>(parse_int(key, v));
    else if (key == "dropout") dropout = parse_double(key, v);
    else if (key == "frames_per_indentation")
        frames_per_indentation = static_cast<int>(parse_int(key, v));
    else if (key == "force_lr") force_lr = parse_double(key, v);
    else if (key == "force_epochs") force_epochs = static_cast<int>(parse_int(key, v));
    else if (key == "loc_lr") loc_lr = parse_double(key, v);
    else if (key == "loc_epochs") loc_epochs = static_cast<int>(parse_int(key, v));
    else if (key == "minibatch") minibatch = static_cast<int>(parse_int(key, v));
    else if (key == "train_seed") train_seed = parse_u64(key, v);
    else if (key == "test_frac") test_frac = parse_double(key, v);
    else if (key == "folds") folds = static_cast<int>(parse_int(key, v));
    else if (key == "split_seed") split_seed = parse_u64(key, v);
    else if (key == "force_bins") force_bins = static_cast<int>(parse_int(key, v));
    else if (key == "map_pitch") map_pitch = parse_double(key, v);
    else if (key == "rf_map_pitch") rf_map_pitch = parse_double(key, v);
    else if (key == "fit_on_log_force") fit_on_log_force = parse_bool(key, v);
    else throw std::invalid_argument("config: unknown key: " + key);
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
    std::vector<std::pair<std::string, std::string>> e;
    e.emplace_back("dropout", fmt_double(dropout));
    e.emplace_back("dual_lobe", dual_lobe ? "true" : "false");
    e.emplace_back("fit_on_log_force", fit_on_log_force ? "true" : "false");
    e.emplace_back("folds", std::to_string(folds));
    e.emplace_back("force_bins", std::to_string(force_bins));
    e.emplace_back("force_epochs", std::to_string(force_epochs));
    e.emplace_back("force_lr", fmt_double(force_lr));
    e.emplace_back("frames_per_indentation", std::to_string(frames_per_indentation));
    e.emplace_back("gate_n", fmt_double(gate_n));
    e.emplace_back("gen_seed", std::to_string(gen_seed));
    e.emplace_back("gzip", gzip ? "true" : "false");
    e.emplace_back("hidden1", std::to_string(hidden1));
    e.emplace_back("hidden2", std::to_string(hidden2));
    e.emplace_back("hidden3", std::to_string(hidden3));
    e.emplace_back("loc_epochs", std::to_string(loc_epochs));
    e.emplace_back("loc_lr", fmt_double(loc_lr));
    e.emplace_back("map_pitch", fmt_double(map_pitch));
    e.emplace_back("minibatch", std::to_string(minibatch));
    e.emplace_back("n_indentations", std::to_string(n_indentations));
    e.emplace_back("noise_pm", fmt_double(noise_pm));
    e.emplace_back("peak_sensitivity", fmt_double(peak_sensitivity));
    e.emplace_back("rf_map_pitch", fmt_double(rf_map_pitch));
    e.emplace_back("sigma_par", fmt_double(sigma_par));
    e.emplace_back("sigma_perp", fmt_double(sigma_perp));
    e.emplace_back("split_seed", std::to_string(split_seed));
    e.emplace_back("test_frac", fmt_double(test_frac));
    e.emplace_back("thickness", fmt_double(thickness));
    e.emplace_back("thickness_exp_s", fmt_double(thickness_exp_s));
    e.emplace_back("thickness_exp_w", fmt_double(thickness_exp_w));
    e.emplace_back("train_seed", std::to_string(train_seed));
    e.emplace_back("window", std::to_string(window));
    return e;
}

std::uint64_t RunConfig::hash() const {
    std::string canon;
    for (const auto& [k, v] : entries()) canon += k + "=" + v + "\n";
    return nn::fnv1a64(canon);
}

SkinLayout RunConfig::make_layout() const {
    SkinLayout layout = build_default_layout();
    layout.thickness = thickness;
    return layout;
}

FieldParams RunConfig::make_field_params() const {
    FieldParams p;
    p.peak_sensitivity = peak_sensitivity;
    p.sigma_par = sigma_par;
    p.sigma_perp = sigma_perp;
    p.thickness_exp_s = thickness_exp_s;
    p.thickness_exp_w = thickness_exp_w;
    p.noise_sigma = noise_pm * 1e-3;
    if (dual_lobe) p = with_dual_lobe_preset(p, make_layout());
    p.validate();
    return p;
}

PipelineConfig RunConfig::make_pipeline_config() const {
    PipelineConfig pc;
    pc.window = window;
    pc.gate = gate_n;
    pc.loc_hidden = {hidden1, hidden2, hidden3};
    pc.loc_dropout = dropout;
    pc.frames_per_indentation = frames_per_indentation;
    pc.force_train = {force_lr, 0.9, minibatch, force_epochs, 0};
    pc.loc_train = {loc_lr, 0.9, minibatch, loc_epochs, 0};
    pc.seed = train_seed;
    pc.validate();
    return pc;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config " + path);
    RunConfig cfg;
    std::string line;
    long lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.erase(hash_pos);
        // trim
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        const auto ke = key.find_last_not_of(" \t");
        key = key.substr(0, ke + 1);
        const auto vb = val.find_first_not_of(" \t");
        val = (vb == std::string::npos) ? "" : val.substr(vb);
        cfg.set(key, val);
    }
    return cfg;
}

void write_manifest(const RunConfig& cfg, const std::string& command,
                    const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::ofstream os((fs::path(out_dir) / "manifest.txt").string(), std::ios::binary);
    if (!os) throw IoError("cannot write manifest in " + out_dir);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(cfg.hash()));
    os << "command=" << command << "\n"
       << "config_hash=" << buf << "\n"
       << "version=fbgskin 0.1.0\n";
    for (const auto& [k, v] : cfg.entries()) os << k << "=" << v << "\n";
}

}  // namespace fbgskin
