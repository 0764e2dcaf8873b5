#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fbgskin/config.hpp"
#include "fbgskin/dataset_io.hpp"
#include "fbgskin/errors.hpp"
#include "fbgskin/evaluation.hpp"
#include "fbgskin/geometry.hpp"
#include "fbgskin/pipeline.hpp"
#include "fbgskin/psychometrics.hpp"
#include "fbgskin/report.hpp"

namespace fs = std::filesystem;
using namespace fbgskin;

namespace {

struct CommonArgs {
    std::string config_path;
    // --out beats OUT_DIR beats "out"
    std::string out_dir = std::getenv("OUT_DIR") ? std::getenv("OUT_DIR") : "out";
    std::vector<std::string> overrides;  // key=value
};

RunConfig resolve_config(const CommonArgs& args) {
    RunConfig cfg;
    if (!args.config_path.empty()) cfg = load_config(args.config_path);
    for (const auto& ov : args.overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got: " + ov);
        cfg.set(ov.substr(0, eq), ov.substr(eq + 1));
    }
    return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "key=value config file");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--set", args.overrides, "override a config key (key=value)")
        ->take_all();
}

std::string dataset_filename(const RunConfig& cfg) {
    return cfg.gzip ? "dataset.csv.gz" : "dataset.csv";
}

int run_gen(const CommonArgs& args, RunConfig cfg) {
    const SkinLayout layout = cfg.make_layout();
    const FieldParams params = cfg.make_field_params();
    std::cerr << "generating " << cfg.n_indentations << " indentations (seed "
              << cfg.gen_seed << ")\n";
    const Dataset ds =
        generate_dataset(layout, params, cfg.n_indentations, cfg.gen_seed);
    fs::create_directories(args.out_dir);
    save_dataset_csv(ds, (fs::path(args.out_dir) / dataset_filename(cfg)).string());
    save_layout_table(layout, (fs::path(args.out_dir) / "layout.txt").string());
    write_manifest(cfg, "gen", args.out_dir);
    return 0;
}

Dataset load_dataset_for(const RunConfig& cfg, const std::string& dataset_path) {
    if (dataset_path.empty())
        throw std::invalid_argument("--dataset is required");
    if (!fs::exists(dataset_path))
        throw std::invalid_argument("dataset not found: " + dataset_path);
    Dataset ds = load_dataset_csv(dataset_path);
    ds.layout = cfg.make_layout();
    ds.params = cfg.make_field_params();
    return ds;
}

int run_train(const CommonArgs& args, RunConfig cfg, const std::string& dataset_path) {
    const Dataset ds = load_dataset_for(cfg, dataset_path);
    const SplitPlan plan = make_split(ds, cfg.test_frac, cfg.folds, cfg.split_seed);
    const PipelineConfig pc = cfg.make_pipeline_config();
    std::cerr << "training on " << plan.train_ids.size() << " indentations\n";
    const PipelineModel model = train_pipeline(ds, plan, pc);
    save_model_bundle(model, (fs::path(args.out_dir) / "model").string());
    write_manifest(cfg, "train", args.out_dir);
    return 0;
}

int run_eval(const CommonArgs& args, RunConfig cfg, const std::string& dataset_path,
             const std::string& model_dir, bool no_cv) {
    if (model_dir.empty() || !fs::exists(fs::path(model_dir) / "manifest.txt"))
        throw std::invalid_argument("model bundle not found: " +
                                    (model_dir.empty() ? "(--model not given)" : model_dir));
    const Dataset ds = load_dataset_for(cfg, dataset_path);
    const PipelineModel model = load_model_bundle(model_dir);
    const SplitPlan plan = make_split(ds, cfg.test_frac, cfg.folds, cfg.split_seed);
    const PipelineConfig pc = cfg.make_pipeline_config();
    EvalConfig ec;
    ec.force_bins = cfg.force_bins;
    ec.map_pitch = cfg.map_pitch;
    ec.run_cv = !no_cv;
    std::cerr << "evaluating on " << plan.test_ids.size() << " test indentations"
              << (ec.run_cv ? " with cross-validation" : "") << "\n";
    const EvalReport report = evaluate(model, ds, plan, pc, ec);
    write_report_bundle(report, args.out_dir);
    write_manifest(cfg, "eval", args.out_dir);
    return 0;
}

int run_rf(const CommonArgs& args, RunConfig cfg) {
    const SkinLayout layout = cfg.make_layout();
    const FieldParams params = cfg.make_field_params();
    const ReceptiveFieldReport rf =
        receptive_field_report(layout, params, 0.5, /*keep_maps=*/false);
    fs::create_directories(args.out_dir);
    {
        std::ofstream os(fs::path(args.out_dir) / "receptive_fields.csv");
        os << "sensor,area_mm2,lobes\n";
        for (size_t s = 0; s < rf.areas_mm2.size(); ++s) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%zu,%.6g,%d\n", s + 1, rf.areas_mm2[s],
                          rf.lobe_counts[s]);
            os << buf;
        }
        char buf[64];
        std::snprintf(buf, sizeof(buf), "median,%.6g,\n", rf.median_area_mm2);
        os << buf;
    }
    // F* maps at the configured export pitch
    const ReceptiveFieldReport maps =
        receptive_field_report(layout, params, cfg.rf_map_pitch, /*keep_maps=*/true);
    const double hw = layout.sensed_half_width();
    for (size_t s = 0; s < maps.force_for_shift.size(); ++s) {
        char name[64];
        std::snprintf(name, sizeof(name), "rf_sensor%02zu.csv", s + 1);
        std::ofstream os(fs::path(args.out_dir) / name);
        os << "x_mm,y_mm,force_for_20pm_N\n";
        const auto& m = maps.force_for_shift[s];
        for (long j = 0; j < m.rows(); ++j) {
            for (long i = 0; i < m.cols(); ++i) {
                char buf[96];
                std::snprintf(buf, sizeof(buf), "%.6g,%.6g,%.6g\n",
                              -hw + (i + 0.5) * maps.pitch, (j + 0.5) * maps.pitch,
                              m(j, i));
                os << buf;
            }
        }
    }
    write_manifest(cfg, "rf", args.out_dir);
    return 0;
}

int run_vonfrey(const CommonArgs& args, RunConfig cfg, std::uint64_t seed) {
    const SkinLayout layout = cfg.make_layout();
    const FieldParams params = cfg.make_field_params();
    const VonFreyResult vf = run_vonfrey_protocol(layout, params, seed);
    fs::create_directories(args.out_dir);
    {
        std::ofstream os(fs::path(args.out_dir) / "vonfrey_trials.csv");
        os << "subject,filament_g,force_mN,x_mm,y_mm,detected\n";
        for (const auto& t : vf.trials) {
            char buf[128];
            std::snprintf(buf, sizeof(buf), "%d,%.6g,%.6g,%.6g,%.6g,%d\n", t.subject,
                          t.filament_g, t.force_mN, t.location.x, t.location.y,
                          t.detected ? 1 : 0);
            os << buf;
        }
    }
    Eigen::VectorXd x = vf.forces_mN;
    if (cfg.fit_on_log_force) x = x.array().log();
    const SigmoidFit fit = fit_sigmoid(x, vf.rates);
    {
        std::ofstream os(fs::path(args.out_dir) / "fit_report.txt");
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "a=%.6g\nb=%.6g\nresidual=%.6g\nconverged=%d\nidentifiable=%d\n",
                      fit.a, fit.b, fit.residual, fit.converged ? 1 : 0,
                      fit.identifiable ? 1 : 0);
        os << buf;
        if (fit.a > 0.0) {
            std::snprintf(buf, sizeof(buf), "threshold75_mN=%.6g\n",
                          cfg.fit_on_log_force ? std::exp(threshold_at(fit, 0.75))
                                               : threshold_at(fit, 0.75));
            os << buf;
        }
        os << "fit_on_log_force=" << (cfg.fit_on_log_force ? "true" : "false") << "\n";
        for (long i = 0; i < vf.forces_mN.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "rate_%.6g_mN=%.6g\n", vf.forces_mN[i],
                          vf.rates[i]);
            os << buf;
        }
    }
    write_manifest(cfg, "vonfrey", args.out_dir);
    return 0;
}

int run_infer(const CommonArgs& args, RunConfig cfg, const std::string& model_dir,
              const std::string& frames_path) {
    if (model_dir.empty() || !fs::exists(fs::path(model_dir) / "manifest.txt"))
        throw std::invalid_argument("model bundle not found: " + model_dir);
    if (frames_path.empty() || !fs::exists(frames_path))
        throw std::invalid_argument("frames csv not found: " + frames_path);
    const PipelineModel model = load_model_bundle(model_dir);
    const auto frames = load_frames_csv(frames_path);
    const int channels = static_cast<int>(model.force_stats.mean.size());
    if (!frames.empty() && frames.front().shifts.size() != channels)
        throw std::invalid_argument("frames csv channel count does not match the model");
    fs::create_directories(args.out_dir);
    std::ofstream os(fs::path(args.out_dir) / "estimates.csv");
    os << "t_s,contact,force_N,x_mm,y_mm\n";
    Eigen::MatrixXd win(channels, model.window);
    for (size_t t = model.window - 1; t < frames.size(); ++t) {
        for (int k = 0; k < model.window; ++k)
            win.col(k) = frames[t - model.window + 1 + k].shifts;
        const ContactEstimate est = infer(model, win);
        char buf[160];
        if (est.contact) {
            std::snprintf(buf, sizeof(buf), "%.6f,1,%.6f,%.6f,%.6f\n", frames[t].t,
                          est.force, est.point.x, est.point.y);
        } else {
            std::snprintf(buf, sizeof(buf), "%.6f,0,%.6f,,\n", frames[t].t, est.force);
        }
        os << buf;
    }
    write_manifest(cfg, "infer", args.out_dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FBG tactile-skin simulator and learning pipeline"};
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, eval_args, rf_args, vf_args, infer_args, report_args;
    int gen_n = -1;
    std::uint64_t gen_seed = 0, vf_seed = 0;
    bool gen_seed_set = false, vf_seed_set = false, gen_gzip = false;
    std::string train_dataset, eval_dataset, eval_model, infer_model, infer_frames,
        report_from;
    bool eval_no_cv = false;

    auto* gen = app.add_subcommand("gen", "generate a synthetic indentation dataset");
    add_common(gen, gen_args);
    gen->add_option("--n", gen_n, "number of indentations");
    gen->add_option("--seed", gen_seed, "generation seed")->trigger_on_parse();
    gen->callback([&] { gen_seed_set = gen->count("--seed") > 0; });
    gen->add_flag("--gzip", gen_gzip, "write a gzip-compressed csv");

    auto* train = app.add_subcommand("train", "train the perception pipeline");
    add_common(train, train_args);
    train->add_option("--dataset", train_dataset, "dataset csv path")->required();

    auto* eval = app.add_subcommand("eval", "cross-validate and evaluate a trained model");
    add_common(eval, eval_args);
    eval->add_option("--dataset", eval_dataset, "dataset csv path")->required();
    eval->add_option("--model", eval_model, "model bundle directory");
    eval->add_flag("--no-cv", eval_no_cv, "skip fold retraining");

    auto* rf = app.add_subcommand("rf", "receptive-field maps and hot-spot areas");
    add_common(rf, rf_args);

    auto* vonfrey = app.add_subcommand("vonfrey", "simulated filament sensitivity protocol");
    add_common(vonfrey, vf_args);
    vonfrey->add_option("--seed", vf_seed, "protocol seed");
    vonfrey->callback([&] { vf_seed_set = vonfrey->count("--seed") > 0; });

    auto* infer_cmd = app.add_subcommand("infer", "run the pipeline over a frame stream");
    add_common(infer_cmd, infer_args);
    infer_cmd->add_option("--model", infer_model, "model bundle directory")->required();
    infer_cmd->add_option("--frames", infer_frames, "frames csv")->required();

    auto* report = app.add_subcommand("report", "assemble report.txt and figures");
    add_common(report, report_args);
    report->add_option("--from", report_from, "evaluation output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // help/version exit 0, bad usage exits 1
    }

    try {
        if (gen->parsed()) {
            RunConfig cfg = resolve_config(gen_args);
            if (gen_n > 0) cfg.n_indentations = gen_n;
            if (gen_seed_set) cfg.gen_seed = gen_seed;
            if (gen_gzip) cfg.gzip = true;
            return run_gen(gen_args, cfg);
        }
        if (train->parsed())
            return run_train(train_args, resolve_config(train_args), train_dataset);
        if (eval->parsed())
            return run_eval(eval_args, resolve_config(eval_args), eval_dataset, eval_model,
                            eval_no_cv);
        if (rf->parsed()) return run_rf(rf_args, resolve_config(rf_args));
        if (vonfrey->parsed()) {
            RunConfig cfg = resolve_config(vf_args);
            return run_vonfrey(vf_args, cfg, vf_seed_set ? vf_seed : cfg.gen_seed);
        }
        if (infer_cmd->parsed())
            return run_infer(infer_args, resolve_config(infer_args), infer_model,
                             infer_frames);
        if (report->parsed()) {
            assemble_report(report_from);
            write_manifest(resolve_config(report_args), "report", report_from);
            return 0;
        }
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
