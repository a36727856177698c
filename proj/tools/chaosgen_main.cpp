#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "chaosgen/checkpoint.hpp"
#include "chaosgen/config.hpp"
#include "chaosgen/dataio.hpp"
#include "chaosgen/dynamics.hpp"
#include "chaosgen/metrics.hpp"
#include "chaosgen/rng.hpp"
#include "chaosgen/training.hpp"

namespace fs = std::filesystem;
using namespace chaosgen;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

struct DataArgs {
    std::string images;
    std::string labels;
    std::string synthetic;
    int n_s = 1024;
    double noise = 0.1;
};

void add_data_options(CLI::App* cmd, DataArgs& args) {
    cmd->add_option("--images", args.images, "IDX image file");
    cmd->add_option("--labels", args.labels, "IDX label file (optional)");
    cmd->add_option("--synthetic", args.synthetic,
                    "synthetic dataset kind (two-clusters | bars-and-stripes | downscaled-digits)");
    cmd->add_option("--n-s", args.n_s, "synthetic sample count");
    cmd->add_option("--noise", args.noise, "synthetic noise level");
}

Dataset load_data_args(const DataArgs& args, int n_v, std::uint64_t seed) {
    if (!args.images.empty()) return load_idx(args.images, args.labels);
    if (!args.synthetic.empty())
        return synthetic_dataset(parse_synthetic_kind(args.synthetic), args.n_s, n_v, seed,
                                 args.noise);
    throw ConfigError({"either --images or --synthetic is required"});
}

void check_t_star(double t_star, double dt) {
    const double q = t_star / dt;
    if (std::abs(q - std::round(q)) > 1e-9 * std::max(1.0, std::abs(q)))
        throw ConfigError({"--t-star must be a multiple of dt"});
}

std::optional<std::pair<int, int>> square_shape(int n_v) {
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_v))));
    if (side * side == n_v) return std::make_pair(side, side);
    return std::nullopt;
}

void print_report(const MetricReport& r) {
    std::printf("t_star=%g\n", r.t_star);
    std::printf("n_samples=%d\n", r.n_samples);
    std::printf("E2=%.10g\n", r.e2);
    std::printf("Es=%.10g\n", r.es);
    if (r.er) std::printf("ER=%.10g\n", *r.er);
    std::printf("EAAI=%.10g\n", r.eaai);
}

int cmd_train(const std::string& config_path, const std::string& resume_path) {
    RunConfig cfg = load_run_config(config_path);  // throws ConfigError listing all problems
    Dataset dataset = load_dataset(cfg);
    if (cfg.m_batch > dataset.samples.rows())
        throw ConfigError({"train.m_batch exceeds dataset size"});

    ModelParams params = make_params(cfg);
    std::uint64_t start_epoch = 0;
    if (!resume_path.empty()) {
        Checkpoint cp = load_checkpoint(resume_path);
        if (cp.params.index() != params.index())
            throw ConfigError({"resume checkpoint architecture does not match config"});
        if (visible_dim(cp.params) != cfg.n_v)
            throw ConfigError({"resume checkpoint dimensions do not match config"});
        if (cp.seed != cfg.seed)
            throw ConfigError({"resume checkpoint seed does not match config"});
        params = std::move(cp.params);
        start_epoch = cp.epoch;
    }

    // no output is created until the config has fully validated
    fs::create_directories(cfg.output_dir);
    const std::string csv_path = cfg.output_dir + "/metrics.csv";
    const bool fresh_csv = !fs::exists(csv_path) || fs::file_size(csv_path) == 0;
    std::ofstream csv(csv_path, std::ios::app);
    if (!csv) throw std::runtime_error("cannot open metric log: " + csv_path);
    if (fresh_csv) csv << metric_csv_header() << "\n";

    const auto shape = square_shape(cfg.n_v);
    TrainConfig tcfg = make_train_config(cfg);
    TrainHooks hooks;
    hooks.on_metrics = [&](const MetricLogRow& row) {
        csv << metric_csv_row(row) << "\n";
        csv.flush();
        std::printf("epoch %llu  E2=%.6g  Es=%.6g  EAAI=%.6g\n",
                    static_cast<unsigned long long>(row.epoch), row.report.e2, row.report.es,
                    row.report.eaai);
    };
    hooks.on_checkpoint = [&](std::uint64_t epoch, const ModelParams& p) {
        save_checkpoint(cfg.output_dir + "/checkpoint_" + std::to_string(epoch) + ".ckpt", p,
                        epoch, cfg.seed);
        if (shape) {
            SampleSet grid = simulate_free(p, tcfg.sim, 16,
                                           derive_seed(cfg.seed, {stream::eval_gen, epoch, 1}),
                                           tcfg.n_threads);
            export_image_grid(grid.visible, *shape, 4,
                              cfg.output_dir + "/samples_" + std::to_string(epoch) + ".pgm");
        }
    };

    train(params, dataset, tcfg, hooks, start_epoch);
    save_checkpoint(cfg.output_dir + "/checkpoint_final.ckpt", params,
                    static_cast<std::uint64_t>(cfg.epochs), cfg.seed);
    return 0;
}

int cmd_generate(const std::string& ckpt_path, int n_samples, double t_star, double dt,
                 double tau, const std::string& out, std::uint64_t seed, int threads) {
    Checkpoint cp = load_checkpoint(ckpt_path);
    check_t_star(t_star, dt);
    SimConfig sim{dt, tau, t_star};
    SampleSet set = simulate_free(cp.params, sim, n_samples, seed, threads);
    write_matrix(out + ".mat", set.visible);
    if (const auto shape = square_shape(visible_dim(cp.params))) {
        const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_samples))));
        export_image_grid(set.visible, *shape, cols, out + ".pgm");
    }
    std::printf("wrote %d samples at t=%g to %s.mat\n", n_samples, t_star, out.c_str());
    return 0;
}

int cmd_evaluate(const std::string& ckpt_path, const DataArgs& data_args, double t_star,
                 double dt, double tau, int n_eval, std::uint64_t seed, int threads,
                 const std::string& csv_path, bool sanity) {
    Checkpoint cp = load_checkpoint(ckpt_path);
    check_t_star(t_star, dt);
    SimConfig sim{dt, tau, t_star};
    Dataset data = load_data_args(data_args, visible_dim(cp.params), seed);

    MetricReport report;
    if (sanity) {
        // scores the data against itself: E2 and Es must come out 0
        MatrixXd rows = minibatch(data, n_eval, derive_seed(seed, {stream::eval_data}), 0);
        report.t_star = t_star;
        report.n_samples = n_eval;
        report.e2 = error_second_moment(rows, rows);
        report.es = error_spectrum(rows, rows);
        report.eaai = error_aai(rows, rows);
    } else {
        report = evaluate(cp.params, data, sim, t_star, n_eval, seed, threads);
    }
    print_report(report);
    if (!csv_path.empty()) {
        const bool fresh = !fs::exists(csv_path) || fs::file_size(csv_path) == 0;
        std::ofstream csv(csv_path, std::ios::app);
        if (!csv) throw std::runtime_error("cannot open csv: " + csv_path);
        if (fresh) csv << metric_csv_header() << "\n";
        MetricLogRow row;
        row.epoch = cp.epoch;
        row.report = report;
        csv << metric_csv_row(row) << "\n";
    }
    return 0;
}

int cmd_reconstruct(const std::string& ckpt_path, const DataArgs& data_args, double t_star,
                    double dt, double tau, int n, const std::string& out, std::uint64_t seed) {
    Checkpoint cp = load_checkpoint(ckpt_path);
    const auto* p = std::get_if<RestrictedParams>(&cp.params);
    if (!p) throw ConfigError({"reconstruct requires a restricted-architecture checkpoint"});
    check_t_star(t_star, dt);
    SimConfig sim{dt, tau, t_star};
    Dataset data = load_data_args(data_args, p->n_v, seed);
    MatrixXd rows = minibatch(data, n, derive_seed(seed, {stream::eval_data}), 0);

    MatrixXd pairs(2 * n, p->n_v);
    for (int s = 0; s < n; ++s) {
        Rng rng(derive_seed(seed, {stream::recon, static_cast<std::uint64_t>(s)}));
        VectorXd h0(p->n_h), v0(p->n_v);
        for (int a = 0; a < p->n_h; ++a) h0(a) = rng.normal();
        for (int i = 0; i < p->n_v; ++i) v0(i) = rng.normal();
        VectorXd xi = rows.row(s).transpose();
        VectorXd chi = clamped_hidden_closed_form(*p, xi, h0, sim);
        pairs.row(2 * s) = xi.transpose();
        pairs.row(2 * s + 1) = clamped_visible_closed_form(*p, chi, v0, sim).transpose();
    }
    const double er = error_reconstruction(*p, rows, sim, t_star, derive_seed(seed, {stream::recon}));
    if (const auto shape = square_shape(p->n_v))
        export_image_grid(pairs, *shape, 2, out);  // original | reconstruction per row
    std::printf("ER=%.10g\n", er);
    return 0;
}

int cmd_receptive_fields(const std::string& ckpt_path, int count, std::uint64_t seed,
                         const std::string& out) {
    Checkpoint cp = load_checkpoint(ckpt_path);
    const auto* p = std::get_if<RestrictedParams>(&cp.params);
    if (!p) throw ConfigError({"receptive-fields requires a restricted-architecture checkpoint"});
    if (count < 1 || count > p->n_h) throw ConfigError({"count out of range"});
    // distinct random hidden indices
    std::vector<int> all(static_cast<std::size_t>(p->n_h));
    for (int a = 0; a < p->n_h; ++a) all[static_cast<std::size_t>(a)] = a;
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        const auto j = i + static_cast<int>(rng.next_below(std::uint64_t(p->n_h - i)));
        std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
    }
    all.resize(static_cast<std::size_t>(count));
    export_receptive_fields(*p, all, out);
    std::printf("wrote %d receptive fields to %s\n", count, out.c_str());
    return 0;
}

int cmd_chaos_probe(const std::string& config_path, double delta0, double t_probe) {
    RunConfig cfg = load_run_config(config_path);
    ModelParams params = make_params(cfg);
    auto curve = chaos_probe(params, cfg.sim, delta0, t_probe, cfg.seed);
    std::printf("t,separation\n");
    for (const auto& [t, sep] : curve) std::printf("%.10g,%.10g\n", t, sep);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chaosgen: generative modeling with chaotic recurrent networks"};
    app.require_subcommand(1);

    std::string config_path, resume_path, ckpt_path, out_path, csv_path;
    DataArgs data_args;
    double t_star = 100.0, dt = 1.0, tau = 10.0, delta0 = 1e-6, t_probe = 1000.0;
    int n_samples = 16, n_eval = 500, n_recon = 8, rf_count = 9, threads = 1;
    std::uint64_t seed = 0;
    bool sanity = false;

    auto* train_cmd = app.add_subcommand("train", "train a model from a JSON config");
    train_cmd->add_option("--config", config_path, "run configuration (JSON)")->required();
    train_cmd->add_option("--resume", resume_path, "checkpoint to resume from");

    auto* gen_cmd = app.add_subcommand("generate", "sample from a trained model");
    gen_cmd->add_option("--checkpoint", ckpt_path)->required();
    gen_cmd->add_option("--n-samples", n_samples);
    gen_cmd->add_option("--t-star", t_star);
    gen_cmd->add_option("--dt", dt);
    gen_cmd->add_option("--tau", tau);
    gen_cmd->add_option("--out", out_path, "output path prefix")->required();
    gen_cmd->add_option("--seed", seed);
    gen_cmd->add_option("--threads", threads);

    auto* eval_cmd = app.add_subcommand("evaluate", "compute the four accuracy indices");
    eval_cmd->add_option("--checkpoint", ckpt_path)->required();
    add_data_options(eval_cmd, data_args);
    eval_cmd->add_option("--t-star", t_star);
    eval_cmd->add_option("--dt", dt);
    eval_cmd->add_option("--tau", tau);
    eval_cmd->add_option("--n-eval", n_eval);
    eval_cmd->add_option("--seed", seed);
    eval_cmd->add_option("--threads", threads);
    eval_cmd->add_option("--csv", csv_path, "append the report to this CSV");
    eval_cmd->add_flag("--sanity", sanity, "score the data against itself");

    auto* recon_cmd = app.add_subcommand("reconstruct", "clamp-and-readback reconstruction");
    recon_cmd->add_option("--checkpoint", ckpt_path)->required();
    add_data_options(recon_cmd, data_args);
    recon_cmd->add_option("--t-star", t_star);
    recon_cmd->add_option("--dt", dt);
    recon_cmd->add_option("--tau", tau);
    recon_cmd->add_option("--n", n_recon);
    recon_cmd->add_option("--out", out_path)->required();
    recon_cmd->add_option("--seed", seed);

    auto* rf_cmd = app.add_subcommand("receptive-fields", "export hidden-neuron receptive fields");
    rf_cmd->add_option("--checkpoint", ckpt_path)->required();
    rf_cmd->add_option("--count", rf_count);
    rf_cmd->add_option("--seed", seed);
    rf_cmd->add_option("--out", out_path)->required();

    auto* probe_cmd = app.add_subcommand("chaos-probe", "trajectory-separation probe");
    probe_cmd->add_option("--config", config_path)->required();
    probe_cmd->add_option("--delta0", delta0);
    probe_cmd->add_option("--t-probe", t_probe);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(config_path, resume_path);
        if (gen_cmd->parsed())
            return cmd_generate(ckpt_path, n_samples, t_star, dt, tau, out_path, seed, threads);
        if (eval_cmd->parsed())
            return cmd_evaluate(ckpt_path, data_args, t_star, dt, tau, n_eval, seed, threads,
                                csv_path, sanity);
        if (recon_cmd->parsed())
            return cmd_reconstruct(ckpt_path, data_args, t_star, dt, tau, n_recon, out_path, seed);
        if (rf_cmd->parsed()) return cmd_receptive_fields(ckpt_path, rf_count, seed, out_path);
        if (probe_cmd->parsed()) return cmd_chaos_probe(config_path, delta0, t_probe);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
