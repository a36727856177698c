#include "chaosgen/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "chaosgen/rng.hpp"

namespace chaosgen {

void TrainConfig::validate() const {
    if (!(k > 0.0)) throw std::invalid_argument("TrainConfig: k must be > 0");
    if (m_batch < 1) throw std::invalid_argument("TrainConfig: m_batch must be >= 1");
    if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    if (eval_every < 0) throw std::invalid_argument("TrainConfig: eval_every must be >= 0");
    if (checkpoint_every < 0)
        throw std::invalid_argument("TrainConfig: checkpoint_every must be >= 0");
    if (n_threads < 1) throw std::invalid_argument("TrainConfig: n_threads must be >= 1");
    if (n_eval < 0) throw std::invalid_argument("TrainConfig: n_eval must be >= 0");
    sim.validate();
}

namespace {

MatrixXd symmetric_second_moment(const MatrixXd& rows) {
    MatrixXd m = (rows.transpose() * rows) / static_cast<double>(rows.rows());
    m = m.selfadjointView<Eigen::Upper>();  // exact symmetry, bit for bit
    return m;
}

void check_shape(const char* what, const MatrixXd& got, Eigen::Index r, Eigen::Index c) {
    if (got.rows() != r || got.cols() != c)
        throw std::invalid_argument(std::string(what) + ": statistics shape mismatch");
}

void check_len(const char* what, const VectorXd& got, Eigen::Index n) {
    if (got.size() != n)
        throw std::invalid_argument(std::string(what) + ": statistics shape mismatch");
}

}  // namespace

PhaseStatistics positive_statistics(const ModelParams& params, const MatrixXd& batch,
                                    const TrainConfig& cfg, std::uint64_t epoch) {
    if (batch.rows() == 0) throw std::invalid_argument("positive_statistics: empty minibatch");
    const Eigen::Index m = batch.rows();
    PhaseStatistics stats;
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if (batch.cols() != p.n_v)
                throw std::invalid_argument("positive_statistics: minibatch dimension mismatch");
            if constexpr (std::is_same_v<P, UnrestrictedParams>) {
                stats.second_a = symmetric_second_moment(batch);
                stats.mean_v = batch.colwise().mean();
            } else if constexpr (std::is_same_v<P, RestrictedParams>) {
                // clamped hidden dynamics is linear: use the closed form,
                // batched over the minibatch
                MatrixXd h0(p.n_h, m);
                for (Eigen::Index s = 0; s < m; ++s) {
                    Rng rng(derive_seed(cfg.seed,
                                        {stream::clamp_h0, epoch, static_cast<std::uint64_t>(s)}));
                    for (int a = 0; a < p.n_h; ++a) h0(a, s) = rng.normal();
                }
                const double sv = 1.0 / std::sqrt(static_cast<double>(p.n_v));
                const double decay = std::exp(-cfg.sim.t_target / cfg.sim.tau);
                MatrixXd drive =
                    sv * ((p.W_tilde + p.A.transpose()) * batch.transpose());  // n_h x m
                drive.colwise() += p.c;
                MatrixXd chi = (h0 * decay + drive * (1.0 - decay)).array().tanh();  // n_h x m
                stats.second_a = (batch.transpose() * chi.transpose()) / static_cast<double>(m);
                stats.mean_v = batch.colwise().mean();
                stats.mean_h1 = chi.rowwise().mean();
            } else {
                MatrixXd chi1(p.n_h1, m), chi2(p.n_h2, m);
                for (Eigen::Index s = 0; s < m; ++s) {
                    const std::uint64_t s_seed = derive_seed(
                        cfg.seed, {stream::clamp_h0, epoch, static_cast<std::uint64_t>(s)});
                    auto [c1, c2] =
                        simulate_clamped_deep(p, batch.row(s).transpose(), cfg.sim, s_seed);
                    chi1.col(s) = c1;
                    chi2.col(s) = c2;
                }
                stats.second_a = (batch.transpose() * chi1.transpose()) / static_cast<double>(m);
                stats.second_b = (chi1 * chi2.transpose()) / static_cast<double>(m);
                stats.mean_v = batch.colwise().mean();
                stats.mean_h1 = chi1.rowwise().mean();
                stats.mean_h2 = chi2.rowwise().mean();
            }
        },
        params);
    return stats;
}

PhaseStatistics negative_statistics(const ModelParams& params, const TrainConfig& cfg,
                                    std::uint64_t epoch) {
    SampleSet free_run = simulate_free(params, cfg.sim, cfg.m_batch,
                                       derive_seed(cfg.seed, {stream::negative, epoch}),
                                       cfg.n_threads);
    const double m = static_cast<double>(cfg.m_batch);
    PhaseStatistics stats;
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            (void)p;
            if constexpr (std::is_same_v<P, UnrestrictedParams>) {
                stats.second_a = symmetric_second_moment(free_run.visible);
                stats.mean_v = free_run.visible.colwise().mean();
            } else if constexpr (std::is_same_v<P, RestrictedParams>) {
                stats.second_a = (free_run.visible.transpose() * free_run.hidden1) / m;
                stats.mean_v = free_run.visible.colwise().mean();
                stats.mean_h1 = free_run.hidden1.colwise().mean();
            } else {
                stats.second_a = (free_run.visible.transpose() * free_run.hidden1) / m;
                stats.second_b = (free_run.hidden1.transpose() * free_run.hidden2) / m;
                stats.mean_v = free_run.visible.colwise().mean();
                stats.mean_h1 = free_run.hidden1.colwise().mean();
                stats.mean_h2 = free_run.hidden2.colwise().mean();
            }
        },
        params);
    return stats;
}

void apply_update(ModelParams& params, const PhaseStatistics& pos, const PhaseStatistics& neg,
                  double k) {
    std::visit(
        [&](auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, UnrestrictedParams>) {
                check_shape("apply_update: A", pos.second_a, p.n_v, p.n_v);
                check_shape("apply_update: A", neg.second_a, p.n_v, p.n_v);
                check_len("apply_update: b", pos.mean_v, p.n_v);
                check_len("apply_update: b", neg.mean_v, p.n_v);
                p.A += k * (pos.second_a - neg.second_a);
                p.b += k * (pos.mean_v - neg.mean_v);
            } else if constexpr (std::is_same_v<P, RestrictedParams>) {
                check_shape("apply_update: A", pos.second_a, p.n_v, p.n_h);
                check_shape("apply_update: A", neg.second_a, p.n_v, p.n_h);
                check_len("apply_update: b", pos.mean_v, p.n_v);
                check_len("apply_update: c", pos.mean_h1, p.n_h);
                check_len("apply_update: b", neg.mean_v, p.n_v);
                check_len("apply_update: c", neg.mean_h1, p.n_h);
                p.A += k * (pos.second_a - neg.second_a);
                p.b += k * (pos.mean_v - neg.mean_v);
                p.c += k * (pos.mean_h1 - neg.mean_h1);
            } else {
                check_shape("apply_update: A1", pos.second_a, p.n_v, p.n_h1);
                check_shape("apply_update: A2", pos.second_b, p.n_h1, p.n_h2);
                check_shape("apply_update: A1", neg.second_a, p.n_v, p.n_h1);
                check_shape("apply_update: A2", neg.second_b, p.n_h1, p.n_h2);
                check_len("apply_update: b", pos.mean_v, p.n_v);
                check_len("apply_update: c", pos.mean_h1, p.n_h1);
                check_len("apply_update: d", pos.mean_h2, p.n_h2);
                check_len("apply_update: b", neg.mean_v, p.n_v);
                check_len("apply_update: c", neg.mean_h1, p.n_h1);
                check_len("apply_update: d", neg.mean_h2, p.n_h2);
                p.A1 += k * (pos.second_a - neg.second_a);
                p.A2 += k * (pos.second_b - neg.second_b);
                p.b += k * (pos.mean_v - neg.mean_v);
                p.c += k * (pos.mean_h1 - neg.mean_h1);
                p.d += k * (pos.mean_h2 - neg.mean_h2);
            }
        },
        params);
}

void train_epoch(ModelParams& params, const Dataset& dataset, const TrainConfig& cfg,
                 std::uint64_t epoch) {
    MatrixXd batch = minibatch(dataset, cfg.m_batch, cfg.seed, epoch);
    PhaseStatistics pos = positive_statistics(params, batch, cfg, epoch);
    PhaseStatistics neg = negative_statistics(params, cfg, epoch);
    apply_update(params, pos, neg, cfg.k);
}

std::vector<MetricLogRow> train(ModelParams& params, const Dataset& dataset,
                                const TrainConfig& cfg, const TrainHooks& hooks,
                                std::uint64_t start_epoch) {
    cfg.validate();
    if (dataset.samples.rows() == 0) throw std::invalid_argument("train: empty dataset");
    if (cfg.m_batch > dataset.samples.rows())
        throw std::invalid_argument("train: m_batch exceeds dataset size");

    const int n_eval =
        cfg.n_eval > 0 ? cfg.n_eval
                       : static_cast<int>(std::min<Eigen::Index>(dataset.samples.rows(), 500));
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<MetricLogRow> log;

    auto wall = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    auto run_eval = [&](std::uint64_t epoch) {
        MetricLogRow row;
        row.epoch = epoch;
        row.report = evaluate(params, dataset, cfg.sim, cfg.sim.t_target, n_eval,
                              derive_seed(cfg.seed, {stream::eval_gen, epoch}), cfg.n_threads);
        row.wall_seconds = wall();
        log.push_back(row);
        if (hooks.on_metrics) hooks.on_metrics(row);
    };

    if (cfg.eval_every > 0 && start_epoch == 0) run_eval(0);

    for (std::uint64_t e = start_epoch; e < static_cast<std::uint64_t>(cfg.epochs); ++e) {
        train_epoch(params, dataset, cfg, e);
        const std::uint64_t done = e + 1;
        if (cfg.eval_every > 0 &&
            (done % static_cast<std::uint64_t>(cfg.eval_every) == 0 ||
             done == static_cast<std::uint64_t>(cfg.epochs)))
            run_eval(done);
        if (hooks.on_checkpoint && cfg.checkpoint_every > 0 &&
            (done % static_cast<std::uint64_t>(cfg.checkpoint_every) == 0 ||
             done == static_cast<std::uint64_t>(cfg.epochs)))
            hooks.on_checkpoint(done, params);
    }
    if (hooks.on_checkpoint && static_cast<std::uint64_t>(cfg.epochs) == start_epoch)
        hooks.on_checkpoint(start_epoch, params);
    return log;
}

std::string metric_csv_header() { return "epoch,E2,Es,ER,EAAI,wall_seconds"; }

std::string metric_csv_row(const MetricLogRow& row) {
    char buf[256];
    if (row.report.er) {
        std::snprintf(buf, sizeof(buf), "%llu,%.17g,%.17g,%.17g,%.17g,%.3f",
                      static_cast<unsigned long long>(row.epoch), row.report.e2, row.report.es,
                      *row.report.er, row.report.eaai, row.wall_seconds);
    } else {
        std::snprintf(buf, sizeof(buf), "%llu,%.17g,%.17g,,%.17g,%.3f",
                      static_cast<unsigned long long>(row.epoch), row.report.e2, row.report.es,
                      row.report.eaai, row.wall_seconds);
    }
    return buf;
}

}  // namespace chaosgen
