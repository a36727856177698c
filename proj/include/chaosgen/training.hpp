#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "chaosgen/dataio.hpp"
#include "chaosgen/dynamics.hpp"
#include "chaosgen/metrics.hpp"

namespace chaosgen {

struct TrainConfig {
    double k = 0.01;          // learning rate
    int m_batch = 500;        // minibatch size and free-chain count M
    long epochs = 0;          // one epoch = one parameter update
    SimConfig sim;
    long eval_every = 0;       // 0 disables metric evaluation
    long checkpoint_every = 0; // 0 disables checkpoint hook
    std::uint64_t seed = 0;
    int n_threads = 1;
    int n_eval = 0;            // 0 -> min(dataset rows, 500)

    void validate() const;
};

// First and second moments of one phase (data-clamped or free-running).
// second_a matches the shape of the architecture's A (or A1); second_b is the
// deep model's h1-h2 moment. Unused members stay empty.
struct PhaseStatistics {
    MatrixXd second_a;
    MatrixXd second_b;
    VectorXd mean_v;
    VectorXd mean_h1;
    VectorXd mean_h2;
};

PhaseStatistics positive_statistics(const ModelParams& params, const MatrixXd& minibatch,
                                    const TrainConfig& cfg, std::uint64_t epoch);
PhaseStatistics negative_statistics(const ModelParams& params, const TrainConfig& cfg,
                                    std::uint64_t epoch);

// every trainable tensor += k * (pos - neg); fixed matrices untouched
void apply_update(ModelParams& params, const PhaseStatistics& pos, const PhaseStatistics& neg,
                  double k);

void train_epoch(ModelParams& params, const Dataset& dataset, const TrainConfig& cfg,
                 std::uint64_t epoch);

struct MetricLogRow {
    std::uint64_t epoch = 0;
    MetricReport report;
    double wall_seconds = 0.0;
};

struct TrainHooks {
    std::function<void(const MetricLogRow&)> on_metrics;
    std::function<void(std::uint64_t epoch, const ModelParams&)> on_checkpoint;
};

// Runs the epoch loop from start_epoch to cfg.epochs, evaluating every
// eval_every epochs (including a baseline row at start) and checkpointing
// every checkpoint_every epochs plus at the end. Returns the metric log.
std::vector<MetricLogRow> train(ModelParams& params, const Dataset& dataset,
                                const TrainConfig& cfg, const TrainHooks& hooks = {},
                                std::uint64_t start_epoch = 0);

std::string metric_csv_header();
std::string metric_csv_row(const MetricLogRow& row);

}  // namespace chaosgen
