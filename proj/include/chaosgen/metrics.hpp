#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "chaosgen/dynamics.hpp"

namespace chaosgen {

struct Dataset;

// The four accuracy indices at one evaluation target time.
struct MetricReport {
    double e2 = 0.0;
    double es = 0.0;
    std::optional<double> er;  // restricted architecture only
    double eaai = 0.0;
    double t_star = 0.0;
    int n_samples = 0;
};

// population-normalized covariance of the rows (one sample per row)
MatrixXd covariance_matrix(const MatrixXd& samples);

// off-diagonal MSE of the two covariance matrices, 1/(N_v(N_v-1)) over i<j
double error_second_moment(const MatrixXd& gen, const MatrixXd& data);

// descending singular values of the raw sample matrix
VectorXd singular_values(const MatrixXd& samples);

// mean squared difference of the two descending spectra, normalized by the
// sample count
double error_spectrum(const MatrixXd& gen, const MatrixXd& data);

// clamp visibles to each data row, take the hidden closed form, then clamp
// hiddens and read the visibles back; MSE against the original rows
double error_reconstruction(const RestrictedParams& params, const MatrixXd& data,
                            const SimConfig& cfg, double t_star, std::uint64_t seed);
double error_reconstruction(const ModelParams& params, const MatrixXd& data, const SimConfig& cfg,
                            double t_star, std::uint64_t seed);  // throws for other architectures

// nearest-neighbor mixing score over the stacked gen+data sets
double error_aai(const MatrixXd& gen, const MatrixXd& data);

// generates n_eval free-run samples at t_star and scores them against a
// deterministic n_eval-row subset of data
MetricReport evaluate(const ModelParams& params, const Dataset& data, const SimConfig& cfg,
                      double t_star, int n_eval, std::uint64_t seed, int n_threads = 1);

}  // namespace chaosgen
