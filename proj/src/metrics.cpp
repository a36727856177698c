#include "chaosgen/metrics.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "chaosgen/dataio.hpp"
#include "chaosgen/rng.hpp"

namespace chaosgen {

MatrixXd covariance_matrix(const MatrixXd& samples) {
    const Eigen::Index n = samples.rows();
    if (n < 2) throw std::invalid_argument("covariance_matrix: need at least 2 samples");
    Eigen::RowVectorXd mean = samples.colwise().mean();
    MatrixXd centered = samples.rowwise() - mean;
    MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n);
    cov = cov.selfadjointView<Eigen::Upper>();  // exact symmetry
    return cov;
}

double error_second_moment(const MatrixXd& gen, const MatrixXd& data) {
    if (gen.cols() != data.cols())
        throw std::invalid_argument("error_second_moment: visible dimension mismatch");
    const Eigen::Index n_v = gen.cols();
    if (n_v < 2) throw std::invalid_argument("error_second_moment: need N_v >= 2");
    MatrixXd cg = covariance_matrix(gen);
    MatrixXd cd = covariance_matrix(data);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n_v; ++i)
        for (Eigen::Index j = i + 1; j < n_v; ++j) {
            const double d = cg(i, j) - cd(i, j);
            acc += d * d;
        }
    return acc / (static_cast<double>(n_v) * static_cast<double>(n_v - 1));
}

VectorXd singular_values(const MatrixXd& samples) {
    if (samples.size() == 0) throw std::invalid_argument("singular_values: empty matrix");
    Eigen::BDCSVD<MatrixXd> svd(samples);
    return svd.singularValues();  // Eigen returns them sorted descending
}

double error_spectrum(const MatrixXd& gen, const MatrixXd& data) {
    if (gen.rows() != data.rows() || gen.cols() != data.cols())
        throw std::invalid_argument("error_spectrum: shape mismatch");
    VectorXd sg = singular_values(gen);
    VectorXd sd = singular_values(data);
    // spectra have min(n, N_v) entries; the remaining would-be values are zero
    return (sg - sd).squaredNorm() / static_cast<double>(gen.rows());
}

double error_reconstruction(const RestrictedParams& params, const MatrixXd& data,
                            const SimConfig& cfg, double t_star, std::uint64_t seed) {
    if (data.cols() != params.n_v)
        throw std::invalid_argument("error_reconstruction: visible dimension mismatch");
    SimConfig star = cfg;
    star.t_target = t_star;
    double acc = 0.0;
    for (Eigen::Index s = 0; s < data.rows(); ++s) {
        Rng rng(derive_seed(seed, {stream::recon, static_cast<std::uint64_t>(s)}));
        VectorXd h0(params.n_h), v0(params.n_v);
        for (int a = 0; a < params.n_h; ++a) h0(a) = rng.normal();
        for (int i = 0; i < params.n_v; ++i) v0(i) = rng.normal();
        VectorXd xi = data.row(s).transpose();
        VectorXd chi = clamped_hidden_closed_form(params, xi, h0, star);
        VectorXd phi_v = clamped_visible_closed_form(params, chi, v0, star);
        acc += (xi - phi_v).squaredNorm();
    }
    return acc / (static_cast<double>(data.rows()) * params.n_v);
}

double error_reconstruction(const ModelParams& params, const MatrixXd& data, const SimConfig& cfg,
                            double t_star, std::uint64_t seed) {
    if (const auto* p = std::get_if<RestrictedParams>(&params))
        return error_reconstruction(*p, data, cfg, t_star, seed);
    throw std::invalid_argument(
        "error_reconstruction: unsupported architecture (restricted only)");
}

double error_aai(const MatrixXd& gen, const MatrixXd& data) {
    const Eigen::Index n = gen.rows();
    if (n < 2) throw std::invalid_argument("error_aai: need at least 2 samples per set");
    if (data.rows() != n || data.cols() != gen.cols())
        throw std::invalid_argument("error_aai: gen and data must have the same shape");

    MatrixXd stacked(2 * n, gen.cols());
    stacked.topRows(n) = gen;
    stacked.bottomRows(n) = data;

    // squared distances; the monotone transform preserves the argmin.
    // Ties (including exact duplicates) resolve to the lowest stacked index.
    long gen_nn_gen = 0, data_nn_data = 0;
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        Eigen::Index best_j = -1;
        for (Eigen::Index j = 0; j < 2 * n; ++j) {
            if (j == i) continue;
            const double d2 = (stacked.row(i) - stacked.row(j)).squaredNorm();
            if (d2 < best) {
                best = d2;
                best_j = j;
            }
        }
        if (i < n && best_j < n) ++gen_nn_gen;
        if (i >= n && best_j >= n) ++data_nn_data;
    }
    const double p_gg = static_cast<double>(gen_nn_gen) / static_cast<double>(n);
    const double p_dd = static_cast<double>(data_nn_data) / static_cast<double>(n);
    return 0.5 * ((p_gg - 0.5) * (p_gg - 0.5) + (p_dd - 0.5) * (p_dd - 0.5));
}

MetricReport evaluate(const ModelParams& params, const Dataset& data, const SimConfig& cfg,
                      double t_star, int n_eval, std::uint64_t seed, int n_threads) {
    if (n_eval < 2) throw std::invalid_argument("evaluate: n_eval must be >= 2");
    if (n_eval > data.samples.rows())
        throw std::invalid_argument("evaluate: n_eval exceeds data rows");
    SimConfig star = cfg;
    star.t_target = t_star;

    SampleSet gen = simulate_free(params, star, n_eval,
                                  derive_seed(seed, {stream::eval_gen}), n_threads);
    MatrixXd data_rows = minibatch(data, n_eval, derive_seed(seed, {stream::eval_data}), 0);

    MetricReport report;
    report.t_star = t_star;
    report.n_samples = n_eval;
    report.e2 = error_second_moment(gen.visible, data_rows);
    report.es = error_spectrum(gen.visible, data_rows);
    report.eaai = error_aai(gen.visible, data_rows);
    if (const auto* p = std::get_if<RestrictedParams>(&params))
        report.er = error_reconstruction(*p, data_rows, cfg, t_star, derive_seed(seed, {stream::recon}));
    return report;
}

}  // namespace chaosgen
