#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

namespace chaosgen {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Euler integration setup. t_target must be a (numerical) multiple of dt.
struct SimConfig {
    double dt = 1.0;
    double tau = 10.0;
    double t_target = 100.0;

    void validate() const;      // throws std::invalid_argument
    long steps() const;         // round(t_target / dt), validated
};

// One recurrently connected layer. J is the fixed chaotic coupling, A and b
// are trained. A stays exactly symmetric; the 1/sqrt(N_v) scaling is applied
// at evaluation time, never stored.
struct UnrestrictedParams {
    int n_v = 0;
    double g = 0.0;
    MatrixXd J;   // n_v x n_v, fixed
    MatrixXd A;   // n_v x n_v, trained, symmetric
    VectorXd b;   // n_v, trained
};

// Two layers, no intra-layer connections. W_tilde is an independent draw, not
// W^T. A(i,a) couples v_i->h_a and h_a->v_i with the same value.
struct RestrictedParams {
    int n_v = 0;
    int n_h = 0;
    double g = 0.0;
    MatrixXd W;        // n_v x n_h, fixed
    MatrixXd W_tilde;  // n_h x n_v, fixed
    MatrixXd A;        // n_v x n_h, trained
    VectorXd b;        // n_v
    VectorXd c;        // n_h
};

// Three layers: visible, two hidden. Four independent fixed matrices.
struct DeepParams {
    int n_v = 0;
    int n_h1 = 0;
    int n_h2 = 0;
    double g = 0.0;
    MatrixXd W1;        // n_v x n_h1
    MatrixXd W1_tilde;  // n_h1 x n_v
    MatrixXd W2;        // n_h1 x n_h2
    MatrixXd W2_tilde;  // n_h2 x n_h1
    MatrixXd A1;        // n_v x n_h1, trained
    MatrixXd A2;        // n_h1 x n_h2, trained
    VectorXd b;         // n_v
    VectorXd c;         // n_h1
    VectorXd d;         // n_h2
};

using ModelParams = std::variant<UnrestrictedParams, RestrictedParams, DeepParams>;

int visible_dim(const ModelParams& params);

// Per-chain pre-activation state; activations are read through tanh.
struct UnrestrictedState {
    VectorXd v;
    double t = 0.0;
};
struct RestrictedState {
    VectorXd v, h;
    double t = 0.0;
};
struct DeepState {
    VectorXd v, h1, h2;
    double t = 0.0;
};

enum class SampleOrigin { FreeRun, Clamped };

// Batch of tanh-activations harvested at time t_collected, one chain per row.
struct SampleSet {
    MatrixXd visible;            // m x n_v
    MatrixXd hidden1;            // m x n_h (empty for unrestricted)
    MatrixXd hidden2;            // m x n_h2 (deep only)
    double t_collected = 0.0;
    SampleOrigin origin = SampleOrigin::FreeRun;
};

UnrestrictedParams init_unrestricted(int n_v, double g, std::uint64_t seed);
RestrictedParams init_restricted(int n_v, int n_h, double g, std::uint64_t seed);
DeepParams init_deep(int n_v, int n_h1, int n_h2, double g, std::uint64_t seed);

void euler_step(UnrestrictedState& state, const UnrestrictedParams& params, const SimConfig& cfg);
void euler_step(RestrictedState& state, const RestrictedParams& params, const SimConfig& cfg);
void euler_step(DeepState& state, const DeepParams& params, const SimConfig& cfg);

// Runs m_chains independent trajectories from N(0,1) initial pre-activations
// to cfg.t_target and returns the activations at T. Chain c draws its initial
// state from derive_seed(seed, {stream::free_chain, c}); the result is
// bit-identical for any n_threads.
SampleSet simulate_free(const ModelParams& params, const SimConfig& cfg, int m_chains,
                        std::uint64_t seed, int n_threads = 1);

// Clamped-hidden dynamics is linear; integrates it exactly and returns
// tanh(h(T)). xi must lie in [-1,1]^{n_v}.
VectorXd clamped_hidden_closed_form(const RestrictedParams& params, const VectorXd& xi,
                                    const VectorXd& h0, const SimConfig& cfg);

// Mirror of the above for clamped hidden activations chi in (-1,1)^{n_h};
// returns tanh(v(T)).
VectorXd clamped_visible_closed_form(const RestrictedParams& params, const VectorXd& chi,
                                     const VectorXd& v0, const SimConfig& cfg);

// Euler-integrates the two hidden layers with the visible activations clamped
// to xi; returns (tanh(h1(T)), tanh(h2(T))).
std::pair<VectorXd, VectorXd> simulate_clamped_deep(const DeepParams& params, const VectorXd& xi,
                                                    const SimConfig& cfg, const VectorXd& h1_0,
                                                    const VectorXd& h2_0);
std::pair<VectorXd, VectorXd> simulate_clamped_deep(const DeepParams& params, const VectorXd& xi,
                                                    const SimConfig& cfg, std::uint64_t seed);

// Runs a reference trajectory and a clone perturbed by a random vector of
// norm delta0; returns (t, Euclidean separation of activations) per step.
std::vector<std::pair<double, double>> chaos_probe(const ModelParams& params, const SimConfig& cfg,
                                                   double delta0, double t_probe,
                                                   std::uint64_t seed);

}  // namespace chaosgen
