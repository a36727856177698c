#include "chaosgen/dynamics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

#include "chaosgen/rng.hpp"

namespace chaosgen {

namespace {

// Chains are integrated in fixed-size blocks so the arithmetic (and hence the
// result bytes) does not depend on how many threads pick up the blocks.
constexpr int kChainBlock = 64;

void fill_gaussian(MatrixXd& m, double stddev, Rng& rng) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = stddev * rng.normal();
}

void check_dim(const char* what, Eigen::Index got, Eigen::Index want) {
    if (got != want)
        throw std::invalid_argument(std::string(what) + ": dimension mismatch, got " +
                                    std::to_string(got) + ", expected " + std::to_string(want));
}

template <typename Fn>
void run_blocks(int m_chains, int n_threads, Fn&& fn) {
    const int n_blocks = (m_chains + kChainBlock - 1) / kChainBlock;
    if (n_threads <= 1 || n_blocks <= 1) {
        for (int blk = 0; blk < n_blocks; ++blk) fn(blk);
        return;
    }
    std::vector<std::thread> pool;
    const int workers = std::min(n_threads, n_blocks);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int blk = w; blk < n_blocks; blk += workers) fn(blk);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

void SimConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("SimConfig: dt must be > 0");
    if (!(tau > 0.0)) throw std::invalid_argument("SimConfig: tau must be > 0");
    if (!(t_target >= 0.0)) throw std::invalid_argument("SimConfig: t_target must be >= 0");
    const double q = t_target / dt;
    if (std::abs(q - std::round(q)) > 1e-9 * std::max(1.0, std::abs(q)))
        throw std::invalid_argument("SimConfig: t_target must be a multiple of dt");
}

long SimConfig::steps() const {
    validate();
    return static_cast<long>(std::llround(t_target / dt));
}

int visible_dim(const ModelParams& params) {
    return std::visit([](const auto& p) { return p.n_v; }, params);
}

UnrestrictedParams init_unrestricted(int n_v, double g, std::uint64_t seed) {
    if (n_v < 1) throw std::invalid_argument("init_unrestricted: n_v must be >= 1");
    if (g < 0.0) throw std::invalid_argument("init_unrestricted: g must be >= 0");
    UnrestrictedParams p;
    p.n_v = n_v;
    p.g = g;
    p.J.resize(n_v, n_v);
    Rng rng(derive_seed(seed, {stream::init_fixed, 0}));
    fill_gaussian(p.J, std::sqrt(g), rng);
    p.A = MatrixXd::Zero(n_v, n_v);
    p.b = VectorXd::Zero(n_v);
    return p;
}

RestrictedParams init_restricted(int n_v, int n_h, double g, std::uint64_t seed) {
    if (n_v < 1 || n_h < 1) throw std::invalid_argument("init_restricted: dimensions must be >= 1");
    if (g < 0.0) throw std::invalid_argument("init_restricted: g must be >= 0");
    RestrictedParams p;
    p.n_v = n_v;
    p.n_h = n_h;
    p.g = g;
    p.W.resize(n_v, n_h);
    p.W_tilde.resize(n_h, n_v);
    const double sd = std::sqrt(g);
    Rng rng_w(derive_seed(seed, {stream::init_fixed, 0}));
    Rng rng_wt(derive_seed(seed, {stream::init_fixed, 1}));
    fill_gaussian(p.W, sd, rng_w);
    fill_gaussian(p.W_tilde, sd, rng_wt);
    p.A = MatrixXd::Zero(n_v, n_h);
    p.b = VectorXd::Zero(n_v);
    p.c = VectorXd::Zero(n_h);
    return p;
}

DeepParams init_deep(int n_v, int n_h1, int n_h2, double g, std::uint64_t seed) {
    if (n_v < 1 || n_h1 < 1 || n_h2 < 1)
        throw std::invalid_argument("init_deep: dimensions must be >= 1");
    if (g < 0.0) throw std::invalid_argument("init_deep: g must be >= 0");
    DeepParams p;
    p.n_v = n_v;
    p.n_h1 = n_h1;
    p.n_h2 = n_h2;
    p.g = g;
    const double sd = std::sqrt(g);
    p.W1.resize(n_v, n_h1);
    p.W1_tilde.resize(n_h1, n_v);
    p.W2.resize(n_h1, n_h2);
    p.W2_tilde.resize(n_h2, n_h1);
    for (int k = 0; k < 4; ++k) {
        Rng rng(derive_seed(seed, {stream::init_fixed, static_cast<std::uint64_t>(k)}));
        MatrixXd* m = k == 0 ? &p.W1 : k == 1 ? &p.W1_tilde : k == 2 ? &p.W2 : &p.W2_tilde;
        fill_gaussian(*m, sd, rng);
    }
    p.A1 = MatrixXd::Zero(n_v, n_h1);
    p.A2 = MatrixXd::Zero(n_h1, n_h2);
    p.b = VectorXd::Zero(n_v);
    p.c = VectorXd::Zero(n_h1);
    p.d = VectorXd::Zero(n_h2);
    return p;
}

void euler_step(UnrestrictedState& state, const UnrestrictedParams& params, const SimConfig& cfg) {
    check_dim("euler_step: v", state.v.size(), params.n_v);
    const double r = cfg.dt / cfg.tau;
    const double scale = 1.0 / std::sqrt(static_cast<double>(params.n_v));
    VectorXd phi = state.v.array().tanh();
    state.v += r * (-state.v + scale * ((params.J + params.A) * phi) + params.b);
    state.t += cfg.dt;
}

void euler_step(RestrictedState& state, const RestrictedParams& params, const SimConfig& cfg) {
    check_dim("euler_step: v", state.v.size(), params.n_v);
    check_dim("euler_step: h", state.h.size(), params.n_h);
    const double r = cfg.dt / cfg.tau;
    const double sv = 1.0 / std::sqrt(static_cast<double>(params.n_v));
    const double sh = 1.0 / std::sqrt(static_cast<double>(params.n_h));
    VectorXd phi_v = state.v.array().tanh();
    VectorXd phi_h = state.h.array().tanh();
    // Jacobi update: both layers advance from the pre-step state
    VectorXd v_next = state.v + r * (-state.v + sh * ((params.W + params.A) * phi_h) + params.b);
    VectorXd h_next =
        state.h +
        r * (-state.h + sv * ((params.W_tilde + params.A.transpose()) * phi_v) + params.c);
    state.v = std::move(v_next);
    state.h = std::move(h_next);
    state.t += cfg.dt;
}

void euler_step(DeepState& state, const DeepParams& params, const SimConfig& cfg) {
    check_dim("euler_step: v", state.v.size(), params.n_v);
    check_dim("euler_step: h1", state.h1.size(), params.n_h1);
    check_dim("euler_step: h2", state.h2.size(), params.n_h2);
    const double r = cfg.dt / cfg.tau;
    const double sv = 1.0 / std::sqrt(static_cast<double>(params.n_v));
    const double s1 = 1.0 / std::sqrt(static_cast<double>(params.n_h1));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(params.n_h2));
    VectorXd phi_v = state.v.array().tanh();
    VectorXd phi_1 = state.h1.array().tanh();
    VectorXd phi_2 = state.h2.array().tanh();
    VectorXd v_next = state.v + r * (-state.v + s1 * ((params.W1 + params.A1) * phi_1) + params.b);
    VectorXd h1_next =
        state.h1 + r * (-state.h1 + sv * ((params.W1_tilde + params.A1.transpose()) * phi_v) +
                        s2 * ((params.W2 + params.A2) * phi_2) + params.c);
    VectorXd h2_next =
        state.h2 +
        r * (-state.h2 + s1 * ((params.W2_tilde + params.A2.transpose()) * phi_1) + params.d);
    state.v = std::move(v_next);
    state.h1 = std::move(h1_next);
    state.h2 = std::move(h2_next);
    state.t += cfg.dt;
}

namespace {

// Batched integrators: one column per chain. The per-block matrices are
// integrated with plain matrix products, so a block's result depends only on
// its own initial conditions and the (immutable) parameters.

void simulate_block(const UnrestrictedParams& p, const SimConfig& cfg, std::uint64_t seed,
                    int chain0, int nb, SampleSet& out) {
    MatrixXd v(p.n_v, nb);
    for (int c = 0; c < nb; ++c) {
        Rng rng(derive_seed(seed, {stream::free_chain, static_cast<std::uint64_t>(chain0 + c)}));
        for (int i = 0; i < p.n_v; ++i) v(i, c) = rng.normal();
    }
    const long n_steps = cfg.steps();
    const double r = cfg.dt / cfg.tau;
    const double scale = 1.0 / std::sqrt(static_cast<double>(p.n_v));
    const MatrixXd coupling = p.J + p.A;
    for (long s = 0; s < n_steps; ++s) {
        MatrixXd phi = v.array().tanh();
        v += r * (-v + scale * (coupling * phi));
        v.colwise() += r * p.b;
    }
    out.visible.middleRows(chain0, nb) = v.array().tanh().transpose();
}

void simulate_block(const RestrictedParams& p, const SimConfig& cfg, std::uint64_t seed,
                    int chain0, int nb, SampleSet& out) {
    MatrixXd v(p.n_v, nb), h(p.n_h, nb);
    for (int c = 0; c < nb; ++c) {
        Rng rng(derive_seed(seed, {stream::free_chain, static_cast<std::uint64_t>(chain0 + c)}));
        for (int i = 0; i < p.n_v; ++i) v(i, c) = rng.normal();
        for (int a = 0; a < p.n_h; ++a) h(a, c) = rng.normal();
    }
    const long n_steps = cfg.steps();
    const double r = cfg.dt / cfg.tau;
    const double sv = 1.0 / std::sqrt(static_cast<double>(p.n_v));
    const double sh = 1.0 / std::sqrt(static_cast<double>(p.n_h));
    const MatrixXd wv = p.W + p.A;                  // drives v from phi(h)
    const MatrixXd wh = p.W_tilde + p.A.transpose();  // drives h from phi(v)
    for (long s = 0; s < n_steps; ++s) {
        MatrixXd phi_v = v.array().tanh();
        MatrixXd phi_h = h.array().tanh();
        v += r * (-v + sh * (wv * phi_h));
        v.colwise() += r * p.b;
        h += r * (-h + sv * (wh * phi_v));
        h.colwise() += r * p.c;
    }
    out.visible.middleRows(chain0, nb) = v.array().tanh().transpose();
    out.hidden1.middleRows(chain0, nb) = h.array().tanh().transpose();
}

void simulate_block(const DeepParams& p, const SimConfig& cfg, std::uint64_t seed, int chain0,
                    int nb, SampleSet& out) {
    MatrixXd v(p.n_v, nb), h1(p.n_h1, nb), h2(p.n_h2, nb);
    for (int c = 0; c < nb; ++c) {
        Rng rng(derive_seed(seed, {stream::free_chain, static_cast<std::uint64_t>(chain0 + c)}));
        for (int i = 0; i < p.n_v; ++i) v(i, c) = rng.normal();
        for (int a = 0; a < p.n_h1; ++a) h1(a, c) = rng.normal();
        for (int a = 0; a < p.n_h2; ++a) h2(a, c) = rng.normal();
    }
    const long n_steps = cfg.steps();
    const double r = cfg.dt / cfg.tau;
    const double sv = 1.0 / std::sqrt(static_cast<double>(p.n_v));
    const double s1 = 1.0 / std::sqrt(static_cast<double>(p.n_h1));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(p.n_h2));
    const MatrixXd w_v1 = p.W1 + p.A1;
    const MatrixXd w_1v = p.W1_tilde + p.A1.transpose();
    const MatrixXd w_12 = p.W2 + p.A2;
    const MatrixXd w_21 = p.W2_tilde + p.A2.transpose();
    for (long s = 0; s < n_steps; ++s) {
        MatrixXd phi_v = v.array().tanh();
        MatrixXd phi_1 = h1.array().tanh();
        MatrixXd phi_2 = h2.array().tanh();
        v += r * (-v + s1 * (w_v1 * phi_1));
        v.colwise() += r * p.b;
        h1 += r * (-h1 + sv * (w_1v * phi_v) + s2 * (w_12 * phi_2));
        h1.colwise() += r * p.c;
        h2 += r * (-h2 + s1 * (w_21 * phi_1));
        h2.colwise() += r * p.d;
    }
    out.visible.middleRows(chain0, nb) = v.array().tanh().transpose();
    out.hidden1.middleRows(chain0, nb) = h1.array().tanh().transpose();
    out.hidden2.middleRows(chain0, nb) = h2.array().tanh().transpose();
}

}  // namespace

SampleSet simulate_free(const ModelParams& params, const SimConfig& cfg, int m_chains,
                        std::uint64_t seed, int n_threads) {
    if (m_chains < 1) throw std::invalid_argument("simulate_free: m_chains must be >= 1");
    cfg.validate();
    SampleSet out;
    out.t_collected = cfg.t_target;
    out.origin = SampleOrigin::FreeRun;
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            out.visible.resize(m_chains, p.n_v);
            if constexpr (std::is_same_v<P, RestrictedParams>) {
                out.hidden1.resize(m_chains, p.n_h);
            } else if constexpr (std::is_same_v<P, DeepParams>) {
                out.hidden1.resize(m_chains, p.n_h1);
                out.hidden2.resize(m_chains, p.n_h2);
            }
            run_blocks(m_chains, n_threads, [&](int blk) {
                const int chain0 = blk * kChainBlock;
                const int nb = std::min(kChainBlock, m_chains - chain0);
                simulate_block(p, cfg, seed, chain0, nb, out);
            });
        },
        params);
    return out;
}

VectorXd clamped_hidden_closed_form(const RestrictedParams& params, const VectorXd& xi,
                                    const VectorXd& h0, const SimConfig& cfg) {
    check_dim("clamped_hidden_closed_form: xi", xi.size(), params.n_v);
    check_dim("clamped_hidden_closed_form: h0", h0.size(), params.n_h);
    const double sv = 1.0 / std::sqrt(static_cast<double>(params.n_v));
    const double decay = std::exp(-cfg.t_target / cfg.tau);
    VectorXd drive = sv * ((params.W_tilde + params.A.transpose()) * xi) + params.c;
    VectorXd h_final = h0 * decay + drive * (1.0 - decay);
    return h_final.array().tanh();
}

VectorXd clamped_visible_closed_form(const RestrictedParams& params, const VectorXd& chi,
                                     const VectorXd& v0, const SimConfig& cfg) {
    check_dim("clamped_visible_closed_form: chi", chi.size(), params.n_h);
    check_dim("clamped_visible_closed_form: v0", v0.size(), params.n_v);
    const double sh = 1.0 / std::sqrt(static_cast<double>(params.n_h));
    const double decay = std::exp(-cfg.t_target / cfg.tau);
    VectorXd drive = sh * ((params.W + params.A) * chi) + params.b;
    VectorXd v_final = v0 * decay + drive * (1.0 - decay);
    return v_final.array().tanh();
}

std::pair<VectorXd, VectorXd> simulate_clamped_deep(const DeepParams& params, const VectorXd& xi,
                                                    const SimConfig& cfg, const VectorXd& h1_0,
                                                    const VectorXd& h2_0) {
    check_dim("simulate_clamped_deep: xi", xi.size(), params.n_v);
    check_dim("simulate_clamped_deep: h1_0", h1_0.size(), params.n_h1);
    check_dim("simulate_clamped_deep: h2_0", h2_0.size(), params.n_h2);
    const long n_steps = cfg.steps();
    const double r = cfg.dt / cfg.tau;
    const double sv = 1.0 / std::sqrt(static_cast<double>(params.n_v));
    const double s1 = 1.0 / std::sqrt(static_cast<double>(params.n_h1));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(params.n_h2));
    // the visible drive is constant while the visibles are clamped
    const VectorXd drive_v = sv * ((params.W1_tilde + params.A1.transpose()) * xi) + params.c;
    const MatrixXd w_12 = params.W2 + params.A2;
    const MatrixXd w_21 = params.W2_tilde + params.A2.transpose();
    VectorXd h1 = h1_0, h2 = h2_0;
    for (long s = 0; s < n_steps; ++s) {
        VectorXd phi_1 = h1.array().tanh();
        VectorXd phi_2 = h2.array().tanh();
        VectorXd h1_next = h1 + r * (-h1 + drive_v + s2 * (w_12 * phi_2));
        VectorXd h2_next = h2 + r * (-h2 + s1 * (w_21 * phi_1) + params.d);
        h1 = std::move(h1_next);
        h2 = std::move(h2_next);
    }
    return {h1.array().tanh(), h2.array().tanh()};
}

std::pair<VectorXd, VectorXd> simulate_clamped_deep(const DeepParams& params, const VectorXd& xi,
                                                    const SimConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    VectorXd h1_0(params.n_h1), h2_0(params.n_h2);
    for (int a = 0; a < params.n_h1; ++a) h1_0(a) = rng.normal();
    for (int a = 0; a < params.n_h2; ++a) h2_0(a) = rng.normal();
    return simulate_clamped_deep(params, xi, cfg, h1_0, h2_0);
}

namespace {

template <typename State>
VectorXd activations(const State& s) {
    if constexpr (std::is_same_v<State, UnrestrictedState>) {
        return s.v.array().tanh();
    } else if constexpr (std::is_same_v<State, RestrictedState>) {
        VectorXd out(s.v.size() + s.h.size());
        out << s.v.array().tanh().matrix(), s.h.array().tanh().matrix();
        return out;
    } else {
        VectorXd out(s.v.size() + s.h1.size() + s.h2.size());
        out << s.v.array().tanh().matrix(), s.h1.array().tanh().matrix(),
            s.h2.array().tanh().matrix();
        return out;
    }
}

template <typename State, typename Params>
std::vector<std::pair<double, double>> probe_impl(const Params& p, const SimConfig& cfg,
                                                  double delta0, double t_probe,
                                                  std::uint64_t seed) {
    SimConfig probe_cfg = cfg;
    probe_cfg.t_target = t_probe;
    const long n_steps = probe_cfg.steps();

    auto fill = [](VectorXd& v, Rng& rng) {
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
    };
    Rng rng_ref(derive_seed(seed, {stream::probe, 0}));
    Rng rng_pert(derive_seed(seed, {stream::probe, 1}));

    State ref;
    if constexpr (std::is_same_v<State, UnrestrictedState>) {
        ref.v.resize(p.n_v);
        fill(ref.v, rng_ref);
    } else if constexpr (std::is_same_v<State, RestrictedState>) {
        ref.v.resize(p.n_v);
        ref.h.resize(p.n_h);
        fill(ref.v, rng_ref);
        fill(ref.h, rng_ref);
    } else {
        ref.v.resize(p.n_v);
        ref.h1.resize(p.n_h1);
        ref.h2.resize(p.n_h2);
        fill(ref.v, rng_ref);
        fill(ref.h1, rng_ref);
        fill(ref.h2, rng_ref);
    }

    State pert = ref;
    // random perturbation direction, scaled to norm delta0
    auto perturb = [&](VectorXd& v, const VectorXd& dir, double scale) { v += scale * dir; };
    {
        Eigen::Index dim = 0;
        if constexpr (std::is_same_v<State, UnrestrictedState>) dim = p.n_v;
        else if constexpr (std::is_same_v<State, RestrictedState>) dim = p.n_v + p.n_h;
        else dim = p.n_v + p.n_h1 + p.n_h2;
        VectorXd dir(dim);
        fill(dir, rng_pert);
        dir *= delta0 / dir.norm();
        if constexpr (std::is_same_v<State, UnrestrictedState>) {
            perturb(pert.v, dir, 1.0);
        } else if constexpr (std::is_same_v<State, RestrictedState>) {
            pert.v += dir.head(p.n_v);
            pert.h += dir.tail(p.n_h);
        } else {
            pert.v += dir.head(p.n_v);
            pert.h1 += dir.segment(p.n_v, p.n_h1);
            pert.h2 += dir.tail(p.n_h2);
        }
    }

    std::vector<std::pair<double, double>> curve;
    curve.reserve(static_cast<std::size_t>(n_steps) + 1);
    curve.emplace_back(0.0, (activations(ref) - activations(pert)).norm());
    for (long s = 0; s < n_steps; ++s) {
        euler_step(ref, p, probe_cfg);
        euler_step(pert, p, probe_cfg);
        curve.emplace_back(ref.t, (activations(ref) - activations(pert)).norm());
    }
    return curve;
}

}  // namespace

std::vector<std::pair<double, double>> chaos_probe(const ModelParams& params, const SimConfig& cfg,
                                                   double delta0, double t_probe,
                                                   std::uint64_t seed) {
    if (!(delta0 > 0.0)) throw std::invalid_argument("chaos_probe: delta0 must be > 0");
    return std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, UnrestrictedParams>)
                return probe_impl<UnrestrictedState>(p, cfg, delta0, t_probe, seed);
            else if constexpr (std::is_same_v<P, RestrictedParams>)
                return probe_impl<RestrictedState>(p, cfg, delta0, t_probe, seed);
            else
                return probe_impl<DeepState>(p, cfg, delta0, t_probe, seed);
        },
        params);
}

}  // namespace chaosgen
