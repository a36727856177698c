#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "chaosgen/dataio.hpp"
#include "chaosgen/metrics.hpp"
#include "chaosgen/rng.hpp"

using namespace chaosgen;

namespace {

MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) {
    Rng rng(seed);
    MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

MatrixXd shuffle_rows(const MatrixXd& m, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Eigen::Index> order(m.rows());
    for (Eigen::Index i = 0; i < m.rows(); ++i) order[i] = i;
    for (Eigen::Index i = m.rows() - 1; i > 0; --i)
        std::swap(order[i], order[rng.next_below(static_cast<std::uint64_t>(i) + 1)]);
    MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.row(i) = m.row(order[i]);
    return out;
}

// independent eigen-oracle for symmetric 3x3 matrices (trigonometric cubic)
std::vector<double> sym3_eigenvalues(const Eigen::Matrix3d& m) {
    const double p1 = m(0, 1) * m(0, 1) + m(0, 2) * m(0, 2) + m(1, 2) * m(1, 2);
    if (p1 == 0.0) {
        std::vector<double> e{m(0, 0), m(1, 1), m(2, 2)};
        std::sort(e.begin(), e.end(), std::greater<>());
        return e;
    }
    const double q = m.trace() / 3.0;
    const double p2 = (m(0, 0) - q) * (m(0, 0) - q) + (m(1, 1) - q) * (m(1, 1) - q) +
                      (m(2, 2) - q) * (m(2, 2) - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    Eigen::Matrix3d b = (m - q * Eigen::Matrix3d::Identity()) / p;
    const double det_b = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) -
                         b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0)) +
                         b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    const double r = std::clamp(det_b / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
    return {e1, 3.0 * q - e1 - e3, e3};
}

// exhaustive nearest-neighbor scan, written independently of error_aai
double aai_brute_force(const MatrixXd& gen, const MatrixXd& data) {
    const Eigen::Index n = gen.rows();
    int gg = 0, dd = 0;
    auto row = [&](Eigen::Index k) { return k < n ? gen.row(k) : data.row(k - n); };
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
        Eigen::Index arg = -1;
        double best = 1e300;
        for (Eigen::Index j = 0; j < 2 * n; ++j) {
            if (j == i) continue;
            double d2 = 0.0;
            for (Eigen::Index c = 0; c < gen.cols(); ++c) {
                const double d = row(i)(c) - row(j)(c);
                d2 += d * d;
            }
            if (d2 < best) {
                best = d2;
                arg = j;
            }
        }
        if (i < n && arg < n) ++gg;
        if (i >= n && arg >= n) ++dd;
    }
    const double pg = double(gg) / double(n), pd = double(dd) / double(n);
    return 0.5 * ((pg - 0.5) * (pg - 0.5) + (pd - 0.5) * (pd - 0.5));
}

}  // namespace

TEST_CASE("covariance_matrix") {
    SUBCASE("constant rows give zero") {
        MatrixXd m(3, 4);
        m.rowwise() = Eigen::RowVector4d(0.3, -0.7, 1.0, 0.0);
        CHECK(covariance_matrix(m).cwiseAbs().maxCoeff() <= 1e-30);
    }
    SUBCASE("hand case") {
        MatrixXd m(2, 2);
        m << 1, 1, -1, -1;
        MatrixXd c = covariance_matrix(m);
        CHECK(c(0, 0) == doctest::Approx(1.0));
        CHECK(c(0, 1) == doctest::Approx(1.0));
        CHECK(c(1, 0) == doctest::Approx(1.0));
        CHECK(c(1, 1) == doctest::Approx(1.0));
    }
    SUBCASE("positive semidefinite and exactly symmetric") {
        MatrixXd m = random_matrix(40, 6, 11);
        MatrixXd c = covariance_matrix(m);
        CHECK((c - c.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Rng rng(12);
        for (int trial = 0; trial < 20; ++trial) {
            VectorXd x(6);
            for (int i = 0; i < 6; ++i) x(i) = rng.normal();
            CHECK(x.dot(c * x) >= -1e-12);
        }
    }
    SUBCASE("rejects fewer than two rows") {
        CHECK_THROWS_AS(covariance_matrix(MatrixXd::Zero(1, 3)), std::invalid_argument);
    }
}

TEST_CASE("error_second_moment") {
    SUBCASE("identical sets give exactly zero") {
        MatrixXd m = random_matrix(30, 5, 3);
        CHECK(error_second_moment(m, m) == 0.0);
    }
    SUBCASE("hand case: off-diagonal difference 1 at N_v=2 gives 0.5") {
        MatrixXd gen(2, 2), data(2, 2);
        gen << 1, 1, -1, -1;    // C12 = 1
        data << 1, 1, 1, -1;    // C12 = 0
        CHECK(error_second_moment(gen, data) == doctest::Approx(0.5));
    }
    SUBCASE("symmetric in argument exchange and permutation invariant") {
        MatrixXd a = random_matrix(25, 4, 5), b = random_matrix(25, 4, 6);
        CHECK(error_second_moment(a, b) == doctest::Approx(error_second_moment(b, a)));
        CHECK(error_second_moment(shuffle_rows(a, 7), shuffle_rows(b, 8)) ==
              doctest::Approx(error_second_moment(a, b)));
    }
    SUBCASE("dimension mismatch throws") {
        CHECK_THROWS_AS(error_second_moment(MatrixXd::Zero(4, 3), MatrixXd::Zero(4, 2)),
                        std::invalid_argument);
    }
}

TEST_CASE("singular_values") {
    SUBCASE("diagonal case") {
        MatrixXd m = MatrixXd::Zero(2, 2);
        m(0, 0) = 3.0;
        m(1, 1) = 2.0;
        VectorXd s = singular_values(m);
        CHECK(s(0) == doctest::Approx(3.0));
        CHECK(s(1) == doctest::Approx(2.0));
    }
    SUBCASE("Frobenius identity") {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            MatrixXd m = random_matrix(17, 9, seed);
            VectorXd s = singular_values(m);
            CHECK(s.minCoeff() >= 0.0);
            for (int i = 1; i < s.size(); ++i) CHECK(s(i) <= s(i - 1));
            CHECK(std::abs(s.squaredNorm() - m.squaredNorm()) <= 1e-10 * m.squaredNorm());
        }
    }
    SUBCASE("matches 3x3 characteristic-polynomial eigen-oracle") {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            MatrixXd x = random_matrix(5, 3, 100 + seed);
            Eigen::Matrix3d xtx = (x.transpose() * x).eval();
            auto eig = sym3_eigenvalues(xtx);
            VectorXd s = singular_values(x);
            REQUIRE(s.size() == 3);
            for (int i = 0; i < 3; ++i)
                CHECK(s(i) == doctest::Approx(std::sqrt(std::max(eig[i], 0.0))).epsilon(1e-8));
        }
    }
    SUBCASE("homogeneity") {
        MatrixXd m = random_matrix(6, 4, 77);
        VectorXd s1 = singular_values(m), s2 = singular_values(2.5 * m);
        for (int i = 0; i < s1.size(); ++i) CHECK(s2(i) == doctest::Approx(2.5 * s1(i)));
    }
}

TEST_CASE("error_spectrum") {
    SUBCASE("identical sets give exactly zero") {
        MatrixXd m = random_matrix(12, 5, 9);
        CHECK(error_spectrum(m, m) == 0.0);
    }
    SUBCASE("hand case: spectra (3,2) vs (3,0) with n=2 give 2") {
        MatrixXd gen = MatrixXd::Zero(2, 2), data = MatrixXd::Zero(2, 2);
        gen(0, 0) = 3.0;
        gen(1, 1) = 2.0;
        data(0, 0) = 3.0;
        CHECK(error_spectrum(gen, data) == doctest::Approx(2.0));
    }
    SUBCASE("permutation invariant, shape mismatch throws") {
        MatrixXd a = random_matrix(10, 4, 21), b = random_matrix(10, 4, 22);
        CHECK(error_spectrum(shuffle_rows(a, 1), b) == doctest::Approx(error_spectrum(a, b)));
        CHECK_THROWS_AS(error_spectrum(a, MatrixXd::Zero(9, 4)), std::invalid_argument);
    }
}

TEST_CASE("error_aai") {
    SUBCASE("well separated clusters give 0.25") {
        MatrixXd gen(2, 2), data(2, 2);
        gen << 0, 0, 0.1, 0;
        data << 10, 0, 10.1, 0;
        CHECK(error_aai(gen, data) == doctest::Approx(0.25));
    }
    SUBCASE("perfectly interleaved 1-D sets also give 0.25") {
        MatrixXd gen(2, 1), data(2, 1);
        gen << 0, 2;
        data << 1, 3;
        CHECK(error_aai(gen, data) == doctest::Approx(0.25));
    }
    SUBCASE("matches exhaustive scan on random 6-point instances") {
        for (std::uint64_t seed = 1; seed <= 200; ++seed) {
            MatrixXd gen = random_matrix(6, 3, 1000 + seed);
            MatrixXd data = random_matrix(6, 3, 2000 + seed);
            CHECK(error_aai(gen, data) == aai_brute_force(gen, data));
        }
    }
    SUBCASE("duplicate points resolve deterministically") {
        MatrixXd gen = MatrixXd::Zero(3, 2), data = MatrixXd::Zero(3, 2);
        CHECK(error_aai(gen, data) == aai_brute_force(gen, data));
    }
    SUBCASE("rejects tiny or mismatched sets") {
        CHECK_THROWS_AS(error_aai(MatrixXd::Zero(1, 2), MatrixXd::Zero(1, 2)),
                        std::invalid_argument);
        CHECK_THROWS_AS(error_aai(MatrixXd::Zero(3, 2), MatrixXd::Zero(4, 2)),
                        std::invalid_argument);
    }
}

TEST_CASE("error_reconstruction") {
    SUBCASE("zero couplings at large T* leaves mean(xi^2)") {
        RestrictedParams p = init_restricted(4, 3, 0.0, 1);
        MatrixXd data(2, 4);
        data << 0.5, -0.5, 0.25, -1.0, 1.0, 0.0, -0.75, 0.5;
        SimConfig cfg{1.0, 10.0, 200.0};
        const double er = error_reconstruction(p, data, cfg, 200.0, 9);
        const double expected = data.array().square().mean();
        CHECK(er == doctest::Approx(expected).epsilon(1e-6));
    }
    SUBCASE("scalar chain matches independent pencil evaluation") {
        RestrictedParams p;
        p.n_v = 1;
        p.n_h = 1;
        p.g = 1.0;
        p.W = MatrixXd::Constant(1, 1, 0.7);
        p.W_tilde = MatrixXd::Constant(1, 1, -0.4);
        p.A = MatrixXd::Constant(1, 1, 0.2);
        p.b = VectorXd::Constant(1, 0.1);
        p.c = VectorXd::Constant(1, -0.3);
        const double xi = 0.6, t_star = 30.0, tau = 10.0;
        MatrixXd data = MatrixXd::Constant(1, 1, xi);
        SimConfig cfg{1.0, tau, t_star};
        const std::uint64_t seed = 123;

        Rng rng(derive_seed(seed, {stream::recon, 0}));
        const double h0 = rng.normal();
        const double v0 = rng.normal();
        const double decay = std::exp(-t_star / tau);
        const double d_h = (p.W_tilde(0, 0) + p.A(0, 0)) * xi + p.c(0);
        const double chi = std::tanh(h0 * decay + d_h * (1.0 - decay));
        const double d_v = (p.W(0, 0) + p.A(0, 0)) * chi + p.b(0);
        const double phi_v = std::tanh(v0 * decay + d_v * (1.0 - decay));
        const double expected = (xi - phi_v) * (xi - phi_v);

        CHECK(error_reconstruction(p, data, cfg, t_star, seed) ==
              doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("unsupported architectures throw") {
        ModelParams u = init_unrestricted(3, 1.0, 1);
        CHECK_THROWS_AS(error_reconstruction(u, MatrixXd::Zero(2, 3), SimConfig{}, 10.0, 1),
                        std::invalid_argument);
    }
}

TEST_CASE("clamped visible at T*=0 with v0=atanh(xi) returns xi exactly") {
    RestrictedParams p = init_restricted(3, 2, 1.5, 4);
    VectorXd chi(2), xi(3);
    chi << 0.2, -0.5;
    xi << 0.3, -0.8, 0.1;
    SimConfig cfg{1.0, 10.0, 0.0};
    VectorXd v0 = xi.array().atanh();
    VectorXd out = clamped_visible_closed_form(p, chi, v0, cfg);
    CHECK((out - xi).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("evaluate") {
    Dataset data;
    data.samples = random_matrix(64, 6, 31).array().tanh();
    data.source = "unit-test";
    SimConfig cfg{1.0, 10.0, 50.0};

    SUBCASE("restricted report has all four indices and is thread invariant") {
        ModelParams p = init_restricted(6, 5, 1.5, 2);
        MetricReport r1 = evaluate(p, data, cfg, 50.0, 16, 77, 1);
        MetricReport r4 = evaluate(p, data, cfg, 50.0, 16, 77, 4);
        CHECK(r1.e2 >= 0.0);
        CHECK(r1.es >= 0.0);
        CHECK(r1.eaai >= 0.0);
        CHECK(r1.eaai <= 0.25);
        REQUIRE(r1.er.has_value());
        CHECK(*r1.er >= 0.0);
        CHECK(r1.t_star == 50.0);
        CHECK(r1.n_samples == 16);
        CHECK(r1.e2 == r4.e2);
        CHECK(r1.es == r4.es);
        CHECK(r1.eaai == r4.eaai);
        CHECK(*r1.er == *r4.er);
    }
    SUBCASE("unrestricted report omits the reconstruction index") {
        ModelParams p = init_unrestricted(6, 1.5, 2);
        MetricReport r = evaluate(p, data, cfg, 50.0, 16, 77);
        CHECK_FALSE(r.er.has_value());
    }
    SUBCASE("n_eval larger than the dataset is rejected") {
        ModelParams p = init_unrestricted(6, 1.5, 2);
        CHECK_THROWS_AS(evaluate(p, data, cfg, 50.0, 100, 77), std::invalid_argument);
    }
}
