#include "helpers.hpp"

#include <doctest.h>

using namespace parsumi;
using namespace testgen;

TEST_CASE("project_observed reads Ω in column-major order") {
    Matrix m(2, 2);
    m << 1, 2, 3, 4;
    const SupportSet omega(2, 2, {{1, 1}, {0, 0}});
    const Vector v = project_observed(m, omega);
    REQUIRE(v.size() == 2);
    CHECK(v[0] == 1.0);
    CHECK(v[1] == 4.0);

    CHECK(project_observed(Matrix::Zero(2, 2), omega).isZero(0.0));
    CHECK_THROWS_AS(project_observed(Matrix::Zero(3, 2), omega), DimensionError);
}

TEST_CASE("canonical order sorts by column then row") {
    const SupportSet omega(3, 2, {{2, 1}, {1, 0}, {0, 1}, {0, 0}});
    const std::vector<Cell> expect = {{0, 0}, {1, 0}, {0, 1}, {2, 1}};
    CHECK(omega.cells() == expect);
    CHECK(omega.position(2, 1) == 3);
    CHECK(omega.position(1, 1) == -1);
    CHECK(omega.column_count(0) == 2);
    CHECK(omega.column_begin(1) == 2);
}

TEST_CASE("support rejects duplicates and out-of-range cells") {
    CHECK_THROWS_AS(SupportSet(2, 2, {{0, 0}, {0, 0}}), ParameterError);
    CHECK_THROWS_AS(SupportSet(2, 2, {{2, 0}}), DimensionError);
    CHECK_THROWS_AS(SupportSet(2, 2, {{0, -1}}), DimensionError);
}

TEST_CASE("embed_observed places values and zeros elsewhere") {
    const SupportSet omega(2, 2, {{1, 0}});
    Vector v(1);
    v << 5;
    Matrix expect(2, 2);
    expect << 0, 0, 5, 0;
    CHECK(embed_observed(v, omega) == expect);

    const SupportSet empty(3, 2, {});
    CHECK(embed_observed(Vector(0), empty).isZero(0.0));
    CHECK_THROWS_AS(embed_observed(Vector::Zero(2), omega), DimensionError);
}

TEST_CASE("projection and embedding are adjoint") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const Index m = int_in(rng, 1, 8), n = int_in(rng, 1, 8);
        const SupportSet omega = random_support(rng, m, n, rng.uniform01());
        const Vector v = uniform_vector(rng, omega.size());
        CHECK(project_observed(embed_observed(v, omega), omega) == v);
        if (trial < 50) {
            const Matrix M = uniform_matrix(rng, m, n);
            const double lhs = project_observed(M, omega).dot(v);
            const double rhs = (M.array() * embed_observed(v, omega).array()).sum();
            CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
        }
    }
}

TEST_CASE("ObservedMatrix weights and validation") {
    const ObservedMatrix obs(2, 3, {{0, 0, 1.0}, {1, 2, -2.0}}, 1e-4);
    CHECK(obs.weight(0, 0) == 1.0);
    CHECK(obs.weight(1, 1) == doctest::Approx(1e-2).epsilon(1e-14));
    const Matrix h = obs.weights();
    for (Index j = 0; j < 3; ++j)
        for (Index i = 0; i < 2; ++i) CHECK(h(i, j) == obs.weight(i, j));
    CHECK(obs.dense()(1, 2) == -2.0);

    CHECK_THROWS_AS(ObservedMatrix(2, 2, {{0, 0, 1.0}}, 0.0), ParameterError);
    CHECK_THROWS_AS(ObservedMatrix(2, 2, {{0, 0, 1.0}}, 1.0), ParameterError);
    CHECK_THROWS_AS(ObservedMatrix(2, 2, {{0, 0, 1.0}, {0, 0, 2.0}}), ParameterError);
    CHECK_THROWS_AS(ObservedMatrix(2, 2, {{0, 0, std::nan("")}}), ParameterError);
}

TEST_CASE("SubspaceBasis orthonormalization") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const Index m = int_in(rng, 2, 12);
        const Index r = int_in(rng, 1, m);
        const Matrix a = uniform_matrix(rng, m, r);
        const SubspaceBasis n = SubspaceBasis::orthonormalize(a);
        CHECK(n.orthonormality_error() <= 1e-10);
        // Same span: projecting a onto N loses nothing.
        CHECK((a - n.matrix() * (n.matrix().transpose() * a)).norm() <= 1e-10 * a.norm());
        // Nonnegative R diagonal makes the result unique.
        CHECK((n.matrix().transpose() * a).diagonal().minCoeff() >= 0.0);
    }
    CHECK_THROWS_AS(SubspaceBasis(Matrix::Ones(3, 1)), ParameterError);
    CHECK_THROWS_AS(SubspaceBasis::orthonormalize(Matrix::Ones(2, 3)), DimensionError);
}

TEST_CASE("SparseCorruption enforces its bounds") {
    Vector v(3);
    v << 0, 3, 4;
    const SparseCorruption e(v, 2, 5.0);
    CHECK(e.cardinality() == 2);
    CHECK(e.norm() == doctest::Approx(5.0));
    CHECK_THROWS_AS(SparseCorruption(v, 1, 10.0), ParameterError);
    CHECK_THROWS_AS(SparseCorruption(v, 2, 4.9), ParameterError);
    CHECK_NOTHROW(SparseCorruption(v, 2, 5.0 - 1e-13));
}

TEST_CASE("merit_f examples") {
    Rng rng(3);
    const ObservedMatrix obs = random_observed(rng, 4, 5, 0.5);
    const Matrix w = obs.dense();
    const Matrix zero = Matrix::Zero(4, 5);
    CHECK(merit_f(w, zero, obs) == 0.0);

    const ObservedMatrix one(1, 1, {{0, 0, 2.0}});
    CHECK(merit_f(Matrix::Zero(1, 1), Matrix::Zero(1, 1), one) == 2.0);
}

TEST_CASE("merit_f: the masked form equals the weighted form") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const Index m = int_in(rng, 1, 7), n = int_in(rng, 1, 7);
        const double eps = std::pow(10.0, -rng.uniform(1.0, 10.0));
        const ObservedMatrix obs = random_observed(rng, m, n, rng.uniform01(), eps);
        const Matrix w = uniform_matrix(rng, m, n);
        const SparseCorruption e = random_corruption(rng, obs.support(), 0.3);
        // ½‖H∘(W + E − Ŵ)‖² with H materialized entry by entry.
        double weighted = 0.0;
        const Matrix ed = e.dense(obs.support());
        const Matrix wh = obs.dense();
        for (Index j = 0; j < n; ++j)
            for (Index i = 0; i < m; ++i) {
                const double h = obs.support().contains(i, j) ? 1.0 : std::sqrt(eps);
                const double res = h * (w(i, j) + ed(i, j) - wh(i, j));
                weighted += 0.5 * res * res;
            }
        const double masked = merit_f(w, e, obs);
        CHECK(masked >= 0.0);
        CHECK(std::abs(masked - weighted) <= 1e-12 * std::max(weighted, 1e-300));
    }
}

TEST_CASE("serialization order is reproducible") {
    Rng rng(23);
    const ObservedMatrix obs = random_observed(rng, 6, 4, 0.5);
    std::vector<Observation> shuffled;
    for (Index k = obs.support().size() - 1; k >= 0; --k)
        shuffled.push_back({obs.support()[k].row, obs.support()[k].col, obs.values()[k]});
    const ObservedMatrix again(6, 4, shuffled);
    CHECK(again.support() == obs.support());
    CHECK(again.values() == obs.values());
}

TEST_CASE("median") {
    CHECK(median({}) == 0.0);
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
}

TEST_CASE("SolverConfig defaults") {
    std::vector<Observation> o;
    for (Index j = 0; j < 10; ++j)
        for (Index i = 0; i < 4; ++i) o.push_back({i, j, (i + j) % 2 == 0 ? 1.0 : -3.0});
    const ObservedMatrix obs(4, 10, o);
    const SolverConfig cfg = SolverConfig::defaults_for(obs, 2);
    CHECK(cfg.beta1 == doctest::Approx(1e-3 / std::sqrt(10.0)));
    CHECK(cfg.beta2 == cfg.beta1);
    CHECK(cfg.max_corruptions == 6);   // ceil(0.15 * 40)
    CHECK(cfg.corruption_norm_bound == doctest::Approx(20.0 * std::sqrt(6.0) * 2.0));
    CHECK(cfg.lm_lambda_init == 1e-6);
    CHECK(cfg.lm_rho == 10.0);
    CHECK(cfg.epsilon == 1e-10);
    CHECK(cfg.outer_tol == 1e-6);
    CHECK_NOTHROW(cfg.validate(obs));

    SolverConfig bad = cfg;
    bad.rank = 5;
    CHECK_THROWS_AS(bad.validate(obs), ParameterError);
    bad = cfg;
    bad.lm_rho = 1.0;
    CHECK_THROWS_AS(bad.validate(obs), ParameterError);
}
