#include <cmath>

#include "catch_amalgamated.hpp"
#include "hmc/model.hpp"
#include "hmc/targets.hpp"

using namespace hmc;
using Catch::Approx;

namespace {

Target quadratic_1d() {
    return Target(1, {[](const Vector& q) { return 0.5 * q[0] * q[0]; },
                      [](const Vector& q) -> Vector { return q; }});
}

Vector v1(double x) { return Vector::Constant(1, x); }

}  // namespace

TEST_CASE("hamiltonian adds potential and kinetic energy") {
    const Target t = quadratic_1d();
    const KineticSpec k = KineticSpec::unit(1);
    CHECK(hamiltonian({v1(0.0), v1(1.0)}, t, k) == 0.5);
    CHECK(hamiltonian({v1(0.0), v1(0.0)}, t, k) == 0.0);
}

TEST_CASE("hamiltonian of the correlated Gaussian start state") {
    const double rho = 0.95, q1 = -1.50, q2 = -1.55;
    const double expected = (q1 * q1 - 2 * rho * q1 * q2 + q2 * q2) / (2 * (1 - rho * rho)) + 1.0;
    Vector q(2), p(2);
    q << q1, q2;
    p << -1, 1;
    const double h = hamiltonian({q, p}, make_figure_target("gauss2d_95"), KineticSpec::unit(2));
    CHECK(h == Approx(expected).epsilon(1e-12));
}

TEST_CASE("hamiltonian rejects mismatched dimensions and infinite potential") {
    const Target t = quadratic_1d();
    CHECK_THROWS_AS(hamiltonian({Vector::Zero(2), Vector::Zero(2)}, t, KineticSpec::unit(2)), std::invalid_argument);
    CHECK_THROWS_AS(hamiltonian({v1(0), v1(0)}, t, KineticSpec::unit(2)), std::invalid_argument);
    Box box{v1(-1.0), v1(1.0)};
    const Target boxed = t.with_constraints(box);
    CHECK_THROWS_AS(hamiltonian({v1(2.0), v1(0.0)}, boxed, KineticSpec::unit(1)), std::domain_error);
    CHECK(boxed.potential(v1(2.0)) == kInfinity);
}

TEST_CASE("phase state requires equal dimensions") {
    CHECK_THROWS_AS(PhaseState(Vector::Zero(2), Vector::Zero(3)), std::invalid_argument);
    PhaseState s(v1(1.0), v1(std::nan("")));
    CHECK_FALSE(s.finite());
}

TEST_CASE("hamiltonian is unchanged by negating momentum") {
    Random rng(3);
    const Target t = make_figure_target("gauss2d_98");
    const KineticSpec k(Vector::Constant(2, 2.5));
    for (int i = 0; i < 20; ++i) {
        const Vector q = rng.normal(2), p = rng.normal(2);
        CHECK(hamiltonian({q, p}, t, k) == hamiltonian({q, -p}, t, k));
    }
}

TEST_CASE("kinetic energy is non-negative and zero only at rest") {
    const KineticSpec k(Vector::Constant(3, 0.7));
    CHECK(k.energy(Vector::Zero(3)) == 0.0);
    Random rng(9);
    for (int i = 0; i < 50; ++i) CHECK(k.energy(rng.normal(3)) > 0.0);
}

TEST_CASE("momentum draws have variance equal to the masses") {
    Random rng(42);
    SECTION("unit masses in three dimensions") {
        const KineticSpec k = KineticSpec::unit(3);
        const int n = 100000;
        Vector sum = Vector::Zero(3), sq = Vector::Zero(3);
        for (int i = 0; i < n; ++i) {
            const Vector p = sample_momentum(k, rng);
            sum += p;
            sq += p.cwiseAbs2();
        }
        const Vector mean = sum / n;
        const Vector var = sq / n - mean.cwiseAbs2();
        for (int j = 0; j < 3; ++j) {
            CHECK(std::abs(mean[j]) < 0.02);
            CHECK(std::abs(var[j] - 1.0) < 0.05);
        }
    }
    SECTION("mass four") {
        const KineticSpec k(v1(4.0));
        const int n = 100000;
        double sum = 0, sq = 0;
        for (int i = 0; i < n; ++i) {
            const double p = sample_momentum(k, rng)[0];
            sum += p;
            sq += p * p;
        }
        const double var = sq / n - (sum / n) * (sum / n);
        CHECK(std::abs(var - 4.0) < 0.2);
        // Five standard errors of the mean: sqrt(4 / n) * 5.
        CHECK(std::abs(sum / n) < 5 * std::sqrt(4.0 / n));
    }
}

TEST_CASE("kinetic spec rejects bad masses") {
    CHECK_THROWS_AS(KineticSpec(Vector(0)), std::invalid_argument);
    CHECK_THROWS_AS(KineticSpec(v1(0.0)), std::invalid_argument);
    CHECK_THROWS_AS(KineticSpec(v1(-1.0)), std::invalid_argument);
}

TEST_CASE("check_gradient compares against central differences") {
    CHECK(check_gradient(quadratic_1d(), v1(1.3), 1e-5) < 1e-8);

    const Target flat(2, {[](const Vector&) { return 3.0; }, [](const Vector& q) -> Vector { return Vector::Zero(q.size()); }});
    CHECK(check_gradient(flat, Vector::Ones(2), 1e-4) == 0.0);

    Random rng(5);
    const Target g100 = make_figure_target("gauss100d");
    const Vector q = gauss100d_sds().cwiseProduct(rng.normal(100));
    CHECK(check_gradient(g100, q, 1e-5) < 1e-6);

    CHECK_THROWS_AS(check_gradient(quadratic_1d(), v1(0.0), 0.0), std::invalid_argument);
    const Target boxed = quadratic_1d().with_constraints({v1(0.0), v1(1.0)});
    CHECK_THROWS_AS(check_gradient(boxed, v1(1e-7), 1e-5), std::domain_error);
}

TEST_CASE("canonical density matches minus H over T") {
    const auto c = CanonicalDensity::unit_mass(quadratic_1d());
    CHECK(c.log_density({v1(1.0), v1(2.0)}) == Approx(-2.5));
    CHECK_THROWS_AS(CanonicalDensity(quadratic_1d(), KineticSpec::unit(1), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(CanonicalDensity(quadratic_1d(), KineticSpec::unit(2)), std::invalid_argument);
}

TEST_CASE("box constraints must be well formed") {
    CHECK_THROWS_AS(quadratic_1d().with_constraints({v1(1.0), v1(1.0)}), std::invalid_argument);
    CHECK_THROWS_AS(quadratic_1d().with_constraints({v1(2.0), v1(1.0)}), std::invalid_argument);
    CHECK_NOTHROW(quadratic_1d().with_constraints(Box::unbounded(1)));
}

TEST_CASE("split parts sum to the full potential") {
    const Target full = make_figure_target("gauss2d_98");
    const Target same = apply_linear_transform(full, Matrix::Identity(2, 2));
    PotentialTerm a{[&](const Vector& q) { return 0.25 * full.potential(q); },
                    [&](const Vector& q) -> Vector { return 0.25 * full.gradient(q); }};
    PotentialTerm b{[&](const Vector& q) { return 0.75 * full.potential(q); },
                    [&](const Vector& q) -> Vector { return 0.75 * full.gradient(q); }};
    const Target split = full.with_split({a, b});
    Random rng(8);
    for (int i = 0; i < 10; ++i) {
        const Vector q = rng.normal(2);
        double sum = 0;
        for (const auto& part : split.split_parts()) sum += part.value(q);
        CHECK(sum == Approx(split.potential(q)).epsilon(1e-10));
        CHECK(same.potential(q) == Approx(full.potential(q)).epsilon(1e-12));
    }
}
