#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "wildrefit/core.hpp"

using namespace wildrefit;

TEST_CASE("emp_norm basics") {
    CHECK(emp_norm({0.0, 0.0, 0.0}) == 0.0);
    CHECK(emp_norm({3.0, 4.0}) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-14));

    const SampleVector a{1.0, 2.0, 3.0};
    SampleVector scaled(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) scaled[i] = -2.0 * a[i];
    CHECK(emp_norm(scaled) == doctest::Approx(2.0 * emp_norm(a)).epsilon(1e-14));

    CHECK_THROWS_AS(emp_norm({}), std::invalid_argument);
}

TEST_CASE("emp_inner basics") {
    CHECK(emp_inner({1.0, -1.0}, {1.0, 1.0}) == 0.0);
    CHECK(emp_inner({3.0, 4.0}, {3.0, 4.0}) == doctest::Approx(12.5).epsilon(1e-14));
    CHECK(emp_inner({1.0, 2.0, 3.0}, {1.0, 0.0, -1.0}) ==
          doctest::Approx(-2.0 / 3.0).epsilon(1e-14));
    CHECK(emp_inner({1.0, 2.0}, {3.0, 4.0}) == emp_inner({3.0, 4.0}, {1.0, 2.0}));

    CHECK_THROWS_AS(emp_inner({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(emp_inner({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("EmpiricalGeometry matches the free functions and itself") {
    const EmpiricalGeometry geo{3};
    const SampleVector a{1.0, -2.0, 0.5};
    CHECK(geo.norm(a) == emp_norm(a));
    CHECK(geo.inner(a, a) == doctest::Approx(geo.norm(a) * geo.norm(a)).epsilon(1e-14));
}

TEST_CASE("Cauchy-Schwarz and parallelogram identity under fuzzing") {
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> unif(-5.0, 5.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + eng() % 32;
        SampleVector a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = unif(eng);
            b[i] = unif(eng);
        }
        CHECK(std::abs(emp_inner(a, b)) <= emp_norm(a) * emp_norm(b) + 1e-12);

        SampleVector sum(n), diff(n);
        for (std::size_t i = 0; i < n; ++i) {
            sum[i] = a[i] + b[i];
            diff[i] = a[i] - b[i];
        }
        const double lhs = emp_norm(sum) * emp_norm(sum) + emp_norm(diff) * emp_norm(diff);
        const double rhs =
            2.0 * (emp_norm(a) * emp_norm(a) + emp_norm(b) * emp_norm(b));
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
    }
}

TEST_CASE("apply_method enforces the black-box contract") {
    PredictorMethod doubler;
    doubler.name = "doubler";
    doubler.fit = [](const SampleVector& u) {
        SampleVector out(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) out[i] = 2.0 * u[i];
        return out;
    };

    const SampleVector u{1.0, -1.0, 2.5};
    const SampleVector once = apply_method(doubler, u);
    const SampleVector twice = apply_method(doubler, u);
    CHECK(once == twice); // deterministic: identical arrays

    SUBCASE("fit exceptions are wrapped with the method name") {
        PredictorMethod bad;
        bad.name = "exploder";
        bad.fit = [](const SampleVector&) -> SampleVector {
            throw std::runtime_error("solver fell over");
        };
        try {
            apply_method(bad, u);
            FAIL("expected MethodError");
        } catch (const MethodError& e) {
            CHECK(e.method_name() == "exploder");
            CHECK(std::string(e.what()).find("solver fell over") != std::string::npos);
        }
    }

    SUBCASE("length-changing fits are rejected") {
        PredictorMethod shrink;
        shrink.name = "shrink";
        shrink.fit = [](const SampleVector& in) {
            return SampleVector(in.begin(), in.begin() + 1);
        };
        CHECK_THROWS_AS(apply_method(shrink, u), MethodError);
    }

    SUBCASE("non-finite outputs are rejected") {
        PredictorMethod nan_out;
        nan_out.name = "nan_out";
        nan_out.fit = [](const SampleVector& in) {
            SampleVector out(in.size(), std::nan(""));
            return out;
        };
        CHECK_THROWS_AS(apply_method(nan_out, u), MethodError);
    }

    SUBCASE("empty and non-finite inputs are rejected") {
        CHECK_THROWS_AS(apply_method(doubler, SampleVector{}), MethodError);
        CHECK_THROWS_AS(apply_method(doubler, SampleVector{1.0, std::nan("")}), MethodError);
    }
}

TEST_CASE("all_finite") {
    CHECK(all_finite({0.0, -1.0, 5e300}));
    CHECK_FALSE(all_finite({1.0, std::numeric_limits<double>::infinity()}));
    CHECK_FALSE(all_finite({std::nan("")}));
}
