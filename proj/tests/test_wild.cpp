#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "wildrefit/predictors.hpp"
#include "wildrefit/wild.hpp"

using namespace wildrefit;

namespace {

SampleVector random_vector(std::mt19937_64& eng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> unif(lo, hi);
    SampleVector v(n);
    for (auto& x : v) x = unif(eng);
    return v;
}

} // namespace

TEST_CASE("compute_residuals") {
    const SampleVector y{1.0, 2.0};
    CHECK(compute_residuals(y, y) == SampleVector{0.0, 0.0});
    CHECK(compute_residuals(y, {0.0, 1.0}) == SampleVector{1.0, 1.0});

    // An interpolating pilot leaves nothing to resample.
    const SampleVector interp = tikhonov_fit({3.0, -1.0, 4.0}, TikhonovParams{0.0});
    const SampleVector r = compute_residuals({3.0, -1.0, 4.0}, interp);
    for (double v : r) CHECK(v == 0.0);

    CHECK_THROWS_AS(compute_residuals({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("draw_signs determinism and support") {
    const SignVector a = draw_signs(10000, 42);
    const SignVector b = draw_signs(10000, 42);
    CHECK(a == b);
    for (auto s : a) CHECK((s == 1 || s == -1));

    const SignVector c = draw_signs(10000, 43);
    CHECK(a != c);

    // Prefix property: the first n entries do not depend on the total length.
    const SignVector head = draw_signs(100, 42);
    CHECK(std::equal(head.begin(), head.end(), a.begin()));
}

TEST_CASE("draw_signs sample mean concentrates") {
    int ok = 0;
    const std::size_t n = 100000;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const SignVector s = draw_signs(n, seed);
        double mean = 0.0;
        for (auto v : s) mean += v;
        mean /= static_cast<double>(n);
        if (std::abs(mean) <= 3.0 / std::sqrt(static_cast<double>(n))) ++ok;
    }
    CHECK(ok >= 99);
}

TEST_CASE("wild_responses") {
    SUBCASE("vanishing noise scale returns the base fit") {
        const SampleVector fhat{1.0, 2.0, 3.0};
        const SampleVector w{5.0, -5.0, 5.0};
        const SampleVector out = wild_responses(fhat, w, draw_signs(3, 1), 1e-300);
        for (std::size_t i = 0; i < fhat.size(); ++i)
            CHECK(out[i] == doctest::Approx(fhat[i]).epsilon(1e-12));
    }
    SUBCASE("all-plus signs at rho=1 with base-fit pilot reproduce y") {
        const SampleVector y{1.0, 2.25, 3.0};
        const SampleVector fhat{0.5, 0.25, -1.5};
        const SampleVector w = compute_residuals(y, fhat);
        const SignVector plus{1, 1, 1};
        CHECK(wild_responses(fhat, w, plus, 1.0) == y);
    }
    SUBCASE("arithmetic") {
        const SampleVector out = wild_responses({0.0, 0.0}, {1.0, 2.0}, {1, -1}, 2.0);
        CHECK(out == SampleVector{2.0, -4.0});
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(wild_responses({1.0}, {1.0, 2.0}, {1, 1}, 1.0),
                        std::invalid_argument);
        CHECK_THROWS_AS(wild_responses({1.0}, {1.0}, {1}, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(wild_responses({1.0}, {1.0}, {1}, -1.0), std::invalid_argument);
    }
}

TEST_CASE("wild_optimism basics") {
    CHECK(wild_optimism({1, -1}, {1.0, 1.0}, {5.0, 5.0}, {5.0, 5.0}) == 0.0);
    CHECK(wild_optimism({1, -1}, {1.0, 1.0}, {2.0, 2.0}, {0.0, 0.0}) == 0.0);
    CHECK(wild_optimism({1, 1}, {1.0, 2.0}, {1.0, 1.0}, {0.0, 0.0}) ==
          doctest::Approx(1.5).epsilon(1e-14));
    CHECK_THROWS_AS(wild_optimism({1}, {1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}),
                    std::invalid_argument);
}

TEST_CASE("replicate invariants: reconstruction and recomputability") {
    std::mt19937_64 eng(11);
    const PredictorMethod m = tikhonov_method(0.05);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 16;
        const SampleVector y = random_vector(eng, n, -2.0, 2.0);
        const SampleVector fhat = apply_method(m, y);
        WildConfig cfg;
        cfg.rho = 0.5 + 0.1 * trial;
        cfg.seed = 1000 + trial;
        const WildReplicate rep = run_wild_replicate(m, y, fhat, cfg);

        for (std::size_t i = 0; i < n; ++i) {
            const double lhs = rep.wild_responses[i] - fhat[i];
            const double rhs = cfg.rho * rep.signs[i] * rep.residuals[i];
            CHECK(std::abs(lhs - rhs) <= 1e-12);
        }
        SampleVector disp(n);
        for (std::size_t i = 0; i < n; ++i) disp[i] = rep.wild_fit[i] - fhat[i];
        CHECK(std::abs(rep.wild_radius - emp_norm(disp)) <= 1e-12);
        CHECK(std::abs(rep.wild_optimism -
                       wild_optimism(rep.signs, rep.residuals, rep.wild_fit, fhat)) <= 1e-12);
    }
}

TEST_CASE("interpolating method closed forms") {
    std::mt19937_64 eng(5);
    const PredictorMethod id = identity_method();
    for (int trial = 0; trial < 100; ++trial) {
        const SampleVector y = random_vector(eng, 12, -3.0, 3.0);
        const SampleVector pilot(12, 0.0); // explicit pilot keeps residuals nonzero
        const SampleVector fhat = apply_method(id, y);
        WildConfig cfg;
        cfg.rho = 0.3 + 0.02 * trial;
        cfg.seed = trial;
        cfg.pilot = pilot;
        const WildReplicate rep = run_wild_replicate(id, y, fhat, cfg);
        const double wn = emp_norm(compute_residuals(y, pilot));
        CHECK(rep.wild_radius == doctest::Approx(cfg.rho * wn).epsilon(1e-10));
        CHECK(rep.wild_optimism == doctest::Approx(cfg.rho * wn * wn).epsilon(1e-10));
    }
}

TEST_CASE("constant-projection closed forms") {
    std::mt19937_64 eng(6);
    const PredictorMethod cm = constant_method();
    const std::size_t n = 9;
    for (int trial = 0; trial < 50; ++trial) {
        const SampleVector y = random_vector(eng, n, -1.0, 4.0);
        const SampleVector fhat = apply_method(cm, y);
        WildConfig cfg;
        cfg.rho = 0.75;
        cfg.seed = 90 + trial;
        const WildReplicate rep = run_wild_replicate(cm, y, fhat, cfg);

        double mean_sw = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean_sw += rep.signs[i] * rep.residuals[i];
        mean_sw /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(rep.wild_fit[i] ==
                  doctest::Approx(fhat[i] + cfg.rho * mean_sw).epsilon(1e-12));
        CHECK(rep.wild_optimism ==
              doctest::Approx(cfg.rho * mean_sw * mean_sw).epsilon(1e-12));
    }
}

TEST_CASE("replicates are bit-identical for deterministic methods") {
    const PredictorMethod m = tv_method(0.1);
    std::mt19937_64 eng(13);
    const SampleVector y = random_vector(eng, 25, -1.0, 1.0);
    const SampleVector fhat = apply_method(m, y);
    WildConfig cfg;
    cfg.rho = 1.3;
    cfg.seed = 77;
    const WildReplicate a = run_wild_replicate(m, y, fhat, cfg);
    const WildReplicate b = run_wild_replicate(m, y, fhat, cfg);
    CHECK(a.residuals == b.residuals);
    CHECK(a.signs == b.signs);
    CHECK(a.wild_responses == b.wild_responses);
    CHECK(a.wild_fit == b.wild_fit);
    CHECK(a.wild_radius == b.wild_radius);
    CHECK(a.wild_optimism == b.wild_optimism);
}

TEST_CASE("degenerate all-zero residuals are legal") {
    const PredictorMethod id = identity_method();
    const SampleVector y{1.0, 2.0, 3.0};
    const SampleVector fhat = apply_method(id, y); // equals y, so residuals vanish
    WildConfig cfg;
    cfg.rho = 2.0;
    cfg.seed = 3;
    const WildReplicate rep = run_wild_replicate(id, y, fhat, cfg);
    CHECK(rep.wild_radius == 0.0);
    CHECK(rep.wild_optimism == 0.0);
    CHECK(rep.wild_fit == fhat);
}

TEST_CASE("monotone radius along a rho grid for projection methods") {
    std::mt19937_64 eng(21);
    const std::size_t n = 8;
    BoxSpec box;
    box.lo = SampleVector(n, -0.6);
    box.hi = SampleVector(n, 0.9);
    const std::vector<PredictorMethod> methods{projection_predictor(box), constant_method(),
                                               projection_predictor(MonotoneConeSpec{})};
    for (const auto& m : methods) {
        const SampleVector y = random_vector(eng, n, -2.0, 2.0);
        const SampleVector fhat = apply_method(m, y);
        double prev = -1.0;
        for (int k = 0; k < 20; ++k) {
            WildConfig cfg;
            cfg.rho = 0.05 * std::pow(1.35, k);
            cfg.seed = 99;
            const WildReplicate rep = run_wild_replicate(m, y, fhat, cfg);
            CHECK(rep.wild_radius >= prev - 1e-8);
            prev = rep.wild_radius;
        }
    }
}

TEST_CASE("optimism of constrained least squares is nonnegative") {
    std::mt19937_64 eng(31);
    const std::size_t n = 7;
    BoxSpec box;
    box.lo = SampleVector(n, -1.0);
    box.hi = SampleVector(n, 1.0);
    const PredictorMethod m = projection_predictor(box);
    for (int trial = 0; trial < 200; ++trial) {
        const SampleVector y = random_vector(eng, n, -2.0, 2.0);
        const SampleVector fhat = apply_method(m, y);
        WildConfig cfg;
        cfg.rho = 0.2 + 0.05 * (trial % 40);
        cfg.seed = trial;
        const WildReplicate rep = run_wild_replicate(m, y, fhat, cfg);
        CHECK(rep.wild_optimism >= -1e-10);
    }
}

TEST_CASE("replicate optimism matches the brute-force ball supremum") {
    // Small box-constrained projections, checked against a grid search over
    // the box intersected with the replicate's own ball.
    std::mt19937_64 eng(41);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    BoxSpec box;
    box.lo = SampleVector(3, -1.0);
    box.hi = SampleVector(3, 1.0);
    const PredictorMethod m = projection_predictor(box);
    int checked = 0;
    for (int trial = 0; trial < 30 && checked < 10; ++trial) {
        SampleVector y(3);
        for (auto& v : y) v = unif(eng);
        const SampleVector fhat = apply_method(m, y);
        WildConfig cfg;
        cfg.rho = 1.0;
        cfg.seed = 500 + trial;
        const WildReplicate rep = run_wild_replicate(m, y, fhat, cfg);
        if (rep.wild_radius < 0.05) continue; // need a ball big enough to search
        ++checked;
        const std::array<double, 3> eps{double(rep.signs[0]), double(rep.signs[1]),
                                        double(rep.signs[2])};
        const std::array<double, 3> w{rep.residuals[0], rep.residuals[1], rep.residuals[2]};
        const std::array<double, 3> fh{fhat[0], fhat[1], fhat[2]};
        const double sup =
            oracles::brute_ball_sup3(eps, w, fh, -1.0, 1.0, rep.wild_radius, 0.01);
        CHECK(std::abs(rep.wild_optimism - sup) <= 2e-2);
    }
    CHECK(checked == 10);
}
