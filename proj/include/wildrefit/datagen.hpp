#pragma once

#include <array>
#include <cstdint>
#include <variant>

#include "wildrefit/core.hpp"
#include "wildrefit/predictors.hpp"

namespace wildrefit {

/// Piecewise-constant test signal on the grid x_i = i/n (i = 1..n), with two
/// breakpoints and three levels, optionally mollified by a discrete Gaussian
/// kernel of standard deviation gamma * n grid points (reflective boundary).
/// gamma = 0 reproduces the un-mollified signal exactly.
struct SignalSpec {
    std::size_t n = 301;
    double gamma = 0.0;
    std::array<double, 3> levels{0.0, 1.0, 0.5};
    std::array<double, 2> breakpoints{1.0 / 3.0, 2.0 / 3.0};
};

SampleVector make_signal(const SignalSpec& spec);

/// i.i.d. centered Gaussian noise with standard deviation sigma.
struct GaussianNoise {
    double sigma = 1.0;
};

/// scale * T where T is Student-t with dof degrees of freedom; requires
/// dof > 2 so the variance scale^2 * dof / (dof - 2) is finite.
struct StudentTNoise {
    double dof = 6.0;
    double scale = 1.0;
};

/// Independent Gaussian noise whose standard deviation is sigma1 for design
/// points x_i = i/n inside [band[0], band[1]] and sigma0 outside.
struct HeteroBandNoise {
    double sigma0 = 1.0;
    double sigma1 = 2.0;
    std::array<double, 2> band{0.4, 0.6};
};

struct NoiseSpec {
    std::variant<GaussianNoise, StudentTNoise, HeteroBandNoise> variant = GaussianNoise{};
    std::uint64_t seed = 0;
};

/// Draws n noise values. All transforms are implemented directly on top of a
/// fully specified generator, so output is identical across platforms and
/// runs for a given spec. Throws std::invalid_argument for dof <= 2,
/// non-positive scales, or an empty/reversed band.
SampleVector draw_noise(const NoiseSpec& spec, std::size_t n);

/// A synthetic multi-frame structure recovery scene: a rank-`rank` shape
/// matrix, per-frame orthographic cameras, and noisy observations
/// observations = cameras * shape_star + noise.
struct NrsfmScene {
    std::size_t frames = 0;
    std::size_t points = 0;
    int rank = 0;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd shape_star;   // 3*frames x points, rank <= `rank`
    CameraMatrix cameras;         // frames blocks of 2x3
    Eigen::MatrixXd observations; // 2*frames x points
};

/// shape_star is a product of (3m x K) and (K x p) standard-Gaussian factors;
/// each camera block is the first two rows of an independent uniformly random
/// 3-D rotation; observation noise is i.i.d. Gaussian with deviation sigma.
NrsfmScene make_nrsfm_scene(std::size_t frames, std::size_t points, int rank,
                            double sigma, std::uint64_t seed);

} // namespace wildrefit
