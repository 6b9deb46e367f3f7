#pragma once

#include <Eigen/Dense>
#include <optional>
#include <variant>
#include <vector>

#include "wildrefit/core.hpp"

namespace wildrefit {

// ---------------------------------------------------------------------------
// 1-D smoothing estimators
// ---------------------------------------------------------------------------

/// Squared-difference (ridge-on-increments) smoother parameters. The fit
/// minimizes (1/n) sum (y_i - f_i)^2 + lambda * sum (f_{i+1} - f_i)^2.
struct TikhonovParams {
    double lambda = 0.0;
};

/// Total-variation (fused) smoother parameters. The fit minimizes
/// (1/n) sum (y_i - f_i)^2 + lambda * sum |f_{i+1} - f_i|.
struct TVParams {
    double lambda = 0.0;
};

/// Exact solution of the increment-penalized least-squares problem via the
/// tridiagonal normal equations (Thomas algorithm, O(n)). Requires n >= 2,
/// lambda >= 0 and finite.
SampleVector tikhonov_fit(const SampleVector& y, const TikhonovParams& params);

/// Exact solution of the fused least-squares problem by a direct O(n)
/// taut-string pass. Output is piecewise constant; lambda = 0 returns y.
SampleVector tv_fit(const SampleVector& y, const TVParams& params);

PredictorMethod tikhonov_method(double lambda);
PredictorMethod tv_method(double lambda);

// ---------------------------------------------------------------------------
// Projection estimators (least squares over a closed convex set)
// ---------------------------------------------------------------------------

/// Per-coordinate box [lo_i, hi_i]; bounds may be +-infinity.
struct BoxSpec {
    SampleVector lo;
    SampleVector hi;
};

/// Constant vectors c * 1 with c restricted to [lo, hi] (either side may be
/// infinite; both infinite projects onto all constant vectors).
struct ConstantBandSpec {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

/// Coordinatewise non-decreasing vectors.
struct MonotoneConeSpec {};

using SetSpec = std::variant<BoxSpec, ConstantBandSpec, MonotoneConeSpec>;

/// Euclidean projection onto the given convex set, wrapped as a method.
/// Box projection clamps coordinatewise; the constant band clamps the mean;
/// the monotone cone uses pool-adjacent-violators.
PredictorMethod projection_predictor(const SetSpec& spec);

/// The method that returns its input unchanged (projection onto everything).
/// Euclidean projection onto the smoothness ball {f : ||Df||_2 <= radius}
/// where D is the first-difference operator. Interior points are returned
/// unchanged; otherwise the dual parameter of the equivalent increment
/// penalty is bisected until the constraint is active.
SampleVector smoothness_ball_fit(const SampleVector& y, double radius);

/// Euclidean projection onto the total-variation ball
/// {f : sum_i |f_{i+1} - f_i| <= radius}, by bisecting the fused penalty
/// level until the constraint is active.
SampleVector tv_ball_fit(const SampleVector& y, double radius);

PredictorMethod smoothness_ball_method(double radius);
PredictorMethod tv_ball_method(double radius);

PredictorMethod identity_method();

/// Projection onto all constant vectors: every output entry is mean(u).
PredictorMethod constant_method();

/// One firm-non-expansiveness probe: with g = m.fit(base + u) - m.fit(base),
/// checks ||g||_n^2 <= <u, g>_n + 1e-9.
struct FirmCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

FirmCheck check_firm_nonexpansive(const PredictorMethod& m, const SampleVector& base,
                                  const SampleVector& u);

// ---------------------------------------------------------------------------
// Low-rank estimation under orthographic cameras
// ---------------------------------------------------------------------------

/// Block-diagonal orthographic camera stack: frame i contributes a 2x3 block
/// R_i with orthonormal rows, mapping the (3 x p) slice of a shape matrix to
/// the (2 x p) slice of an observation matrix.
class CameraMatrix {
public:
    CameraMatrix() = default;

    /// Validates every block: R_i * R_i^T must equal I_2 to within 1e-10.
    explicit CameraMatrix(std::vector<Eigen::Matrix<double, 2, 3>> blocks);

    std::size_t frames() const { return blocks_.size(); }
    const Eigen::Matrix<double, 2, 3>& block(std::size_t i) const { return blocks_[i]; }

    /// Y = R * S: maps (3m x p) to (2m x p).
    Eigen::MatrixXd apply(const Eigen::MatrixXd& S) const;

    /// R^T * Y: maps (2m x p) to (3m x p).
    Eigen::MatrixXd apply_transpose(const Eigen::MatrixXd& Y) const;

    /// Squared spectral norm, estimated by 50 power-method iterations on
    /// R^T R (deterministic start vector).
    double operator_norm_sq() const;

private:
    std::vector<Eigen::Matrix<double, 2, 3>> blocks_;
};

/// Projected-gradient solver configuration for least squares over a nuclear
/// ball. `step` empty means automatic: 1 / ||R||_2^2. `tol` is the relative
/// objective-decrease stopping threshold.
struct NuclearBallParams {
    double radius = 1.0;
    int max_iters = 2000;
    std::optional<double> step;
    double tol = 1e-12;
};

struct NuclearFitInfo {
    int iterations = 0;
    double objective = 0.0;
    bool converged = false;
};

/// Euclidean projection of S onto {X : ||X||_* <= radius}: SVD, then the
/// singular values are shifted down by the water-filling threshold and
/// clipped at zero. Singular values below 1e-12 times the largest are
/// treated as exact zeros. radius = 0 projects onto the zero matrix.
Eigen::MatrixXd project_nuclear_ball(const Eigen::MatrixXd& S, double radius);

/// min ||Y - R S||_F^2 over ||S||_* <= radius, by projected gradient with
/// constant step. The objective is non-increasing across iterations; the
/// solver stops on relative decrease below params.tol or at max_iters.
Eigen::MatrixXd nuclear_ball_ls(const Eigen::MatrixXd& Y, const CameraMatrix& R,
                                const NuclearBallParams& params,
                                NuclearFitInfo* info = nullptr);

/// Wraps nuclear_ball_ls as a black-box method on flattened observation
/// matrices: the input vector is a column-major (2m x p) matrix, the output
/// is the column-major flattening of R * S_hat (fitted values in observation
/// space, n = 2 m p).
PredictorMethod nuclear_ball_method(const CameraMatrix& R, std::size_t points,
                                    const NuclearBallParams& params);

/// Column-major flattening helpers shared by the method wrapper and tests.
SampleVector flatten(const Eigen::MatrixXd& M);
Eigen::MatrixXd unflatten(const SampleVector& v, std::size_t rows, std::size_t cols);

} // namespace wildrefit
