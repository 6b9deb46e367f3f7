#include "wildrefit/predictors.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <utility>

namespace wildrefit {

namespace {

void require_finite_scalar(double v, const char* what) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite");
}

} // namespace

// ---------------------------------------------------------------------------
// Increment-ridge smoother
// ---------------------------------------------------------------------------

SampleVector tikhonov_fit(const SampleVector& y, const TikhonovParams& params) {
    const std::size_t n = y.size();
    if (n < 2) throw std::invalid_argument("tikhonov_fit: need at least two samples");
    require_finite_scalar(params.lambda, "tikhonov_fit: lambda");
    if (params.lambda < 0.0) throw std::invalid_argument("tikhonov_fit: lambda must be >= 0");
    const double a = static_cast<double>(n) * params.lambda;
    if (a == 0.0) return y;

    // Normal equations (I + n*lambda * D^T D) f = y with D the first
    // difference operator: a symmetric tridiagonal system solved by the
    // Thomas algorithm. The matrix is strictly diagonally dominant, so no
    // pivoting is needed.
    SampleVector diag(n), rhs = y, f(n);
    diag[0] = 1.0 + a;
    diag[n - 1] = 1.0 + a;
    for (std::size_t i = 1; i + 1 < n; ++i) diag[i] = 1.0 + 2.0 * a;
    const double off = -a;

    // Forward elimination.
    for (std::size_t i = 1; i < n; ++i) {
        const double m = off / diag[i - 1];
        diag[i] -= m * off;
        rhs[i] -= m * rhs[i - 1];
    }
    // Back substitution.
    f[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) f[i] = (rhs[i] - off * f[i + 1]) / diag[i];
    return f;
}

// ---------------------------------------------------------------------------
// Fused (total-variation) smoother
// ---------------------------------------------------------------------------

namespace {

// Direct single-pass solver for min_x 0.5*sum (y_k - x_k)^2 + lam*sum |x_{k+1}-x_k|.
// Taut-string style: a segment of provisionally constant value is extended
// sample by sample while lower and upper string bounds (vmin/vmax with slack
// trackers umin/umax) remain compatible; when one of them is violated the
// segment up to the last extremum is emitted and the scan restarts there.
void tv_direct(const double* input, double* output, int width, double lam) {
    int k = 0, k0 = 0, kminus = 0, kplus = 0;
    double umin = lam, umax = -lam;
    double vmin = input[0] - lam, vmax = input[0] + lam;
    const double twolam = 2.0 * lam;
    const double minlam = -lam;
    for (;;) {
        while (k == width - 1) {
            if (umin < 0.0) { // the lower string must jump down
                do output[k0++] = vmin;
                while (k0 <= kminus);
                umax = (vmin = input[kminus = k = k0]) + (umin = lam) - vmax;
            } else if (umax > 0.0) { // the upper string must jump up
                do output[k0++] = vmax;
                while (k0 <= kplus);
                umin = (vmax = input[kplus = k = k0]) + (umax = minlam) - vmin;
            } else { // both strings stay taut to the end
                vmin += umin / (k - k0 + 1);
                do output[k0++] = vmin;
                while (k0 <= k);
                return;
            }
        }
        if ((umin += input[k + 1] - vmin) < minlam) { // lower slack exhausted
            do output[k0++] = vmin;
            while (k0 <= kminus);
            vmax = (vmin = input[kplus = kminus = k = k0]) + twolam;
            umin = lam;
            umax = minlam;
        } else if ((umax += input[k + 1] - vmax) > lam) { // upper slack exhausted
            do output[k0++] = vmax;
            while (k0 <= kplus);
            vmin = (vmax = input[kplus = kminus = k = k0]) - twolam;
            umin = lam;
            umax = minlam;
        } else {
            ++k;
            if (umin >= lam) {
                vmin += (umin - lam) / ((kminus = k) - k0 + 1);
                umin = lam;
            }
            if (umax <= minlam) {
                vmax += (umax + lam) / ((kplus = k) - k0 + 1);
                umax = minlam;
            }
        }
    }
}

} // namespace

SampleVector tv_fit(const SampleVector& y, const TVParams& params) {
    const std::size_t n = y.size();
    if (n < 2) throw std::invalid_argument("tv_fit: need at least two samples");
    require_finite_scalar(params.lambda, "tv_fit: lambda");
    if (params.lambda < 0.0) throw std::invalid_argument("tv_fit: lambda must be >= 0");
    if (params.lambda == 0.0) return y;
    // Our objective weighs the quadratic term by 1/n; the direct solver works
    // with an unweighted 0.5-quadratic, so the penalty rescales accordingly.
    const double lam = 0.5 * static_cast<double>(n) * params.lambda;
    SampleVector f(n);
    tv_direct(y.data(), f.data(), static_cast<int>(n), lam);
    return f;
}

PredictorMethod tikhonov_method(double lambda) {
    PredictorMethod m;
    m.name = "tikhonov(lambda=" + std::to_string(lambda) + ")";
    m.fit = [lambda](const SampleVector& u) { return tikhonov_fit(u, TikhonovParams{lambda}); };
    m.is_convex_class = false; // penalized, not least squares over a fixed convex set
    return m;
}

PredictorMethod tv_method(double lambda) {
    PredictorMethod m;
    m.name = "tv(lambda=" + std::to_string(lambda) + ")";
    m.fit = [lambda](const SampleVector& u) { return tv_fit(u, TVParams{lambda}); };
    m.is_convex_class = false;
    return m;
}

// ---------------------------------------------------------------------------
// Convex projections
// ---------------------------------------------------------------------------

namespace {

SampleVector project_box(const SampleVector& u, const BoxSpec& spec) {
    if (spec.lo.size() != u.size() || spec.hi.size() != u.size())
        throw std::invalid_argument("box projection: bound length mismatch");
    SampleVector out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (spec.lo[i] > spec.hi[i])
            throw std::invalid_argument("box projection: lo > hi at coordinate " +
                                        std::to_string(i));
        out[i] = std::min(std::max(u[i], spec.lo[i]), spec.hi[i]);
    }
    return out;
}

SampleVector project_constant_band(const SampleVector& u, const ConstantBandSpec& spec) {
    if (spec.lo > spec.hi)
        throw std::invalid_argument("constant band projection: lo > hi");
    double mean = 0.0;
    for (double v : u) mean += v;
    mean /= static_cast<double>(u.size());
    const double c = std::min(std::max(mean, spec.lo), spec.hi);
    return SampleVector(u.size(), c);
}

// Pool-adjacent-violators for the non-decreasing cone (equal weights).
SampleVector project_monotone(const SampleVector& u) {
    const std::size_t n = u.size();
    std::vector<double> value;
    std::vector<std::size_t> count;
    value.reserve(n);
    count.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        value.push_back(u[i]);
        count.push_back(1);
        while (value.size() > 1 && value[value.size() - 2] >= value.back()) {
            const double merged = (value[value.size() - 2] * count[count.size() - 2] +
                                   value.back() * count.back()) /
                                  static_cast<double>(count[count.size() - 2] + count.back());
            count[count.size() - 2] += count.back();
            value[value.size() - 2] = merged;
            value.pop_back();
            count.pop_back();
        }
    }
    SampleVector out;
    out.reserve(n);
    for (std::size_t b = 0; b < value.size(); ++b)
        out.insert(out.end(), count[b], value[b]);
    return out;
}

} // namespace

PredictorMethod projection_predictor(const SetSpec& spec) {
    PredictorMethod m;
    m.is_convex_class = true;
    if (const auto* box = std::get_if<BoxSpec>(&spec)) {
        if (box->lo.size() != box->hi.size())
            throw std::invalid_argument("projection_predictor: box bound length mismatch");
        for (std::size_t i = 0; i < box->lo.size(); ++i)
            if (std::isnan(box->lo[i]) || std::isnan(box->hi[i]) || box->lo[i] > box->hi[i])
                throw std::invalid_argument(
                    "projection_predictor: box needs lo <= hi at coordinate " +
                    std::to_string(i));
        BoxSpec copy = *box;
        m.name = "project_box";
        m.fit = [copy](const SampleVector& u) { return project_box(u, copy); };
    } else if (const auto* band = std::get_if<ConstantBandSpec>(&spec)) {
        if (std::isnan(band->lo) || std::isnan(band->hi) || band->lo > band->hi)
            throw std::invalid_argument("projection_predictor: band needs lo <= hi");
        ConstantBandSpec copy = *band;
        m.name = "project_constant_band";
        m.fit = [copy](const SampleVector& u) { return project_constant_band(u, copy); };
    } else {
        m.name = "project_monotone";
        m.fit = [](const SampleVector& u) { return project_monotone(u); };
    }
    return m;
}

namespace {

double increment_l2(const SampleVector& v) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        const double d = v[i + 1] - v[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double increment_l1(const SampleVector& v) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) s += std::abs(v[i + 1] - v[i]);
    return s;
}

SampleVector fill_with_mean(const SampleVector& y) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    return SampleVector(y.size(), mean);
}

// Shared bisection driver for ball projections whose Lagrangian path is
// available in closed form: `solve(level)` must be the exact penalized
// solution at penalty `level`, with `measure(solve(level))` continuous and
// non-increasing in the level. Returns the feasible-side solution once the
// bracket is resolved to machine precision.
template <typename Solve, typename Measure>
SampleVector project_by_penalty_bisection(double radius, Solve solve, Measure measure) {
    double lo = 0.0;
    double hi = 1.0;
    SampleVector hi_fit = solve(hi);
    int expansions = 0;
    while (measure(hi_fit) > radius) {
        hi *= 2.0;
        hi_fit = solve(hi);
        if (++expansions > 200)
            throw NumericError("ball projection: penalty bracket failed to close");
    }
    for (int iter = 0; iter < 120; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break; // interval at machine precision
        SampleVector mid_fit = solve(mid);
        if (measure(mid_fit) > radius) {
            lo = mid;
        } else {
            hi = mid;
            hi_fit = std::move(mid_fit);
        }
    }
    return hi_fit;
}

} // namespace

SampleVector smoothness_ball_fit(const SampleVector& y, double radius) {
    if (y.size() < 2) throw std::invalid_argument("smoothness_ball_fit: need at least two samples");
    require_finite_scalar(radius, "smoothness_ball_fit: radius");
    if (radius < 0.0) throw std::invalid_argument("smoothness_ball_fit: radius must be >= 0");
    if (increment_l2(y) <= radius) return y;
    if (radius == 0.0) return fill_with_mean(y);
    // The constrained projection equals the increment-ridge solution at the
    // dual-optimal penalty; ||D f(lambda)||_2 decreases strictly to zero, so
    // bisect the penalty until the constraint is active.
    return project_by_penalty_bisection(
        radius, [&y](double lambda) { return tikhonov_fit(y, TikhonovParams{lambda}); },
        increment_l2);
}

SampleVector tv_ball_fit(const SampleVector& y, double radius) {
    if (y.size() < 2) throw std::invalid_argument("tv_ball_fit: need at least two samples");
    require_finite_scalar(radius, "tv_ball_fit: radius");
    if (radius < 0.0) throw std::invalid_argument("tv_ball_fit: radius must be >= 0");
    if (increment_l1(y) <= radius) return y;
    if (radius == 0.0) return fill_with_mean(y);
    return project_by_penalty_bisection(
        radius, [&y](double lambda) { return tv_fit(y, TVParams{lambda}); }, increment_l1);
}

PredictorMethod smoothness_ball_method(double radius) {
    PredictorMethod m;
    m.name = "smoothness_ball(radius=" + std::to_string(radius) + ")";
    m.is_convex_class = true;
    m.fit = [radius](const SampleVector& u) { return smoothness_ball_fit(u, radius); };
    return m;
}

PredictorMethod tv_ball_method(double radius) {
    PredictorMethod m;
    m.name = "tv_ball(radius=" + std::to_string(radius) + ")";
    m.is_convex_class = true;
    m.fit = [radius](const SampleVector& u) { return tv_ball_fit(u, radius); };
    return m;
}

PredictorMethod identity_method() {
    PredictorMethod m;
    m.name = "identity";
    m.is_convex_class = true;
    m.fit = [](const SampleVector& u) { return u; };
    return m;
}

PredictorMethod constant_method() {
    return projection_predictor(ConstantBandSpec{});
}

FirmCheck check_firm_nonexpansive(const PredictorMethod& m, const SampleVector& base,
                                  const SampleVector& u) {
    if (base.size() != u.size())
        throw std::invalid_argument("check_firm_nonexpansive: length mismatch");
    const SampleVector m_base = apply_method(m, base);
    SampleVector shifted(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) shifted[i] = base[i] + u[i];
    const SampleVector m_shift = apply_method(m, shifted);
    SampleVector g(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) g[i] = m_shift[i] - m_base[i];
    FirmCheck check;
    const double gn = emp_norm(g);
    check.lhs = gn * gn;
    check.rhs = emp_inner(u, g);
    check.holds = check.lhs <= check.rhs + 1e-9;
    return check;
}

// ---------------------------------------------------------------------------
// Orthographic camera stack and nuclear-ball least squares
// ---------------------------------------------------------------------------

CameraMatrix::CameraMatrix(std::vector<Eigen::Matrix<double, 2, 3>> blocks)
    : blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw std::invalid_argument("CameraMatrix: no camera blocks");
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const Eigen::Matrix2d gram = blocks_[i] * blocks_[i].transpose();
        if ((gram - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() > 1e-10)
            throw std::invalid_argument("CameraMatrix: block " + std::to_string(i) +
                                        " does not have orthonormal rows");
    }
}

Eigen::MatrixXd CameraMatrix::apply(const Eigen::MatrixXd& S) const {
    const auto m = static_cast<Eigen::Index>(frames());
    if (S.rows() != 3 * m)
        throw std::invalid_argument("CameraMatrix::apply: shape matrix must have 3*frames rows");
    Eigen::MatrixXd Y(2 * m, S.cols());
    for (Eigen::Index i = 0; i < m; ++i)
        Y.middleRows(2 * i, 2) = blocks_[static_cast<std::size_t>(i)] * S.middleRows(3 * i, 3);
    return Y;
}

Eigen::MatrixXd CameraMatrix::apply_transpose(const Eigen::MatrixXd& Y) const {
    const auto m = static_cast<Eigen::Index>(frames());
    if (Y.rows() != 2 * m)
        throw std::invalid_argument(
            "CameraMatrix::apply_transpose: observation matrix must have 2*frames rows");
    Eigen::MatrixXd S(3 * m, Y.cols());
    for (Eigen::Index i = 0; i < m; ++i)
        S.middleRows(3 * i, 3) =
            blocks_[static_cast<std::size_t>(i)].transpose() * Y.middleRows(2 * i, 2);
    return S;
}

double CameraMatrix::operator_norm_sq() const {
    const auto rows = static_cast<Eigen::Index>(3 * frames());
    Eigen::VectorXd v = Eigen::VectorXd::Ones(rows).normalized();
    double lambda = 0.0;
    for (int iter = 0; iter < 50; ++iter) {
        Eigen::VectorXd w = apply_transpose(apply(v));
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        lambda = v.dot(w);
        v = w / norm;
    }
    return lambda;
}

Eigen::MatrixXd project_nuclear_ball(const Eigen::MatrixXd& S, double radius) {
    require_finite_scalar(radius, "project_nuclear_ball: radius");
    if (radius < 0.0) throw std::invalid_argument("project_nuclear_ball: radius must be >= 0");
    if (radius == 0.0) return Eigen::MatrixXd::Zero(S.rows(), S.cols());

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd sv = svd.singularValues();
    if (sv.size() == 0) return S;
    const double cutoff = 1e-12 * sv(0);
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) < cutoff) sv(i) = 0.0;
    if (sv.sum() <= radius) return S;

    // Water-filling threshold theta: sum max(sv_i - theta, 0) = radius. The
    // singular values arrive sorted descending, so scan prefixes.
    double cumulative = 0.0;
    double theta = 0.0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
        cumulative += sv(k);
        const double candidate = (cumulative - radius) / static_cast<double>(k + 1);
        const double next = (k + 1 < sv.size()) ? sv(k + 1) : 0.0;
        if (candidate >= next) {
            theta = candidate;
            break;
        }
    }
    Eigen::VectorXd shrunk = (sv.array() - theta).max(0.0);
    return svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
}

Eigen::MatrixXd nuclear_ball_ls(const Eigen::MatrixXd& Y, const CameraMatrix& R,
                                const NuclearBallParams& params, NuclearFitInfo* info) {
    if (params.radius < 0.0 || !std::isfinite(params.radius))
        throw std::invalid_argument("nuclear_ball_ls: radius must be >= 0 and finite");
    if (params.max_iters <= 0)
        throw std::invalid_argument("nuclear_ball_ls: max_iters must be positive");
    if (!(params.tol >= 0.0))
        throw std::invalid_argument("nuclear_ball_ls: tol must be >= 0");
    if (Y.rows() != static_cast<Eigen::Index>(2 * R.frames()))
        throw std::invalid_argument("nuclear_ball_ls: observation rows must equal 2*frames");

    double step;
    if (params.step) {
        step = *params.step;
        if (!(step > 0.0) || !std::isfinite(step))
            throw std::invalid_argument("nuclear_ball_ls: step must be positive and finite");
    } else {
        const double lip = R.operator_norm_sq();
        if (lip <= 0.0) throw NumericError("nuclear_ball_ls: operator norm estimate is zero");
        step = 1.0 / lip;
    }

    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(Y.rows() / 2 * 3, Y.cols());
    Eigen::MatrixXd residual = R.apply(S) - Y;
    double objective = residual.squaredNorm();
    int iter = 0;
    bool converged = false;
    for (; iter < params.max_iters; ++iter) {
        const Eigen::MatrixXd grad = R.apply_transpose(residual);
        S = project_nuclear_ball(S - step * grad, params.radius);
        residual = R.apply(S) - Y;
        const double next = residual.squaredNorm();
        if (next > objective + 1e-9 * std::max(1.0, objective))
            throw NumericError("nuclear_ball_ls: objective increased (step too large?)");
        const double decrease = objective - next;
        objective = next;
        if (decrease <= params.tol * std::max(objective, 1e-300)) {
            converged = true;
            ++iter;
            break;
        }
    }
    if (info) {
        info->iterations = iter;
        info->objective = objective;
        info->converged = converged;
    }
    return S;
}

SampleVector flatten(const Eigen::MatrixXd& M) {
    SampleVector v(static_cast<std::size_t>(M.size()));
    Eigen::Map<Eigen::MatrixXd>(v.data(), M.rows(), M.cols()) = M;
    return v;
}

Eigen::MatrixXd unflatten(const SampleVector& v, std::size_t rows, std::size_t cols) {
    if (v.size() != rows * cols)
        throw std::invalid_argument("unflatten: size mismatch");
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), static_cast<Eigen::Index>(rows),
                                             static_cast<Eigen::Index>(cols));
}

PredictorMethod nuclear_ball_method(const CameraMatrix& R, std::size_t points,
                                    const NuclearBallParams& params) {
    const std::size_t rows = 2 * R.frames();
    PredictorMethod m;
    m.name = "nuclear_ball(radius=" + std::to_string(params.radius) + ")";
    m.is_convex_class = true; // least squares over a convex set of fitted values
    m.fit = [R, points, params, rows](const SampleVector& u) {
        const Eigen::MatrixXd Y = unflatten(u, rows, points);
        const Eigen::MatrixXd S = nuclear_ball_ls(Y, R, params);
        return flatten(R.apply(S));
    };
    return m;
}

} // namespace wildrefit
