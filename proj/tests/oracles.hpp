// Independent reference implementations used to cross-check the library's
// solvers and ball-suprema. Everything here favors transparency over speed:
// dense solves, exhaustive searches, and first-order methods with known
// convergence behavior. None of these share code with the library.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "wildrefit/core.hpp"

namespace oracles {

using wildrefit::SampleVector;

// Dense solve of the increment-penalized normal equations
// (I + n*lambda*D^T D) f = y, D the first-difference operator.
inline SampleVector dense_tikhonov(const SampleVector& y, double lambda) {
    const int n = static_cast<int>(y.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
    const double a = static_cast<double>(n) * lambda;
    for (int i = 0; i + 1 < n; ++i) {
        A(i, i) += a;
        A(i + 1, i + 1) += a;
        A(i, i + 1) -= a;
        A(i + 1, i) -= a;
    }
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) rhs(i) = y[i];
    const Eigen::VectorXd f = A.ldlt().solve(rhs);
    SampleVector out(y.size());
    for (int i = 0; i < n; ++i) out[i] = f(i);
    return out;
}

// The fused-penalty objective both tv_fit and its oracle minimize.
inline double tv_objective(const SampleVector& y, const SampleVector& x, double lambda) {
    const double n = static_cast<double>(y.size());
    double obj = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - x[i];
        obj += d * d / n;
    }
    for (std::size_t i = 0; i + 1 < x.size(); ++i) obj += lambda * std::abs(x[i + 1] - x[i]);
    return obj;
}

// Subgradient descent on the fused-penalty objective with a geometrically
// decaying step. The objective is strongly convex, so each constant-step
// stage settles into a neighborhood proportional to the step; halving the
// step across stages drives the best objective seen toward the minimum.
// Returns the best iterate encountered.
inline SampleVector tv_subgradient(const SampleVector& y, double lambda, int total_iters) {
    const std::size_t n = y.size();
    const double nd = static_cast<double>(n);
    SampleVector x = y;
    SampleVector best = x;
    double best_obj = tv_objective(y, x, lambda);
    const int stages = 34;
    const int per_stage = std::max(1, total_iters / stages);
    double step = 0.25;
    int iter = 0;
    for (int s = 0; s < stages; ++s, step *= 0.5) {
        for (int k = 0; k < per_stage; ++k, ++iter) {
            SampleVector g(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) g[i] = 2.0 * (x[i] - y[i]) / nd;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const double d = x[i + 1] - x[i];
                const double sg = (d > 0.0) ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                g[i] -= lambda * sg;
                g[i + 1] += lambda * sg;
            }
            for (std::size_t i = 0; i < n; ++i) x[i] -= step * g[i];
            const double obj = tv_objective(y, x, lambda);
            if (obj < best_obj) {
                best_obj = obj;
                best = x;
            }
        }
    }
    return best;
}

// Exhaustive maximization of (1/n) sum eps_i * w_i * (f_i - fhat_i) over the
// grid points of the box [lo, hi]^3 that lie in the empirical-norm ball of
// the given radius around fhat. n = 3 only.
inline double brute_ball_sup3(const std::array<double, 3>& eps, const std::array<double, 3>& w,
                              const std::array<double, 3>& fhat, double lo, double hi,
                              double radius, double step) {
    const double r2 = 3.0 * radius * radius; // ||f - fhat||_n <= radius
    double best = -std::numeric_limits<double>::infinity();
    const int steps = static_cast<int>(std::round((hi - lo) / step));
    for (int i = 0; i <= steps; ++i) {
        const double f0 = lo + i * step;
        const double d0 = f0 - fhat[0];
        const double q0 = d0 * d0;
        if (q0 > r2) continue;
        const double t0 = eps[0] * w[0] * d0;
        for (int j = 0; j <= steps; ++j) {
            const double f1 = lo + j * step;
            const double d1 = f1 - fhat[1];
            const double q1 = q0 + d1 * d1;
            if (q1 > r2) continue;
            const double t1 = t0 + eps[1] * w[1] * d1;
            for (int k = 0; k <= steps; ++k) {
                const double f2 = lo + k * step;
                const double d2 = f2 - fhat[2];
                if (q1 + d2 * d2 > r2) continue;
                const double v = (t1 + eps[2] * w[2] * d2) / 3.0;
                if (v > best) best = v;
            }
        }
    }
    return best;
}

// Largest empirical-norm displacement from fhat attainable inside a box:
// separable, so each coordinate contributes its farther endpoint.
inline double box_max_radius(const SampleVector& fhat, const SampleVector& lo,
                             const SampleVector& hi) {
    double ss = 0.0;
    for (std::size_t i = 0; i < fhat.size(); ++i) {
        const double d = std::max(fhat[i] - lo[i], hi[i] - fhat[i]);
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(fhat.size()));
}

// Exhaustive water-filling for the nuclear-ball projection: try every count
// of retained singular values, clip at the implied threshold, and keep the
// feasible candidate closest to the input in Frobenius norm.
inline Eigen::MatrixXd nuclear_project_search(const Eigen::MatrixXd& S, double radius) {
    if (radius <= 0.0) return Eigen::MatrixXd::Zero(S.rows(), S.cols());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();
    if (sv.sum() <= radius) return S;
    const int K = static_cast<int>(sv.size());
    Eigen::MatrixXd best = Eigen::MatrixXd::Zero(S.rows(), S.cols());
    double best_dist = (S - best).norm();
    double cum = 0.0;
    for (int k = 1; k <= K; ++k) {
        cum += sv(k - 1);
        const double theta = (cum - radius) / k;
        if (theta < 0.0) continue;
        Eigen::VectorXd clipped = sv;
        for (int i = 0; i < K; ++i) clipped(i) = std::max(sv(i) - theta, 0.0);
        if (clipped.sum() > radius + 1e-9) continue;
        const Eigen::MatrixXd cand =
            svd.matrixU() * clipped.asDiagonal() * svd.matrixV().transpose();
        const double dist = (S - cand).norm();
        if (dist < best_dist) {
            best_dist = dist;
            best = cand;
        }
    }
    return best;
}

// Frank-Wolfe on min ||Y - R S||_F^2 over the nuclear ball, with exact line
// search. `apply` maps S to R*S; `apply_t` maps residual-space matrices back.
template <typename ApplyFn, typename ApplyTFn>
Eigen::MatrixXd frank_wolfe_nuclear(const Eigen::MatrixXd& Y, ApplyFn apply, ApplyTFn apply_t,
                                    double radius, int iters, std::size_t srows) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(srows), Y.cols());
    for (int t = 0; t < iters; ++t) {
        const Eigen::MatrixXd E = Y - apply(S);
        const Eigen::MatrixXd grad = -2.0 * apply_t(E);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(grad, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::MatrixXd atom = -radius * svd.matrixU().col(0) * svd.matrixV().col(0).transpose();
        const Eigen::MatrixXd D = atom - S;
        const Eigen::MatrixXd RD = apply(D);
        const double denom = RD.squaredNorm();
        if (denom <= 0.0) break;
        const double gamma = std::clamp(E.cwiseProduct(RD).sum() / denom, 0.0, 1.0);
        if (gamma == 0.0) break;
        S += gamma * D;
    }
    return S;
}

// Exact projection onto the monotone (non-decreasing) cone for small n by
// enumerating contiguous-block partitions; the projection is blockwise
// constant at block means with non-decreasing block values, so the feasible
// candidate at minimum distance is the projection. n <= ~16.
inline SampleVector monotone_project_enum(const SampleVector& y) {
    const std::size_t n = y.size();
    const std::uint32_t masks = 1u << (n - 1);
    SampleVector best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 0; mask < masks; ++mask) {
        SampleVector cand(n);
        std::size_t start = 0;
        double prev = -std::numeric_limits<double>::infinity();
        bool feasible = true;
        for (std::size_t i = 0; i < n; ++i) {
            const bool boundary = (i + 1 == n) || ((mask >> i) & 1u);
            if (!boundary) continue;
            double mean = 0.0;
            for (std::size_t j = start; j <= i; ++j) mean += y[j];
            mean /= static_cast<double>(i - start + 1);
            if (mean < prev) {
                feasible = false;
                break;
            }
            for (std::size_t j = start; j <= i; ++j) cand[j] = mean;
            prev = mean;
            start = i + 1;
        }
        if (!feasible) continue;
        double dist = 0.0;
        for (std::size_t i = 0; i < n; ++i) dist += (y[i] - cand[i]) * (y[i] - cand[i]);
        if (dist < best_dist) {
            best_dist = dist;
            best = cand;
        }
    }
    return best;
}

// Spearman rank correlation of paired sequences (no ties expected).
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    auto ranks = [n](const std::vector<double>& v) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[idx[i]] = static_cast<double>(i);
        return r;
    };
    const std::vector<double> ra = ranks(a), rb = ranks(b);
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
    const double nd = static_cast<double>(n);
    return 1.0 - 6.0 * d2 / (nd * (nd * nd - 1.0));
}

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(SampleVector a, SampleVector b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double stat = 0.0;
    std::size_t i = 0, j = 0;
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        stat = std::max(stat, std::abs(static_cast<double>(i) / na -
                                       static_cast<double>(j) / nb));
    }
    return stat;
}

} // namespace oracles
