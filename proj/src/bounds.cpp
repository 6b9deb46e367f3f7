#include "wildrefit/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wildrefit {

namespace {

constexpr int kMaxExpansions = 20;      // rho_max may grow by up to 2^20
constexpr int kMaxBisectionIters = 200; // interval width shrinks far below any tol
constexpr double kMonotoneSlack = 1e-8; // tolerated radius inversion during bisection

SampleVector subtract(const SampleVector& a, const SampleVector& b) {
    SampleVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

// Shared state for repeated replicate evaluations at different rho with the
// residuals and signs held fixed.
struct ReplicateEvaluator {
    const PredictorMethod& m;
    const SampleVector& fhat;
    SampleVector residuals;
    SignVector signs;
    std::uint64_t seed;
    int fit_calls = 0;
    std::vector<std::pair<double, double>> observed; // (rho, radius)

    WildReplicate at(double rho) {
        ++fit_calls;
        WildReplicate rep =
            run_wild_replicate_with_residuals(m, fhat, residuals, signs, rho, seed);
        observed.emplace_back(rho, rep.wild_radius);
        return rep;
    }

    bool saw_inversion() {
        std::sort(observed.begin(), observed.end());
        for (std::size_t i = 1; i < observed.size(); ++i)
            if (observed[i].second < observed[i - 1].second - kMonotoneSlack) return true;
        return false;
    }
};

ReplicateEvaluator make_evaluator(const PredictorMethod& m, const SampleVector& y,
                                  const SampleVector& fhat, std::uint64_t seed,
                                  const std::optional<SampleVector>& pilot) {
    if (pilot && pilot->size() != y.size())
        throw std::invalid_argument("wild calibration: pilot length mismatch");
    SampleVector residuals = compute_residuals(y, pilot ? *pilot : fhat);
    SignVector signs = draw_signs(y.size(), seed);
    return ReplicateEvaluator{m, fhat, std::move(residuals), std::move(signs), seed};
}

struct CalibrationAttempt {
    double rho = 0.0;
    WildReplicate replicate;
    bool reachable = true; // target radius attainable below the expanded rho_max
    CalibrationInfo info;
};

// Bisection on [0, rho_max] assuming the wild radius grows with rho. Never
// throws on an unreachable target; the caller decides whether that is an
// error or a saturation.
CalibrationAttempt calibrate_impl(ReplicateEvaluator& eval, double target_r, double tol,
                                  double rho_max) {
    if (!(target_r > 0.0) || !std::isfinite(target_r))
        throw std::invalid_argument("calibrate_rho: target radius must be positive and finite");
    if (!(tol > 0.0)) throw std::invalid_argument("calibrate_rho: tol must be positive");
    if (!(rho_max > 0.0) || !std::isfinite(rho_max))
        throw std::invalid_argument("calibrate_rho: rho_max must be positive and finite");

    CalibrationAttempt out;
    double hi = rho_max;
    WildReplicate rep_hi = eval.at(hi);
    int expansions = 0;
    while (rep_hi.wild_radius < target_r - tol && expansions < kMaxExpansions) {
        hi *= 2.0;
        ++expansions;
        rep_hi = eval.at(hi);
    }
    out.info.saturated = expansions > 0;
    if (rep_hi.wild_radius < target_r - tol) {
        // Even 2^20 * rho_max cannot move the refit far enough: the method's
        // reachable set is too small for this radius.
        out.reachable = false;
        out.rho = hi;
        out.replicate = std::move(rep_hi);
        out.info.rho = hi;
        out.info.achieved_r = out.replicate.wild_radius;
        out.info.converged = false;
        out.info.fit_calls = eval.fit_calls;
        out.info.non_monotone = eval.saw_inversion();
        return out;
    }

    double lo = 0.0;
    double best_rho = hi;
    double best_gap = std::abs(rep_hi.wild_radius - target_r);
    WildReplicate best_rep = std::move(rep_hi);
    bool met_tol = best_gap <= tol;

    for (int iter = 0; iter < kMaxBisectionIters && !met_tol; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo) || !(mid < hi)) break; // interval exhausted in floating point
        WildReplicate rep = eval.at(mid);
        const double gap = std::abs(rep.wild_radius - target_r);
        if (gap < best_gap) {
            best_gap = gap;
            best_rho = mid;
            best_rep = std::move(rep);
            if (gap <= tol) {
                met_tol = true;
                break;
            }
            if (best_rep.wild_radius < target_r)
                lo = mid;
            else
                hi = mid;
        } else {
            if (rep.wild_radius < target_r)
                lo = mid;
            else
                hi = mid;
        }
    }

    out.rho = best_rho;
    out.replicate = std::move(best_rep);
    out.info.rho = best_rho;
    out.info.achieved_r = out.replicate.wild_radius;
    out.info.converged = met_tol;
    out.info.fit_calls = eval.fit_calls;
    out.info.non_monotone = eval.saw_inversion();
    return out;
}

double general_mse_bound(const SampleVector& y, const SampleVector& fhat,
                         const WildReplicate& rep) {
    const double fit_err = emp_norm(subtract(y, fhat));
    const double res_norm = emp_norm(rep.residuals);
    const double excess = std::max(0.0, fit_err * fit_err - res_norm * res_norm);
    return excess + 2.0 * rep.wild_optimism;
}

} // namespace

std::vector<RhoSweepPoint> rho_sweep(const PredictorMethod& m, const SampleVector& y,
                                     const SampleVector& fhat, std::uint64_t seed,
                                     const std::vector<double>& rho_grid,
                                     const std::optional<SampleVector>& pilot) {
    if (rho_grid.empty()) throw std::invalid_argument("rho_sweep: empty rho grid");
    for (std::size_t i = 0; i < rho_grid.size(); ++i) {
        if (!(rho_grid[i] > 0.0) || !std::isfinite(rho_grid[i]))
            throw std::invalid_argument("rho_sweep: rho grid entries must be positive and finite");
        if (i > 0 && rho_grid[i] <= rho_grid[i - 1])
            throw std::invalid_argument("rho_sweep: rho grid must be strictly ascending");
    }
    ReplicateEvaluator eval = make_evaluator(m, y, fhat, seed, pilot);
    std::vector<RhoSweepPoint> sweep;
    sweep.reserve(rho_grid.size());
    for (double rho : rho_grid) {
        WildReplicate rep;
        try {
            rep = eval.at(rho);
        } catch (const MethodError& e) {
            throw MethodError(e.method_name(),
                              e.detail() + " (during rho sweep at rho=" + std::to_string(rho) +
                                  ")");
        }
        RhoSweepPoint pt;
        pt.rho = rho;
        pt.r_tilde = rep.wild_radius;
        pt.w_complexity = rep.wild_optimism;
        pt.b1 = rep.wild_radius;
        if (rep.wild_radius > 0.0) pt.b2 = 2.0 * rep.wild_optimism / rep.wild_radius;
        sweep.push_back(pt);
    }
    return sweep;
}

double calibrate_rho(const PredictorMethod& m, const SampleVector& y,
                     const SampleVector& fhat, std::uint64_t seed, double target_r,
                     double tol, double rho_max, const std::optional<SampleVector>& pilot,
                     CalibrationInfo* info) {
    ReplicateEvaluator eval = make_evaluator(m, y, fhat, seed, pilot);
    CalibrationAttempt attempt = calibrate_impl(eval, target_r, tol, rho_max);
    if (info) *info = attempt.info;
    if (!attempt.reachable)
        throw NumericError("calibrate_rho: unreachable target radius " +
                           std::to_string(target_r) + " (achieved " +
                           std::to_string(attempt.replicate.wild_radius) + " at rho=" +
                           std::to_string(attempt.rho) + "; the method cannot move that far)");
    return attempt.rho;
}

double wild_complexity_at(const PredictorMethod& m, const SampleVector& y,
                          const SampleVector& fhat, std::uint64_t seed, double r,
                          double tol, double rho_max,
                          const std::optional<SampleVector>& pilot, CalibrationInfo* info) {
    ReplicateEvaluator eval = make_evaluator(m, y, fhat, seed, pilot);
    CalibrationAttempt attempt = calibrate_impl(eval, r, tol, rho_max);
    if (info) *info = attempt.info;
    if (!attempt.reachable)
        throw NumericError("wild_complexity_at: unreachable radius " + std::to_string(r));
    return attempt.replicate.wild_optimism;
}

CrossingResult find_crossing(const std::vector<RhoSweepPoint>& sweep) {
    std::vector<const RhoSweepPoint*> pts;
    pts.reserve(sweep.size());
    for (const auto& p : sweep)
        if (p.b2) pts.push_back(&p);
    if (pts.size() < 2)
        throw std::invalid_argument(
            "find_crossing: need at least two sweep points with a defined b2");

    CrossingResult out;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double d0 = pts[i]->b1 - *pts[i]->b2;
        const double d1 = pts[i + 1]->b1 - *pts[i + 1]->b2;
        if (d0 == 0.0) {
            out.rho_star = pts[i]->rho;
            out.r_bound = pts[i]->b1;
            return out;
        }
        if (d0 * d1 <= 0.0) {
            // Linear interpolation of the gap; b1 and b2 interpolants agree
            // at theta by construction.
            const double theta = d0 / (d0 - d1);
            out.rho_star = pts[i]->rho + theta * (pts[i + 1]->rho - pts[i]->rho);
            out.r_bound = pts[i]->b1 + theta * (pts[i + 1]->b1 - pts[i]->b1);
            return out;
        }
    }
    const double d_last = pts.back()->b1 - *pts.back()->b2;
    if (d_last == 0.0) {
        out.rho_star = pts.back()->rho;
        out.r_bound = pts.back()->b1;
        return out;
    }
    if (d_last > 0.0) {
        // b1 above b2 across the whole grid: the max of the two curves is
        // smallest at the left end.
        out.rho_star = pts.front()->rho;
        out.r_bound = std::max(pts.front()->b1, *pts.front()->b2);
    } else {
        out.rho_star = pts.back()->rho;
        out.r_bound = std::max(pts.back()->b1, *pts.back()->b2);
        out.no_crossing = true;
    }
    return out;
}

std::pair<double, WildReplicate> mse_upper_bound(const PredictorMethod& m,
                                                 const SampleVector& y,
                                                 const SampleVector& fhat,
                                                 std::uint64_t seed, double rho,
                                                 const std::optional<SampleVector>& pilot) {
    WildReplicate rep;
    if (pilot) {
        ReplicateEvaluator eval = make_evaluator(m, y, fhat, seed, pilot);
        rep = eval.at(rho);
    } else {
        WildConfig cfg;
        cfg.rho = rho;
        cfg.seed = seed;
        rep = run_wild_replicate(m, y, fhat, cfg);
    }
    const double bound = general_mse_bound(y, fhat, rep);
    return {bound, std::move(rep)};
}

ModelSelection model_select(const std::vector<PredictorMethod>& candidates,
                            const SampleVector& y, std::uint64_t seed, double rho) {
    if (candidates.empty()) throw std::invalid_argument("model_select: no candidates");
    ModelSelection sel;
    sel.outcomes.reserve(candidates.size());
    double best = std::numeric_limits<double>::infinity();
    std::string all_errors;
    for (const auto& cand : candidates) {
        CandidateOutcome outcome;
        outcome.label = cand.name;
        try {
            const SampleVector fhat = apply_method(cand, y);
            auto [bound, rep] = mse_upper_bound(cand, y, fhat, seed, rho);
            (void)rep;
            outcome.mse_bound = bound;
            if (bound < best) {
                best = bound;
                sel.selected_label = cand.name;
            }
        } catch (const std::exception& e) {
            outcome.error = e.what();
            if (!all_errors.empty()) all_errors += "; ";
            all_errors += cand.name + ": " + e.what();
        }
        sel.outcomes.push_back(std::move(outcome));
    }
    if (sel.selected_label.empty())
        throw MethodError("model_select", "all candidates failed: " + all_errors);
    return sel;
}

RiskReport assess_risk(const PredictorMethod& m, const SampleVector& y,
                       const SampleVector& fhat, std::uint64_t seed,
                       const std::vector<double>& rho_grid) {
    RiskReport report;
    report.seed = seed;
    report.pilot_tag = "fhat";
    report.sweep = rho_sweep(m, y, fhat, seed, rho_grid);
    const CrossingResult cross = find_crossing(report.sweep);
    report.rho_star = cross.rho_star;
    report.r_bound = cross.r_bound;
    report.no_crossing = cross.no_crossing;
    auto [bound, rep] = mse_upper_bound(m, y, fhat, seed, cross.rho_star);
    report.mse_bound = bound;
    report.optimism_bound = rep.wild_optimism;
    return report;
}

OracleDiagnostics oracle_diagnostics(const PredictorMethod& m, const SampleVector& y,
                                     const SampleVector& fhat, const SampleVector& fstar,
                                     std::uint64_t seed, double t, double r,
                                     const std::optional<SampleVector>& pilot) {
    if (y.size() != fhat.size() || y.size() != fstar.size())
        throw std::invalid_argument("oracle_diagnostics: length mismatch");
    if (!(t >= 0.0) || !std::isfinite(t))
        throw std::invalid_argument("oracle_diagnostics: t must be nonnegative and finite");
    if (!(r > 0.0) || !std::isfinite(r))
        throw std::invalid_argument("oracle_diagnostics: r must be positive and finite");
    const SampleVector& pilot_vals = pilot ? *pilot : fhat;
    if (pilot_vals.size() != y.size())
        throw std::invalid_argument("oracle_diagnostics: pilot length mismatch");

    const double n = static_cast<double>(y.size());
    OracleDiagnostics diag;
    diag.t = t;
    diag.r = r;

    const SampleVector w = subtract(y, fstar);
    const SampleVector err = subtract(fhat, fstar);
    diag.true_mse = emp_norm(err);
    diag.true_mse *= diag.true_mse;
    diag.true_optimism = emp_inner(w, err);
    const double fit_err = emp_norm(subtract(y, fhat));
    const double w_norm = emp_norm(w);
    diag.empirical_excess = fit_err * fit_err - w_norm * w_norm;
    for (double wi : w) diag.w_infnorm = std::max(diag.w_infnorm, std::abs(wi));

    diag.fdagger = apply_method(m, fstar);
    diag.rhat = emp_norm(subtract(fhat, diag.fdagger));
    diag.fdagger_error = emp_norm(subtract(diag.fdagger, fstar));

    diag.h_term = (3.0 * r + diag.fdagger_error) * (2.0 * diag.w_infnorm * t / std::sqrt(n));

    // Pilot mismatch at radius 2r: redo the wild construction with the
    // pseudo-residuals pilot - fstar (nothing here depends on y). When those
    // vanish the term is exactly zero; when the method cannot reach radius 2r
    // the supremum saturates at the farthest reachable displacement, so the
    // fully expanded replicate is the right evaluation.
    SampleVector d = subtract(pilot_vals, fstar);
    if (emp_norm(d) == 0.0) {
        diag.pilot_error = 0.0;
    } else {
        ReplicateEvaluator eval{m, fhat, std::move(d), draw_signs(y.size(), seed), seed};
        const double target = 2.0 * r;
        const double tol = 1e-6 * target + 1e-15;
        CalibrationAttempt attempt = calibrate_impl(eval, target, tol, 8.0);
        diag.pilot_error = attempt.replicate.wild_optimism;
    }
    return diag;
}

} // namespace wildrefit
