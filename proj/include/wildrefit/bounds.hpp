#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wildrefit/core.hpp"
#include "wildrefit/wild.hpp"

namespace wildrefit {

/// One point of a rho sweep. `b1` always equals `r_tilde`; `b2` is
/// 2 * w_complexity / r_tilde and is absent when r_tilde == 0 (the refit did
/// not move, so the ratio is undefined).
struct RhoSweepPoint {
    double rho = 0.0;
    double r_tilde = 0.0;
    double w_complexity = 0.0;
    double b1 = 0.0;
    std::optional<double> b2;
};

/// Result of locating the b1/b2 crossing on a sweep. When the curves never
/// cross because b1 stays below b2, `no_crossing` is set and the last grid
/// point is reported; when b1 starts above b2, the first grid point is
/// reported (no flag: the bound is simply the left endpoint).
struct CrossingResult {
    double rho_star = 0.0;
    double r_bound = 0.0;
    bool no_crossing = false;
};

/// Diagnostics from one calibration run. `non_monotone` is set when the
/// bisection observed the radius decreasing in rho by more than 1e-8, which
/// the search tolerates but callers may want to know about. `converged` is
/// cleared when the bisection interval collapsed without meeting the radius
/// tolerance (possible when the target sits below the radius the method
/// produces as rho -> 0).
struct CalibrationInfo {
    double rho = 0.0;
    double achieved_r = 0.0;
    int fit_calls = 0;
    bool non_monotone = false;
    bool converged = true;
    bool saturated = false;
};

/// Summary of a full risk assessment: the sweep, the crossing estimate of
/// the estimation-error radius, and the optimism-based MSE bound evaluated
/// at the crossing rho.
struct RiskReport {
    std::vector<RhoSweepPoint> sweep;
    double rho_star = 0.0;
    double r_bound = 0.0;
    bool no_crossing = false;
    double optimism_bound = 0.0;
    double mse_bound = 0.0;
    std::uint64_t seed = 0;
    std::string pilot_tag;
};

/// Ground-truth diagnostics computable only in simulation, where the
/// noiseless response vector is known.
struct OracleDiagnostics {
    double true_mse = 0.0;          // ||fhat - fstar||_n^2
    double true_optimism = 0.0;     // <y - fstar, fhat - fstar>_n
    double empirical_excess = 0.0;  // ||y - fhat||_n^2 - ||y - fstar||_n^2
    double rhat = 0.0;              // ||fhat - fdagger||_n
    double fdagger_error = 0.0;     // ||fdagger - fstar||_n
    double w_infnorm = 0.0;         // max_i |y_i - fstar_i|
    double h_term = 0.0;            // (3r + fdagger_error) * (2 * w_infnorm * t / sqrt(n))
    double pilot_error = 0.0;       // ball-sup of the pilot mismatch at radius 2r
    double t = 0.0;
    double r = 0.0;
    SampleVector fdagger;
};

/// Runs one wild replicate per rho on an ascending grid, reusing the same
/// sign vector and residuals throughout (both are pure functions of the seed
/// and the pilot, so each replicate regenerates them identically). A fit
/// failure is rethrown as MethodError annotated with the offending rho.
std::vector<RhoSweepPoint> rho_sweep(const PredictorMethod& m, const SampleVector& y,
                                     const SampleVector& fhat, std::uint64_t seed,
                                     const std::vector<double>& rho_grid,
                                     const std::optional<SampleVector>& pilot = std::nullopt);

/// Finds rho such that the wild radius equals target_r to within tol, by
/// bisection on [0, rho_max] under the monotone-radius assumption. When
/// rho_max is too small it is doubled, up to 2^20 times the original, before
/// a NumericError("unreachable calibration target ...") is thrown. Pass
/// `info` to receive the achieved radius, fit-call count, and warning flags.
double calibrate_rho(const PredictorMethod& m, const SampleVector& y,
                     const SampleVector& fhat, std::uint64_t seed, double target_r,
                     double tol, double rho_max,
                     const std::optional<SampleVector>& pilot = std::nullopt,
                     CalibrationInfo* info = nullptr);

/// The wild complexity at radius r: calibrates rho so the wild radius hits r,
/// then returns that replicate's wild optimism (the two quantities agree at
/// the replicate's own radius, which is what makes the calibration the right
/// evaluation mechanism).
double wild_complexity_at(const PredictorMethod& m, const SampleVector& y,
                          const SampleVector& fhat, std::uint64_t seed, double r,
                          double tol, double rho_max,
                          const std::optional<SampleVector>& pilot = std::nullopt,
                          CalibrationInfo* info = nullptr);

/// Locates the first sign change of b1 - b2 along the sweep and refines it by
/// linear interpolation in rho. Requires at least two points with defined b2.
CrossingResult find_crossing(const std::vector<RhoSweepPoint>& sweep);

/// The optimism-based MSE upper bound at a single rho:
/// max(0, ||y - fhat||_n^2 - ||residuals||_n^2) + 2 * wild optimism, where the
/// residuals are taken against `pilot` (default: the base fit, which makes the
/// first term identically zero). The wild responses stay centered at the base
/// fit regardless of the pilot. Returns the bound together with the replicate
/// that produced it.
std::pair<double, WildReplicate> mse_upper_bound(
    const PredictorMethod& m, const SampleVector& y, const SampleVector& fhat,
    std::uint64_t seed, double rho, const std::optional<SampleVector>& pilot = std::nullopt);

/// Outcome of one candidate in model selection: either a bound or the error
/// that disqualified it.
struct CandidateOutcome {
    std::string label;
    std::optional<double> mse_bound;
    std::string error;
};

struct ModelSelection {
    std::string selected_label;
    std::vector<CandidateOutcome> outcomes;
};

/// Fits every candidate, computes each one's mse_upper_bound with the shared
/// sign vector implied by `seed`, and returns the label attaining the
/// smallest bound (ties break toward the earliest candidate). Candidates
/// whose fit fails are excluded with the error recorded; if all fail, a
/// MethodError aggregating the messages is thrown.
ModelSelection model_select(const std::vector<PredictorMethod>& candidates,
                            const SampleVector& y, std::uint64_t seed, double rho);

/// Convenience assembly of sweep + crossing + MSE bound at the crossing rho.
RiskReport assess_risk(const PredictorMethod& m, const SampleVector& y,
                       const SampleVector& fhat, std::uint64_t seed,
                       const std::vector<double>& rho_grid);

/// Simulation-only diagnostics against a known noiseless response vector.
/// `pilot` defaults to the base fit. `r` is the radius at which the
/// deviation term and the pilot mismatch term are evaluated; the pilot
/// mismatch reuses the wild machinery with pseudo-residuals
/// d_i = pilot_i - fstar_i calibrated to radius 2r (saturating at the
/// largest reachable radius when the method cannot move that far).
OracleDiagnostics oracle_diagnostics(const PredictorMethod& m, const SampleVector& y,
                                     const SampleVector& fhat, const SampleVector& fstar,
                                     std::uint64_t seed, double t, double r,
                                     const std::optional<SampleVector>& pilot = std::nullopt);

} // namespace wildrefit
