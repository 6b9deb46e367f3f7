#pragma once

#include <cstdint>
#include <optional>

#include "wildrefit/core.hpp"

namespace wildrefit {

/// Symmetric random signs, one per design point; every entry is exactly +1
/// or -1.
using SignVector = std::vector<std::int8_t>;

/// Configuration of one wild replicate.
///
/// `pilot` is the vector of fitted values whose residuals get perturbed.
/// When absent, the replicate recenters at the base fit itself (the default
/// and the usual choice); an explicit pilot supports closed-form cross-checks
/// and diagnostics that probe directions other than the base residuals.
struct WildConfig {
    double rho = 1.0;
    std::uint64_t seed = 0;
    std::optional<SampleVector> pilot;
};

/// Everything produced by one wild replicate. `wild_radius` is the empirical
/// distance between the refit and the base fit; `wild_optimism` is the
/// sign-weighted residual correlation of the refit's displacement.
struct WildReplicate {
    SampleVector residuals;
    SignVector signs;
    SampleVector wild_responses;
    SampleVector wild_fit;
    double wild_radius = 0.0;
    double wild_optimism = 0.0;
    double rho = 0.0;
    std::uint64_t seed = 0;
};

/// residuals_i = y_i - pilot_i. Lengths must match.
SampleVector compute_residuals(const SampleVector& y, const SampleVector& pilot);

/// Deterministic sign stream: entry i depends only on (seed, i), via an
/// integer mixing function, so the same (seed, n) always reproduces the same
/// vector and prefixes agree across different n. Distinct seeds give
/// effectively independent streams.
SignVector draw_signs(std::size_t n, std::uint64_t seed);

/// Synthetic responses: out_i = fhat_i + rho * signs_i * residuals_i.
/// Requires rho > 0 and matching lengths.
SampleVector wild_responses(const SampleVector& fhat, const SampleVector& residuals,
                            const SignVector& signs, double rho);

/// (1/n) * sum_i signs_i * residuals_i * (fwild_i - fhat_i).
double wild_optimism(const SignVector& signs, const SampleVector& residuals,
                     const SampleVector& fwild, const SampleVector& fhat);

/// Runs one full wild replicate: residuals against the pilot (f̂ itself by
/// default), one fresh sign vector from cfg.seed, synthetic responses at
/// cfg.rho, and exactly one call to m.fit. The returned struct carries every
/// intermediate so callers can audit or reuse them.
WildReplicate run_wild_replicate(const PredictorMethod& m, const SampleVector& y,
                                 const SampleVector& fhat, const WildConfig& cfg);

/// Same as run_wild_replicate but with the residual vector supplied directly
/// instead of derived from responses. This is the shared core: diagnostics
/// re-run the procedure with pseudo-residuals that never came from any y.
WildReplicate run_wild_replicate_with_residuals(const PredictorMethod& m,
                                                const SampleVector& fhat,
                                                const SampleVector& residuals,
                                                const SignVector& signs, double rho,
                                                std::uint64_t seed);

} // namespace wildrefit
