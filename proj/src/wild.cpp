#include "wildrefit/wild.hpp"

#include <cmath>

#include "wildrefit/detail/mix.hpp"

namespace wildrefit {

using detail::mix64;

SampleVector compute_residuals(const SampleVector& y, const SampleVector& pilot) {
    if (y.empty()) throw std::invalid_argument("compute_residuals: empty responses");
    if (y.size() != pilot.size())
        throw std::invalid_argument("compute_residuals: length mismatch (" +
                                    std::to_string(y.size()) + " vs " +
                                    std::to_string(pilot.size()) + ")");
    SampleVector w(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) w[i] = y[i] - pilot[i];
    return w;
}

SignVector draw_signs(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("draw_signs: n must be positive");
    SignVector s(n);
    const std::uint64_t stream = mix64(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t h = mix64(stream ^ (static_cast<std::uint64_t>(i) + 1));
        s[i] = (h >> 63) ? static_cast<std::int8_t>(1) : static_cast<std::int8_t>(-1);
    }
    return s;
}

SampleVector wild_responses(const SampleVector& fhat, const SampleVector& residuals,
                            const SignVector& signs, double rho) {
    if (!(rho > 0.0) || !std::isfinite(rho))
        throw std::invalid_argument("wild_responses: rho must be positive and finite");
    if (fhat.empty()) throw std::invalid_argument("wild_responses: empty fitted values");
    if (fhat.size() != residuals.size() || fhat.size() != signs.size())
        throw std::invalid_argument("wild_responses: length mismatch");
    SampleVector out(fhat.size());
    for (std::size_t i = 0; i < fhat.size(); ++i)
        out[i] = fhat[i] + rho * static_cast<double>(signs[i]) * residuals[i];
    return out;
}

double wild_optimism(const SignVector& signs, const SampleVector& residuals,
                     const SampleVector& fwild, const SampleVector& fhat) {
    const std::size_t n = signs.size();
    if (n == 0) throw std::invalid_argument("wild_optimism: empty inputs");
    if (residuals.size() != n || fwild.size() != n || fhat.size() != n)
        throw std::invalid_argument("wild_optimism: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        s += static_cast<double>(signs[i]) * residuals[i] * (fwild[i] - fhat[i]);
    return s / static_cast<double>(n);
}

WildReplicate run_wild_replicate_with_residuals(const PredictorMethod& m,
                                                const SampleVector& fhat,
                                                const SampleVector& residuals,
                                                const SignVector& signs, double rho,
                                                std::uint64_t seed) {
    WildReplicate rep;
    rep.residuals = residuals;
    rep.signs = signs;
    rep.rho = rho;
    rep.seed = seed;
    rep.wild_responses = wild_responses(fhat, residuals, signs, rho);
    rep.wild_fit = apply_method(m, rep.wild_responses);
    SampleVector displacement(fhat.size());
    for (std::size_t i = 0; i < fhat.size(); ++i)
        displacement[i] = rep.wild_fit[i] - fhat[i];
    rep.wild_radius = emp_norm(displacement);
    rep.wild_optimism = wild_optimism(signs, residuals, rep.wild_fit, fhat);
    return rep;
}

WildReplicate run_wild_replicate(const PredictorMethod& m, const SampleVector& y,
                                 const SampleVector& fhat, const WildConfig& cfg) {
    const SampleVector& pilot = cfg.pilot ? *cfg.pilot : fhat;
    if (cfg.pilot && cfg.pilot->size() != y.size())
        throw std::invalid_argument("run_wild_replicate: pilot length mismatch");
    const SampleVector residuals = compute_residuals(y, pilot);
    const SignVector signs = draw_signs(y.size(), cfg.seed);
    return run_wild_replicate_with_residuals(m, fhat, residuals, signs, cfg.rho, cfg.seed);
}

} // namespace wildrefit
