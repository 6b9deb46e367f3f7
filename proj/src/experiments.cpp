#include "wildrefit/experiments.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "wildrefit/detail/mix.hpp"
#include "wildrefit/wild.hpp"

namespace wildrefit {

namespace {

using nlohmann::json;

std::vector<double> logspace(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) /
                                    static_cast<double>(count - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
    std::vector<std::uint64_t> seeds(count);
    for (std::size_t i = 0; i < count; ++i) seeds[i] = first + i;
    return seeds;
}

// Fan a trial loop out over a worker pool; results land in caller-owned
// slots indexed by trial, so the merged output is independent of scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

SampleVector add(const SampleVector& a, const SampleVector& b) {
    SampleVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

double sq_emp_dist(const SampleVector& a, const SampleVector& b) {
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        ss += d * d;
    }
    return ss / static_cast<double>(a.size());
}

std::string format_u64(std::uint64_t v) { return std::to_string(v); }

std::string format_bool(bool v) { return v ? "true" : "false"; }

SignalSpec signal_spec(const ExperimentConfig& cfg, double gamma) {
    SignalSpec s;
    s.n = cfg.n;
    s.gamma = gamma;
    s.levels = cfg.levels;
    s.breakpoints = cfg.breakpoints;
    return s;
}

// The smoothing family used by sweep/oracle/denoise1d, resolved by name.
PredictorMethod family_method(const ExperimentConfig& cfg, double lambda_override = -1.0) {
    if (cfg.predictor == "tikhonov") {
        PredictorMethod m =
            tikhonov_method(lambda_override >= 0.0 ? lambda_override : cfg.tik_lambda);
        m.name = "tikhonov";
        return m;
    }
    if (cfg.predictor == "tv") {
        PredictorMethod m = tv_method(lambda_override >= 0.0 ? lambda_override : cfg.tv_lambda);
        m.name = "tv";
        return m;
    }
    if (cfg.predictor == "tikhonov_ball") {
        PredictorMethod m = smoothness_ball_method(cfg.tik_radius);
        m.name = "tikhonov_ball";
        return m;
    }
    if (cfg.predictor == "tv_ball") {
        PredictorMethod m = tv_ball_method(cfg.tv_radius);
        m.name = "tv_ball";
        return m;
    }
    if (cfg.predictor == "identity") return identity_method();
    if (cfg.predictor == "constants") return constant_method();
    if (cfg.predictor == "monotone") return projection_predictor(MonotoneConeSpec{});
    throw ConfigError("unknown predictor family '" + cfg.predictor + "'");
}

// ---------------------------------------------------------------------------
// tiktv
// ---------------------------------------------------------------------------

RunResult run_tiktv(const ExperimentConfig& cfg) {
    RunResult result;
    result.csv_name = "tiktv.csv";
    result.table.header = {"experiment", "seed",      "gamma",    "rho",
                           "predictor",  "r_tilde",   "wild_optimism", "mse_bound",
                           "true_mse",   "oracle_label", "selected_label"};

    std::vector<std::vector<std::vector<std::string>>> blocks(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), [&](std::size_t si) {
        const std::uint64_t seed = cfg.seeds[si];
        const SampleVector noise =
            draw_noise(to_noise_spec(cfg.noise, derived_seed(seed, 1)), cfg.n);
        auto& rows = blocks[si];
        for (double gamma : cfg.gamma_grid) {
            const SampleVector fstar = make_signal(signal_spec(cfg, gamma));
            const SampleVector y = add(fstar, noise);

            PredictorMethod tik = tikhonov_method(cfg.tik_lambda);
            tik.name = "tikhonov";
            PredictorMethod tv = tv_method(cfg.tv_lambda);
            tv.name = "tv";
            const std::vector<PredictorMethod> candidates{tik, tv};

            std::vector<SampleVector> fits;
            std::vector<double> true_mse;
            for (const auto& cand : candidates) {
                fits.push_back(apply_method(cand, y));
                true_mse.push_back(sq_emp_dist(fits.back(), fstar));
            }
            const std::string oracle_label =
                (true_mse[0] <= true_mse[1]) ? candidates[0].name : candidates[1].name;

            for (double rho : cfg.rho_grid) {
                const ModelSelection sel = model_select(candidates, y, seed, rho);
                for (std::size_t c = 0; c < candidates.size(); ++c) {
                    auto [bound, rep] = mse_upper_bound(candidates[c], y, fits[c], seed, rho);
                    rows.push_back({cfg.experiment, format_u64(seed), format_double(gamma),
                                    format_double(rho), candidates[c].name,
                                    format_double(rep.wild_radius),
                                    format_double(rep.wild_optimism), format_double(bound),
                                    format_double(true_mse[c]), oracle_label,
                                    sel.selected_label});
                }
            }
        }
    });
    for (auto& block : blocks)
        for (auto& row : block) result.table.rows.push_back(std::move(row));
    return result;
}

// ---------------------------------------------------------------------------
// nrsfm
// ---------------------------------------------------------------------------

RunResult run_nrsfm(const ExperimentConfig& cfg) {
    RunResult result;
    result.csv_name = "nrsfm.csv";
    result.table.header = {"experiment", "seed",      "radius",        "rho",
                           "r_tilde",    "wild_optimism", "mse_bound", "true_mse",
                           "oracle_radius", "selected_radius"};

    std::vector<std::vector<std::vector<std::string>>> blocks(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), [&](std::size_t si) {
        const std::uint64_t seed = cfg.seeds[si];
        const NrsfmScene scene = make_nrsfm_scene(cfg.frames, cfg.points, cfg.rank,
                                                  cfg.scene_sigma, derived_seed(seed, 2));
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(scene.shape_star);
        const double nuc_star = svd.singularValues().sum();
        const SampleVector y = flatten(scene.observations);
        const SampleVector fstar_vals = flatten(scene.cameras.apply(scene.shape_star));

        const std::size_t nr = cfg.radius_factors.size();
        std::vector<double> radii(nr);
        for (std::size_t i = 0; i < nr; ++i) radii[i] = cfg.radius_factors[i] * nuc_star;

        // A fixed reference pilot at a binding radius keeps the bound honest
        // at large candidate radii, where the fit interpolates and its own
        // residuals vanish.
        std::optional<SampleVector> pilot;
        if (cfg.pilot == "reference") {
            NuclearBallParams pparams;
            pparams.radius = cfg.pilot_radius_factor * nuc_star;
            pparams.max_iters = cfg.nuclear_max_iters;
            pparams.tol = cfg.nuclear_tol;
            pilot = apply_method(nuclear_ball_method(scene.cameras, cfg.points, pparams), y);
        }

        std::vector<SampleVector> fits(nr);
        std::vector<double> true_mse(nr);
        // bound/radius/optimism per (radius, rho)
        std::vector<std::vector<double>> bound(nr), r_tilde(nr), optimism(nr);
        for (std::size_t ri = 0; ri < nr; ++ri) {
            NuclearBallParams params;
            params.radius = radii[ri];
            params.max_iters = cfg.nuclear_max_iters;
            params.tol = cfg.nuclear_tol;
            const PredictorMethod m = nuclear_ball_method(scene.cameras, cfg.points, params);
            fits[ri] = apply_method(m, y);
            true_mse[ri] = sq_emp_dist(fits[ri], fstar_vals);
            for (double rho : cfg.rho_grid) {
                auto [b, rep] = mse_upper_bound(m, y, fits[ri], seed, rho, pilot);
                bound[ri].push_back(b);
                r_tilde[ri].push_back(rep.wild_radius);
                optimism[ri].push_back(rep.wild_optimism);
            }
        }

        std::size_t oracle_idx = 0;
        for (std::size_t ri = 1; ri < nr; ++ri)
            if (true_mse[ri] < true_mse[oracle_idx]) oracle_idx = ri;
        std::vector<std::size_t> selected_idx(cfg.rho_grid.size(), 0);
        for (std::size_t pi = 0; pi < cfg.rho_grid.size(); ++pi)
            for (std::size_t ri = 1; ri < nr; ++ri)
                if (bound[ri][pi] < bound[selected_idx[pi]][pi]) selected_idx[pi] = ri;

        auto& rows = blocks[si];
        for (std::size_t ri = 0; ri < nr; ++ri)
            for (std::size_t pi = 0; pi < cfg.rho_grid.size(); ++pi)
                rows.push_back({cfg.experiment, format_u64(seed), format_double(radii[ri]),
                                format_double(cfg.rho_grid[pi]), format_double(r_tilde[ri][pi]),
                                format_double(optimism[ri][pi]), format_double(bound[ri][pi]),
                                format_double(true_mse[ri]), format_double(radii[oracle_idx]),
                                format_double(radii[selected_idx[pi]])});
    });
    for (auto& block : blocks)
        for (auto& row : block) result.table.rows.push_back(std::move(row));
    return result;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

RunResult run_sweep(const ExperimentConfig& cfg) {
    RunResult result;
    result.csv_name = "sweep.csv";
    result.summary_name = "sweep_summary.csv";
    result.has_summary = true;
    result.table.header = {"experiment", "seed", "rho", "r_tilde", "w_complexity", "b1", "b2"};
    result.summary.header = {"experiment", "seed",     "rho_star", "r_bound",
                             "no_crossing", "rhat",    "covered"};

    std::vector<std::vector<std::vector<std::string>>> blocks(cfg.seeds.size());
    std::vector<std::vector<std::string>> summaries(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), [&](std::size_t si) {
        const std::uint64_t seed = cfg.seeds[si];
        const SampleVector fstar = make_signal(signal_spec(cfg, cfg.gamma));
        const SampleVector noise =
            draw_noise(to_noise_spec(cfg.noise, derived_seed(seed, 1)), cfg.n);
        const SampleVector y = add(fstar, noise);
        const PredictorMethod m = family_method(cfg);
        const SampleVector fhat = apply_method(m, y);

        std::optional<SampleVector> pilot;
        if (cfg.pilot == "fstar") pilot = fstar;
        const std::vector<RhoSweepPoint> sweep =
            rho_sweep(m, y, fhat, seed, cfg.rho_grid, pilot);
        const CrossingResult cross = find_crossing(sweep);
        const SampleVector fdagger = apply_method(m, fstar);
        const double rhat = std::sqrt(sq_emp_dist(fhat, fdagger));

        auto& rows = blocks[si];
        for (const auto& pt : sweep)
            rows.push_back({cfg.experiment, format_u64(seed), format_double(pt.rho),
                            format_double(pt.r_tilde), format_double(pt.w_complexity),
                            format_double(pt.b1), pt.b2 ? format_double(*pt.b2) : "null"});
        summaries[si] = {cfg.experiment,
                         format_u64(seed),
                         format_double(cross.rho_star),
                         format_double(cross.r_bound),
                         format_bool(cross.no_crossing),
                         format_double(rhat),
                         format_bool(cross.r_bound >= rhat)};
    });
    for (auto& block : blocks)
        for (auto& row : block) result.table.rows.push_back(std::move(row));
    for (auto& row : summaries) result.summary.rows.push_back(std::move(row));
    return result;
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

RunResult run_oracle(const ExperimentConfig& cfg) {
    RunResult result;
    result.csv_name = "oracle.csv";
    result.table.header = {"experiment", "seed",        "true_mse", "empirical_excess",
                           "opt_star",   "rhat",        "fdagger_error", "w_infnorm",
                           "r",          "rho_star",    "no_crossing",   "wild_optimism_2r",
                           "h_term",     "pilot_error", "t",             "holds"};

    std::vector<std::vector<std::string>> rows(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), [&](std::size_t si) {
        const std::uint64_t seed = cfg.seeds[si];
        const SampleVector fstar = make_signal(signal_spec(cfg, cfg.gamma));
        const SampleVector noise =
            draw_noise(to_noise_spec(cfg.noise, derived_seed(seed, 1)), cfg.n);
        const SampleVector y = add(fstar, noise);
        const PredictorMethod m = family_method(cfg);
        const SampleVector fhat = apply_method(m, y);

        const std::vector<RhoSweepPoint> sweep = rho_sweep(m, y, fhat, seed, cfg.rho_grid);
        const CrossingResult cross = find_crossing(sweep);
        const double r = cross.r_bound;

        std::optional<SampleVector> pilot;
        if (cfg.pilot == "fstar") pilot = fstar;
        const OracleDiagnostics diag =
            oracle_diagnostics(m, y, fhat, fstar, seed, cfg.t, r, pilot);

        const double target = 2.0 * r;
        const double tol = 1e-6 * target + 1e-15;
        const double w2r = wild_complexity_at(m, y, fhat, seed, target, tol, 8.0);
        const bool holds = diag.true_optimism <= w2r + diag.h_term + diag.pilot_error;

        rows[si] = {cfg.experiment,
                    format_u64(seed),
                    format_double(diag.true_mse),
                    format_double(diag.empirical_excess),
                    format_double(diag.true_optimism),
                    format_double(diag.rhat),
                    format_double(diag.fdagger_error),
                    format_double(diag.w_infnorm),
                    format_double(r),
                    format_double(cross.rho_star),
                    format_bool(cross.no_crossing),
                    format_double(w2r),
                    format_double(diag.h_term),
                    format_double(diag.pilot_error),
                    format_double(diag.t),
                    format_bool(holds)};
    });
    for (auto& row : rows) result.table.rows.push_back(std::move(row));
    return result;
}

// ---------------------------------------------------------------------------
// denoise1d
// ---------------------------------------------------------------------------

RunResult run_denoise1d(const ExperimentConfig& cfg) {
    RunResult result;
    result.csv_name = "denoise1d.csv";
    result.table.header = {"experiment", "seed",      "lambda",        "rho",
                           "r_tilde",    "wild_optimism", "mse_bound", "true_mse",
                           "covered",    "oracle_lambda", "selected_lambda",
                           "covered_at_selected"};

    std::vector<std::vector<std::vector<std::string>>> blocks(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), [&](std::size_t si) {
        const std::uint64_t seed = cfg.seeds[si];
        const SampleVector fstar = make_signal(signal_spec(cfg, cfg.gamma));
        const SampleVector noise =
            draw_noise(to_noise_spec(cfg.noise, derived_seed(seed, 1)), cfg.n);
        const SampleVector y = add(fstar, noise);

        // A fixed reference pilot shared across the candidate grid keeps the
        // bound honest at near-interpolating candidates (whose own residuals
        // vanish, which would otherwise zero out the bound).
        std::optional<SampleVector> pilot;
        if (cfg.pilot == "reference")
            pilot = apply_method(family_method(cfg, cfg.pilot_lambda), y);

        const std::size_t nl = cfg.lambda_grid.size();
        std::vector<SampleVector> fits(nl);
        std::vector<double> true_mse(nl);
        std::vector<PredictorMethod> methods;
        methods.reserve(nl);
        for (std::size_t li = 0; li < nl; ++li) {
            methods.push_back(family_method(cfg, cfg.lambda_grid[li]));
            fits[li] = apply_method(methods[li], y);
            true_mse[li] = sq_emp_dist(fits[li], fstar);
        }
        std::size_t oracle_idx = 0;
        for (std::size_t li = 1; li < nl; ++li)
            if (true_mse[li] < true_mse[oracle_idx]) oracle_idx = li;

        std::vector<std::vector<double>> bound(nl), r_tilde(nl), optimism(nl);
        for (std::size_t li = 0; li < nl; ++li)
            for (double rho : cfg.rho_grid) {
                auto [b, rep] = mse_upper_bound(methods[li], y, fits[li], seed, rho, pilot);
                bound[li].push_back(b);
                r_tilde[li].push_back(rep.wild_radius);
                optimism[li].push_back(rep.wild_optimism);
            }
        std::vector<std::size_t> selected_idx(cfg.rho_grid.size(), 0);
        for (std::size_t pi = 0; pi < cfg.rho_grid.size(); ++pi)
            for (std::size_t li = 1; li < nl; ++li)
                if (bound[li][pi] < bound[selected_idx[pi]][pi]) selected_idx[pi] = li;

        auto& rows = blocks[si];
        for (std::size_t li = 0; li < nl; ++li)
            for (std::size_t pi = 0; pi < cfg.rho_grid.size(); ++pi) {
                const std::size_t sel = selected_idx[pi];
                rows.push_back({cfg.experiment, format_u64(seed),
                                format_double(cfg.lambda_grid[li]),
                                format_double(cfg.rho_grid[pi]),
                                format_double(r_tilde[li][pi]),
                                format_double(optimism[li][pi]), format_double(bound[li][pi]),
                                format_double(true_mse[li]),
                                format_bool(bound[li][pi] >= true_mse[li]),
                                format_double(cfg.lambda_grid[oracle_idx]),
                                format_double(cfg.lambda_grid[sel]),
                                format_bool(bound[sel][pi] >= true_mse[sel])});
            }
    });
    for (auto& block : blocks)
        for (auto& row : block) result.table.rows.push_back(std::move(row));
    return result;
}

// ---------------------------------------------------------------------------
// Config plumbing
// ---------------------------------------------------------------------------

void check_known_keys(const json& obj, const std::vector<std::string>& known,
                      const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const auto& k : known)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
void read_to(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

} // namespace

std::uint64_t derived_seed(std::uint64_t trial_seed, std::uint64_t tag) {
    return detail::mix64(detail::mix64(trial_seed) ^ (tag * 0xd1342543de82ef95ULL));
}

NoiseSpec to_noise_spec(const NoiseConfig& cfg, std::uint64_t seed) {
    NoiseSpec spec;
    spec.seed = seed;
    if (cfg.variant == "gaussian")
        spec.variant = GaussianNoise{cfg.sigma};
    else if (cfg.variant == "student_t")
        spec.variant = StudentTNoise{cfg.dof, cfg.scale};
    else if (cfg.variant == "hetero_band")
        spec.variant = HeteroBandNoise{cfg.sigma0, cfg.sigma1, cfg.band};
    else
        throw ConfigError("unknown noise variant '" + cfg.variant + "'");
    return spec;
}

std::vector<double> default_rho_grid() { return logspace(0.25, 8.0, 24); }

ExperimentConfig default_config(const std::string& experiment) {
    ExperimentConfig cfg;
    cfg.experiment = experiment;
    cfg.seeds = seed_range(1, 20);
    if (experiment == "tiktv") {
        cfg.gamma_grid = {0.0, 0.01, 0.02, 0.04, 0.08};
        cfg.rho_grid = {1.0, 1.2, 1.4};
    } else if (experiment == "nrsfm") {
        cfg.rho_grid = {1.0, 1.1, 1.2};
        cfg.radius_factors = logspace(0.25, 4.0, 9);
        cfg.pilot = "reference";
    } else if (experiment == "sweep" || experiment == "oracle") {
        cfg.rho_grid = default_rho_grid();
        cfg.tik_lambda = 0.01;
    } else if (experiment == "denoise1d") {
        cfg.rho_grid = {1.0, 1.15, 1.30};
        cfg.lambda_grid = logspace(1e-3, 0.5, 9);
        cfg.pilot = "reference";
    } else {
        throw ConfigError("unknown experiment '" + experiment + "'");
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& json_text, const std::string& experiment) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");

    std::string exp_name = experiment;
    if (doc.contains("experiment")) {
        const std::string from_doc = doc.at("experiment").get<std::string>();
        if (!exp_name.empty() && from_doc != exp_name)
            throw ConfigError("config is for experiment '" + from_doc +
                              "' but the command requested '" + exp_name + "'");
        exp_name = from_doc;
    }
    if (exp_name.empty()) throw ConfigError("no experiment named in config or command");

    ExperimentConfig cfg = default_config(exp_name);

    check_known_keys(doc, {"experiment",     "seeds",        "seed_count",    "first_seed",
                           "out",            "t",            "n",             "levels",
                           "breakpoints",    "gamma",        "gamma_grid",    "noise",
                           "tik_lambda",     "tv_lambda",    "rho_grid",      "predictor",
                           "pilot",          "lambda_grid",  "pilot_lambda",  "tik_radius",
                           "tv_radius",      "frames",       "points",        "rank",
                           "scene_sigma",    "radius_factors", "pilot_radius_factor",
                           "nuclear_max_iters", "nuclear_tol"},
                     "config");

    if (doc.contains("seeds")) {
        cfg.seeds.clear();
        read_to(doc, "seeds", cfg.seeds);
        if (doc.contains("seed_count") || doc.contains("first_seed"))
            throw ConfigError("give either 'seeds' or 'seed_count'/'first_seed', not both");
    } else if (doc.contains("seed_count") || doc.contains("first_seed")) {
        std::uint64_t first = 1;
        std::size_t count = cfg.seeds.size();
        read_to(doc, "first_seed", first);
        read_to(doc, "seed_count", count);
        cfg.seeds = seed_range(first, count);
    }

    read_to(doc, "out", cfg.out_dir);
    read_to(doc, "t", cfg.t);
    read_to(doc, "n", cfg.n);
    read_to(doc, "levels", cfg.levels);
    read_to(doc, "breakpoints", cfg.breakpoints);
    read_to(doc, "gamma", cfg.gamma);
    read_to(doc, "gamma_grid", cfg.gamma_grid);
    read_to(doc, "tik_lambda", cfg.tik_lambda);
    read_to(doc, "tv_lambda", cfg.tv_lambda);
    read_to(doc, "rho_grid", cfg.rho_grid);
    read_to(doc, "predictor", cfg.predictor);
    read_to(doc, "pilot", cfg.pilot);
    read_to(doc, "lambda_grid", cfg.lambda_grid);
    read_to(doc, "pilot_lambda", cfg.pilot_lambda);
    read_to(doc, "tik_radius", cfg.tik_radius);
    read_to(doc, "tv_radius", cfg.tv_radius);
    read_to(doc, "frames", cfg.frames);
    read_to(doc, "points", cfg.points);
    read_to(doc, "rank", cfg.rank);
    read_to(doc, "scene_sigma", cfg.scene_sigma);
    read_to(doc, "radius_factors", cfg.radius_factors);
    read_to(doc, "pilot_radius_factor", cfg.pilot_radius_factor);
    read_to(doc, "nuclear_max_iters", cfg.nuclear_max_iters);
    read_to(doc, "nuclear_tol", cfg.nuclear_tol);

    if (doc.contains("noise")) {
        const json& nz = doc.at("noise");
        if (!nz.is_object()) throw ConfigError("'noise' must be an object");
        check_known_keys(nz, {"variant", "sigma", "dof", "scale", "sigma0", "sigma1", "band"},
                         "noise");
        read_to(nz, "variant", cfg.noise.variant);
        read_to(nz, "sigma", cfg.noise.sigma);
        read_to(nz, "dof", cfg.noise.dof);
        read_to(nz, "scale", cfg.noise.scale);
        read_to(nz, "sigma0", cfg.noise.sigma0);
        read_to(nz, "sigma1", cfg.noise.sigma1);
        read_to(nz, "band", cfg.noise.band);
    }
    return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
    static const std::vector<std::string> experiments{"tiktv", "nrsfm", "sweep", "oracle",
                                                      "denoise1d"};
    bool known = false;
    for (const auto& e : experiments) known = known || (e == cfg.experiment);
    if (!known) throw ConfigError("unknown experiment '" + cfg.experiment + "'");
    if (cfg.seeds.empty()) throw ConfigError("seed list must be nonempty");
    if (!(cfg.t >= 0.0) || !std::isfinite(cfg.t)) throw ConfigError("t must be >= 0 and finite");

    auto check_grid = [](const std::vector<double>& grid, const char* name,
                         bool require_ascending) {
        if (grid.empty()) throw ConfigError(std::string(name) + " must be nonempty");
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!std::isfinite(grid[i]) || grid[i] < 0.0)
                throw ConfigError(std::string(name) + " entries must be finite and >= 0");
            if (require_ascending && i > 0 && grid[i] <= grid[i - 1])
                throw ConfigError(std::string(name) + " must be strictly ascending");
        }
    };

    if (cfg.experiment != "nrsfm") {
        if (cfg.n < 3) throw ConfigError("n must be at least 3");
        if (!(cfg.tik_lambda >= 0.0) || !(cfg.tv_lambda >= 0.0) ||
            !std::isfinite(cfg.tik_lambda) || !std::isfinite(cfg.tv_lambda))
            throw ConfigError("lambdas must be >= 0 and finite");
        const double b1 = cfg.breakpoints[0], b2 = cfg.breakpoints[1];
        if (!(0.0 < b1 && b1 < b2 && b2 < 1.0))
            throw ConfigError("breakpoints must satisfy 0 < b1 < b2 < 1");
        if (!(cfg.gamma >= 0.0) || !std::isfinite(cfg.gamma))
            throw ConfigError("gamma must be >= 0 and finite");
        if (cfg.noise.variant == "gaussian") {
            if (!(cfg.noise.sigma >= 0.0) || !std::isfinite(cfg.noise.sigma))
                throw ConfigError("noise.sigma must be >= 0 and finite");
        } else if (cfg.noise.variant == "student_t") {
            if (!(cfg.noise.dof > 2.0) || !std::isfinite(cfg.noise.dof))
                throw ConfigError("noise.dof must exceed 2 for a finite variance");
            if (!(cfg.noise.scale >= 0.0) || !std::isfinite(cfg.noise.scale))
                throw ConfigError("noise.scale must be >= 0 and finite");
        } else if (cfg.noise.variant == "hetero_band") {
            if (!(cfg.noise.sigma0 >= 0.0) || !(cfg.noise.sigma1 >= 0.0))
                throw ConfigError("noise.sigma0/sigma1 must be >= 0");
            if (!(0.0 <= cfg.noise.band[0] && cfg.noise.band[0] <= cfg.noise.band[1] &&
                  cfg.noise.band[1] <= 1.0))
                throw ConfigError("noise.band must satisfy 0 <= lo <= hi <= 1");
        } else {
            throw ConfigError("unknown noise variant '" + cfg.noise.variant + "'");
        }
    }

    check_grid(cfg.rho_grid, "rho_grid", true);
    for (double rho : cfg.rho_grid)
        if (!(rho > 0.0)) throw ConfigError("rho_grid entries must be positive");

    if (cfg.experiment == "tiktv") {
        check_grid(cfg.gamma_grid, "gamma_grid", true);
        if (cfg.pilot != "fhat")
            throw ConfigError("tiktv always uses the base fit as pilot; pilot must be 'fhat'");
    }
    if (cfg.experiment == "denoise1d") {
        check_grid(cfg.lambda_grid, "lambda_grid", true);
        if (cfg.predictor != "tikhonov" && cfg.predictor != "tv")
            throw ConfigError("denoise1d predictor must be 'tikhonov' or 'tv'");
        if (cfg.pilot != "fhat" && cfg.pilot != "reference")
            throw ConfigError("denoise1d pilot must be 'fhat' or 'reference'");
        if (!(cfg.pilot_lambda >= 0.0) || !std::isfinite(cfg.pilot_lambda))
            throw ConfigError("pilot_lambda must be >= 0 and finite");
    }
    if (cfg.experiment == "sweep" || cfg.experiment == "oracle") {
        static const std::vector<std::string> families{
            "tikhonov", "tv", "tikhonov_ball", "tv_ball", "identity", "constants", "monotone"};
        bool found = false;
        for (const auto& f : families) found = found || (f == cfg.predictor);
        if (!found) throw ConfigError("unknown predictor family '" + cfg.predictor + "'");
        if (cfg.predictor == "tikhonov_ball" &&
            (!(cfg.tik_radius > 0.0) || !std::isfinite(cfg.tik_radius)))
            throw ConfigError("tik_radius must be positive and finite");
        if (cfg.predictor == "tv_ball" &&
            (!(cfg.tv_radius > 0.0) || !std::isfinite(cfg.tv_radius)))
            throw ConfigError("tv_radius must be positive and finite");
        if (cfg.pilot != "fhat" && cfg.pilot != "fstar")
            throw ConfigError("pilot must be 'fhat' or 'fstar'");
    }
    if (cfg.experiment == "nrsfm") {
        if (cfg.pilot != "fhat" && cfg.pilot != "reference")
            throw ConfigError("nrsfm pilot must be 'fhat' or 'reference'");
        if (!(cfg.pilot_radius_factor > 0.0) || !std::isfinite(cfg.pilot_radius_factor))
            throw ConfigError("pilot_radius_factor must be positive and finite");
        if (cfg.frames == 0 || cfg.points == 0) throw ConfigError("frames/points must be positive");
        if (cfg.rank <= 0) throw ConfigError("rank must be positive");
        if (!(cfg.scene_sigma >= 0.0) || !std::isfinite(cfg.scene_sigma))
            throw ConfigError("scene_sigma must be >= 0 and finite");
        check_grid(cfg.radius_factors, "radius_factors", true);
        if (cfg.nuclear_max_iters <= 0) throw ConfigError("nuclear_max_iters must be positive");
        if (!(cfg.nuclear_tol >= 0.0)) throw ConfigError("nuclear_tol must be >= 0");
    }
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string CsvTable::to_string() const {
    std::string out;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) out += ',';
        out += header[c];
    }
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += row[c];
        }
        out += '\n';
    }
    return out;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    if (cfg.experiment == "tiktv") return run_tiktv(cfg);
    if (cfg.experiment == "nrsfm") return run_nrsfm(cfg);
    if (cfg.experiment == "sweep") return run_sweep(cfg);
    if (cfg.experiment == "oracle") return run_oracle(cfg);
    return run_denoise1d(cfg);
}

namespace {

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["experiment"] = cfg.experiment;
    j["seeds"] = cfg.seeds;
    j["out"] = cfg.out_dir;
    j["t"] = cfg.t;
    j["n"] = cfg.n;
    j["levels"] = cfg.levels;
    j["breakpoints"] = cfg.breakpoints;
    j["gamma"] = cfg.gamma;
    j["gamma_grid"] = cfg.gamma_grid;
    j["noise"] = {{"variant", cfg.noise.variant}, {"sigma", cfg.noise.sigma},
                  {"dof", cfg.noise.dof},         {"scale", cfg.noise.scale},
                  {"sigma0", cfg.noise.sigma0},   {"sigma1", cfg.noise.sigma1},
                  {"band", cfg.noise.band}};
    j["tik_lambda"] = cfg.tik_lambda;
    j["tv_lambda"] = cfg.tv_lambda;
    j["rho_grid"] = cfg.rho_grid;
    j["predictor"] = cfg.predictor;
    j["pilot"] = cfg.pilot;
    j["lambda_grid"] = cfg.lambda_grid;
    j["pilot_lambda"] = cfg.pilot_lambda;
    j["tik_radius"] = cfg.tik_radius;
    j["tv_radius"] = cfg.tv_radius;
    j["frames"] = cfg.frames;
    j["points"] = cfg.points;
    j["rank"] = cfg.rank;
    j["scene_sigma"] = cfg.scene_sigma;
    j["radius_factors"] = cfg.radius_factors;
    j["pilot_radius_factor"] = cfg.pilot_radius_factor;
    j["nuclear_max_iters"] = cfg.nuclear_max_iters;
    j["nuclear_tol"] = cfg.nuclear_tol;
    return j;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << content;
    out.flush();
    if (!out.good()) throw IoError("failed writing '" + path.string() + "'");
}

} // namespace

std::string run_and_write(const ExperimentConfig& cfg, std::ostream& log) {
    validate_config(cfg);
    const auto start = std::chrono::steady_clock::now();
    RunResult result = run_experiment(cfg);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    namespace fs = std::filesystem;
    const fs::path out_dir = cfg.out_dir.empty() ? fs::path("results") : fs::path(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " +
                          ec.message());

    const fs::path csv_path = out_dir / result.csv_name;
    write_file(csv_path, result.table.to_string());
    log << "wrote " << csv_path.string() << " (" << result.table.rows.size() << " rows)\n";
    if (result.has_summary) {
        const fs::path summary_path = out_dir / result.summary_name;
        write_file(summary_path, result.summary.to_string());
        log << "wrote " << summary_path.string() << " (" << result.summary.rows.size()
            << " rows)\n";
    }

    json manifest;
    manifest["experiment"] = cfg.experiment;
    manifest["csv"] = result.csv_name;
    if (result.has_summary) manifest["summary_csv"] = result.summary_name;
    manifest["columns"] = result.table.header;
    manifest["rows"] = result.table.rows.size();
    manifest["config"] = config_to_json(cfg);
    manifest["wall_seconds"] = wall;
    const fs::path manifest_path =
        out_dir / (cfg.experiment + ".manifest.json");
    write_file(manifest_path, manifest.dump(2) + "\n");
    log << "wrote " << manifest_path.string() << "\n";
    return manifest_path.string();
}

} // namespace wildrefit
