#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wildrefit/bounds.hpp"
#include "wildrefit/core.hpp"
#include "wildrefit/datagen.hpp"
#include "wildrefit/predictors.hpp"

namespace wildrefit {

/// Configuration problems (bad JSON, unknown keys, invalid values) detected
/// before any computation starts.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem problems while writing results.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Noise configuration as it appears in experiment configs; a per-trial seed
/// turns it into a NoiseSpec.
struct NoiseConfig {
    std::string variant = "gaussian"; // gaussian | student_t | hetero_band
    double sigma = 0.3;               // gaussian
    double dof = 6.0;                 // student_t
    double scale = 0.3;               // student_t
    double sigma0 = 0.15;             // hetero_band, outside the band
    double sigma1 = 0.45;             // hetero_band, inside the band
    std::array<double, 2> band{0.4, 0.6};
};

NoiseSpec to_noise_spec(const NoiseConfig& cfg, std::uint64_t seed);

/// Full experiment configuration. One struct covers all five commands; each
/// command validates and uses the fields relevant to it.
struct ExperimentConfig {
    std::string experiment; // tiktv | nrsfm | sweep | oracle | denoise1d

    std::vector<std::uint64_t> seeds;
    std::string out_dir;
    double t = 2.0;

    // 1-D studies.
    std::size_t n = 301;
    std::array<double, 3> levels{1.0, 3.0, 1.8};
    std::array<double, 2> breakpoints{0.35, 0.65};
    double gamma = 0.02;            // sweep / oracle / denoise1d signal smoothing
    std::vector<double> gamma_grid; // tiktv
    NoiseConfig noise;
    double tik_lambda = 0.002;
    double tv_lambda = 0.02;
    std::vector<double> rho_grid;        // per-command default
    std::string predictor = "tikhonov";  // sweep / oracle / denoise1d family
    std::string pilot = "fhat";          // fhat | fstar (sweep/oracle) | reference (denoise1d/nrsfm)
    std::vector<double> lambda_grid;     // denoise1d
    double pilot_lambda = 0.005;         // denoise1d reference pilot
    double tik_radius = 2.0;             // sweep: smoothness-ball predictor
    double tv_radius = 5.0;              // sweep: tv-ball predictor

    // Low-rank study.
    std::size_t frames = 40;
    std::size_t points = 10;
    int rank = 3;
    double scene_sigma = 0.25;
    std::vector<double> radius_factors; // multiples of the true shape's nuclear norm
    double pilot_radius_factor = 0.7071067811865476; // nrsfm reference pilot
    int nuclear_max_iters = 3000;
    double nuclear_tol = 1e-11;
};

/// The built-in preset for a command. Unknown names raise ConfigError.
ExperimentConfig default_config(const std::string& experiment);

/// 24 logarithmically spaced points on [0.25, 8].
std::vector<double> default_rho_grid();

/// Parses a JSON config document and overlays it onto the preset for its
/// "experiment" key (which must match `experiment` when that is nonempty).
/// Unknown keys raise ConfigError.
ExperimentConfig load_config(const std::string& json_text, const std::string& experiment);

/// Validation shared by the CLI and tests; raises ConfigError on bad values.
void validate_config(const ExperimentConfig& cfg);

/// Shortest round-trip decimal representation of a double ("null" for NaN
/// is NOT produced here; callers emit null cells explicitly).
std::string format_double(double v);

/// In-memory CSV: header plus rows of preformatted cells.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string to_string() const;
};

/// Everything a finished run produces.
struct RunResult {
    CsvTable table;
    CsvTable summary;      // only some commands produce one
    bool has_summary = false;
    std::string csv_name;  // e.g. "tiktv.csv"
    std::string summary_name;
};

/// Runs the configured experiment in memory (no I/O).
RunResult run_experiment(const ExperimentConfig& cfg);

/// Runs the experiment and writes CSV(s) plus a JSON manifest into
/// cfg.out_dir, creating the directory if needed. Returns the manifest path.
std::string run_and_write(const ExperimentConfig& cfg, std::ostream& log);

/// Deterministic helper: a seed for an auxiliary stream (noise, scene, ...)
/// derived from the trial seed and a stream tag.
std::uint64_t derived_seed(std::uint64_t trial_seed, std::uint64_t tag);

} // namespace wildrefit
