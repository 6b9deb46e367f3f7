#include "wildrefit/datagen.hpp"

#include <cmath>
#include <random>

namespace wildrefit {

namespace {

// All noise transforms are built directly on the raw engine words so the
// produced values depend only on the seed, never on a standard library's
// distribution internals.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

    // Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller (pairs cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform(); // (0, 1]: keeps the log finite
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    // Gamma(alpha, 1) for alpha >= 1 by the Marsaglia-Tsang squeeze.
    double gamma(double alpha) {
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Student-t with dof degrees of freedom: N / sqrt(ChiSq_dof / dof).
    double student_t(double dof) {
        const double z = normal();
        const double chisq = 2.0 * gamma(0.5 * dof);
        return z / std::sqrt(chisq / dof);
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

void validate_signal_spec(const SignalSpec& spec) {
    if (spec.n < 3) throw std::invalid_argument("make_signal: n must be at least 3");
    if (!(spec.gamma >= 0.0) || !std::isfinite(spec.gamma))
        throw std::invalid_argument("make_signal: gamma must be >= 0 and finite");
    for (double level : spec.levels)
        if (!std::isfinite(level)) throw std::invalid_argument("make_signal: non-finite level");
    const double b1 = spec.breakpoints[0], b2 = spec.breakpoints[1];
    if (!(0.0 < b1 && b1 < b2 && b2 < 1.0))
        throw std::invalid_argument("make_signal: breakpoints must satisfy 0 < b1 < b2 < 1");
}

// Triangle-wave index reflection onto [0, n): handles offsets of any size.
std::size_t reflect_index(long long i, std::size_t n) {
    const long long period = 2 * static_cast<long long>(n);
    long long m = i % period;
    if (m < 0) m += period;
    if (m >= static_cast<long long>(n)) m = period - 1 - m;
    return static_cast<std::size_t>(m);
}

} // namespace

SampleVector make_signal(const SignalSpec& spec) {
    validate_signal_spec(spec);
    const std::size_t n = spec.n;
    SampleVector base(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i + 1) / static_cast<double>(n);
        if (x < spec.breakpoints[0])
            base[i] = spec.levels[0];
        else if (x < spec.breakpoints[1])
            base[i] = spec.levels[1];
        else
            base[i] = spec.levels[2];
    }
    if (spec.gamma == 0.0) return base;

    // Discrete Gaussian kernel with standard deviation gamma*n grid points,
    // truncated at six deviations and renormalized; reflective boundary so
    // constants are preserved exactly.
    const double sd = spec.gamma * static_cast<double>(n);
    const long long halfwidth = std::max<long long>(1, static_cast<long long>(std::ceil(6.0 * sd)));
    std::vector<double> kernel(static_cast<std::size_t>(2 * halfwidth + 1));
    double total = 0.0;
    for (long long k = -halfwidth; k <= halfwidth; ++k) {
        const double z = static_cast<double>(k) / sd;
        const double w = std::exp(-0.5 * z * z);
        kernel[static_cast<std::size_t>(k + halfwidth)] = w;
        total += w;
    }
    for (double& w : kernel) w /= total;

    SampleVector out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (long long k = -halfwidth; k <= halfwidth; ++k) {
            const std::size_t j = reflect_index(static_cast<long long>(i) + k, n);
            acc += kernel[static_cast<std::size_t>(k + halfwidth)] * base[j];
        }
        out[i] = acc;
    }
    return out;
}

SampleVector draw_noise(const NoiseSpec& spec, std::size_t n) {
    if (n == 0) throw std::invalid_argument("draw_noise: n must be positive");
    RandomStream rng(spec.seed);
    SampleVector w(n);

    if (const auto* g = std::get_if<GaussianNoise>(&spec.variant)) {
        if (!(g->sigma >= 0.0) || !std::isfinite(g->sigma))
            throw std::invalid_argument("draw_noise: sigma must be >= 0 and finite");
        for (std::size_t i = 0; i < n; ++i) w[i] = g->sigma * rng.normal();
    } else if (const auto* t = std::get_if<StudentTNoise>(&spec.variant)) {
        if (!(t->dof > 2.0) || !std::isfinite(t->dof))
            throw std::invalid_argument(
                "draw_noise: student-t dof must exceed 2 (finite variance required)");
        if (!(t->scale >= 0.0) || !std::isfinite(t->scale))
            throw std::invalid_argument("draw_noise: scale must be >= 0 and finite");
        for (std::size_t i = 0; i < n; ++i) w[i] = t->scale * rng.student_t(t->dof);
    } else {
        const auto& h = std::get<HeteroBandNoise>(spec.variant);
        if (!(h.sigma0 >= 0.0) || !(h.sigma1 >= 0.0) || !std::isfinite(h.sigma0) ||
            !std::isfinite(h.sigma1))
            throw std::invalid_argument("draw_noise: sigmas must be >= 0 and finite");
        if (!(0.0 <= h.band[0] && h.band[0] <= h.band[1] && h.band[1] <= 1.0))
            throw std::invalid_argument("draw_noise: band must satisfy 0 <= lo <= hi <= 1");
        for (std::size_t i = 0; i < n; ++i) {
            const double x = static_cast<double>(i + 1) / static_cast<double>(n);
            const double sigma = (x >= h.band[0] && x <= h.band[1]) ? h.sigma1 : h.sigma0;
            w[i] = sigma * rng.normal();
        }
    }
    return w;
}

NrsfmScene make_nrsfm_scene(std::size_t frames, std::size_t points, int rank, double sigma,
                            std::uint64_t seed) {
    if (frames == 0 || points == 0)
        throw std::invalid_argument("make_nrsfm_scene: frames and points must be positive");
    if (rank <= 0 || static_cast<std::size_t>(rank) > std::min(3 * frames, points))
        throw std::invalid_argument("make_nrsfm_scene: rank must be in [1, min(3*frames, points)]");
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("make_nrsfm_scene: sigma must be >= 0 and finite");

    RandomStream rng(seed);
    NrsfmScene scene;
    scene.frames = frames;
    scene.points = points;
    scene.rank = rank;
    scene.sigma = sigma;
    scene.seed = seed;

    // Low-rank shape: product of independent standard-Gaussian factors.
    Eigen::MatrixXd left(3 * frames, rank);
    Eigen::MatrixXd right(rank, points);
    for (Eigen::Index i = 0; i < left.rows(); ++i)
        for (Eigen::Index j = 0; j < left.cols(); ++j) left(i, j) = rng.normal();
    for (Eigen::Index i = 0; i < right.rows(); ++i)
        for (Eigen::Index j = 0; j < right.cols(); ++j) right(i, j) = rng.normal();
    scene.shape_star = left * right;

    // Cameras: first two rows of independent uniformly random rotations,
    // generated from unit quaternions.
    std::vector<Eigen::Matrix<double, 2, 3>> blocks(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        double q0, q1, q2, q3, qn;
        do {
            q0 = rng.normal();
            q1 = rng.normal();
            q2 = rng.normal();
            q3 = rng.normal();
            qn = std::sqrt(q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3);
        } while (qn < 1e-12);
        q0 /= qn;
        q1 /= qn;
        q2 /= qn;
        q3 /= qn;
        Eigen::Matrix<double, 2, 3>& b = blocks[f];
        b(0, 0) = 1.0 - 2.0 * (q2 * q2 + q3 * q3);
        b(0, 1) = 2.0 * (q1 * q2 - q0 * q3);
        b(0, 2) = 2.0 * (q1 * q3 + q0 * q2);
        b(1, 0) = 2.0 * (q1 * q2 + q0 * q3);
        b(1, 1) = 1.0 - 2.0 * (q1 * q1 + q3 * q3);
        b(1, 2) = 2.0 * (q2 * q3 - q0 * q1);
    }
    scene.cameras = CameraMatrix(std::move(blocks));

    scene.observations = scene.cameras.apply(scene.shape_star);
    for (Eigen::Index i = 0; i < scene.observations.rows(); ++i)
        for (Eigen::Index j = 0; j < scene.observations.cols(); ++j)
            scene.observations(i, j) += sigma * rng.normal();
    return scene;
}

} // namespace wildrefit
