#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace bayestomo {

/// Mixes a base seed with a stream id so parallel chains get unrelated
/// streams (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seeded random stream used by every sampling entry point.
///
/// All distributions are built on top of the raw mt19937_64 output with
/// fixed arithmetic (Box-Muller normals, Marsaglia-Tsang gammas), so a
/// given seed reproduces the same draws on every platform; the std::
/// distribution adapters are avoided because their algorithms are
/// implementation-defined.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }

    /// Uniform on (0, 1); zero is rejected so logs are always finite.
    double uniform() {
        for (;;) {
            double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
            if (u > 0.0) return u;
        }
    }

    /// Standard normal via Box-Muller; the second deviate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    /// Gamma with given shape and rate (mean shape/rate), Marsaglia-Tsang.
    double gamma(double shape, double rate) {
        if (!(shape > 0.0) || !(rate > 0.0))
            throw std::invalid_argument("gamma: shape and rate must be positive");
        if (shape < 1.0) {
            // boost: G(a) = G(a+1) * U^(1/a)
            double g = gamma(shape + 1.0, 1.0);
            double u = uniform();
            return g * std::pow(u, 1.0 / shape) / rate;
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            double u = uniform();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v))
                return d * v / rate;
        }
    }

    /// Student-t with nu degrees of freedom, unit scale.
    double student_t(double nu) {
        if (!(nu > 0.0)) throw std::invalid_argument("student_t: nu must be positive");
        double z = normal();
        double chi2 = gamma(0.5 * nu, 0.5);
        return z / std::sqrt(chi2 / nu);
    }

    /// Normal with mean mu, sd sigma, conditioned on being positive.
    /// Rejection is cheap for mu > 0 (acceptance >= 1/2), which is the only
    /// regime the samplers use.
    double truncated_normal_positive(double mu, double sigma) {
        for (;;) {
            double x = mu + sigma * normal();
            if (x > 0.0) return x;
        }
    }

private:
    static constexpr double pi = 3.141592653589793238462643383279502884;
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

inline double normal_log_pdf(double x, double mu, double sigma) {
    double z = (x - mu) / sigma;
    return -0.5 * z * z - std::log(sigma) - 0.918938533204672742; // log sqrt(2 pi)
}

inline double gamma_log_pdf(double x, double shape, double rate) {
    if (x <= 0.0) return -std::numeric_limits<double>::infinity();
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

} // namespace bayestomo
