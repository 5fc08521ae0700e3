#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bayestomo/forward.hpp"
#include "bayestomo/spatial.hpp"

namespace bayestomo {

struct GammaPrior {
    double shape = 1.0;
    double rate = 1.0;

    double mean() const { return shape / rate; }

    void validate() const {
        if (!(shape > 0.0) || !(rate > 0.0))
            throw std::invalid_argument("GammaPrior: shape and rate must be positive");
    }
};

/// Truncated-normal prior for the spatial dependence parameter,
/// psi ~ N(mean, sd^2) 1(psi > 0).
struct PsiPrior {
    double mean = 10.0;
    double sd = 0.2;

    void validate() const {
        if (!(sd > 0.0)) throw std::invalid_argument("PsiPrior: sd must be positive");
    }
};

struct HyperPriors {
    GammaPrior eta_usa{10.0, 2.0};
    GammaPrior eta_hyp{1.0, 5.0};
    GammaPrior eta_time{10.0, 2.0};
    GammaPrior phi{1.0, 0.1};
    PsiPrior psi{10.0, 0.2};
    std::vector<double> beta0; // prior mean, full parameter layout

    void validate(int dim) const {
        eta_usa.validate();
        eta_hyp.validate();
        eta_time.validate();
        phi.validate();
        psi.validate();
        if (!beta0.empty() && static_cast<int>(beta0.size()) != dim)
            throw std::invalid_argument("HyperPriors: beta0 length mismatch");
    }
};

/// Prior structures 0-4: independence, then {spherical, ellipsoidal} x
/// {reciprocal, exponential} neighborhoods.
inline bool structure_is_spatial(int structure) { return structure != 0; }

struct NeighborhoodConfig {
    double spherical_radius = 150.0;
    double ellipsoid_dx = 300.0, ellipsoid_dy = 300.0, ellipsoid_dz = 150.0;
    double euler_x = 0.0, euler_y = 0.0, euler_z = 0.0; // radians
};

inline NeighborhoodSpec spec_for_structure(int structure, const NeighborhoodConfig& cfg) {
    switch (structure) {
        case 1: return NeighborhoodSpec::spherical(cfg.spherical_radius, WeightKind::reciprocal);
        case 2:
            return NeighborhoodSpec::ellipsoidal(cfg.ellipsoid_dx, cfg.ellipsoid_dy,
                                                 cfg.ellipsoid_dz, WeightKind::reciprocal,
                                                 cfg.euler_x, cfg.euler_y, cfg.euler_z);
        case 3: return NeighborhoodSpec::spherical(cfg.spherical_radius, WeightKind::exponential);
        case 4:
            return NeighborhoodSpec::ellipsoidal(cfg.ellipsoid_dx, cfg.ellipsoid_dy,
                                                 cfg.ellipsoid_dz, WeightKind::exponential,
                                                 cfg.euler_x, cfg.euler_y, cfg.euler_z);
        default: throw std::invalid_argument("spec_for_structure: structure must be in 1..4");
    }
}

struct ChainConfig {
    std::int64_t iterations = 3000;
    std::int64_t burn_in = 1500; // raw iterations discarded before storage
    std::int64_t thinning = 15;
    std::uint64_t seed = 0;
    ModelKind model = ModelKind::model1;
    int structure = 1; // 0..4
    double initial_proposal_sd = 0.5;
    double adapt_target = 0.35; // acceptance rate targeted while adapting

    void validate() const {
        if (iterations < 1) throw std::invalid_argument("ChainConfig: iterations must be >= 1");
        if (burn_in < 0 || burn_in >= iterations)
            throw std::invalid_argument("ChainConfig: burn_in must be < iterations");
        if (thinning < 1) throw std::invalid_argument("ChainConfig: thinning must be >= 1");
        if (structure < 0 || structure > 4)
            throw std::invalid_argument("ChainConfig: structure must be in 0..4");
        if (!(initial_proposal_sd > 0.0))
            throw std::invalid_argument("ChainConfig: proposal sd must be positive");
        if (!(adapt_target > 0.0) || !(adapt_target < 1.0))
            throw std::invalid_argument("ChainConfig: adapt target must be in (0,1)");
    }

    std::int64_t stored_count() const { return (iterations - burn_in) / thinning; }
};

/// Current sweep state of one chain.
struct ChainState {
    std::vector<double> beta;
    double eta_usa = 1.0;
    double eta_hyp = 1.0;
    double eta_time = 1.0;
    double phi = 1.0;
    double psi = 0.0;
    std::int64_t iteration = 0;
    std::int64_t psi_proposals = 0;
    std::int64_t psi_accepted = 0;
    double proposal_sd = 0.5;
};

/// Post-burn-in, thinned draws plus the per-draw likelihood/posterior
/// values the diagnostics need.
struct ChainSamples {
    int dim = 0;
    int d_usa = 0;
    ModelKind model = ModelKind::model1;
    int structure = 0;
    std::vector<std::int64_t> iterations;
    std::vector<double> beta; // stored row-major, stored_count x dim
    std::vector<double> eta_usa, eta_hyp, eta_time, phi, psi;
    std::vector<double> log_likelihood, log_posterior;
    double psi_acceptance_rate = 0.0; // post burn-in
    double final_proposal_sd = 0.0;

    std::int64_t stored() const { return static_cast<std::int64_t>(iterations.size()); }

    std::span<const double> beta_draw(std::int64_t r) const {
        return {beta.data() + r * dim, static_cast<std::size_t>(dim)};
    }

    /// Scalar series of one beta component across stored draws.
    std::vector<double> beta_component(int j) const {
        std::vector<double> s(stored());
        for (std::int64_t r = 0; r < stored(); ++r) s[r] = beta[r * dim + j];
        return s;
    }
};

} // namespace bayestomo
