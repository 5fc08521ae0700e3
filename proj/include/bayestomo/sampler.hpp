#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bayestomo/cholesky.hpp"
#include "bayestomo/model.hpp"
#include "bayestomo/rng.hpp"

namespace bayestomo {

inline double gaussian_log_likelihood(const ForwardProblem& fp, std::span<const double> beta,
                                      double phi) {
    const int n = fp.n_obs();
    if (n == 0) return 0.0;
    std::vector<double> pred = fp.X.apply(beta);
    double rss = 0.0;
    for (int i = 0; i < n; ++i) {
        double r = fp.y[i] - pred[i];
        rss += r * r;
    }
    constexpr double log_2pi = 1.8378770664093454836;
    return 0.5 * n * (std::log(phi) - log_2pi) - 0.5 * phi * rss;
}

/// Metropolis-within-Gibbs sampler for the hierarchical linear model:
/// block Gaussian update of beta from its full conditional
///   Omega = Sigma^-1 + phi X'X,  xi = Sigma^-1 beta0 + phi X'y,
/// conjugate Gamma updates for the precision parameters, and a
/// truncated-normal random-walk MH step for the spatial dependence psi.
///
/// The sparsity patterns of Q(psi) and Omega are fixed for a given prior
/// structure, so both symbolic factorizations are computed once here and
/// only the numeric passes run inside the sweep.
class Sampler {
public:
    Sampler(const ForwardProblem& problem, const NeighborGraph* graph, HyperPriors priors,
            ChainConfig config)
        : problem_(problem), graph_(graph), priors_(std::move(priors)), config_(config) {
        config_.validate();
        const int d = problem_.dim();
        priors_.validate(d);
        if (structure_is_spatial(config_.structure)) {
            if (graph_ == nullptr)
                throw std::invalid_argument("Sampler: spatial structure requires a neighbor graph");
            if (graph_->node_count() != problem_.d_usa)
                throw std::invalid_argument("Sampler: graph node count must equal d_usa");
        }
        if ((config_.model == ModelKind::model2) != (problem_.model == ModelKind::model2))
            throw std::invalid_argument("Sampler: config model kind disagrees with the problem");

        beta0_.assign(d, 0.0);
        if (!priors_.beta0.empty()) beta0_ = priors_.beta0;
        beta0_is_zero_ = true;
        for (double v : beta0_)
            if (v != 0.0) {
                beta0_is_zero_ = false;
                break;
            }

        xtx_ = problem_.X.normal_matrix();
        xty_ = problem_.X.apply_transpose(problem_.y);

        // fixed Omega pattern: full diagonal + Q block + X'X
        std::vector<Triplet> pattern;
        for (int j = 0; j < d; ++j) pattern.push_back({j, j, 0.0});
        if (spatial()) {
            q_ = graph_->precision(0.0);
            q_psi_cache_.reset();
            q_.for_each_lower([&](int i, int j, double) { pattern.push_back({i, j, 0.0}); });
        }
        xtx_.for_each_lower([&](int i, int j, double) { pattern.push_back({i, j, 0.0}); });
        omega_ = SparseSymMatrix::from_triplets(d, pattern);

        diag_slot_.resize(d);
        for (int j = 0; j < d; ++j) diag_slot_[j] = omega_.find_lower(j, j);
        if (spatial()) {
            q_to_omega_.reserve(q_.nnz_lower());
            q_.for_each_lower(
                [&](int i, int j, double) { q_to_omega_.push_back(omega_.find_lower(i, j)); });
            q_chol_.emplace(q_, min_degree_ordering(q_), /*factorize_now=*/false);
        }
        xtx_to_omega_.reserve(xtx_.nnz_lower());
        xtx_.for_each_lower(
            [&](int i, int j, double) { xtx_to_omega_.push_back(omega_.find_lower(i, j)); });
        omega_chol_.emplace(omega_, min_degree_ordering(omega_), /*factorize_now=*/false);
        xi_.assign(d, 0.0);
    }

    const ForwardProblem& problem() const { return problem_; }
    const HyperPriors& priors() const { return priors_; }
    const ChainConfig& config() const { return config_; }
    const std::vector<double>& beta0() const { return beta0_; }
    bool spatial() const { return structure_is_spatial(config_.structure); }

    ChainState initial_state() const {
        ChainState st;
        st.beta = beta0_;
        st.eta_usa = priors_.eta_usa.mean();
        st.eta_hyp = priors_.eta_hyp.mean();
        st.eta_time = priors_.eta_time.mean();
        st.phi = priors_.phi.mean();
        st.psi = spatial() ? priors_.psi.mean : 0.0;
        st.proposal_sd = config_.initial_proposal_sd;
        return st;
    }

    /// Builds Omega and xi of the beta full conditional for the state's
    /// hyperparameters; the draw itself is sample_gaussian_by_precision on
    /// the permuted factor held here.
    void assemble_full_conditional(const ChainState& st) {
        const int d = problem_.dim();
        auto& ov = omega_.values();
        std::fill(ov.begin(), ov.end(), 0.0);

        if (spatial()) {
            sync_q(st.psi);
            const auto& qv = q_.values();
            for (std::size_t t = 0; t < qv.size(); ++t)
                ov[q_to_omega_[t]] += st.eta_usa * qv[t];
        } else {
            for (int j = 0; j < problem_.d_usa; ++j) ov[diag_slot_[j]] += st.eta_usa;
        }
        if (problem_.model == ModelKind::model2) {
            for (int j = problem_.d_usa; j < problem_.d_usa + problem_.d_hyp(); ++j)
                ov[diag_slot_[j]] += st.eta_hyp;
            for (int j = problem_.d_usa + problem_.d_hyp(); j < d; ++j)
                ov[diag_slot_[j]] += st.eta_time;
        }
        const auto& xv = xtx_.values();
        for (std::size_t t = 0; t < xv.size(); ++t) ov[xtx_to_omega_[t]] += st.phi * xv[t];

        // xi = Sigma^-1 beta0 + phi X'y
        std::fill(xi_.begin(), xi_.end(), 0.0);
        if (!beta0_is_zero_) {
            if (spatial()) {
                std::span<const double> b0u(beta0_.data(), problem_.d_usa);
                std::vector<double> qb = q_.multiply(b0u);
                for (int j = 0; j < problem_.d_usa; ++j) xi_[j] = st.eta_usa * qb[j];
            } else {
                for (int j = 0; j < problem_.d_usa; ++j) xi_[j] = st.eta_usa * beta0_[j];
            }
            if (problem_.model == ModelKind::model2) {
                for (int j = problem_.d_usa; j < problem_.d_usa + problem_.d_hyp(); ++j)
                    xi_[j] = st.eta_hyp * beta0_[j];
                for (int j = problem_.d_usa + problem_.d_hyp(); j < d; ++j)
                    xi_[j] = st.eta_time * beta0_[j];
            }
        }
        for (int j = 0; j < d; ++j) xi_[j] += st.phi * xty_[j];
    }

    const SparseSymMatrix& omega() const { return omega_; }
    const std::vector<double>& xi() const { return xi_; }

    /// Mean of the beta full conditional, Omega^-1 xi (used by the ridge
    /// identity checks).
    std::vector<double> conditional_mean(const ChainState& st) {
        assemble_full_conditional(st);
        omega_chol_->refactor(omega_);
        return omega_chol_->solve(xi_);
    }

    void draw_beta(ChainState& st, RandomStream& rng) {
        assemble_full_conditional(st);
        omega_chol_->refactor(omega_);
        st.beta = omega_chol_->sample(xi_, rng);
    }

    // Derived full-conditional laws (conjugacy):
    GammaPrior phi_conditional(const ChainState& st) const {
        double rss = residual_sum_of_squares(st.beta);
        return {priors_.phi.shape + 0.5 * problem_.n_obs(), priors_.phi.rate + 0.5 * rss};
    }

    GammaPrior eta_usa_conditional(const ChainState& st) const {
        auto [s0, s1] = usa_quadratic_parts(st.beta);
        double qf = s0 + st.psi * s1;
        if (!std::isfinite(qf))
            throw std::invalid_argument("eta_usa conditional: non-finite quadratic form");
        return {priors_.eta_usa.shape + 0.5 * problem_.d_usa, priors_.eta_usa.rate + 0.5 * qf};
    }

    GammaPrior eta_hyp_conditional(const ChainState& st) const {
        double ss = block_sum_of_squares(st.beta, problem_.d_usa, problem_.d_hyp());
        return {priors_.eta_hyp.shape + 0.5 * problem_.d_hyp(), priors_.eta_hyp.rate + 0.5 * ss};
    }

    GammaPrior eta_time_conditional(const ChainState& st) const {
        double ss = block_sum_of_squares(st.beta, problem_.d_usa + problem_.d_hyp(),
                                         problem_.d_time());
        return {priors_.eta_time.shape + 0.5 * problem_.d_time(), priors_.eta_time.rate + 0.5 * ss};
    }

    void update_precisions(ChainState& st, RandomStream& rng) {
        GammaPrior phi_law = phi_conditional(st);
        if (!std::isfinite(phi_law.rate))
            throw std::invalid_argument("phi conditional: non-finite quadratic form");
        st.phi = rng.gamma(phi_law.shape, phi_law.rate);
        GammaPrior eta_law = eta_usa_conditional(st);
        st.eta_usa = rng.gamma(eta_law.shape, eta_law.rate);
        if (problem_.model == ModelKind::model2) {
            GammaPrior hyp_law = eta_hyp_conditional(st);
            st.eta_hyp = rng.gamma(hyp_law.shape, hyp_law.rate);
            GammaPrior time_law = eta_time_conditional(st);
            st.eta_time = rng.gamma(time_law.shape, time_law.rate);
        }
    }

    /// log pi(psi | beta, eta) up to a constant:
    /// (1/2) log|Q(psi)| - (eta/2)(beta - beta0)' Q(psi) (beta - beta0)
    /// - (psi - mu)^2 / (2 sigma^2), with |Q| from the Cholesky factor.
    double psi_log_target(const ChainState& st, double psi) {
        if (!spatial()) throw std::logic_error("psi_log_target: structure 0 has no psi update");
        if (!(psi > 0.0)) return -std::numeric_limits<double>::infinity();
        auto [s0, s1] = usa_quadratic_parts(st.beta);
        sync_q(psi);
        double z = (psi - priors_.psi.mean) / priors_.psi.sd;
        return 0.5 * q_logdet_cache_ - 0.5 * st.eta_usa * (s0 + psi * s1) - 0.5 * z * z;
    }

    /// Truncated-normal random-walk MH update of psi. Returns whether the
    /// proposal was accepted; a factorization failure at the proposed value
    /// auto-rejects. The Hastings correction Phi(psi/sd)/Phi(psi*/sd)
    /// accounts for the truncation asymmetry of the proposal.
    bool update_psi(ChainState& st, RandomStream& rng) {
        if (!spatial()) throw std::logic_error("update_psi: structure 0 has no psi update");
        st.psi_proposals++;
        const double sd = st.proposal_sd;
        const double current = st.psi;
        double lt_current = psi_log_target(st, current);
        double proposal = rng.truncated_normal_positive(current, sd);
        double lt_proposal;
        try {
            lt_proposal = psi_log_target(st, proposal);
        } catch (const NotPositiveDefinite&) {
            ++psi_factorization_rejects_;
            last_psi_alpha_ = 0.0;
            sync_q(current);
            return false;
        }
        double log_ratio = lt_proposal - lt_current +
                           std::log(normal_cdf(current / sd)) -
                           std::log(normal_cdf(proposal / sd));
        last_psi_alpha_ = std::exp(std::min(log_ratio, 0.0));
        if (std::log(rng.uniform()) < log_ratio) {
            st.psi = proposal;
            st.psi_accepted++;
            sync_q(proposal);
            return true;
        }
        sync_q(current);
        return false;
    }

    double log_likelihood(const ChainState& st) const {
        return gaussian_log_likelihood(problem_, st.beta, st.phi);
    }

    /// Joint log posterior density (unnormalized only by the evidence).
    double log_posterior(const ChainState& st) {
        constexpr double log_2pi = 1.8378770664093454836;
        double lp = log_likelihood(st);

        auto [s0, s1] = usa_quadratic_parts(st.beta);
        double logdet_q = 0.0;
        double qf = s0;
        if (spatial()) {
            sync_q(st.psi);
            logdet_q = q_logdet_cache_;
            qf = s0 + st.psi * s1;
        }
        const int du = problem_.d_usa;
        lp += 0.5 * (du * std::log(st.eta_usa) + logdet_q) - 0.5 * st.eta_usa * qf -
              0.5 * du * log_2pi;
        if (problem_.model == ModelKind::model2) {
            const int dh = problem_.d_hyp(), dt = problem_.d_time();
            double ssh = block_sum_of_squares(st.beta, du, dh);
            double sst = block_sum_of_squares(st.beta, du + dh, dt);
            lp += 0.5 * dh * std::log(st.eta_hyp) - 0.5 * st.eta_hyp * ssh - 0.5 * dh * log_2pi;
            lp += 0.5 * dt * std::log(st.eta_time) - 0.5 * st.eta_time * sst - 0.5 * dt * log_2pi;
            lp += gamma_log_pdf(st.eta_hyp, priors_.eta_hyp.shape, priors_.eta_hyp.rate);
            lp += gamma_log_pdf(st.eta_time, priors_.eta_time.shape, priors_.eta_time.rate);
        }
        lp += gamma_log_pdf(st.eta_usa, priors_.eta_usa.shape, priors_.eta_usa.rate);
        lp += gamma_log_pdf(st.phi, priors_.phi.shape, priors_.phi.rate);
        if (spatial()) {
            lp += normal_log_pdf(st.psi, priors_.psi.mean, priors_.psi.sd) -
                  std::log(normal_cdf(priors_.psi.mean / priors_.psi.sd));
        }
        return lp;
    }

    std::int64_t psi_factorization_rejects() const { return psi_factorization_rejects_; }

    /// Called once per stored draw, in order; lets callers stream a trace.
    using StoreCallback =
        std::function<void(const ChainState&, double log_likelihood, double log_posterior)>;

    /// Full sweep schedule: beta, then the Gamma precisions, then psi.
    /// The psi proposal scale adapts during burn-in only (Robbins-Monro on
    /// the log scale toward the configured acceptance target) and is frozen
    /// afterwards. Deterministic given the config seed.
    ChainSamples run(const StoreCallback& on_store = {}) {
        ChainState st = initial_state();
        RandomStream rng(config_.seed);

        ChainSamples out;
        out.dim = problem_.dim();
        out.d_usa = problem_.d_usa;
        out.model = problem_.model;
        out.structure = config_.structure;
        const std::int64_t n_store = config_.stored_count();
        out.iterations.reserve(n_store);
        out.beta.reserve(n_store * problem_.dim());

        double log_sd = std::log(config_.initial_proposal_sd);
        int consecutive_failures = 0;
        std::int64_t post_proposals = 0, post_accepted = 0;

        for (std::int64_t t = 1; t <= config_.iterations; ++t) {
            st.iteration = t;
            try {
                draw_beta(st, rng);
                consecutive_failures = 0;
            } catch (const NotPositiveDefinite&) {
                if (++consecutive_failures > 10)
                    throw NotPositiveDefinite(
                        "run_chain: repeated factorization failure (more than 10 consecutive)");
            }
            update_precisions(st, rng);
            if (spatial()) {
                bool accepted = update_psi(st, rng);
                if (t <= config_.burn_in) {
                    double gamma_t = std::pow(static_cast<double>(t), -0.6);
                    log_sd += gamma_t * (last_psi_alpha_ - config_.adapt_target);
                    log_sd = std::clamp(log_sd, std::log(1e-4), std::log(1e3));
                    st.proposal_sd = std::exp(log_sd);
                } else {
                    ++post_proposals;
                    if (accepted) ++post_accepted;
                }
            }
            if (t > config_.burn_in && (t - config_.burn_in) % config_.thinning == 0) {
                double ll = log_likelihood(st);
                double lp = log_posterior(st);
                out.iterations.push_back(t);
                out.beta.insert(out.beta.end(), st.beta.begin(), st.beta.end());
                out.eta_usa.push_back(st.eta_usa);
                out.eta_hyp.push_back(st.eta_hyp);
                out.eta_time.push_back(st.eta_time);
                out.phi.push_back(st.phi);
                out.psi.push_back(st.psi);
                out.log_likelihood.push_back(ll);
                out.log_posterior.push_back(lp);
                if (on_store) on_store(st, ll, lp);
            }
        }
        out.psi_acceptance_rate =
            post_proposals > 0 ? static_cast<double>(post_accepted) / post_proposals : 0.0;
        out.final_proposal_sd = st.proposal_sd;
        return out;
    }

private:
    void sync_q(double psi) {
        if (!spatial()) return;
        if (q_psi_cache_ && *q_psi_cache_ == psi) return;
        graph_->update_precision_values(psi, q_);
        try {
            q_chol_->refactor(q_);
        } catch (...) {
            q_psi_cache_.reset();
            throw;
        }
        q_logdet_cache_ = q_chol_->log_det();
        q_psi_cache_ = psi;
    }

    double residual_sum_of_squares(std::span<const double> beta) const {
        if (problem_.n_obs() == 0) return 0.0;
        std::vector<double> pred = problem_.X.apply(beta);
        double rss = 0.0;
        for (int i = 0; i < problem_.n_obs(); ++i) {
            double r = problem_.y[i] - pred[i];
            rss += r * r;
        }
        return rss;
    }

    /// Decomposition (beta_u - beta0_u)' Q(psi) (beta_u - beta0_u) =
    /// s0 + psi * s1 for psi >= 0, with s0 the squared deviation and s1 the
    /// weighted sum of squared neighbor differences.
    std::pair<double, double> usa_quadratic_parts(std::span<const double> beta) const {
        const int du = problem_.d_usa;
        double s0 = 0.0;
        for (int j = 0; j < du; ++j) {
            double d = beta[j] - beta0_[j];
            s0 += d * d;
        }
        double s1 = 0.0;
        if (spatial()) {
            for (int i = 0; i < du; ++i) {
                double di = beta[i] - beta0_[i];
                for (const NeighborEdge& e : graph_->neighbors(i)) {
                    if (e.neighbor <= i) continue;
                    double dj = beta[e.neighbor] - beta0_[e.neighbor];
                    s1 += e.weight * (di - dj) * (di - dj);
                }
            }
        }
        return {s0, s1};
    }

    double block_sum_of_squares(std::span<const double> beta, int offset, int len) const {
        double s = 0.0;
        for (int j = offset; j < offset + len; ++j) {
            double d = beta[j] - beta0_[j];
            s += d * d;
        }
        return s;
    }

    const ForwardProblem& problem_;
    const NeighborGraph* graph_;
    HyperPriors priors_;
    ChainConfig config_;

    std::vector<double> beta0_;
    bool beta0_is_zero_ = true;

    SparseSymMatrix xtx_;
    std::vector<double> xty_;
    SparseSymMatrix q_;
    SparseSymMatrix omega_;
    std::vector<double> xi_;
    std::vector<int> diag_slot_, q_to_omega_, xtx_to_omega_;
    std::optional<SparseCholesky> q_chol_, omega_chol_;
    std::optional<double> q_psi_cache_;
    double q_logdet_cache_ = 0.0;
    double last_psi_alpha_ = 0.0;
    std::int64_t psi_factorization_rejects_ = 0;
};

} // namespace bayestomo
