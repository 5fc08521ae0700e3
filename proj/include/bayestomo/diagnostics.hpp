#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "bayestomo/model.hpp"
#include "bayestomo/sampler.hpp"

namespace bayestomo {

/// Mahalanobis distance sqrt((x - mu)' Sigma^-1 (x - mu)); the inverse
/// covariance is supplied as its action on a vector (diagonal scaling or a
/// Cholesky-backed solve).
template <class ApplyInvCov>
double mahalanobis(std::span<const double> x, std::span<const double> mu, ApplyInvCov&& apply) {
    if (x.size() != mu.size()) throw std::invalid_argument("mahalanobis: dimension mismatch");
    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - mu[i];
    std::vector<double> s = apply(d);
    if (s.size() != d.size()) throw std::invalid_argument("mahalanobis: applier changed dimension");
    double q = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) q += d[i] * s[i];
    if (q < 0.0) throw std::invalid_argument("mahalanobis: covariance is not positive definite");
    return std::sqrt(q);
}

/// Effective sample size n / (1 + 2 sum rho_k), with the autocorrelation
/// sum truncated at the first lag where rho_k drops below 0.05. A constant
/// series is defined as ESS = n (flagged through `degenerate`).
inline double effective_sample_size(std::span<const double> series, bool* degenerate = nullptr) {
    const std::int64_t n = static_cast<std::int64_t>(series.size());
    if (n < 10) throw std::invalid_argument("effective_sample_size: need at least 10 samples");
    if (degenerate) *degenerate = false;
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= n;
    double c0 = 0.0;
    for (double v : series) c0 += (v - mean) * (v - mean);
    c0 /= n;
    // constant series up to rounding: sd below ~1e-14 of the mean scale
    double tiny = 1e-28 * (mean * mean + 1e-300);
    if (!(c0 > tiny)) {
        if (degenerate) *degenerate = true;
        return static_cast<double>(n);
    }
    double acf_sum = 0.0;
    for (std::int64_t k = 1; k < n; ++k) {
        double ck = 0.0;
        for (std::int64_t t = 0; t + k < n; ++t)
            ck += (series[t] - mean) * (series[t + k] - mean);
        ck /= n;
        double rho = ck / c0;
        if (rho < 0.05) break;
        acf_sum += rho;
    }
    return n / (1.0 + 2.0 * acf_sum);
}

/// Deviance information criterion over the stored draws, with
/// D(theta) = -2 log l(y | beta, phi). Returns (DIC, p_D, mean deviance);
/// DIC = mean deviance + p_D and p_D = mean deviance - D(theta_bar) with
/// theta_bar the posterior mean of (beta, phi).
struct DicResult {
    double dic = 0.0;
    double p_d = 0.0;
    double mean_deviance = 0.0;
};

inline DicResult dic(const ChainSamples& samples, const ForwardProblem& problem) {
    const std::int64_t r = samples.stored();
    if (r < 10) throw std::invalid_argument("dic: need at least 10 stored draws");
    double mean_dev = 0.0;
    for (double ll : samples.log_likelihood) mean_dev += -2.0 * ll;
    mean_dev /= r;

    std::vector<double> beta_bar(samples.dim, 0.0);
    for (std::int64_t i = 0; i < r; ++i) {
        auto draw = samples.beta_draw(i);
        for (int j = 0; j < samples.dim; ++j) beta_bar[j] += draw[j];
    }
    for (double& v : beta_bar) v /= r;
    double phi_bar = 0.0;
    for (double v : samples.phi) phi_bar += v;
    phi_bar /= r;

    double dev_at_mean = -2.0 * gaussian_log_likelihood(problem, beta_bar, phi_bar);
    DicResult res;
    res.mean_deviance = mean_dev;
    res.p_d = mean_dev - dev_at_mean;
    res.dic = mean_dev + res.p_d;
    return res;
}

/// Empirical quantile with linear interpolation between order statistics.
inline double quantile_sorted(std::span<const double> sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 0) throw std::invalid_argument("quantile: empty sample");
    if (n == 1) return sorted[0];
    double h = p * (n - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo >= n - 1) return sorted[n - 1];
    double frac = h - lo;
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct ScalarSummary {
    double mean = 0.0;
    double mode = 0.0; // value in the highest log-posterior stored draw
    double lower = 0.0;
    double upper = 0.0;
    double ess = 0.0;
};

/// Posterior summary: componentwise means, mode (the stored draw that
/// maximizes the recorded joint log posterior), credible-interval
/// endpoints, ESS, significance mask, and the global misfit/DIC measures.
struct PosteriorSummary {
    double lower_prob = 0.05, upper_prob = 0.95;
    std::vector<double> mean, mode, lower, upper, ess;
    std::vector<char> significant; // 0 outside [lower, upper]
    ScalarSummary eta_usa, eta_hyp, eta_time, phi_summary, psi_summary;
    std::int64_t mode_draw = 0;
    double dic = 0.0, p_d = 0.0, mean_deviance = 0.0;
    double misfit_mode = 0.0, misfit_lower = 0.0, misfit_upper = 0.0;
    std::optional<double> model_misfit; // versus a known truth, when given
    int n_significant = 0;
};

namespace detail {

inline ScalarSummary summarize_scalar(std::span<const double> series, std::int64_t mode_draw,
                                      double lo, double hi) {
    ScalarSummary s;
    const std::int64_t n = static_cast<std::int64_t>(series.size());
    std::vector<double> sorted(series.begin(), series.end());
    std::sort(sorted.begin(), sorted.end());
    for (double v : series) s.mean += v;
    s.mean /= n;
    s.mode = series[mode_draw];
    s.lower = quantile_sorted(sorted, lo);
    s.upper = quantile_sorted(sorted, hi);
    s.ess = n >= 10 ? effective_sample_size(series) : static_cast<double>(n);
    return s;
}

} // namespace detail

/// Data misfit ||y - X b||_{Sigma_y} with Sigma_y = (1/phi) I.
inline double data_misfit(const ForwardProblem& problem, std::span<const double> b, double phi) {
    std::vector<double> pred = problem.X.apply(b);
    std::vector<double> zero(pred.size(), 0.0);
    std::vector<double> resid(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) resid[i] = problem.y[i] - pred[i];
    return mahalanobis(resid, zero, [phi](std::span<const double> v) {
        std::vector<double> s(v.begin(), v.end());
        for (double& x : s) x *= phi;
        return s;
    });
}

inline PosteriorSummary summarize(const ChainSamples& samples, const ForwardProblem& problem,
                                  double lower_prob = 0.05, double upper_prob = 0.95,
                                  const std::vector<double>* beta_true = nullptr,
                                  const NeighborGraph* graph = nullptr) {
    const std::int64_t r = samples.stored();
    if (r == 0) throw std::invalid_argument("summarize: empty samples");
    if (!(lower_prob < upper_prob))
        throw std::invalid_argument("summarize: quantile probabilities out of order");
    const int d = samples.dim;

    PosteriorSummary s;
    s.lower_prob = lower_prob;
    s.upper_prob = upper_prob;
    s.mean.assign(d, 0.0);
    s.mode.assign(d, 0.0);
    s.lower.assign(d, 0.0);
    s.upper.assign(d, 0.0);
    s.ess.assign(d, 0.0);
    s.significant.assign(d, 0);

    std::int64_t mode_draw = 0;
    for (std::int64_t i = 1; i < r; ++i)
        if (samples.log_posterior[i] > samples.log_posterior[mode_draw]) mode_draw = i;
    s.mode_draw = mode_draw;

    std::vector<double> series(r);
    for (int j = 0; j < d; ++j) {
        for (std::int64_t i = 0; i < r; ++i) series[i] = samples.beta[i * d + j];
        double m = 0.0;
        for (double v : series) m += v;
        s.mean[j] = m / r;
        s.mode[j] = series[mode_draw];
        std::vector<double> sorted = series;
        std::sort(sorted.begin(), sorted.end());
        s.lower[j] = quantile_sorted(sorted, lower_prob);
        s.upper[j] = quantile_sorted(sorted, upper_prob);
        s.ess[j] = r >= 10 ? effective_sample_size(series) : static_cast<double>(r);
        s.significant[j] = (0.0 < s.lower[j] || 0.0 > s.upper[j]) ? 1 : 0;
        if (s.significant[j]) ++s.n_significant;
    }

    s.eta_usa = detail::summarize_scalar(samples.eta_usa, mode_draw, lower_prob, upper_prob);
    s.eta_hyp = detail::summarize_scalar(samples.eta_hyp, mode_draw, lower_prob, upper_prob);
    s.eta_time = detail::summarize_scalar(samples.eta_time, mode_draw, lower_prob, upper_prob);
    s.phi_summary = detail::summarize_scalar(samples.phi, mode_draw, lower_prob, upper_prob);
    s.psi_summary = detail::summarize_scalar(samples.psi, mode_draw, lower_prob, upper_prob);

    if (r >= 10) {
        DicResult di = dic(samples, problem);
        s.dic = di.dic;
        s.p_d = di.p_d;
        s.mean_deviance = di.mean_deviance;
    }

    const double phi_hat = s.phi_summary.mode;
    s.misfit_mode = data_misfit(problem, s.mode, phi_hat);
    s.misfit_lower = data_misfit(problem, s.lower, phi_hat);
    s.misfit_upper = data_misfit(problem, s.upper, phi_hat);

    if (beta_true != nullptr) {
        if (static_cast<int>(beta_true->size()) != d)
            throw std::invalid_argument("summarize: beta_true length mismatch");
        // model misfit under the prior covariance at the modal
        // hyperparameters: Sigma_beta^-1 = eta_hat Q(psi_hat) on the usa
        // block (identity blocks for the source corrections)
        const double eta_hat = s.eta_usa.mode;
        const double psi_hat = s.psi_summary.mode;
        std::optional<SparseSymMatrix> q;
        if (graph != nullptr && samples.structure != 0) q = graph->precision(psi_hat);
        auto apply = [&](std::span<const double> v) {
            std::vector<double> out(v.size());
            const int du = samples.d_usa;
            if (q) {
                std::vector<double> vu(v.begin(), v.begin() + du);
                std::vector<double> qu = q->multiply(vu);
                for (int j = 0; j < du; ++j) out[j] = eta_hat * qu[j];
            } else {
                for (int j = 0; j < du; ++j) out[j] = eta_hat * v[j];
            }
            for (std::size_t j = du; j < v.size(); ++j) out[j] = v[j];
            return out;
        };
        s.model_misfit = mahalanobis(s.mode, *beta_true, apply);
    }
    return s;
}

} // namespace bayestomo
