// Acceptance suite: one check per numbered criterion, each printing a
// single PASS/FAIL line with the measured quantities. Run with no
// arguments for the full suite or with a criterion number to run one.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "bayestomo/commands.hpp"
#include "bayestomo/diagnostics.hpp"
#include "bayestomo/lsqr.hpp"
#include "bayestomo/sampler.hpp"

#include "../support/dense_oracle.hpp"

using namespace bayestomo;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

// ---------------------------------------------------------------- shared

NodeSet random_nodes(int n, RandomStream& rng, double box = 900.0) {
    NodeSet nodes;
    nodes.coords.reserve(n);
    for (int i = 0; i < n; ++i)
        nodes.coords.push_back({box * rng.uniform(), box * rng.uniform(), box * rng.uniform()});
    return nodes;
}

NeighborhoodSpec random_spec(RandomStream& rng) {
    WeightKind kind = rng.uniform() < 0.5 ? WeightKind::exponential : WeightKind::reciprocal;
    if (rng.uniform() < 0.5)
        return NeighborhoodSpec::spherical(120.0 + 180.0 * rng.uniform(), kind);
    return NeighborhoodSpec::ellipsoidal(200.0 + 150.0 * rng.uniform(),
                                         200.0 + 150.0 * rng.uniform(),
                                         100.0 + 100.0 * rng.uniform(), kind,
                                         rng.normal() * 0.4, rng.normal() * 0.4,
                                         rng.normal() * 0.4);
}

/// max |P Q P' - L L'| over all entries, with L from the sparse factor.
double reconstruction_error(const SparseSymMatrix& q, const SparseCholesky& factor) {
    const int n = q.dim();
    std::vector<std::vector<double>> rec(n, std::vector<double>(n, 0.0));
    std::vector<std::vector<std::pair<int, double>>> cols(n);
    factor.for_each_factor_entry([&](int i, int j, double v) { cols[j].emplace_back(i, v); });
    for (int j = 0; j < n; ++j)
        for (const auto& [i, vi] : cols[j])
            for (const auto& [k, vk] : cols[j])
                if (k <= i) rec[i][k] += vi * vk;
    const auto& perm = factor.permutation();
    double err = 0.0;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k <= i; ++k) {
            double expected = q.coeff(perm.forward[i], perm.forward[k]);
            err = std::max(err, std::abs(rec[i][k] - expected));
        }
    return err;
}

struct DeskProblem {
    VoxelGrid grid;
    NeighborGraph graph; // structure 1 estimation graph
    ForwardProblem fp;
    std::vector<double> beta_true;
};

/// The Setup-II-style desk problem used by criteria 7 and 8: a compressed
/// spatial scale so prior and likelihood information per cell are
/// comparable (see README on scales).
DeskProblem make_setup2_problem(unsigned seed) {
    VoxelGrid grid;
    grid.counts = {8, 8, 4};
    grid.cell = {1.0, 1.0, 1.0};
    auto spec = NeighborhoodSpec::spherical(1.5, WeightKind::reciprocal);
    auto graph = NeighborGraph::build(grid.cell_centers(), spec);

    RandomStream grng(derive_seed(seed, 1));
    auto geom = generate_geometry(grid, 30, 40, 600, grng);
    auto fp = assemble_forward(grid, geom, ModelKind::model1, 10.0);

    std::vector<double> center(fp.dim(), 0.0);
    RandomStream trng(derive_seed(seed, 2));
    auto beta_true = draw_beta_true(graph, 0.18, 10.0, center, trng); // generating values
    NoiseSpec noise;
    noise.kind = NoiseKind::gaussian;
    noise.phi = 0.4;
    noise.seed = derive_seed(seed, 3);
    fp.y = synthesize_data(fp.X, beta_true, noise);
    return {grid, std::move(graph), std::move(fp), std::move(beta_true)};
}

HyperPriors desk_priors() {
    HyperPriors pri;
    pri.eta_usa = {1.0, 0.5}; // weakly informative at desk-scale d
    pri.phi = {1.0, 0.1};
    pri.psi = {10.0, 0.2};
    return pri;
}

ChainConfig desk_chain(int structure, std::uint64_t seed, std::int64_t iters = 7000) {
    ChainConfig cc;
    cc.iterations = iters;
    cc.burn_in = 1000;
    cc.thinning = 6;
    cc.structure = structure;
    cc.seed = seed;
    return cc;
}

// ------------------------------------------------------------- criteria

bool criterion_1(std::ostream& os) {
    Timer timer;
    RandomStream rng(20260811);
    double worst_rel = 0.0;
    for (int g = 0; g < 100; ++g) {
        int n = 5 + static_cast<int>(rng.uniform() * 196);
        NodeSet nodes = random_nodes(n, rng);
        NeighborhoodSpec spec = random_spec(rng);
        NeighborGraph graph = NeighborGraph::build(nodes, spec);

        SparseSymMatrix q0 = graph.precision(0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j)
                if (q0.coeff(i, j) != (i == j ? 1.0 : 0.0)) {
                    os << "criterion 1: FAIL - Q(0) not the exact identity (graph " << g << ")\n";
                    return false;
                }

        for (double psi : {0.1, 1.0, 10.0}) {
            SparseSymMatrix q = graph.precision(psi);
            double scale = 0.0;
            q.for_each_lower([&](int, int, double v) { scale = std::max(scale, std::abs(v)); });
            try {
                SparseCholesky factor(q);
                worst_rel = std::max(worst_rel, reconstruction_error(q, factor) / scale);
            } catch (const NotPositiveDefinite&) {
                os << "criterion 1: FAIL - factorization failed at psi=" << psi << " (graph " << g
                   << ")\n";
                return false;
            }
        }
    }
    double secs = timer.seconds();
    bool pass = worst_rel <= 1e-10 && secs < 10.0;
    os << "criterion 1: " << (pass ? "PASS" : "FAIL")
       << " - Q(0) exact identity on 100 graphs; reconstruction max rel err " << worst_rel
       << " (<= 1e-10) in " << secs << " s (< 10 s)\n";
    return pass;
}

bool criterion_2(std::ostream& os) {
    Timer timer;
    // dim-10 problem with fixed hyperparameters
    const int d = 10, n_obs = 25;
    RandomStream setup(321);
    SparseRowMatrix x(n_obs, d);
    std::vector<double> y(n_obs);
    for (int i = 0; i < n_obs; ++i) {
        std::vector<std::pair<int, double>> row;
        for (int j = 0; j < d; ++j)
            if (setup.uniform() < 0.5) row.emplace_back(j, setup.normal());
        if (row.empty()) row.emplace_back(i % d, 1.0);
        x.push_row(row);
        y[i] = 2.0 * setup.normal();
    }
    const double eta = 0.8, phi = 1.7;
    SparseSymMatrix xtx = x.normal_matrix();
    std::vector<Triplet> t;
    xtx.for_each_lower([&](int i, int j, double v) { t.push_back({i, j, phi * v}); });
    for (int j = 0; j < d; ++j) t.push_back({j, j, eta});
    SparseSymMatrix omega = SparseSymMatrix::from_triplets(d, t);
    std::vector<double> xi = x.apply_transpose(y);
    for (auto& v : xi) v *= phi;

    auto dense = oracle::to_dense(omega);
    auto cov_expected = oracle::inverse_spd(dense);
    auto mean_expected = oracle::solve_spd(dense, xi);

    SparseCholesky factor(omega);
    RandomStream rng(99);
    const int n_draws = 50000;
    std::vector<double> mean(d, 0.0);
    std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
    for (int r = 0; r < n_draws; ++r) {
        auto b = factor.sample(xi, rng);
        for (int i = 0; i < d; ++i) mean[i] += b[i];
        for (int i = 0; i < d; ++i)
            for (int j = 0; j <= i; ++j) cov[i][j] += b[i] * b[j];
    }
    for (auto& v : mean) v /= n_draws;
    double mean_err = 0.0, cov_err = 0.0, cov_scale = 0.0;
    for (int i = 0; i < d; ++i) {
        double sd = std::sqrt(cov_expected[i][i]);
        mean_err = std::max(mean_err, std::abs(mean[i] - mean_expected[i]) / sd);
        for (int j = 0; j <= i; ++j) {
            double c = cov[i][j] / n_draws - mean[i] * mean[j];
            cov_err = std::max(cov_err, std::abs(c - cov_expected[i][j]));
            cov_scale = std::max(cov_scale, std::abs(cov_expected[i][j]));
        }
    }
    double cov_rel = cov_err / cov_scale;
    double secs = timer.seconds();
    bool pass = mean_err <= 0.02 && cov_rel <= 0.05 && secs < 60.0;
    os << "criterion 2: " << (pass ? "PASS" : "FAIL") << " - 50000 draws, dim 10: mean err "
       << mean_err << " posterior sd (<= 0.02), cov err " << cov_rel << " (<= 0.05) in " << secs
       << " s (< 1 min)\n";
    return pass;
}

bool criterion_3(std::ostream& os) {
    Timer timer;
    // quadrature validation of the derived laws (once)
    RandomStream setup(55);
    const int n_obs = 14, d = 6;
    SparseRowMatrix x(n_obs, d);
    std::vector<double> y(n_obs);
    for (int i = 0; i < n_obs; ++i) {
        std::vector<std::pair<int, double>> row;
        for (int j = 0; j < d; ++j)
            if (setup.uniform() < 0.6) row.emplace_back(j, setup.normal());
        if (row.empty()) row.emplace_back(i % d, 1.0);
        x.push_row(row);
        y[i] = setup.normal();
    }
    ForwardProblem fp;
    fp.model = ModelKind::model1;
    fp.d_usa = d;
    fp.n_events = 0;
    fp.X = x;
    fp.y = y;

    VoxelGrid tiny;
    tiny.counts = {d, 1, 1};
    tiny.cell = {100.0, 100.0, 100.0};
    auto graph = NeighborGraph::build(tiny.cell_centers(),
                                      NeighborhoodSpec::spherical(150.0, WeightKind::reciprocal));
    HyperPriors pri;
    pri.phi = {1.0, 0.1};
    pri.eta_usa = {10.0, 2.0};
    ChainConfig cc;
    cc.structure = 1;
    Sampler sampler(fp, &graph, pri, cc);
    ChainState st = sampler.initial_state();
    for (auto& v : st.beta) v = setup.normal();
    st.psi = 4.0;

    auto phi_law = sampler.phi_conditional(st);
    double rss = 2.0 * (phi_law.rate - pri.phi.rate);
    auto phi_unnorm = [&](double p) {
        return p <= 0.0 ? 0.0
                        : std::exp((pri.phi.shape - 1.0) * std::log(p) - pri.phi.rate * p +
                                   0.5 * n_obs * std::log(p) - 0.5 * p * rss);
    };
    auto phi_mom = oracle::density_moments(
        phi_unnorm, 1e-10, phi_law.mean() + 14.0 * std::sqrt(phi_law.shape) / phi_law.rate);
    double phi_quad_err = std::abs(phi_law.mean() - phi_mom.mean) / phi_mom.mean;

    auto eta_law = sampler.eta_usa_conditional(st);
    double qf = 2.0 * (eta_law.rate - pri.eta_usa.rate);
    auto eta_unnorm = [&](double e) {
        return e <= 0.0 ? 0.0
                        : std::exp((pri.eta_usa.shape - 1.0) * std::log(e) - pri.eta_usa.rate * e +
                                   0.5 * d * std::log(e) - 0.5 * e * qf);
    };
    auto eta_mom = oracle::density_moments(
        eta_unnorm, 1e-10, eta_law.mean() + 14.0 * std::sqrt(eta_law.shape) / eta_law.rate);
    double eta_quad_err = std::abs(eta_law.mean() - eta_mom.mean) / eta_mom.mean;

    // goodness of fit across 20 seeds
    double min_p_phi = 1.0, min_p_eta = 1.0;
    for (unsigned seed = 1; seed <= 20; ++seed) {
        RandomStream rng(derive_seed(seed, 777));
        std::vector<double> phi_draws(2000), eta_draws(2000);
        ChainState work = st;
        for (int r = 0; r < 2000; ++r) {
            sampler.update_precisions(work, rng);
            phi_draws[r] = work.phi;
            eta_draws[r] = work.eta_usa;
        }
        min_p_phi = std::min(min_p_phi,
                             oracle::ks_test_pvalue(phi_draws, [&](double v) {
                                 return oracle::gamma_cdf(v, phi_law.shape, phi_law.rate);
                             }));
        min_p_eta = std::min(min_p_eta,
                             oracle::ks_test_pvalue(eta_draws, [&](double v) {
                                 return oracle::gamma_cdf(v, eta_law.shape, eta_law.rate);
                             }));
    }
    double secs = timer.seconds();
    bool pass = phi_quad_err <= 1e-3 && eta_quad_err <= 1e-3 && min_p_phi > 0.01 &&
                min_p_eta > 0.01;
    os << "criterion 3: " << (pass ? "PASS" : "FAIL") << " - quadrature rel err of means (phi "
       << phi_quad_err << ", eta " << eta_quad_err << ", <= 1e-3); KS p-values over 20 seeds >= ("
       << min_p_phi << ", " << min_p_eta << ") (> 0.01) in " << secs << " s\n";
    return pass;
}

bool criterion_4(std::ostream& os) {
    Timer timer;
    RandomStream rng(4242);
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        int d = 10 + static_cast<int>(rng.uniform() * 91); // up to 100
        int n = d + 20 + static_cast<int>(rng.uniform() * 60);
        SparseRowMatrix x(n, d);
        std::vector<double> y(n);
        for (int i = 0; i < n; ++i) {
            std::vector<std::pair<int, double>> row;
            for (int j = 0; j < d; ++j)
                if (rng.uniform() < 0.25) row.emplace_back(j, rng.normal());
            if (row.empty()) row.emplace_back(i % d, 1.0);
            x.push_row(row);
            y[i] = 2.0 * rng.normal();
        }
        std::vector<double> beta0(d);
        for (auto& v : beta0) v = 0.4 * rng.normal();

        ForwardProblem fp;
        fp.model = ModelKind::model1;
        fp.d_usa = d;
        fp.n_events = 0;
        fp.X = x;
        fp.y = y;
        HyperPriors pri;
        pri.beta0 = beta0;
        ChainConfig cc;
        cc.structure = 0;
        Sampler sampler(fp, nullptr, pri, cc);
        ChainState st = sampler.initial_state();
        st.eta_usa = 0.3 + 2.0 * rng.uniform();
        st.phi = 0.3 + 2.0 * rng.uniform();

        auto mean = sampler.conditional_mean(st);
        auto ridge = modified_ridge(x, y, st.eta_usa / st.phi, beta0);
        for (int j = 0; j < d; ++j)
            worst = std::max(worst,
                             std::abs(mean[j] - ridge[j]) / std::max(1e-12, std::abs(ridge[j])));
    }
    double secs = timer.seconds();
    bool pass = worst <= 1e-8 && secs < 5.0;
    os << "criterion 4: " << (pass ? "PASS" : "FAIL")
       << " - conditional mean vs modified ridge on 10 instances: max rel err " << worst
       << " (<= 1e-8) in " << secs << " s (< 5 s)\n";
    return pass;
}

bool criterion_5(std::ostream& os) {
    Timer timer;
    // two nodes with unit weight: log|Q(psi)| = log(1 + 2 psi)
    NodeSet nodes;
    nodes.coords = {{0.0, 0.0, 0.0}, {100.0, 0.0, 0.0}};
    auto graph =
        NeighborGraph::build(nodes, NeighborhoodSpec::spherical(200.0, WeightKind::reciprocal));
    ForwardProblem fp;
    fp.model = ModelKind::model1;
    fp.d_usa = 2;
    fp.n_events = 0;
    fp.X = SparseRowMatrix(0, 2);

    HyperPriors pri;
    pri.psi = {2.0, 2.0};
    ChainConfig cc;
    cc.structure = 1;
    Sampler sampler(fp, &graph, pri, cc);
    ChainState st = sampler.initial_state();
    st.beta = {0.9, -0.3};
    st.eta_usa = 1.3;

    auto target = [&](double psi) {
        if (psi <= 0.0) return 0.0;
        double qf = st.beta[0] * st.beta[0] + st.beta[1] * st.beta[1] +
                    psi * (st.beta[0] - st.beta[1]) * (st.beta[0] - st.beta[1]);
        double z = (psi - pri.psi.mean) / pri.psi.sd;
        return std::exp(0.5 * std::log(1.0 + 2.0 * psi) - 0.5 * st.eta_usa * qf - 0.5 * z * z);
    };
    auto quad = oracle::density_moments(target, 1e-9, 20.0, 16384);

    st.psi = pri.psi.mean;
    st.proposal_sd = 1.2;
    RandomStream rng(31415);
    const int steps = 300000, burn = 20000;
    double s1 = 0.0, s2 = 0.0;
    for (int t = 1; t <= steps; ++t) {
        sampler.update_psi(st, rng);
        if (t > burn) {
            s1 += st.psi;
            s2 += st.psi * st.psi;
        }
    }
    const double n = steps - burn;
    double mean = s1 / n;
    double sd = std::sqrt(std::max(0.0, s2 / n - mean * mean));
    double mean_err = std::abs(mean - quad.mean) / quad.mean;
    double sd_err = std::abs(sd - quad.sd) / quad.sd;
    double accept = static_cast<double>(st.psi_accepted) / st.psi_proposals;
    double secs = timer.seconds();
    bool pass = mean_err <= 0.03 && sd_err <= 0.03 && secs < 60.0;
    os << "criterion 5: " << (pass ? "PASS" : "FAIL") << " - psi marginal vs quadrature: mean "
       << mean << " (ref " << quad.mean << ", rel err " << mean_err << "), sd " << sd << " (ref "
       << quad.sd << ", rel err " << sd_err << "), both <= 0.03, acceptance " << accept << ", in "
       << secs << " s (< 1 min)\n";
    return pass;
}

bool criterion_6(std::ostream& os) {
    Timer timer;
    // desk-scale Omega pattern: 864-node grid, ellipsoidal neighborhoods,
    // default acquisition
    VoxelGrid grid;
    grid.counts = {12, 12, 6};
    grid.cell = {100.0, 100.0, 100.0};
    auto spec = NeighborhoodSpec::ellipsoidal(300.0, 300.0, 150.0, WeightKind::reciprocal);
    auto graph = NeighborGraph::build(grid.cell_centers(), spec);

    RandomStream grng(606);
    auto geom = generate_geometry(grid, 40, 60, 2000, grng);
    auto fp = assemble_forward(grid, geom, ModelKind::model1, 10.0);

    SparseSymMatrix q = graph.precision(10.0);
    SparseSymMatrix xtx = fp.X.normal_matrix();
    std::vector<Triplet> t;
    q.for_each_lower([&](int i, int j, double v) { t.push_back({i, j, v}); });
    xtx.for_each_lower([&](int i, int j, double v) { t.push_back({i, j, 0.4 * v}); });
    SparseSymMatrix omega = SparseSymMatrix::from_triplets(864, t);

    auto ordering = min_degree_ordering(omega);
    auto nnz_ord = cholesky_factor_nnz(omega, ordering);
    auto nnz_nat = cholesky_factor_nnz(omega, Permutation::identity(864));
    auto nnz_rev = cholesky_factor_nnz(omega, Permutation::reversed(864));
    double reduction = 1.0 - static_cast<double>(nnz_ord) / static_cast<double>(nnz_nat);
    double secs = timer.seconds();
    bool pass = reduction >= 0.20 && nnz_ord <= std::min(nnz_nat, nnz_rev);
    os << "criterion 6: " << (pass ? "PASS" : "FAIL") << " - factor nnz " << nnz_ord
       << " ordered vs " << nnz_nat << " natural / " << nnz_rev << " reversed: reduction "
       << 100.0 * reduction
       << "% (>= 20%; the 50% figure reported for the 11,000-parameter problem is informational) in "
       << secs << " s\n";
    return pass;
}

bool criterion_7(std::ostream& os) {
    Timer timer;
    int wins = 0;
    std::ostringstream detail;
    for (unsigned seed = 1; seed <= 5; ++seed) {
        DeskProblem p = make_setup2_problem(seed);
        HyperPriors pri = desk_priors();

        Sampler s1(p.fp, &p.graph, pri, desk_chain(1, derive_seed(seed, 4)));
        auto r1 = s1.run();
        auto d1 = dic(r1, p.fp);
        Sampler s0(p.fp, nullptr, pri, desk_chain(0, derive_seed(seed, 5)));
        auto r0 = s0.run();
        auto d0 = dic(r0, p.fp);
        bool win = d1.dic < d0.dic;
        wins += win;
        detail << " seed " << seed << ": DIC(true structure 1) " << d1.dic << " vs DIC(0) "
               << d0.dic << (win ? " +" : " -");
    }
    double secs = timer.seconds();
    bool pass = wins >= 4 && secs < 1800.0;
    os << "criterion 7: " << (pass ? "PASS" : "FAIL")
       << " - DIC prefers the generating structure in " << wins << "/5 seeds (>= 4);" << detail.str()
       << "; " << secs << " s (< 30 min)\n";
    return pass;
}

bool criterion_8(std::ostream& os) {
    Timer timer;
    std::int64_t covered = 0, total = 0;
    for (unsigned seed = 1; seed <= 5; ++seed) {
        DeskProblem p = make_setup2_problem(seed);
        HyperPriors pri = desk_priors();
        Sampler s1(p.fp, &p.graph, pri, desk_chain(1, derive_seed(seed, 4)));
        auto r1 = s1.run();
        auto summary = summarize(r1, p.fp, 0.05, 0.95, &p.beta_true, &p.graph);
        for (int j = 0; j < p.fp.dim(); ++j) {
            ++total;
            if (p.beta_true[j] >= summary.lower[j] && p.beta_true[j] <= summary.upper[j])
                ++covered;
        }
    }
    double coverage = static_cast<double>(covered) / static_cast<double>(total);
    double secs = timer.seconds();
    bool pass = coverage >= 0.85 && coverage <= 0.95;
    os << "criterion 8: " << (pass ? "PASS" : "FAIL") << " - aggregated 90% interval coverage "
       << coverage << " over " << total << " component draws across 5 seeds (within [0.85, 0.95]) in "
       << secs << " s\n";
    return pass;
}

bool criterion_9(std::ostream& os) {
    Timer timer;
    int wins_width = 0, wins_significance = 0;
    std::ostringstream detail;
    for (unsigned seed = 1; seed <= 5; ++seed) {
        VoxelGrid grid;
        grid.counts = {8, 8, 4};
        grid.cell = {1.0, 1.0, 1.0};
        auto spec = NeighborhoodSpec::spherical(1.5, WeightKind::reciprocal);
        auto graph = NeighborGraph::build(grid.cell_centers(), spec);
        RandomStream grng(derive_seed(seed, 11));
        auto geom = generate_geometry(grid, 30, 40, 600, grng);
        auto fp = assemble_forward(grid, geom, ModelKind::model1, 10.0);
        auto beta_true = blob_truth(grid, 2.0);

        NoiseSpec gaussian{NoiseKind::gaussian, 0.4, 3.0, derive_seed(seed, 12)};
        NoiseSpec student{NoiseKind::student_t, 0.4, 3.0, derive_seed(seed, 12)};
        auto y_gauss = synthesize_data(fp.X, beta_true, gaussian);
        auto y_student = synthesize_data(fp.X, beta_true, student);

        // informative prior mean: perturbed damped-LSQR centering
        RidgeSolution ls = lsqr(fp.X, y_gauss, 1.0);
        RandomStream prng(derive_seed(seed, 13));
        std::vector<double> beta0_inf(fp.dim());
        for (int j = 0; j < fp.dim(); ++j) beta0_inf[j] = ls.beta[j] + 0.32 * prng.normal();

        auto run_case = [&](const std::vector<double>& y, const std::vector<double>& beta0,
                            unsigned stream) {
            ForwardProblem problem = fp;
            problem.y = y;
            HyperPriors pri = desk_priors();
            pri.beta0 = beta0;
            ChainConfig cc = desk_chain(1, derive_seed(seed, stream), 4000);
            Sampler s(problem, &graph, pri, cc);
            auto r = s.run();
            return summarize(r, problem, 0.05, 0.95, &beta_true, &graph);
        };
        auto m_gauss = run_case(y_gauss, beta0_inf, 21);
        auto m_student = run_case(y_student, beta0_inf, 22);
        auto m_zero = run_case(y_gauss, std::vector<double>(fp.dim(), 0.0), 23);

        double w_gauss = 0.0, w_student = 0.0;
        for (int j = 0; j < fp.dim(); ++j) {
            w_gauss += m_gauss.upper[j] - m_gauss.lower[j];
            w_student += m_student.upper[j] - m_student.lower[j];
        }
        bool a = w_student > w_gauss;
        bool b = m_gauss.n_significant > m_zero.n_significant;
        wins_width += a;
        wins_significance += b;
        detail << " seed " << seed << ": width t/gauss " << w_student / w_gauss << ", significant "
               << m_gauss.n_significant << " vs " << m_zero.n_significant << ";";
    }
    double secs = timer.seconds();
    bool pass = wins_width >= 4 && wins_significance >= 4;
    os << "criterion 9: " << (pass ? "PASS" : "FAIL") << " - (a) wider intervals under t-noise in "
       << wins_width << "/5, (b) fewer significant nodes with zero prior mean in "
       << wins_significance << "/5 (each >= 4);" << detail.str() << " " << secs << " s\n";
    return pass;
}

bool criterion_10(std::ostream& os) {
    Timer timer;
    RandomStream rng(777);
    const int n = 100000;
    std::vector<double> iid(n), ar(n);
    double prev = 0.0;
    for (int i = 0; i < n; ++i) {
        iid[i] = rng.normal();
        prev = 0.5 * prev + rng.normal();
        ar[i] = prev;
    }
    double ess_iid = effective_sample_size(std::span<const double>(iid).first(10000));
    double ess_ar = effective_sample_size(ar);
    double iid_err = std::abs(ess_iid - 10000.0) / 10000.0;
    double ar_target = n * (1.0 - 0.5) / (1.0 + 0.5);
    double ar_err = std::abs(ess_ar - ar_target) / ar_target;
    double secs = timer.seconds();
    bool pass = iid_err <= 0.10 && ar_err <= 0.10;
    os << "criterion 10: " << (pass ? "PASS" : "FAIL") << " - ESS i.i.d. " << ess_iid
       << " vs 10000 (rel err " << iid_err << "), AR(0.5) " << ess_ar << " vs " << ar_target
       << " (rel err " << ar_err << "), both <= 0.10, in " << secs << " s\n";
    return pass;
}

} // namespace

int main(int argc, char** argv) {
    std::map<int, std::function<bool(std::ostream&)>> criteria{
        {1, criterion_1}, {2, criterion_2}, {3, criterion_3}, {4, criterion_4},
        {5, criterion_5}, {6, criterion_6}, {7, criterion_7}, {8, criterion_8},
        {9, criterion_9}, {10, criterion_10},
    };

    std::vector<int> selected;
    if (argc > 1) {
        for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
    } else {
        for (const auto& [k, f] : criteria) selected.push_back(k);
    }

    bool all_pass = true;
    for (int k : selected) {
        auto it = criteria.find(k);
        if (it == criteria.end()) {
            std::cerr << "unknown criterion " << k << "\n";
            return 2;
        }
        all_pass &= it->second(std::cout);
    }
    if (argc == 1)
        std::cout << "criterion 11: NOTE - paper-scale DIC/misfit magnitudes are not desk-scale "
                     "reproducible; criteria 1-10 substitute for them\n";
    return all_pass ? 0 : 1;
}
