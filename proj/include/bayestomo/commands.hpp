#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "bayestomo/config.hpp"
#include "bayestomo/diagnostics.hpp"
#include "bayestomo/io.hpp"
#include "bayestomo/lsqr.hpp"
#include "bayestomo/sampler.hpp"

namespace bayestomo {

struct CommandOptions {
    std::filesystem::path out_dir;
    bool quiet = false;
    int workers = 1;
    bool export_csv = false;
};

/// Deterministic smooth truth for the Setup-I-style studies: two
/// opposite-sign Gaussian anomalies inside the volume.
inline std::vector<double> blob_truth(const VoxelGrid& grid, double amplitude) {
    const Point3 hi = grid.max_corner();
    auto frac = [&](double fx, double fy, double fz) {
        return Point3{grid.origin[0] + fx * (hi[0] - grid.origin[0]),
                      grid.origin[1] + fy * (hi[1] - grid.origin[1]),
                      grid.origin[2] + fz * (hi[2] - grid.origin[2])};
    };
    const Point3 c1 = frac(0.3, 0.35, 0.4);
    const Point3 c2 = frac(0.7, 0.65, 0.6);
    const double s = 1.5 * grid.cell[0];
    std::vector<double> beta(grid.cell_count());
    for (int f = 0; f < grid.cell_count(); ++f) {
        Point3 p = grid.cell_center(f);
        auto d2 = [&](const Point3& c) {
            double dx = p[0] - c[0], dy = p[1] - c[1], dz = p[2] - c[2];
            return dx * dx + dy * dy + dz * dz;
        };
        beta[f] = amplitude * (std::exp(-d2(c1) / (2 * s * s)) - std::exp(-d2(c2) / (2 * s * s)));
    }
    return beta;
}

namespace detail {

inline EventStationGeometry resolve_geometry(const RunConfig& cfg) {
    if (cfg.geometry.generate) {
        RandomStream rng(cfg.geometry.seed);
        return generate_geometry(cfg.grid, cfg.geometry.events, cfg.geometry.stations,
                                 cfg.geometry.paths, rng, cfg.geometry.depth_factor);
    }
    return load_geometry_csv(cfg.geometry.events_csv, cfg.geometry.stations_csv,
                             cfg.geometry.paths_csv);
}

/// True parameter vector in the full layout; source corrections (model 2)
/// are drawn from their priors.
inline std::vector<double> resolve_truth(const RunConfig& cfg, const ForwardProblem& fp) {
    std::vector<double> beta(fp.dim(), 0.0);
    std::vector<double> usa;
    switch (cfg.truth.kind) {
        case TruthKind::blobs: usa = blob_truth(cfg.grid, cfg.truth.blob_amplitude); break;
        case TruthKind::gmrf: {
            NodeSet nodes = cfg.grid.cell_centers();
            NeighborhoodSpec spec = spec_for_structure(cfg.truth.structure, cfg.neighborhood);
            NeighborGraph graph = NeighborGraph::build(nodes, spec);
            std::vector<double> center(fp.d_usa, 0.0);
            RandomStream rng(derive_seed(cfg.noise.seed, 0x7472757468ULL)); // "truth" stream
            usa = draw_beta_true(graph, cfg.truth.eta, cfg.truth.psi, center, rng);
            break;
        }
        case TruthKind::file: usa = load_vector_csv(cfg.truth.file, "beta_true"); break;
    }
    if (static_cast<int>(usa.size()) != fp.d_usa)
        throw ConfigError("truth length does not match the grid cell count");
    std::copy(usa.begin(), usa.end(), beta.begin());
    if (fp.model == ModelKind::model2) {
        RandomStream rng(derive_seed(cfg.noise.seed, 0x636f7272ULL)); // source-correction stream
        double sd_hyp = 1.0 / std::sqrt(cfg.hyperpriors.eta_hyp.mean());
        double sd_time = 1.0 / std::sqrt(cfg.hyperpriors.eta_time.mean());
        for (int j = fp.d_usa; j < fp.d_usa + fp.d_hyp(); ++j) beta[j] = sd_hyp * rng.normal();
        for (int j = fp.d_usa + fp.d_hyp(); j < fp.dim(); ++j) beta[j] = sd_time * rng.normal();
    }
    return beta;
}

inline std::vector<double> resolve_beta0(const RunConfig& cfg, const ForwardProblem& fp) {
    std::vector<double> beta0(fp.dim(), 0.0);
    switch (cfg.beta0_kind) {
        case Beta0Kind::zero: break;
        case Beta0Kind::file: {
            std::vector<double> usa = load_vector_csv(cfg.beta0_file, "beta0");
            if (static_cast<int>(usa.size()) != fp.d_usa)
                throw ConfigError("beta0 file length does not match the grid cell count");
            std::copy(usa.begin(), usa.end(), beta0.begin());
            break;
        }
        case Beta0Kind::lsqr_perturbed: {
            RidgeSolution ls = lsqr(fp.X, fp.y, cfg.beta0_lsqr.damping);
            RandomStream rng(cfg.beta0_lsqr.seed);
            for (int j = 0; j < fp.d_usa; ++j)
                beta0[j] = ls.beta[j] + cfg.beta0_lsqr.sd * rng.normal();
            break;
        }
    }
    return beta0;
}

inline std::optional<NeighborGraph> build_estimation_graph(const RunConfig& cfg) {
    if (!structure_is_spatial(cfg.structure)) return std::nullopt;
    NodeSet nodes = cfg.grid.cell_centers();
    return NeighborGraph::build(nodes, spec_for_structure(cfg.structure, cfg.neighborhood));
}

inline std::filesystem::path resolve_out_dir(const RunConfig& cfg, const CommandOptions& opt) {
    std::filesystem::path dir = opt.out_dir.empty() ? std::filesystem::path(cfg.output)
                                                    : opt.out_dir;
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    auto out = io::open_output(path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return j;
}

inline std::string hex_hash(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

} // namespace detail

/// generate: geometry, forward matrix, synthetic observations and (when
/// the truth is synthetic) the true parameter vector, all stamped with the
/// problem hash. Outputs are byte-identical for a fixed (config, seed).
inline int cmd_generate(const RunConfig& cfg, const CommandOptions& opt) {
    const auto dir = detail::resolve_out_dir(cfg, opt);
    const std::uint64_t phash = cfg.problem_hash();

    EventStationGeometry geom = detail::resolve_geometry(cfg);
    ForwardProblem fp = assemble_forward(cfg.grid, geom, cfg.model, cfg.reference_velocity);
    std::vector<double> beta_true = detail::resolve_truth(cfg, fp);
    fp.y = synthesize_data(fp.X, beta_true, cfg.noise);

    write_geometry_csv(dir, geom, phash);
    write_nodes_csv(dir / "nodes.csv", cfg.grid.cell_centers(), phash);
    write_forward_binary(dir / "forward.bin", fp, phash);
    write_vector_csv(dir / "y.csv", "y", fp.y, phash);
    write_vector_csv(dir / "beta_true.csv", "beta_true", beta_true, phash);

    nlohmann::json manifest;
    manifest["config"] = cfg.to_json();
    manifest["config_hash"] = detail::hex_hash(cfg.hash());
    manifest["problem_hash"] = detail::hex_hash(phash);
    manifest["n_obs"] = fp.n_obs();
    manifest["dim"] = fp.dim();
    manifest["d_usa"] = fp.d_usa;
    detail::write_json_file(dir / "problem_manifest.json", manifest);

    if (!opt.quiet)
        std::cout << "generated " << fp.n_obs() << " observations, " << fp.dim()
                  << " parameters -> " << dir.string() << '\n';
    return 0;
}

/// Loads forward.bin + y.csv from a generate directory, checking hashes.
inline ForwardProblem load_problem_dir(const std::filesystem::path& dir,
                                       std::uint64_t expected_problem_hash) {
    std::uint64_t file_hash = 0;
    ForwardProblem fp = load_forward_binary(dir / "forward.bin", &file_hash);
    if (file_hash != expected_problem_hash)
        throw ConfigError("forward.bin was generated by a different problem configuration");
    auto y_hash = io::read_hash_comment(dir / "y.csv");
    if (!y_hash || *y_hash != expected_problem_hash)
        throw ConfigError("y.csv does not match the problem configuration");
    fp.y = load_vector_csv(dir / "y.csv", "y");
    if (static_cast<int>(fp.y.size()) != fp.n_obs())
        throw IoError("y.csv length does not match the forward matrix");
    return fp;
}

/// sample: runs the chain on a generated problem, streaming the trace as
/// framed binary records, and writes the run manifest.
inline int cmd_sample(const RunConfig& cfg, const CommandOptions& opt) {
    const auto dir = detail::resolve_out_dir(cfg, opt);
    const std::uint64_t phash = cfg.problem_hash();

    ForwardProblem fp = load_problem_dir(dir, phash);
    auto graph = detail::build_estimation_graph(cfg);
    HyperPriors priors = cfg.hyperpriors;
    priors.beta0 = detail::resolve_beta0(cfg, fp);

    ChainConfig chain = cfg.chain;
    chain.model = cfg.model; // the chain follows the top-level model/structure
    chain.structure = cfg.structure;
    Sampler sampler(fp, graph ? &*graph : nullptr, priors, chain);

    const std::string trace_name = "trace_s" + std::to_string(cfg.structure) + ".bin";
    TraceWriter writer(dir / trace_name, phash, fp.dim(), fp.d_usa, fp.model, cfg.structure);

    auto t0 = std::chrono::steady_clock::now();
    ChainSamples samples = sampler.run([&](const ChainState& st, double ll, double lp) {
        writer.append(st.iteration, st.beta, st.eta_usa, st.eta_hyp, st.eta_time, st.phi, st.psi,
                      ll, lp);
    });
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (opt.export_csv) export_trace_csv(dir / ("trace_s" + std::to_string(cfg.structure) + ".csv"),
                                         samples, phash);

    nlohmann::json manifest;
    manifest["config"] = cfg.to_json();
    manifest["config_hash"] = detail::hex_hash(cfg.hash());
    manifest["problem_hash"] = detail::hex_hash(phash);
    manifest["seed"] = cfg.chain.seed;
    manifest["structure"] = cfg.structure;
    manifest["stored_draws"] = samples.stored();
    manifest["psi_acceptance_rate"] = samples.psi_acceptance_rate;
    manifest["final_proposal_sd"] = samples.final_proposal_sd;
    manifest["wall_seconds"] = seconds; // timing: the one nondeterministic field
    detail::write_json_file(dir / ("run_manifest_s" + std::to_string(cfg.structure) + ".json"),
                            manifest);

    if (!opt.quiet)
        std::cout << "sampled " << samples.stored() << " draws (structure " << cfg.structure
                  << ", psi acceptance " << samples.psi_acceptance_rate << ") in " << seconds
                  << " s\n";
    return 0;
}

inline void write_summary_csv(const std::filesystem::path& path, const PosteriorSummary& s,
                              const NodeSet& nodes, int d_usa, std::uint64_t hash) {
    auto out = io::open_output(path);
    out << io::hash_comment(hash) << "id,x,y,z,mean,mode,q05,q95,ess,significant\n";
    for (int j = 0; j < d_usa; ++j) {
        out << j << ',' << io::format_double(nodes.coords[j][0]) << ','
            << io::format_double(nodes.coords[j][1]) << ','
            << io::format_double(nodes.coords[j][2]) << ',' << io::format_double(s.mean[j]) << ','
            << io::format_double(s.mode[j]) << ',' << io::format_double(s.lower[j]) << ','
            << io::format_double(s.upper[j]) << ',' << io::format_double(s.ess[j]) << ','
            << (s.significant[j] ? 1 : 0) << '\n';
    }
}

inline nlohmann::json summary_to_json(const PosteriorSummary& s) {
    auto scalar = [](const ScalarSummary& v) {
        return nlohmann::json{{"mean", v.mean},
                              {"mode", v.mode},
                              {"q_lower", v.lower},
                              {"q_upper", v.upper},
                              {"ess", v.ess}};
    };
    nlohmann::json j;
    j["dic"] = s.dic;
    j["p_d"] = s.p_d;
    j["mean_deviance"] = s.mean_deviance;
    j["data_misfit_mode"] = s.misfit_mode;
    j["data_misfit_lower"] = s.misfit_lower;
    j["data_misfit_upper"] = s.misfit_upper;
    if (s.model_misfit) j["model_misfit"] = *s.model_misfit;
    j["n_significant"] = s.n_significant;
    j["interval"] = {{"lower_prob", s.lower_prob}, {"upper_prob", s.upper_prob}};
    j["eta_usa"] = scalar(s.eta_usa);
    j["eta_hyp"] = scalar(s.eta_hyp);
    j["eta_time"] = scalar(s.eta_time);
    j["phi"] = scalar(s.phi_summary);
    j["psi"] = scalar(s.psi_summary);
    return j;
}

/// diagnose: posterior summary of a trace against its problem; refuses
/// traces whose problem hash disagrees with the configuration.
inline int cmd_diagnose(const RunConfig& cfg, const CommandOptions& opt,
                        const std::optional<std::filesystem::path>& beta_true_path) {
    const auto dir = detail::resolve_out_dir(cfg, opt);
    const std::uint64_t phash = cfg.problem_hash();

    ForwardProblem fp = load_problem_dir(dir, phash);
    const std::string trace_name = "trace_s" + std::to_string(cfg.structure) + ".bin";
    std::uint64_t trace_hash = 0;
    ChainSamples samples = load_trace(dir / trace_name, &trace_hash);
    if (trace_hash != phash)
        throw ConfigError("trace was sampled from a different problem configuration");
    if (samples.dim != fp.dim())
        throw ConfigError("trace stores a node subset; diagnose needs full draws");

    std::optional<std::vector<double>> beta_true;
    if (beta_true_path) {
        std::vector<double> usa = load_vector_csv(*beta_true_path, "beta_true");
        beta_true.emplace(fp.dim(), 0.0);
        if (static_cast<int>(usa.size()) == fp.dim()) {
            *beta_true = usa;
        } else if (static_cast<int>(usa.size()) == fp.d_usa) {
            std::copy(usa.begin(), usa.end(), beta_true->begin());
        } else {
            throw ConfigError("beta_true length matches neither d_usa nor the full dimension");
        }
    }

    auto graph = detail::build_estimation_graph(cfg);
    PosteriorSummary summary =
        summarize(samples, fp, 0.05, 0.95, beta_true ? &*beta_true : nullptr,
                  graph ? &*graph : nullptr);

    nlohmann::json j = summary_to_json(summary);
    j["problem_hash"] = detail::hex_hash(phash);
    j["config_hash"] = detail::hex_hash(cfg.hash());
    j["structure"] = cfg.structure;
    j["stored_draws"] = samples.stored();
    detail::write_json_file(dir / ("summary_s" + std::to_string(cfg.structure) + ".json"), j);
    write_summary_csv(dir / ("summary_s" + std::to_string(cfg.structure) + ".csv"), summary,
                      cfg.grid.cell_centers(), fp.d_usa, phash);

    if (!opt.quiet)
        std::cout << "structure " << cfg.structure << ": DIC " << summary.dic << ", p_D "
                  << summary.p_d << ", " << summary.n_significant << " significant nodes\n";
    return 0;
}

/// lsqr: damped least-squares baseline on the generated problem; the CSV
/// uses the summary schema so the outputs can be compared side by side.
inline int cmd_lsqr(const RunConfig& cfg, const CommandOptions& opt, double damping) {
    const auto dir = detail::resolve_out_dir(cfg, opt);
    const std::uint64_t phash = cfg.problem_hash();
    ForwardProblem fp = load_problem_dir(dir, phash);

    RidgeSolution sol = lsqr(fp.X, fp.y, damping);
    NodeSet nodes = cfg.grid.cell_centers();
    auto out = io::open_output(dir / "lsqr_solution.csv");
    out << io::hash_comment(phash) << "id,x,y,z,mean,mode,q05,q95,ess,significant\n";
    for (int j = 0; j < fp.d_usa; ++j) {
        const std::string b = io::format_double(sol.beta[j]);
        out << j << ',' << io::format_double(nodes.coords[j][0]) << ','
            << io::format_double(nodes.coords[j][1]) << ','
            << io::format_double(nodes.coords[j][2]) << ',' << b << ',' << b << ',' << b << ','
            << b << ",0,0\n";
    }
    if (!opt.quiet)
        std::cout << "lsqr: " << sol.iterations << " iterations, residual " << sol.residual_norm
                  << (sol.converged ? "" : " (max iterations reached)") << '\n';
    return 0;
}

// ---- study driver ----

enum class StudySetup { I_a, I_b, II_a, II_b };

inline StudySetup parse_setup(const std::string& s) {
    if (s == "I_a") return StudySetup::I_a;
    if (s == "I_b") return StudySetup::I_b;
    if (s == "II_a") return StudySetup::II_a;
    if (s == "II_b") return StudySetup::II_b;
    throw ConfigError("setup must be one of I_a, I_b, II_a, II_b");
}

struct StudyCell {
    StudySetup setup;
    std::uint64_t seed;
    NoiseKind noise;
    int structure;
};

struct StudyResult {
    StudyCell cell;
    bool ok = false;
    std::string error;
    double dic = 0, p_d = 0, mean_deviance = 0;
    double misfit_mode = 0, misfit_lower = 0, misfit_upper = 0;
    double model_misfit = 0;
    double coverage90 = 0;
    int n_significant = 0;
    double mean_ci_width = 0;
    double eta_usa_mode = 0, phi_mode = 0, psi_mode = 0;
    double psi_acceptance = 0;
};

/// Reduced-size defaults for the scenario studies; chosen so that prior
/// and likelihood information per cell are comparable and chains run in
/// seconds (see README on scales).
struct StudyDefaults {
    std::array<int, 3> counts{8, 8, 4};
    double cell_size = 1.0;
    double spherical_radius = 1.5;
    double ellipsoid_dx = 3.0, ellipsoid_dy = 3.0, ellipsoid_dz = 1.5;
    int events = 30, stations = 40, paths = 600;
    std::int64_t iterations = 4000, burn_in = 1000, thinning = 6;
    double truth_eta = 0.18, truth_psi = 10.0; // Setup II generating values
    double truth_blob_amplitude = 2.0;         // Setup I truth
    double noise_phi = 0.4, noise_nu = 3.0;
    GammaPrior eta_usa_prior{1.0, 0.5};
    GammaPrior phi_prior{1.0, 0.1};
    PsiPrior psi_prior{10.0, 0.2};
};

inline StudyResult run_study_cell(const StudyCell& cell, const StudyDefaults& d) {
    StudyResult res;
    res.cell = cell;
    try {
        VoxelGrid grid;
        grid.counts = d.counts;
        grid.cell = {d.cell_size, d.cell_size, d.cell_size};
        NeighborhoodConfig ncfg;
        ncfg.spherical_radius = d.spherical_radius;
        ncfg.ellipsoid_dx = d.ellipsoid_dx;
        ncfg.ellipsoid_dy = d.ellipsoid_dy;
        ncfg.ellipsoid_dz = d.ellipsoid_dz;

        RandomStream grng(derive_seed(cell.seed, 101));
        EventStationGeometry geom = generate_geometry(grid, d.events, d.stations, d.paths, grng);
        ForwardProblem fp = assemble_forward(grid, geom, ModelKind::model1, 10.0);

        const bool setup_one = cell.setup == StudySetup::I_a || cell.setup == StudySetup::I_b;
        std::vector<double> beta_true;
        if (setup_one) {
            beta_true = blob_truth(grid, d.truth_blob_amplitude);
        } else {
            int truth_structure = cell.setup == StudySetup::II_a ? 1 : 2;
            NodeSet nodes = grid.cell_centers();
            NeighborGraph tg =
                NeighborGraph::build(nodes, spec_for_structure(truth_structure, ncfg));
            std::vector<double> center(fp.dim(), 0.0);
            RandomStream trng(derive_seed(cell.seed, 102));
            beta_true = draw_beta_true(tg, d.truth_eta, d.truth_psi, center, trng);
        }
        NoiseSpec noise;
        noise.kind = cell.noise;
        noise.phi = d.noise_phi;
        noise.nu = d.noise_nu;
        noise.seed = derive_seed(cell.seed, 103);
        fp.y = synthesize_data(fp.X, beta_true, noise);

        HyperPriors priors;
        priors.eta_usa = d.eta_usa_prior;
        priors.phi = d.phi_prior;
        priors.psi = d.psi_prior;
        const bool informative =
            cell.setup == StudySetup::I_a || cell.setup == StudySetup::II_a;
        if (informative) {
            RidgeSolution ls = lsqr(fp.X, fp.y, 1.0);
            RandomStream prng(derive_seed(cell.seed, 104));
            priors.beta0.assign(fp.dim(), 0.0);
            for (int j = 0; j < fp.d_usa; ++j)
                priors.beta0[j] = ls.beta[j] + 0.32 * prng.normal();
        }

        std::optional<NeighborGraph> graph;
        if (structure_is_spatial(cell.structure)) {
            NodeSet nodes = grid.cell_centers();
            graph = NeighborGraph::build(nodes, spec_for_structure(cell.structure, ncfg));
        }
        ChainConfig cc;
        cc.iterations = d.iterations;
        cc.burn_in = d.burn_in;
        cc.thinning = d.thinning;
        cc.structure = cell.structure;
        cc.seed = derive_seed(cell.seed, 200 + cell.structure +
                                             10 * static_cast<int>(cell.noise));
        Sampler sampler(fp, graph ? &*graph : nullptr, priors, cc);
        ChainSamples samples = sampler.run();
        PosteriorSummary s =
            summarize(samples, fp, 0.05, 0.95, &beta_true, graph ? &*graph : nullptr);

        int covered = 0;
        double width = 0;
        for (int j = 0; j < fp.dim(); ++j) {
            if (beta_true[j] >= s.lower[j] && beta_true[j] <= s.upper[j]) ++covered;
            width += s.upper[j] - s.lower[j];
        }
        res.coverage90 = static_cast<double>(covered) / fp.dim();
        res.mean_ci_width = width / fp.dim();
        res.dic = s.dic;
        res.p_d = s.p_d;
        res.mean_deviance = s.mean_deviance;
        res.misfit_mode = s.misfit_mode;
        res.misfit_lower = s.misfit_lower;
        res.misfit_upper = s.misfit_upper;
        res.model_misfit = s.model_misfit.value_or(0.0);
        res.n_significant = s.n_significant;
        res.eta_usa_mode = s.eta_usa.mode;
        res.phi_mode = s.phi_summary.mode;
        res.psi_mode = s.psi_summary.mode;
        res.psi_acceptance = samples.psi_acceptance_rate;
        res.ok = true;
    } catch (const std::exception& e) {
        res.ok = false;
        res.error = e.what();
    }
    return res;
}

/// study: the scenario matrix for one setup (noise kinds x structures 0-4
/// for Setup I; Gaussian noise x structures 0-4 for Setup II) across the
/// given seeds, aggregated into one CSV. Cells run concurrently up to the
/// worker count and share nothing.
inline int cmd_study(StudySetup setup, const std::vector<std::uint64_t>& seeds,
                     const CommandOptions& opt, const StudyDefaults& defaults = {}) {
    if (seeds.empty()) throw ConfigError("study: empty seed list");
    const auto dir = opt.out_dir.empty() ? std::filesystem::path("study_out") : opt.out_dir;
    std::filesystem::create_directories(dir);

    const bool setup_one = setup == StudySetup::I_a || setup == StudySetup::I_b;
    std::vector<NoiseKind> noises = setup_one
                                        ? std::vector<NoiseKind>{NoiseKind::gaussian,
                                                                 NoiseKind::student_t}
                                        : std::vector<NoiseKind>{NoiseKind::gaussian};

    std::vector<StudyCell> cells;
    for (std::uint64_t seed : seeds)
        for (NoiseKind nk : noises)
            for (int structure = 0; structure <= 4; ++structure)
                cells.push_back({setup, seed, nk, structure});

    std::vector<StudyResult> results(cells.size());
    std::atomic<std::size_t> next{0};
    int workers = std::max(1, opt.workers);
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            results[i] = run_study_cell(cells[i], defaults);
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    const char* setup_name = setup == StudySetup::I_a   ? "I_a"
                             : setup == StudySetup::I_b ? "I_b"
                             : setup == StudySetup::II_a ? "II_a"
                                                         : "II_b";
    auto out = io::open_output(dir / (std::string("study_") + setup_name + ".csv"));
    out << "setup,seed,noise,prior_mean,structure,status,dic,p_d,mean_deviance,misfit_mode,"
           "misfit_lower,misfit_upper,model_misfit,coverage90,n_significant,mean_ci_width,"
           "eta_usa_mode,phi_mode,psi_mode,psi_acceptance\n";
    int failures = 0;
    for (const StudyResult& r : results) {
        const char* nk = r.cell.noise == NoiseKind::gaussian ? "gaussian" : "student_t";
        const char* pm = (r.cell.setup == StudySetup::I_a || r.cell.setup == StudySetup::II_a)
                             ? "informative"
                             : "zero";
        out << setup_name << ',' << r.cell.seed << ',' << nk << ',' << pm << ','
            << r.cell.structure << ',' << (r.ok ? "ok" : "failed") << ',';
        if (r.ok) {
            out << io::format_double(r.dic) << ',' << io::format_double(r.p_d) << ','
                << io::format_double(r.mean_deviance) << ',' << io::format_double(r.misfit_mode)
                << ',' << io::format_double(r.misfit_lower) << ','
                << io::format_double(r.misfit_upper) << ',' << io::format_double(r.model_misfit)
                << ',' << io::format_double(r.coverage90) << ',' << r.n_significant << ','
                << io::format_double(r.mean_ci_width) << ',' << io::format_double(r.eta_usa_mode)
                << ',' << io::format_double(r.phi_mode) << ',' << io::format_double(r.psi_mode)
                << ',' << io::format_double(r.psi_acceptance) << '\n';
        } else {
            ++failures;
            out << ",,,,,,,,,,,,,\n";
        }
        if (!r.ok && !opt.quiet)
            std::cerr << "study cell failed (seed " << r.cell.seed << ", structure "
                      << r.cell.structure << "): " << r.error << '\n';
    }
    if (!opt.quiet)
        std::cout << "study " << setup_name << ": " << results.size() - failures << "/"
                  << results.size() << " cells ok -> " << dir.string() << '\n';
    return 0;
}

} // namespace bayestomo
