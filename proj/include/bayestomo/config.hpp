#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bayestomo/model.hpp"

namespace bayestomo {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

using json = nlohmann::json;

/// Unknown keys are configuration errors; silent typos in scientific
/// configs must not pass.
inline void check_keys(const json& obj, const std::string& where,
                       const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.contains(key))
            throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
T get_req(const json& obj, const std::string& where, const std::string& key) {
    if (!obj.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": bad value for '" + key + "'");
    }
}

template <class T>
T get_opt(const json& obj, const std::string& where, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": bad value for '" + key + "'");
    }
}

} // namespace detail

enum class Beta0Kind { zero, lsqr_perturbed, file };
enum class TruthKind { gmrf, blobs, file };

struct GeometryConfig {
    bool generate = true;
    int events = 40, stations = 60, paths = 2000;
    double depth_factor = 2.5; // how far below the grid the sources reach
    std::uint64_t seed = 1;
    std::string events_csv, stations_csv, paths_csv; // when loading from files
};

struct Beta0LsqrConfig {
    double damping = 1.0; // LSQR damping used for the centering solution
    double sd = 0.32;     // perturbation sd around it
    std::uint64_t seed = 0;
};

struct TruthConfig {
    TruthKind kind = TruthKind::gmrf;
    double eta = 0.18;
    double psi = 10.0;
    int structure = 1;
    double blob_amplitude = 2.0;
    std::string file;
};

struct RunConfig {
    int version = 1;
    std::string experiment = "experiment";
    VoxelGrid grid;
    GeometryConfig geometry;
    ModelKind model = ModelKind::model1;
    double reference_velocity = 10.0;
    int structure = 1;
    NeighborhoodConfig neighborhood;
    HyperPriors hyperpriors;
    Beta0Kind beta0_kind = Beta0Kind::zero;
    Beta0LsqrConfig beta0_lsqr;
    std::string beta0_file;
    ChainConfig chain;
    NoiseSpec noise;
    TruthConfig truth;
    std::string output = "out";

    void validate() const {
        grid.validate();
        chain.validate();
        noise.validate();
        hyperpriors.eta_usa.validate();
        hyperpriors.eta_hyp.validate();
        hyperpriors.eta_time.validate();
        hyperpriors.phi.validate();
        hyperpriors.psi.validate();
        if (structure < 0 || structure > 4)
            throw ConfigError("structure must be in 0..4");
        if (!(reference_velocity > 0.0))
            throw ConfigError("reference_velocity must be positive");
        if (truth.kind == TruthKind::gmrf) {
            if (!(truth.eta > 0.0)) throw ConfigError("truth.eta must be positive");
            if (truth.structure < 1 || truth.structure > 4)
                throw ConfigError("truth.structure must be in 1..4");
        }
    }

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);

    /// FNV-1a over the canonical serialization, excluding the output
    /// directory so relocated runs keep their identity.
    std::uint64_t hash() const {
        nlohmann::json j = to_json();
        j.erase("output");
        return fnv1a(j.dump());
    }

    /// Hash of the data-generating subset only (grid, geometry, model,
    /// noise, truth). Traces pair with problems through this key, so the
    /// same data can be sampled under different prior structures.
    std::uint64_t problem_hash() const {
        nlohmann::json full = to_json();
        nlohmann::json j;
        for (const char* key :
             {"version", "grid", "geometry", "model", "reference_velocity", "noise", "truth"})
            j[key] = full.at(key);
        return fnv1a(j.dump());
    }

private:
    static std::uint64_t fnv1a(const std::string& s) {
        std::uint64_t h = 14695981039346656037ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        return h;
    }
};

inline nlohmann::json RunConfig::to_json() const {
    using nlohmann::json;
    json j;
    j["version"] = version;
    j["experiment"] = experiment;
    j["grid"] = {{"origin", grid.origin},
                 {"counts", grid.counts},
                 {"cell_size", grid.cell}};
    if (geometry.generate) {
        j["geometry"] = {{"source", "generate"},
                         {"events", geometry.events},
                         {"stations", geometry.stations},
                         {"paths", geometry.paths},
                         {"depth_factor", geometry.depth_factor},
                         {"seed", geometry.seed}};
    } else {
        j["geometry"] = {{"source", "files"},
                         {"events_csv", geometry.events_csv},
                         {"stations_csv", geometry.stations_csv},
                         {"paths_csv", geometry.paths_csv}};
    }
    j["model"] = model == ModelKind::model2 ? "model2" : "model1";
    j["reference_velocity"] = reference_velocity;
    j["structure"] = structure;
    j["neighborhood"] = {{"spherical_radius", neighborhood.spherical_radius},
                         {"ellipsoid_semi_axes",
                          {neighborhood.ellipsoid_dx, neighborhood.ellipsoid_dy,
                           neighborhood.ellipsoid_dz}},
                         {"euler_angles",
                          {neighborhood.euler_x, neighborhood.euler_y, neighborhood.euler_z}}};
    json hp;
    hp["eta_usa"] = {{"shape", hyperpriors.eta_usa.shape}, {"rate", hyperpriors.eta_usa.rate}};
    hp["eta_hyp"] = {{"shape", hyperpriors.eta_hyp.shape}, {"rate", hyperpriors.eta_hyp.rate}};
    hp["eta_time"] = {{"shape", hyperpriors.eta_time.shape}, {"rate", hyperpriors.eta_time.rate}};
    hp["phi"] = {{"shape", hyperpriors.phi.shape}, {"rate", hyperpriors.phi.rate}};
    hp["psi"] = {{"mean", hyperpriors.psi.mean}, {"sd", hyperpriors.psi.sd}};
    switch (beta0_kind) {
        case Beta0Kind::zero: hp["beta0"] = "zero"; break;
        case Beta0Kind::lsqr_perturbed:
            hp["beta0"] = "lsqr";
            hp["beta0_lsqr"] = {{"damping", beta0_lsqr.damping},
                                {"sd", beta0_lsqr.sd},
                                {"seed", beta0_lsqr.seed}};
            break;
        case Beta0Kind::file: hp["beta0"] = json{{"file", beta0_file}}; break;
    }
    j["hyperpriors"] = hp;
    j["chain"] = {{"iterations", chain.iterations},
                  {"burn_in", chain.burn_in},
                  {"thinning", chain.thinning},
                  {"seed", chain.seed},
                  {"initial_proposal_sd", chain.initial_proposal_sd},
                  {"adapt_target", chain.adapt_target}};
    json nz;
    switch (noise.kind) {
        case NoiseKind::gaussian: nz = {{"kind", "gaussian"}, {"phi", noise.phi}, {"seed", noise.seed}}; break;
        case NoiseKind::student_t: nz = {{"kind", "student_t"}, {"nu", noise.nu}, {"seed", noise.seed}}; break;
        case NoiseKind::none: nz = {{"kind", "none"}}; break;
    }
    j["noise"] = nz;
    json tr;
    switch (truth.kind) {
        case TruthKind::gmrf:
            tr = {{"kind", "gmrf"}, {"eta", truth.eta}, {"psi", truth.psi},
                  {"structure", truth.structure}};
            break;
        case TruthKind::blobs: tr = {{"kind", "blobs"}, {"amplitude", truth.blob_amplitude}}; break;
        case TruthKind::file: tr = {{"kind", "file"}, {"path", truth.file}}; break;
    }
    j["truth"] = tr;
    j["output"] = output;
    return j;
}

inline RunConfig RunConfig::from_json(const nlohmann::json& j) {
    using detail::check_keys;
    using detail::get_opt;
    using detail::get_req;
    RunConfig c;
    check_keys(j, "config",
               {"version", "experiment", "grid", "geometry", "model", "reference_velocity",
                "structure", "neighborhood", "hyperpriors", "chain", "noise", "truth", "output"});
    c.version = get_req<int>(j, "config", "version");
    if (c.version != 1) throw ConfigError("unsupported config version");
    c.experiment = get_opt<std::string>(j, "config", "experiment", c.experiment);

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        check_keys(g, "grid", {"origin", "counts", "cell_size"});
        c.grid.origin = get_opt<Point3>(g, "grid", "origin", c.grid.origin);
        c.grid.counts = get_req<std::array<int, 3>>(g, "grid", "counts");
        c.grid.cell = get_req<Point3>(g, "grid", "cell_size");
    }
    if (j.contains("geometry")) {
        const auto& g = j.at("geometry");
        std::string source = get_req<std::string>(g, "geometry", "source");
        if (source == "generate") {
            check_keys(g, "geometry",
                       {"source", "events", "stations", "paths", "depth_factor", "seed"});
            c.geometry.generate = true;
            c.geometry.events = get_req<int>(g, "geometry", "events");
            c.geometry.stations = get_req<int>(g, "geometry", "stations");
            c.geometry.paths = get_req<int>(g, "geometry", "paths");
            c.geometry.depth_factor = get_opt<double>(g, "geometry", "depth_factor", 2.5);
            c.geometry.seed = get_opt<std::uint64_t>(g, "geometry", "seed", 1);
        } else if (source == "files") {
            check_keys(g, "geometry", {"source", "events_csv", "stations_csv", "paths_csv"});
            c.geometry.generate = false;
            c.geometry.events_csv = get_req<std::string>(g, "geometry", "events_csv");
            c.geometry.stations_csv = get_req<std::string>(g, "geometry", "stations_csv");
            c.geometry.paths_csv = get_req<std::string>(g, "geometry", "paths_csv");
        } else {
            throw ConfigError("geometry.source must be 'generate' or 'files'");
        }
    }
    std::string model = get_opt<std::string>(j, "config", "model", "model1");
    if (model == "model1")
        c.model = ModelKind::model1;
    else if (model == "model2")
        c.model = ModelKind::model2;
    else
        throw ConfigError("model must be 'model1' or 'model2'");
    c.reference_velocity = get_opt<double>(j, "config", "reference_velocity", 10.0);
    c.structure = get_opt<int>(j, "config", "structure", 1);

    if (j.contains("neighborhood")) {
        const auto& n = j.at("neighborhood");
        check_keys(n, "neighborhood", {"spherical_radius", "ellipsoid_semi_axes", "euler_angles"});
        c.neighborhood.spherical_radius =
            get_opt<double>(n, "neighborhood", "spherical_radius", 150.0);
        auto axes = get_opt<std::array<double, 3>>(n, "neighborhood", "ellipsoid_semi_axes",
                                                   {300.0, 300.0, 150.0});
        c.neighborhood.ellipsoid_dx = axes[0];
        c.neighborhood.ellipsoid_dy = axes[1];
        c.neighborhood.ellipsoid_dz = axes[2];
        auto ang = get_opt<std::array<double, 3>>(n, "neighborhood", "euler_angles",
                                                  {0.0, 0.0, 0.0});
        c.neighborhood.euler_x = ang[0];
        c.neighborhood.euler_y = ang[1];
        c.neighborhood.euler_z = ang[2];
    }
    if (j.contains("hyperpriors")) {
        const auto& h = j.at("hyperpriors");
        check_keys(h, "hyperpriors",
                   {"eta_usa", "eta_hyp", "eta_time", "phi", "psi", "beta0", "beta0_lsqr"});
        auto gamma_prior = [&](const std::string& key, GammaPrior fallback) {
            if (!h.contains(key)) return fallback;
            const auto& g = h.at(key);
            check_keys(g, "hyperpriors." + key, {"shape", "rate"});
            return GammaPrior{get_req<double>(g, key, "shape"), get_req<double>(g, key, "rate")};
        };
        c.hyperpriors.eta_usa = gamma_prior("eta_usa", c.hyperpriors.eta_usa);
        c.hyperpriors.eta_hyp = gamma_prior("eta_hyp", c.hyperpriors.eta_hyp);
        c.hyperpriors.eta_time = gamma_prior("eta_time", c.hyperpriors.eta_time);
        c.hyperpriors.phi = gamma_prior("phi", c.hyperpriors.phi);
        if (h.contains("psi")) {
            const auto& p = h.at("psi");
            check_keys(p, "hyperpriors.psi", {"mean", "sd"});
            c.hyperpriors.psi = {get_req<double>(p, "psi", "mean"),
                                 get_req<double>(p, "psi", "sd")};
        }
        if (h.contains("beta0")) {
            const auto& b = h.at("beta0");
            if (b.is_string()) {
                std::string kind = b.get<std::string>();
                if (kind == "zero")
                    c.beta0_kind = Beta0Kind::zero;
                else if (kind == "lsqr")
                    c.beta0_kind = Beta0Kind::lsqr_perturbed;
                else
                    throw ConfigError("hyperpriors.beta0 must be 'zero', 'lsqr' or {file}");
            } else {
                check_keys(b, "hyperpriors.beta0", {"file"});
                c.beta0_kind = Beta0Kind::file;
                c.beta0_file = get_req<std::string>(b, "beta0", "file");
            }
        }
        if (h.contains("beta0_lsqr")) {
            const auto& b = h.at("beta0_lsqr");
            check_keys(b, "hyperpriors.beta0_lsqr", {"damping", "sd", "seed"});
            c.beta0_lsqr.damping = get_opt<double>(b, "beta0_lsqr", "damping", 1.0);
            c.beta0_lsqr.sd = get_opt<double>(b, "beta0_lsqr", "sd", 0.32);
            c.beta0_lsqr.seed = get_opt<std::uint64_t>(b, "beta0_lsqr", "seed", 0);
        }
    }
    if (j.contains("chain")) {
        const auto& ch = j.at("chain");
        check_keys(ch, "chain",
                   {"iterations", "burn_in", "thinning", "seed", "initial_proposal_sd",
                    "adapt_target"});
        c.chain.iterations = get_req<std::int64_t>(ch, "chain", "iterations");
        c.chain.burn_in = get_req<std::int64_t>(ch, "chain", "burn_in");
        c.chain.thinning = get_req<std::int64_t>(ch, "chain", "thinning");
        c.chain.seed = get_opt<std::uint64_t>(ch, "chain", "seed", 0);
        c.chain.initial_proposal_sd = get_opt<double>(ch, "chain", "initial_proposal_sd", 0.5);
        c.chain.adapt_target = get_opt<double>(ch, "chain", "adapt_target", 0.35);
    }
    c.chain.model = c.model;
    c.chain.structure = c.structure;
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        std::string kind = get_req<std::string>(n, "noise", "kind");
        if (kind == "gaussian") {
            check_keys(n, "noise", {"kind", "phi", "seed"});
            c.noise.kind = NoiseKind::gaussian;
            c.noise.phi = get_req<double>(n, "noise", "phi");
            c.noise.seed = get_opt<std::uint64_t>(n, "noise", "seed", 0);
        } else if (kind == "student_t") {
            check_keys(n, "noise", {"kind", "nu", "seed"});
            c.noise.kind = NoiseKind::student_t;
            c.noise.nu = get_req<double>(n, "noise", "nu");
            c.noise.seed = get_opt<std::uint64_t>(n, "noise", "seed", 0);
        } else if (kind == "none") {
            check_keys(n, "noise", {"kind"});
            c.noise.kind = NoiseKind::none;
        } else {
            throw ConfigError("noise.kind must be 'gaussian', 'student_t' or 'none'");
        }
    }
    if (j.contains("truth")) {
        const auto& t = j.at("truth");
        std::string kind = get_req<std::string>(t, "truth", "kind");
        if (kind == "gmrf") {
            check_keys(t, "truth", {"kind", "eta", "psi", "structure"});
            c.truth.kind = TruthKind::gmrf;
            c.truth.eta = get_opt<double>(t, "truth", "eta", 0.18);
            c.truth.psi = get_opt<double>(t, "truth", "psi", 10.0);
            c.truth.structure = get_opt<int>(t, "truth", "structure", 1);
        } else if (kind == "blobs") {
            check_keys(t, "truth", {"kind", "amplitude"});
            c.truth.kind = TruthKind::blobs;
            c.truth.blob_amplitude = get_opt<double>(t, "truth", "amplitude", 2.0);
        } else if (kind == "file") {
            check_keys(t, "truth", {"kind", "path"});
            c.truth.kind = TruthKind::file;
            c.truth.file = get_req<std::string>(t, "truth", "path");
        } else {
            throw ConfigError("truth.kind must be 'gmrf', 'blobs' or 'file'");
        }
    }
    c.output = get_opt<std::string>(j, "config", "output", c.output);
    c.validate();
    return c;
}

inline RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }
    return from_json(j);
}

} // namespace bayestomo
