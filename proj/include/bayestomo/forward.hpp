#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bayestomo/grid.hpp"
#include "bayestomo/rng.hpp"
#include "bayestomo/sparse.hpp"
#include "bayestomo/spatial.hpp"

namespace bayestomo {

enum class ModelKind { model1, model2 };

/// Sources, surface receivers and the observed source-receiver pairs.
/// Events use the depth-positive convention (z > 0 below the surface);
/// stations sit on the surface plane z = 0.
struct EventStationGeometry {
    std::vector<Point3> events;
    std::vector<std::array<double, 2>> stations;
    std::vector<std::pair<int, int>> paths; // (event index, station index)

    int n_events() const { return static_cast<int>(events.size()); }
    int n_stations() const { return static_cast<int>(stations.size()); }
    int n_paths() const { return static_cast<int>(paths.size()); }

    Point3 station_position(int s) const { return {stations[s][0], stations[s][1], 0.0}; }

    void validate() const {
        for (const Point3& e : events)
            if (!(e[2] > 0.0))
                throw std::invalid_argument("geometry: events must lie below the surface (z > 0)");
        for (const auto& [e, s] : paths)
            if (e < 0 || e >= n_events() || s < 0 || s >= n_stations())
                throw std::invalid_argument("geometry: path references an invalid index");
    }
};

/// The assembled linear problem. Column layout is [velocity cells |
/// hypocenter shifts (3 per event) | origin-time shifts (1 per event)];
/// model 1 carries the velocity block only.
struct ForwardProblem {
    ModelKind model = ModelKind::model1;
    int d_usa = 0;
    int n_events = 0;
    SparseRowMatrix X;
    std::vector<double> y;

    int dim() const { return X.cols(); }
    int n_obs() const { return X.rows(); }
    int d_hyp() const { return model == ModelKind::model2 ? 3 * n_events : 0; }
    int d_time() const { return model == ModelKind::model2 ? n_events : 0; }
    int hyp_col(int event, int axis) const { return d_usa + 3 * event + axis; }
    int time_col(int event) const { return d_usa + 3 * n_events + event; }
};

/// Columns of the hypocenter block for one path: the travel-time change
/// per km of source shift along each axis. Convention: the entry is the
/// unit receiver-to-source direction scaled by -1/v0, so a purely vertical
/// ray (source straight below the station) gives (0, 0, -1/v0).
inline std::array<double, 3> hypocenter_partials(const Point3& source, const Point3& receiver,
                                                 double reference_velocity) {
    double dx = source[0] - receiver[0];
    double dy = source[1] - receiver[1];
    double dz = source[2] - receiver[2];
    double len = std::sqrt(dx * dx + dy * dy + dz * dz);
    if (!(len > 0.0)) throw std::invalid_argument("hypocenter_partials: degenerate path");
    double s = -1.0 / (reference_velocity * len);
    return {s * dx, s * dy, s * dz};
}

/// Builds X for straight-ray tomography; y is left empty. Every path must
/// produce at least one traversed cell.
inline ForwardProblem assemble_forward(const VoxelGrid& grid, const EventStationGeometry& geom,
                                       ModelKind model, double reference_velocity = 10.0) {
    grid.validate();
    geom.validate();
    if (!(reference_velocity > 0.0))
        throw std::invalid_argument("assemble_forward: reference velocity must be positive");

    ForwardProblem fp;
    fp.model = model;
    fp.d_usa = grid.cell_count();
    fp.n_events = geom.n_events();
    const int cols = fp.d_usa + fp.d_hyp() + fp.d_time();
    fp.X = SparseRowMatrix(geom.n_paths(), cols);

    std::vector<std::pair<int, double>> row;
    for (int p = 0; p < geom.n_paths(); ++p) {
        const auto [ev, st] = geom.paths[p];
        const Point3 source = geom.events[ev];
        const Point3 receiver = geom.station_position(st);
        auto ray = trace_ray(grid, source, receiver);
        if (ray.empty())
            throw std::invalid_argument("assemble_forward: path " + std::to_string(p) +
                                        " does not intersect the grid");
        row.clear();
        for (const RayEntry& e : ray) row.emplace_back(e.cell, e.length);
        if (model == ModelKind::model2) {
            auto partials = hypocenter_partials(source, receiver, reference_velocity);
            for (int ax = 0; ax < 3; ++ax)
                if (partials[ax] != 0.0) row.emplace_back(fp.hyp_col(ev, ax), partials[ax]);
            row.emplace_back(fp.time_col(ev), 1.0);
        }
        fp.X.push_row(row);
    }
    return fp;
}

enum class NoiseKind { gaussian, student_t, none };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian;
    double phi = 0.4; // precision of Gaussian noise
    double nu = 3.0;  // degrees of freedom of Student-t noise
    std::uint64_t seed = 0;

    void validate() const {
        if (kind == NoiseKind::gaussian && !(phi > 0.0))
            throw std::invalid_argument("NoiseSpec: phi must be positive");
        if (kind == NoiseKind::student_t && !(nu > 2.0))
            throw std::invalid_argument("NoiseSpec: nu must exceed 2");
    }
};

/// y = X beta_true + eps with the configured noise; fully reproducible
/// from the spec's seed.
inline std::vector<double> synthesize_data(const SparseRowMatrix& x,
                                           std::span<const double> beta_true,
                                           const NoiseSpec& noise) {
    noise.validate();
    std::vector<double> y = x.apply(beta_true);
    if (noise.kind == NoiseKind::none) return y;
    RandomStream rng(noise.seed);
    if (noise.kind == NoiseKind::gaussian) {
        double sd = 1.0 / std::sqrt(noise.phi);
        for (double& v : y) v += sd * rng.normal();
    } else {
        for (double& v : y) v += rng.student_t(noise.nu);
    }
    return y;
}

/// One draw of a spatially structured truth:
/// beta ~ N(center, (1/eta) Q^-1(psi)).
inline std::vector<double> draw_beta_true(const NeighborGraph& graph, double eta_tr,
                                          double psi_tr, std::span<const double> center,
                                          RandomStream& rng) {
    if (!(eta_tr > 0.0)) throw std::invalid_argument("draw_beta_true: eta must be positive");
    SparseSymMatrix omega = graph.precision(psi_tr);
    for (double& v : omega.values()) v *= eta_tr;
    std::vector<double> xi = omega.multiply(center);
    return sample_gaussian_by_precision(omega, xi, rng);
}

/// Random desk-scale acquisition: stations uniform on the top face, events
/// on the two opposite x boundary planes, reaching down to depth_factor
/// times the grid depth below the surface (sources sit below the imaged
/// volume, so rays arrive steeply, teleseismic style). Paths are drawn
/// without replacement.
inline EventStationGeometry generate_geometry(const VoxelGrid& grid, int n_events,
                                              int n_stations, int n_paths, RandomStream& rng,
                                              double depth_factor = 2.5) {
    grid.validate();
    if (n_events < 1 || n_stations < 1 || n_paths < 1)
        throw std::invalid_argument("generate_geometry: counts must be positive");
    if (!(depth_factor >= 0.5))
        throw std::invalid_argument("generate_geometry: depth_factor must be at least 0.5");
    const std::int64_t combos = static_cast<std::int64_t>(n_events) * n_stations;
    if (n_paths > combos)
        throw std::invalid_argument("generate_geometry: more paths than event-station pairs");

    const Point3 hi = grid.max_corner();
    EventStationGeometry geom;
    geom.events.reserve(n_events);
    geom.stations.reserve(n_stations);
    const double depth = hi[2] - grid.origin[2];
    for (int e = 0; e < n_events; ++e) {
        double x = (e % 2 == 0) ? grid.origin[0] : hi[0];
        double y = grid.origin[1] + rng.uniform() * (hi[1] - grid.origin[1]);
        double z = grid.origin[2] + depth * (0.5 + rng.uniform() * (depth_factor - 0.5));
        geom.events.push_back({x, y, z});
    }
    for (int s = 0; s < n_stations; ++s) {
        double x = grid.origin[0] + rng.uniform() * (hi[0] - grid.origin[0]);
        double y = grid.origin[1] + rng.uniform() * (hi[1] - grid.origin[1]);
        geom.stations.push_back({x, y});
    }

    std::vector<std::int64_t> all(combos);
    for (std::int64_t i = 0; i < combos; ++i) all[i] = i;
    for (std::int64_t i = combos - 1; i > 0; --i) { // Fisher-Yates on pair ids
        std::int64_t j = static_cast<std::int64_t>(rng.uniform() * (i + 1));
        if (j > i) j = i;
        std::swap(all[i], all[j]);
    }
    geom.paths.reserve(n_paths);
    for (int p = 0; p < n_paths; ++p)
        geom.paths.emplace_back(static_cast<int>(all[p] / n_stations),
                                static_cast<int>(all[p] % n_stations));
    return geom;
}

} // namespace bayestomo
