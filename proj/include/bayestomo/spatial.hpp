#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "bayestomo/cholesky.hpp"
#include "bayestomo/sparse.hpp"

namespace bayestomo {

using Point3 = std::array<double, 3>;

/// Node positions in kilometers.
struct NodeSet {
    std::vector<Point3> coords;

    int count() const { return static_cast<int>(coords.size()); }

    void validate() const {
        for (const Point3& p : coords)
            for (double c : p)
                if (!std::isfinite(c)) throw std::invalid_argument("NodeSet: non-finite coordinate");
    }
};

using Matrix3 = std::array<std::array<double, 3>, 3>;

inline Point3 apply_matrix(const Matrix3& m, const Point3& v) {
    Point3 r{};
    for (int i = 0; i < 3; ++i)
        r[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    return r;
}

/// R = R_x R_y R_z from rotation angles (radians) about each axis.
inline Matrix3 rotation_from_euler(double ax, double ay, double az) {
    auto mat_mul = [](const Matrix3& a, const Matrix3& b) {
        Matrix3 c{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
        return c;
    };
    double cx = std::cos(ax), sx = std::sin(ax);
    double cy = std::cos(ay), sy = std::sin(ay);
    double cz = std::cos(az), sz = std::sin(az);
    Matrix3 rx{{{1, 0, 0}, {0, cx, -sx}, {0, sx, cx}}};
    Matrix3 ry{{{cy, 0, sy}, {0, 1, 0}, {-sy, 0, cy}}};
    Matrix3 rz{{{cz, -sz, 0}, {sz, cz, 0}, {0, 0, 1}}};
    return mat_mul(mat_mul(rx, ry), rz);
}

enum class WeightKind { exponential, reciprocal };

/// Ellipsoidal neighborhood: j ~ i iff the rotated offset satisfies
/// (dx/Dx)^2 + (dy/Dy)^2 + (dz/Dz)^2 <= 1. Weights use D = max(Dx,Dy,Dz)
/// and the plain Euclidean distance.
struct NeighborhoodSpec {
    double dx = 150.0, dy = 150.0, dz = 150.0; // semi-axes, km
    Matrix3 rotation{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    WeightKind weight_kind = WeightKind::reciprocal;

    double max_distance() const { return std::max(dx, std::max(dy, dz)); }

    static NeighborhoodSpec spherical(double radius, WeightKind kind) {
        NeighborhoodSpec s;
        s.dx = s.dy = s.dz = radius;
        s.weight_kind = kind;
        return s;
    }

    static NeighborhoodSpec ellipsoidal(double dx, double dy, double dz, WeightKind kind,
                                        double ax = 0.0, double ay = 0.0, double az = 0.0) {
        NeighborhoodSpec s;
        s.dx = dx;
        s.dy = dy;
        s.dz = dz;
        s.weight_kind = kind;
        s.rotation = rotation_from_euler(ax, ay, az);
        return s;
    }

    void validate() const {
        if (!(dx > 0.0) || !(dy > 0.0) || !(dz > 0.0))
            throw std::invalid_argument("NeighborhoodSpec: semi-axes must be positive");
        // R R' = I within 1e-12
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += rotation[i][k] * rotation[j][k];
                if (std::abs(s - (i == j ? 1.0 : 0.0)) > 1e-12)
                    throw std::invalid_argument("NeighborhoodSpec: rotation is not orthogonal");
            }
    }
};

/// Neighbor weight at Euclidean distance d; requires 0 < d <= D.
inline double weight(double d, const NeighborhoodSpec& spec) {
    double D = spec.max_distance();
    if (!(d > 0.0) || d > D * (1.0 + 1e-12))
        throw std::invalid_argument("weight: distance outside (0, D]");
    d = std::min(d, D);
    switch (spec.weight_kind) {
        case WeightKind::exponential: return std::exp(-3.0 * d * d / (D * D));
        case WeightKind::reciprocal: return D / d - 1.0;
    }
    throw std::logic_error("weight: unknown kind");
}

struct NeighborEdge {
    int neighbor;
    double distance;
    double weight;
};

/// Symmetric neighbor graph with cached distances and weights; the basis
/// of the CAR precision matrix.
class NeighborGraph {
public:
    static NeighborGraph build(const NodeSet& nodes, const NeighborhoodSpec& spec) {
        nodes.validate();
        spec.validate();
        const int n = nodes.count();
        if (n < 1) throw std::invalid_argument("NeighborGraph: empty node set");
        NeighborGraph g;
        g.adj_.resize(n);
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                Point3 off{nodes.coords[i][0] - nodes.coords[j][0],
                           nodes.coords[i][1] - nodes.coords[j][1],
                           nodes.coords[i][2] - nodes.coords[j][2]};
                Point3 r = apply_matrix(spec.rotation, off);
                double q = (r[0] / spec.dx) * (r[0] / spec.dx) +
                           (r[1] / spec.dy) * (r[1] / spec.dy) +
                           (r[2] / spec.dz) * (r[2] / spec.dz);
                if (q > 1.0) continue;
                double d = std::sqrt(off[0] * off[0] + off[1] * off[1] + off[2] * off[2]);
                if (d <= 0.0)
                    throw std::invalid_argument("NeighborGraph: duplicate node positions");
                double w = weight(d, spec);
                if (w <= 0.0) continue; // boundary case d == D under reciprocal weights
                g.adj_[i].push_back({j, d, w});
                g.adj_[j].push_back({i, d, w});
            }
        }
        g.weight_sum_.assign(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (const NeighborEdge& e : g.adj_[i]) g.weight_sum_[i] += e.weight;
        return g;
    }

    int node_count() const { return static_cast<int>(adj_.size()); }
    const std::vector<NeighborEdge>& neighbors(int i) const { return adj_[i]; }
    double weight_sum(int i) const { return weight_sum_[i]; }

    /// CAR precision matrix: Q_ii = 1 + |psi| sum_j~i w(d_ij),
    /// Q_ij = -psi w(d_ij) for j ~ i.
    SparseSymMatrix precision(double psi) const {
        if (!std::isfinite(psi)) throw std::invalid_argument("precision: psi must be finite");
        const int n = node_count();
        std::vector<Triplet> t;
        t.reserve(n + edge_count());
        for (int i = 0; i < n; ++i) {
            t.push_back({i, i, 1.0 + std::abs(psi) * weight_sum_[i]});
            for (const NeighborEdge& e : adj_[i])
                if (e.neighbor > i) t.push_back({e.neighbor, i, -psi * e.weight});
        }
        return SparseSymMatrix::from_triplets(n, t);
    }

    /// Refreshes the values of a matrix previously built by precision();
    /// the sparsity pattern is fixed by the graph, so no re-sorting happens.
    void update_precision_values(double psi, SparseSymMatrix& q) const {
        if (!std::isfinite(psi)) throw std::invalid_argument("precision: psi must be finite");
        const int n = node_count();
        if (q.dim() != n) throw std::invalid_argument("update_precision_values: dim mismatch");
        auto& vals = q.values();
        const auto& cp = q.col_ptr();
        for (int j = 0; j < n; ++j) {
            int p = cp[j];
            // diagonal first, then neighbors i > j in ascending order, which
            // matches the sorted adjacency lists
            vals[p++] = 1.0 + std::abs(psi) * weight_sum_[j];
            for (const NeighborEdge& e : adj_[j]) {
                if (e.neighbor <= j) continue;
                vals[p++] = -psi * e.weight;
            }
            if (p != cp[j + 1])
                throw std::invalid_argument("update_precision_values: pattern mismatch");
        }
    }

    std::int64_t edge_count() const {
        std::int64_t c = 0;
        for (const auto& lst : adj_) c += static_cast<std::int64_t>(lst.size());
        return c / 2;
    }

    /// diag(Q^-1(psi)) via one factorization and per-column solves; exact,
    /// intended for desk-scale node counts.
    std::vector<double> prior_variances(double psi) const {
        const int n = node_count();
        SparseCholesky chol(precision(psi));
        std::vector<double> var(n), e(n, 0.0);
        for (int i = 0; i < n; ++i) {
            e[i] = 1.0;
            var[i] = chol.solve(e)[i];
            e[i] = 0.0;
        }
        return var;
    }

private:
    std::vector<std::vector<NeighborEdge>> adj_;
    std::vector<double> weight_sum_;
};

} // namespace bayestomo
