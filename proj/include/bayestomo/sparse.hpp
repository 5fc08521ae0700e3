#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bayestomo {

struct Triplet {
    int row;
    int col;
    double value;
};

/// Symmetric sparse matrix, compressed-column storage of the lower
/// triangle (row >= col). The logical matrix is the symmetric completion.
/// Rows inside each column are sorted ascending and unique; assembly sums
/// duplicate coordinates and mirrors upper-triangle input to the lower.
class SparseSymMatrix {
public:
    SparseSymMatrix() = default;

    static SparseSymMatrix from_triplets(int dim, std::span<const Triplet> triplets) {
        if (dim <= 0) throw std::invalid_argument("SparseSymMatrix: dim must be positive");
        std::vector<std::pair<std::int64_t, double>> keyed;
        keyed.reserve(triplets.size());
        for (const Triplet& t : triplets) {
            if (t.row < 0 || t.row >= dim || t.col < 0 || t.col >= dim)
                throw std::out_of_range("SparseSymMatrix: index out of range");
            if (!std::isfinite(t.value))
                throw std::invalid_argument("SparseSymMatrix: non-finite value");
            int r = t.row, c = t.col;
            if (r < c) std::swap(r, c); // mirror to lower triangle
            keyed.emplace_back(static_cast<std::int64_t>(c) * dim + r, t.value);
        }
        std::sort(keyed.begin(), keyed.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        SparseSymMatrix m;
        m.dim_ = dim;
        m.col_ptr_.assign(static_cast<std::size_t>(dim) + 1, 0);
        std::int64_t prev_key = -1;
        for (const auto& [key, value] : keyed) {
            if (key == prev_key) {
                m.values_.back() += value;
            } else {
                int col = static_cast<int>(key / dim);
                int row = static_cast<int>(key % dim);
                m.row_idx_.push_back(row);
                m.values_.push_back(value);
                m.col_ptr_[static_cast<std::size_t>(col) + 1]++;
                prev_key = key;
            }
        }
        for (int j = 0; j < dim; ++j) m.col_ptr_[j + 1] += m.col_ptr_[j];
        return m;
    }

    static SparseSymMatrix identity(int dim) {
        std::vector<Triplet> t;
        t.reserve(dim);
        for (int i = 0; i < dim; ++i) t.push_back({i, i, 1.0});
        return from_triplets(dim, t);
    }

    int dim() const { return dim_; }
    int nnz_lower() const { return static_cast<int>(row_idx_.size()); }

    const std::vector<int>& col_ptr() const { return col_ptr_; }
    const std::vector<int>& row_idx() const { return row_idx_; }
    const std::vector<double>& values() const { return values_; }
    /// Mutable access for fixed-pattern value refreshes.
    std::vector<double>& values() { return values_; }

    /// Index into values() of entry (row, col) in the lower triangle, or -1.
    int find_lower(int row, int col) const {
        if (row < col) std::swap(row, col);
        auto first = row_idx_.begin() + col_ptr_[col];
        auto last = row_idx_.begin() + col_ptr_[col + 1];
        auto it = std::lower_bound(first, last, row);
        if (it == last || *it != row) return -1;
        return static_cast<int>(it - row_idx_.begin());
    }

    double coeff(int row, int col) const {
        int k = find_lower(row, col);
        return k < 0 ? 0.0 : values_[k];
    }

    template <class F>
    void for_each_lower(F&& f) const {
        for (int j = 0; j < dim_; ++j)
            for (int p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p)
                f(row_idx_[p], j, values_[p]);
    }

    /// y = A x with the symmetric completion.
    std::vector<double> multiply(std::span<const double> x) const {
        check_length(x.size());
        std::vector<double> y(dim_, 0.0);
        for (int j = 0; j < dim_; ++j) {
            for (int p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
                int i = row_idx_[p];
                double v = values_[p];
                y[i] += v * x[j];
                if (i != j) y[j] += v * x[i];
            }
        }
        return y;
    }

    /// x' A x.
    double quadratic_form(std::span<const double> x) const {
        check_length(x.size());
        double q = 0.0;
        for (int j = 0; j < dim_; ++j) {
            for (int p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
                int i = row_idx_[p];
                double v = values_[p];
                q += (i == j) ? v * x[i] * x[i] : 2.0 * v * x[i] * x[j];
            }
        }
        return q;
    }

    /// Coordinate-list text dump, one "row col value" per line.
    void dump_pattern(std::ostream& os) const {
        for_each_lower([&os](int i, int j, double v) {
            os << i << ' ' << j << ' ' << v << '\n';
        });
    }

private:
    void check_length(std::size_t n) const {
        if (n != static_cast<std::size_t>(dim_))
            throw std::invalid_argument("SparseSymMatrix: vector length mismatch");
    }

    int dim_ = 0;
    std::vector<int> col_ptr_;
    std::vector<int> row_idx_;
    std::vector<double> values_;
};

/// Rectangular sparse matrix in compressed-row storage; holds the forward
/// operator X whose rows are built one path at a time.
class SparseRowMatrix {
public:
    SparseRowMatrix() = default;
    SparseRowMatrix(int rows_hint, int cols) : cols_(cols) {
        row_ptr_.reserve(static_cast<std::size_t>(rows_hint) + 1);
    }

    /// Appends a row given (column, value) pairs; pairs need not be sorted.
    void push_row(std::span<const std::pair<int, double>> entries) {
        std::vector<std::pair<int, double>> sorted(entries.begin(), entries.end());
        std::sort(sorted.begin(), sorted.end());
        for (const auto& [c, v] : sorted) {
            if (c < 0 || c >= cols_) throw std::out_of_range("SparseRowMatrix: column out of range");
            if (!std::isfinite(v)) throw std::invalid_argument("SparseRowMatrix: non-finite value");
            col_idx_.push_back(c);
            values_.push_back(v);
        }
        row_ptr_.push_back(static_cast<int>(col_idx_.size()));
    }

    int rows() const { return static_cast<int>(row_ptr_.size()) - 1; }
    int cols() const { return cols_; }
    std::int64_t nnz() const { return static_cast<std::int64_t>(col_idx_.size()); }

    const std::vector<int>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& col_idx() const { return col_idx_; }
    const std::vector<double>& values() const { return values_; }

    int row_nnz(int r) const { return row_ptr_[r + 1] - row_ptr_[r]; }

    /// y = X x.
    std::vector<double> apply(std::span<const double> x) const {
        if (x.size() != static_cast<std::size_t>(cols_))
            throw std::invalid_argument("SparseRowMatrix: vector length mismatch");
        std::vector<double> y(rows(), 0.0);
        for (int r = 0; r < rows(); ++r) {
            double s = 0.0;
            for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
                s += values_[p] * x[col_idx_[p]];
            y[r] = s;
        }
        return y;
    }

    /// z = X' y.
    std::vector<double> apply_transpose(std::span<const double> y) const {
        if (y.size() != static_cast<std::size_t>(rows()))
            throw std::invalid_argument("SparseRowMatrix: vector length mismatch");
        std::vector<double> z(cols_, 0.0);
        for (int r = 0; r < rows(); ++r)
            for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
                z[col_idx_[p]] += values_[p] * y[r];
        return z;
    }

    /// X' X as a symmetric sparse matrix.
    SparseSymMatrix normal_matrix() const {
        std::vector<Triplet> t;
        for (int r = 0; r < rows(); ++r) {
            for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
                for (int q = p; q < row_ptr_[r + 1]; ++q) {
                    // rows are sorted, so col_idx_[q] >= col_idx_[p]
                    t.push_back({col_idx_[q], col_idx_[p], values_[p] * values_[q]});
                }
            }
        }
        return SparseSymMatrix::from_triplets(cols_, t);
    }

private:
    int cols_ = 0;
    std::vector<int> row_ptr_{0};
    std::vector<int> col_idx_;
    std::vector<double> values_;
};

/// Row/column permutation. forward[k] is the original index placed at
/// position k, inverse is its inverse map; (P A P')(k,l) = A(forward[k], forward[l]).
struct Permutation {
    std::vector<int> forward;
    std::vector<int> inverse;

    static Permutation identity(int n) {
        Permutation p;
        p.forward.resize(n);
        p.inverse.resize(n);
        for (int i = 0; i < n; ++i) p.forward[i] = p.inverse[i] = i;
        return p;
    }

    static Permutation reversed(int n) {
        Permutation p;
        p.forward.resize(n);
        p.inverse.resize(n);
        for (int i = 0; i < n; ++i) {
            p.forward[i] = n - 1 - i;
            p.inverse[n - 1 - i] = i;
        }
        return p;
    }

    static Permutation from_forward(std::vector<int> fwd) {
        int n = static_cast<int>(fwd.size());
        Permutation p;
        p.forward = std::move(fwd);
        p.inverse.assign(n, -1);
        for (int k = 0; k < n; ++k) {
            int v = p.forward[k];
            if (v < 0 || v >= n || p.inverse[v] != -1)
                throw std::invalid_argument("Permutation: forward map is not a permutation");
            p.inverse[v] = k;
        }
        return p;
    }

    int size() const { return static_cast<int>(forward.size()); }
};

} // namespace bayestomo
