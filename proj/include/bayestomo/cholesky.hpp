#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bayestomo/ordering.hpp"
#include "bayestomo/rng.hpp"
#include "bayestomo/sparse.hpp"

namespace bayestomo {

/// Thrown when a factorization hits a non-positive pivot: the matrix is
/// not positive definite (or has broken down numerically).
struct NotPositiveDefinite : std::runtime_error {
    explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

/// Pattern of P A P' stored by columns of the upper triangle (row <= col),
/// plus a gather map back into A's value array so numeric refactorization
/// is a single indexed copy.
struct PermutedUpperPattern {
    int n = 0;
    std::vector<int> col_ptr;
    std::vector<int> row_idx;
    std::vector<int> gather;    // slot -> index into A.values()
    std::vector<int> diag_slot; // column -> slot of its diagonal entry
};

inline PermutedUpperPattern build_permuted_upper(const SparseSymMatrix& a, const Permutation& perm) {
    const int n = a.dim();
    if (perm.size() != n)
        throw std::invalid_argument("cholesky: permutation size mismatch");
    PermutedUpperPattern pat;
    pat.n = n;

    struct Slot {
        int row, col, src;
    };
    std::vector<Slot> slots;
    slots.reserve(a.nnz_lower());
    int src = 0;
    a.for_each_lower([&](int i, int j, double) {
        int pi = perm.inverse[i];
        int pj = perm.inverse[j];
        if (pi > pj) std::swap(pi, pj); // keep the upper triangle
        slots.push_back({pi, pj, src++});
    });
    std::sort(slots.begin(), slots.end(), [](const Slot& x, const Slot& y) {
        return x.col != y.col ? x.col < y.col : x.row < y.row;
    });

    pat.col_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
    pat.row_idx.resize(slots.size());
    pat.gather.resize(slots.size());
    pat.diag_slot.assign(n, -1);
    for (std::size_t t = 0; t < slots.size(); ++t) {
        pat.row_idx[t] = slots[t].row;
        pat.gather[t] = slots[t].src;
        pat.col_ptr[slots[t].col + 1]++;
        if (slots[t].row == slots[t].col) pat.diag_slot[slots[t].col] = static_cast<int>(t);
    }
    for (int j = 0; j < n; ++j) pat.col_ptr[j + 1] += pat.col_ptr[j];
    for (int j = 0; j < n; ++j)
        if (pat.diag_slot[j] < 0)
            throw std::invalid_argument("cholesky: matrix is missing a diagonal entry");
    return pat;
}

/// Elimination tree of an upper-triangle CSC pattern (Liu's algorithm).
inline std::vector<int> elimination_tree(const PermutedUpperPattern& b) {
    const int n = b.n;
    std::vector<int> parent(n, -1), ancestor(n, -1);
    for (int k = 0; k < n; ++k) {
        for (int p = b.col_ptr[k]; p < b.col_ptr[k + 1]; ++p) {
            int i = b.row_idx[p];
            while (i != -1 && i < k) {
                int next = ancestor[i];
                ancestor[i] = k;
                if (next == -1) {
                    parent[i] = k;
                    break;
                }
                i = next;
            }
        }
    }
    return parent;
}

/// Row pattern of L row k (excluding the diagonal), in topological order.
/// Fills s[top..n-1] and returns top; w is a stamp array, stack scratch.
inline int ereach(const PermutedUpperPattern& b, int k, const std::vector<int>& parent,
                  std::vector<int>& s, std::vector<int>& w, std::vector<int>& stack) {
    int top = b.n;
    w[k] = k;
    for (int p = b.col_ptr[k]; p < b.col_ptr[k + 1]; ++p) {
        int i = b.row_idx[p];
        int len = 0;
        while (w[i] != k) {
            stack[len++] = i;
            w[i] = k;
            i = parent[i];
        }
        while (len > 0) s[--top] = stack[--len];
    }
    return top;
}

/// Column counts of L (diagonal included) by symbolic row sweeps.
inline std::vector<std::int64_t> factor_column_counts(const PermutedUpperPattern& b,
                                                      const std::vector<int>& parent) {
    const int n = b.n;
    std::vector<std::int64_t> count(n, 1); // diagonals
    std::vector<int> s(n), w(n, -1), stack(n);
    for (int k = 0; k < n; ++k) {
        int top = ereach(b, k, parent, s, w, stack);
        for (int t = top; t < n; ++t) count[s[t]]++;
    }
    return count;
}

} // namespace detail

/// Number of nonzeros the Cholesky factor of `a` would have under `perm`
/// (symbolic analysis only). Used to compare fill between orderings.
inline std::int64_t cholesky_factor_nnz(const SparseSymMatrix& a, const Permutation& perm) {
    auto pat = detail::build_permuted_upper(a, perm);
    auto parent = detail::elimination_tree(pat);
    auto counts = detail::factor_column_counts(pat, parent);
    std::int64_t nnz = 0;
    for (std::int64_t c : counts) nnz += c;
    return nnz;
}

/// Sparse Cholesky factorization P A P' = L L' of a symmetric positive
/// definite matrix under a fill-reducing permutation.
///
/// The symbolic analysis (permuted pattern, elimination tree, column
/// pointers) is done once; `refactor` runs only the numeric up-looking
/// pass and is what the samplers call every sweep, since their precision
/// matrices keep a fixed pattern while values change.
class SparseCholesky {
public:
    SparseCholesky(const SparseSymMatrix& a, Permutation perm, bool factorize_now = true)
        : perm_(std::move(perm)) {
        pat_ = detail::build_permuted_upper(a, perm_);
        parent_ = detail::elimination_tree(pat_);
        auto counts = detail::factor_column_counts(pat_, parent_);
        lp_.assign(static_cast<std::size_t>(pat_.n) + 1, 0);
        std::int64_t acc = 0;
        for (int j = 0; j < pat_.n; ++j) {
            lp_[j] = static_cast<int>(acc);
            acc += counts[j];
        }
        if (acc > std::numeric_limits<int>::max())
            throw std::length_error("cholesky: factor too large for 32-bit indexing");
        lp_[pat_.n] = static_cast<int>(acc);
        nnz_l_ = acc;
        li_.resize(nnz_l_);
        lx_.resize(nnz_l_);
        bx_.resize(pat_.row_idx.size());
        x_.assign(pat_.n, 0.0);
        w_.assign(pat_.n, -1);
        s_.resize(pat_.n);
        stack_.resize(pat_.n);
        head_.resize(pat_.n);
        if (factorize_now) refactor(a);
    }

    explicit SparseCholesky(const SparseSymMatrix& a)
        : SparseCholesky(a, min_degree_ordering(a)) {}

    int dim() const { return pat_.n; }
    std::int64_t factor_nnz() const { return nnz_l_; }
    const Permutation& permutation() const { return perm_; }
    bool factored() const { return factored_; }

    /// Numeric refactorization; `a` must have the pattern given at
    /// construction (only values may differ).
    void refactor(const SparseSymMatrix& a) {
        if (static_cast<std::size_t>(a.nnz_lower()) != pat_.gather.size() || a.dim() != pat_.n)
            throw std::invalid_argument("cholesky: refactor pattern mismatch");
        factored_ = false;
        const auto& av = a.values();
        for (std::size_t t = 0; t < bx_.size(); ++t) bx_[t] = av[pat_.gather[t]];

        double max_diag = 0.0;
        for (int j = 0; j < pat_.n; ++j) max_diag = std::max(max_diag, bx_[pat_.diag_slot[j]]);
        const double pivot_tol = 1e-12 * max_diag;

        const int n = pat_.n;
        std::fill(x_.begin(), x_.end(), 0.0);
        std::fill(w_.begin(), w_.end(), -1);
        std::copy(lp_.begin(), lp_.end() - 1, head_.begin());

        for (int k = 0; k < n; ++k) {
            int top = detail::ereach(pat_, k, parent_, s_, w_, stack_);
            for (int p = pat_.col_ptr[k]; p < pat_.col_ptr[k + 1]; ++p)
                x_[pat_.row_idx[p]] = bx_[p];
            double d = x_[k];
            x_[k] = 0.0;
            for (int t = top; t < n; ++t) {
                int i = s_[t];
                double lki = x_[i] / lx_[lp_[i]]; // first entry of column i is L(i,i)
                x_[i] = 0.0;
                for (int p = lp_[i] + 1; p < head_[i]; ++p) x_[li_[p]] -= lx_[p] * lki;
                d -= lki * lki;
                int q = head_[i]++;
                li_[q] = k;
                lx_[q] = lki;
            }
            if (!(d > pivot_tol)) {
                std::fill(x_.begin(), x_.end(), 0.0);
                throw NotPositiveDefinite("cholesky: non-positive pivot at column " +
                                          std::to_string(k));
            }
            int q = head_[k]++;
            li_[q] = k;
            lx_[q] = std::sqrt(d);
        }
        factored_ = true;
    }

    /// x with A x = b, i.e. x = P' (L')^-1 L^-1 P b.
    std::vector<double> solve(std::span<const double> b) const {
        require_factored();
        if (b.size() != static_cast<std::size_t>(pat_.n))
            throw std::invalid_argument("cholesky: solve dimension mismatch");
        std::vector<double> v(pat_.n);
        for (int i = 0; i < pat_.n; ++i) v[i] = b[perm_.forward[i]];
        solve_lower_inplace(v);
        solve_upper_inplace(v);
        std::vector<double> x(pat_.n);
        for (int i = 0; i < pat_.n; ++i) x[perm_.forward[i]] = v[i];
        return x;
    }

    /// log |A| = 2 sum log L_ii.
    double log_det() const {
        require_factored();
        double s = 0.0;
        for (int j = 0; j < pat_.n; ++j) s += std::log(lx_[lp_[j]]);
        return 2.0 * s;
    }

    /// One draw from N(A^-1 xi, A^-1) via the permuted factor:
    /// v = (L')^-1 (L^-1 P xi + Z), result = P' v.
    std::vector<double> sample(std::span<const double> xi, RandomStream& rng) const {
        require_factored();
        if (xi.size() != static_cast<std::size_t>(pat_.n))
            throw std::invalid_argument("cholesky: sample dimension mismatch");
        std::vector<double> v(pat_.n);
        for (int i = 0; i < pat_.n; ++i) v[i] = xi[perm_.forward[i]];
        solve_lower_inplace(v);
        for (int i = 0; i < pat_.n; ++i) v[i] += rng.normal();
        solve_upper_inplace(v);
        std::vector<double> beta(pat_.n);
        for (int i = 0; i < pat_.n; ++i) beta[perm_.forward[i]] = v[i];
        return beta;
    }

    /// L entries (row, col, value) in permuted coordinates.
    template <class F>
    void for_each_factor_entry(F&& f) const {
        require_factored();
        for (int j = 0; j < pat_.n; ++j)
            for (int p = lp_[j]; p < lp_[j + 1]; ++p) f(li_[p], j, lx_[p]);
    }

    /// Debug dump of the factor, one "row col value" per line.
    void dump_pattern(std::ostream& os) const {
        for_each_factor_entry([&os](int i, int j, double v) {
            os << i << ' ' << j << ' ' << v << '\n';
        });
    }

private:
    void require_factored() const {
        if (!factored_) throw std::logic_error("cholesky: factor not available");
    }

    void solve_lower_inplace(std::vector<double>& v) const {
        for (int j = 0; j < pat_.n; ++j) {
            double vj = v[j] / lx_[lp_[j]];
            v[j] = vj;
            for (int p = lp_[j] + 1; p < lp_[j + 1]; ++p) v[li_[p]] -= lx_[p] * vj;
        }
    }

    void solve_upper_inplace(std::vector<double>& v) const {
        for (int j = pat_.n - 1; j >= 0; --j) {
            double s = v[j];
            for (int p = lp_[j] + 1; p < lp_[j + 1]; ++p) s -= lx_[p] * v[li_[p]];
            v[j] = s / lx_[lp_[j]];
        }
    }

    Permutation perm_;
    detail::PermutedUpperPattern pat_;
    std::vector<int> parent_;
    std::vector<int> lp_; // column pointers of L
    std::vector<int> li_; // row indices of L (diagonal first per column)
    std::vector<double> lx_;
    std::vector<double> bx_; // gathered values of P A P'
    std::int64_t nnz_l_ = 0;
    bool factored_ = false;

    // numeric workspaces, reused across refactorizations
    mutable std::vector<double> x_;
    std::vector<int> w_, s_, stack_, head_;
};

/// One draw from N(Omega^-1 xi, Omega^-1) with a fresh fill-reducing
/// factorization of the precision matrix.
inline std::vector<double> sample_gaussian_by_precision(const SparseSymMatrix& omega,
                                                        std::span<const double> xi,
                                                        RandomStream& rng) {
    SparseCholesky chol(omega);
    return chol.sample(xi, rng);
}

} // namespace bayestomo
