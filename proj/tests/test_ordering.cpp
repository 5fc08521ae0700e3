#include <catch2/catch_amalgamated.hpp>

#include "bayestomo/cholesky.hpp"
#include "bayestomo/ordering.hpp"
#include "bayestomo/spatial.hpp"
#include "support/dense_oracle.hpp"

using namespace bayestomo;

namespace {

SparseSymMatrix arrowhead(int n) {
    std::vector<Triplet> t;
    for (int i = 0; i < n; ++i) t.push_back({i, i, 10.0});
    for (int i = 1; i < n; ++i) t.push_back({i, 0, 1.0});
    return SparseSymMatrix::from_triplets(n, t);
}

SparseSymMatrix grid_precision(int nx, int ny, int nz, double psi) {
    NodeSet nodes;
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x)
                nodes.coords.push_back({100.0 * x, 100.0 * y, 100.0 * z});
    auto spec = NeighborhoodSpec::spherical(150.0, WeightKind::reciprocal);
    return NeighborGraph::build(nodes, spec).precision(psi);
}

} // namespace

TEST_CASE("diagonal matrix: any ordering is valid, no fill") {
    auto a = SparseSymMatrix::identity(7);
    auto p = min_degree_ordering(a);
    CHECK_NOTHROW(Permutation::from_forward(p.forward)); // is a permutation
    CHECK(cholesky_factor_nnz(a, p) == 7);
}

TEST_CASE("arrowhead: hub ordered away from the front, zero fill") {
    auto a = arrowhead(6);
    auto p = min_degree_ordering(a);
    auto nnz_md = cholesky_factor_nnz(a, p);
    auto nnz_nat = cholesky_factor_nnz(a, Permutation::identity(6));
    CHECK(nnz_md == 11);
    CHECK(nnz_nat == 21);
    // dense symbolic elimination oracle agrees on both counts
    CHECK(oracle::symbolic_factor_nnz(a, p) == nnz_md);
    CHECK(oracle::symbolic_factor_nnz(a, Permutation::identity(6)) == nnz_nat);
}

TEST_CASE("symbolic counts match the dense elimination oracle on random patterns") {
    RandomStream rng(17);
    for (int rep = 0; rep < 10; ++rep) {
        int n = 8 + static_cast<int>(rng.uniform() * 20);
        std::vector<Triplet> t;
        for (int i = 0; i < n; ++i) t.push_back({i, i, 4.0});
        for (int e = 0; e < 3 * n; ++e) {
            int i = static_cast<int>(rng.uniform() * n);
            int j = static_cast<int>(rng.uniform() * n);
            if (i != j) t.push_back({i, j, 0.1});
        }
        auto a = SparseSymMatrix::from_triplets(n, t);
        auto p = min_degree_ordering(a);
        CHECK(cholesky_factor_nnz(a, p) == oracle::symbolic_factor_nnz(a, p));
        auto idp = Permutation::identity(n);
        CHECK(cholesky_factor_nnz(a, idp) == oracle::symbolic_factor_nnz(a, idp));
    }
}

TEST_CASE("CAR precision on a 5x5x5 grid: ordering never loses to natural or reverse") {
    auto q = grid_precision(5, 5, 5, 1.0);
    auto p = min_degree_ordering(q);
    auto nnz_md = cholesky_factor_nnz(q, p);
    auto nnz_nat = cholesky_factor_nnz(q, Permutation::identity(q.dim()));
    auto nnz_rev = cholesky_factor_nnz(q, Permutation::reversed(q.dim()));
    CHECK(nnz_md <= nnz_nat);
    CHECK(nnz_md <= nnz_rev);
}

TEST_CASE("ordering is deterministic") {
    auto q = grid_precision(4, 4, 3, 2.0);
    auto p1 = min_degree_ordering(q);
    auto p2 = min_degree_ordering(q);
    CHECK(p1.forward == p2.forward);
}
