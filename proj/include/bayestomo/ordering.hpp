#pragma once

#include <vector>

#include "bayestomo/sparse.hpp"

namespace bayestomo {

/// Fill-reducing minimum-degree ordering on the symbolic structure of a
/// symmetric matrix.
///
/// Works on the quotient graph: an eliminated pivot becomes an element
/// whose boundary is the pivot's reach; elements adjacent to the pivot are
/// absorbed into the new one. External degrees are recomputed exactly for
/// the boundary variables after each elimination (affordable at the node
/// counts this library targets, and never worse than the approximate
/// bound). Degree ties break toward the lowest node index so the ordering
/// is deterministic.
inline Permutation min_degree_ordering(const SparseSymMatrix& a) {
    const int n = a.dim();

    // variable -> adjacent variables (no self loops, both directions)
    std::vector<std::vector<int>> var_adj(n);
    a.for_each_lower([&](int i, int j, double) {
        if (i != j) {
            var_adj[i].push_back(j);
            var_adj[j].push_back(i);
        }
    });

    std::vector<std::vector<int>> elem_adj(n);     // variable -> adjacent element ids
    std::vector<std::vector<int>> elem_members(n); // element id -> boundary variables
    std::vector<char> eliminated(n, 0), elem_alive(n, 0);
    std::vector<int> degree(n), mark(n, -1);
    for (int v = 0; v < n; ++v) degree[v] = static_cast<int>(var_adj[v].size());

    std::vector<int> order;
    order.reserve(n);
    std::vector<int> boundary;
    int next_stamp = 0;

    for (int step = 0; step < n; ++step) {
        int pivot = -1;
        for (int v = 0; v < n; ++v)
            if (!eliminated[v] && (pivot < 0 || degree[v] < degree[pivot])) pivot = v;

        // boundary of the new element: adjacent variables plus the members
        // of every adjacent element, minus the pivot itself
        boundary.clear();
        const int bstamp = next_stamp++;
        mark[pivot] = bstamp;
        for (int u : var_adj[pivot]) {
            if (!eliminated[u] && mark[u] != bstamp) {
                mark[u] = bstamp;
                boundary.push_back(u);
            }
        }
        for (int e : elem_adj[pivot]) {
            if (!elem_alive[e]) continue;
            for (int u : elem_members[e]) {
                if (!eliminated[u] && u != pivot && mark[u] != bstamp) {
                    mark[u] = bstamp;
                    boundary.push_back(u);
                }
            }
            elem_alive[e] = 0; // absorbed into the new element
        }

        eliminated[pivot] = 1;
        order.push_back(pivot);
        const int elem = pivot; // reuse the pivot id for the new element
        elem_members[elem] = boundary;
        elem_alive[elem] = 1;

        for (int u : boundary) {
            // compact adjacency lists while recomputing the exact external degree
            const int stamp = next_stamp++;
            mark[u] = stamp;
            int deg = 0;

            auto& vu = var_adj[u];
            std::size_t w = 0;
            for (int x : vu) {
                if (eliminated[x]) continue;
                vu[w++] = x;
                if (mark[x] != stamp) {
                    mark[x] = stamp;
                    ++deg;
                }
            }
            vu.resize(w);

            auto& eu = elem_adj[u];
            w = 0;
            bool has_new = false;
            for (int e : eu) {
                if (!elem_alive[e]) continue;
                eu[w++] = e;
                if (e == elem) has_new = true;
                auto& mem = elem_members[e];
                std::size_t mw = 0;
                for (int x : mem) {
                    if (eliminated[x]) continue;
                    mem[mw++] = x;
                    if (x != u && mark[x] != stamp) {
                        mark[x] = stamp;
                        ++deg;
                    }
                }
                mem.resize(mw);
            }
            eu.resize(w);
            if (!has_new) {
                eu.push_back(elem);
                for (int x : elem_members[elem])
                    if (x != u && mark[x] != stamp) {
                        mark[x] = stamp;
                        ++deg;
                    }
            }
            degree[u] = deg;
        }
    }

    return Permutation::from_forward(std::move(order));
}

} // namespace bayestomo
