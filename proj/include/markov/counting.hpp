#ifndef MARKOV_COUNTING_HPP
#define MARKOV_COUNTING_HPP

#include <gmpxx.h>

#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "markov/graph.hpp"

namespace markov {

using BigInt = mpz_class;
using Rational = mpq_class;

inline Rational make_ratio(const BigInt& num, const BigInt& den) {
    Rational r(num, den);
    r.canonicalize();
    return r;
}

/// Square matrix of exact nonnegative integers; the base matrix of a
/// graph has entry (u,v) equal to the number of arcs u -> v.
struct CountMatrix {
    int dim = 0;
    std::vector<BigInt> entries;  // row-major

    CountMatrix() = default;
    explicit CountMatrix(int d) : dim(d), entries(static_cast<std::size_t>(d) * d, 0) {}

    BigInt& at(int u, int v) { return entries[static_cast<std::size_t>(u) * dim + v]; }
    const BigInt& at(int u, int v) const {
        return entries[static_cast<std::size_t>(u) * dim + v];
    }

    static CountMatrix identity(int d) {
        CountMatrix m(d);
        for (int i = 0; i < d; ++i) m.at(i, i) = 1;
        return m;
    }

    CountMatrix operator*(const CountMatrix& other) const {
        CountMatrix r(dim);
        for (int i = 0; i < dim; ++i)
            for (int k = 0; k < dim; ++k) {
                const BigInt& a = at(i, k);
                if (a == 0) continue;
                for (int j = 0; j < dim; ++j) r.at(i, j) += a * other.at(k, j);
            }
        return r;
    }

    friend bool operator==(const CountMatrix&, const CountMatrix&) = default;
};

inline CountMatrix count_matrix(const LabelledGraph& g) {
    CountMatrix m(g.vertex_count());
    for (const auto& a : g.arcs) m.at(a.tail, a.head) += 1;
    return m;
}

/// Prefix table of matrix powers: per_pair(u,v)[n] = #L_{u,v,n}, the
/// number of length-n paths from u to v, and sphere sizes from the start
/// vertex when one exists.
struct CountTable {
    int dim = 0;
    int n_max = 0;
    std::vector<CountMatrix> powers;  // powers[n] = N(G)^n, n = 0..n_max
    std::vector<BigInt> spheres;      // empty when the graph has no start

    const BigInt& pair_count(int u, int v, int n) const { return powers[n].at(u, v); }
};

inline CountTable count_table(const LabelledGraph& g, int n_max) {
    if (n_max < 0) throw GraphError("count_table: n_max must be >= 0");
    CountTable t;
    t.dim = g.vertex_count();
    t.n_max = n_max;
    t.powers.reserve(n_max + 1);
    t.powers.push_back(CountMatrix::identity(t.dim));
    CountMatrix base = count_matrix(g);
    for (int n = 1; n <= n_max; ++n) t.powers.push_back(t.powers.back() * base);
    if (g.start) {
        t.spheres.resize(n_max + 1);
        for (int n = 0; n <= n_max; ++n) {
            BigInt s = 0;
            for (int v = 0; v < t.dim; ++v) s += t.powers[n].at(*g.start, v);
            t.spheres[n] = s;
        }
    }
    return t;
}

inline constexpr int kWildcardVertex = -1;

/// Brute-force oracle: lists the label word of every length-n path from u
/// to v (or to any vertex when v is kWildcardVertex), in arc-index
/// lexicographic order. Throws when more than cap paths exist.
inline std::vector<std::string> enumerate_paths(const LabelledGraph& g, int u, int v,
                                                int n, std::size_t cap = 1000000) {
    if (n < 0) throw GraphError("enumerate_paths: n must be >= 0");
    auto out = g.out_arcs();
    std::vector<std::string> words;
    std::vector<int> path;
    std::vector<std::size_t> pos{0};
    std::vector<int> at{u};
    auto emit = [&](int end) {
        if (v != kWildcardVertex && end != v) return;
        std::string w;
        for (int e : path) {
            if (!w.empty()) w.push_back(' ');
            w += g.alphabet[g.arcs[e].label];
        }
        if (words.size() >= cap) throw GraphError("enumerate_paths: cap exceeded");
        words.push_back(std::move(w));
    };
    while (!pos.empty()) {
        int here = at.back();
        if (static_cast<int>(path.size()) == n) {
            emit(here);
            pos.pop_back();
            at.pop_back();
            if (!path.empty()) path.pop_back();
            continue;
        }
        if (pos.back() < out[here].size()) {
            int e = out[here][pos.back()++];
            path.push_back(e);
            pos.push_back(0);
            at.push_back(g.arcs[e].head);
        } else {
            pos.pop_back();
            at.pop_back();
            if (!path.empty()) path.pop_back();
        }
    }
    return words;
}

/// Checks the cut-convolution identity across a partition (V1, V2) with
/// no arcs from V2 to V1: for every n <= n_max,
///   #L_{u,v,n} = sum_{k+m=n-1} sum_{u' in V1, v' in V2}
///                #L^{G1}_{u,u',k} * #Edge(u',v') * #L^{G2}_{v',v,m}.
/// u must lie in V1 and v in V2. Exact integer comparison.
inline bool verify_cut_convolution(const LabelledGraph& g, const std::vector<int>& v1,
                                   const std::vector<int>& v2, int u, int v,
                                   int n_max) {
    std::vector<char> in1(g.vertex_count(), 0), in2(g.vertex_count(), 0);
    for (int x : v1) in1[x] = 1;
    for (int x : v2) in2[x] = 1;
    for (int x = 0; x < g.vertex_count(); ++x)
        if (in1[x] + in2[x] != 1)
            throw GraphError("verify_cut_convolution: not a 2-partition");
    for (const auto& a : g.arcs)
        if (in2[a.tail] && in1[a.head])
            throw GraphError("verify_cut_convolution: arc from V2 to V1");
    if (!in1[u] || !in2[v])
        throw GraphError("verify_cut_convolution: need u in V1, v in V2");

    std::vector<int> map1, map2;
    LabelledGraph g1 = induced_subgraph(g, v1, &map1);
    LabelledGraph g2 = induced_subgraph(g, v2, &map2);
    std::vector<int> to1(g.vertex_count(), -1), to2(g.vertex_count(), -1);
    for (int i = 0; i < static_cast<int>(map1.size()); ++i) to1[map1[i]] = i;
    for (int i = 0; i < static_cast<int>(map2.size()); ++i) to2[map2[i]] = i;

    CountTable full = count_table(g, n_max);
    CountTable t1 = count_table(g1, n_max);
    CountTable t2 = count_table(g2, n_max);

    // Crossing arc multiplicities.
    CountMatrix cross(g.vertex_count());
    for (const auto& a : g.arcs)
        if (in1[a.tail] && in2[a.head]) cross.at(a.tail, a.head) += 1;

    for (int n = 0; n <= n_max; ++n) {
        BigInt rhs = 0;
        for (int k = 0; k + 1 <= n; ++k) {
            int m = n - 1 - k;
            for (int up : v1)
                for (int vp : v2) {
                    const BigInt& e = cross.at(up, vp);
                    if (e == 0) continue;
                    rhs += t1.pair_count(to1[u], to1[up], k) * e *
                           t2.pair_count(to2[vp], to2[v], m);
                }
        }
        if (rhs != full.pair_count(u, v, n)) return false;
    }
    return true;
}

/// CSV emitter: header "n,sphere,<u>-><v>,..." with exact decimal
/// integers. The sphere column is empty when the graph has no start.
inline std::string count_table_csv(const LabelledGraph& g, const CountTable& t,
                                   const std::vector<std::pair<int, int>>& pairs) {
    std::ostringstream out;
    out << "n,sphere";
    for (auto [u, v] : pairs) out << ',' << g.vertices[u] << "->" << g.vertices[v];
    out << '\n';
    for (int n = 0; n <= t.n_max; ++n) {
        out << n << ',';
        if (!t.spheres.empty()) out << t.spheres[n].get_str();
        for (auto [u, v] : pairs) out << ',' << t.pair_count(u, v, n).get_str();
        out << '\n';
    }
    return out.str();
}

}  // namespace markov

#endif  // MARKOV_COUNTING_HPP
