#ifndef MARKOV_CODINGS_HPP
#define MARKOV_CODINGS_HPP

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "markov/counting.hpp"
#include "markov/graph.hpp"

namespace markov {

struct CodingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Ground-truth (semi)group used to verify that a labelled graph is a
/// Markov coding: free semigroups, free groups with a/A inverse pairing,
/// or an explicit finite multiplication table.
struct GroupOracle {
    enum class Kind { FreeSemigroup, FreeGroup, FiniteGroupTable };

    Kind kind = Kind::FreeSemigroup;
    int rank = 0;  // free cases

    // FiniteGroupTable only.
    std::vector<std::string> elements;
    std::vector<std::vector<int>> table;  // table[i][j] = index of elements[i]*elements[j]
    std::vector<int> generators;          // indices into elements
    int identity = 0;

    static GroupOracle free_semigroup(int k) {
        check_rank(k);
        GroupOracle o;
        o.kind = Kind::FreeSemigroup;
        o.rank = k;
        return o;
    }

    static GroupOracle free_group(int k) {
        check_rank(k);
        GroupOracle o;
        o.kind = Kind::FreeGroup;
        o.rank = k;
        return o;
    }

    static GroupOracle finite_group(std::vector<std::string> elements,
                                    std::vector<std::vector<int>> table,
                                    const std::vector<std::string>& generator_names) {
        GroupOracle o;
        o.kind = Kind::FiniteGroupTable;
        o.elements = std::move(elements);
        o.table = std::move(table);
        for (const auto& name : generator_names) o.generators.push_back(o.element(name));
        o.validate();
        return o;
    }

    /// Z/n with generators +1 and -1.
    static GroupOracle cyclic(int n) {
        if (n < 1) throw CodingError("cyclic: n must be >= 1");
        std::vector<std::string> elems;
        std::vector<std::vector<int>> table(n, std::vector<int>(n));
        for (int i = 0; i < n; ++i) elems.push_back(std::to_string(i));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) table[i][j] = (i + j) % n;
        std::vector<std::string> gens;
        if (n > 1) {
            gens.push_back("1");
            if (n > 2) gens.push_back(std::to_string(n - 1));
        }
        return finite_group(std::move(elems), std::move(table), gens);
    }

    int element(const std::string& name) const {
        for (int i = 0; i < static_cast<int>(elements.size()); ++i)
            if (elements[i] == name) return i;
        throw CodingError("unknown element: " + name);
    }

    /// Alphabet symbols the coding graph is expected to use.
    std::vector<std::string> symbols() const {
        std::vector<std::string> out;
        switch (kind) {
            case Kind::FreeSemigroup:
                for (int i = 0; i < rank; ++i)
                    out.push_back(std::string(1, static_cast<char>('a' + i)));
                break;
            case Kind::FreeGroup:
                for (int i = 0; i < rank; ++i) {
                    out.push_back(std::string(1, static_cast<char>('a' + i)));
                    out.push_back(std::string(1, static_cast<char>('A' + i)));
                }
                break;
            case Kind::FiniteGroupTable:
                for (int g : generators) out.push_back(elements[g]);
                break;
        }
        return out;
    }

    /// Identity and inverses exist, associativity (exhaustive for groups
    /// of order <= 200), and the generator subset generates.
    void validate() {
        if (kind != Kind::FiniteGroupTable) return;
        const int n = static_cast<int>(elements.size());
        if (n == 0) throw CodingError("finite group has no elements");
        if (static_cast<int>(table.size()) != n)
            throw CodingError("multiplication table has wrong size");
        for (const auto& row : table) {
            if (static_cast<int>(row.size()) != n)
                throw CodingError("multiplication table row has wrong size");
            for (int x : row)
                if (x < 0 || x >= n) throw CodingError("table entry out of range");
        }
        std::optional<int> id;
        for (int e = 0; e < n; ++e) {
            bool is_id = true;
            for (int x = 0; x < n; ++x)
                if (table[e][x] != x || table[x][e] != x) is_id = false;
            if (is_id) id = e;
        }
        if (!id) throw CodingError("finite group has no identity");
        identity = *id;
        for (int x = 0; x < n; ++x) {
            bool has_inverse = false;
            for (int y = 0; y < n; ++y)
                if (table[x][y] == *id && table[y][x] == *id) has_inverse = true;
            if (!has_inverse)
                throw CodingError("element without inverse: " + elements[x]);
        }
        if (n <= 200) {
            for (int x = 0; x < n; ++x)
                for (int y = 0; y < n; ++y)
                    for (int z = 0; z < n; ++z)
                        if (table[table[x][y]][z] != table[x][table[y][z]])
                            throw CodingError("multiplication table is not associative");
        }
        // Generation check: BFS closure over the (symmetrized) generators.
        std::set<int> gen_set(generators.begin(), generators.end());
        for (int g : generators) gen_set.insert(inverse(g));
        std::vector<char> reached(n, 0);
        std::deque<int> queue{*id};
        reached[*id] = 1;
        int count = 1;
        while (!queue.empty()) {
            int x = queue.front();
            queue.pop_front();
            for (int g : gen_set) {
                int y = table[x][g];
                if (!reached[y]) {
                    reached[y] = 1;
                    ++count;
                    queue.push_back(y);
                }
            }
        }
        if (count != n) throw CodingError("generators do not generate the group");
    }

    int inverse(int x) const {
        for (int y = 0; y < static_cast<int>(elements.size()); ++y)
            if (table[x][y] == identity && table[y][x] == identity) return y;
        throw CodingError("element without inverse: " + elements[x]);
    }

    /// Adds missing inverses to the generator list; returns true if the
    /// set changed.
    bool symmetrize() {
        if (kind != Kind::FiniteGroupTable) return false;
        bool changed = false;
        std::vector<int> gens = generators;
        for (int g : gens) {
            int inv = inverse(g);
            if (std::find(generators.begin(), generators.end(), inv) ==
                generators.end()) {
                generators.push_back(inv);
                changed = true;
            }
        }
        return changed;
    }

    /// Word norms |g|_O by BFS over the generator set.
    std::vector<int> word_norms() const {
        const int n = static_cast<int>(elements.size());
        std::vector<int> dist(n, -1);
        std::deque<int> queue{identity};
        dist[identity] = 0;
        while (!queue.empty()) {
            int x = queue.front();
            queue.pop_front();
            for (int g : generators) {
                int y = table[x][g];
                if (dist[y] == -1) {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        return dist;
    }

    BigInt sphere_size(int n) const {
        switch (kind) {
            case Kind::FreeSemigroup: {
                BigInt r;
                mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(rank),
                              static_cast<unsigned long>(n));
                return r;
            }
            case Kind::FreeGroup: {
                if (n == 0) return 1;
                BigInt r;
                mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(2 * rank - 1),
                              static_cast<unsigned long>(n - 1));
                return 2 * rank * r;
            }
            case Kind::FiniteGroupTable: {
                auto norms = word_norms();
                BigInt r = 0;
                for (int d : norms)
                    if (d == n) ++r;
                return r;
            }
        }
        return 0;
    }

  private:
    static void check_rank(int k) {
        if (k < 1) throw CodingError("rank must be >= 1");
        if (k > 26) throw CodingError("rank above 26 is not supported");
    }
};

/// One vertex with k loops; paths of length n biject with words of
/// length n over k generators.
inline LabelledGraph build_free_semigroup(int k) {
    GroupOracle o = GroupOracle::free_semigroup(k);
    LabelledGraph g;
    g.vertices = {"s"};
    g.start = 0;
    g.alphabet = o.symbols();
    for (int i = 0; i < k; ++i) g.add_arc(0, 0, i);
    return g;
}

/// The classical no-backtracking automaton for the free group on k
/// generators: a start vertex plus one vertex per signed generator, with
/// arcs to every vertex except the inverse, labelled by the head symbol.
inline LabelledGraph build_free_group(int k) {
    GroupOracle o = GroupOracle::free_group(k);
    LabelledGraph g;
    g.alphabet = o.symbols();  // pairs (a, A), (b, B), ...
    g.vertices.push_back("start");
    g.start = 0;
    for (const auto& s : g.alphabet) g.vertices.push_back(s);
    const int m = 2 * k;
    for (int s = 0; s < m; ++s) g.add_arc(0, 1 + s, s);
    for (int s = 0; s < m; ++s)
        for (int t = 0; t < m; ++t)
            if (t != (s ^ 1)) g.add_arc(1 + s, 1 + t, t);
    return g;
}

/// Shortlex-geodesic coding of a finite group: BFS from the identity in
/// the Cayley graph with the given generator order; an arc g -> g*s
/// labelled s exists exactly when the shortlex normal form of g*s
/// extends that of g. The generator set is symmetrized first;
/// *symmetrized reports whether that changed it.
inline LabelledGraph build_finite_group_shortlex(GroupOracle& oracle,
                                                 bool* symmetrized = nullptr) {
    if (oracle.kind != GroupOracle::Kind::FiniteGroupTable)
        throw CodingError("build_finite_group_shortlex: need a finite group table");
    bool changed = oracle.symmetrize();
    if (symmetrized) *symmetrized = changed;
    oracle.validate();

    const int n = static_cast<int>(oracle.elements.size());
    const auto& gens = oracle.generators;
    std::vector<std::vector<int>> nf(n);  // generator-index words
    std::vector<char> known(n, 0);
    known[oracle.identity] = 1;
    std::vector<int> layer{oracle.identity};

    LabelledGraph g;
    g.vertices = oracle.elements;
    g.alphabet = oracle.symbols();
    g.start = oracle.identity;

    while (!layer.empty()) {
        std::sort(layer.begin(), layer.end(),
                  [&](int x, int y) { return nf[x] < nf[y]; });
        std::vector<int> next;
        for (int x : layer)
            for (int gi = 0; gi < static_cast<int>(gens.size()); ++gi) {
                int y = oracle.table[x][gens[gi]];
                if (!known[y]) {
                    known[y] = 1;
                    nf[y] = nf[x];
                    nf[y].push_back(gi);
                    next.push_back(y);
                    g.add_arc(x, y, gi);
                }
            }
        layer = std::move(next);
    }
    return g;
}

/// "first line: element names; rows of the multiplication table; last
/// line: generators: <names>".
inline GroupOracle parse_group_table(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> generator_names;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        for (auto& ch : line)
            if (ch == ',') ch = ' ';
        auto toks = detail::split_ws(line);
        if (toks.empty()) continue;
        if (toks[0] == "generators:" || toks[0] == "generators") {
            generator_names.assign(toks.begin() + 1, toks.end());
        } else {
            rows.push_back(toks);
        }
    }
    if (rows.empty()) throw CodingError("group table file has no elements");
    std::vector<std::string> elements = rows[0];
    const int n = static_cast<int>(elements.size());
    if (static_cast<int>(rows.size()) != n + 1)
        throw CodingError("group table must have one row per element");
    auto index_of = [&](const std::string& name) {
        for (int i = 0; i < n; ++i)
            if (elements[i] == name) return i;
        throw CodingError("unknown element in table: " + name);
    };
    std::vector<std::vector<int>> table(n, std::vector<int>(n));
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(rows[i + 1].size()) != n)
            throw CodingError("group table row has wrong length");
        for (int j = 0; j < n; ++j) table[i][j] = index_of(rows[i + 1][j]);
    }
    return GroupOracle::finite_group(std::move(elements), std::move(table),
                                     generator_names);
}

struct BijectivityReport {
    bool pass = true;
    std::string message = "ok";
    int failure_n = -1;
    std::string witness;  // label word of the first counterexample
    std::vector<BigInt> coding_spheres;  // #paths of length n from v0
};

/// Enumerates all paths from v0 up to length n_max, evaluates their
/// label words in the oracle, and checks that the lifted map is a
/// length-preserving bijection onto each sphere: injectivity, word norm
/// equal to path length, and cardinality matching the oracle sphere.
inline BijectivityReport verify_bijectivity(const LabelledGraph& g,
                                            const GroupOracle& oracle, int n_max,
                                            std::size_t cap = 1000000) {
    if (!g.start) throw CodingError("verify_bijectivity: graph has no start vertex");
    BijectivityReport report;

    // Map graph labels to oracle symbols.
    auto symbols = oracle.symbols();
    std::vector<int> sym_of_label(g.alphabet.size(), -1);
    for (std::size_t l = 0; l < g.alphabet.size(); ++l) {
        for (std::size_t s = 0; s < symbols.size(); ++s)
            if (symbols[s] == g.alphabet[l]) sym_of_label[l] = static_cast<int>(s);
        if (sym_of_label[l] < 0)
            throw CodingError("graph symbol not in oracle alphabet: " + g.alphabet[l]);
    }

    std::vector<int> norms;
    if (oracle.kind == GroupOracle::Kind::FiniteGroupTable) norms = oracle.word_norms();

    struct State {
        int vertex;
        std::vector<int> word;  // oracle symbol indices (free cases: reduced word)
        int element;            // finite case
        std::string label_word;
    };
    auto fail = [&](int n, const State& st, const std::string& why) {
        report.pass = false;
        report.failure_n = n;
        report.witness = st.label_word;
        report.message = why + " at n=" + std::to_string(n) + " (word: " +
                         (st.label_word.empty() ? "<empty>" : st.label_word) + ")";
    };

    auto out = g.out_arcs();
    std::vector<State> layer{State{*g.start, {}, 0, ""}};
    if (oracle.kind == GroupOracle::Kind::FiniteGroupTable)
        layer[0].element = oracle.identity;
    report.coding_spheres.push_back(1);

    for (int n = 0; n <= n_max; ++n) {
        // Injectivity and norm checks on this layer.
        std::set<std::string> seen;
        for (const auto& st : layer) {
            std::string canon;
            int norm;
            if (oracle.kind == GroupOracle::Kind::FiniteGroupTable) {
                canon = std::to_string(st.element);
                norm = norms[st.element];
            } else {
                std::ostringstream repr;
                for (int s : st.word) repr << s << '.';
                canon = repr.str();
                norm = static_cast<int>(st.word.size());
            }
            if (norm != n) {
                fail(n, st, "word norm differs from path length");
                return report;
            }
            if (!seen.insert(canon).second) {
                fail(n, st, "two paths map to the same element");
                return report;
            }
        }
        BigInt oracle_sphere = oracle.sphere_size(n);
        if (BigInt(static_cast<long>(layer.size())) != oracle_sphere) {
            report.pass = false;
            report.failure_n = n;
            report.message = "sphere size mismatch at n=" + std::to_string(n) +
                             ": coding has " + std::to_string(layer.size()) +
                             ", oracle has " + oracle_sphere.get_str();
            return report;
        }
        if (n == n_max) break;

        std::vector<State> next;
        for (const auto& st : layer)
            for (int e : out[st.vertex]) {
                const auto& arc = g.arcs[e];
                State ns;
                ns.vertex = arc.head;
                ns.label_word = st.label_word;
                if (!ns.label_word.empty()) ns.label_word += ".";
                ns.label_word += g.alphabet[arc.label];
                int sym = sym_of_label[arc.label];
                if (oracle.kind == GroupOracle::Kind::FiniteGroupTable) {
                    ns.element = oracle.table[st.element][oracle.generators[sym]];
                } else {
                    ns.word = st.word;
                    if (oracle.kind == GroupOracle::Kind::FreeGroup &&
                        !ns.word.empty() && (ns.word.back() ^ 1) == sym)
                        ns.word.pop_back();
                    else
                        ns.word.push_back(sym);
                }
                if (next.size() >= cap)
                    throw CodingError("verify_bijectivity: enumeration cap exceeded");
                next.push_back(std::move(ns));
            }
        layer = std::move(next);
        report.coding_spheres.push_back(BigInt(static_cast<long>(layer.size())));
    }
    return report;
}

}  // namespace markov

#endif  // MARKOV_CODINGS_HPP
