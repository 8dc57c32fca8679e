#ifndef MARKOV_GRAPH_HPP
#define MARKOV_GRAPH_HPP

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace markov {

struct GraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Arc {
    int tail = 0;
    int head = 0;
    int label = 0;  // index into alphabet

    friend bool operator==(const Arc&, const Arc&) = default;
};

/// Finite directed multigraph with arcs labelled by generator symbols.
/// Loops and parallel arcs are permitted. Vertex and symbol identity is
/// by name; indices are positional in the declaration order.
struct LabelledGraph {
    std::vector<std::string> vertices;
    std::vector<std::string> alphabet;
    std::vector<Arc> arcs;
    std::optional<int> start;

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int arc_count() const { return static_cast<int>(arcs.size()); }

    int vertex_index(const std::string& name) const {
        for (int i = 0; i < vertex_count(); ++i)
            if (vertices[i] == name) return i;
        throw GraphError("unknown vertex: " + name);
    }

    int symbol_index(const std::string& sym) const {
        for (std::size_t i = 0; i < alphabet.size(); ++i)
            if (alphabet[i] == sym) return static_cast<int>(i);
        throw GraphError("unknown symbol: " + sym);
    }

    void add_arc(int tail, int head, int label) {
        arcs.push_back(Arc{tail, head, label});
    }

    /// Arcs grouped by tail vertex, in arc-declaration order.
    std::vector<std::vector<int>> out_arcs() const {
        std::vector<std::vector<int>> out(vertices.size());
        for (int i = 0; i < arc_count(); ++i) out[arcs[i].tail].push_back(i);
        return out;
    }

    void validate() const {
        if (vertices.empty()) throw GraphError("graph has no vertices");
        std::set<std::string> seen;
        for (const auto& v : vertices) {
            if (v.empty()) throw GraphError("empty vertex name");
            if (!seen.insert(v).second) throw GraphError("duplicate vertex: " + v);
        }
        seen.clear();
        for (const auto& s : alphabet) {
            if (s.empty()) throw GraphError("empty alphabet symbol");
            if (!seen.insert(s).second) throw GraphError("duplicate symbol: " + s);
        }
        for (const auto& a : arcs) {
            if (a.tail < 0 || a.tail >= vertex_count() || a.head < 0 ||
                a.head >= vertex_count())
                throw GraphError("arc endpoint out of range");
            if (a.label < 0 || a.label >= static_cast<int>(alphabet.size()))
                throw GraphError("arc label out of range");
        }
        if (start && (*start < 0 || *start >= vertex_count()))
            throw GraphError("start vertex out of range");
    }
};

/// SCC decomposition. Components are listed in topological order of the
/// condensation DAG (sources first), so topo_order is the identity on
/// component indices.
struct Condensation {
    std::vector<std::vector<int>> components;
    std::vector<std::pair<int, int>> dag_arcs;
    std::vector<int> topo_order;
    std::vector<int> component_of;  // vertex index -> component index
};

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

}  // namespace detail

/// Parses the line-oriented graph file format:
///   alphabet <sym> ...
///   start <vertex>
///   vertex <name>
///   edge <tail> <head> <label>
/// '#' starts a comment; blank lines are ignored.
inline LabelledGraph parse_graph(const std::string& text) {
    LabelledGraph g;
    bool have_alphabet = false;
    std::optional<std::string> start_name;
    int start_line = 0;

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw GraphError("line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        auto toks = detail::split_ws(line);
        if (toks.empty()) continue;
        const std::string& kw = toks[0];
        if (kw == "alphabet") {
            if (have_alphabet) fail("duplicate alphabet declaration");
            have_alphabet = true;
            for (std::size_t i = 1; i < toks.size(); ++i) {
                for (const auto& s : g.alphabet)
                    if (s == toks[i]) fail("duplicate symbol: " + toks[i]);
                g.alphabet.push_back(toks[i]);
            }
        } else if (kw == "start") {
            if (toks.size() != 2) fail("start expects one vertex name");
            if (start_name) fail("duplicate start declaration");
            start_name = toks[1];
            start_line = lineno;
        } else if (kw == "vertex") {
            if (toks.size() != 2) fail("vertex expects one name");
            for (const auto& v : g.vertices)
                if (v == toks[1]) fail("duplicate vertex: " + toks[1]);
            g.vertices.push_back(toks[1]);
        } else if (kw == "edge") {
            if (toks.size() != 4) fail("edge expects tail head label");
            if (!have_alphabet) fail("alphabet must precede edges");
            auto find_vertex = [&](const std::string& name) {
                for (int i = 0; i < g.vertex_count(); ++i)
                    if (g.vertices[i] == name) return i;
                fail("unknown vertex: " + name);
                return -1;
            };
            int tail = find_vertex(toks[1]);
            int head = find_vertex(toks[2]);
            int label = -1;
            for (std::size_t i = 0; i < g.alphabet.size(); ++i)
                if (g.alphabet[i] == toks[3]) label = static_cast<int>(i);
            if (label < 0) fail("unknown symbol: " + toks[3]);
            g.add_arc(tail, head, label);
        } else {
            fail("unknown directive: " + kw);
        }
    }
    if (g.vertices.empty()) throw GraphError("graph has no vertices");
    if (start_name) {
        lineno = start_line;
        bool found = false;
        for (int i = 0; i < g.vertex_count(); ++i)
            if (g.vertices[i] == *start_name) {
                g.start = i;
                found = true;
            }
        if (!found)
            throw GraphError("line " + std::to_string(start_line) +
                             ": unknown vertex: " + *start_name);
    }
    g.validate();
    return g;
}

/// Deterministic serialization; parse_graph(serialize_graph(g)) reproduces
/// g up to arc order (arcs keep declaration order, so it is the identity).
inline std::string serialize_graph(const LabelledGraph& g) {
    std::ostringstream out;
    out << "alphabet";
    for (const auto& s : g.alphabet) out << ' ' << s;
    out << '\n';
    if (g.start) out << "start " << g.vertices[*g.start] << '\n';
    for (const auto& v : g.vertices) out << "vertex " << v << '\n';
    for (const auto& a : g.arcs)
        out << "edge " << g.vertices[a.tail] << ' ' << g.vertices[a.head] << ' '
            << g.alphabet[a.label] << '\n';
    return out.str();
}

/// Tarjan SCC; components are emitted in topological order of the
/// condensation (every dag_arc goes from a lower to a higher component
/// index).
inline Condensation strongly_connected_components(const LabelledGraph& g) {
    const int n = g.vertex_count();
    auto out = g.out_arcs();

    std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
    std::vector<char> on_stack(n, 0);
    std::vector<int> stack;
    std::vector<std::vector<int>> comps;
    int next_index = 0;

    // Iterative Tarjan to avoid deep recursion on path-like graphs.
    struct Frame {
        int v;
        std::size_t arc_pos;
    };
    for (int root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        std::vector<Frame> call{{root, 0}};
        index[root] = low[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.arc_pos < out[f.v].size()) {
                int w = g.arcs[out[f.v][f.arc_pos++]].head;
                if (index[w] == -1) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
            } else {
                if (low[f.v] == index[f.v]) {
                    std::vector<int> c;
                    int w;
                    do {
                        w = stack.back();
                        stack.pop_back();
                        on_stack[w] = 0;
                        comp[w] = static_cast<int>(comps.size());
                        c.push_back(w);
                    } while (w != f.v);
                    std::sort(c.begin(), c.end());
                    comps.push_back(std::move(c));
                }
                int v = f.v;
                call.pop_back();
                if (!call.empty())
                    low[call.back().v] = std::min(low[call.back().v], low[v]);
            }
        }
    }

    // Tarjan emits components in reverse topological order.
    const int k = static_cast<int>(comps.size());
    Condensation result;
    result.components.resize(k);
    result.component_of.resize(n);
    for (int i = 0; i < k; ++i) result.components[i] = std::move(comps[k - 1 - i]);
    for (int v = 0; v < n; ++v) result.component_of[v] = k - 1 - comp[v];

    std::set<std::pair<int, int>> dag;
    for (const auto& a : g.arcs) {
        int cu = result.component_of[a.tail], cv = result.component_of[a.head];
        if (cu != cv) dag.insert({cu, cv});
    }
    result.dag_arcs.assign(dag.begin(), dag.end());
    result.topo_order.resize(k);
    for (int i = 0; i < k; ++i) result.topo_order[i] = i;
    return result;
}

/// Keeps exactly the arcs with both endpoints in vs; start is cleared
/// unless it lies in vs. Returns the subgraph together with the map from
/// new vertex indices to old ones.
inline LabelledGraph induced_subgraph(const LabelledGraph& g,
                                      const std::vector<int>& vs,
                                      std::vector<int>* old_index = nullptr) {
    if (vs.empty()) throw GraphError("induced_subgraph: empty vertex set");
    std::vector<int> sorted = vs;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> remap(g.vertex_count(), -1);
    LabelledGraph sub;
    sub.alphabet = g.alphabet;
    for (int v : sorted) {
        if (v < 0 || v >= g.vertex_count())
            throw GraphError("induced_subgraph: vertex out of range");
        remap[v] = sub.vertex_count();
        sub.vertices.push_back(g.vertices[v]);
    }
    for (const auto& a : g.arcs)
        if (remap[a.tail] >= 0 && remap[a.head] >= 0)
            sub.add_arc(remap[a.tail], remap[a.head], a.label);
    if (g.start && remap[*g.start] >= 0) sub.start = remap[*g.start];
    if (old_index) *old_index = sorted;
    return sub;
}

/// G^n: same vertices, one arc per length-n path labelled by the
/// concatenated word. The alphabet of G^n is the set of occurring words,
/// in first-appearance order.
inline LabelledGraph graph_power(const LabelledGraph& g, int n,
                                 std::size_t arc_cap = 1000000) {
    if (n < 1) throw GraphError("graph_power: n must be >= 1");
    auto out = g.out_arcs();
    LabelledGraph p;
    p.vertices = g.vertices;
    p.start = g.start;
    std::map<std::string, int> word_index;

    std::string word;
    std::vector<int> path;  // arc indices
    auto emit = [&](int tail, int head) {
        word.clear();
        for (std::size_t i = 0; i < path.size(); ++i) {
            if (i) word.push_back('.');
            word += g.alphabet[g.arcs[path[i]].label];
        }
        auto [it, fresh] = word_index.try_emplace(word, static_cast<int>(p.alphabet.size()));
        if (fresh) p.alphabet.push_back(word);
        if (p.arcs.size() >= arc_cap)
            throw GraphError("graph_power: arc cap exceeded");
        p.add_arc(tail, head, it->second);
    };
    for (int u = 0; u < g.vertex_count(); ++u) {
        // DFS over length-n paths from u, in arc-index lexicographic order.
        std::vector<std::size_t> pos{0};
        std::vector<int> at{u};
        while (!pos.empty()) {
            int v = at.back();
            if (static_cast<int>(path.size()) == n) {
                emit(u, v);
                pos.pop_back();
                at.pop_back();
                if (!path.empty()) path.pop_back();
                continue;
            }
            if (pos.back() < out[v].size()) {
                int e = out[v][pos.back()++];
                path.push_back(e);
                pos.push_back(0);
                at.push_back(g.arcs[e].head);
            } else {
                pos.pop_back();
                at.pop_back();
                if (!path.empty()) path.pop_back();
            }
        }
        path.clear();
    }
    return p;
}

}  // namespace markov

#endif  // MARKOV_GRAPH_HPP
