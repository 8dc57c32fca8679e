#ifndef MARKOV_ACTION_HPP
#define MARKOV_ACTION_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "markov/counting.hpp"
#include "markov/graph.hpp"

namespace markov {

struct ActionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Finite probability space with exact rational point weights.
struct FiniteSpace {
    std::vector<std::string> points;
    std::vector<Rational> weights;

    int size() const { return static_cast<int>(points.size()); }

    void validate() const {
        if (points.empty()) throw ActionError("space has no points");
        if (weights.size() != points.size())
            throw ActionError("weights/points size mismatch");
        Rational sum = 0;
        for (const auto& w : weights) {
            if (w <= 0) throw ActionError("weights must be positive");
            sum += w;
        }
        if (sum != 1) throw ActionError("weights must sum to 1");
    }

    static FiniteSpace uniform(int n) {
        FiniteSpace s;
        for (int i = 0; i < n; ++i) {
            s.points.push_back("p" + std::to_string(i));
            s.weights.emplace_back(1, n);
        }
        return s;
    }
};

/// One measure-preserving permutation of the space per alphabet symbol.
struct FiniteAction {
    FiniteSpace space;
    std::vector<std::vector<int>> maps;  // maps[symbol][point] = image point

    void validate(const LabelledGraph& g) const {
        space.validate();
        if (maps.size() != g.alphabet.size())
            throw ActionError("action does not cover the alphabet");
        const int n = space.size();
        for (std::size_t s = 0; s < maps.size(); ++s) {
            const auto& m = maps[s];
            std::vector<char> hit(n, 0);
            if (static_cast<int>(m.size()) != n)
                throw ActionError("map for symbol " + g.alphabet[s] +
                                  " has wrong size");
            for (int i = 0; i < n; ++i) {
                if (m[i] < 0 || m[i] >= n || hit[m[i]])
                    throw ActionError("map for symbol " + g.alphabet[s] +
                                      " is not a bijection");
                hit[m[i]] = 1;
            }
            for (int i = 0; i < n; ++i)
                if (space.weights[i] != space.weights[m[i]])
                    throw ActionError("measure not preserved by symbol " +
                                      g.alphabet[s] + " at point " +
                                      space.points[i]);
        }
    }
};

using Observable = std::vector<double>;
using ExactObservable = std::vector<Rational>;

/// Parses the action file format:
///   points <name> ...
///   weights <num>/<den> ...       (optional; default uniform)
///   map <symbol> <image> ...      (images listed in points order)
inline FiniteAction load_action(const std::string& text, const LabelledGraph& g) {
    FiniteAction act;
    std::vector<std::pair<std::string, std::vector<std::string>>> map_lines;

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool have_weights = false;
    auto fail = [&](const std::string& msg) {
        throw ActionError("line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        auto toks = detail::split_ws(line);
        if (toks.empty()) continue;
        if (toks[0] == "points") {
            if (!act.space.points.empty()) fail("duplicate points declaration");
            act.space.points.assign(toks.begin() + 1, toks.end());
        } else if (toks[0] == "weights") {
            if (have_weights) fail("duplicate weights declaration");
            have_weights = true;
            for (std::size_t i = 1; i < toks.size(); ++i) {
                try {
                    Rational w(toks[i]);
                    w.canonicalize();
                    act.space.weights.push_back(w);
                } catch (const std::invalid_argument&) {
                    fail("bad weight: " + toks[i]);
                }
            }
        } else if (toks[0] == "map") {
            if (toks.size() < 2) fail("map expects a symbol");
            map_lines.emplace_back(toks[1],
                                   std::vector<std::string>(toks.begin() + 2, toks.end()));
        } else {
            fail("unknown directive: " + toks[0]);
        }
    }
    if (act.space.points.empty()) throw ActionError("action file has no points");
    if (!have_weights) {
        int n = act.space.size();
        act.space.weights.assign(n, Rational(1, n));
    }
    auto point_index = [&](const std::string& name) {
        for (int i = 0; i < act.space.size(); ++i)
            if (act.space.points[i] == name) return i;
        throw ActionError("unknown point: " + name);
    };
    act.maps.resize(g.alphabet.size());
    std::vector<char> seen(g.alphabet.size(), 0);
    for (const auto& [sym, images] : map_lines) {
        int s = -1;
        for (std::size_t i = 0; i < g.alphabet.size(); ++i)
            if (g.alphabet[i] == sym) s = static_cast<int>(i);
        if (s < 0) throw ActionError("map symbol not in alphabet: " + sym);
        if (seen[s]) throw ActionError("duplicate map for symbol: " + sym);
        seen[s] = 1;
        if (images.size() != act.space.points.size())
            throw ActionError("map for symbol " + sym + " has wrong size");
        for (const auto& img : images) act.maps[s].push_back(point_index(img));
    }
    for (std::size_t s = 0; s < g.alphabet.size(); ++s)
        if (!seen[s]) throw ActionError("missing map for symbol: " + g.alphabet[s]);
    act.validate(g);
    return act;
}

/// Spherical averages s_n and their Cesaro means c_N. c[N-1] holds c_N
/// for N = 1..n_max.
template <typename Value>
struct AverageSeriesT {
    std::vector<std::vector<Value>> s;  // n = 0..n_max
    std::vector<std::vector<Value>> c;  // N = 1..n_max
    std::vector<char> empty_sphere;     // per n
};

using AverageSeries = AverageSeriesT<double>;
using ExactAverageSeries = AverageSeriesT<Rational>;

namespace detail {

inline double to_value(const Rational& r, double*) { return r.get_d(); }
inline Rational to_value(const Rational& r, Rational*) { return r; }

/// Dynamic programming over graph layers. State g_n(v) is the average of
/// phi over label words of the #L_{v0,v,n} paths into v (pre-normalized
/// by the exact path count, so magnitudes stay bounded by max |phi|).
/// Extending a path by a final arc e pre-composes with T_e:
///   f_{n+1}(w)(x) = sum_{e: v->w} f_n(v)(T_e(x)).
template <typename Value>
AverageSeriesT<Value> spherical_averages_impl(const FiniteAction& act,
                                              const LabelledGraph& g,
                                              const std::vector<Value>& phi,
                                              int n_max) {
    if (!g.start) throw ActionError("spherical_averages: graph has no start vertex");
    if (n_max < 1) throw ActionError("spherical_averages: n_max must be >= 1");
    act.validate(g);
    if (static_cast<int>(phi.size()) != act.space.size())
        throw ActionError("observable size mismatch");

    const int nv = g.vertex_count();
    const int nx = act.space.size();
    CountTable table = count_table(g, n_max);

    AverageSeriesT<Value> series;
    series.s.reserve(n_max + 1);
    series.empty_sphere.reserve(n_max + 1);

    std::vector<std::vector<Value>> layer(nv, std::vector<Value>(nx, Value(0)));
    layer[*g.start] = phi;

    std::vector<Value> cesaro(nx, Value(0));
    auto arcs_in = [&] {
        std::vector<std::vector<int>> in(nv);
        for (int i = 0; i < g.arc_count(); ++i) in[g.arcs[i].head].push_back(i);
        return in;
    }();

    for (int n = 0; n <= n_max; ++n) {
        const BigInt& sphere = table.spheres[n];
        std::vector<Value> s_n(nx, Value(0));
        if (sphere > 0) {
            for (int v = 0; v < nv; ++v) {
                const BigInt& cnt = table.pair_count(*g.start, v, n);
                if (cnt == 0) continue;
                Value w = to_value(make_ratio(cnt, sphere), static_cast<Value*>(nullptr));
                for (int x = 0; x < nx; ++x) s_n[x] += w * layer[v][x];
            }
        }
        series.empty_sphere.push_back(sphere == 0);
        series.s.push_back(s_n);
        if (n < n_max) {
            // c_{n+1} is the mean of s_0..s_n.
            for (int x = 0; x < nx; ++x) cesaro[x] += s_n[x];
            std::vector<Value> c_n(nx);
            Value inv = to_value(Rational(1, n + 1), static_cast<Value*>(nullptr));
            for (int x = 0; x < nx; ++x) c_n[x] = cesaro[x] * inv;
            series.c.push_back(std::move(c_n));
        }
        if (n == n_max) break;

        std::vector<std::vector<Value>> next(nv, std::vector<Value>(nx, Value(0)));
        for (int w = 0; w < nv; ++w) {
            const BigInt& cnt_w = table.pair_count(*g.start, w, n + 1);
            if (cnt_w == 0) continue;
            for (int e : arcs_in[w]) {
                const auto& arc = g.arcs[e];
                const BigInt& cnt_v = table.pair_count(*g.start, arc.tail, n);
                if (cnt_v == 0) continue;
                Value weight =
                    to_value(make_ratio(cnt_v, cnt_w), static_cast<Value*>(nullptr));
                const auto& map = act.maps[arc.label];
                const auto& src = layer[arc.tail];
                auto& dst = next[w];
                for (int x = 0; x < nx; ++x) dst[x] += weight * src[map[x]];
            }
        }
        layer = std::move(next);
    }
    return series;
}

}  // namespace detail

inline AverageSeries spherical_averages(const FiniteAction& act,
                                        const LabelledGraph& g,
                                        const Observable& phi, int n_max) {
    return detail::spherical_averages_impl<double>(act, g, phi, n_max);
}

/// Exact rational mode; used as correctness anchor by the tests.
inline ExactAverageSeries spherical_averages_exact(const FiniteAction& act,
                                                   const LabelledGraph& g,
                                                   const ExactObservable& phi,
                                                   int n_max) {
    return detail::spherical_averages_impl<Rational>(act, g, phi, n_max);
}

inline constexpr double kInfNorm = std::numeric_limits<double>::infinity();

inline double lp_norm(const FiniteSpace& space, const Observable& phi, double p) {
    if (p < 1) throw ActionError("lp_norm: p must be >= 1");
    if (static_cast<int>(phi.size()) != space.size())
        throw ActionError("lp_norm: size mismatch");
    if (std::isinf(p)) {
        double m = 0;
        for (double v : phi) m = std::max(m, std::abs(v));
        return m;
    }
    double sum = 0;
    for (int i = 0; i < space.size(); ++i)
        sum += std::pow(std::abs(phi[i]), p) * space.weights[i].get_d();
    return std::pow(sum, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct LadderEntry {
    long n_lo = 0, n_hi = 0;
    double difference = 0;   // ||c_{N_hi} - c_{N_lo}||_p
    double oscillation = 0;  // max_{N in [N_lo, N_hi]} max_x |c_N(x) - c_{N_lo}(x)|
};

struct ConvergenceReport {
    std::vector<LadderEntry> entries;
    bool monotone_decreasing = true;
};

/// Cauchy-decay diagnostic over a geometric ladder of Cesaro indices.
/// Asserts nothing about the limit value; the oscillation column is the
/// sup-norm (a.e.-convergence) analog.
inline ConvergenceReport convergence_report(const AverageSeries& series,
                                            const FiniteSpace& space, double p,
                                            double window_growth, long n0 = 8) {
    if (window_growth <= 1) throw ActionError("window_growth must be > 1");
    const long n_max = static_cast<long>(series.c.size());
    ConvergenceReport report;
    long lo = std::max<long>(1, n0);
    while (true) {
        long hi = static_cast<long>(std::ceil(window_growth * lo));
        if (hi <= lo) hi = lo + 1;
        if (hi > n_max) break;
        LadderEntry entry;
        entry.n_lo = lo;
        entry.n_hi = hi;
        const auto& base = series.c[lo - 1];
        Observable diff(space.size());
        for (int x = 0; x < space.size(); ++x)
            diff[x] = series.c[hi - 1][x] - base[x];
        entry.difference = lp_norm(space, diff, p);
        for (long n = lo; n <= hi; ++n)
            for (int x = 0; x < space.size(); ++x)
                entry.oscillation =
                    std::max(entry.oscillation, std::abs(series.c[n - 1][x] - base[x]));
        report.entries.push_back(entry);
        lo = hi;
    }
    if (report.entries.size() < 2)
        throw ActionError("convergence_report: insufficient data");
    for (std::size_t j = 1; j < report.entries.size(); ++j)
        if (report.entries[j].difference > report.entries[j - 1].difference)
            report.monotone_decreasing = false;
    return report;
}

struct ContractViolation {
    int n = 0;
    std::string what;
    double amount = 0;
};

struct ContractReport {
    std::vector<ContractViolation> violations;
    double max_norm_slack = 0;  // worst observed ||s_n(phi)||_p - ||phi||_p
    bool pass() const { return violations.empty(); }
};

/// Finite-space checks of the averaging-operator contract: constants are
/// fixed, positivity is preserved, and every L^p norm is contracted.
inline ContractReport operator_contract_check(const FiniteAction& act,
                                              const LabelledGraph& g, int n_max,
                                              int trials = 10,
                                              unsigned long seed = 0) {
    const double eps = 1e-12;
    ContractReport report;
    const int nx = act.space.size();
    auto record = [&](int n, const std::string& what, double amount) {
        report.violations.push_back({n, what, amount});
    };

    Observable ones(nx, 1.0);
    AverageSeries unit = spherical_averages(act, g, ones, n_max);
    for (int n = 0; n <= n_max; ++n) {
        if (unit.empty_sphere[n]) continue;
        for (int x = 0; x < nx; ++x)
            if (std::abs(unit.s[n][x] - 1.0) > eps)
                record(n, "s_n(1) != 1", std::abs(unit.s[n][x] - 1.0));
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int t = 0; t < trials; ++t) {
        Observable phi(nx), pos(nx);
        for (int x = 0; x < nx; ++x) {
            phi[x] = unif(rng);
            pos[x] = std::abs(unif(rng));
        }
        AverageSeries sp = spherical_averages(act, g, phi, n_max);
        AverageSeries sq = spherical_averages(act, g, pos, n_max);
        for (int n = 0; n <= n_max; ++n) {
            for (int x = 0; x < nx; ++x)
                if (sq.s[n][x] < -eps) record(n, "positivity violated", -sq.s[n][x]);
            for (double p : {1.0, 2.0, kInfNorm}) {
                double lhs = lp_norm(act.space, sp.s[n], p);
                double rhs = lp_norm(act.space, phi, p);
                report.max_norm_slack = std::max(report.max_norm_slack, lhs - rhs);
                if (lhs > rhs + eps)
                    record(n, "norm contraction violated", lhs - rhs);
            }
        }
    }
    return report;
}

/// max_g ||c_N(phi) o T_g - c_N(phi)||_1 over the generators: an
/// empirical probe of limit invariance, reported but never asserted.
inline double invariance_probe(const AverageSeries& series, const FiniteAction& act,
                               const LabelledGraph& g, long n_probe) {
    if (n_probe < 1 || n_probe > static_cast<long>(series.c.size()))
        throw ActionError("invariance_probe: N out of range");
    const auto& c = series.c[n_probe - 1];
    double worst = 0;
    for (std::size_t s = 0; s < g.alphabet.size(); ++s) {
        Observable diff(act.space.size());
        for (int x = 0; x < act.space.size(); ++x)
            diff[x] = c[act.maps[s][x]] - c[x];
        worst = std::max(worst, lp_norm(act.space, diff, 1.0));
    }
    return worst;
}

}  // namespace markov

#endif  // MARKOV_ACTION_HPP
