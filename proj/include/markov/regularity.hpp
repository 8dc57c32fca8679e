#ifndef MARKOV_REGULARITY_HPP
#define MARKOV_REGULARITY_HPP

#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "markov/counting.hpp"
#include "markov/graph.hpp"

namespace markov {

// ---------------------------------------------------------------------------
// Small exact-arithmetic helpers
// ---------------------------------------------------------------------------

inline Rational rational_pow(const Rational& x, long e) {
    if (e == 0) return Rational(1);
    bool invert = e < 0;
    unsigned long ue = static_cast<unsigned long>(invert ? -e : e);
    BigInt num, den;
    mpz_pow_ui(num.get_mpz_t(), x.get_num().get_mpz_t(), ue);
    mpz_pow_ui(den.get_mpz_t(), x.get_den().get_mpz_t(), ue);
    Rational r(num, den);
    r.canonicalize();
    if (invert) r = 1 / r;
    return r;
}

inline BigInt factorial(int n) {
    BigInt r;
    mpz_fac_ui(r.get_mpz_t(), static_cast<unsigned long>(n));
    return r;
}

/// B(m, n) for positive integer arguments: (m-1)! (n-1)! / (m+n-1)!.
inline Rational beta_exact(int m, int n) {
    Rational r(factorial(m - 1) * factorial(n - 1), factorial(m + n - 1));
    r.canonicalize();
    return r;
}

/// log of a positive big integer, stable for values far beyond double range.
inline double log_bigint(const BigInt& x) {
    signed long e = 0;
    double d = mpz_get_d_2exp(&e, x.get_mpz_t());
    return std::log(d) + static_cast<double>(e) * std::numbers::ln2_v<double>;
}

/// Nearest rational with denominator <= max_den within eps of x, found by
/// continued-fraction convergents; falls back to the exact binary value
/// of the double. Used to recover exact constants (Perron roots and
/// coefficients of integer matrices are very often small rationals).
inline Rational snap_to_rational(double x, double eps, long max_den = 1000000) {
    if (!std::isfinite(x)) throw GraphError("snap_to_rational: non-finite value");
    double sign = x < 0 ? -1.0 : 1.0;
    double t = std::abs(x);
    long h1 = 1, h2 = 0, k1 = 0, k2 = 1;
    for (int iter = 0; iter < 64; ++iter) {
        double fl = std::floor(t);
        if (fl > 9e17) break;
        long ai = static_cast<long>(fl);
        if (k2 != 0 && ai > (9e17 + k1) / k2) break;
        long h = ai * h1 + h2;
        long k = ai * k1 + k2;
        if (k > max_den || k < 0) break;
        if (k > 0 && std::abs(static_cast<double>(h) / k - std::abs(x)) <= eps) {
            Rational r(h, k);
            r.canonicalize();
            return sign * r;
        }
        h2 = h1; h1 = h; k2 = k1; k1 = k;
        double frac = t - fl;
        if (frac < 1e-15) break;
        t = 1.0 / frac;
    }
    return Rational(x);
}

// ---------------------------------------------------------------------------
// Exact term oracles
// ---------------------------------------------------------------------------

/// Memoizing wrapper around an exact nonnegative sequence n -> Q.
class TermOracle {
  public:
    TermOracle() = default;
    explicit TermOracle(std::function<Rational(long)> fn)
        : fn_(std::move(fn)),
          cache_(std::make_shared<std::vector<std::optional<Rational>>>()) {}

    Rational operator()(long n) const {
        if (n < 0) return Rational(0);
        auto& cache = *cache_;
        if (static_cast<std::size_t>(n) < cache.size() && cache[n]) return *cache[n];
        Rational v = fn_(n);
        if (static_cast<std::size_t>(n) >= cache.size() && n < (1 << 20))
            cache.resize(n + 1);
        if (static_cast<std::size_t>(n) < cache.size()) cache[n] = v;
        return v;
    }

    explicit operator bool() const { return static_cast<bool>(fn_); }

  private:
    std::function<Rational(long)> fn_;
    std::shared_ptr<std::vector<std::optional<Rational>>> cache_;
};

/// Lazily extended powers of a count matrix; shared between the term
/// oracles of all vertex pairs of one subgraph.
class IncrementalCounts {
  public:
    explicit IncrementalCounts(const LabelledGraph& g)
        : base_(count_matrix(g)) {
        powers_.push_back(CountMatrix::identity(base_.dim));
    }

    const BigInt& get(int u, int v, long n) {
        while (static_cast<long>(powers_.size()) <= n)
            powers_.push_back(powers_.back() * base_);
        return powers_[n].at(u, v);
    }

  private:
    CountMatrix base_;
    std::deque<CountMatrix> powers_;
};

// ---------------------------------------------------------------------------
// Regular-sequence descriptors
// ---------------------------------------------------------------------------

/// Per-residue classification of a regular sequence. Asymptotic classes
/// use the absolute-index convention: x_n / (a n^b c^n) -> 1 along the
/// residue.
struct ResidueClass {
    enum class Kind { EventuallyZero, Asymptotic };

    Kind kind = Kind::EventuallyZero;
    long horizon = -1;  // EventuallyZero: x_n = 0 for n > horizon on this residue
    Rational a = 0;     // Asymptotic only; a > 0
    int b = 0;          // Asymptotic only; b >= 0
    Rational c = 0;     // Asymptotic only; c >= 1
    bool tolerance_resolved = false;  // radii compared only up to a band

    static ResidueClass eventually_zero(long horizon) {
        ResidueClass r;
        r.kind = Kind::EventuallyZero;
        r.horizon = horizon;
        return r;
    }
    static ResidueClass asymptotic(Rational a, int b, Rational c) {
        ResidueClass r;
        r.kind = Kind::Asymptotic;
        r.a = std::move(a);
        r.b = b;
        r.c = std::move(c);
        return r;
    }
    bool is_zero() const { return kind == Kind::EventuallyZero; }
};

struct RegularDescriptor {
    long q = 1;
    std::vector<ResidueClass> classes;  // size q, index r = n mod q
    TermOracle terms;                   // exact sequence
    std::function<double(long)> tail_bound;

    const ResidueClass& class_of(long n) const { return classes[n % q]; }

    bool tolerance_resolved() const {
        for (const auto& c : classes)
            if (c.tolerance_resolved) return true;
        return false;
    }
};

namespace detail {

inline void attach_tail_bound(RegularDescriptor& d) {
    long q = d.q;
    auto classes = d.classes;
    TermOracle terms = d.terms;
    d.tail_bound = [q, classes, terms](long n) -> double {
        if (n < 0) return 0.0;
        const ResidueClass& cls = classes[n % q];
        if (cls.kind == ResidueClass::Kind::EventuallyZero)
            return n > cls.horizon ? 0.0 : terms(n).get_d();
        return 2.0 * cls.a.get_d() * std::pow(static_cast<double>(n + 1), cls.b) *
               std::pow(cls.c.get_d(), static_cast<double>(n));
    };
}

}  // namespace detail

inline RegularDescriptor zero_descriptor() {
    RegularDescriptor d;
    d.q = 1;
    d.classes = {ResidueClass::eventually_zero(-1)};
    d.terms = TermOracle([](long) { return Rational(0); });
    detail::attach_tail_bound(d);
    return d;
}

/// The convolution identity delta_0 = 1, 0, 0, ...
inline RegularDescriptor delta_descriptor(Rational value = 1) {
    RegularDescriptor d;
    d.q = 1;
    d.classes = {ResidueClass::eventually_zero(0)};
    d.terms = TermOracle([value](long n) { return n == 0 ? value : Rational(0); });
    detail::attach_tail_bound(d);
    return d;
}

// ---------------------------------------------------------------------------
// SCC period and Perron data
// ---------------------------------------------------------------------------

namespace detail {

/// BFS levels from source inside a graph; -1 for unreachable.
inline std::vector<int> bfs_levels(const LabelledGraph& g, int source) {
    std::vector<int> lvl(g.vertex_count(), -1);
    auto out = g.out_arcs();
    std::deque<int> queue{source};
    lvl[source] = 0;
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (int e : out[v]) {
            int w = g.arcs[e].head;
            if (lvl[w] == -1) {
                lvl[w] = lvl[v] + 1;
                queue.push_back(w);
            }
        }
    }
    return lvl;
}

}  // namespace detail

/// gcd of all cycle lengths of a strongly connected component, computed
/// from BFS level differences.
inline int scc_period(const LabelledGraph& g, const std::vector<int>& component) {
    std::vector<char> in(g.vertex_count(), 0);
    for (int v : component) in[v] = 1;
    bool has_arc = false;
    for (const auto& a : g.arcs)
        if (in[a.tail] && in[a.head]) has_arc = true;
    if (!has_arc) throw GraphError("scc_period: component has no arcs");

    std::vector<int> map_old;
    LabelledGraph sub = induced_subgraph(g, component, &map_old);
    auto lvl = detail::bfs_levels(sub, 0);
    long period = 0;
    for (const auto& a : sub.arcs)
        period = std::gcd(period, static_cast<long>(std::abs(lvl[a.tail] + 1 - lvl[a.head])));
    return period == 0 ? 1 : static_cast<int>(period);
}

struct AnalyzeOptions {
    double tol = 1e-10;             // eigenvalue + series truncation tolerance
    int coeff_window = 400;         // largest n used for coefficient estimates
    long power_iteration_cap = 100000;
    double radius_band = 1e-6;      // relative band treating two radii as equal
    double snap_eps = 1e-7;         // tolerance for rational snapping
    long series_cap = 200000;       // iteration cap for convolution series
};

struct PerronData {
    struct PairCoeff {
        int residue = 0;   // path lengths u -> v are = residue (mod period)
        Rational a = 0;    // count(n) / (a c^n) -> 1 along the residue
    };

    int period = 1;
    double spectral_radius = 1.0;
    Rational radius = 1;  // snapped exact form of spectral_radius
    int dim = 0;
    std::vector<PairCoeff> coeffs;  // dim*dim, local indices of the component

    const PairCoeff& coeff(int u, int v) const { return coeffs[u * dim + v]; }
};

/// Spectral radius and per-pair growth coefficients of one strongly
/// connected component. The component matrix is nonnegative and
/// irreducible, so power iteration on N^q converges to c^q from a
/// positive start vector.
inline PerronData perron_analyze(const LabelledGraph& g,
                                 const std::vector<int>& component,
                                 const AnalyzeOptions& opts = {}) {
    std::vector<int> map_old;
    LabelledGraph sub = induced_subgraph(g, component, &map_old);
    if (sub.arc_count() == 0) throw GraphError("perron_analyze: component has no arcs");

    PerronData pd;
    pd.dim = sub.vertex_count();
    std::vector<int> local_all(pd.dim);
    for (int i = 0; i < pd.dim; ++i) local_all[i] = i;
    pd.period = scc_period(sub, local_all);
    const int q = pd.period;

    // Power iteration on A^q.
    const int n = pd.dim;
    std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
    for (const auto& arc : sub.arcs) a[arc.tail * n + arc.head] += 1.0;
    auto matvec = [&](const std::vector<double>& m, std::vector<double>& x) {
        std::vector<double> y(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) y[j] += x[i] * m[i * n + j];
        x = std::move(y);
    };
    std::vector<double> x(n, 1.0);
    double lambda = 0.0, prev = -1.0;
    long iters = 0;
    int stable = 0;
    while (stable < 3) {
        if (++iters > opts.power_iteration_cap)
            throw GraphError("perron_analyze: power iteration did not converge");
        double before = 0.0;
        for (double v : x) before += v;
        for (int rep = 0; rep < q; ++rep) matvec(a, x);
        double after = 0.0;
        for (double v : x) after += v;
        lambda = after / before;
        double scale = 1.0 / after;
        for (double& v : x) v *= scale;
        if (prev > 0 && std::abs(lambda - prev) <= opts.tol * std::abs(lambda))
            ++stable;
        else
            stable = 0;
        prev = lambda;
    }
    pd.spectral_radius = std::pow(lambda, 1.0 / q);
    pd.radius = snap_to_rational(pd.spectral_radius,
                                 opts.snap_eps * std::max(1.0, pd.spectral_radius));
    if (pd.radius < 1) pd.radius = Rational(pd.spectral_radius);

    // Per-pair coefficients from exact counts along the admissible residue.
    auto lvl = detail::bfs_levels(sub, 0);
    CountTable table = count_table(sub, opts.coeff_window);
    double logc = std::log(pd.radius.get_d());
    pd.coeffs.resize(static_cast<std::size_t>(n) * n);
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) {
            auto dlvl = detail::bfs_levels(sub, u);
            int residue = ((lvl[v] - lvl[u]) % q + q) % q;
            if (dlvl[v] >= 0) residue = dlvl[v] % q;
            double mean = 0.0;
            int used = 0;
            long nn = opts.coeff_window - (opts.coeff_window - residue) % q;
            for (; used < 10 && nn >= 0; nn -= q) {
                const BigInt& cnt = table.pair_count(u, v, static_cast<int>(nn));
                if (cnt == 0) continue;
                mean += std::exp(log_bigint(cnt) - nn * logc);
                ++used;
            }
            PerronData::PairCoeff pc;
            pc.residue = residue;
            if (used > 0) {
                mean /= used;
                pc.a = snap_to_rational(mean, opts.snap_eps * std::max(1.0, mean));
                if (pc.a <= 0) pc.a = Rational(mean);
            }
            pd.coeffs[u * n + v] = pc;
        }
    return pd;
}

inline PerronData perron_analyze(const LabelledGraph& g,
                                 const std::vector<int>& component, double tol) {
    AnalyzeOptions opts;
    opts.tol = tol;
    return perron_analyze(g, component, opts);
}

// ---------------------------------------------------------------------------
// Descriptor algebra (shift, scale, sum, convolution)
// ---------------------------------------------------------------------------

inline RegularDescriptor descriptor_shift(const RegularDescriptor& f, long m) {
    RegularDescriptor h;
    h.q = f.q;
    h.classes.resize(h.q);
    for (long r = 0; r < h.q; ++r) {
        long src = ((r + m) % h.q + h.q) % h.q;
        ResidueClass cls = f.classes[src];
        if (cls.kind == ResidueClass::Kind::Asymptotic)
            cls.a = cls.a * rational_pow(cls.c, m);
        else
            cls.horizon = cls.horizon - m;
        h.classes[r] = std::move(cls);
    }
    TermOracle inner = f.terms;
    h.terms = TermOracle([inner, m](long n) { return inner(n + m); });
    detail::attach_tail_bound(h);
    return h;
}

inline RegularDescriptor descriptor_scale(const RegularDescriptor& f,
                                          const Rational& factor) {
    if (factor < 0) throw GraphError("descriptor_scale: negative factor");
    if (factor == 0) return zero_descriptor();
    RegularDescriptor h = f;
    for (auto& cls : h.classes)
        if (cls.kind == ResidueClass::Kind::Asymptotic) cls.a = cls.a * factor;
    TermOracle inner = f.terms;
    // Force a materialized Rational: the deduced gmpxx expression template
    // would dangle once the lambda returns.
    h.terms = TermOracle([inner, factor](long n) { return Rational(inner(n) * factor); });
    detail::attach_tail_bound(h);
    return h;
}

namespace detail {

/// Dominance rule for the sum of two residue classes (common period
/// assumed): larger c wins, then larger b; full ties add coefficients.
inline ResidueClass combine_sum(const ResidueClass& f, const ResidueClass& g,
                                double radius_band) {
    using Kind = ResidueClass::Kind;
    if (f.kind == Kind::EventuallyZero && g.kind == Kind::EventuallyZero)
        return ResidueClass::eventually_zero(std::max(f.horizon, g.horizon));
    if (f.kind == Kind::EventuallyZero) return g;
    if (g.kind == Kind::EventuallyZero) return f;

    double cf = f.c.get_d(), cg = g.c.get_d();
    bool exact_equal = f.c == g.c;
    bool band_equal =
        exact_equal || std::abs(cf - cg) <= radius_band * std::max(cf, cg);
    if (band_equal) {
        ResidueClass r;
        if (f.b != g.b) {
            r = f.b > g.b ? f : g;
        } else {
            r = ResidueClass::asymptotic(f.a + g.a, f.b, f.c >= g.c ? f.c : g.c);
        }
        r.tolerance_resolved = f.tolerance_resolved || g.tolerance_resolved ||
                               !exact_equal;
        return r;
    }
    ResidueClass r = cf > cg ? f : g;
    r.tolerance_resolved = f.tolerance_resolved || g.tolerance_resolved;
    return r;
}

}  // namespace detail

inline RegularDescriptor descriptor_sum(const RegularDescriptor& f,
                                        const RegularDescriptor& g,
                                        double radius_band = 1e-6) {
    RegularDescriptor h;
    h.q = std::lcm(f.q, g.q);
    h.classes.resize(h.q);
    for (long r = 0; r < h.q; ++r)
        h.classes[r] =
            detail::combine_sum(f.classes[r % f.q], g.classes[r % g.q], radius_band);
    TermOracle tf = f.terms, tg = g.terms;
    h.terms = TermOracle([tf, tg](long n) { return Rational(tf(n) + tg(n)); });
    detail::attach_tail_bound(h);
    return h;
}

namespace detail {

/// sum_{m = residue (mod q)} terms(m) * big^{-m}, truncated once a
/// geometric tail estimate drops below tol relative to the partial sum.
/// finite_horizon >= 0 restricts to m <= finite_horizon (exact sum).
inline Rational dominated_series(const TermOracle& terms, long residue, long q,
                                 const Rational& big, const ResidueClass& small_cls,
                                 long finite_horizon, const AnalyzeOptions& opts) {
    Rational sum = 0;
    Rational w = rational_pow(big, -residue);
    Rational step = rational_pow(big, -q);
    if (finite_horizon >= 0) {
        for (long m = residue; m <= finite_horizon; m += q, w *= step)
            sum += terms(m) * w;
        return sum;
    }
    double ratio_base = small_cls.c.get_d() / big.get_d();
    long m_min = residue + q * std::max<long>(10, 4L * (small_cls.b + 1));
    for (long m = residue;; m += q, w *= step) {
        if (m > opts.series_cap)
            throw GraphError(
                "descriptor_convolve: series truncation failed to certify "
                "(spectral radii too close)");
        Rational term = terms(m) * w;
        sum += term;
        if (m < m_min) continue;
        double rho = std::pow(ratio_base, static_cast<double>(q)) *
                     std::pow(1.0 + static_cast<double>(q) / m, small_cls.b);
        if (rho >= 1.0 - 1e-12)
            throw GraphError(
                "descriptor_convolve: series truncation failed to certify "
                "(spectral radii too close)");
        double tail = term.get_d() * rho / (1.0 - rho);
        double base = std::max(sum.get_d(), 1e-300);
        if (tail <= opts.tol * base) break;
    }
    return sum;
}

/// Asymptotic class of sum_{k+m=n, k=r' (q), m=r'' (q)} F_k G_m for the
/// target residue r = r' + r'' (mod q).
inline ResidueClass conv_pair(const RegularDescriptor& f, long rf,
                              const RegularDescriptor& g, long rg, long q,
                              const AnalyzeOptions& opts) {
    using Kind = ResidueClass::Kind;
    const ResidueClass& fc = f.classes[rf % f.q];
    const ResidueClass& gc = g.classes[rg % g.q];

    if (fc.is_zero() && gc.is_zero()) {
        if (fc.horizon < 0 || gc.horizon < 0) return ResidueClass::eventually_zero(-1);
        return ResidueClass::eventually_zero(fc.horizon + gc.horizon);
    }
    auto dominated = [&](const RegularDescriptor& bigd, const ResidueClass& bigc,
                         const RegularDescriptor& smalld, const ResidueClass& smallc,
                         long r_small, bool flag) {
        long horizon = smallc.is_zero() ? smallc.horizon : -1;
        if (smallc.is_zero() && horizon < 0) return ResidueClass::eventually_zero(-1);
        Rational series = detail::dominated_series(smalld.terms, r_small, q, bigc.c,
                                                   smallc, horizon, opts);
        if (series == 0) return ResidueClass::eventually_zero(-1);
        Rational a = bigc.a * series;
        if (!smallc.is_zero())
            a = snap_to_rational(a.get_d(),
                                 std::max(opts.snap_eps, 10 * opts.tol) *
                                     std::max(1.0, std::abs(a.get_d())));
        ResidueClass r = ResidueClass::asymptotic(a, bigc.b, bigc.c);
        r.tolerance_resolved =
            flag || bigc.tolerance_resolved || smallc.tolerance_resolved;
        return r;
    };

    if (!fc.is_zero() && gc.is_zero()) return dominated(f, fc, g, gc, rg, false);
    if (fc.is_zero() && !gc.is_zero()) return dominated(g, gc, f, fc, rf, false);

    double cf = fc.c.get_d(), cg = gc.c.get_d();
    bool exact_equal = fc.c == gc.c;
    bool band_equal =
        exact_equal || std::abs(cf - cg) <= opts.radius_band * std::max(cf, cg);
    if (band_equal) {
        Rational c = fc.c >= gc.c ? fc.c : gc.c;
        Rational a = fc.a * gc.a * beta_exact(fc.b + 1, gc.b + 1) / Rational(q);
        ResidueClass r = ResidueClass::asymptotic(a, fc.b + gc.b + 1, c);
        r.tolerance_resolved = fc.tolerance_resolved || gc.tolerance_resolved ||
                               !exact_equal;
        return r;
    }
    if (cf > cg) return dominated(f, fc, g, gc, rg, false);
    return dominated(g, gc, f, fc, rf, false);
}

}  // namespace detail

/// Cauchy convolution H_n = sum_{k+m=n} F_k G_m, classified per the
/// three-way case split on the dominant spectral radius after residue
/// decomposition at the common period.
inline RegularDescriptor descriptor_convolve(const RegularDescriptor& f,
                                             const RegularDescriptor& g,
                                             const AnalyzeOptions& opts = {}) {
    if (!f.terms || !g.terms)
        throw GraphError("descriptor_convolve: missing term oracle");
    RegularDescriptor h;
    h.q = std::lcm(f.q, g.q);
    h.classes.resize(h.q);
    for (long r = 0; r < h.q; ++r) {
        ResidueClass acc = ResidueClass::eventually_zero(-1);
        for (long rf = 0; rf < h.q; ++rf) {
            long rg = ((r - rf) % h.q + h.q) % h.q;
            ResidueClass part = detail::conv_pair(f, rf, g, rg, h.q, opts);
            acc = detail::combine_sum(acc, part, opts.radius_band);
        }
        h.classes[r] = std::move(acc);
    }
    TermOracle tf = f.terms, tg = g.terms;
    h.terms = TermOracle([tf, tg](long n) {
        Rational s = 0;
        for (long k = 0; k <= n; ++k) s += tf(k) * tg(n - k);
        return s;
    });
    detail::attach_tail_bound(h);
    return h;
}

inline RegularDescriptor descriptor_convolve(const RegularDescriptor& f,
                                             const RegularDescriptor& g,
                                             double tol) {
    AnalyzeOptions opts;
    opts.tol = tol;
    return descriptor_convolve(f, g, opts);
}

// ---------------------------------------------------------------------------
// Classification of path-count sequences via recursive SCC splitting
// ---------------------------------------------------------------------------

namespace detail {

class DescriptorAnalyzer {
  public:
    DescriptorAnalyzer(const LabelledGraph& g, AnalyzeOptions opts)
        : g_(g), opts_(opts) {}

    RegularDescriptor pair(int u, int v) {
        std::vector<int> all(g_.vertex_count());
        for (int i = 0; i < g_.vertex_count(); ++i) all[i] = i;
        return analyze(all, u, v);
    }

  private:
    RegularDescriptor analyze(const std::vector<int>& subset, int u, int v) {
        std::string key = subset_key(subset, u, v);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        RegularDescriptor d = analyze_impl(subset, u, v);
        memo_.emplace(std::move(key), d);
        return d;
    }

    RegularDescriptor analyze_impl(const std::vector<int>& subset, int u, int v) {
        std::vector<int> map_old;
        LabelledGraph sub = induced_subgraph(g_, subset, &map_old);
        std::vector<int> local(g_.vertex_count(), -1);
        for (int i = 0; i < static_cast<int>(map_old.size()); ++i)
            local[map_old[i]] = i;
        int lu = local[u], lv = local[v];

        Condensation cond = strongly_connected_components(sub);
        if (cond.components.size() == 1) return base_case(subset, sub, lu, lv);

        int cu = cond.component_of[lu], cv = cond.component_of[lv];
        // Split at the source component: V1 = components[0], V2 = rest.
        std::vector<int> v1, v2;
        for (int x : cond.components[0]) v1.push_back(map_old[x]);
        for (std::size_t c = 1; c < cond.components.size(); ++c)
            for (int x : cond.components[c]) v2.push_back(map_old[x]);

        bool u_in_1 = cu == 0, v_in_1 = cv == 0;
        if (u_in_1 && v_in_1) return analyze(v1, u, v);
        if (!u_in_1 && !v_in_1) return analyze(v2, u, v);
        if (!u_in_1 && v_in_1) return zero_descriptor();

        // u in V1, v in V2: cut convolution over crossing arcs.
        std::vector<char> in1(g_.vertex_count(), 0);
        for (int x : v1) in1[x] = 1;
        std::map<std::pair<int, int>, long> cross;
        for (const auto& a : sub.arcs) {
            int at = map_old[a.tail], ah = map_old[a.head];
            if (in1[at] && !in1[ah]) ++cross[{at, ah}];
        }
        RegularDescriptor acc = zero_descriptor();
        for (const auto& [pair_uv, count] : cross) {
            auto [up, vp] = pair_uv;
            RegularDescriptor left = analyze(v1, u, up);
            RegularDescriptor right = analyze(v2, vp, v);
            RegularDescriptor part = descriptor_convolve(left, right, opts_);
            part = descriptor_scale(part, Rational(count));
            part = descriptor_shift(part, -1);
            acc = descriptor_sum(acc, part, opts_.radius_band);
        }
        return acc;
    }

    RegularDescriptor base_case(const std::vector<int>& subset,
                                const LabelledGraph& sub, int lu, int lv) {
        auto counts = shared_counts(subset, sub);
        if (sub.arc_count() == 0) {
            // Single vertex without a loop: paths exist only at n = 0.
            RegularDescriptor d;
            d.q = 1;
            d.classes = {ResidueClass::eventually_zero(0)};
            bool diag = lu == lv;
            d.terms = TermOracle(
                [diag](long n) { return Rational(diag && n == 0 ? 1 : 0); });
            attach_tail_bound(d);
            return d;
        }
        const PerronData& pd = shared_perron(subset, sub);
        RegularDescriptor d;
        d.q = pd.period;
        d.classes.assign(d.q, ResidueClass::eventually_zero(0));
        const auto& pc = pd.coeff(lu, lv);
        d.classes[pc.residue] = ResidueClass::asymptotic(pc.a, 0, pd.radius);
        d.terms = TermOracle([counts, lu, lv](long n) {
            return Rational(counts->get(lu, lv, n));
        });
        attach_tail_bound(d);
        return d;
    }

    std::shared_ptr<IncrementalCounts> shared_counts(const std::vector<int>& subset,
                                                     const LabelledGraph& sub) {
        std::string key = subset_key(subset, -1, -1);
        auto it = counts_.find(key);
        if (it == counts_.end())
            it = counts_.emplace(key, std::make_shared<IncrementalCounts>(sub)).first;
        return it->second;
    }

    const PerronData& shared_perron(const std::vector<int>& subset,
                                    const LabelledGraph& sub) {
        std::string key = subset_key(subset, -1, -1);
        auto it = perron_.find(key);
        if (it == perron_.end()) {
            std::vector<int> all(sub.vertex_count());
            for (int i = 0; i < sub.vertex_count(); ++i) all[i] = i;
            it = perron_.emplace(key, perron_analyze(sub, all, opts_)).first;
        }
        return it->second;
    }

    static std::string subset_key(const std::vector<int>& subset, int u, int v) {
        std::ostringstream out;
        for (int x : subset) out << x << ',';
        out << '|' << u << '|' << v;
        return out.str();
    }

    const LabelledGraph& g_;
    AnalyzeOptions opts_;
    std::map<std::string, RegularDescriptor> memo_;
    std::map<std::string, std::shared_ptr<IncrementalCounts>> counts_;
    std::map<std::string, PerronData> perron_;
};

}  // namespace detail

/// Classifies n -> #L_{u,v,n} by recursive condensation: Perron data on
/// strongly connected blocks, cut convolutions across splits.
inline RegularDescriptor descriptor_of_pair(const LabelledGraph& g, int u, int v,
                                            const AnalyzeOptions& opts = {}) {
    detail::DescriptorAnalyzer analyzer(g, opts);
    return analyzer.pair(u, v);
}

/// Classifies the sphere sizes n -> #S(n) = sum_v #L_{v0,v,n}.
inline RegularDescriptor descriptor_of_spheres(const LabelledGraph& g,
                                               const AnalyzeOptions& opts = {}) {
    if (!g.start) throw GraphError("descriptor_of_spheres: graph has no start vertex");
    detail::DescriptorAnalyzer analyzer(g, opts);
    RegularDescriptor acc = zero_descriptor();
    for (int v = 0; v < g.vertex_count(); ++v)
        acc = descriptor_sum(acc, analyzer.pair(*g.start, v), opts.radius_band);
    return acc;
}

// ---------------------------------------------------------------------------
// Validation against the exact sequence
// ---------------------------------------------------------------------------

struct ClassReport {
    long residue = 0;
    ResidueClass::Kind kind = ResidueClass::Kind::EventuallyZero;
    double a = 0, c = 0;
    int b = 0;
    double max_deviation = 0;
    bool pass = true;
    bool tolerance_resolved = false;
};

struct ValidationReport {
    std::vector<ClassReport> rows;
    long n_lo = 0, n_hi = 0;
    double tol = 0;
    bool pass = true;
};

/// Measures max |terms(n)/(a n^b c^n) - 1| per Asymptotic class over the
/// window (exact rational arithmetic against the stored constants), and
/// confirms vanishing beyond the horizon for EventuallyZero classes.
inline ValidationReport validate_descriptor(const RegularDescriptor& d, long n_lo,
                                            long n_hi, double tol) {
    if (n_lo > n_hi) throw GraphError("validate_descriptor: empty window");
    ValidationReport report;
    report.n_lo = n_lo;
    report.n_hi = n_hi;
    report.tol = tol;
    for (long r = 0; r < d.q; ++r) {
        const ResidueClass& cls = d.classes[r];
        ClassReport row;
        row.residue = r;
        row.kind = cls.kind;
        row.tolerance_resolved = cls.tolerance_resolved;
        if (cls.kind == ResidueClass::Kind::EventuallyZero) {
            for (long n = n_lo; n <= n_hi; ++n) {
                if (n % d.q != r || n <= cls.horizon) continue;
                if (d.terms(n) != 0) {
                    row.pass = false;
                    row.max_deviation = 1.0;
                    break;
                }
            }
        } else {
            row.a = cls.a.get_d();
            row.b = cls.b;
            row.c = cls.c.get_d();
            Rational worst = 0;
            for (long n = n_lo; n <= n_hi; ++n) {
                if (n % d.q != r) continue;
                if (n == 0 && cls.b > 0) continue;
                BigInt npow;
                mpz_ui_pow_ui(npow.get_mpz_t(), static_cast<unsigned long>(n),
                              static_cast<unsigned long>(cls.b));
                Rational denom = cls.a * Rational(npow) * rational_pow(cls.c, n);
                Rational dev = d.terms(n) / denom - 1;
                if (dev < 0) dev = -dev;
                if (dev > worst) worst = dev;
            }
            row.max_deviation = worst.get_d();
            row.pass = row.max_deviation <= tol;
        }
        report.pass = report.pass && row.pass;
        report.rows.push_back(row);
    }
    return report;
}

/// CSV rows: residue, kind, a, b, c, max_deviation, window.
inline std::string validation_csv(const ValidationReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << "residue,kind,a,b,c,max_deviation,window,warning\n";
    for (const auto& row : report.rows) {
        out << row.residue << ','
            << (row.kind == ResidueClass::Kind::EventuallyZero ? "eventually_zero"
                                                               : "asymptotic")
            << ',' << row.a << ',' << row.b << ',' << row.c << ','
            << row.max_deviation << ',' << report.n_lo << '-' << report.n_hi << ','
            << (row.tolerance_resolved ? "tolerance_resolved" : "") << '\n';
    }
    return out.str();
}

}  // namespace markov

#endif  // MARKOV_REGULARITY_HPP
