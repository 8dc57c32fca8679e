#include <doctest.h>

#include <numeric>

#include "markov/codings.hpp"
#include "markov/counting.hpp"
#include "markov/graph.hpp"
#include "markov/regularity.hpp"
#include "test_util.hpp"

using namespace markov;

namespace {

RegularDescriptor make_desc(long q, std::vector<ResidueClass> classes,
                            std::function<Rational(long)> terms) {
    RegularDescriptor d;
    d.q = q;
    d.classes = std::move(classes);
    d.terms = TermOracle(std::move(terms));
    return d;
}

/// 1, c, c^2, ... with its exact class.
RegularDescriptor geometric(long c) {
    return make_desc(1, {ResidueClass::asymptotic(1, 0, Rational(c))},
                     [c](long n) { return rational_pow(Rational(c), n); });
}

/// The constant sequence 1, 1, 1, ...
RegularDescriptor ones() {
    return make_desc(1, {ResidueClass::asymptotic(1, 0, 1)},
                     [](long) { return Rational(1); });
}

/// 1, 0, 1, 0, ... (period 2).
RegularDescriptor alternating() {
    return make_desc(2,
                     {ResidueClass::asymptotic(1, 0, 1), ResidueClass::eventually_zero(-1)},
                     [](long n) { return Rational(n % 2 == 0 ? 1 : 0); });
}

/// gcd of simple cycle lengths through the induced subgraph; equals the
/// gcd over all cycles, hence the period of a strongly connected block.
long cycle_gcd_oracle(const LabelledGraph& g, const std::vector<int>& component) {
    LabelledGraph sub = induced_subgraph(g, component);
    auto out = sub.out_arcs();
    long gcd = 0;
    for (int root = 0; root < sub.vertex_count(); ++root) {
        std::vector<char> used(sub.vertex_count(), 0);
        std::function<void(int, int)> dfs = [&](int v, int len) {
            used[v] = 1;
            for (int e : out[v]) {
                int w = sub.arcs[e].head;
                if (w == root)
                    gcd = std::gcd(gcd, static_cast<long>(len + 1));
                else if (!used[w])
                    dfs(w, len + 1);
            }
            used[v] = 0;
        };
        dfs(root, 0);
    }
    return gcd;
}

}  // namespace

TEST_CASE("rational_pow handles negative exponents exactly") {
    CHECK(rational_pow(Rational(2, 3), 3) == Rational(8, 27));
    CHECK(rational_pow(Rational(2, 3), -2) == Rational(9, 4));
    CHECK(rational_pow(Rational(7), 0) == 1);
}

TEST_CASE("beta_exact: closed form against the binomial identity") {
    // B(m, n) = 1 / ((m+n-1) * C(m+n-2, m-1)).
    for (int m = 1; m <= 10; ++m)
        for (int n = 1; n <= 10; ++n) {
            BigInt binom;
            mpz_bin_uiui(binom.get_mpz_t(), static_cast<unsigned long>(m + n - 2),
                         static_cast<unsigned long>(m - 1));
            CHECK(beta_exact(m, n) == make_ratio(1, (m + n - 1) * binom));
        }
    // Pascal-type recurrence B(m, n) = B(m+1, n) + B(m, n+1).
    for (int m = 1; m <= 9; ++m)
        for (int n = 1; n <= 9; ++n)
            CHECK(beta_exact(m, n) == beta_exact(m + 1, n) + beta_exact(m, n + 1));
    CHECK(beta_exact(1, 1) == 1);
    CHECK(beta_exact(2, 1) == Rational(1, 2));
    CHECK(beta_exact(2, 2) == Rational(1, 6));
}

TEST_CASE("log_bigint is accurate far beyond double range") {
    BigInt big = 1;
    mpz_ui_pow_ui(big.get_mpz_t(), 3, 5000);
    CHECK(log_bigint(big) == doctest::Approx(5000.0 * std::log(3.0)).epsilon(1e-12));
    CHECK(log_bigint(BigInt(1)) == doctest::Approx(0.0));
}

TEST_CASE("snap_to_rational recovers small rationals and rejects wild ones") {
    CHECK(snap_to_rational(1.0 / 3.0, 1e-9) == Rational(1, 3));
    CHECK(snap_to_rational(0.75, 1e-9) == Rational(3, 4));
    CHECK(snap_to_rational(-4.0 / 3.0, 1e-9) == Rational(-4, 3));
    CHECK(snap_to_rational(3.0, 1e-9) == 3);
    // With an impossible tolerance the exact binary double is kept.
    double pi = 3.14159265358979323846;
    CHECK(snap_to_rational(pi, 1e-18) == Rational(pi));
}

TEST_CASE("scc_period: small explicit cases") {
    LabelledGraph loop = parse_graph("alphabet a\nvertex q\nedge q q a\n");
    CHECK(scc_period(loop, {0}) == 1);
    LabelledGraph two = parse_graph("alphabet a\nvertex u\nvertex v\nedge u v a\nedge v u a\n");
    CHECK(scc_period(two, {0, 1}) == 2);
    LabelledGraph three = parse_graph(
        "alphabet a\nvertex u\nvertex v\nvertex w\nedge u v a\nedge v w a\nedge w u a\n");
    CHECK(scc_period(three, {0, 1, 2}) == 3);
    LabelledGraph mixed = parse_graph(
        "alphabet a\nvertex u\nvertex v\nedge u v a\nedge v u a\nedge u u a\n");
    CHECK(scc_period(mixed, {0, 1}) == 1);
    LabelledGraph none = parse_graph("alphabet a\nvertex q\n");
    CHECK_THROWS_AS(scc_period(none, {0}), GraphError);
}

TEST_CASE("scc_period matches the simple-cycle gcd oracle") {
    testutil::Rng rng(41);
    int checked = 0;
    for (int trial = 0; trial < 500; ++trial) {
        LabelledGraph g = testutil::random_graph(rng, 5, 10);
        for (const auto& comp : strongly_connected_components(g).components) {
            long oracle = cycle_gcd_oracle(g, comp);
            if (oracle == 0) continue;  // no cycle through the component
            CHECK(scc_period(g, comp) == oracle);
            ++checked;
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("perron_analyze: one vertex with k loops") {
    for (long k : {1L, 2L, 5L}) {
        std::string text = "alphabet a\nvertex q\n";
        for (long i = 0; i < k; ++i) text += "edge q q a\n";
        LabelledGraph g = parse_graph(text);
        PerronData pd = perron_analyze(g, {0});
        CHECK(pd.period == 1);
        CHECK(pd.radius == k);
        CHECK(pd.coeff(0, 0).a == 1);
        CHECK(pd.coeff(0, 0).residue == 0);
    }
}

TEST_CASE("perron_analyze: 2-cycle has period 2 and unit coefficients") {
    LabelledGraph g = parse_graph("alphabet a\nvertex u\nvertex v\nedge u v a\nedge v u a\n");
    PerronData pd = perron_analyze(g, {0, 1});
    CHECK(pd.period == 2);
    CHECK(pd.radius == 1);
    CHECK(pd.coeff(0, 0).residue == 0);
    CHECK(pd.coeff(0, 0).a == 1);
    CHECK(pd.coeff(0, 1).residue == 1);
    CHECK(pd.coeff(0, 1).a == 1);
}

TEST_CASE("perron_analyze: free group core has radius 3 and coefficients 1/4") {
    LabelledGraph g = build_free_group(2);
    LabelledGraph inner = induced_subgraph(g, {1, 2, 3, 4});
    std::vector<int> all{0, 1, 2, 3};
    PerronData pd = perron_analyze(inner, all);
    CHECK(pd.period == 1);
    CHECK(pd.radius == 3);
    for (int u = 0; u < 4; ++u)
        for (int v = 0; v < 4; ++v) CHECK(pd.coeff(u, v).a == Rational(1, 4));
}

TEST_CASE("descriptor_shift: exponent and horizon bookkeeping") {
    RegularDescriptor g2 = geometric(2);
    RegularDescriptor s1 = descriptor_shift(g2, 1);
    CHECK(s1.classes[0].a == 2);
    CHECK(s1.classes[0].c == 2);
    CHECK(s1.terms(0) == 2);
    CHECK(s1.terms(5) == 64);
    RegularDescriptor sm = descriptor_shift(g2, -1);
    CHECK(sm.classes[0].a == Rational(1, 2));
    CHECK(sm.terms(0) == 0);  // no length-(-1) terms
    CHECK(sm.terms(1) == 1);
    RegularDescriptor alt = descriptor_shift(alternating(), 1);
    CHECK(alt.classes[0].is_zero());
    CHECK(alt.classes[1].kind == ResidueClass::Kind::Asymptotic);
    CHECK(alt.terms(1) == 1);
    CHECK(alt.terms(2) == 0);
    RegularDescriptor ez = descriptor_shift(delta_descriptor(), -2);
    CHECK(ez.classes[0].horizon == 2);
    CHECK(ez.terms(2) == 1);
}

TEST_CASE("descriptor_scale") {
    RegularDescriptor s = descriptor_scale(geometric(2), Rational(3));
    CHECK(s.classes[0].a == 3);
    CHECK(s.terms(4) == 48);
    CHECK(descriptor_scale(geometric(2), 0).classes[0].is_zero());
    CHECK_THROWS_AS(descriptor_scale(geometric(2), Rational(-1)), GraphError);
}

TEST_CASE("descriptor_sum: dominance and ties") {
    RegularDescriptor s23 = descriptor_sum(geometric(2), geometric(3));
    CHECK(s23.classes[0].a == 1);
    CHECK(s23.classes[0].c == 3);
    CHECK(s23.terms(3) == 8 + 27);
    RegularDescriptor s22 = descriptor_sum(geometric(2), geometric(2));
    CHECK(s22.classes[0].a == 2);
    CHECK(s22.classes[0].c == 2);
    RegularDescriptor sz = descriptor_sum(zero_descriptor(), geometric(2));
    CHECK(sz.classes[0].a == 1);
    CHECK(sz.classes[0].c == 2);
    // Differing polynomial degrees at equal radius: larger b wins.
    RegularDescriptor lin = make_desc(1, {ResidueClass::asymptotic(1, 1, 1)},
                                      [](long n) { return Rational(n); });
    RegularDescriptor sl = descriptor_sum(lin, ones());
    CHECK(sl.classes[0].b == 1);
    CHECK(sl.classes[0].a == 1);
}

TEST_CASE("descriptor_convolve: geometric * ones is 2^(n+1) - 1") {
    RegularDescriptor h = descriptor_convolve(geometric(2), ones());
    REQUIRE(h.q == 1);
    CHECK(h.classes[0].kind == ResidueClass::Kind::Asymptotic);
    CHECK(h.classes[0].a == 2);
    CHECK(h.classes[0].b == 0);
    CHECK(h.classes[0].c == 2);
    for (long n = 0; n <= 20; ++n)
        CHECK(h.terms(n) == rational_pow(Rational(2), n + 1) - 1);
}

TEST_CASE("descriptor_convolve: ones * ones is n + 1") {
    RegularDescriptor h = descriptor_convolve(ones(), ones());
    CHECK(h.classes[0].a == 1);
    CHECK(h.classes[0].b == 1);
    CHECK(h.classes[0].c == 1);
    for (long n = 0; n <= 20; ++n) CHECK(h.terms(n) == n + 1);
}

TEST_CASE("descriptor_convolve: linear * ones is n(n+1)/2") {
    RegularDescriptor lin = make_desc(1, {ResidueClass::asymptotic(1, 1, 1)},
                                      [](long n) { return Rational(n); });
    RegularDescriptor h = descriptor_convolve(lin, ones());
    CHECK(h.classes[0].a == Rational(1, 2));
    CHECK(h.classes[0].b == 2);
    CHECK(h.classes[0].c == 1);
    for (long n = 0; n <= 20; ++n) CHECK(h.terms(n) == make_ratio(n * (n + 1), 2));
}

TEST_CASE("descriptor_convolve: delta is a convolution identity") {
    RegularDescriptor g2 = geometric(2);
    RegularDescriptor h = descriptor_convolve(g2, delta_descriptor());
    CHECK(h.classes[0].a == 1);
    CHECK(h.classes[0].c == 2);
    for (long n = 0; n <= 20; ++n) CHECK(h.terms(n) == g2.terms(n));
}

TEST_CASE("descriptor_convolve: periodic self-convolution halves the slope") {
    // (1,0,1,0,...) * (1,0,1,0,...) has terms n/2 + 1 on even n, 0 on odd.
    RegularDescriptor h = descriptor_convolve(alternating(), alternating());
    REQUIRE(h.q == 2);
    CHECK(h.classes[0].kind == ResidueClass::Kind::Asymptotic);
    CHECK(h.classes[0].a == Rational(1, 2));
    CHECK(h.classes[0].b == 1);
    CHECK(h.classes[0].c == 1);
    CHECK(h.classes[1].is_zero());
    for (long n = 0; n <= 20; ++n)
        CHECK(h.terms(n) == (n % 2 == 0 ? Rational(n / 2 + 1) : Rational(0)));
}

TEST_CASE("descriptor_convolve: dominated case sums the slow series exactly") {
    // 2^n * (1,0,1,0,...): both residues get a = sum_{m even} 2^-m = 4/3.
    RegularDescriptor h = descriptor_convolve(geometric(2), alternating());
    REQUIRE(h.q == 2);
    for (long r = 0; r < 2; ++r) {
        CHECK(h.classes[r].a == Rational(4, 3));
        CHECK(h.classes[r].b == 0);
        CHECK(h.classes[r].c == 2);
    }
    // Terms: sum over even m <= n of 2^(n-m).
    CHECK(h.terms(0) == 1);
    CHECK(h.terms(1) == 2);
    CHECK(h.terms(2) == 5);
    CHECK(h.terms(3) == 10);
    CHECK(h.terms(4) == 21);
}

TEST_CASE("descriptor_convolve refuses to certify nearly equal radii") {
    RegularDescriptor slow =
        make_desc(1, {ResidueClass::asymptotic(1, 0, Rational(39, 20))},
                  [](long n) { return rational_pow(Rational(39, 20), n); });
    AnalyzeOptions opts;
    opts.series_cap = 60;
    CHECK_THROWS_WITH_AS(descriptor_convolve(geometric(2), slow, opts),
                         doctest::Contains("spectral radii too close"), GraphError);
}

TEST_CASE("descriptor_of_pair: unreachable pairs and bare vertices") {
    LabelledGraph two = parse_graph("alphabet a\nvertex u\nvertex v\n");
    RegularDescriptor d = descriptor_of_pair(two, 0, 1);
    CHECK(d.class_of(0).is_zero());
    for (long n = 0; n <= 5; ++n) CHECK(d.terms(n) == 0);
    RegularDescriptor diag = descriptor_of_pair(two, 0, 0);
    CHECK(diag.class_of(0).is_zero());
    CHECK(diag.terms(0) == 1);
    CHECK(diag.terms(1) == 0);
}

TEST_CASE("descriptor_of_pair: loop-arc-loop counts linearly") {
    LabelledGraph g = parse_graph(
        "alphabet a\nvertex u\nvertex v\nedge u u a\nedge u v a\nedge v v a\n");
    RegularDescriptor d = descriptor_of_pair(g, 0, 1);
    REQUIRE(d.q == 1);
    CHECK(d.classes[0].a == 1);
    CHECK(d.classes[0].b == 1);
    CHECK(d.classes[0].c == 1);
    for (long n = 0; n <= 30; ++n) CHECK(d.terms(n) == n);
}

TEST_CASE("descriptor_of_pair: distinct radii give exact 3^n - 2^n") {
    LabelledGraph g = parse_graph(
        "alphabet a\nvertex u\nvertex v\n"
        "edge u u a\nedge u u a\nedge u v a\n"
        "edge v v a\nedge v v a\nedge v v a\n");
    RegularDescriptor d = descriptor_of_pair(g, 0, 1);
    REQUIRE(d.q == 1);
    CHECK(d.classes[0].a == 1);
    CHECK(d.classes[0].b == 0);
    CHECK(d.classes[0].c == 3);
    for (long n = 0; n <= 10; ++n)
        CHECK(d.terms(n) == rational_pow(Rational(3), n) - rational_pow(Rational(2), n));
    ValidationReport report = validate_descriptor(d, 200, 200, 1e-30);
    CHECK(report.pass);
    Rational expected = rational_pow(Rational(2, 3), 200);
    CHECK(report.rows[0].max_deviation == doctest::Approx(expected.get_d()));
    CHECK(report.rows[0].max_deviation <= 1e-30);
}

TEST_CASE("descriptor_of_pair: 2-cycle yields period 2") {
    LabelledGraph g = parse_graph("alphabet a\nvertex u\nvertex v\nedge u v a\nedge v u a\n");
    RegularDescriptor d = descriptor_of_pair(g, 0, 0);
    REQUIRE(d.q == 2);
    CHECK(d.classes[0].a == 1);
    CHECK(d.classes[0].c == 1);
    CHECK(d.classes[1].is_zero());
    for (long n = 0; n <= 10; ++n) CHECK(d.terms(n) == (n % 2 == 0 ? 1 : 0));
}

TEST_CASE("descriptor_of_spheres: free semigroup and free group") {
    RegularDescriptor s2 = descriptor_of_spheres(build_free_semigroup(2));
    REQUIRE(s2.q == 1);
    CHECK(s2.classes[0].a == 1);
    CHECK(s2.classes[0].b == 0);
    CHECK(s2.classes[0].c == 2);
    CHECK(validate_descriptor(s2, 50, 200, 0).pass);

    RegularDescriptor f2 = descriptor_of_spheres(build_free_group(2));
    REQUIRE(f2.q == 1);
    CHECK(f2.classes[0].a == Rational(4, 3));
    CHECK(f2.classes[0].b == 0);
    CHECK(f2.classes[0].c == 3);
    ValidationReport report = validate_descriptor(f2, 50, 200, 0);
    CHECK(report.pass);
    CHECK(report.rows[0].max_deviation == 0.0);
    for (long n = 1; n <= 12; ++n)
        CHECK(f2.terms(n) == 4 * rational_pow(Rational(3), n - 1));
}

TEST_CASE("descriptor_of_spheres: finite coding is eventually zero") {
    GroupOracle z6 = GroupOracle::cyclic(6);
    LabelledGraph g = build_finite_group_shortlex(z6);
    RegularDescriptor d = descriptor_of_spheres(g);
    long expected[] = {1, 2, 2, 1, 0, 0, 0};
    for (long n = 0; n <= 6; ++n) {
        CHECK(d.class_of(n).is_zero());
        CHECK(d.terms(n) == expected[n]);
    }
}

TEST_CASE("descriptor terms reproduce exact path counts on random graphs") {
    testutil::Rng rng(43);
    int analyzed = 0;
    for (int trial = 0; trial < 60; ++trial) {
        LabelledGraph g = testutil::random_graph(rng, 5, 9);
        CountTable t = count_table(g, 40);
        for (int u = 0; u < g.vertex_count() && analyzed < 150; ++u)
            for (int v = 0; v < g.vertex_count(); ++v) {
                RegularDescriptor d;
                try {
                    d = descriptor_of_pair(g, u, v);
                } catch (const GraphError&) {
                    continue;  // uncertifiable radius gap; rejection is allowed
                }
                ++analyzed;
                for (long n = 0; n <= 40; ++n)
                    CHECK(d.terms(n) == Rational(t.pair_count(u, v, static_cast<int>(n))));
                // EventuallyZero classes must really vanish.
                for (long n = 0; n <= 40; ++n) {
                    const ResidueClass& cls = d.class_of(n);
                    if (cls.is_zero() && n > cls.horizon)
                        CHECK(t.pair_count(u, v, static_cast<int>(n)) == 0);
                }
            }
    }
    CHECK(analyzed >= 100);
}

TEST_CASE("validate_descriptor flags a wrong eventually-zero claim") {
    RegularDescriptor bogus = make_desc(1, {ResidueClass::eventually_zero(3)},
                                        [](long) { return Rational(1); });
    ValidationReport report = validate_descriptor(bogus, 0, 10, 1e-10);
    CHECK(!report.pass);
    CHECK(report.rows[0].max_deviation == 1.0);
    CHECK_THROWS_AS(validate_descriptor(bogus, 5, 4, 1e-10), GraphError);
}

TEST_CASE("validation_csv emits one row per residue") {
    RegularDescriptor d = descriptor_of_spheres(build_free_group(2));
    std::string csv = validation_csv(validate_descriptor(d, 50, 100, 1e-10));
    CHECK(csv.find("residue,kind,a,b,c,max_deviation,window,warning\n") == 0);
    CHECK(csv.find("asymptotic") != std::string::npos);
    CHECK(csv.find("50-100") != std::string::npos);
}
