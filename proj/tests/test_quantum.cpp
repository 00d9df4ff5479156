#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "isolab/errors.hpp"
#include "isolab/families.hpp"
#include "isolab/quantum.hpp"

using namespace isolab;
using quantum::SpectrumRegime;

namespace {

quantum::EigenPairs solve_harmonic(int n, int k) {
    auto p = families::harmonic();
    auto H = quantum::build_hamiltonian(p, {-10.0, 10.0, n});
    return quantum::eigensolve(H, k);
}

double trapezoid_dot(const std::vector<double>& a, const std::vector<double>& b,
                     double h) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s * h;
}

}  // namespace

TEST_CASE("harmonic ground state follows the -h^2/32 stencil error law") {
    auto e2000 = solve_harmonic(2000, 1);
    double err2000 = e2000.values[0] - 0.5;
    CHECK(std::fabs(err2000) < 4e-6);
    CHECK(err2000 < -2e-6);  // sign and size of the leading term

    auto e4000 = solve_harmonic(4000, 1);
    double err4000 = e4000.values[0] - 0.5;
    CHECK(std::fabs(err4000) < 1e-6);

    auto e1000 = solve_harmonic(1000, 1);
    double ratio = (e1000.values[0] - 0.5) / err2000;
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
}

TEST_CASE("harmonic spectrum, orthonormality, sign convention") {
    auto ep = solve_harmonic(2000, 5);
    for (int k = 0; k < 5; ++k) {
        CHECK(ep.values[k] == doctest::Approx(k + 0.5).epsilon(1e-3));
        CHECK(ep.residuals[k] <= 1e-8);
    }
    double h = 20.0 / 1999;
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < i; ++j)
            CHECK(std::fabs(trapezoid_dot(ep.vectors[i], ep.vectors[j], h)) <
                  1e-8);
        CHECK(trapezoid_dot(ep.vectors[i], ep.vectors[i], h) ==
              doctest::Approx(1.0).epsilon(1e-10));
    }
    // largest component positive: the ground state is a positive bump
    double peak = 0;
    for (double v : ep.vectors[0]) peak = std::max(peak, std::fabs(v));
    bool found_positive_peak = false;
    for (double v : ep.vectors[0])
        if (v == peak) found_positive_peak = true;
    CHECK(found_positive_peak);
}

TEST_CASE("isotonic b=1 levels on the grid match the formula") {
    auto p = families::isotonic(0.5, 1.0);
    auto H = quantum::build_hamiltonian(p, {0.0, 14.0, 3000});
    auto ep = quantum::eigensolve(H, 5);
    auto info = quantum::isotonic_spectrum_formula(0.5, 1.0, 1.0, 5);
    CHECK(info.nu == doctest::Approx(1.5).epsilon(1e-14));
    for (int k = 0; k < 5; ++k) {
        CHECK(info.plus[k] == doctest::Approx(2.5 + 2.0 * k).epsilon(1e-14));
        CHECK(ep.values[k] == doctest::Approx(info.plus[k]).epsilon(1e-3));
        CHECK(std::fabs(ep.values[k] - info.plus[k]) < 1e-3);
    }
}

TEST_CASE("formula against the grid across a 3x3 parameter sweep") {
    for (double a : {0.5, 1.0, 2.0}) {
        for (double b : {0.5, 1.0, 2.0}) {
            auto p = families::isotonic(a, b);
            auto H = quantum::build_hamiltonian(p, {0.0, 12.0, 2500});
            auto ep = quantum::eigensolve(H, 3);
            auto info = quantum::isotonic_spectrum_formula(a, b, 1.0, 3);
            for (int k = 0; k < 3; ++k) {
                CAPTURE(a);
                CAPTURE(b);
                CAPTURE(k);
                CHECK(std::fabs(ep.values[k] - info.plus[k]) <
                      1e-3 * (1 + info.plus[k]));
            }
        }
    }
}

TEST_CASE("nu is an hbar invariant when b tracks hbar^2") {
    double nu_ref = quantum::isotonic_spectrum_formula(0.5, 1.0, 1.0, 1).nu;
    for (double hb : {0.5, 2.0}) {
        auto info = quantum::isotonic_spectrum_formula(0.5, hb * hb, hb, 2);
        CHECK(std::fabs(info.nu - nu_ref) < 1e-12);
        // levels scale linearly in hbar with nu frozen
        CHECK(info.plus[0] == doctest::Approx(hb * (1 + nu_ref)).epsilon(1e-12));
    }
}

TEST_CASE("spectrum regimes") {
    CHECK(quantum::isotonic_spectrum_formula(0.5, 0.0, 1.0, 1).regime ==
          SpectrumRegime::plain_harmonic);
    CHECK(quantum::isotonic_spectrum_formula(0.5, 3.0 / 16, 1.0, 1).regime ==
          SpectrumRegime::paired);
    CHECK(quantum::isotonic_spectrum_formula(0.5, 1.0, 1.0, 1).regime ==
          SpectrumRegime::equidistant);
    // admissibility boundary: b <= -hbar^2/8 is out
    CHECK_THROWS_AS(quantum::isotonic_spectrum_formula(0.5, -0.125, 1.0, 1),
                    DomainError);
    CHECK_THROWS_AS(quantum::isotonic_spectrum_formula(-1.0, 1.0, 1.0, 1),
                    DomainError);
}

TEST_CASE("paired regime: the branch scheme reaches the minus tower") {
    double a = 0.5, b = 3.0 / 16;
    auto info = quantum::isotonic_spectrum_formula(a, b, 1.0, 3);
    REQUIRE(info.regime == SpectrumRegime::paired);
    double nu = info.nu;

    auto pot = families::isotonic(a, b);
    quantum::Grid g{0.0, 12.0, 3000};
    auto Hm = quantum::build_hamiltonian(pot, g, {true, 0.5 - nu});
    auto em = quantum::eigensolve(Hm, 3);
    for (int k = 0; k < 3; ++k) {
        CAPTURE(k);
        // x^{1/2-nu} boundary exponent makes this branch converge slowly;
        // 3e-2 reflects the O(h^{2-2nu}) rate at this resolution
        CHECK(std::fabs(em.values[k] - info.minus[k]) < 3e-2);
    }

    // plain Dirichlet picks the regular x^{1/2+nu} branch instead
    auto Hp = quantum::build_hamiltonian(pot, g);
    auto ep = quantum::eigensolve(Hp, 2);
    for (int k = 0; k < 2; ++k)
        CHECK(std::fabs(ep.values[k] - info.plus[k]) < 2e-2);
}

TEST_CASE("raising ladder connects adjacent minus-branch states") {
    double a = 0.5, b = 3.0 / 16;
    auto info = quantum::isotonic_spectrum_formula(a, b, 1.0, 2);
    auto pot = families::isotonic(a, b);
    quantum::Grid g{0.0, 12.0, 3000};
    auto H = quantum::build_hamiltonian(pot, g, {true, 0.5 - info.nu});
    auto ep = quantum::eigensolve(H, 2);

    auto L = quantum::make_ladder(a, b, 1.0, true);
    CHECK(L.lambda == doctest::Approx(2.0).epsilon(1e-14));
    auto lifted = quantum::ladder_apply(L, H.x, ep.vectors[0]);

    // 5% boundary trim: the centered stencil is junk next to the origin
    std::size_t m = H.x.size(), lo = m / 20, hi = m - m / 20;
    double num = 0, na = 0, nb = 0;
    for (std::size_t i = lo; i < hi; ++i) {
        num += lifted[i] * ep.vectors[1][i];
        na += lifted[i] * lifted[i];
        nb += ep.vectors[1][i] * ep.vectors[1][i];
    }
    CHECK(std::fabs(num) / std::sqrt(na * nb) > 0.99);
}

TEST_CASE("commutator fit recovers lambda = 2 sqrt(2a) hbar") {
    auto p = families::isotonic(0.5, 1.0);
    auto H = quantum::build_hamiltonian(p, {0.0, 14.0, 3000});
    auto ep = quantum::eigensolve(H, 5);
    auto L = quantum::make_ladder(0.5, 1.0, 1.0, true);
    auto fit = quantum::commutator_residual(H, L, ep.vectors);
    CHECK(std::fabs(fit.lambda_fit - 2.0) < 0.02);
    CHECK(fit.residual < 1e-2);

    // harmonic single-factor ladder: lambda = -hbar omega for lowering
    auto hp = families::harmonic();
    auto Hh = quantum::build_hamiltonian(hp, {-10.0, 10.0, 2000});
    auto eh = quantum::eigensolve(Hh, 4);
    auto Lh = quantum::harmonic_ladder(1.0, 1.0, false);
    auto fh = quantum::commutator_residual(Hh, Lh, eh.vectors);
    CHECK(std::fabs(fh.lambda_fit + 1.0) < 0.02);
    CHECK(fh.residual < 1e-2);
}

TEST_CASE("ladder structure decomposition") {
    std::vector<double> harm{0.5, 1.5, 2.5, 3.5, 4.5, 5.5, 6.5};
    auto s = quantum::analyze_ladder_structure(harm, 1.0, 1e-6);
    REQUIRE(s.chains.size() == 1);
    CHECK(s.chains[0].size() == 7);
    CHECK(s.orphans.empty());

    // isolated ground level below a uniform tower
    std::vector<double> tower{0.0, 1.5, 2.0, 2.5, 3.0};
    auto st = quantum::analyze_ladder_structure(tower, 0.5, 1e-6);
    REQUIRE(st.chains.size() == 1);
    CHECK(st.chains[0] == std::vector<int>{1, 2, 3, 4});
    CHECK(st.orphans == std::vector<int>{0});

    // two interleaved towers spaced lambda apart
    double nu = std::sqrt(1 + 8.0 * 3 / 16) / 2;
    std::vector<double> paired{1 - nu, 1 + nu, 3 - nu, 3 + nu};
    auto sp = quantum::analyze_ladder_structure(paired, 2.0, 1e-9);
    REQUIRE(sp.chains.size() == 2);
    CHECK(sp.chains[0] == std::vector<int>{0, 2});
    CHECK(sp.chains[1] == std::vector<int>{1, 3});
    CHECK(sp.orphans.empty());

    // measurement noise within tol still chains up
    std::vector<double> noisy{0.5, 1.5000004, 2.4999996};
    auto sn = quantum::analyze_ladder_structure(noisy, 1.0, 1e-3);
    REQUIRE(sn.chains.size() == 1);
    CHECK(sn.chains[0].size() == 3);
}

TEST_CASE("operator assembly guards") {
    auto dp = families::double_pole(1.0);
    CHECK_THROWS_AS(quantum::build_hamiltonian(dp, {-2.0, 2.0, 200}),
                    DomainError);
    CHECK_NOTHROW(quantum::build_hamiltonian(dp, {-0.85, 0.85, 200}));

    auto h = families::harmonic();
    CHECK_THROWS_AS(quantum::build_hamiltonian(h, {-10.0, 10.0, 32}),
                    DomainError);
    CHECK_THROWS_AS(quantum::build_hamiltonian(h, {10.0, -10.0, 200}),
                    DomainError);

    auto H = quantum::build_hamiltonian(h, {-10.0, 10.0, 200});
    CHECK_THROWS_AS(quantum::eigensolve(H, 0), DomainError);
    CHECK_THROWS_AS(quantum::eigensolve(H, 21), DomainError);
}

TEST_CASE("callable and expression assembly agree exactly") {
    auto p = families::harmonic();
    quantum::Grid g{-10.0, 10.0, 500};
    auto Ha = quantum::build_hamiltonian(p, g);
    auto Hb = quantum::build_hamiltonian_fn(
        [](double x) { return 0.5 * x * x; }, {}, 1.0, g);
    REQUIRE(Ha.diag.size() == Hb.diag.size());
    for (std::size_t i = 0; i < Ha.diag.size(); ++i)
        CHECK(Ha.diag[i] == doctest::Approx(Hb.diag[i]).epsilon(1e-15));
    for (std::size_t i = 0; i < Ha.off.size(); ++i)
        CHECK(Ha.off[i] == Hb.off[i]);

    // apply is the matrix action
    std::vector<double> v(Ha.x.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = std::exp(-0.5 * Ha.x[i] * Ha.x[i]);
    auto hv = Ha.apply(v);
    REQUIRE(hv.size() == v.size());
    // interior: Hv ~ E0 v for the continuum ground state
    std::size_t mid = v.size() / 2;
    CHECK(hv[mid] / v[mid] == doctest::Approx(0.5).epsilon(1e-3));
}
