#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "isolab/expr.hpp"
#include "isolab/quantum.hpp"

namespace isolab {
namespace dressing {

using expr::ExprFunction;
using expr::Potential1D;
using quantum::Grid;
using quantum::GridOperator;

/// superpotential W with its derivative; the factor pair is
/// a = (hbar d/dx + W)/sqrt2, adag = (-hbar d/dx + W)/sqrt2
struct Superpotential {
    std::function<double(double)> w, dw;
    std::vector<double> poles;  // sorted
    double hbar = 1;

    double v_minus(double x) const;  // (W^2 - hbar W')/2, potential of adag a
    double v_plus(double x) const;   // (W^2 + hbar W')/2, potential of a adag
};

/// expression-backed: symbolic derivative, automatic pole scan
Superpotential make_superpotential(const std::string& src,
                                   const std::map<std::string, double>& params,
                                   double hbar);

/// sample-backed (piecewise linear between nodes, exact at nodes); used for
/// links built from on-grid ground states via W = -hbar psi'/psi
Superpotential superpotential_from_samples(const std::vector<double>& xs,
                                           const std::vector<double>& ws,
                                           double hbar,
                                           std::vector<double> poles = {});

/// H_minus = adag a and H_plus = a adag assembled over one grid; c_minus and
/// c_plus are constants fitted against declared reference potentials away
/// from pole margins (NaN when no reference is supplied)
struct DressingPair {
    Superpotential W;
    GridOperator H_minus, H_plus;
    double c_minus, c_plus;
};

DressingPair build_pair(const Superpotential& W, const Grid& g,
                        const Potential1D* ref_minus = nullptr,
                        const Potential1D* ref_plus = nullptr);

/// sup deviation between the composed factor actions (centered differences)
/// and the assembled operators on sup-normalized bump probes; O(h^2)
double factorization_residual(const DressingPair& dp, int probes);

struct Chain {
    std::vector<Superpotential> links;  // W_1..W_N
    std::vector<double> constants;      // C_1..C_N
    bool periodic = false;              // link N pairs back to link 1
};

struct ChainReport {
    std::vector<double> residuals;  // a_n adag_n vs adag_{n+1} a_{n+1} + C_n
    double periodicity_defect = 0;  // sup |V+(W_N) - V-(W_1) - C_N|
    bool periodic = false;
};

ChainReport chain_verify(const Chain& c, const Grid& g);

using GridAction = std::function<std::vector<double>(const std::vector<double>&)>;

struct IntertwinedOperator {
    GridAction apply;        // psi -> a (Q (adag psi))
    double input_residual;   // [H_in, Q] probe residual (relative)
    double output_residual;  // [H_out, a Q adag] probe residual (relative)
};

/// dress an integral Q of H_in into one of H_out = a adag + const through
/// M = a Q adag; throws DomainError unless [H_in, Q] vanishes on probes
IntertwinedOperator intertwine_integral(const GridAction& Q,
                                        const GridOperator& H_in,
                                        const GridOperator& H_out,
                                        const Superpotential& W, double tol,
                                        int probes = 6);

/// the double-pole oscillator family: bare potential, superpotential, exact
/// shift constants and the closed-form E = 0 solutions of a adag + c_plus
struct Q17Family {
    Potential1D V;  // bare, no shift
    Superpotential W;
    double c_minus, c_plus;                // -5hb^2/(4a2), -3hb^2/(4a2)
    std::vector<ExprFunction> zero_modes;  // two singular-case, one smooth
    bool smooth = false;
    double alpha_sq = 1, hbar = 1;
};

Q17Family q17_build(double alpha_sq, double hbar);

/// exponents of psi ~ (x-pole)^s from the fitted 1/(x-pole)^2 coefficient:
/// roots of (hbar^2/2) s(s-1) = c, sorted descending. The coefficient comes
/// from extrapolating d^2 V(pole+d); a vanishing or divergent limit (pole
/// order != 2) is an error
std::pair<double, double> indicial_exponents(const Potential1D& p, double pole,
                                             double hbar);

enum class NormVerdict { square_integrable, divergent };

struct NormalizabilityRow {
    double window;    // half-width L of [-L, L]
    double eps;       // excluded radius around each pole
    double integral;  // int psi^2 over the window minus the pole balls
};

struct NormalizabilityReport {
    NormVerdict verdict;
    std::vector<NormalizabilityRow> rows;
};

/// integral growth across widening windows and shrinking pole margins
/// (eps halved per level): divergent on sustained >=2x growth over the last
/// three levels, square-integrable on relative increments < 1e-6; the
/// schedule extends itself until one criterion resolves
NormalizabilityReport normalizability_check(
    const std::function<double(double)>& psi, const std::vector<double>& poles,
    std::vector<double> windows);

/// <psi| -hbar^2/2 d2 + v |psi> / <psi|psi> with the analytic second
/// derivative of psi
double rayleigh_quotient(const ExprFunction& psi,
                         const std::function<double(double)>& v, double hbar,
                         double x_lo, double x_hi);

}  // namespace dressing
}  // namespace isolab
