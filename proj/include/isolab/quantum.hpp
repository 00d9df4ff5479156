#pragma once

#include <functional>
#include <string>
#include <vector>

#include "isolab/expr.hpp"

namespace isolab {
namespace quantum {

using expr::Potential1D;

/// uniform grid spanning [x_lo, x_hi] with n >= 64 nodes, Dirichlet ends
struct Grid {
    double x_lo, x_hi;
    int n;
    double h() const { return (x_hi - x_lo) / (n - 1); }
};

/// optional power-law boundary behavior psi ~ (x - x_lo)^s at the left end,
/// discretized as a singular-weight finite-volume scheme on half-integer
/// nodes (the exponent enters the first-node flux relation); used for the
/// lower branch of inverse-square wells
struct BranchBC {
    bool enabled = false;
    double s = 0;
};

/// -(hbar^2/2) d2/dx2 + V as a symmetric tridiagonal matrix over the
/// interior nodes (standard 3-point kinetic stencil in the plain case)
struct GridOperator {
    Grid grid;
    BranchBC bc;
    double hbar = 1;
    std::vector<double> x;     // unknown-node coordinates
    std::vector<double> diag;
    std::vector<double> off;   // size x.size()-1
    double h = 0;

    std::vector<double> apply(const std::vector<double>& v) const;
};

GridOperator build_hamiltonian(const Potential1D& p, const Grid& g,
                               const BranchBC& bc = {});

/// same, from a raw potential callable (dressing-pair partners)
GridOperator build_hamiltonian_fn(const std::function<double(double)>& v,
                                  const std::vector<double>& singularities,
                                  double hbar, const Grid& g,
                                  const BranchBC& bc = {});

struct EigenPairs {
    std::vector<double> values;               // ascending
    std::vector<std::vector<double>> vectors; // trapezoid-normalized, the
                                              // largest component positive
    std::vector<double> residuals;            // ||Hv - Ev||_2 for unit v
};

/// lowest k (<= 20) eigenpairs by Sturm-sequence bisection plus tridiagonal
/// inverse iteration; fully deterministic, residuals checked to 1e-8
EigenPairs eigensolve(const GridOperator& op, int k);

enum class SpectrumRegime { equidistant, paired, plain_harmonic };

/// closed-form spectrum of a*x^2 + b/x^2:
///   E_k(+-) = sqrt(2a) hbar (2k + 1 +- nu),  nu = sqrt(1 + 8b/hbar^2)/2.
/// requires b > -hbar^2/8; the minus branch exists for b < 3 hbar^2/8
struct SpectrumInfo {
    double nu = 0, omega = 0;  // omega = sqrt(2a)
    std::vector<double> plus, minus;
    SpectrumRegime regime = SpectrumRegime::equidistant;
};
SpectrumInfo isotonic_spectrum_formula(double a, double b, double hbar,
                                       int kmax);

/// first-order factor c * hbar d/dx + a0(x)
struct LadderFactor {
    double d_coef;
    std::function<double(double)> a0;
};

/// scale * product of first-order factors, applied right to left on the grid
/// via centered differences; lambda is the analytic [H,L] = lambda L value
struct LadderOperator {
    double scale = 1;
    std::vector<LadderFactor> factors;
    double lambda = 0;
    double hbar = 1;
};

/// exact ladder of the isotonic well a x^2 + b/x^2:
///   L(+-) = ((hbar d/dx -+ omega x)^2 - 2b/x^2)/2, omega = sqrt(2a),
/// factored as (hbar d/dx -+ omega x -+ c/x)(hbar d/dx -+ omega x +- c/x)/2
/// with c = hbar(nu - 1/2); collapses to the squared harmonic ladder at b=0.
/// raising=true gives lambda = +2 sqrt(2a) hbar
LadderOperator make_ladder(double a, double b, double hbar, bool raising);

/// single-factor harmonic ladder (hbar d/dx +- omega x)/sqrt2,
/// lambda = -+ hbar omega
LadderOperator harmonic_ladder(double omega, double hbar, bool raising);

std::vector<double> ladder_apply(const LadderOperator& L,
                                 const std::vector<double>& xs,
                                 const std::vector<double>& psi);

struct CommutatorFit {
    double lambda_fit;
    double residual;  // max_j ||[H,L]psi_j - lambda L psi_j|| / ||L psi_j||
};

/// least-squares lambda over the supplied eigenvectors, 10% of the grid
/// trimmed at each boundary before norms are taken
CommutatorFit commutator_residual(const GridOperator& H,
                                  const LadderOperator& L,
                                  const std::vector<std::vector<double>>& psi);

struct LadderStructure {
    std::vector<std::vector<int>> chains;  // indices into the level list
    std::vector<int> orphans;
    double lambda, tol;
};

/// greedy arithmetic-chain decomposition of a level list with spacing
/// |lambda|; chains of length one are reported as orphans
LadderStructure analyze_ladder_structure(const std::vector<double>& levels,
                                         double lambda, double tol);

}  // namespace quantum
}  // namespace isolab
