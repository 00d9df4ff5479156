#pragma once

#include <array>
#include <complex>
#include <optional>

#include "isolab/classical.hpp"
#include "isolab/expr.hpp"

namespace isolab {
namespace harmonize {

using classical::PeriodProfile;
using classical::Trajectory;
using expr::Potential1D;

struct MapOptions {
    double isochrony_tol = 1e-6;  // relative spread accepted by the scan
    int scan_samples = 12;
    /// set false to force construction for a non-isochronous potential
    /// (negative controls); the nominal period is then taken at
    /// reference_energy if given, else the scan median
    bool require_isochronous = true;
    std::optional<double> reference_energy;
    double quad_tol = 1e-9;  // relative target of the time quadratures
};

/// radius/phase image of one phase-space point under the map
struct MappedState {
    double X, P;  // harmonic-side coordinates
    double r;     // right turning point of the energy shell (r > 0)
    double t;     // time-to-turning phase, in [0, T_E)
    double E;     // shell energy (shifted potential)
};

/// canonical map (x,p) -> (X,P) sending bounded motion in an isochronous well
/// onto the harmonic oscillator of the common period. The potential is
/// translated so the minimum sits at x=0 with V(0)=0 internally; forward and
/// inverse speak the original (untranslated) coordinates throughout.
/// The map is undefined at the well minimum itself (E=0 puncture).
struct HarmonizationMap {
    Potential1D pot;        // shifted copy
    double x_shift, v_shift;
    double T, omega;        // nominal period, 2 pi / T
    PeriodProfile scan;
    double e_lo, e_hi;      // energy band validated by the scan
    classical::Well well;   // well of the shifted potential
    double quad_tol;

    MappedState forward(double x, double p) const;

    /// preimage of (X,P): radius/phase, then the time quadrature is inverted
    /// by bracketed root-finding on int_x^r dx'/sqrt(2(E-V))
    std::array<double, 2> inverse(double X, double P) const;

    double period_at(double E) const;  // T_E by quadrature on the shifted well
};

HarmonizationMap make_map(const Potential1D& p, double e_lo, double e_hi,
                          const MapOptions& opt = {});

/// |J + V'(r)| where J = det d(x,p)/d(r,t) from centrally differenced
/// symplectic trajectories launched at (r +- delta, 0) and integrated for
/// time t with a shared fixed step
double jacobian_residual(const HarmonizationMap& m, double r, double t,
                         double delta = 0, double dt = 0);

/// polynomial invariants for a separable pair of harmonized axes with period
/// ratio Ta:Tb = m:n; A_j = P_j + i omega_j X_j,
///   Q1 = |A1|^2/2, Q2 = |A2|^2/2, Q3 + i Q4 = A1^m conj(A2)^n
/// states are physical two-axis states (x1,p1,x2,p2), original coordinates
struct IntegralSet {
    HarmonizationMap a, b;
    int m, n;
    std::array<double, 4> eval(const classical::State& s) const;
};

IntegralSet build_integral_set(const HarmonizationMap& a,
                               const HarmonizationMap& b, int m, int n,
                               double ratio_tol = 1e-6);

struct AuditReport {
    std::vector<double> t;                     // checkpoint times
    std::array<std::vector<double>, 4> q;      // Q_k along the trajectory
    std::array<double, 4> q0;
    std::array<double, 4> max_abs_drift;
    std::array<double, 4> rel_drift;  // normalized by |q0|, absolute if
                                      // |q0| < 1e-9
    double energy_drift_abs = 0;
    long long n_steps = 0;
    double dt = 0;
    int checkpoint_stride = 1;
};

/// integrate the two-axis trajectory and track all four integrals
AuditReport conservation_audit(const IntegralSet& iset,
                               const classical::State& s0, double t_end,
                               double dt, int checkpoint_stride = 0);

}  // namespace harmonize
}  // namespace isolab
