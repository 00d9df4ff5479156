#pragma once

#include <array>
#include <optional>
#include <vector>

#include "isolab/expr.hpp"
#include "isolab/numerics.hpp"

namespace isolab {
namespace classical {

using expr::Potential1D;

/// a potential well: location/value of the minimum plus the sampling window
/// that bounded it (mass = 1 throughout)
struct Well {
    double x_min, v_min;
    double window_lo, window_hi;
};

/// locate the well containing `anchor` (default: the global minimum found by
/// sampling + golden-section descent over the domain clipped to [-32,32])
Well find_well(const Potential1D& p, std::optional<double> anchor = {});

struct TurningPoints {
    double xl, xr;
};

/// roots of V(x)=E flanking the well minimum; bisection brackets from
/// geometric marching, Newton polish; |V(x)-E| <= 1e-10 (1+|E|) at the result.
/// throws DomainError for E below the minimum or unbounded motion at E.
TurningPoints find_turning_points(const Potential1D& p, double E,
                                  const Well& well);

/// period by quadrature: T(E) = 2 int dx / sqrt(2(E-V)) over [xl,xr] with the
/// sine substitution x = mid + half*sin(theta) absorbing both square-root
/// endpoints; Gauss-Legendre with order doubling to relative accuracy 1e-8
/// (throws NumericsError with the achieved estimate on non-convergence)
double period_quadrature(const Potential1D& p, double E, const Well& well);

/// period by direct flight: symplectic integration from (xr, 0) with event
/// localization of the return crossing (cubic Hermite refinement); dt defaults
/// to period_hint/50000. independent cross-check for period_quadrature.
double period_by_flight(const Potential1D& p, double E, const Well& well,
                        double dt = 0);

struct PeriodSample {
    double energy, period;
};

enum class Verdict { isochronous, not_isochronous, indeterminate };

struct PeriodProfile {
    std::vector<PeriodSample> samples;
    std::vector<double> failed_energies;  // quadrature failures, if any
    double median = 0, spread = 0;        // max-min over successful samples
    double tol = 0;                       // spread <= tol*median => isochronous
    Verdict verdict = Verdict::indeterminate;
};

/// sample T(E) on a linear energy grid and classify
PeriodProfile isochrony_scan(const Potential1D& p, double e_lo, double e_hi,
                             int n_samples, double tol = 1e-6);

/// coprime (m,n) with |Ta/Tb - m/n| <= tol and max(m,n) <= max_den,
/// via continued-fraction convergents; absent if no convergent qualifies
std::optional<numerics::Ratio> commensurability(double ta, double tb,
                                               double tol = 1e-9,
                                               long long max_den = 50);

/// phase-space state of one or two decoupled axes (x2,p2 unused in 1d)
using State = std::array<double, 4>;

struct Trajectory {
    std::vector<double> t;
    std::vector<State> s;
    int n_axes = 1;
    double dt = 0;
    double energy_drift = 0;  // max |H - H(0)| over recorded states
};

/// fixed-step Stoermer-Verlet (velocity form, O(dt^2) energy drift).
/// aborts with DomainError if any axis comes within 1e-6*(1+|x0|) of a
/// listed singularity or leaves the domain.
Trajectory integrate_trajectory(const Potential1D& pa, const Potential1D* pb,
                                const State& s0, double t_end, double dt);

double total_energy(const Potential1D& pa, const Potential1D* pb,
                    const State& s);

struct ClosedOrbit {
    double t_return;   // quadratic interpolation through the distance minimum
    double distance;   // scaled recurrence distance at the minimum
};

/// earliest t>0 where the trajectory re-enters a tol-ball around s(0)
/// (per-component rms scaling); absent for quasi-periodic motion
std::optional<ClosedOrbit> closed_orbit_check(const Trajectory& traj,
                                              double tol);

}  // namespace classical
}  // namespace isolab
