#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace isolab {
namespace numerics {

using Fn = std::function<double(double)>;

/// Gauss-Legendre nodes/weights on [-1,1], cached per order.
struct GaussRule {
    std::vector<double> x, w;
};
const GaussRule& gauss_legendre(int n);

double integrate_gl(const Fn& f, double a, double b, int n);

struct QuadResult {
    double value;
    double abs_err;   // |I_n - I_{n/2}| of the accepted level
    int n;
    bool converged;
};

/// fixed-rule doubling: n0, 2n0, ... until the change is below
/// rel_tol*|I| + abs_floor or n_max is hit
QuadResult integrate_gl_doubling(const Fn& f, double a, double b,
                                 double rel_tol, int n0 = 16, int n_max = 1024,
                                 double abs_floor = 1e-300);

/// adaptive Simpson; rel_tol on the local estimate, abs_tol as a floor
double integrate_adaptive(const Fn& f, double a, double b, double rel_tol,
                          double abs_tol = 1e-300, int max_depth = 48);

/// root of f on a bracket [lo,hi] with f(lo)*f(hi) <= 0: bisection narrowed,
/// Newton-polished when df is supplied. ftol is absolute on |f|.
double solve_bracketed(const Fn& f, const Fn* df, double lo, double hi,
                       double xtol, double ftol);

/// polynomial extrapolation of (xs,ys) samples to x=0 (Neville)
double extrapolate_to_zero(const std::vector<double>& xs,
                           const std::vector<double>& ys);

struct Ratio {
    long long num, den;  // coprime, positive
};

/// best rational approximation of q>0 by continued-fraction convergents:
/// first convergent m/n with |q - m/n| <= tol and max(m,n) <= max_den.
/// computed on the >=1 orientation and mirrored, so swapping the arguments of
/// the ratio swaps the result exactly.
std::optional<Ratio> rational_approx(double q, double tol, long long max_den);

}  // namespace numerics
}  // namespace isolab
