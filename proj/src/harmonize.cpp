#include "isolab/harmonize.hpp"

#include <cmath>
#include <numeric>

#include "isolab/errors.hpp"

namespace isolab {
namespace harmonize {

using classical::TurningPoints;
using numerics::Fn;

// time to travel from x to the right turning point xr on the shell E:
// int_x^xr dx'/sqrt(2(E-V)), theta-substituted on [asin((x-mid)/half), pi/2]
static double time_to_turning(const Potential1D& p, double E,
                              const TurningPoints& tp, double x,
                              double quad_tol) {
    double mid = 0.5 * (tp.xl + tp.xr), half = 0.5 * (tp.xr - tp.xl);
    double u = (x - mid) / half;
    u = std::clamp(u, -1.0, 1.0);
    double th0 = std::asin(u);
    if (th0 >= M_PI / 2) return 0;
    double dvl = std::fabs(p.deriv(tp.xl)), dvr = std::fabs(p.deriv(tp.xr));
    double hl = 1e-5 * (1 + std::fabs(tp.xl));
    double hr = 1e-5 * (1 + std::fabs(tp.xr));
    double d2l = (p.deriv(tp.xl + hl) - p.deriv(tp.xl)) / hl;
    double d2r = (p.deriv(tp.xr) - p.deriv(tp.xr - hr)) / hr;
    Fn f = [&](double theta) {
        double s = std::sin(theta), c = std::cos(theta);
        double xx = mid + half * s;
        double d = E - p.eval(xx);
        // E - V cancels catastrophically near the turning points; hand over
        // to the quadratic turning expansion well before rounding noise can
        // compete with the quadrature tolerance (the time itself can be tiny
        // when x starts next to a turning point)
        double lim = 1e-6 * (1 + std::fabs(E));
        if (d < lim) {
            double sr = std::sin(M_PI / 4 - theta / 2);
            double sl = std::sin(M_PI / 4 + theta / 2);
            double xir = 2 * half * sr * sr;  // xr - xx, cancellation-free
            double xil = 2 * half * sl * sl;  // xx - xl
            double dm = xir < xil ? xir * (dvr - 0.5 * d2r * xir)
                                  : xil * (dvl - 0.5 * d2l * xil);
            if (dm > 0)
                d = dm;
            else if (d < 1e-11 * (1 + std::fabs(E)))
                d = 1e-11 * (1 + std::fabs(E));
        }
        return half * c / std::sqrt(2 * d);
    };
    auto r = numerics::integrate_gl_doubling(f, th0, M_PI / 2, quad_tol, 16,
                                             1024);
    if (!r.converged && r.abs_err > 1e-7 * (std::fabs(r.value) + 1e-12))
        throw NumericsError("time quadrature did not converge");
    return r.value;
}

double HarmonizationMap::period_at(double E) const {
    return classical::period_quadrature(pot, E, well);
}

MappedState HarmonizationMap::forward(double x, double p) const {
    double xs = x - x_shift;  // into the translated frame
    double E = 0.5 * p * p + pot.eval(xs);
    if (E < 1e-12 * (1 + std::fabs(v_shift)))
        throw DomainError("state at the well minimum: map undefined");
    TurningPoints tp = classical::find_turning_points(pot, E, well);
    double t_e = classical::period_quadrature(pot, E, well);
    double t = time_to_turning(pot, E, tp, xs, quad_tol);
    if (p > 0) t = t_e - t;
    MappedState m;
    m.E = E;
    m.r = tp.xr;
    m.t = t;
    m.X = m.r * std::cos(omega * t);
    m.P = -m.r * omega * std::sin(omega * t);
    return m;
}

std::array<double, 2> HarmonizationMap::inverse(double X, double P) const {
    double r = std::sqrt(X * X + (P / omega) * (P / omega));
    if (r < 1e-12) throw DomainError("(X,P) at the origin: inverse undefined");
    double E = pot.eval(r);
    TurningPoints tp = classical::find_turning_points(pot, E, well);
    double t_e = classical::period_quadrature(pot, E, well);
    double phase = std::atan2(-P / omega, X);  // omega*t up to 2 pi
    if (phase < 0) phase += 2 * M_PI;
    double t = phase / omega;
    if (t >= t_e) t -= t_e;
    // first half period: moving left (p <= 0), time-to-turning equals t;
    // second half: mirror
    bool second_half = t > 0.5 * t_e;
    double tau = second_half ? t_e - t : t;
    Fn f = [&](double x) {
        return time_to_turning(pot, E, tp, x, quad_tol) - tau;
    };
    // f decreases from T/2 at xl to 0 at xr
    double x = numerics::solve_bracketed(
        f, nullptr, tp.xl, tp.xr,
        1e-13 * (1 + std::fabs(tp.xl) + std::fabs(tp.xr)), 1e-13);
    double ke = E - pot.eval(x);
    double pm = ke > 0 ? std::sqrt(2 * ke) : 0;
    return {x + x_shift, second_half ? pm : -pm};
}

HarmonizationMap make_map(const Potential1D& p, double e_lo, double e_hi,
                          const MapOptions& opt) {
    classical::Well w0 = classical::find_well(p);
    HarmonizationMap m;
    m.x_shift = w0.x_min;
    m.v_shift = w0.v_min;
    m.pot = p.shifted(w0.x_min, w0.v_min);
    m.well = classical::find_well(m.pot);
    // the translated minimum sits at 0 by construction; pin it exactly
    m.well.x_min = 0;
    m.well.v_min = 0;
    m.e_lo = e_lo;
    m.e_hi = e_hi;
    m.quad_tol = opt.quad_tol;
    m.scan = classical::isochrony_scan(m.pot, e_lo, e_hi, opt.scan_samples,
                                       opt.isochrony_tol);
    if (opt.require_isochronous &&
        m.scan.verdict != classical::Verdict::isochronous)
        throw DomainError(
            "potential failed the isochrony scan; pass "
            "require_isochronous=false to force the map");
    if (opt.reference_energy)
        m.T = classical::period_quadrature(m.pot, *opt.reference_energy,
                                           m.well);
    else
        m.T = m.scan.median;
    m.omega = 2 * M_PI / m.T;
    return m;
}

double jacobian_residual(const HarmonizationMap& m, double r, double t,
                         double delta, double dt) {
    if (!(r > 0)) throw DomainError("jacobian_residual: need r > 0");
    if (delta <= 0) delta = 1e-4 * (1 + r);
    if (dt <= 0) dt = m.T / 50000;
    long long n = t > 0 ? std::max<long long>(1, (long long)std::llround(t / dt))
                        : 0;
    auto evolve = [&](double r0) {
        double x = r0, v = 0;
        if (n > 0) {
            double h = t / n;
            double acc = -m.pot.deriv(x);
            for (long long i = 0; i < n; ++i) {
                double vh = v + 0.5 * h * acc;
                x += h * vh;
                double an = -m.pot.deriv(x);
                v = vh + 0.5 * h * an;
                acc = an;
            }
        }
        return std::array<double, 2>{x, v};
    };
    auto plus = evolve(r + delta), minus = evolve(r - delta), mid = evolve(r);
    double dx_dr = (plus[0] - minus[0]) / (2 * delta);
    double dp_dr = (plus[1] - minus[1]) / (2 * delta);
    // J = det d(x,p)/d(r,t) with dx/dt = p, dp/dt = -V'(x):
    // J = dx/dr * (-V'(x)) - p * dp/dr = -(p dp/dr + V'(x) dx/dr)
    double j = -(mid[1] * dp_dr + m.pot.deriv(mid[0]) * dx_dr);
    return std::fabs(j + m.pot.deriv(r));
}

IntegralSet build_integral_set(const HarmonizationMap& a,
                               const HarmonizationMap& b, int m, int n,
                               double ratio_tol) {
    if (m <= 0 || n <= 0)
        throw DomainError("build_integral_set: ratio must be positive");
    if (std::gcd(m, n) != 1)
        throw DomainError("build_integral_set: m,n must be coprime");
    double ratio = a.T / b.T;
    if (std::fabs(ratio - (double)m / n) > ratio_tol)
        throw DomainError("period ratio " + std::to_string(ratio) +
                          " incompatible with " + std::to_string(m) + ":" +
                          std::to_string(n));
    return IntegralSet{a, b, m, n};
}

std::array<double, 4> IntegralSet::eval(const classical::State& s) const {
    MappedState sa = a.forward(s[0], s[1]);
    MappedState sb = b.forward(s[2], s[3]);
    std::complex<double> a1(sa.P, a.omega * sa.X);
    std::complex<double> a2(sb.P, b.omega * sb.X);
    double q1 = 0.5 * std::norm(a1);
    double q2 = 0.5 * std::norm(a2);
    std::complex<double> mono(1, 0);
    for (int i = 0; i < m; ++i) mono *= a1;
    std::complex<double> c2 = std::conj(a2);
    for (int i = 0; i < n; ++i) mono *= c2;
    return {q1, q2, mono.real(), mono.imag()};
}

AuditReport conservation_audit(const IntegralSet& iset,
                               const classical::State& s0, double t_end,
                               double dt, int checkpoint_stride) {
    // integrate in the maps' translated frames (same dynamics), but hand
    // physical states back to eval
    classical::State s0s = s0;
    s0s[0] -= iset.a.x_shift;
    s0s[2] -= iset.b.x_shift;
    Trajectory tr = classical::integrate_trajectory(iset.a.pot, &iset.b.pot,
                                                    s0s, t_end, dt);
    AuditReport rep;
    rep.n_steps = (long long)tr.s.size() - 1;
    rep.dt = dt;
    rep.energy_drift_abs = tr.energy_drift;
    if (checkpoint_stride <= 0)
        checkpoint_stride =
            std::max(1, (int)((tr.s.size() + 4999) / 5000));
    rep.checkpoint_stride = checkpoint_stride;
    rep.q0 = iset.eval(s0);
    for (std::size_t k = 0; k < tr.s.size(); k += checkpoint_stride) {
        classical::State sp = tr.s[k];
        sp[0] += iset.a.x_shift;
        sp[2] += iset.b.x_shift;
        auto q = iset.eval(sp);
        rep.t.push_back(tr.t[k]);
        for (int i = 0; i < 4; ++i) rep.q[i].push_back(q[i]);
    }
    for (int i = 0; i < 4; ++i) {
        double d = 0;
        for (double v : rep.q[i]) d = std::max(d, std::fabs(v - rep.q0[i]));
        rep.max_abs_drift[i] = d;
        rep.rel_drift[i] =
            std::fabs(rep.q0[i]) < 1e-9 ? d : d / std::fabs(rep.q0[i]);
    }
    return rep;
}

}  // namespace harmonize
}  // namespace isolab
