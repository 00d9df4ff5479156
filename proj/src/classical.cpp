#include "isolab/classical.hpp"

#include <algorithm>
#include <cmath>

#include "isolab/errors.hpp"

namespace isolab {
namespace classical {

using numerics::Fn;

// ---------------------------------------------------------------- well

Well find_well(const Potential1D& p, std::optional<double> anchor) {
    double lo = std::max(p.domain_lo, -32.0);
    double hi = std::min(p.domain_hi, 32.0);
    // stay off poles and the open ends
    auto inside = [&](double x) {
        if (!(x > p.domain_lo && x < p.domain_hi)) return false;
        for (double s : p.singularities)
            if (std::fabs(x - s) < 1e-9) return false;
        return true;
    };
    const int n = 20000;
    double best_x = 0, best_v = 0;
    bool have = false;
    double span = hi - lo;
    double basin_lo = lo, basin_hi = hi;
    if (anchor) {
        // walk downhill from the anchor to the bottom of its basin; the
        // window ends where V turns back down (barrier top) or the
        // pole-free segment containing the anchor runs out
        double seg_lo = lo, seg_hi = hi;
        for (double s : p.singularities) {
            if (s <= *anchor) seg_lo = std::max(seg_lo, s);
            else seg_hi = std::min(seg_hi, s);
        }
        std::vector<double> xs, vs;
        for (int i = 1; i < n; ++i) {
            double x = lo + span * i / n;
            if (x <= seg_lo || x >= seg_hi || !inside(x)) continue;
            double v;
            try {
                v = p.eval(x);
            } catch (const DomainError&) {
                continue;
            }
            if (!std::isfinite(v)) continue;
            xs.push_back(x);
            vs.push_back(v);
        }
        if (xs.size() < 3)
            throw DomainError("find_well: no finite samples in window");
        std::size_t i =
            std::lower_bound(xs.begin(), xs.end(), *anchor) - xs.begin();
        if (i >= xs.size()) i = xs.size() - 1;
        while (i + 1 < xs.size() && vs[i + 1] < vs[i]) ++i;
        while (i > 0 && vs[i - 1] < vs[i]) --i;
        best_x = xs[i];
        best_v = vs[i];
        have = true;
        std::size_t wl = i, wr = i;
        while (wl > 0 && vs[wl - 1] >= vs[wl]) --wl;
        while (wr + 1 < xs.size() && vs[wr + 1] >= vs[wr]) ++wr;
        basin_lo = xs[wl];
        basin_hi = xs[wr];
    } else {
        for (int i = 1; i < n; ++i) {
            double x = lo + span * i / n;
            if (!inside(x)) continue;
            double v;
            try {
                v = p.eval(x);
            } catch (const DomainError&) {
                continue;
            }
            if (!std::isfinite(v)) continue;
            if (!have || v < best_v) {
                best_x = x;
                best_v = v;
                have = true;
            }
        }
    }
    if (!have) throw DomainError("find_well: no finite samples in window");
    // golden-section descent between the sample neighbors
    double a = std::max(best_x - span / n, lo + 1e-12 * (1 + std::fabs(lo)));
    double b = best_x + span / n;
    if (!inside(a)) a = 0.5 * (a + best_x);
    if (!inside(b)) b = 0.5 * (best_x + b);
    const double gr = 0.6180339887498949;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = p.eval(c), fd = p.eval(d);
    for (int it = 0; it < 200 && b - a > 1e-12 * (1 + std::fabs(a)); ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = p.eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = p.eval(d);
        }
    }
    Well w;
    w.x_min = 0.5 * (a + b);
    w.v_min = p.eval(w.x_min);
    w.window_lo = anchor ? basin_lo : lo;
    w.window_hi = anchor ? basin_hi : hi;
    return w;
}

// ---------------------------------------------------------------- turning

static double refine_root(const Potential1D& p, double E, double a, double b) {
    Fn f = [&](double x) { return p.eval(x) - E; };
    Fn df = [&](double x) { return p.deriv(x); };
    double x = numerics::solve_bracketed(f, &df, std::min(a, b), std::max(a, b),
                                         1e-14 * (1 + std::fabs(a) + std::fabs(b)),
                                         1e-12 * (1 + std::fabs(E)));
    if (std::fabs(p.eval(x) - E) > 1e-10 * (1 + std::fabs(E)))
        throw NumericsError("turning point refinement missed tolerance");
    return x;
}

TurningPoints find_turning_points(const Potential1D& p, double E,
                                  const Well& well) {
    if (E <= well.v_min)
        throw DomainError("energy below the potential minimum");
    double scale = 1 + std::fabs(well.x_min);
    TurningPoints tp{};
    for (int dir = 0; dir < 2; ++dir) {
        double sgn = dir == 0 ? -1.0 : 1.0;
        double step = 1e-3 * scale;
        double prev = well.x_min;
        double lim = sgn < 0 ? std::max(p.domain_lo, well.window_lo - 32.0)
                             : std::min(p.domain_hi, well.window_hi + 32.0);
        for (double s : p.singularities) {
            if (sgn < 0 && s < well.x_min) lim = std::max(lim, s);
            if (sgn > 0 && s > well.x_min) lim = std::min(lim, s);
        }
        bool found = false;
        for (int it = 0; it < 200; ++it) {
            double x = well.x_min + sgn * step;
            if ((sgn < 0 && x <= lim) || (sgn > 0 && x >= lim)) {
                // approach the barrier: V blows up there if it is a pole
                double frac = 0.5;
                for (int j = 0; j < 60; ++j) {
                    x = lim + (prev - lim) * frac;
                    double v;
                    try {
                        v = p.eval(x);
                    } catch (const DomainError&) {
                        break;
                    }
                    if (!std::isfinite(v) || v >= E) break;
                    prev = x;
                    frac *= 0.5;
                }
                double vx;
                try {
                    vx = p.eval(x);
                } catch (const DomainError&) {
                    vx = -1e308;
                }
                if (!(std::isfinite(vx) && vx >= E))
                    throw DomainError("unbounded motion at this energy");
                found = true;
            } else {
                double v = p.eval(x);
                if (v >= E) found = true;
            }
            if (found) {
                double r = refine_root(p, E, prev, x);
                (dir == 0 ? tp.xl : tp.xr) = r;
                break;
            }
            prev = x;
            step *= 1.6;
        }
        if (!found) throw DomainError("unbounded motion at this energy");
    }
    return tp;
}

// ---------------------------------------------------------------- periods

// integrand of 2 int dx/sqrt(2(E-V)) after x = mid + half*sin(theta);
// near the endpoints E-V is replaced by its linearization in the
// theta-accurate endpoint distance to dodge cancellation
namespace {

struct PeriodIntegrand {
    const Potential1D& p;
    double E, mid, half, dvl, dvr;  // |V'| at xl, xr

    double operator()(double theta) const {
        double s = std::sin(theta), c = std::cos(theta);
        double x = mid + half * s;
        double d = E - p.eval(x);
        double lim = 1e-11 * (1 + std::fabs(E));
        if (d < lim) {
            // 1 -+ sin = 2 sin^2(pi/4 -+ theta/2), exact in theta
            double sr = std::sin(M_PI / 4 - theta / 2);
            double sl = std::sin(M_PI / 4 + theta / 2);
            double dist_r = 2 * half * sr * sr;
            double dist_l = 2 * half * sl * sl;
            d = std::min(dvr * dist_r, dvl * dist_l);
            if (d <= 0) d = lim;
        }
        return half * c / std::sqrt(2 * d);
    }
};

}  // namespace

static double period_quad_core(const Potential1D& p, double E,
                               const TurningPoints& tp, double rel_tol,
                               int n_max) {
    double mid = 0.5 * (tp.xl + tp.xr), half = 0.5 * (tp.xr - tp.xl);
    PeriodIntegrand f{p, E, mid, half, std::fabs(p.deriv(tp.xl)),
                      std::fabs(p.deriv(tp.xr))};
    auto r = numerics::integrate_gl_doubling(
        [&](double th) { return f(th); }, -M_PI / 2, M_PI / 2, rel_tol, 16,
        n_max);
    double T = 2 * r.value;
    if (!r.converged && r.abs_err > 1e-8 * std::fabs(T))
        throw NumericsError("period quadrature did not converge (estimate " +
                            std::to_string(r.abs_err / std::fabs(T)) +
                            " relative)");
    return T;
}

double period_quadrature(const Potential1D& p, double E, const Well& well) {
    TurningPoints tp = find_turning_points(p, E, well);
    return period_quad_core(p, E, tp, 1e-9, 1024);
}

double period_by_flight(const Potential1D& p, double E, const Well& well,
                        double dt) {
    TurningPoints tp = find_turning_points(p, E, well);
    double t_hint = period_quad_core(p, E, tp, 1e-6, 256);  // step sizing only
    if (dt <= 0) dt = t_hint / 50000;
    double x = tp.xr, v = 0;
    double acc = -p.deriv(x);
    double t = 0;
    int crossings = 0;
    double t_max = 3 * t_hint;
    while (t < t_max) {
        double vh = v + 0.5 * dt * acc;
        double xn = x + dt * vh;
        double accn = -p.deriv(xn);
        double vn = vh + 0.5 * dt * accn;
        double tn = t + dt;
        if (v > 0 ? vn <= 0 : (vn > 0 && v <= 0)) {
            ++crossings;
            if (crossings == 2) {
                // cubic Hermite of p(t) on [t, tn]: roots by bisection
                double p0 = v, p1 = vn, m0 = acc * dt, m1 = accn * dt;
                auto herm = [&](double u) {
                    double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
                    double h10 = u * (1 - u) * (1 - u);
                    double h01 = u * u * (3 - 2 * u);
                    double h11 = u * u * (u - 1);
                    return h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1;
                };
                double a = 0, b = 1, fa = herm(0);
                for (int it = 0; it < 80; ++it) {
                    double m = 0.5 * (a + b), fm = herm(m);
                    if ((fm < 0) == (fa < 0)) {
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                    }
                }
                return t + 0.5 * (a + b) * dt;
            }
        }
        x = xn;
        v = vn;
        acc = accn;
        t = tn;
    }
    throw NumericsError("no return detected within three period estimates");
}

PeriodProfile isochrony_scan(const Potential1D& p, double e_lo, double e_hi,
                             int n_samples, double tol) {
    if (n_samples < 2) throw DomainError("isochrony_scan: need >= 2 samples");
    PeriodProfile prof;
    prof.tol = tol;
    Well well = find_well(p);
    for (int i = 0; i < n_samples; ++i) {
        double E = e_lo + (e_hi - e_lo) * i / (n_samples - 1);
        try {
            prof.samples.push_back({E, period_quadrature(p, E, well)});
        } catch (const std::exception&) {
            prof.failed_energies.push_back(E);
        }
    }
    if (prof.samples.size() < 2) {
        prof.verdict = Verdict::indeterminate;
        return prof;
    }
    std::vector<double> ts;
    for (auto& s : prof.samples) ts.push_back(s.period);
    std::sort(ts.begin(), ts.end());
    prof.median = ts[ts.size() / 2];
    prof.spread = ts.back() - ts.front();
    if (!prof.failed_energies.empty())
        prof.verdict = Verdict::indeterminate;
    else if (prof.spread <= tol * prof.median)
        prof.verdict = Verdict::isochronous;
    else
        prof.verdict = Verdict::not_isochronous;
    return prof;
}

std::optional<numerics::Ratio> commensurability(double ta, double tb,
                                                double tol, long long max_den) {
    if (!(ta > 0) || !(tb > 0))
        throw DomainError("commensurability: periods must be positive");
    return numerics::rational_approx(ta / tb, tol, max_den);
}

// ---------------------------------------------------------------- dynamics

double total_energy(const Potential1D& pa, const Potential1D* pb,
                    const State& s) {
    double e = 0.5 * s[1] * s[1] + pa.eval(s[0]);
    if (pb) e += 0.5 * s[3] * s[3] + pb->eval(s[2]);
    return e;
}

Trajectory integrate_trajectory(const Potential1D& pa, const Potential1D* pb,
                                const State& s0, double t_end, double dt) {
    if (!(dt > 0) || !(t_end > 0))
        throw DomainError("integrate_trajectory: need positive dt and t_end");
    long long n = (long long)std::llround(t_end / dt);
    if (n < 1) n = 1;
    Trajectory tr;
    tr.n_axes = pb ? 2 : 1;
    tr.dt = dt;
    tr.t.reserve(n + 1);
    tr.s.reserve(n + 1);
    std::array<const Potential1D*, 2> pot{&pa, pb};
    std::array<double, 2> guard{};
    for (int a = 0; a < tr.n_axes; ++a)
        guard[a] = 1e-6 * (1 + std::fabs(s0[2 * a]));
    auto check = [&](int axis, double x) {
        const Potential1D* p = pot[axis];
        if (!(x > p->domain_lo && x < p->domain_hi))
            throw DomainError("trajectory left the domain");
        for (double s : p->singularities)
            if (std::fabs(x - s) < guard[axis])
                throw DomainError("trajectory within pole guard distance");
    };
    State s = s0;
    std::array<double, 2> acc{};
    for (int a = 0; a < tr.n_axes; ++a) {
        check(a, s[2 * a]);
        acc[a] = -pot[a]->deriv(s[2 * a]);
    }
    double e0 = total_energy(pa, pb, s);
    tr.t.push_back(0);
    tr.s.push_back(s);
    double drift = 0;
    for (long long i = 1; i <= n; ++i) {
        for (int a = 0; a < tr.n_axes; ++a) {
            double vh = s[2 * a + 1] + 0.5 * dt * acc[a];
            double xn = s[2 * a] + dt * vh;
            if (!std::isfinite(xn))
                throw NumericsError("trajectory diverged (non-finite state)");
            check(a, xn);
            double an = -pot[a]->deriv(xn);
            s[2 * a] = xn;
            s[2 * a + 1] = vh + 0.5 * dt * an;
            acc[a] = an;
        }
        tr.t.push_back(i * dt);
        tr.s.push_back(s);
        double e = total_energy(pa, pb, s);
        drift = std::max(drift, std::fabs(e - e0));
    }
    tr.energy_drift = drift;
    return tr;
}

std::optional<ClosedOrbit> closed_orbit_check(const Trajectory& traj,
                                              double tol) {
    std::size_t n = traj.s.size();
    if (n < 8) throw DomainError("closed_orbit_check: trajectory too short");
    int nc = traj.n_axes * 2;
    // per-component rms scales
    std::array<double, 4> scale{};
    for (int c = 0; c < nc; ++c) {
        double s2 = 0;
        for (const auto& st : traj.s) s2 += st[c] * st[c];
        scale[c] = std::max(std::sqrt(s2 / n), 1e-12);
    }
    const State& s0 = traj.s[0];
    auto dist = [&](std::size_t k) {
        double d2 = 0;
        for (int c = 0; c < nc; ++c) {
            double d = (traj.s[k][c] - s0[c]) / scale[c];
            d2 += d * d;
        }
        return std::sqrt(d2);
    };
    // must leave the neighborhood before a recurrence counts
    double leave = std::max(10 * tol, 1e-3);
    std::size_t k0 = 0;
    while (k0 < n && dist(k0) < leave) ++k0;
    if (k0 == n) return std::nullopt;  // never left: degenerate input
    double dp = dist(k0), dc = k0 + 1 < n ? dist(k0 + 1) : dp;
    for (std::size_t k = k0 + 1; k + 1 < n; ++k) {
        double dn = dist(k + 1);
        if (dc < dp && dc <= dn && dc < tol) {
            // parabola through (t_{k-1},d_{k-1}),(t_k,d_k),(t_{k+1},d_{k+1})
            double denom = dp - 2 * dc + dn;
            double shift = denom > 0 ? 0.5 * (dp - dn) / denom : 0;
            double dmin = denom > 0 ? dc - 0.25 * (dp - dn) * shift : dc;
            return ClosedOrbit{traj.t[k] + shift * traj.dt, dmin};
        }
        dp = dc;
        dc = dn;
    }
    return std::nullopt;
}

}  // namespace classical
}  // namespace isolab
