#include "isolab/numerics.hpp"

#include <cmath>
#include <map>

#include "isolab/errors.hpp"

namespace isolab {
namespace numerics {

static GaussRule compute_gauss(int n) {
    GaussRule r;
    r.x.resize(n);
    r.w.resize(n);
    const double eps = 1e-15;
    int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Newton on P_n from the Chebyshev-like initial guess
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = 0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) * z * p1 - j * p2) / (j + 1);
            }
            pp = n * (z * p0 - p1) / (z * z - 1);
            double dz = p0 / pp;
            z -= dz;
            if (std::fabs(dz) < eps) break;
        }
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = 2.0 / ((1 - z * z) * pp * pp);
        r.w[n - 1 - i] = r.w[i];
    }
    return r;
}

const GaussRule& gauss_legendre(int n) {
    static std::map<int, GaussRule> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss(n)).first;
    return it->second;
}

double integrate_gl(const Fn& f, double a, double b, int n) {
    const GaussRule& r = gauss_legendre(n);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0;
    for (int i = 0; i < n; ++i) s += r.w[i] * f(mid + half * r.x[i]);
    return s * half;
}

QuadResult integrate_gl_doubling(const Fn& f, double a, double b,
                                 double rel_tol, int n0, int n_max,
                                 double abs_floor) {
    double prev = integrate_gl(f, a, b, n0);
    for (int n = 2 * n0; n <= n_max; n *= 2) {
        double cur = integrate_gl(f, a, b, n);
        double err = std::fabs(cur - prev);
        if (err <= rel_tol * std::fabs(cur) + abs_floor)
            return {cur, err, n, true};
        prev = cur;
    }
    return {prev, std::fabs(prev), n_max, false};
}

static double simpson(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4 * fm + fb);
}

static double adapt(const Fn& f, double a, double fa, double b, double fb,
                    double m, double fm, double whole, double rel_tol,
                    double abs_tol, int depth) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson(a, fa, m, fm, flm);
    double right = simpson(m, fm, b, fb, frm);
    double delta = left + right - whole;
    if (depth <= 0 ||
        std::fabs(delta) <= 15 * (rel_tol * std::fabs(left + right) + abs_tol))
        return left + right + delta / 15.0;
    return adapt(f, a, fa, m, fm, lm, flm, left, rel_tol, abs_tol / 2, depth - 1) +
           adapt(f, m, fm, b, fb, rm, frm, right, rel_tol, abs_tol / 2, depth - 1);
}

double integrate_adaptive(const Fn& f, double a, double b, double rel_tol,
                          double abs_tol, int max_depth) {
    if (a == b) return 0;
    double m = 0.5 * (a + b);
    double fa = f(a), fb = f(b), fm = f(m);
    double whole = simpson(a, fa, b, fb, fm);
    return adapt(f, a, fa, b, fb, m, fm, whole, rel_tol, abs_tol, max_depth);
}

double solve_bracketed(const Fn& f, const Fn* df, double lo, double hi,
                       double xtol, double ftol) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0) return lo;
    if (fhi == 0) return hi;
    if (flo * fhi > 0) throw NumericsError("solve_bracketed: no sign change");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double fmid = f(mid);
        if (fmid == 0 || hi - lo < xtol) {
            lo = hi = mid;
            flo = fmid;
            break;
        }
        if ((fmid < 0) == (flo < 0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
            fhi = fmid;
        }
        if (std::fabs(fmid) < ftol && hi - lo < 1e4 * xtol) break;
    }
    double x = 0.5 * (lo + hi);
    if (df) {
        // Newton polish, kept inside the bracket
        for (int it = 0; it < 8; ++it) {
            double fx = f(x), d = (*df)(x);
            if (d == 0) break;
            double step = fx / d;
            double xn = x - step;
            if (xn < lo || xn > hi) break;
            x = xn;
            if (std::fabs(step) < 1e-17 * (1 + std::fabs(x))) break;
        }
    }
    return x;
}

double extrapolate_to_zero(const std::vector<double>& xs,
                           const std::vector<double>& ys) {
    std::vector<double> p = ys;
    int n = (int)xs.size();
    for (int level = 1; level < n; ++level)
        for (int i = 0; i < n - level; ++i)
            p[i] = (xs[i + level] * p[i] - xs[i] * p[i + 1]) /
                   (xs[i + level] - xs[i]);
    return p[0];
}

std::optional<Ratio> rational_approx(double q, double tol, long long max_den) {
    if (!(q > 0) || !std::isfinite(q))
        throw DomainError("rational_approx: ratio must be positive and finite");
    bool flipped = q < 1;
    double v = flipped ? 1.0 / q : q;
    // continued-fraction convergents p_k/q_k of v
    long long p0 = 1, q0 = 0, p1 = (long long)std::floor(v), q1 = 1;
    double frac = v - std::floor(v);
    for (int k = 0; k < 64; ++k) {
        if (p1 > max_den || q1 > max_den) return std::nullopt;
        double target = flipped ? q : v;
        double mnum = flipped ? (double)q1 : (double)p1;
        double mden = flipped ? (double)p1 : (double)q1;
        if (mden > 0 && std::fabs(target - mnum / mden) <= tol) {
            Ratio r{(long long)mnum, (long long)mden};
            return r;
        }
        if (frac == 0) return std::nullopt;  // exact but outside tol
        double inv = 1.0 / frac;
        long long a = (long long)std::floor(inv);
        frac = inv - std::floor(inv);
        long long p2 = a * p1 + p0, q2 = a * q1 + q0;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    return std::nullopt;
}

}  // namespace numerics
}  // namespace isolab
