#include "isolab/quantum.hpp"

#include <algorithm>
#include <cmath>

#include "isolab/errors.hpp"

namespace isolab {
namespace quantum {

// ---------------------------------------------------------------- assembly

static GridOperator assemble(const std::function<double(double)>& v,
                             const std::vector<double>& sing, double hbar,
                             const Grid& g, const BranchBC& bc) {
    if (g.n < 64) throw DomainError("grid: need at least 64 nodes");
    if (!(g.x_hi > g.x_lo)) throw DomainError("grid: empty interval");
    GridOperator op;
    op.grid = g;
    op.bc = bc;
    op.hbar = hbar;
    if (!bc.enabled) {
        double h = g.h();
        op.h = h;
        for (double s : sing)
            if (s > g.x_lo + 0.5 * h && s < g.x_hi - 0.5 * h)
                throw DomainError("grid crosses a potential pole at x=" +
                                  std::to_string(s));
        int m = g.n - 2;  // interior unknowns
        op.x.resize(m);
        op.diag.resize(m);
        op.off.assign(m - 1, -hbar * hbar / (2 * h * h));
        for (int i = 0; i < m; ++i) {
            double x = g.x_lo + (i + 1) * h;
            op.x[i] = x;
            op.diag[i] = hbar * hbar / (h * h) + v(x);
        }
        return op;
    }
    // singular-weight finite-volume scheme, pole pinned at x_lo:
    // psi ~ (x-x_lo)^s, w = (x-x_lo)^(2s), half-integer nodes, natural
    // zero-flux at the origin face, V_reg = V - (hbar^2/2) s(s-1)/(x-x_lo)^2
    double h = (g.x_hi - g.x_lo) / g.n;
    op.h = h;
    for (double s : sing)
        if (s > g.x_lo + 0.25 * h && s < g.x_hi - 0.25 * h)
            throw DomainError("grid crosses a potential pole at x=" +
                              std::to_string(s));
    double s = bc.s;
    double bcoef = 0.5 * hbar * hbar * s * (s - 1);
    int m = g.n;
    op.x.resize(m);
    op.diag.resize(m);
    op.off.resize(m - 1);
    double k = hbar * hbar / (2 * h * h);
    auto w = [&](double r) { return std::pow(r, 2 * s); };
    for (int i = 0; i < m; ++i) {
        double r = (i + 0.5) * h;  // distance to the pole
        double x = g.x_lo + r;
        op.x[i] = x;
        double wp = w(r + 0.5 * h);
        double wm = i > 0 ? w(r - 0.5 * h) : 0;  // zero flux at the origin
        op.diag[i] = k * (wp + wm) / w(r) + v(x) - bcoef / (r * r);
        if (i + 1 < m)
            op.off[i] = -k * wp / std::sqrt(w(r) * w(r + h));
    }
    return op;
}

GridOperator build_hamiltonian(const Potential1D& p, const Grid& g,
                               const BranchBC& bc) {
    return assemble([&p](double x) { return p.eval(x); }, p.singularities,
                    p.hbar, g, bc);
}

GridOperator build_hamiltonian_fn(const std::function<double(double)>& v,
                                  const std::vector<double>& singularities,
                                  double hbar, const Grid& g,
                                  const BranchBC& bc) {
    return assemble(v, singularities, hbar, g, bc);
}

std::vector<double> GridOperator::apply(const std::vector<double>& v) const {
    std::size_t m = diag.size();
    if (v.size() != m) throw DomainError("apply: size mismatch");
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        double s = diag[i] * v[i];
        if (i > 0) s += off[i - 1] * v[i - 1];
        if (i + 1 < m) s += off[i] * v[i + 1];
        out[i] = s;
    }
    return out;
}

// ---------------------------------------------------------------- eigensolve

// eigenvalues of T - sigma below zero, by the LDL^T sign count
static int sturm_count(const std::vector<double>& d,
                       const std::vector<double>& e, double sigma) {
    int count = 0;
    double q = d[0] - sigma;
    if (q < 0) ++count;
    for (std::size_t i = 1; i < d.size(); ++i) {
        double den = q;
        if (std::fabs(den) < 1e-300) den = den < 0 ? -1e-300 : 1e-300;
        q = d[i] - sigma - e[i - 1] * e[i - 1] / den;
        if (q < 0) ++count;
    }
    return count;
}

// deterministic pseudo-random start vector for inverse iteration
static std::vector<double> start_vector(std::size_t m, unsigned seed) {
    std::vector<double> v(m);
    unsigned state = 0x9e3779b9u + seed * 0x85ebca6bu;
    for (std::size_t i = 0; i < m; ++i) {
        state ^= state << 13;
        state ^= state >> 17;
        state ^= state << 5;
        v[i] = (state & 0xffffff) / double(0x1000000) - 0.5;
    }
    return v;
}

// solve (T - sigma) u = rhs in place: LU with partial pivoting, which brings
// in a second superdiagonal (gttrf/gttrs scheme)
static void tridiag_solve(const std::vector<double>& d,
                          const std::vector<double>& e, double sigma,
                          std::vector<double>& u) {
    std::size_t m = d.size();
    std::vector<double> dl(e), dd(m), du(e), du2(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) dd[i] = d[i] - sigma;
    std::vector<char> piv(m, 0);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        if (std::fabs(dd[i]) >= std::fabs(dl[i])) {
            if (dd[i] == 0) dd[i] = 1e-300;
            double f = dl[i] / dd[i];
            dl[i] = f;
            dd[i + 1] -= f * du[i];
        } else {
            piv[i] = 1;
            double f = dd[i] / dl[i];
            dd[i] = dl[i];
            dl[i] = f;
            double tmp = du[i];
            du[i] = dd[i + 1];
            dd[i + 1] = tmp - f * dd[i + 1];
            if (i + 2 < m) {
                du2[i] = du[i + 1];
                du[i + 1] = -f * du[i + 1];
            }
        }
    }
    if (dd[m - 1] == 0) dd[m - 1] = 1e-300;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        if (!piv[i]) {
            u[i + 1] -= dl[i] * u[i];
        } else {
            double tmp = u[i];
            u[i] = u[i + 1];
            u[i + 1] = tmp - dl[i] * u[i];
        }
    }
    u[m - 1] /= dd[m - 1];
    if (m >= 2)
        u[m - 2] = (u[m - 2] - du[m - 2] * u[m - 1]) / dd[m - 2];
    for (std::size_t ii = m; ii-- > 2;) {
        std::size_t i = ii - 2;
        u[i] = (u[i] - du[i] * u[i + 1] - du2[i] * u[i + 2]) / dd[i];
    }
}

EigenPairs eigensolve(const GridOperator& op, int k) {
    const std::vector<double>& d = op.diag;
    const std::vector<double>& e = op.off;
    std::size_t m = d.size();
    if (k < 1 || k > 20) throw DomainError("eigensolve: k must be in [1,20]");
    if ((std::size_t)k > m) throw DomainError("eigensolve: k exceeds matrix");
    // Gershgorin bounds
    double lo = d[0], hi = d[0];
    for (std::size_t i = 0; i < m; ++i) {
        double r = (i > 0 ? std::fabs(e[i - 1]) : 0) +
                   (i + 1 < m ? std::fabs(e[i]) : 0);
        lo = std::min(lo, d[i] - r);
        hi = std::max(hi, d[i] + r);
    }
    double span = hi - lo;
    EigenPairs out;
    for (int j = 0; j < k; ++j) {
        // bisect for the boundary between <=j and >j eigenvalues below
        double a = lo, b = hi;
        while (b - a > 1e-14 * span + 1e-14 * (std::fabs(a) + std::fabs(b))) {
            double mid = 0.5 * (a + b);
            if (sturm_count(d, e, mid) > j)
                b = mid;
            else
                a = mid;
        }
        double lambda = 0.5 * (a + b);
        // inverse iteration at a slightly separated shift
        std::vector<double> v = start_vector(m, (unsigned)j);
        double shift = lambda + 1e-11 * span / m;
        for (int it = 0; it < 5; ++it) {
            tridiag_solve(d, e, shift, v);
            // re-orthogonalize inside near-degenerate clusters
            for (int jj = j - 1; jj >= 0; --jj) {
                if (std::fabs(out.values[jj] - lambda) > 1e-6 * (1 + span))
                    break;
                double dot = 0;
                for (std::size_t i = 0; i < m; ++i)
                    dot += v[i] * out.vectors[jj][i];
                // stored vectors carry 2-norm 1/sqrt(h)
                for (std::size_t i = 0; i < m; ++i)
                    v[i] -= dot * op.h * out.vectors[jj][i];
            }
            double norm = 0;
            for (double vv : v) norm += vv * vv;
            norm = std::sqrt(norm);
            for (double& vv : v) vv /= norm;
        }
        // Rayleigh polish of the eigenvalue
        std::vector<double> hv = op.apply(v);
        double rq = 0;
        for (std::size_t i = 0; i < m; ++i) rq += v[i] * hv[i];
        lambda = rq;
        double res = 0;
        for (std::size_t i = 0; i < m; ++i) {
            double r = hv[i] - lambda * v[i];
            res += r * r;
        }
        res = std::sqrt(res);
        if (res > 1e-8)
            throw NumericsError("eigenpair residual " + std::to_string(res) +
                                " exceeds 1e-8");
        // deterministic orientation and trapezoid normalization
        std::size_t imax = 0;
        for (std::size_t i = 1; i < m; ++i)
            if (std::fabs(v[i]) > std::fabs(v[imax])) imax = i;
        double sgn = v[imax] < 0 ? -1.0 : 1.0;
        double scale = sgn / std::sqrt(op.h);
        for (double& vv : v) vv *= scale;
        out.values.push_back(lambda);
        out.vectors.push_back(std::move(v));
        out.residuals.push_back(res);
    }
    return out;
}

// ---------------------------------------------------------------- formula

SpectrumInfo isotonic_spectrum_formula(double a, double b, double hbar,
                                       int kmax) {
    if (!(a > 0)) throw DomainError("spectrum formula: need a > 0");
    if (!(b > -hbar * hbar / 8))
        throw DomainError(
            "spectrum formula: b <= -hbar^2/8 is below the admissible range");
    SpectrumInfo s;
    s.omega = std::sqrt(2 * a);
    s.nu = 0.5 * std::sqrt(1 + 8 * b / (hbar * hbar));
    bool minus_exists = s.nu < 1;  // b < 3 hbar^2/8
    for (int k = 0; k < kmax; ++k) {
        s.plus.push_back(s.omega * hbar * (2 * k + 1 + s.nu));
        if (minus_exists)
            s.minus.push_back(s.omega * hbar * (2 * k + 1 - s.nu));
    }
    if (b == 0)
        s.regime = SpectrumRegime::plain_harmonic;
    else if (minus_exists)
        s.regime = SpectrumRegime::paired;
    else
        s.regime = SpectrumRegime::equidistant;
    return s;
}

// ---------------------------------------------------------------- ladders

LadderOperator make_ladder(double a, double b, double hbar, bool raising) {
    if (!(a > 0) || b < 0) throw DomainError("make_ladder: need a>0, b>=0");
    double omega = std::sqrt(2 * a);
    double nu = 0.5 * std::sqrt(1 + 8 * b / (hbar * hbar));
    double c = hbar * (nu - 0.5);
    double g = raising ? -omega : omega;  // hbar d/dx + g x +- c/x
    LadderOperator L;
    L.hbar = hbar;
    L.scale = 0.5;
    L.lambda = (raising ? 2 : -2) * omega * hbar;
    if (b == 0) {
        L.factors.push_back({1.0, [g](double x) { return g * x; }});
        L.factors.push_back({1.0, [g](double x) { return g * x; }});
    } else {
        L.factors.push_back({1.0, [g, c](double x) { return g * x - c / x; }});
        L.factors.push_back({1.0, [g, c](double x) { return g * x + c / x; }});
    }
    return L;
}

LadderOperator harmonic_ladder(double omega, double hbar, bool raising) {
    LadderOperator L;
    L.hbar = hbar;
    L.scale = 1.0;
    L.lambda = (raising ? 1 : -1) * omega * hbar;
    double dc = raising ? -1 / std::sqrt(2.0) : 1 / std::sqrt(2.0);
    double s = 1 / std::sqrt(2.0);
    L.factors.push_back({dc, [omega, s](double x) { return s * omega * x; }});
    return L;
}

std::vector<double> ladder_apply(const LadderOperator& L,
                                 const std::vector<double>& xs,
                                 const std::vector<double>& psi) {
    if (xs.size() != psi.size() || xs.size() < 3)
        throw DomainError("ladder_apply: bad sizes");
    std::size_t m = xs.size();
    double h = xs[1] - xs[0];
    std::vector<double> cur = psi, nxt(m);
    for (auto it = L.factors.rbegin(); it != L.factors.rend(); ++it) {
        for (std::size_t i = 0; i < m; ++i) {
            double left = i > 0 ? cur[i - 1] : 0;
            double right = i + 1 < m ? cur[i + 1] : 0;
            double dpsi = (right - left) / (2 * h);
            nxt[i] = it->d_coef * L.hbar * dpsi + it->a0(xs[i]) * cur[i];
        }
        cur.swap(nxt);
    }
    for (double& v : cur) v *= L.scale;
    return cur;
}

CommutatorFit commutator_residual(const GridOperator& H,
                                  const LadderOperator& L,
                                  const std::vector<std::vector<double>>& psi) {
    if (psi.empty()) throw DomainError("commutator_residual: no vectors");
    std::size_t m = H.diag.size();
    std::size_t trim = m / 10;
    std::size_t a = trim, b = m - trim;
    double num = 0, den = 0;
    std::vector<std::vector<double>> cs, ls;
    for (const auto& v : psi) {
        std::vector<double> lv = ladder_apply(L, H.x, v);
        std::vector<double> hlv = H.apply(lv);
        std::vector<double> lhv = ladder_apply(L, H.x, H.apply(v));
        std::vector<double> c(m);
        for (std::size_t i = 0; i < m; ++i) c[i] = hlv[i] - lhv[i];
        for (std::size_t i = a; i < b; ++i) {
            num += c[i] * lv[i];
            den += lv[i] * lv[i];
        }
        cs.push_back(std::move(c));
        ls.push_back(std::move(lv));
    }
    if (den == 0) throw NumericsError("commutator_residual: L kills all states");
    CommutatorFit fit;
    fit.lambda_fit = num / den;
    double l2max = 0;
    std::vector<double> l2s(psi.size(), 0.0);
    for (std::size_t j = 0; j < psi.size(); ++j) {
        for (std::size_t i = a; i < b; ++i) l2s[j] += ls[j][i] * ls[j][i];
        l2max = std::max(l2max, l2s[j]);
    }
    double worst = 0;
    for (std::size_t j = 0; j < psi.size(); ++j) {
        // annihilated states (|L psi| ~ 0, e.g. the bottom of a lowering
        // ladder) carry no scale for a relative residual; leave them out.
        // discretization leaves them O(h^2) instead of zero, hence the
        // generous cutoff
        if (l2s[j] <= 1e-6 * l2max) continue;
        double r2 = 0;
        for (std::size_t i = a; i < b; ++i) {
            double r = cs[j][i] - fit.lambda_fit * ls[j][i];
            r2 += r * r;
        }
        worst = std::max(worst, std::sqrt(r2 / l2s[j]));
    }
    fit.residual = worst;
    return fit;
}

LadderStructure analyze_ladder_structure(const std::vector<double>& levels,
                                         double lambda, double tol) {
    double step = std::fabs(lambda);
    if (!(step > 0)) throw DomainError("ladder structure: need lambda != 0");
    LadderStructure out;
    out.lambda = lambda;
    out.tol = tol;
    std::vector<int> order(levels.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = (int)i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return levels[a] < levels[b]; });
    std::vector<bool> used(levels.size(), false);
    for (int seed : order) {
        if (used[seed]) continue;
        std::vector<int> chain{seed};
        used[seed] = true;
        double cur = levels[seed];
        for (;;) {
            int best = -1;
            double bestd = tol;
            for (int cand : order) {
                if (used[cand]) continue;
                double dd = std::fabs(levels[cand] - (cur + step));
                if (dd <= bestd) {
                    bestd = dd;
                    best = cand;
                }
            }
            if (best < 0) break;
            used[best] = true;
            chain.push_back(best);
            cur = levels[best];
        }
        if (chain.size() >= 2)
            out.chains.push_back(std::move(chain));
        else
            out.orphans.push_back(seed);
    }
    return out;
}

}  // namespace quantum
}  // namespace isolab
