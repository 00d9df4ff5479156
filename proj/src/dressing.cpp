#include "isolab/dressing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "isolab/errors.hpp"
#include "isolab/families.hpp"
#include "isolab/numerics.hpp"

namespace isolab {
namespace dressing {

// ---------------------------------------------------------- superpotentials

double Superpotential::v_minus(double x) const {
    double wx = w(x);
    return 0.5 * (wx * wx - hbar * dw(x));
}

double Superpotential::v_plus(double x) const {
    double wx = w(x);
    return 0.5 * (wx * wx + hbar * dw(x));
}

Superpotential make_superpotential(const std::string& src,
                                   const std::map<std::string, double>& params,
                                   double hbar) {
    expr::NodePtr ast = expr::bind(expr::parse(src), params);
    for (const std::string& name : expr::free_params(ast))
        throw DomainError("parameter '" + name + "' has no value");
    expr::NodePtr d1 = expr::bind(expr::derivative(ast), {});
    Superpotential W;
    W.w = [ast](double x) { return expr::eval(ast, x); };
    W.dw = [d1](double x) { return expr::eval(d1, x); };
    W.poles = expr::find_singularities(ast, -64.0, 64.0);
    W.hbar = hbar;
    return W;
}

Superpotential superpotential_from_samples(const std::vector<double>& xs,
                                           const std::vector<double>& ws,
                                           double hbar,
                                           std::vector<double> poles) {
    if (xs.size() != ws.size() || xs.size() < 4)
        throw DomainError("superpotential samples: need >= 4 aligned nodes");
    auto nodes = std::make_shared<std::vector<double>>(xs);
    auto vals = std::make_shared<std::vector<double>>(ws);
    auto slopes = std::make_shared<std::vector<double>>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::size_t l = i > 0 ? i - 1 : 0;
        std::size_t r = i + 1 < xs.size() ? i + 1 : i;
        (*slopes)[i] = (ws[r] - ws[l]) / ((*nodes)[r] - (*nodes)[l]);
    }
    auto interp = [nodes](const std::shared_ptr<std::vector<double>>& ys,
                          double x) {
        const std::vector<double>& t = *nodes;
        if (x <= t.front()) return ys->front();
        if (x >= t.back()) return ys->back();
        std::size_t j =
            std::upper_bound(t.begin(), t.end(), x) - t.begin() - 1;
        double u = (x - t[j]) / (t[j + 1] - t[j]);
        return (1 - u) * (*ys)[j] + u * (*ys)[j + 1];
    };
    Superpotential W;
    W.w = [interp, vals](double x) { return interp(vals, x); };
    W.dw = [interp, slopes](double x) { return interp(slopes, x); };
    W.poles = std::move(poles);
    std::sort(W.poles.begin(), W.poles.end());
    W.hbar = hbar;
    return W;
}

// -------------------------------------------------------------- probe tools

// cos^8 window on (c-hw, c+hw), sup-normalized to 1; compactly supported
// with modest high derivatives, so probe error stays at the stencil's O(h^2)
static std::vector<double> sample_bump(const std::vector<double>& xs, double c,
                                       double hw) {
    std::vector<double> phi(xs.size(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double u = (xs[i] - c) / hw;
        if (u > -1 && u < 1) {
            double w = std::cos(0.5 * M_PI * u);
            double w2 = w * w;
            phi[i] = w2 * w2 * w2 * w2;
        }
    }
    return phi;
}

// centers/half-widths spread over the pole-free segments of [lo, hi], each
// probe kept clear of segment ends by 12% of the segment length
static std::vector<std::pair<double, double>> probe_layout(
    double lo, double hi, const std::vector<double>& poles, int count) {
    std::vector<double> cuts{lo};
    for (double p : poles)
        if (p > lo && p < hi) cuts.push_back(p);
    cuts.push_back(hi);
    std::vector<std::pair<double, double>> segs;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double a = cuts[i], b = cuts[i + 1];
        double pad = 0.12 * (b - a);
        if (b - a > 4 * pad) segs.emplace_back(a + pad, b - pad);
    }
    if (segs.empty()) throw DomainError("probe layout: no pole-free room");
    std::vector<int> per(segs.size(), 0);
    for (int k = 0; k < count; ++k) ++per[k % segs.size()];
    std::vector<std::pair<double, double>> out;
    for (std::size_t s = 0; s < segs.size(); ++s) {
        auto [a, b] = segs[s];
        double hw = 0.38 * (b - a);
        for (int j = 0; j < per[s]; ++j) {
            double c = a + (b - a) * (j + 1.0) / (per[s] + 1.0);
            c = std::min(std::max(c, a + hw), b - hw);
            out.emplace_back(c, hw);
        }
    }
    return out;
}

// (sgn hbar d/dx + W) psi / sqrt2 with centered differences, zero ghosts
static std::vector<double> factor_apply(const Superpotential& W, int sgn,
                                        const std::vector<double>& xs, double h,
                                        const std::vector<double>& psi) {
    std::size_t m = xs.size();
    std::vector<double> out(m);
    double inv = 1.0 / std::sqrt(2.0);
    for (std::size_t i = 0; i < m; ++i) {
        double up = i + 1 < m ? psi[i + 1] : 0.0;
        double um = i > 0 ? psi[i - 1] : 0.0;
        double d = (up - um) / (2 * h);
        out[i] = inv * (sgn * W.hbar * d + W.w(xs[i]) * psi[i]);
    }
    return out;
}

static double sup_dev(const std::vector<double>& a,
                      const std::vector<double>& b, std::size_t trim) {
    double worst = 0;
    for (std::size_t i = trim; i + trim < a.size(); ++i)
        worst = std::max(worst, std::fabs(a[i] - b[i]));
    return worst;
}

// ----------------------------------------------------------- factorization

static double fit_shift(const Superpotential& W, bool plus,
                        const std::vector<double>& xs,
                        const Potential1D* ref) {
    if (!ref) return std::numeric_limits<double>::quiet_NaN();
    double margin = 0;
    for (double p : W.poles) margin = std::max(margin, 0.3 * (1 + std::fabs(p)));
    for (double p : ref->singularities)
        margin = std::max(margin, 0.3 * (1 + std::fabs(p)));
    double sum = 0;
    long cnt = 0;
    for (double x : xs) {
        if (x <= ref->domain_lo || x >= ref->domain_hi) continue;
        bool near = false;
        for (double p : W.poles)
            if (std::fabs(x - p) < margin) near = true;
        for (double p : ref->singularities)
            if (std::fabs(x - p) < margin) near = true;
        if (near) continue;
        double v = plus ? W.v_plus(x) : W.v_minus(x);
        sum += v - ref->eval(x);
        ++cnt;
    }
    if (cnt < 8) throw DomainError("shift fit: too few nodes clear of poles");
    return sum / cnt;
}

DressingPair build_pair(const Superpotential& W, const Grid& g,
                        const Potential1D* ref_minus,
                        const Potential1D* ref_plus) {
    DressingPair dp;
    dp.W = W;
    dp.H_minus = quantum::build_hamiltonian_fn(
        [&W](double x) { return W.v_minus(x); }, W.poles, W.hbar, g, {});
    dp.H_plus = quantum::build_hamiltonian_fn(
        [&W](double x) { return W.v_plus(x); }, W.poles, W.hbar, g, {});
    for (double d : dp.H_minus.diag)
        if (!std::isfinite(d))
            throw DomainError("superpotential pole on a grid node");
    for (double d : dp.H_plus.diag)
        if (!std::isfinite(d))
            throw DomainError("superpotential pole on a grid node");
    dp.c_minus = fit_shift(W, false, dp.H_minus.x, ref_minus);
    dp.c_plus = fit_shift(W, true, dp.H_plus.x, ref_plus);
    return dp;
}

double factorization_residual(const DressingPair& dp, int probes) {
    if (probes < 4)
        throw DomainError("factorization residual: need >= 4 probes");
    const std::vector<double>& xs = dp.H_minus.x;
    double h = dp.H_minus.h;
    double worst = 0;
    for (auto [c, hw] : probe_layout(xs.front(), xs.back(), dp.W.poles,
                                     probes)) {
        std::vector<double> phi = sample_bump(xs, c, hw);
        std::vector<double> lo =
            factor_apply(dp.W, -1, xs, h, factor_apply(dp.W, +1, xs, h, phi));
        worst = std::max(worst, sup_dev(lo, dp.H_minus.apply(phi), 2));
        std::vector<double> hi =
            factor_apply(dp.W, +1, xs, h, factor_apply(dp.W, -1, xs, h, phi));
        worst = std::max(worst, sup_dev(hi, dp.H_plus.apply(phi), 2));
    }
    return worst;
}

// ----------------------------------------------------------------- chains

ChainReport chain_verify(const Chain& c, const Grid& g) {
    std::size_t N = c.links.size();
    if (N == 0 || c.constants.size() != N)
        throw DomainError("chain: links and constants must align");
    double h = g.h();
    std::vector<double> xs(g.n - 2);
    for (std::size_t i = 0; i < xs.size(); ++i)
        xs[i] = g.x_lo + (i + 1) * h;
    std::vector<double> all_poles;
    for (const Superpotential& W : c.links)
        all_poles.insert(all_poles.end(), W.poles.begin(), W.poles.end());
    std::sort(all_poles.begin(), all_poles.end());
    auto layout = probe_layout(xs.front(), xs.back(), all_poles, 5);
    ChainReport rep;
    rep.periodic = c.periodic;
    std::size_t checked = c.periodic ? N : N - 1;
    for (std::size_t n = 0; n < checked; ++n) {
        const Superpotential& Wn = c.links[n];
        const Superpotential& Wm = c.links[(n + 1) % N];
        double worst = 0;
        for (auto [ctr, hw] : layout) {
            std::vector<double> phi = sample_bump(xs, ctr, hw);
            std::vector<double> lhs =
                factor_apply(Wn, +1, xs, h, factor_apply(Wn, -1, xs, h, phi));
            std::vector<double> rhs =
                factor_apply(Wm, -1, xs, h, factor_apply(Wm, +1, xs, h, phi));
            for (std::size_t i = 0; i < rhs.size(); ++i)
                rhs[i] += c.constants[n] * phi[i];
            worst = std::max(worst, sup_dev(lhs, rhs, 2));
        }
        rep.residuals.push_back(worst);
    }
    if (c.periodic) {
        const Superpotential& WN = c.links[N - 1];
        const Superpotential& W1 = c.links[0];
        double margin = 0;
        for (double p : all_poles)
            margin = std::max(margin, 0.1 * (1 + std::fabs(p)));
        double defect = 0;
        for (double x : xs) {
            bool near = false;
            for (double p : all_poles)
                if (std::fabs(x - p) < margin) near = true;
            if (near) continue;
            defect = std::max(defect, std::fabs(WN.v_plus(x) - W1.v_minus(x) -
                                                c.constants[N - 1]));
        }
        rep.periodicity_defect = defect;
    }
    return rep;
}

// ------------------------------------------------------------- intertwining

static double commutator_probe_residual(
    const std::function<std::vector<double>(const std::vector<double>&)>& A,
    const GridAction& B, const std::vector<double>& phi) {
    std::vector<double> ab = A(B(phi));
    std::vector<double> ba = B(A(phi));
    std::size_t trim = std::max<std::size_t>(5, phi.size() / 10);
    double num = 0, den = 1e-12;
    for (std::size_t i = trim; i + trim < phi.size(); ++i) {
        num = std::max(num, std::fabs(ab[i] - ba[i]));
        den = std::max(den, std::max(std::fabs(ab[i]), std::fabs(ba[i])));
    }
    return num / den;
}

IntertwinedOperator intertwine_integral(const GridAction& Q,
                                        const GridOperator& H_in,
                                        const GridOperator& H_out,
                                        const Superpotential& W, double tol,
                                        int probes) {
    if (H_in.x.size() != H_out.x.size() ||
        std::fabs(H_in.h - H_out.h) > 1e-15)
        throw DomainError("intertwine: operators live on different grids");
    std::vector<double> xs = H_in.x;
    double h = H_in.h;
    auto layout = probe_layout(xs.front(), xs.back(), W.poles, probes);
    auto apply_in = [&H_in](const std::vector<double>& v) {
        return H_in.apply(v);
    };
    double in_res = 0;
    for (auto [c, hw] : layout)
        in_res = std::max(
            in_res, commutator_probe_residual(apply_in, Q, sample_bump(xs, c, hw)));
    if (in_res > tol)
        throw DomainError(
            "intertwine: Q fails to commute with the input Hamiltonian");
    Superpotential Wc = W;
    GridAction M = [Wc, xs, h, Q](const std::vector<double>& psi) {
        return factor_apply(Wc, +1, xs, h,
                            Q(factor_apply(Wc, -1, xs, h, psi)));
    };
    auto apply_out = [&H_out](const std::vector<double>& v) {
        return H_out.apply(v);
    };
    double out_res = 0;
    for (auto [c, hw] : layout)
        out_res = std::max(
            out_res, commutator_probe_residual(apply_out, M, sample_bump(xs, c, hw)));
    IntertwinedOperator op;
    op.apply = M;
    op.input_residual = in_res;
    op.output_residual = out_res;
    return op;
}

// -------------------------------------------------------- double-pole well

Q17Family q17_build(double alpha_sq, double hbar) {
    if (alpha_sq == 0) throw DomainError("alpha_sq must be nonzero");
    Q17Family f;
    f.alpha_sq = alpha_sq;
    f.hbar = hbar;
    f.smooth = alpha_sq < 0;
    f.V = families::double_pole(alpha_sq, hbar);
    f.c_minus = -5 * hbar * hbar / (4 * alpha_sq);
    f.c_plus = -3 * hbar * hbar / (4 * alpha_sq);
    if (!f.smooth) {
        double al = std::sqrt(alpha_sq);
        std::map<std::string, double> par{
            {"hb", hbar}, {"as", alpha_sq}, {"al", al}, {"pi", M_PI}};
        f.W = make_superpotential("hb*(x/(2*as) - 2*x/(x^2-as))", par, hbar);
        // second solution from reduction of order; erf carries the integral
        f.zero_modes.push_back(
            expr::make_function("exp(x^2/(4*as))/(x^2-as)", par));
        f.zero_modes.push_back(expr::make_function(
            "(sqrt(2*pi)*al^5*erf(x/(sqrt(2)*al))"
            " - as*x*(x^2+as)*exp(-x^2/(2*as)))"
            " * exp(x^2/(4*as))/(x^2-as)",
            par));
    } else {
        std::map<std::string, double> par{{"hb", hbar}, {"bs", -alpha_sq}};
        f.W = make_superpotential("-hb*(x/(2*bs) + 2*x/(x^2+bs))", par, hbar);
        f.zero_modes.push_back(
            expr::make_function("exp(-x^2/(4*bs))/(x^2+bs)", par));
    }
    return f;
}

// -------------------------------------------------------- indicial analysis

std::pair<double, double> indicial_exponents(const Potential1D& p, double pole,
                                             double hbar) {
    double scale = 1 + std::fabs(pole);
    std::vector<double> ds, gs;
    double gmax = 0;
    for (int j = 0; j < 7; ++j) {
        double d = 1e-2 * scale / (1 << j);
        double g = d * d * p.eval(pole + d);
        ds.push_back(d);
        gs.push_back(g);
        gmax = std::max(gmax, std::fabs(g));
    }
    // order > 2 shows as monotone growth of d^2 V under halving
    bool growing = true;
    for (std::size_t j = gs.size() - 3; j + 1 < gs.size(); ++j)
        if (!(std::fabs(gs[j + 1]) > 1.8 * std::fabs(gs[j]))) growing = false;
    if (growing)
        throw DomainError("indicial fit: pole order exceeds 2");
    double c = numerics::extrapolate_to_zero(ds, gs);
    if (std::fabs(c) < 1e-6 * std::max(1.0, gmax) || gmax < 1e-12)
        throw DomainError("indicial fit: no second-order pole found");
    double disc = 1 + 8 * c / (hbar * hbar);
    if (disc < 0)
        throw DomainError("indicial exponents are not real (c < -hbar^2/8)");
    double root = std::sqrt(disc);
    return {0.5 * (1 + root), 0.5 * (1 - root)};
}

// ----------------------------------------------------------- normalizability

// integral of psi^2 over [-L, L] minus eps-balls around the poles
static double window_integral(const std::function<double(double)>& psi,
                              const std::vector<double>& poles, double L,
                              double eps) {
    auto f = [&psi](double x) {
        double v = psi(x);
        return v * v;
    };
    std::vector<double> ps(poles);
    std::sort(ps.begin(), ps.end());
    double total = 0, start = -L;
    for (double p : ps) {
        double a = p - eps, b = p + eps;
        if (b <= start || a >= L) continue;
        if (a > start)
            total += numerics::integrate_adaptive(f, start, a, 1e-8, 1e-12);
        start = b;
        if (start >= L) return total;
    }
    if (start < L)
        total += numerics::integrate_adaptive(f, start, L, 1e-8, 1e-12);
    return total;
}

NormalizabilityReport normalizability_check(
    const std::function<double(double)>& psi, const std::vector<double>& poles,
    std::vector<double> windows) {
    if (windows.size() < 3)
        throw DomainError("normalizability: need at least 3 windows");
    std::sort(windows.begin(), windows.end());
    double pscale = 1;
    for (double p : poles) pscale = std::max(pscale, 1 + std::fabs(p));
    NormalizabilityReport rep;
    for (int level = 0; level < 12; ++level) {
        double L = level < (int)windows.size()
                       ? windows[level]
                       : windows.back() + 2.0 * (level - windows.size() + 1);
        double eps = 1e-2 * pscale / (1 << level);
        double I = window_integral(psi, poles, L, eps);
        rep.rows.push_back({L, eps, I});
        std::size_t k = rep.rows.size();
        if (!std::isfinite(I)) {
            rep.verdict = NormVerdict::divergent;
            return rep;
        }
        if (k < 3) continue;
        double i0 = rep.rows[k - 3].integral;
        double i1 = rep.rows[k - 2].integral;
        double i2 = rep.rows[k - 1].integral;
        if (i1 >= 2 * i0 && i2 >= 2 * i1 && i0 > 0) {
            rep.verdict = NormVerdict::divergent;
            return rep;
        }
        double s = std::max(std::fabs(i2), 1e-300);
        if (std::fabs(i2 - i1) < 1e-6 * s && std::fabs(i1 - i0) < 1e-6 * s) {
            rep.verdict = NormVerdict::square_integrable;
            return rep;
        }
    }
    throw NumericsError("normalizability: growth trend did not resolve");
}

double rayleigh_quotient(const ExprFunction& psi,
                         const std::function<double(double)>& v, double hbar,
                         double x_lo, double x_hi) {
    auto num = [&](double x) {
        double p = psi.eval(x);
        return p * (-0.5 * hbar * hbar * psi.deriv2(x) + v(x) * p);
    };
    auto den = [&](double x) {
        double p = psi.eval(x);
        return p * p;
    };
    double D = numerics::integrate_adaptive(den, x_lo, x_hi, 1e-10, 1e-14);
    if (!(D > 0)) throw DomainError("rayleigh quotient: psi has zero norm");
    double N = numerics::integrate_adaptive(num, x_lo, x_hi, 1e-10, 1e-14);
    return N / D;
}

}  // namespace dressing
}  // namespace isolab
