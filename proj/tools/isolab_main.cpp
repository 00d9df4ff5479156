// isolab: isochrony testing, harmonization maps, spectra, ladders, chains
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "isolab/classical.hpp"
#include "isolab/dressing.hpp"
#include "isolab/errors.hpp"
#include "isolab/expr.hpp"
#include "isolab/families.hpp"
#include "isolab/harmonize.hpp"
#include "isolab/quantum.hpp"
#include "isolab/report.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using isolab::DomainError;
using isolab::NumericsError;
using isolab::expr::Potential1D;
namespace report = isolab::report;
namespace classical = isolab::classical;
namespace harmonize = isolab::harmonize;
namespace quantum = isolab::quantum;
namespace dressing = isolab::dressing;
namespace families = isolab::families;

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

struct Options {
    std::string potential, potential_b;
    std::string family, family_b;
    std::vector<std::string> params, params_b;
    std::string energies;
    double tol = 0;  // 0: subcommand default
    int grid = 0;    // 0: family default
    double xmin = 0, xmax = 0;
    bool has_xmin = false, has_xmax = false;
    int levels = 5;
    std::string ratio;
    std::string state;
    double t_end = 0;
    double dt = 1e-3;
    std::string out;
    std::string format;
    double alpha2 = 1.0;
    bool has_alpha2 = false;
    double hbar = 1.0;
};

// ------------------------------------------------------------- small parsers

std::map<std::string, double> parse_params(const std::vector<std::string>& kv) {
    std::map<std::string, double> out;
    for (const std::string& s : kv) {
        std::size_t eq = s.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("--param expects k=v, got '" + s + "'");
        std::string key = s.substr(0, eq);
        try {
            std::size_t used = 0;
            double v = std::stod(s.substr(eq + 1), &used);
            if (used != s.size() - eq - 1) throw std::invalid_argument("");
            out[key] = v;
        } catch (const std::exception&) {
            throw ConfigError("--param '" + s + "': bad numeric value");
        }
    }
    return out;
}

std::vector<double> parse_range(const std::string& spec) {
    double a, b;
    int n;
    char c1, c2;
    std::istringstream in(spec);
    if (!(in >> a >> c1 >> b >> c2 >> n) || c1 != ':' || c2 != ':' ||
        !in.eof() || n < 1)
        throw ConfigError("--energies expects start:stop:count, got '" + spec +
                          "'");
    std::vector<double> out;
    if (n == 1) {
        out.push_back(a);
        return out;
    }
    for (int i = 0; i < n; ++i)
        out.push_back(a + (b - a) * i / double(n - 1));
    return out;
}

std::pair<int, int> parse_ratio(const std::string& spec) {
    int m, n;
    char c;
    std::istringstream in(spec);
    if (!(in >> m >> c >> n) || c != ':' || !in.eof() || m < 1 || n < 1)
        throw ConfigError("--ratio expects m:n with positive integers, got '" +
                          spec + "'");
    return {m, n};
}

std::vector<double> parse_state(const std::string& spec) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(spec);
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ConfigError("--state: bad component '" + item + "'");
        }
    }
    if (out.size() != 2 && out.size() != 4)
        throw ConfigError("--state expects x,p or x,p,x2,p2");
    return out;
}

// ----------------------------------------------------------- output plumbing

class Meta {
  public:
    Meta() : json_(report::Json::object()) {}
    void add(const std::string& k, const std::string& v) {
        json_.set(k, report::Json::str(v));
        kv_.emplace_back(k, v);
    }
    void add(const std::string& k, double v) {
        json_.set(k, report::Json::number(v));
        kv_.emplace_back(k, report::fmt(v));
    }
    void add(const std::string& k, long long v) {
        json_.set(k, report::Json::integer(v));
        kv_.emplace_back(k, std::to_string(v));
    }
    void add(const std::string& k, int v) { add(k, (long long)v); }
    const report::Json& json() const { return json_; }
    const std::vector<std::pair<std::string, std::string>>& kv() const {
        return kv_;
    }

  private:
    report::Json json_;
    std::vector<std::pair<std::string, std::string>> kv_;
};

Meta base_meta(const std::string& sub) {
    Meta m;
    m.add("version", std::string(kVersion));
    m.add("subcommand", sub);
    return m;
}

void add_potential_meta(Meta& m, const std::string& prefix,
                        const Potential1D& p) {
    m.add(prefix, p.source());
    for (const auto& [k, v] : p.params) m.add(prefix + ".param." + k, v);
    m.add(prefix + ".hbar", p.hbar);
}

int finish(const Options& o, const std::string& dflt, const Meta& meta,
           const std::vector<std::pair<std::string, std::string>>& data_kv,
           const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows,
           report::Json data) {
    std::string format = o.format.empty() ? dflt : o.format;
    if (format != "csv" && format != "json")
        throw ConfigError("--format must be csv or json");
    std::string text;
    if (format == "json") {
        report::Json root = report::Json::object();
        root.set("meta", meta.json());
        root.set("data", std::move(data));
        text = root.dump();
        text += '\n';
    } else {
        report::Csv csv;
        csv.meta = meta.kv();
        for (const auto& p : data_kv) csv.meta.push_back(p);
        csv.header = header;
        csv.rows = rows;
        text = csv.dump();
    }
    if (o.out.empty() || o.out == "-") {
        std::fwrite(text.data(), 1, text.size(), stdout);
    } else {
        std::ofstream f(o.out, std::ios::binary);
        if (!f) throw ConfigError("cannot open output file: " + o.out);
        f << text;
    }
    return 0;
}

// ------------------------------------------------------ potential resolution

struct Resolved {
    Potential1D pot;
    std::string family;  // empty for expression potentials
};

Resolved resolve_potential(const Options& o, bool axis_b) {
    const std::string& family = axis_b ? o.family_b : o.family;
    const std::string& source = axis_b ? o.potential_b : o.potential;
    std::map<std::string, double> par =
        parse_params(axis_b ? o.params_b : o.params);
    if (!family.empty() && !source.empty())
        throw ConfigError("give either --potential or --family, not both");
    auto get = [&par](const char* k, double dflt) {
        auto it = par.find(k);
        return it == par.end() ? dflt : it->second;
    };
    try {
        if (family == "harmonic")
            return {families::harmonic(get("w", 1.0), o.hbar), family};
        if (family == "isotonic")
            return {families::isotonic(get("a", 0.5), get("b", 1.0), o.hbar),
                    family};
        if (family == "quartic") return {families::quartic(o.hbar), family};
        if (family == "q17") {
            double a2 = o.has_alpha2 ? o.alpha2 : 1.0;
            if (a2 <= 0)
                throw ConfigError("family q17 wants --alpha2 > 0 "
                                  "(use q17-smooth for alpha2 < 0)");
            return {families::double_pole(a2, o.hbar), family};
        }
        if (family == "q17-smooth") {
            double a2 = o.has_alpha2 ? o.alpha2 : -1.0;
            if (a2 >= 0)
                throw ConfigError("family q17-smooth wants --alpha2 < 0");
            return {families::double_pole(a2, o.hbar), family};
        }
        if (!family.empty())
            throw ConfigError("unknown family '" + family + "'");
        if (source.empty())
            throw ConfigError(axis_b ? "axis b needs --potential-b or --family-b"
                                     : "need --potential or --family");
        return {isolab::expr::make_potential(source, par, o.hbar), ""};
    } catch (const isolab::ParseError& e) {
        throw ConfigError(std::string("potential: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(std::string("potential: ") + e.what());
    }
}

const char* verdict_name(classical::Verdict v) {
    switch (v) {
        case classical::Verdict::isochronous: return "isochronous";
        case classical::Verdict::not_isochronous: return "not_isochronous";
        default: return "indeterminate";
    }
}

// ---------------------------------------------------------------- handlers

int run_period(const Options& o) {
    Resolved r = resolve_potential(o, false);
    if (o.energies.empty()) throw ConfigError("period needs --energies");
    std::vector<double> es = parse_range(o.energies);
    Meta meta = base_meta("period");
    add_potential_meta(meta, "potential", r.pot);
    meta.add("energies", o.energies);
    meta.add("quad_tol", 1e-9);
    classical::Well well = classical::find_well(r.pot);
    std::vector<std::vector<std::string>> rows;
    report::Json samples = report::Json::array();
    for (double e : es) {
        double T = classical::period_quadrature(r.pot, e, well);
        rows.push_back({report::fmt(e), report::fmt(T)});
        report::Json s = report::Json::object();
        s.set("energy", report::Json::number(e));
        s.set("period", report::Json::number(T));
        samples.push(std::move(s));
    }
    report::Json data = report::Json::object();
    data.set("samples", std::move(samples));
    return finish(o, "csv", meta, {}, {"energy", "period"}, rows,
                  std::move(data));
}

int run_isochrony(const Options& o) {
    Resolved r = resolve_potential(o, false);
    if (o.energies.empty()) throw ConfigError("isochrony needs --energies");
    std::vector<double> es = parse_range(o.energies);
    if (es.size() < 2)
        throw ConfigError("isochrony needs at least 2 energies");
    double tol = o.tol > 0 ? o.tol : 1e-6;
    Meta meta = base_meta("isochrony");
    add_potential_meta(meta, "potential", r.pot);
    meta.add("energies", o.energies);
    meta.add("isochrony_tol", tol);
    classical::PeriodProfile prof = classical::isochrony_scan(
        r.pot, es.front(), es.back(), (int)es.size(), tol);
    std::vector<std::vector<std::string>> rows;
    report::Json samples = report::Json::array();
    for (const auto& s : prof.samples) {
        rows.push_back({report::fmt(s.energy), report::fmt(s.period)});
        report::Json j = report::Json::object();
        j.set("energy", report::Json::number(s.energy));
        j.set("period", report::Json::number(s.period));
        samples.push(std::move(j));
    }
    report::Json data = report::Json::object();
    data.set("verdict", report::Json::str(verdict_name(prof.verdict)));
    data.set("median_period", report::Json::number(prof.median));
    data.set("spread", report::Json::number(prof.spread));
    report::Json failed = report::Json::array();
    for (double e : prof.failed_energies)
        failed.push(report::Json::number(e));
    data.set("failed_energies", std::move(failed));
    data.set("samples", std::move(samples));
    std::vector<std::pair<std::string, std::string>> data_kv{
        {"verdict", verdict_name(prof.verdict)},
        {"median_period", report::fmt(prof.median)},
        {"spread", report::fmt(prof.spread)}};
    return finish(o, "json", meta, data_kv, {"energy", "period"}, rows,
                  std::move(data));
}

int run_simulate(const Options& o) {
    Resolved ra = resolve_potential(o, false);
    std::optional<Resolved> rb;
    if (!o.potential_b.empty() || !o.family_b.empty())
        rb = resolve_potential(o, true);
    if (o.state.empty()) throw ConfigError("simulate needs --state");
    std::vector<double> sv = parse_state(o.state);
    if (!rb && sv.size() == 4)
        throw ConfigError("4-component state needs a second axis potential");
    if (rb && sv.size() == 2)
        throw ConfigError("second axis potential needs a 4-component state");
    if (!(o.t_end > 0)) throw ConfigError("simulate needs --t-end > 0");
    classical::State s0{sv[0], sv[1], 0, 0};
    if (sv.size() == 4) {
        s0[2] = sv[2];
        s0[3] = sv[3];
    }
    Meta meta = base_meta("simulate");
    add_potential_meta(meta, "potential", ra.pot);
    if (rb) add_potential_meta(meta, "potential_b", rb->pot);
    meta.add("state", o.state);
    meta.add("t_end", o.t_end);
    meta.add("dt", o.dt);
    const Potential1D* pb = rb ? &rb->pot : nullptr;
    classical::Trajectory traj =
        classical::integrate_trajectory(ra.pot, pb, s0, o.t_end, o.dt);
    std::size_t stride = std::max<std::size_t>(1, traj.t.size() / 2000);
    std::vector<std::string> header{"t", "x", "p"};
    if (traj.n_axes == 2) {
        header.push_back("x2");
        header.push_back("p2");
    }
    header.push_back("energy");
    std::vector<std::vector<std::string>> rows;
    report::Json samples = report::Json::array();
    for (std::size_t i = 0; i < traj.t.size();
         i += (i + stride < traj.t.size() ? stride
                                          : traj.t.size() - i > 1
                                                ? traj.t.size() - 1 - i
                                                : stride)) {
        const classical::State& s = traj.s[i];
        double E = classical::total_energy(ra.pot, pb, s);
        std::vector<std::string> row{report::fmt(traj.t[i]),
                                     report::fmt(s[0]), report::fmt(s[1])};
        report::Json j = report::Json::object();
        j.set("t", report::Json::number(traj.t[i]));
        j.set("x", report::Json::number(s[0]));
        j.set("p", report::Json::number(s[1]));
        if (traj.n_axes == 2) {
            row.push_back(report::fmt(s[2]));
            row.push_back(report::fmt(s[3]));
            j.set("x2", report::Json::number(s[2]));
            j.set("p2", report::Json::number(s[3]));
        }
        row.push_back(report::fmt(E));
        j.set("energy", report::Json::number(E));
        rows.push_back(std::move(row));
        samples.push(std::move(j));
        if (i + 1 == traj.t.size()) break;
    }
    report::Json data = report::Json::object();
    data.set("energy_drift", report::Json::number(traj.energy_drift));
    data.set("n_steps", report::Json::integer((long long)traj.t.size() - 1));
    std::vector<std::pair<std::string, std::string>> data_kv{
        {"energy_drift", report::fmt(traj.energy_drift)}};
    if (traj.n_axes == 2) {
        double tol = o.tol > 0 ? o.tol : 1e-3;
        auto orbit = classical::closed_orbit_check(traj, tol);
        data.set("closed_orbit", report::Json::boolean(orbit.has_value()));
        data_kv.emplace_back("closed_orbit", orbit ? "true" : "false");
        if (orbit) {
            data.set("t_return", report::Json::number(orbit->t_return));
            data.set("recurrence_distance",
                     report::Json::number(orbit->distance));
            data_kv.emplace_back("t_return", report::fmt(orbit->t_return));
        }
    }
    data.set("samples", std::move(samples));
    return finish(o, "csv", meta, data_kv, header, rows, std::move(data));
}

int run_harmonize(const Options& o) {
    Resolved r = resolve_potential(o, false);
    if (o.energies.empty()) throw ConfigError("harmonize needs --energies");
    std::vector<double> es = parse_range(o.energies);
    if (es.size() < 2)
        throw ConfigError("harmonize needs an a:b:n energy band, n >= 2");
    harmonize::MapOptions mo;
    if (o.tol > 0) mo.isochrony_tol = o.tol;
    mo.scan_samples = (int)es.size();
    Meta meta = base_meta("harmonize");
    add_potential_meta(meta, "potential", r.pot);
    meta.add("energies", o.energies);
    meta.add("isochrony_tol", mo.isochrony_tol);
    meta.add("quad_tol", mo.quad_tol);
    harmonize::HarmonizationMap m =
        harmonize::make_map(r.pot, es.front(), es.back(), mo);
    report::Json data = report::Json::object();
    data.set("x_shift", report::Json::number(m.x_shift));
    data.set("v_shift", report::Json::number(m.v_shift));
    data.set("period", report::Json::number(m.T));
    data.set("omega", report::Json::number(m.omega));
    data.set("verdict", report::Json::str(verdict_name(m.scan.verdict)));
    data.set("spread", report::Json::number(m.scan.spread));
    std::vector<std::pair<std::string, std::string>> data_kv{
        {"period", report::fmt(m.T)},
        {"omega", report::fmt(m.omega)},
        {"x_shift", report::fmt(m.x_shift)},
        {"v_shift", report::fmt(m.v_shift)},
        {"verdict", verdict_name(m.scan.verdict)}};
    std::vector<std::vector<std::string>> rows;
    report::Json samples = report::Json::array();
    for (const auto& s : m.scan.samples) {
        rows.push_back({report::fmt(s.energy), report::fmt(s.period)});
        report::Json j = report::Json::object();
        j.set("energy", report::Json::number(s.energy));
        j.set("period", report::Json::number(s.period));
        samples.push(std::move(j));
    }
    data.set("samples", std::move(samples));
    if (!o.state.empty()) {
        std::vector<double> sv = parse_state(o.state);
        if (sv.size() != 2)
            throw ConfigError("harmonize maps one axis: --state x,p");
        harmonize::MappedState ms = m.forward(sv[0], sv[1]);
        auto back = m.inverse(ms.X, ms.P);
        double err = std::hypot(back[0] - sv[0], back[1] - sv[1]);
        report::Json mj = report::Json::object();
        mj.set("X", report::Json::number(ms.X));
        mj.set("P", report::Json::number(ms.P));
        mj.set("r", report::Json::number(ms.r));
        mj.set("t", report::Json::number(ms.t));
        mj.set("energy", report::Json::number(ms.E));
        mj.set("round_trip_error", report::Json::number(err));
        data.set("mapped", std::move(mj));
        data_kv.emplace_back("mapped.X", report::fmt(ms.X));
        data_kv.emplace_back("mapped.P", report::fmt(ms.P));
        data_kv.emplace_back("round_trip_error", report::fmt(err));
    }
    return finish(o, "json", meta, data_kv, {"energy", "period"}, rows,
                  std::move(data));
}

int run_integrals(const Options& o) {
    Resolved ra = resolve_potential(o, false);
    if (o.potential_b.empty() && o.family_b.empty())
        throw ConfigError("integrals needs --potential-b or --family-b");
    Resolved rb = resolve_potential(o, true);
    if (o.ratio.empty()) throw ConfigError("integrals needs --ratio m:n");
    auto [mm, nn] = parse_ratio(o.ratio);
    if (o.state.empty()) throw ConfigError("integrals needs --state x,p,x2,p2");
    std::vector<double> sv = parse_state(o.state);
    if (sv.size() != 4)
        throw ConfigError("integrals needs a 4-component --state");
    classical::State s0{sv[0], sv[1], sv[2], sv[3]};
    harmonize::MapOptions mo;
    auto band = [&mo](const Potential1D& p,
                      double x, double pp) -> std::array<double, 2> {
        classical::Well w = classical::find_well(p);
        double e = 0.5 * pp * pp + p.eval(x) - w.v_min;
        if (e <= 0) throw DomainError("state sits at a well minimum");
        return {0.5 * e, 1.5 * e};
    };
    auto [alo, ahi] = band(ra.pot, s0[0], s0[1]);
    auto [blo, bhi] = band(rb.pot, s0[2], s0[3]);
    harmonize::HarmonizationMap ma = harmonize::make_map(ra.pot, alo, ahi, mo);
    harmonize::HarmonizationMap mb = harmonize::make_map(rb.pot, blo, bhi, mo);
    double ratio_tol = o.tol > 0 ? o.tol : 1e-6;
    harmonize::IntegralSet iset =
        harmonize::build_integral_set(ma, mb, mm, nn, ratio_tol);
    double t_end = o.t_end > 0 ? o.t_end : 50 * ma.T;
    Meta meta = base_meta("integrals");
    add_potential_meta(meta, "potential", ra.pot);
    add_potential_meta(meta, "potential_b", rb.pot);
    meta.add("ratio", o.ratio);
    meta.add("state", o.state);
    meta.add("t_end", t_end);
    meta.add("dt", o.dt);
    meta.add("ratio_tol", ratio_tol);
    harmonize::AuditReport audit =
        harmonize::conservation_audit(iset, s0, t_end, o.dt);
    std::vector<std::vector<std::string>> rows;
    report::Json checkpoints = report::Json::array();
    for (std::size_t i = 0; i < audit.t.size(); ++i) {
        std::vector<std::string> row{report::fmt(audit.t[i])};
        report::Json j = report::Json::object();
        j.set("t", report::Json::number(audit.t[i]));
        for (int k = 0; k < 4; ++k) {
            row.push_back(report::fmt(audit.q[k][i]));
            j.set("q" + std::to_string(k + 1),
                  report::Json::number(audit.q[k][i]));
        }
        rows.push_back(std::move(row));
        checkpoints.push(std::move(j));
    }
    report::Json data = report::Json::object();
    std::vector<std::pair<std::string, std::string>> data_kv;
    for (int k = 0; k < 4; ++k) {
        std::string name = "q" + std::to_string(k + 1);
        report::Json j = report::Json::object();
        j.set("initial", report::Json::number(audit.q0[k]));
        j.set("max_abs_drift", report::Json::number(audit.max_abs_drift[k]));
        j.set("rel_drift", report::Json::number(audit.rel_drift[k]));
        data.set(name, std::move(j));
        data_kv.emplace_back(name + ".rel_drift",
                             report::fmt(audit.rel_drift[k]));
    }
    data.set("energy_drift", report::Json::number(audit.energy_drift_abs));
    data.set("n_steps", report::Json::integer(audit.n_steps));
    data.set("checkpoint_stride",
             report::Json::integer(audit.checkpoint_stride));
    data.set("checkpoints", std::move(checkpoints));
    data_kv.emplace_back("energy_drift", report::fmt(audit.energy_drift_abs));
    return finish(o, "csv", meta, data_kv, {"t", "q1", "q2", "q3", "q4"}, rows,
                  std::move(data));
}

struct GridDefaults {
    double xmin, xmax;
    int n;
};

GridDefaults grid_defaults(const Options& o, const Resolved& r) {
    GridDefaults g{-10, 10, 2000};
    if (r.family == "harmonic") g = {-10, 10, 2000};
    else if (r.family == "isotonic") g = {0, 14, 3000};
    else if (r.family == "quartic") g = {-6, 6, 2000};
    else if (r.family == "q17-smooth") g = {-12, 12, 2000};
    else if (r.family.empty()) {
        if (!(o.has_xmin && o.has_xmax))
            throw ConfigError("expression potentials need --xmin and --xmax");
    }
    if (o.has_xmin) g.xmin = o.xmin;
    if (o.has_xmax) g.xmax = o.xmax;
    if (o.grid > 0) g.n = o.grid;
    if (!(g.xmax > g.xmin)) throw ConfigError("need --xmax > --xmin");
    if (g.n < 64) throw ConfigError("--grid must be at least 64");
    return g;
}

int run_spectrum(const Options& o) {
    Resolved r = resolve_potential(o, false);
    if (r.family == "q17")
        throw ConfigError(
            "the singular double-pole variant has no grid spectrum here; "
            "the q17 subcommand verifies its constructive content instead");
    GridDefaults g = grid_defaults(o, r);
    int k = o.levels;
    if (k < 1 || k > 20) throw ConfigError("--levels must be in [1, 20]");
    double shift = 0;
    if (r.family == "q17-smooth")
        shift = -3 * o.hbar * o.hbar / (4 * (o.has_alpha2 ? o.alpha2 : -1.0));
    Meta meta = base_meta("spectrum");
    add_potential_meta(meta, "potential", r.pot);
    meta.add("xmin", g.xmin);
    meta.add("xmax", g.xmax);
    meta.add("grid", g.n);
    meta.add("levels", k);
    if (shift != 0) meta.add("factorization_shift", shift);
    quantum::GridOperator H = quantum::build_hamiltonian(
        r.pot, {g.xmin, g.xmax, g.n});
    quantum::EigenPairs eig = quantum::eigensolve(H, k);
    std::vector<std::vector<std::string>> rows;
    report::Json values = report::Json::array();
    report::Json residuals = report::Json::array();
    for (int i = 0; i < k; ++i) {
        double e = eig.values[i] + shift;
        rows.push_back({std::to_string(i), report::fmt(e)});
        values.push(report::Json::number(e));
        residuals.push(report::Json::number(eig.residuals[i]));
    }
    report::Json data = report::Json::object();
    data.set("eigenvalues", std::move(values));
    data.set("residuals", std::move(residuals));
    std::vector<std::pair<std::string, std::string>> data_kv;
    if (r.family == "isotonic") {
        auto par = [&r](const char* key) { return r.pot.params.at(key); };
        quantum::SpectrumInfo info = quantum::isotonic_spectrum_formula(
            par("a"), par("b"), o.hbar, k);
        data.set("nu", report::Json::number(info.nu));
        const char* regime =
            info.regime == quantum::SpectrumRegime::plain_harmonic
                ? "plain_harmonic"
                : info.regime == quantum::SpectrumRegime::paired ? "paired"
                                                                 : "equidistant";
        data.set("regime", report::Json::str(regime));
        report::Json formula = report::Json::array();
        for (int i = 0; i < k && i < (int)info.plus.size(); ++i)
            formula.push(report::Json::number(info.plus[i]));
        data.set("formula_plus", std::move(formula));
        data_kv.emplace_back("nu", report::fmt(info.nu));
        data_kv.emplace_back("regime", regime);
    }
    return finish(o, "json", meta, data_kv, {"k", "energy"}, rows,
                  std::move(data));
}

int run_ladder(const Options& o) {
    Resolved r = resolve_potential(o, false);
    if (r.family != "harmonic" && r.family != "isotonic")
        throw ConfigError("ladder supports --family harmonic or isotonic");
    GridDefaults g = grid_defaults(o, r);
    int k = o.levels > 0 ? o.levels : 6;
    if (k < 2 || k > 20) throw ConfigError("--levels must be in [2, 20]");
    quantum::LadderOperator L =
        r.family == "harmonic"
            ? quantum::harmonic_ladder(r.pot.params.at("w"), o.hbar, true)
            : quantum::make_ladder(r.pot.params.at("a"), r.pot.params.at("b"),
                                   o.hbar, true);
    Meta meta = base_meta("ladder");
    add_potential_meta(meta, "potential", r.pot);
    meta.add("xmin", g.xmin);
    meta.add("xmax", g.xmax);
    meta.add("grid", g.n);
    meta.add("levels", k);
    double chain_tol = o.tol > 0 ? o.tol : 0.05;
    meta.add("chain_tol", chain_tol);
    quantum::GridOperator H = quantum::build_hamiltonian(
        r.pot, {g.xmin, g.xmax, g.n});
    quantum::EigenPairs eig = quantum::eigensolve(H, k);
    quantum::CommutatorFit fit =
        quantum::commutator_residual(H, L, eig.vectors);
    quantum::LadderStructure st =
        quantum::analyze_ladder_structure(eig.values, L.lambda, chain_tol);
    report::Json data = report::Json::object();
    data.set("lambda", report::Json::number(L.lambda));
    data.set("lambda_fit", report::Json::number(fit.lambda_fit));
    data.set("commutator_residual", report::Json::number(fit.residual));
    report::Json values = report::Json::array();
    for (double e : eig.values) values.push(report::Json::number(e));
    data.set("eigenvalues", std::move(values));
    report::Json chains = report::Json::array();
    for (const auto& c : st.chains) {
        report::Json cj = report::Json::array();
        for (int idx : c) cj.push(report::Json::integer(idx));
        chains.push(std::move(cj));
    }
    data.set("chains", std::move(chains));
    report::Json orphans = report::Json::array();
    for (int idx : st.orphans) orphans.push(report::Json::integer(idx));
    data.set("orphans", std::move(orphans));
    std::vector<std::pair<std::string, std::string>> data_kv{
        {"lambda", report::fmt(L.lambda)},
        {"lambda_fit", report::fmt(fit.lambda_fit)},
        {"commutator_residual", report::fmt(fit.residual)}};
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < eig.values.size(); ++i) {
        int chain_id = -1;
        for (std::size_t c = 0; c < st.chains.size(); ++c)
            for (int idx : st.chains[c])
                if (idx == (int)i) chain_id = (int)c;
        rows.push_back({std::to_string(i), report::fmt(eig.values[i]),
                        std::to_string(chain_id)});
    }
    return finish(o, "json", meta, data_kv, {"k", "energy", "chain"}, rows,
                  std::move(data));
}

int run_chain(const Options& o) {
    std::map<std::string, double> par = parse_params(o.params);
    auto get = [&par](const char* k, double dflt) {
        auto it = par.find(k);
        return it == par.end() ? dflt : it->second;
    };
    dressing::Chain chain;
    quantum::Grid g{-10, 10, 2000};
    Meta meta = base_meta("chain");
    if (o.family == "harmonic") {
        double w = get("w", 1.0);
        chain.links.push_back(dressing::make_superpotential(
            "w*x", {{"w", w}}, o.hbar));
        chain.constants.push_back(o.hbar * w);
        chain.periodic = true;
        meta.add("family", std::string("harmonic"));
        meta.add("w", w);
    } else if (o.family == "isotonic") {
        double a = get("a", 0.5), b = get("b", 1.0);
        double gc = std::sqrt(2 * a);
        double nu = std::sqrt(1 + 8 * b / (o.hbar * o.hbar)) / 2;
        double s = 0.5 + nu;
        std::map<std::string, double> wp{{"g", gc}, {"hb", o.hbar}, {"s", s}};
        chain.links.push_back(
            dressing::make_superpotential("g*x - hb*s/x", wp, o.hbar));
        chain.links.push_back(
            dressing::make_superpotential("g*x + hb*s/x", wp, o.hbar));
        chain.constants.push_back(-gc * o.hbar * (2 * s - 1));
        chain.constants.push_back(gc * o.hbar * (2 * s + 1));
        chain.periodic = true;
        g = {0.3, 12, 2000};
        meta.add("family", std::string("isotonic"));
        meta.add("a", a);
        meta.add("b", b);
        meta.add("exponent_s", s);
    } else {
        throw ConfigError("chain supports --family harmonic or isotonic");
    }
    if (o.grid > 0) g.n = o.grid;
    if (o.has_xmin) g.x_lo = o.xmin;
    if (o.has_xmax) g.x_hi = o.xmax;
    meta.add("xmin", g.x_lo);
    meta.add("xmax", g.x_hi);
    meta.add("grid", g.n);
    meta.add("hbar", o.hbar);
    dressing::ChainReport rep = dressing::chain_verify(chain, g);
    report::Json data = report::Json::object();
    report::Json constants = report::Json::array();
    for (double c : chain.constants) constants.push(report::Json::number(c));
    data.set("constants", std::move(constants));
    report::Json residuals = report::Json::array();
    for (double rr : rep.residuals) residuals.push(report::Json::number(rr));
    data.set("residuals", std::move(residuals));
    data.set("periodic", report::Json::boolean(rep.periodic));
    data.set("periodicity_defect",
             report::Json::number(rep.periodicity_defect));
    std::vector<std::vector<std::string>> rows;
    std::vector<std::pair<std::string, std::string>> data_kv{
        {"periodicity_defect", report::fmt(rep.periodicity_defect)}};
    for (std::size_t i = 0; i < rep.residuals.size(); ++i)
        rows.push_back({std::to_string(i + 1),
                        report::fmt(chain.constants[i]),
                        report::fmt(rep.residuals[i])});
    return finish(o, "json", meta, data_kv, {"link", "constant", "residual"},
                  rows, std::move(data));
}

int run_q17(const Options& o) {
    double a2 = o.has_alpha2 ? o.alpha2 : 1.0;
    dressing::Q17Family fam = dressing::q17_build(a2, o.hbar);
    double scale = std::sqrt(std::fabs(a2));
    quantum::Grid g = fam.smooth
                          ? quantum::Grid{-12 * scale, 12 * scale, 2000}
                          : quantum::Grid{-0.85 * scale, 0.85 * scale, 2000};
    if (o.grid > 0) g.n = o.grid;
    if (o.has_xmin) g.x_lo = o.xmin;
    if (o.has_xmax) g.x_hi = o.xmax;
    Meta meta = base_meta("q17");
    meta.add("alpha_sq", a2);
    meta.add("hbar", o.hbar);
    add_potential_meta(meta, "potential", fam.V);
    meta.add("xmin", g.x_lo);
    meta.add("xmax", g.x_hi);
    meta.add("grid", g.n);
    Potential1D ref_minus = isolab::expr::make_potential(
        "hb^2*x^2/(8*as^2)", {{"hb", o.hbar}, {"as", a2}}, o.hbar);
    dressing::DressingPair dp =
        dressing::build_pair(fam.W, g, &ref_minus, &fam.V);
    double fres = dressing::factorization_residual(dp, 6);
    report::Json data = report::Json::object();
    data.set("c_minus_fit", report::Json::number(dp.c_minus));
    data.set("c_minus_exact", report::Json::number(fam.c_minus));
    data.set("c_plus_fit", report::Json::number(dp.c_plus));
    data.set("c_plus_exact", report::Json::number(fam.c_plus));
    data.set("factorization_residual", report::Json::number(fres));
    std::vector<std::pair<std::string, std::string>> data_kv{
        {"c_minus_fit", report::fmt(dp.c_minus)},
        {"c_minus_exact", report::fmt(fam.c_minus)},
        {"c_plus_fit", report::fmt(dp.c_plus)},
        {"c_plus_exact", report::fmt(fam.c_plus)},
        {"factorization_residual", report::fmt(fres)}};
    std::vector<std::vector<std::string>> rows;
    if (!fam.smooth) {
        double al = std::sqrt(a2);
        report::Json ind = report::Json::array();
        for (double pole : {al, -al}) {
            auto [s1, s2] = dressing::indicial_exponents(fam.V, pole, o.hbar);
            report::Json j = report::Json::object();
            j.set("pole", report::Json::number(pole));
            j.set("s1", report::Json::number(s1));
            j.set("s2", report::Json::number(s2));
            ind.push(std::move(j));
            data_kv.emplace_back("indicial." + report::fmt(pole),
                                 report::fmt(s1) + " " + report::fmt(s2));
        }
        data.set("indicial", std::move(ind));
    }
    std::vector<double> windows{4 * scale, 6 * scale, 8 * scale};
    std::vector<double> poles =
        fam.smooth ? std::vector<double>{}
                   : std::vector<double>{-std::sqrt(a2), std::sqrt(a2)};
    report::Json modes = report::Json::array();
    for (std::size_t i = 0; i < fam.zero_modes.size(); ++i) {
        const auto& zm = fam.zero_modes[i];
        dressing::NormalizabilityReport norm = dressing::normalizability_check(
            [&zm](double x) { return zm.eval(x); }, poles, windows);
        const char* verdict =
            norm.verdict == dressing::NormVerdict::square_integrable
                ? "square_integrable"
                : "divergent";
        report::Json j = report::Json::object();
        j.set("index", report::Json::integer((long long)i));
        j.set("verdict", report::Json::str(verdict));
        report::Json table = report::Json::array();
        for (const auto& row : norm.rows) {
            report::Json rj = report::Json::object();
            rj.set("window", report::Json::number(row.window));
            rj.set("eps", report::Json::number(row.eps));
            rj.set("integral", report::Json::number(row.integral));
            table.push(std::move(rj));
            rows.push_back({std::to_string(i), report::fmt(row.window),
                            report::fmt(row.eps), report::fmt(row.integral)});
        }
        j.set("growth", std::move(table));
        modes.push(std::move(j));
        data_kv.emplace_back("zero_mode." + std::to_string(i), verdict);
    }
    data.set("zero_modes", std::move(modes));
    if (fam.smooth) {
        double cp = fam.c_plus;
        const Potential1D& V = fam.V;
        double rq = dressing::rayleigh_quotient(
            fam.zero_modes[0],
            [&V, cp](double x) { return V.eval(x) + cp; }, o.hbar, g.x_lo,
            g.x_hi);
        data.set("kernel_rayleigh_quotient", report::Json::number(rq));
        data_kv.emplace_back("kernel_rayleigh_quotient", report::fmt(rq));
    }
    return finish(o, "json", meta, data_kv,
                  {"mode", "window", "eps", "integral"}, rows,
                  std::move(data));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "isolab: a numerical laboratory for isochronous wells, harmonization "
        "maps, superintegrable pairs, ladder operators and dressing chains"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key = value config file");
    app.get_config_formatter_base()->valueSeparator('=');

    Options o;
    auto add_common = [&o](CLI::App* s) {
        s->add_option("--out", o.out, "output path (default: stdout)");
        s->add_option("--format", o.format, "output format {csv,json}");
        s->add_option("--hbar", o.hbar, "hbar of the model")
            ->capture_default_str();
    };
    auto add_pot = [&o](CLI::App* s) {
        s->add_option("--potential", o.potential,
                      "potential V(x), an expression in x");
        s->add_option("--param", o.params, "parameter k=v (repeatable)");
        s->add_option(
            "--family", o.family,
            "built-in family {harmonic,isotonic,quartic,q17,q17-smooth}");
    };
    auto add_grid = [&o](CLI::App* s) {
        s->add_option("--grid", o.grid, "number of grid nodes (>= 64)");
        auto* mn = s->add_option("--xmin", o.xmin, "left grid end");
        auto* mx = s->add_option("--xmax", o.xmax, "right grid end");
        mn->each([&o](const std::string&) { o.has_xmin = true; });
        mx->each([&o](const std::string&) { o.has_xmax = true; });
    };

    CLI::App* period = app.add_subcommand(
        "period",
        "oscillation period T(E) of a 1D well by turning-point quadrature");
    add_pot(period);
    add_common(period);
    period->add_option("--energies", o.energies,
                       "energy range start:stop:count (absolute; each must "
                       "exceed the well minimum value)");

    CLI::App* isochrony = app.add_subcommand(
        "isochrony",
        "classify a well as isochronous: is T(E) energy-independent?");
    add_pot(isochrony);
    add_common(isochrony);
    isochrony->add_option("--energies", o.energies,
                          "energy range start:stop:count (absolute)");
    isochrony->add_option("--tol", o.tol,
                          "relative period spread accepted as isochronous "
                          "(default 1e-6)");

    CLI::App* simulate = app.add_subcommand(
        "simulate",
        "symplectic trajectory of one or two separable axes; "
        "closed-orbit detection for two");
    add_pot(simulate);
    add_common(simulate);
    simulate->add_option("--potential-b", o.potential_b,
                         "second-axis potential expression");
    simulate->add_option("--param-b", o.params_b,
                         "second-axis parameter k=v (repeatable)");
    simulate->add_option("--family-b", o.family_b, "second-axis family");
    simulate->add_option("--state", o.state, "initial state x,p or x,p,x2,p2");
    simulate->add_option("--t-end", o.t_end, "integration horizon");
    simulate->add_option("--dt", o.dt, "time step")->capture_default_str();
    simulate->add_option("--tol", o.tol,
                         "closed-orbit recurrence tolerance (default 1e-3)");

    CLI::App* harmonize_cmd = app.add_subcommand(
        "harmonize",
        "canonical map sending an isochronous well onto the harmonic "
        "oscillator of the common period");
    add_pot(harmonize_cmd);
    add_common(harmonize_cmd);
    harmonize_cmd->add_option("--energies", o.energies,
                              "scanned energy band start:stop:count, "
                              "measured from the well bottom");
    harmonize_cmd->add_option("--tol", o.tol,
                              "isochrony tolerance of the scan (default 1e-6)");
    harmonize_cmd->add_option("--state", o.state,
                              "optional state x,p to push through the map");

    CLI::App* integrals = app.add_subcommand(
        "integrals",
        "pull back the anisotropic-oscillator invariants Q1..Q4 for a "
        "separable pair with period ratio m:n and audit their conservation");
    add_pot(integrals);
    add_common(integrals);
    integrals->add_option("--potential-b", o.potential_b,
                          "second-axis potential expression");
    integrals->add_option("--param-b", o.params_b,
                          "second-axis parameter k=v (repeatable)");
    integrals->add_option("--family-b", o.family_b, "second-axis family");
    integrals->add_option("--ratio", o.ratio, "period ratio m:n");
    integrals->add_option("--state", o.state, "initial state x,p,x2,p2");
    integrals->add_option("--t-end", o.t_end,
                          "horizon (default: 50 axis-a periods)");
    integrals->add_option("--dt", o.dt, "time step")->capture_default_str();
    integrals->add_option("--tol", o.tol,
                          "ratio consistency tolerance (default 1e-6)");

    CLI::App* spectrum = app.add_subcommand(
        "spectrum",
        "grid eigenvalues of -hbar^2/2 d2/dx2 + V (bisection + inverse "
        "iteration); closed-form reference for the isotonic family");
    add_pot(spectrum);
    add_common(spectrum);
    add_grid(spectrum);
    spectrum->add_option("--levels", o.levels, "number of eigenvalues")
        ->capture_default_str();
    spectrum->add_option("--alpha2", o.alpha2,
                         "double-pole alpha^2 (q17 families)")
        ->each([&o](const std::string&) { o.has_alpha2 = true; });

    CLI::App* ladder = app.add_subcommand(
        "ladder",
        "spectrum-generating ladder: commutator fit [H,L] = lambda L and the "
        "arithmetic chain structure of the levels");
    add_pot(ladder);
    add_common(ladder);
    add_grid(ladder);
    ladder->add_option("--levels", o.levels, "number of eigenvalues")
        ->capture_default_str();
    ladder->add_option("--tol", o.tol,
                       "chain spacing tolerance (default 0.05)");

    CLI::App* chain = app.add_subcommand(
        "chain",
        "verify a factorization chain H_n = a_n a_n^dag = "
        "a_{n+1}^dag a_{n+1} + C_n (periodic closure included)");
    chain->add_option("--family", o.family,
                      "chain family {harmonic,isotonic}");
    chain->add_option("--param", o.params, "parameter k=v (repeatable)");
    add_common(chain);
    add_grid(chain);

    CLI::App* q17 = app.add_subcommand(
        "q17",
        "double-pole oscillator: factorization shifts, indicial exponents at "
        "the poles, E=0 solutions and their normalizability");
    add_common(q17);
    add_grid(q17);
    q17->add_option("--alpha2", o.alpha2,
                    "alpha^2; positive: singular, negative: smooth variant")
        ->each([&o](const std::string&) { o.has_alpha2 = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(period)) return run_period(o);
        if (app.got_subcommand(isochrony)) return run_isochrony(o);
        if (app.got_subcommand(simulate)) return run_simulate(o);
        if (app.got_subcommand(harmonize_cmd)) return run_harmonize(o);
        if (app.got_subcommand(integrals)) return run_integrals(o);
        if (app.got_subcommand(spectrum)) return run_spectrum(o);
        if (app.got_subcommand(ladder)) return run_ladder(o);
        if (app.got_subcommand(chain)) return run_chain(o);
        if (app.got_subcommand(q17)) return run_q17(o);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const isolab::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 1;
    } catch (const NumericsError& e) {
        std::cerr << "numerics error: " << e.what() << "\n";
        return 1;
    }
}
