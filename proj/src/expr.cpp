#include "isolab/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>

#include "isolab/errors.hpp"

namespace isolab {
namespace expr {

// ---------------------------------------------------------------- builders

static NodePtr num(double v) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::number;
    n->num = v;
    return n;
}

static NodePtr var() {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::var;
    return n;
}

static NodePtr param(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::param;
    n->name = std::move(name);
    return n;
}

static NodePtr mk(NodeKind k, NodePtr a, NodePtr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

static NodePtr call(Func f, NodePtr a) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::call;
    n->func = f;
    n->a = std::move(a);
    return n;
}

static bool is_num(const NodePtr& t, double v) {
    return t->kind == NodeKind::number && t->num == v;
}

// folding constructors, used by derivative/bind only so that parsed trees
// keep their written shape
static NodePtr f_neg(NodePtr a) {
    if (a->kind == NodeKind::number) return num(-a->num);
    if (a->kind == NodeKind::neg) return a->a;
    return mk(NodeKind::neg, std::move(a));
}

static NodePtr f_add(NodePtr a, NodePtr b) {
    if (a->kind == NodeKind::number && b->kind == NodeKind::number)
        return num(a->num + b->num);
    if (is_num(a, 0)) return b;
    if (is_num(b, 0)) return a;
    return mk(NodeKind::add, std::move(a), std::move(b));
}

static NodePtr f_sub(NodePtr a, NodePtr b) {
    if (a->kind == NodeKind::number && b->kind == NodeKind::number)
        return num(a->num - b->num);
    if (is_num(b, 0)) return a;
    if (is_num(a, 0)) return f_neg(std::move(b));
    return mk(NodeKind::sub, std::move(a), std::move(b));
}

static NodePtr f_mul(NodePtr a, NodePtr b) {
    if (a->kind == NodeKind::number && b->kind == NodeKind::number)
        return num(a->num * b->num);
    if (is_num(a, 0) || is_num(b, 0)) return num(0);
    if (is_num(a, 1)) return b;
    if (is_num(b, 1)) return a;
    return mk(NodeKind::mul, std::move(a), std::move(b));
}

static NodePtr f_div(NodePtr a, NodePtr b) {
    if (a->kind == NodeKind::number && b->kind == NodeKind::number &&
        b->num != 0)
        return num(a->num / b->num);
    if (is_num(b, 1)) return a;
    return mk(NodeKind::div, std::move(a), std::move(b));
}

static NodePtr f_pow(NodePtr a, NodePtr b) {
    if (a->kind == NodeKind::number && b->kind == NodeKind::number)
        return num(std::pow(a->num, b->num));
    if (is_num(b, 1)) return a;
    if (is_num(b, 0)) return num(1);
    return mk(NodeKind::pow, std::move(a), std::move(b));
}

// ---------------------------------------------------------------- parser

namespace {

struct Parser {
    const std::string& s;
    std::size_t i = 0;

    explicit Parser(const std::string& src) : s(src) {}

    void skip() {
        while (i < s.size() && std::isspace((unsigned char)s[i])) ++i;
    }
    bool peek(char c) {
        skip();
        return i < s.size() && s[i] == c;
    }
    bool accept(char c) {
        if (peek(c)) {
            ++i;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c))
            throw ParseError(std::string("expected '") + c + "'", i);
    }

    NodePtr parse_expr() {
        skip();
        NodePtr t;
        if (accept('-'))
            t = mk(NodeKind::neg, parse_term());
        else
            t = parse_term();
        for (;;) {
            if (accept('+'))
                t = mk(NodeKind::add, t, parse_term());
            else if (accept('-'))
                t = mk(NodeKind::sub, t, parse_term());
            else
                break;
        }
        return t;
    }

    NodePtr parse_term() {
        NodePtr t = parse_factor();
        for (;;) {
            if (accept('*'))
                t = mk(NodeKind::mul, t, parse_factor());
            else if (accept('/'))
                t = mk(NodeKind::div, t, parse_factor());
            else
                break;
        }
        return t;
    }

    NodePtr parse_factor() {
        NodePtr base = parse_base();
        if (accept('^')) return mk(NodeKind::pow, base, parse_factor());
        return base;
    }

    NodePtr parse_base() {
        skip();
        if (i >= s.size()) throw ParseError("unexpected end of input", i);
        char c = s[i];
        if (std::isdigit((unsigned char)c) || c == '.') return parse_number();
        if (c == '(') {
            ++i;
            NodePtr t = parse_expr();
            expect(')');
            return t;
        }
        if (std::isalpha((unsigned char)c) || c == '_') return parse_symbol();
        throw ParseError(std::string("unexpected character '") + c + "'", i);
    }

    NodePtr parse_number() {
        std::size_t start = i;
        while (i < s.size() &&
               (std::isdigit((unsigned char)s[i]) || s[i] == '.'))
            ++i;
        if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
            std::size_t save = i;
            ++i;
            if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
            if (i < s.size() && std::isdigit((unsigned char)s[i])) {
                while (i < s.size() && std::isdigit((unsigned char)s[i])) ++i;
            } else {
                i = save;  // 'e' belongs to a following symbol, not the number
            }
        }
        try {
            std::size_t used = 0;
            double v = std::stod(s.substr(start, i - start), &used);
            if (used != i - start) throw std::invalid_argument("");
            return num(v);
        } catch (const std::exception&) {
            throw ParseError("bad numeric literal", start);
        }
    }

    NodePtr parse_symbol() {
        std::size_t start = i;
        while (i < s.size() &&
               (std::isalnum((unsigned char)s[i]) || s[i] == '_'))
            ++i;
        std::string name = s.substr(start, i - start);
        static const std::map<std::string, Func> funcs = {
            {"sin", Func::sin}, {"cos", Func::cos},   {"exp", Func::exp},
            {"sqrt", Func::sqrt}, {"erf", Func::erf}, {"abs", Func::abs},
            {"log", Func::log}};
        auto f = funcs.find(name);
        if (f != funcs.end()) {
            skip();
            if (!peek('('))
                throw ParseError("function '" + name + "' needs an argument",
                                 i);
            ++i;
            NodePtr arg = parse_expr();
            expect(')');
            return call(f->second, arg);
        }
        if (name == "x") return var();
        return param(name);
    }
};

}  // namespace

NodePtr parse(const std::string& src) {
    Parser p(src);
    NodePtr t = p.parse_expr();
    p.skip();
    if (p.i != src.size()) throw ParseError("trailing input", p.i);
    // reject denominators that fold to exactly zero
    struct {
        void walk(const NodePtr& n) {
            if (!n) return;
            if (n->kind == NodeKind::div && n->b->kind == NodeKind::number &&
                n->b->num == 0)
                throw ParseError("division by identically zero denominator", 0);
            walk(n->a);
            walk(n->b);
        }
    } chk;
    chk.walk(t);
    return t;
}

// ---------------------------------------------------------------- printing

static const char* func_name(Func f) {
    switch (f) {
        case Func::sin: return "sin";
        case Func::cos: return "cos";
        case Func::exp: return "exp";
        case Func::sqrt: return "sqrt";
        case Func::erf: return "erf";
        case Func::abs: return "abs";
        case Func::log: return "log";
    }
    return "?";
}

static int prec(const NodePtr& t) {
    switch (t->kind) {
        case NodeKind::add:
        case NodeKind::sub:
        case NodeKind::neg: return 1;
        case NodeKind::mul:
        case NodeKind::div: return 2;
        case NodeKind::pow: return 3;
        default: return 4;
    }
}

static std::string num_str(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// slot: 0 left operand, 1 right operand, 2 loose (top level / argument)
static void print_rec(const NodePtr& t, std::string& out, int parent_prec,
                      int slot) {
    int p = prec(t);
    bool parens = false;
    if (t->kind == NodeKind::number && t->num < 0) {
        parens = parent_prec > 0 || slot == 1;
    } else if (p < parent_prec) {
        parens = true;
    } else if (p == parent_prec && slot == 1 &&
               (t->kind == NodeKind::add || t->kind == NodeKind::sub ||
                t->kind == NodeKind::mul || t->kind == NodeKind::div ||
                t->kind == NodeKind::neg)) {
        parens = true;  // a-(b-c), a/(b*c): right operand at equal level
    } else if (t->kind == NodeKind::pow && parent_prec == 3 && slot == 0) {
        parens = true;  // (a^b)^c
    }
    if (parens) out += '(';
    switch (t->kind) {
        case NodeKind::number: out += num_str(t->num); break;
        case NodeKind::var: out += 'x'; break;
        case NodeKind::param: out += t->name; break;
        case NodeKind::neg:
            out += '-';
            print_rec(t->a, out, 1, 1);
            break;
        case NodeKind::add:
            print_rec(t->a, out, 1, 0);
            out += " + ";
            print_rec(t->b, out, 1, 1);
            break;
        case NodeKind::sub:
            print_rec(t->a, out, 1, 0);
            out += " - ";
            print_rec(t->b, out, 1, 1);
            break;
        case NodeKind::mul:
            print_rec(t->a, out, 2, 0);
            out += '*';
            print_rec(t->b, out, 2, 1);
            break;
        case NodeKind::div:
            print_rec(t->a, out, 2, 0);
            out += '/';
            print_rec(t->b, out, 2, 1);
            break;
        case NodeKind::pow:
            print_rec(t->a, out, 3, 0);
            out += '^';
            print_rec(t->b, out, 3, 1);
            break;
        case NodeKind::call:
            out += func_name(t->func);
            out += '(';
            print_rec(t->a, out, 0, 2);
            out += ')';
            break;
    }
    if (parens) out += ')';
}

std::string print(const NodePtr& t) {
    std::string out;
    print_rec(t, out, 0, 2);
    return out;
}

bool equal(const NodePtr& a, const NodePtr& b) {
    if (a == b) return true;
    if (!a || !b || a->kind != b->kind) return false;
    switch (a->kind) {
        case NodeKind::number: return a->num == b->num;
        case NodeKind::var: return true;
        case NodeKind::param: return a->name == b->name;
        case NodeKind::call:
            return a->func == b->func && equal(a->a, b->a);
        case NodeKind::neg: return equal(a->a, b->a);
        default: return equal(a->a, b->a) && equal(a->b, b->b);
    }
}

// ---------------------------------------------------------------- calculus

static bool depends_on_x(const NodePtr& t) {
    if (!t) return false;
    if (t->kind == NodeKind::var) return true;
    return depends_on_x(t->a) || depends_on_x(t->b);
}

NodePtr derivative(const NodePtr& t) {
    switch (t->kind) {
        case NodeKind::number:
        case NodeKind::param: return num(0);
        case NodeKind::var: return num(1);
        case NodeKind::neg: return f_neg(derivative(t->a));
        case NodeKind::add: return f_add(derivative(t->a), derivative(t->b));
        case NodeKind::sub: return f_sub(derivative(t->a), derivative(t->b));
        case NodeKind::mul:
            return f_add(f_mul(derivative(t->a), t->b),
                         f_mul(t->a, derivative(t->b)));
        case NodeKind::div:
            // (u'v - uv')/v^2
            return f_div(f_sub(f_mul(derivative(t->a), t->b),
                               f_mul(t->a, derivative(t->b))),
                         f_pow(t->b, num(2)));
        case NodeKind::pow: {
            if (!depends_on_x(t->b)) {
                // c u^(c-1) u'
                NodePtr c = t->b;
                return f_mul(f_mul(c, f_pow(t->a, f_sub(c, num(1)))),
                             derivative(t->a));
            }
            // u^v (v' log u + v u'/u)
            return f_mul(f_pow(t->a, t->b),
                         f_add(f_mul(derivative(t->b), call(Func::log, t->a)),
                               f_div(f_mul(t->b, derivative(t->a)), t->a)));
        }
        case NodeKind::call: {
            NodePtr u = t->a, du = derivative(t->a);
            switch (t->func) {
                case Func::sin: return f_mul(call(Func::cos, u), du);
                case Func::cos:
                    return f_mul(f_neg(call(Func::sin, u)), du);
                case Func::exp: return f_mul(call(Func::exp, u), du);
                case Func::sqrt:
                    return f_div(du, f_mul(num(2), call(Func::sqrt, u)));
                case Func::erf:
                    // 2/sqrt(pi) exp(-u^2) u'
                    return f_mul(
                        f_mul(num(1.1283791670955126),
                              call(Func::exp, f_neg(f_pow(u, num(2))))),
                        du);
                case Func::abs:
                    // u/|u| u'; undefined at u=0
                    return f_mul(f_div(u, call(Func::abs, u)), du);
                case Func::log: return f_div(du, u);
            }
        }
    }
    throw NumericsError("derivative: unreachable");
}

NodePtr bind(const NodePtr& t, const std::map<std::string, double>& params) {
    switch (t->kind) {
        case NodeKind::number:
        case NodeKind::var: return t;
        case NodeKind::param: {
            auto it = params.find(t->name);
            return it == params.end() ? t : num(it->second);
        }
        case NodeKind::neg: return f_neg(bind(t->a, params));
        case NodeKind::add: return f_add(bind(t->a, params), bind(t->b, params));
        case NodeKind::sub: return f_sub(bind(t->a, params), bind(t->b, params));
        case NodeKind::mul: return f_mul(bind(t->a, params), bind(t->b, params));
        case NodeKind::div: return f_div(bind(t->a, params), bind(t->b, params));
        case NodeKind::pow: return f_pow(bind(t->a, params), bind(t->b, params));
        case NodeKind::call: {
            NodePtr a = bind(t->a, params);
            if (a->kind == NodeKind::number) {
                // fold through the function
                NodePtr c = call(t->func, a);
                return num(eval(c, 0));
            }
            return call(t->func, a);
        }
    }
    throw NumericsError("bind: unreachable");
}

static double eval_rec(const Node* t, double x,
                       const std::map<std::string, double>* params) {
    switch (t->kind) {
        case NodeKind::number: return t->num;
        case NodeKind::var: return x;
        case NodeKind::param: {
            if (params) {
                auto it = params->find(t->name);
                if (it != params->end()) return it->second;
            }
            throw DomainError("unbound parameter '" + t->name + "' at x=" +
                              std::to_string(x));
        }
        case NodeKind::neg: return -eval_rec(t->a.get(), x, params);
        case NodeKind::add:
            return eval_rec(t->a.get(), x, params) +
                   eval_rec(t->b.get(), x, params);
        case NodeKind::sub:
            return eval_rec(t->a.get(), x, params) -
                   eval_rec(t->b.get(), x, params);
        case NodeKind::mul:
            return eval_rec(t->a.get(), x, params) *
                   eval_rec(t->b.get(), x, params);
        case NodeKind::div: {
            double a = eval_rec(t->a.get(), x, params);
            double b = eval_rec(t->b.get(), x, params);
            if (b == 0)
                throw DomainError("division by zero at x=" + std::to_string(x));
            return a / b;
        }
        case NodeKind::pow: {
            double a = eval_rec(t->a.get(), x, params);
            double b = eval_rec(t->b.get(), x, params);
            double r = std::pow(a, b);
            if (std::isnan(r))
                throw DomainError("pow domain violation at x=" +
                                  std::to_string(x));
            return r;
        }
        case NodeKind::call: {
            double a = eval_rec(t->a.get(), x, params);
            switch (t->func) {
                case Func::sin: return std::sin(a);
                case Func::cos: return std::cos(a);
                case Func::exp: return std::exp(a);
                case Func::sqrt:
                    if (a < 0)
                        throw DomainError("sqrt of negative value at x=" +
                                          std::to_string(x));
                    return std::sqrt(a);
                case Func::erf: return std::erf(a);
                case Func::abs: return std::fabs(a);
                case Func::log:
                    if (a <= 0)
                        throw DomainError("log domain violation at x=" +
                                          std::to_string(x));
                    return std::log(a);
            }
        }
    }
    throw NumericsError("eval: unreachable");
}

double eval(const NodePtr& t, double x,
            const std::map<std::string, double>& params) {
    return eval_rec(t.get(), x, params.empty() ? nullptr : &params);
}

std::vector<std::string> free_params(const NodePtr& t) {
    std::set<std::string> s;
    struct {
        std::set<std::string>& s;
        void walk(const NodePtr& n) {
            if (!n) return;
            if (n->kind == NodeKind::param) s.insert(n->name);
            walk(n->a);
            walk(n->b);
        }
    } w{s};
    w.walk(t);
    return {s.begin(), s.end()};
}

// ---------------------------------------------------------------- poles

// roots of a denominator come from its multiplicative factors; powers with
// positive exponent inherit the base's roots, negative exponents are poles of
// the enclosing expression handled by the caller collecting this factor
static void collect_root_bases(const NodePtr& t, std::vector<NodePtr>& out) {
    if (t->kind == NodeKind::mul) {
        collect_root_bases(t->a, out);
        collect_root_bases(t->b, out);
        return;
    }
    if (t->kind == NodeKind::pow && t->b->kind == NodeKind::number) {
        collect_root_bases(t->a, out);
        return;
    }
    if (t->kind == NodeKind::neg) {
        collect_root_bases(t->a, out);
        return;
    }
    out.push_back(t);
}

static void collect_denominators(const NodePtr& t, std::vector<NodePtr>& out) {
    if (!t) return;
    if (t->kind == NodeKind::div) collect_root_bases(t->b, out);
    if (t->kind == NodeKind::pow && t->b->kind == NodeKind::number &&
        t->b->num < 0)
        collect_root_bases(t->a, out);
    collect_denominators(t->a, out);
    collect_denominators(t->b, out);
}

std::vector<double> find_singularities(const NodePtr& bound_ast, double lo,
                                       double hi) {
    std::vector<NodePtr> bases;
    collect_denominators(bound_ast, bases);
    std::vector<double> roots;
    const int nscan = 4096;
    for (const NodePtr& g : bases) {
        if (!depends_on_x(g)) continue;
        auto gv = [&](double x) { return eval(g, x); };
        double prev_x = lo, prev_f;
        bool have_prev = false;
        for (int i = 0; i <= nscan; ++i) {
            double xx = lo + (hi - lo) * i / nscan;
            double f;
            try {
                f = gv(xx);
            } catch (const DomainError&) {
                have_prev = false;
                continue;
            }
            if (!std::isfinite(f)) {
                have_prev = false;
                continue;
            }
            if (f == 0) {
                roots.push_back(xx);
            } else if (have_prev && (f < 0) != (prev_f < 0)) {
                double a = prev_x, b = xx, fa = prev_f;
                for (int it = 0; it < 100 && b - a > 1e-13; ++it) {
                    double m = 0.5 * (a + b), fm;
                    try {
                        fm = gv(m);
                    } catch (const DomainError&) {
                        break;
                    }
                    if (fm == 0) {
                        a = b = m;
                        break;
                    }
                    if ((fm < 0) == (fa < 0)) {
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                    }
                }
                roots.push_back(0.5 * (a + b));
            }
            prev_x = xx;
            prev_f = f;
            have_prev = true;
        }
    }
    // dedupe and keep only genuine blow-ups of the full expression
    std::sort(roots.begin(), roots.end());
    std::vector<double> out;
    for (double r : roots) {
        if (!out.empty() && std::fabs(r - out.back()) < 1e-9) continue;
        double scale = 1 + std::fabs(r);
        double vmax = 0;
        for (double d : {1e-6 * scale, 1e-8 * scale}) {
            for (double xx : {r - d, r + d}) {
                try {
                    double v = std::fabs(eval(bound_ast, xx));
                    if (v > vmax) vmax = v;
                } catch (const DomainError&) {
                    vmax = 1e300;  // exact hit on a nested pole
                }
            }
        }
        // 1e6 keeps first-order poles (superpotentials) while still
        // rejecting removable denominator zeros
        if (vmax >= 1e6) out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------- Potential1D

void Potential1D::rebind() {
    bound = expr::bind(ast, params);
    d_bound = expr::bind(d_ast, params);
}

void Potential1D::check_point(double x) const {
    if (!(x > domain_lo && x < domain_hi))
        throw DomainError("x=" + std::to_string(x) + " outside domain");
    for (double s : singularities)
        if (x == s)
            throw DomainError("evaluation at singularity x=" +
                              std::to_string(x));
}

double Potential1D::eval(double x) const {
    check_point(x);
    return expr::eval(bound, x);
}

double Potential1D::deriv(double x) const {
    check_point(x);
    return expr::eval(d_bound, x);
}

Potential1D Potential1D::shifted(double dx, double dv) const {
    // substitute x -> x + dx throughout, then subtract dv
    struct Subst {
        double dx;
        NodePtr run(const NodePtr& t) {
            switch (t->kind) {
                case NodeKind::number:
                case NodeKind::param: return t;
                case NodeKind::var:
                    return dx == 0 ? t : mk(NodeKind::add, var(), num(dx));
                case NodeKind::call: return call(t->func, run(t->a));
                case NodeKind::neg: return mk(NodeKind::neg, run(t->a));
                default: return mk(t->kind, run(t->a), run(t->b));
            }
        }
    } sub{dx};
    Potential1D p;
    p.ast = dv == 0 ? sub.run(ast) : f_sub(sub.run(ast), num(dv));
    p.d_ast = sub.run(d_ast);
    p.params = params;
    p.domain_lo = domain_lo == -1e308 ? domain_lo : domain_lo - dx;
    p.domain_hi = domain_hi == 1e308 ? domain_hi : domain_hi - dx;
    p.singularities = singularities;
    for (double& s : p.singularities) s -= dx;
    p.hbar = hbar;
    p.rebind();
    return p;
}

Potential1D make_potential(const std::string& src,
                           const std::map<std::string, double>& params,
                           double hbar, double domain_lo, double domain_hi) {
    Potential1D p;
    p.ast = parse(src);
    for (const std::string& name : free_params(p.ast))
        if (!params.count(name))
            throw DomainError("parameter '" + name + "' has no value");
    p.d_ast = derivative(p.ast);
    p.params = params;
    p.domain_lo = domain_lo;
    p.domain_hi = domain_hi;
    p.hbar = hbar;
    p.rebind();
    double lo = std::max(domain_lo, -64.0), hi = std::min(domain_hi, 64.0);
    p.singularities = find_singularities(p.bound, lo, hi);
    return p;
}

// ---------------------------------------------------------------- ExprFunction

double ExprFunction::eval(double x) const { return expr::eval(ast, x); }
double ExprFunction::deriv(double x) const { return expr::eval(d1, x); }
double ExprFunction::deriv2(double x) const { return expr::eval(d2, x); }

ExprFunction make_function(const std::string& src,
                           const std::map<std::string, double>& params) {
    ExprFunction f;
    NodePtr t = parse(src);
    f.ast = expr::bind(t, params);  // qualified: std::bind shadows via ADL
    for (const std::string& name : free_params(f.ast))
        throw DomainError("parameter '" + name + "' has no value");
    f.d1 = expr::bind(derivative(f.ast), {});
    f.d2 = expr::bind(derivative(f.d1), {});
    return f;
}

}  // namespace expr
}  // namespace isolab
