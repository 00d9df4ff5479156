#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace isolab {
namespace expr {

enum class NodeKind { number, var, param, neg, add, sub, mul, div, pow, call };

enum class Func { sin, cos, exp, sqrt, erf, abs, log };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind;
    double num = 0;         // number
    std::string name;       // param
    Func func = Func::sin;  // call
    NodePtr a, b;
};

/// grammar:
///   expr   := ('-')? term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := base ('^' factor)?            (right-associative)
///   base   := number | symbol | '(' expr ')' | func '(' expr ')'
/// the symbol `x` is the variable; any other symbol is a parameter
NodePtr parse(const std::string& src);

/// minimal-parenthesis form; parse(print(t)) is structurally identical to t
std::string print(const NodePtr& t);

bool equal(const NodePtr& a, const NodePtr& b);

/// symbolic d/dx with constant folding only
NodePtr derivative(const NodePtr& t);

/// substitute parameter values (unbound parameters throw DomainError on eval)
NodePtr bind(const NodePtr& t, const std::map<std::string, double>& params);

/// evaluate; params may be empty for a bound tree.
/// throws DomainError on unbound parameters, division by exactly zero,
/// or log/sqrt domain violations (all reported with x).
double eval(const NodePtr& t, double x,
            const std::map<std::string, double>& params = {});

std::vector<std::string> free_params(const NodePtr& t);

/// a 1-d potential: expression, its derivative, bound parameters,
/// open domain, interior singularities
struct Potential1D {
    NodePtr ast, d_ast;
    std::map<std::string, double> params;
    double domain_lo = -1e308, domain_hi = 1e308;  // open interval
    std::vector<double> singularities;   // sorted, interior |V|->inf points
    double hbar = 1.0;                   // mass is fixed to 1

    double eval(double x) const;   // V(x)
    double deriv(double x) const;  // V'(x)
    std::string source() const { return print(ast); }

    /// translated copy: x -> x + dx (well moved left by dx), V -> V - dv
    Potential1D shifted(double dx, double dv) const;

private:
    NodePtr bound, d_bound;  // parameter-substituted fast path
    friend Potential1D make_potential(const std::string&,
                                      const std::map<std::string, double>&,
                                      double, double, double);
    void rebind();
    void check_point(double x) const;
};

/// parse + differentiate + bind + locate singularities inside
/// [max(domain_lo,-scan), min(domain_hi,scan)] with scan = 64
Potential1D make_potential(const std::string& src,
                           const std::map<std::string, double>& params = {},
                           double hbar = 1.0,
                           double domain_lo = -1e308, double domain_hi = 1e308);

/// interior poles of V in [lo,hi]: candidate roots come from sign changes of
/// denominator factors (descending through products and powers), refined by
/// bisection to 1e-12 and kept only if |V| blows up on approach
std::vector<double> find_singularities(const NodePtr& bound_ast, double lo,
                                       double hi);

/// scalar function of x with two analytic derivatives (wavefunctions, probes)
struct ExprFunction {
    NodePtr ast, d1, d2;  // bound
    double eval(double x) const;
    double deriv(double x) const;
    double deriv2(double x) const;
};
ExprFunction make_function(const std::string& src,
                           const std::map<std::string, double>& params = {});

}  // namespace expr
}  // namespace isolab
