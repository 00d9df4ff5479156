#include "isolab/families.hpp"

#include <cmath>

#include "isolab/errors.hpp"

namespace isolab {
namespace families {

using expr::Potential1D;
using expr::make_potential;

Potential1D harmonic(double omega, double hbar) {
    if (!(omega > 0)) throw DomainError("harmonic: omega must be positive");
    return make_potential("w^2*x^2/2", {{"w", omega}}, hbar);
}

Potential1D isotonic(double a, double b, double hbar) {
    if (!(a > 0) || !(b > 0))
        throw DomainError("isotonic: a and b must be positive");
    return make_potential("a*x^2 + b/x^2", {{"a", a}, {"b", b}}, hbar, 0.0);
}

Potential1D quartic(double hbar) { return make_potential("x^4", {}, hbar); }

Potential1D double_pole(double alpha_sq, double hbar) {
    if (alpha_sq == 0) throw DomainError("double_pole: alpha_sq must be nonzero");
    if (alpha_sq > 0) {
        double al = std::sqrt(alpha_sq);
        return make_potential(
            "hb^2*x^2/(8*as^2) + hb^2/(x-al)^2 + hb^2/(x+al)^2",
            {{"hb", hbar}, {"al", al}, {"as", alpha_sq}}, hbar);
    }
    double be = std::sqrt(-alpha_sq);
    return make_potential("hb^2*x^2/(8*be^4) + 2*hb^2*(x^2-be^2)/(x^2+be^2)^2",
                          {{"hb", hbar}, {"be", be}}, hbar);
}

}  // namespace families
}  // namespace isolab
