#pragma once

#include "isolab/expr.hpp"

namespace isolab {
namespace families {

/// w^2 x^2 / 2
expr::Potential1D harmonic(double omega = 1.0, double hbar = 1.0);

/// a x^2 + b/x^2 on (0, inf); requires a > 0, b > 0 for the classical well
expr::Potential1D isotonic(double a, double b, double hbar = 1.0);

/// x^4
expr::Potential1D quartic(double hbar = 1.0);

/// hb^2 x^2/(8 as^2) + hb^2/(x-al)^2 + hb^2/(x+al)^2, al = sqrt(alpha_sq):
/// double-pole well family. alpha_sq > 0 gives the singular form with poles
/// at +-al; alpha_sq < 0 gives the smooth everywhere-analytic variant
/// hb^2 x^2/(8 be^4) + 2 hb^2 (x^2-be^2)/(x^2+be^2)^2, be = sqrt(-alpha_sq).
expr::Potential1D double_pole(double alpha_sq, double hbar = 1.0);

}  // namespace families
}  // namespace isolab
