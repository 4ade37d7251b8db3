#pragma once

#include <array>
#include <vector>

#include "varred/frame.hpp"

namespace varred {

/// Outcome of the transverse correction solve at one (u, y, ε).
struct CorrectionResult {
    Field w;     // correction in original coordinates, orthogonal to the frame
    Field what;  // the same correction recentred at y = 0 (w = what(. - y))
    int iterations = 0;
    double residual = 0.0; // ‖S ∇E_ε(u(.-y) + w)‖_H1 at exit
    std::vector<double> quotients;
    std::array<double, 3> decay_sups{}; // sup (1+|x|)^n |w|, n = 0, 1, 2
};

/// Lattice field of V(ε(x + y)).
Field shifted_potential_field(const Potential& pot, const GridSpec& grid, double eps,
                              const std::array<double, 3>& y);

/// Lattice field of (d/dy_j) V(ε(x + y)) = ε (∂_j V)(ε(x + y)).
Field shifted_potential_dy(const Potential& pot, const GridSpec& grid, double eps,
                           const std::array<double, 3>& y, int j);

/// H¹ gradient of the recentred energy I(v) + ½ ∫ vshift v².
Field recentred_gradient(const EnergyModel& model, const Field& vshift, const Field& v);

/// Its Hessian action with the nonlinear factor frozen at a base field.
Field recentred_hessian_apply(const Field& vshift, const Field& fprime_at_base, const Field& h);

/// Contraction solve for the unique small transverse correction of the chart;
/// optional warm start is given in recentred (y = 0) coordinates.
CorrectionResult solve_w(const TangentFrame& fr, double eps, const Field* what0 = nullptr);

/// E_ε(u(.-y) + w): the reduced energy of the chart at its correction.
double reduced_Psi(const TangentFrame& fr, double eps, const CorrectionResult& res);

/// Gradient of the reduced energy in y. Stationarity of the correction removes
/// every implicit term, leaving the moving-potential quadrature
///   ∂_{y_j} Ψ = ½ ∫ (d/dy_j V(ε(x+y))) (u + what)².
std::array<double, 3> psi_gradient_y(const TangentFrame& fr, double eps,
                                     const CorrectionResult& res);

/// Gradient of the reduced energy along a kept-space direction h:
/// ⟨∇Ê(u + what), h⟩ in recentred coordinates.
double psi_gradient_u(const TangentFrame& fr, double eps, const CorrectionResult& res,
                      const Field& h);

/// Implicit derivative of the recentred correction along a kept direction h,
/// from the linearized stationarity equation on the fixed complement.
Field solve_duw_hat(const TangentFrame& fr, double eps, const CorrectionResult& res,
                    const Field& h);

/// Implicit derivative of the recentred correction in y_j; the forcing is the
/// moving-potential term of the recentred gradient.
Field solve_dyw_hat(const TangentFrame& fr, double eps, const CorrectionResult& res, int j);

} // namespace varred
