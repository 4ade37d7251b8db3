#pragma once

#include <array>
#include <vector>

#include "varred/model.hpp"
#include "varred/reduction.hpp"

namespace varred {

using Mat3 = std::array<std::array<double, 3>, 3>;

/// Exact polynomial expansion of the localization functional
///   Γ(u, y) = ∫ Q(x + y) ρ(x) dx,  ρ = (u + π(u))²,
/// through the lattice moments ∫ x^β ρ for |β| ≤ deg Q.
class GammaExpansion {
public:
    GammaExpansion(const Potential& pot, const Field& lifted);

    int dim() const { return dim_; }
    double moment(const std::array<int, 3>& beta) const;

    double value(const std::array<double, 3>& y) const;
    std::array<double, 3> gradient(const std::array<double, 3>& y) const;
    Mat3 hessian(const std::array<double, 3>& y) const;

private:
    int dim_;
    int nstar_;
    std::vector<Monomial> q_;
    double moments_[5][5][5]{}; // ∫ x^β ρ, per-axis degree ≤ 4
};

/// Γ at y = 0 with its gradient and the Hessian computed four ways.
struct LocalizationData {
    double gamma = 0.0;
    std::array<double, 3> grad_y{};
    Mat3 hess{};        // moment polynomial (primary)
    Mat3 hess_fd{};     // central differences of direct quadratures of Γ
    Mat3 hess_gradq{};  // -2 ∫ ∂_j Q · (u+π) ∂_i (u+π), symmetrized
    double alpha_lapq = 0.0; // (1/N) ∫ ΔQ · ρ, the isotropic diagonal
    double a_k = 0.0;        // smallest eigenvalue of the primary Hessian
};

/// Assemble the localization data of u under the reduction's correction.
LocalizationData localize(const Reduction& red, const Potential& pot, const Field& u);

/// Interior optimizer of the Γ polynomial over the ball |y| ≤ R: minimized for
/// σ = +1, maximized for σ = -1. Throws when the stationary point is not
/// interior or the curvature sign contradicts σ.
std::array<double, 3> optimize_gamma(const GammaExpansion& gx, double R, int sigma);

} // namespace varred
