#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "varred/spectral.hpp"

namespace varred {

/// One power term a |t|^{beta-2} t of the nonlinearity.
struct PowerTerm {
    double a;
    double beta;
};

/// Sum-of-powers nonlinearity f(t) = sum a_i |t|^{beta_i - 2} t.
class Nonlinearity {
public:
    explicit Nonlinearity(std::vector<PowerTerm> terms);
    static Nonlinearity cubic() { return Nonlinearity({{1.0, 4.0}}); }

    const std::vector<PowerTerm>& terms() const { return terms_; }
    double mu() const { return terms_.front().beta; }
    double p1() const { return terms_.front().beta; }
    double p2() const { return terms_.back().beta; }
    double q() const { return terms_.front().beta; }

    double f(double t) const;
    double F(double t) const;
    double fprime(double t) const;

    Field f_of(const Field& u) const;
    Field fprime_of(const Field& u) const;
    /// integral F(u) by lattice quadrature.
    double F_integral(const Field& u) const;

private:
    std::vector<PowerTerm> terms_; // sorted by beta
};

/// Monomial c * x^alpha with |alpha| = n*.
struct Monomial {
    std::array<int, 3> alpha;
    double coeff;
};

/// Potential V = Q_{n*}(x - shift) + remainder(x - shift); shift defaults to 0
/// and exists only for engineered symmetry-breaking tests (it violates the
/// critical-point normalization at the origin, which validation reports).
class Potential {
public:
    struct Remainder {
        double coeff = 0.0; // 0 disables the remainder
        double width = 1.0; // bump support radius
    };

    Potential(int nstar, std::vector<Monomial> q_monomials, Remainder rem = Remainder{0.0, 1.0},
              std::array<double, 3> shift = {0.0, 0.0, 0.0});

    static Potential isotropic_quadratic(int dim);  // Q = |x|^2
    static Potential isotropic_quartic(int dim);    // Q = |x|^4

    /// Copy with the compactly supported higher-order remainder enabled.
    Potential with_bump(double coeff, double width = 4.0) const;

    int nstar() const { return nstar_; }
    const std::vector<Monomial>& q_monomials() const { return q_; }
    const std::vector<Monomial>& laplacian_q_monomials() const { return lap_q_; }
    const Remainder& remainder() const { return rem_; }
    const std::array<double, 3>& shift() const { return shift_; }
    /// Sign of ΔQ: +1, -1, or 0 when indefinite / identically zero.
    int sigma() const { return sigma_; }

    double eval_Q(const std::array<double, 3>& x) const;
    double eval_laplacian_Q(const std::array<double, 3>& x) const;
    double eval(const std::array<double, 3>& x) const; // full V
    /// Field of V(eps x) on the lattice.
    Field scaled_field(const GridSpec& grid, double eps) const;
    /// Field of Q(x + y) on the lattice (used by the localization functional).
    Field q_field_shifted(const GridSpec& grid, const std::array<double, 3>& y) const;

private:
    int nstar_;
    std::vector<Monomial> q_;
    std::vector<Monomial> lap_q_;
    Remainder rem_;
    std::array<double, 3> shift_;
    int sigma_;
};

struct HypothesisCheck {
    std::string name;
    bool passed;
    std::string detail;
};

struct HypothesisReport {
    std::vector<HypothesisCheck> checks;
    bool all_passed() const;
    std::string summary() const;
};

HypothesisReport validate_nonlinearity(const Nonlinearity& nl, int dim);
HypothesisReport validate_potential(const Potential& pot, const GridSpec& grid);

/// The three functionals and their derivative actions on lattice fields.
/// All gradients are H¹ Riesz representatives: pairing them with ⟨., .⟩_{H¹}
/// reproduces directional derivatives of the energies.
class EnergyModel {
public:
    EnergyModel(GridSpec grid, Nonlinearity nl, Potential pot);

    const GridSpec& grid() const { return grid_; }
    const Nonlinearity& nonlinearity() const { return nl_; }
    const Potential& potential() const { return pot_; }

    HypothesisReport validate() const;

    double energy_I(const Field& u) const;
    Field grad_I(const Field& u) const;
    Field hess_I_apply(const Field& u, const Field& h) const;

    double energy_E_eps(const Field& u, double eps) const;
    Field grad_E_eps(const Field& u, double eps) const;
    Field hess_E_eps_apply(const Field& u, double eps, const Field& h) const;

    /// Cached lattice field of V(eps x); checks box coercivity 1 + V > 0 once.
    const Field& potential_field(double eps) const;

private:
    GridSpec grid_;
    Nonlinearity nl_;
    Potential pot_;
    mutable std::map<double, Field> v_cache_;
};

} // namespace varred
