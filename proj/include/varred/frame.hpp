#pragma once

#include <array>
#include <vector>

#include "varred/model.hpp"
#include "varred/reduction.hpp"

namespace varred {

struct FrameOptions {
    double cond_limit = 1e6; // Gram condition ceiling before the chart is rejected
    double xk_tol = 1e-6;    // relative tolerance for "u lies in the kept space"
};

/// One chart of the translated reduction: the tangent space at (u, y) is the
/// y-translate of the kept space plus the translation directions of the
/// anchor, and the chart owns the orthogonal projection onto its complement.
class TangentFrame {
public:
    /// Standard chart: frame generators come from the reduction (kept basis
    /// plus translation guard), u must lie in the kept space and inside the
    /// certified neighborhood.
    TangentFrame(const EnergyModel& model, const Reduction& red, Field u,
                 const std::array<double, 3>& y, FrameOptions opt = {});

    /// Raw chart for engineered operator probes: explicit generators at y = 0,
    /// no neighborhood checks; a null model means a vanishing nonlinearity.
    TangentFrame(const EnergyModel* model, std::vector<Field> frame_at_zero, Field u,
                 const std::array<double, 3>& y, FrameOptions opt = {});

    const std::array<double, 3>& y() const { return y_; }
    const Field& u() const { return u_; }
    const Field& u_shifted() const { return u_shifted_; } // u(. - y)
    const std::vector<Field>& fields() const { return fields_; }
    double condition() const { return condition_; }
    const EnergyModel* model() const { return model_; }
    const Reduction* reduction() const { return red_; }
    /// f'(u(. - y)) on the lattice; identically zero for a null model.
    const Field& fprime_shifted() const { return fprime_shifted_; }

    /// Component of h orthogonal to every frame field (the projection S).
    Field project(const Field& h) const;
    /// Coefficients of the frame component of h in the frame fields.
    std::vector<double> tangential_coefficients(const Field& h) const;

private:
    void factor_gram(const FrameOptions& opt);

    const EnergyModel* model_ = nullptr;
    const Reduction* red_ = nullptr;
    std::array<double, 3> y_{};
    Field u_;
    Field u_shifted_;
    Field fprime_shifted_;
    std::vector<Field> fields_;
    std::vector<double> gram_chol_; // row-major lower Cholesky factor
    double condition_ = 1.0;
};

/// The frozen transverse operator of the chart:
///   w -> w - S (-Δ + 1 + V(εx))^{-1} (f'(u(.-y)) w).
Field apply_L(const TangentFrame& fr, double eps, const Field& w,
              const SolveOptions& inner = {});

/// Smallest-singular-value certificate of that operator on the complement.
HessBoundReport inverse_bound_L(const TangentFrame& fr, double eps,
                                HessBoundOptions opt = {});

} // namespace varred
