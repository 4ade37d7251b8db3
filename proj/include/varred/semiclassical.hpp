#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "varred/correction.hpp"
#include "varred/localization.hpp"
#include "varred/scaling.hpp"

namespace varred {

struct SemiclassicalConfig {
    double R = 0.0;          // search radius for y; 0 picks L/4
    double tol_y = 1e-8;     // gradient target of the y optimization
    double tol_outer = 1e-9; // reduced-gradient target of the outer solve
    double tol_final = 1e-7; // full-space residual acceptance
    int max_outer = 40;
    int max_y_steps = 30;
    int lambda_probes = 4;   // kept directions probed by the moving-frame gap
    bool certify = true;     // run the transverse inverse bound at the solution
};

struct MinimizeYResult {
    std::array<double, 3> y{};
    CorrectionResult corr; // correction at the returned y
    int steps = 0;
    double grad_norm = 0.0;
    Mat3 hess{};            // reduced-energy Hessian in y at the optimum
    double extremal_eig = 0.0; // smallest (σ=+1) / largest (σ=-1) eigenvalue
};

/// Interior optimizer of the reduced energy over translations; minimizes for
/// σ = +1 and maximizes for σ = -1, per the sign of ΔQ.
MinimizeYResult minimize_y(const EnergyModel& model, const Reduction& red, const Field& u,
                           double eps, const SemiclassicalConfig& cfg = {},
                           const std::array<double, 3>* y0 = nullptr,
                           const Field* what0 = nullptr);

struct EtaReport {
    double psi = 0.0;
    double limit_energy = 0.0; // I(u + π(u))
    double gamma = 0.0;        // Γ(u, y)
    double eta = 0.0;          // Ψ - limit - ½ ε^{n*} Γ
    double ratio = 0.0;        // η / ε^{n*} (0 at ε = 0)
};

/// Remainder of the two-term expansion of the reduced energy.
EtaReport expansion_check(const EnergyModel& model, const Reduction& red, const Field& u,
                          const std::array<double, 3>& y, double eps,
                          const CorrectionResult& corr);

struct LambdaReport {
    double distance = 0.0; // ‖what - π(u)‖
    double dy_sup = 0.0;   // worst moving-frame derivative gap in y
    double du_sup = 0.0;   // worst gap along probed kept directions
    double lambda = 0.0;   // sum of the three
    double ratio = 0.0;    // Λ / ε^{n*}
};

/// Distance between the ε-correction and the limit correction, measured with
/// first derivatives, per the perturbation estimate it certifies.
LambdaReport lambda_diagnostic(const TangentFrame& fr, double eps,
                               const CorrectionResult& corr, int probes = 4);

struct SolveRow {
    double eps = 0.0;
    double psi = 0.0;
    double gamma = 0.0;
    double eta = 0.0;
    double eta_ratio = 0.0;
    double lambda = 0.0;
    double lambda_ratio = 0.0;
    double residual_full = 0.0; // ‖∇E_ε(utilde)‖_H1, unprojected
    double distance = 0.0;      // ‖utilde - ω(. - y)‖_H1
    double c_est = 0.0;         // transverse inverse-bound σ at the solution
    double a_k = 0.0;           // smallest Γ-Hessian eigenvalue
    std::array<double, 3> y{};
    int outer_iterations = 0;
    double seconds = 0.0;
    std::uint64_t config_hash = 0;
    double tol_fix = 0.0;
    double tol_final = 0.0;
};

struct SemiclassicalSolution {
    double eps = 0.0;
    Field u;       // kept-space component of the critical point
    std::array<double, 3> y{};
    CorrectionResult corr;
    Field utilde;  // assembled solution u(. - y) + w
    SolveRow row;
};

/// Critical point of the reduced energy in (u, y) at one ε, assembled and
/// measured in the full space. A warm start reuses a neighboring solution.
SemiclassicalSolution solve_semiclassical(const EnergyModel& model, const Reduction& red,
                                          double eps, const SemiclassicalConfig& cfg = {},
                                          const SemiclassicalSolution* warm = nullptr);

struct ScanResult {
    std::vector<SemiclassicalSolution> runs; // ε descending
    PowerFit eta_fit;      // |η| against ε
    PowerFit lambda_fit;   // Λ against ε
    PowerFit dist_fit;     // distance against ε
    double eta_ratio_first = 0.0;
    double eta_ratio_last = 0.0;
    double lambda_ratio_spread = 0.0; // max/min of Λ/ε^{n*} over the scan
};

/// Warm-started descending ε scan with scaling fits over the collected rows.
ScanResult scan_epsilon(const EnergyModel& model, const Reduction& red,
                        std::vector<double> eps_list, const SemiclassicalConfig& cfg = {});

} // namespace varred
