#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "varred/basis.hpp"
#include "varred/linsolve.hpp"
#include "varred/model.hpp"

namespace varred {

/// Variational callbacks the reduction acts on. The standard wiring points at
/// an EnergyModel's limit functional; engineered linear problems supply their
/// own gradient and Hessian action.
struct VariationalOps {
    std::function<double(const Field&)> energy;
    std::function<Field(const Field&)> grad;
    std::function<Field(const Field&, const Field&)> hess; // hess(u)·h
};

VariationalOps model_ops(const EnergyModel& model);
/// I(u) = 1/2 ‖u‖²: gradient is the identity, Hessian is the identity.
VariationalOps quadratic_ops();

struct ReductionConfig {
    double delta = 0.0; // neighborhood radius in X_k; 0 picks 0.2·‖anchor‖
    double tau = 0.0;   // transverse radius; 0 picks 0.25·‖anchor‖
    double rho = 0.0;   // contraction ball radius; 0 picks tau
    double tol_fix = 1e-10;
    double tol_crit = 1e-8;
    int max_fix_iter = 60;
    int max_newton = 30;
    double quotient_slack = 0.05; // contraction certificate bar is 0.5 + slack
    GmresOptions lin{1e-12, 500, 80};
    bool certify = true; // run the inverse bound at the anchor on construction
};

struct PiTrace {
    std::vector<double> quotients; // successive correction-step ratios
    double residual = 0.0;         // transverse gradient norm at exit
    double pi_norm = 0.0;
    int iterations = 0;
    bool from_cache = false;
};

enum class Selector { Xk_perp, W_perp, E_perp };

struct HessBoundOptions {
    double tol = 5e-3; // Rayleigh residual on the squared operator; the
                       // reported sigma is the conservative theta - residual
    int max_iter = 800;
    std::uint64_t seed = 2026;
    double certify_bound = 2.2;
};

struct HessBoundReport {
    bool invertible = false;
    double sigma_min = 0.0;
    double bound = 0.0; // 1/sigma_min
    double residual = 0.0;
    int iterations = 0;
};

/// Smallest singular value of P∘hess∘P restricted to the complement of the
/// given frame (H¹-orthonormal), via Rayleigh minimization of the squared
/// operator. The frame spans the projected-out directions.
HessBoundReport projected_hessian_inverse_bound(const OpFn& hess_at_v,
                                                const std::vector<Field>& projected_out,
                                                const GridSpec& grid,
                                                const HessBoundOptions& opt = {});

/// The finite-dimensional reduction around one anchor profile: transverse
/// correction pi by contraction, its derivative, the reduced functionals, and
/// the critical-point search in the Galerkin space.
class Reduction {
public:
    Reduction(const EnergyModel& model, GalerkinBasis basis, Field anchor,
              ReductionConfig cfg = {});
    Reduction(VariationalOps ops, GalerkinBasis basis, Field anchor, ReductionConfig cfg = {});

    const GalerkinBasis& galerkin() const { return basis_; }
    const ReductionConfig& config() const { return cfg_; }
    const Field& anchor() const { return anchor_; }
    const Field& projected_anchor() const { return pk_anchor_; }
    const HessBoundReport& certificate() const { return cert_; }
    const std::vector<Field>& guard_frame() const { return z_; }

    Field project(const Field& u) const { return basis_.project(u); }
    /// Complement of X_k plus the translation guard: the space pi lives in.
    Field transverse(const Field& u) const;
    bool in_neighborhood(const Field& v) const;

    /// One application of the contraction map at base point v.
    Field psi(const Field& v, const Field& w) const;
    std::pair<Field, PiTrace> solve_pi(const Field& v) const;
    std::pair<Field, PiTrace> solve_pi(const Field& v, const Field& w0) const;
    /// Cached variant; content-addressed, append-only.
    std::pair<Field, PiTrace> pi(const Field& v) const;
    /// Directional derivative of pi at v along h (h in X_k).
    Field dpi(const Field& v, const Field& h) const;

    double g(const Field& v) const;        // I(v + pi(v))
    Field grad_g(const Field& v) const;    // X_k component of the lifted gradient
    double script_I(const Field& u) const; // 1/2 ‖u − P_k u‖² + g(P_k u)
    Field grad_script_I(const Field& u) const;

    HessBoundReport inverse_bound(const Field& v, Selector sel,
                                  const HessBoundOptions& opt = {}) const;

    struct Critical {
        Field v;
        Field lift;
        double reduced_residual = 0.0;
        double lifted_residual = 0.0;
        int newton_steps = 0;
    };
    Critical critical_point(const Field& seed) const;

    std::size_t cache_size() const;

private:
    VariationalOps ops_;
    GalerkinBasis basis_;
    Field anchor_;
    Field pk_anchor_;
    std::vector<Field> z_; // translation guard, H¹-orthonormal, ⊥ X_k
    ReductionConfig cfg_;
    HessBoundReport cert_;

    struct CacheEntry {
        Field v;
        Field pi;
        PiTrace trace;
    };
    mutable std::mutex mu_;
    mutable std::deque<CacheEntry> entries_;
    mutable std::map<std::uint64_t, std::vector<std::size_t>> index_;

    void finish_setup();
    Field solve_transverse(const Field& base, const Field& rhs) const;
    std::pair<Field, PiTrace> solve_pi_impl(const Field& v, const Field* w0) const;
};

} // namespace varred
