#pragma once

#include <utility>

#include "varred/linsolve.hpp"
#include "varred/model.hpp"
#include "varred/radial.hpp"

namespace varred {

struct GroundStateOptions {
    double tol_crit = 1e-8;        // H¹ residual target
    int max_iter = 10000;          // constrained-descent iteration cap
    int reseed_checks = 3;         // randomized radial re-runs certifying a single profile
    unsigned long long seed = 2026;
    double reseed_match_tol = 1e-6;
};

/// Certified ground state of the limit functional I.
struct GroundState {
    Field omega;
    RadialProfile profile;
    double c = 0.0;                 // I(omega)
    double nehari_residual = 0.0;   // |<grad I(omega), omega>|
    double gradient_residual = 0.0; // ||grad I(omega)||_{H1}
    double decay_rate = 0.0;
    bool decay_exponential = false;
    double angular_fraction = 0.0;
    int iterations = 0;
};

/// Unique t > 0 with <grad I(t u), t u> = 0, and the projected field t u.
/// Closed form for a single power; monotone bracketing bisection otherwise.
std::pair<double, Field> nehari_project(const EnergyModel& model, const Field& u);

/// Nehari-constrained descent followed by a translation-guarded Newton polish.
GroundState solve_ground_state(const EnergyModel& model, const Field& seed_field,
                               const GroundStateOptions& opt = {});
/// Same, seeded with the unit-height Gaussian at the origin.
GroundState solve_ground_state(const EnergyModel& model, const GroundStateOptions& opt = {});

/// Tail fit of a lattice field via the compensated radial log profile.
DecayFit decay_rate(const Field& u);

/// Ray certificate: max_t I(t omega) is attained at t = 1 and equals c.
/// Returns c; throws CertificateError when the ray maximum disagrees.
double mountain_pass_value(const EnergyModel& model, const GroundState& gs, double tol = 1e-7);

} // namespace varred
