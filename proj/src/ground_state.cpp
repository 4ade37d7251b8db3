#include "varred/ground_state.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "varred/errors.hpp"

namespace varred {

namespace {

/// Moments int |u|^{beta_i} for every power term.
std::vector<double> power_moments(const Nonlinearity& nl, const Field& u) {
    std::vector<double> mom(nl.terms().size(), 0.0);
    for (std::size_t k = 0; k < mom.size(); ++k) {
        const double beta = nl.terms()[k].beta;
        double s = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) s += std::pow(std::fabs(u[i]), beta);
        mom[k] = s * u.grid().cell_volume();
    }
    return mom;
}

/// H¹-orthonormal frame of the discrete translation modes of u.
std::vector<Field> translation_frame(const Field& u) {
    std::vector<Field> z;
    for (int d = 0; d < u.grid().dim(); ++d) {
        Field zi = derivative(u, d);
        for (const auto& prev : z) axpy(-h1_inner(prev, zi), prev, zi);
        const double n = h1_norm(zi);
        if (n > 1e-12) {
            zi *= 1.0 / n;
            z.push_back(std::move(zi));
        }
    }
    return z;
}

Field project_out(const std::vector<Field>& z, Field v) {
    for (const auto& zi : z) axpy(-h1_inner(zi, v), zi, v);
    return v;
}

/// Descent to the Nehari-constrained minimizer, then Newton on the full gradient
/// with the translation near-kernel projected out of the linear solves.
GroundState solve_core(const EnergyModel& model, Field u, const GroundStateOptions& opt) {
    if (u.grid() != model.grid()) throw std::invalid_argument("solve_ground_state: seed grid mismatch");
    const Nonlinearity& nl = model.nonlinearity();

    for (auto& v : u.values()) v = std::fabs(v);
    u = nehari_project(model, u).second;
    double E = model.energy_I(u);

    int iters = 0;
    double alpha = 1.0;
    const double switch_tol = 1e-5;
    for (; iters < opt.max_iter; ++iters) {
        Field g = model.grad_I(u);
        const double gr = h1_norm(g);
        if (gr <= switch_tol) break;
        bool accepted = false;
        for (int bt = 0; bt < 40 && !accepted; ++bt) {
            Field trial = u;
            axpy(-alpha, g, trial);
            for (auto& v : trial.values()) v = std::fabs(v);
            double t = 0.0;
            const double h1 = h1_inner(trial, trial);
            if (h1 == 0.0) {
                alpha *= 0.5;
                continue;
            }
            const std::vector<double> mom = power_moments(nl, trial);
            if (nl.terms().size() == 1) {
                t = std::pow(h1 / (nl.terms()[0].a * mom[0]), 1.0 / (nl.terms()[0].beta - 2.0));
            } else {
                auto psi = [&](double s) {
                    double v = h1;
                    for (std::size_t k = 0; k < mom.size(); ++k)
                        v -= nl.terms()[k].a * std::pow(s, nl.terms()[k].beta - 2.0) * mom[k];
                    return v;
                };
                double lo = 1.0, hi = 1.0;
                while (psi(hi) > 0.0 && hi < 1e12) hi *= 2.0;
                while (psi(lo) < 0.0 && lo > 1e-12) lo *= 0.5;
                for (int b = 0; b < 160; ++b) {
                    const double mid = 0.5 * (lo + hi);
                    (psi(mid) > 0.0 ? lo : hi) = mid;
                }
                t = 0.5 * (lo + hi);
            }
            // I(t * trial) from the already-computed scalars.
            double Et = 0.5 * t * t * h1;
            for (std::size_t k = 0; k < mom.size(); ++k)
                Et -= nl.terms()[k].a / nl.terms()[k].beta * std::pow(t, nl.terms()[k].beta) * mom[k];
            if (Et <= E - 1e-4 * alpha * gr * gr) {
                trial *= t;
                u = std::move(trial);
                E = Et;
                accepted = true;
            } else {
                alpha *= 0.5;
            }
        }
        if (!accepted) break; // stagnation at the constrained minimizer; Newton takes over
        alpha = std::min(2.0 * alpha, 4.0);
    }

    GmresOptions go;
    go.tol = 1e-12;
    go.max_iter = 400;
    go.restart = 60;
    // Polish well below tol_crit: pointwise noise must sit under the box-corner
    // tail of the solution so the sign certificate stays meaningful.
    const double polish_tol = std::min(opt.tol_crit, 2e-12);
    double gr = 0.0;
    int newton = 0;
    for (; newton < 50; ++newton) {
        Field g = model.grad_I(u);
        const double gr_prev = gr;
        gr = h1_norm(g);
        if (gr <= polish_tol) break;
        if (newton > 0 && gr > 0.5 * gr_prev && gr <= opt.tol_crit) break; // round-off floor
        const std::vector<Field> z = translation_frame(u);
        Field rhs = project_out(z, g);
        OpFn A = [&](const Field& h) {
            Field ph = project_out(z, h);
            Field out = project_out(z, model.hess_I_apply(u, ph));
            // identity on the frame keeps the operator invertible everywhere
            out += h;
            out -= ph;
            return out;
        };
        Field delta(u.grid());
        const SolveStats st = gmres_h1(A, rhs, delta, go);
        if (!st.converged)
            throw NonConvergenceError("ground state: inner linear solve stalled, residual " +
                                      std::to_string(st.residual));
        double step = 1.0;
        for (int bt = 0;; ++bt) {
            Field trial = u;
            axpy(-step, delta, trial);
            const double gt = h1_norm(model.grad_I(trial));
            if (gt <= (1.0 - 0.25 * step) * gr || bt >= 11) {
                u = std::move(trial);
                break;
            }
            step *= 0.5;
        }
    }
    if (gr > opt.tol_crit)
        throw NonConvergenceError("ground state: Newton stalled at residual " + std::to_string(gr));
    iters += newton;

    double smin = u[0], smax = u[0];
    for (std::size_t i = 0; i < u.size(); ++i) {
        smin = std::min(smin, u[i]);
        smax = std::max(smax, u[i]);
    }
    // Negative dips beyond the achieved residual noise mean a genuine sign change.
    const double sign_floor = 100.0 * std::max(gr, 1e-14);
    if (smin < -sign_floor && smax > sign_floor)
        throw CertificateError("ground state: sign-changing result");

    GroundState gs{Field(u.grid()), {}, 0.0, 0.0, 0.0, 0.0, false, 0.0, 0};
    gs.c = model.energy_I(u);
    gs.gradient_residual = h1_norm(model.grad_I(u));
    gs.nehari_residual = std::fabs(h1_inner(model.grad_I(u), u));
    gs.angular_fraction = angular_energy_fraction(u);
    gs.profile = radial_extract(u);
    const DecayFit fit = decay_fit(gs.profile, u.grid().dim(), u.grid().half_width());
    gs.decay_rate = fit.exponent;
    gs.decay_exponential = fit.exponential;
    gs.iterations = iters;
    gs.omega = std::move(u);
    return gs;
}

} // namespace

std::pair<double, Field> nehari_project(const EnergyModel& model, const Field& u) {
    const Nonlinearity& nl = model.nonlinearity();
    const double h1 = h1_inner(u, u);
    if (h1 == 0.0) throw std::invalid_argument("nehari_project: zero field");
    const std::vector<double> mom = power_moments(nl, u);
    for (double m : mom)
        if (!(m > 0.0)) throw std::invalid_argument("nehari_project: vanishing power moment");

    double t;
    if (nl.terms().size() == 1) {
        t = std::pow(h1 / (nl.terms()[0].a * mom[0]), 1.0 / (nl.terms()[0].beta - 2.0));
    } else {
        auto psi = [&](double s) {
            double v = h1;
            for (std::size_t k = 0; k < mom.size(); ++k)
                v -= nl.terms()[k].a * std::pow(s, nl.terms()[k].beta - 2.0) * mom[k];
            return v;
        };
        double lo = 1.0, hi = 1.0;
        while (psi(hi) > 0.0) {
            hi *= 2.0;
            if (hi > 1e12) throw std::runtime_error("nehari_project: no sign change");
        }
        while (psi(lo) < 0.0) {
            lo *= 0.5;
            if (lo < 1e-12) throw std::runtime_error("nehari_project: no sign change");
        }
        for (int b = 0; b < 160; ++b) {
            const double mid = 0.5 * (lo + hi);
            (psi(mid) > 0.0 ? lo : hi) = mid;
        }
        t = 0.5 * (lo + hi);
    }
    Field tu = u;
    tu *= t;
    return {t, std::move(tu)};
}

GroundState solve_ground_state(const EnergyModel& model, const Field& seed_field,
                               const GroundStateOptions& opt) {
    GroundState gs = solve_core(model, seed_field, opt);
    if (opt.reseed_checks > 0) {
        std::mt19937_64 rng(opt.seed);
        std::uniform_real_distribution<double> ua(0.7, 1.8), uw(0.8, 1.8);
        GroundStateOptions inner = opt;
        inner.reseed_checks = 0;
        const double ref = sup_norm(gs.omega);
        for (int k = 0; k < opt.reseed_checks; ++k) {
            const double a = ua(rng), w = uw(rng);
            Field sk = make_field(model.grid(), [&](const std::array<double, 3>& x) {
                const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                return a * std::exp(-r2 / (2.0 * w * w));
            });
            const GroundState alt = solve_core(model, sk, inner);
            if (sup_norm(alt.omega - gs.omega) > opt.reseed_match_tol * ref)
                throw CertificateError("ground state: randomized seeds reached distinct profiles");
        }
    }
    return gs;
}

GroundState solve_ground_state(const EnergyModel& model, const GroundStateOptions& opt) {
    Field seed = make_field(model.grid(), [](const std::array<double, 3>& x) {
        return std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0);
    });
    return solve_ground_state(model, seed, opt);
}

DecayFit decay_rate(const Field& u) {
    return decay_fit(radial_extract(u), u.grid().dim(), u.grid().half_width());
}

double mountain_pass_value(const EnergyModel& model, const GroundState& gs, double tol) {
    const Nonlinearity& nl = model.nonlinearity();
    const double h1 = h1_inner(gs.omega, gs.omega);
    const std::vector<double> mom = power_moments(nl, gs.omega);
    auto phi = [&](double t) {
        double v = 0.5 * t * t * h1;
        for (std::size_t k = 0; k < mom.size(); ++k)
            v -= nl.terms()[k].a / nl.terms()[k].beta * std::pow(t, nl.terms()[k].beta) * mom[k];
        return v;
    };
    // Golden-section maximum of the ray energy on [0.05, 2.5].
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 0.05, b = 2.5;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = phi(x1), f2 = phi(x2);
    for (int it = 0; it < 200; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = phi(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = phi(x1);
        }
    }
    const double tstar = 0.5 * (a + b);
    if (std::fabs(tstar - 1.0) > 1e-4)
        throw CertificateError("mountain pass: ray maximum away from t = 1, t = " + std::to_string(tstar));
    if (std::fabs(phi(tstar) - gs.c) > tol * std::max(1.0, std::fabs(gs.c)))
        throw CertificateError("mountain pass: ray maximum disagrees with the energy level");
    return gs.c;
}

} // namespace varred
