#include "varred/correction.hpp"

#include <cmath>
#include <stdexcept>

#include "varred/errors.hpp"
#include "varred/linsolve.hpp"

namespace varred {

namespace {

// step of the five-point difference used for the moving-potential fields;
// exact through quartic polynomials
constexpr double kYStep = 1e-3;

Field transverse_op(const Reduction& red, const Field& vshift, const Field& fprime,
                    const Field& h) {
    Field th = red.transverse(h);
    Field img = recentred_hessian_apply(vshift, fprime, th);
    Field out = red.transverse(img);
    out += h;
    out -= th;
    return out;
}

Field solve_transverse_hat(const Reduction& red, const Field& vshift, const Field& fprime,
                           const Field& rhs) {
    Field x(rhs.grid());
    GmresOptions opt = red.config().lin;
    const SolveStats st = gmres_h1(
        [&](const Field& h) { return transverse_op(red, vshift, fprime, h); },
        red.transverse(rhs), x, opt);
    if (!st.converged)
        throw NonConvergenceError("correction: transverse linear solve did not converge");
    return red.transverse(x);
}

std::array<double, 3> decay_sups_of(const Field& w) {
    const GridSpec& g = w.grid();
    std::array<double, 3> sups{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < w.size(); ++i) {
        const std::array<int, 3> idx = g.unravel(i);
        double r2 = 0.0;
        for (int d = 0; d < g.dim(); ++d) {
            const double c = g.coord(idx[d]);
            r2 += c * c;
        }
        const double base = 1.0 + std::sqrt(r2);
        const double a = std::fabs(w[i]);
        double f = a;
        for (int n = 0; n < 3; ++n) {
            sups[n] = std::max(sups[n], f);
            f *= base;
        }
    }
    return sups;
}

} // namespace

Field shifted_potential_field(const Potential& pot, const GridSpec& grid, double eps,
                              const std::array<double, 3>& y) {
    return make_field(grid, [&](const std::array<double, 3>& x) {
        return pot.eval({eps * (x[0] + y[0]), eps * (x[1] + y[1]), eps * (x[2] + y[2])});
    });
}

Field shifted_potential_dy(const Potential& pot, const GridSpec& grid, double eps,
                           const std::array<double, 3>& y, int j) {
    return make_field(grid, [&](const std::array<double, 3>& x) {
        std::array<double, 3> z{eps * (x[0] + y[0]), eps * (x[1] + y[1]), eps * (x[2] + y[2])};
        const double h = eps * kYStep;
        double vals[4];
        const double offs[4] = {2.0 * h, h, -h, -2.0 * h};
        for (int s = 0; s < 4; ++s) {
            std::array<double, 3> zs = z;
            zs[j] += offs[s];
            vals[s] = pot.eval(zs);
        }
        return (-vals[0] + 8.0 * vals[1] - 8.0 * vals[2] + vals[3]) / (12.0 * kYStep);
    });
}

Field recentred_gradient(const EnergyModel& model, const Field& vshift, const Field& v) {
    Field rhs = model.nonlinearity().f_of(v);
    rhs -= hadamard(vshift, v);
    Field out = v;
    out -= helmholtz_inverse(rhs);
    return out;
}

Field recentred_hessian_apply(const Field& vshift, const Field& fprime_at_base, const Field& h) {
    Field rhs = hadamard(fprime_at_base, h);
    rhs -= hadamard(vshift, h);
    Field out = h;
    out -= helmholtz_inverse(rhs);
    return out;
}

CorrectionResult solve_w(const TangentFrame& fr, double eps, const Field* what0) {
    if (fr.reduction() == nullptr || fr.model() == nullptr)
        throw std::invalid_argument("solve_w: frame carries no reduction context");
    const Reduction& red = *fr.reduction();
    const EnergyModel& model = *fr.model();
    const ReductionConfig& cfg = red.config();
    const GridSpec& g = model.grid();

    const Field vshift = shifted_potential_field(model.potential(), g, eps, fr.y());
    const Field fprime_u = model.nonlinearity().fprime_of(fr.u());

    Field what = what0 != nullptr ? red.transverse(*what0) : Field(g);
    std::vector<double> quotients;
    double prev_step = -1.0;
    int iterations = 0;
    bool converged = false;

    for (int it = 0; it < cfg.max_fix_iter; ++it) {
        Field v = fr.u();
        v += what;
        Field r = red.transverse(recentred_gradient(model, vshift, v));
        const double rn = h1_norm(r);
        if (rn <= cfg.tol_fix && (it > 0 || what0 != nullptr)) {
            converged = true;
            break;
        }
        if (rn <= 1e-16) {
            converged = true;
            break;
        }
        Field d = solve_transverse_hat(red, vshift, fprime_u, r);
        const double step = h1_norm(d);
        if (prev_step > 50.0 * cfg.tol_fix && step > 50.0 * cfg.tol_fix) {
            const double q = step / prev_step;
            quotients.push_back(q);
            if (q > 1.0)
                throw CertificateError("solve_w: contraction quotient " + std::to_string(q) +
                                       " above one");
        }
        prev_step = step;
        what -= d;
        ++iterations;
        if (h1_norm(what) > cfg.rho)
            throw CertificateError("solve_w: correction left the contraction ball");
        if (step <= cfg.tol_fix) {
            Field v2 = fr.u();
            v2 += what;
            Field r2 = red.transverse(recentred_gradient(model, vshift, v2));
            if (h1_norm(r2) <= cfg.tol_fix) {
                converged = true;
                break;
            }
        }
    }
    if (!converged)
        throw NonConvergenceError("solve_w: fixed point not reached within the iteration cap");

    CorrectionResult res{Field(g), Field(g), 0, 0.0, {}, {}};
    res.what = what;
    const bool moved = fr.y()[0] != 0.0 || fr.y()[1] != 0.0 || fr.y()[2] != 0.0;
    res.w = moved ? translate(what, fr.y()) : what;
    res.iterations = iterations;
    res.quotients = std::move(quotients);
    // report the residual through the frame-side definition, an independent
    // path from the recentred iteration above
    Field lifted = fr.u_shifted();
    lifted += res.w;
    res.residual = h1_norm(fr.project(model.grad_E_eps(lifted, eps)));
    res.decay_sups = decay_sups_of(res.w);
    return res;
}

double reduced_Psi(const TangentFrame& fr, double eps, const CorrectionResult& res) {
    // recentred evaluation: the moving potential visits the profile, so the
    // lattice never interpolates the profile itself
    const EnergyModel& model = *fr.model();
    const Field vshift = shifted_potential_field(model.potential(), model.grid(), eps, fr.y());
    Field v = fr.u();
    v += res.what;
    return model.energy_I(v) + 0.5 * l2_inner(vshift, hadamard(v, v));
}

std::array<double, 3> psi_gradient_y(const TangentFrame& fr, double eps,
                                     const CorrectionResult& res) {
    const EnergyModel& model = *fr.model();
    const GridSpec& g = model.grid();
    Field v = fr.u();
    v += res.what;
    const Field v2 = hadamard(v, v);
    std::array<double, 3> grad{0.0, 0.0, 0.0};
    for (int j = 0; j < g.dim(); ++j) {
        const Field dv = shifted_potential_dy(model.potential(), g, eps, fr.y(), j);
        grad[j] = 0.5 * l2_inner(dv, v2);
    }
    return grad;
}

double psi_gradient_u(const TangentFrame& fr, double eps, const CorrectionResult& res,
                      const Field& h) {
    const EnergyModel& model = *fr.model();
    const Field vshift = shifted_potential_field(model.potential(), model.grid(), eps, fr.y());
    Field v = fr.u();
    v += res.what;
    return h1_inner(recentred_gradient(model, vshift, v), h);
}

Field solve_duw_hat(const TangentFrame& fr, double eps, const CorrectionResult& res,
                    const Field& h) {
    const EnergyModel& model = *fr.model();
    const Reduction& red = *fr.reduction();
    const Field vshift = shifted_potential_field(model.potential(), model.grid(), eps, fr.y());
    Field v = fr.u();
    v += res.what;
    const Field fp = model.nonlinearity().fprime_of(v);
    Field rhs = recentred_hessian_apply(vshift, fp, h);
    rhs *= -1.0;
    return solve_transverse_hat(red, vshift, fp, rhs);
}

Field solve_dyw_hat(const TangentFrame& fr, double eps, const CorrectionResult& res, int j) {
    const EnergyModel& model = *fr.model();
    const Reduction& red = *fr.reduction();
    const GridSpec& g = model.grid();
    const Field vshift = shifted_potential_field(model.potential(), g, eps, fr.y());
    Field v = fr.u();
    v += res.what;
    const Field fp = model.nonlinearity().fprime_of(v);
    const Field dv = shifted_potential_dy(model.potential(), g, eps, fr.y(), j);
    Field rhs = helmholtz_inverse(hadamard(dv, v));
    rhs *= -1.0;
    return solve_transverse_hat(red, vshift, fp, rhs);
}

} // namespace varred
