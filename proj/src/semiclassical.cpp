#include "varred/semiclassical.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

#include "varred/errors.hpp"

namespace varred {

namespace {

constexpr double kYStep = 1e-3; // matches the moving-potential difference step

double vec_norm(const std::array<double, 3>& v, int dim) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) s += v[d] * v[d];
    return std::sqrt(s);
}

std::uint64_t hash_mix(std::uint64_t h, const void* p, std::size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t config_hash(const EnergyModel& model, const Reduction& red, double eps,
                          const SemiclassicalConfig& cfg) {
    std::uint64_t h = 1469598103934665603ull;
    const int dim = model.grid().dim();
    const int pts = model.grid().points();
    const double hw = model.grid().half_width();
    const int k = red.galerkin().k;
    const double vals[] = {eps,
                           red.config().delta,
                           red.config().tau,
                           red.config().rho,
                           red.config().tol_fix,
                           cfg.tol_y,
                           cfg.tol_outer,
                           cfg.tol_final,
                           hw};
    h = hash_mix(h, &dim, sizeof dim);
    h = hash_mix(h, &pts, sizeof pts);
    h = hash_mix(h, &k, sizeof k);
    h = hash_mix(h, vals, sizeof vals);
    return h;
}

/// Reduced-energy Hessian in y at the chart's correction: the explicit
/// moving-potential quadrature plus the implicit correction response.
Mat3 psi_hessian_y(const TangentFrame& fr, double eps, const CorrectionResult& res) {
    const EnergyModel& model = *fr.model();
    const GridSpec& g = model.grid();
    const int dim = g.dim();
    const Potential& pot = model.potential();
    Field v = fr.u();
    v += res.what;
    const Field v2 = hadamard(v, v);

    std::vector<Field> dyw;
    for (int j = 0; j < dim; ++j) dyw.push_back(solve_dyw_hat(fr, eps, res, j));

    Mat3 out{};
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            std::array<double, 3> yp = fr.y(), ym = fr.y();
            yp[i] += kYStep;
            ym[i] -= kYStep;
            Field d2 = shifted_potential_dy(pot, g, eps, yp, j);
            d2 -= shifted_potential_dy(pot, g, eps, ym, j);
            d2 *= 1.0 / (2.0 * kYStep);
            const double explicit_part = 0.5 * l2_inner(d2, v2);
            const Field dvj = shifted_potential_dy(pot, g, eps, fr.y(), j);
            const double implicit_part = l2_inner(dvj, hadamard(v, dyw[i]));
            out[i][j] = explicit_part + implicit_part;
        }
    for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j) {
            const double s = 0.5 * (out[i][j] + out[j][i]);
            out[i][j] = s;
            out[j][i] = s;
        }
    return out;
}

} // namespace

MinimizeYResult minimize_y(const EnergyModel& model, const Reduction& red, const Field& u,
                           double eps, const SemiclassicalConfig& cfg,
                           const std::array<double, 3>* y0, const Field* what0) {
    const GridSpec& g = model.grid();
    const int dim = g.dim();
    const double R = cfg.R > 0.0 ? cfg.R : 0.25 * g.half_width();
    const int sigma = model.potential().sigma();
    if (sigma == 0)
        throw HypothesisError("minimize_y: localization curvature has no definite sign");

    const std::array<double, 3> ystart =
        y0 != nullptr ? *y0 : std::array<double, 3>{0.0, 0.0, 0.0};
    if (vec_norm(ystart, dim) > R)
        throw std::invalid_argument("minimize_y: start lies outside the search ball");

    TangentFrame fr(model, red, u, ystart);
    MinimizeYResult out{ystart, solve_w(fr, eps, what0)};
    bool converged = false;
    for (int it = 0; it <= cfg.max_y_steps; ++it) {
        const std::array<double, 3> grad = psi_gradient_y(fr, eps, out.corr);
        out.grad_norm = vec_norm(grad, dim);
        if (out.grad_norm <= cfg.tol_y) {
            converged = true;
            break;
        }
        if (it == cfg.max_y_steps) break;
        const Mat3 h = psi_hessian_y(fr, eps, out.corr);
        Eigen::MatrixXd H(dim, dim);
        Eigen::VectorXd gv(dim);
        for (int i = 0; i < dim; ++i) {
            gv(i) = grad[i];
            for (int j = 0; j < dim; ++j) H(i, j) = h[i][j];
        }
        const Eigen::VectorXd s = H.colPivHouseholderQr().solve(-gv);
        std::array<double, 3> ynew = out.y;
        double scale = 1.0;
        bool inside = false;
        for (int half = 0; half < 12; ++half) {
            for (int d = 0; d < dim; ++d) ynew[d] = out.y[d] + scale * s(d);
            if (vec_norm(ynew, dim) <= R) {
                inside = true;
                break;
            }
            scale *= 0.5;
        }
        if (!inside)
            throw HypothesisError("minimize_y: stationary point pushed against the search ball");
        out.y = ynew;
        fr = TangentFrame(model, red, u, out.y);
        out.corr = solve_w(fr, eps, &out.corr.what);
        ++out.steps;
    }
    if (!converged)
        throw NonConvergenceError("minimize_y: gradient target not reached in the step budget");

    out.hess = psi_hessian_y(fr, eps, out.corr);
    Eigen::MatrixXd H(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) H(i, j) = out.hess[i][j];
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    out.extremal_eig = sigma > 0 ? es.eigenvalues().minCoeff() : es.eigenvalues().maxCoeff();
    if (eps > 0.0) {
        if (sigma > 0 && out.extremal_eig <= 0.0)
            throw HypothesisError("minimize_y: curvature at the optimum is not positive");
        if (sigma < 0 && out.extremal_eig >= 0.0)
            throw HypothesisError("minimize_y: curvature at the optimum is not negative");
    }
    return out;
}

EtaReport expansion_check(const EnergyModel& model, const Reduction& red, const Field& u,
                          const std::array<double, 3>& y, double eps,
                          const CorrectionResult& corr) {
    EtaReport out;
    const Field vshift = shifted_potential_field(model.potential(), model.grid(), eps, y);
    Field vhat0 = u;
    vhat0 += corr.what;
    out.psi = model.energy_I(vhat0) + 0.5 * l2_inner(vshift, hadamard(vhat0, vhat0));
    out.limit_energy = red.g(u);
    auto [pi, tr] = red.pi(u);
    (void)tr;
    Field vhat = u;
    vhat += pi;
    const GammaExpansion gx(model.potential(), vhat);
    out.gamma = gx.value(y);
    const double epow = std::pow(eps, model.potential().nstar());
    out.eta = out.psi - out.limit_energy - 0.5 * epow * out.gamma;
    out.ratio = eps > 0.0 ? out.eta / epow : 0.0;
    return out;
}

LambdaReport lambda_diagnostic(const TangentFrame& fr, double eps,
                               const CorrectionResult& corr, int probes) {
    const Reduction& red = *fr.reduction();
    const EnergyModel& model = *fr.model();
    const int dim = model.grid().dim();
    auto [pi, tr] = red.pi(fr.u());
    (void)tr;

    LambdaReport out;
    Field delta = corr.what;
    delta -= pi;
    out.distance = h1_norm(delta);

    for (int j = 0; j < dim; ++j) {
        Field diff = solve_dyw_hat(fr, eps, corr, j);
        diff -= derivative(delta, j);
        out.dy_sup = std::max(out.dy_sup, h1_norm(diff));
    }

    const std::vector<Field>& be = red.galerkin().basis_E;
    const int np = std::min<int>(probes, static_cast<int>(be.size()));
    for (int i = 0; i < np; ++i) {
        Field diff = solve_duw_hat(fr, eps, corr, be[i]);
        diff -= red.dpi(fr.u(), be[i]);
        out.du_sup = std::max(out.du_sup, h1_norm(diff));
    }
    out.lambda = out.distance + out.dy_sup + out.du_sup;
    const double epow = std::pow(eps, model.potential().nstar());
    out.ratio = eps > 0.0 ? out.lambda / epow : 0.0;
    return out;
}

SemiclassicalSolution solve_semiclassical(const EnergyModel& model, const Reduction& red,
                                          double eps, const SemiclassicalConfig& cfg,
                                          const SemiclassicalSolution* warm) {
    const auto t0 = std::chrono::steady_clock::now();
    const GridSpec& g = model.grid();
    const std::vector<Field>& be = red.galerkin().basis_E;
    const int k = static_cast<int>(be.size());

    Field u = warm != nullptr ? warm->u : red.projected_anchor();
    std::array<double, 3> y = warm != nullptr ? warm->y : std::array<double, 3>{0.0, 0.0, 0.0};
    Field what_seed = warm != nullptr ? warm->corr.what : red.pi(u).first;

    std::optional<TangentFrame> fr;
    std::optional<CorrectionResult> corr;
    int outer_rounds = 0;
    bool converged = false;

    for (int round = 0; round < cfg.max_outer; ++round) {
        ++outer_rounds;
        MinimizeYResult myr = minimize_y(model, red, u, eps, cfg, &y, &what_seed);
        y = myr.y;
        corr = std::move(myr.corr);
        what_seed = corr->what;
        fr.emplace(model, red, u, y);

        const Field vshift = shifted_potential_field(model.potential(), g, eps, y);
        auto gamma_of = [&](const CorrectionResult& c, const Field& uu) {
            Field v = uu;
            v += c.what;
            const Field gr = recentred_gradient(model, vshift, v);
            Eigen::VectorXd gvec(k);
            for (int j = 0; j < k; ++j) gvec(j) = h1_inner(gr, be[j]);
            return gvec;
        };
        Eigen::VectorXd gam = gamma_of(*corr, u);
        double gn = gam.norm();
        if (gn <= cfg.tol_outer) {
            converged = true;
            break;
        }

        // chord matrix of the kept-space Newton step at this round's chart
        Field v = u;
        v += corr->what;
        const Field fp = model.nonlinearity().fprime_of(v);
        Eigen::MatrixXd M(k, k);
        for (int l = 0; l < k; ++l) {
            Field dir = be[l];
            dir += solve_duw_hat(*fr, eps, *corr, be[l]);
            const Field img = recentred_hessian_apply(vshift, fp, dir);
            for (int j = 0; j < k; ++j) M(j, l) = h1_inner(img, be[j]);
        }
        M = 0.5 * (M + M.transpose()).eval();
        const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);

        for (int inner = 0; inner < 30 && gn > cfg.tol_outer; ++inner) {
            const Eigen::VectorXd step = qr.solve(-gam);
            bool accepted = false;
            double alpha = 1.0;
            for (int half = 0; half < 10; ++half, alpha *= 0.5) {
                Field ut = u;
                for (int j = 0; j < k; ++j) axpy(alpha * step(j), be[j], ut);
                if (!red.in_neighborhood(ut)) continue;
                TangentFrame frt(model, red, ut, y);
                std::optional<CorrectionResult> ct;
                try {
                    ct = solve_w(frt, eps, &what_seed);
                } catch (const NonConvergenceError&) {
                    continue;
                }
                const Eigen::VectorXd gt = gamma_of(*ct, ut);
                if (gt.norm() <= (1.0 - 0.3 * alpha) * gn || gt.norm() <= cfg.tol_outer) {
                    u = ut;
                    fr = std::move(frt);
                    corr = std::move(ct);
                    what_seed = corr->what;
                    gam = gt;
                    gn = gam.norm();
                    accepted = true;
                    break;
                }
            }
            if (!accepted)
                throw NonConvergenceError(
                    "solve_semiclassical: reduced step could not descend in the neighborhood");
        }
    }
    if (!converged)
        throw NonConvergenceError("solve_semiclassical: outer rounds exhausted");

    Field vhat = u;
    vhat += corr->what;
    const bool moved = y[0] != 0.0 || y[1] != 0.0 || y[2] != 0.0;
    Field utilde = moved ? translate(vhat, y) : vhat;

    SolveRow row;
    row.eps = eps;
    row.y = y;
    row.outer_iterations = outer_rounds;
    row.residual_full = h1_norm(model.grad_E_eps(utilde, eps));
    {
        Field dist = utilde;
        dist -= moved ? translate(red.anchor(), y) : red.anchor();
        row.distance = h1_norm(dist);
    }
    const EtaReport er = expansion_check(model, red, u, y, eps, *corr);
    row.psi = er.psi;
    row.gamma = er.gamma;
    row.eta = er.eta;
    row.eta_ratio = er.ratio;
    const LambdaReport lr = lambda_diagnostic(*fr, eps, *corr, cfg.lambda_probes);
    row.lambda = lr.lambda;
    row.lambda_ratio = lr.ratio;
    row.a_k = localize(red, model.potential(), u).a_k;
    if (cfg.certify) {
        const HessBoundReport hb = inverse_bound_L(*fr, eps);
        if (!hb.invertible)
            throw CertificateError("solve_semiclassical: transverse operator not certified");
        row.c_est = hb.sigma_min;
    }
    row.config_hash = config_hash(model, red, eps, cfg);
    row.tol_fix = red.config().tol_fix;
    row.tol_final = cfg.tol_final;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (row.residual_full > cfg.tol_final)
        throw CertificateError("solve_semiclassical: assembled residual " +
                               std::to_string(row.residual_full) +
                               " exceeds the acceptance tolerance");

    return SemiclassicalSolution{eps, std::move(u), y, std::move(*corr), std::move(utilde), row};
}

ScanResult scan_epsilon(const EnergyModel& model, const Reduction& red,
                        std::vector<double> eps_list, const SemiclassicalConfig& cfg) {
    if (eps_list.empty()) throw std::invalid_argument("scan_epsilon: empty scan");
    std::sort(eps_list.begin(), eps_list.end(), std::greater<double>());

    ScanResult out;
    for (double eps : eps_list) {
        const SemiclassicalSolution* warm = out.runs.empty() ? nullptr : &out.runs.back();
        out.runs.push_back(solve_semiclassical(model, red, eps, cfg, warm));
    }

    std::vector<double> xs, eta_abs, lam, dist;
    double ratio_min = 0.0, ratio_max = 0.0;
    for (const SemiclassicalSolution& s : out.runs) {
        xs.push_back(s.eps);
        eta_abs.push_back(std::fabs(s.row.eta));
        lam.push_back(s.row.lambda);
        dist.push_back(s.row.distance);
        const double r = std::fabs(s.row.lambda_ratio);
        if (xs.size() == 1) {
            ratio_min = r;
            ratio_max = r;
        } else {
            ratio_min = std::min(ratio_min, r);
            ratio_max = std::max(ratio_max, r);
        }
    }
    out.eta_fit = loglog_fit(xs, eta_abs);
    out.lambda_fit = loglog_fit(xs, lam);
    out.dist_fit = loglog_fit(xs, dist);
    out.eta_ratio_first = std::fabs(out.runs.front().row.eta_ratio);
    out.eta_ratio_last = std::fabs(out.runs.back().row.eta_ratio);
    out.lambda_ratio_spread = ratio_min > 0.0 ? ratio_max / ratio_min : 0.0;
    return out;
}

} // namespace varred
