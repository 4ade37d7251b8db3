#include "varred/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "varred/errors.hpp"

namespace varred {

namespace {

std::uint64_t content_hash(const Field& v) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) h = (h ^ c[i]) * 1099511628211ull;
    };
    const int dim = v.grid().dim(), pts = v.grid().points();
    mix(&dim, sizeof dim);
    mix(&pts, sizeof pts);
    mix(v.data(), v.size() * sizeof(double));
    return h;
}

bool same_field(const Field& a, const Field& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

void project_out(const std::vector<Field>& frame, Field& u) {
    for (const auto& f : frame) axpy(-h1_inner(f, u), f, u);
}

} // namespace

VariationalOps model_ops(const EnergyModel& model) {
    VariationalOps ops;
    ops.energy = [model](const Field& u) { return model.energy_I(u); };
    ops.grad = [model](const Field& u) { return model.grad_I(u); };
    ops.hess = [model](const Field& u, const Field& h) { return model.hess_I_apply(u, h); };
    return ops;
}

VariationalOps quadratic_ops() {
    VariationalOps ops;
    ops.energy = [](const Field& u) {
        const double n = h1_norm(u);
        return 0.5 * n * n;
    };
    ops.grad = [](const Field& u) { return u; };
    ops.hess = [](const Field&, const Field& h) { return h; };
    return ops;
}

HessBoundReport projected_hessian_inverse_bound(const OpFn& hess_at_v,
                                                const std::vector<Field>& projected_out,
                                                const GridSpec& grid, const HessBoundOptions& opt) {
    auto P = [&projected_out](Field u) {
        project_out(projected_out, u);
        return u;
    };
    // squared projected operator; iterates are kept inside the complement, so
    // the frame directions never contribute spurious null modes
    auto C = [&](const Field& u) {
        Field a = P(hess_at_v(u));
        return P(hess_at_v(a));
    };

    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Field x = make_field(grid, [](const std::array<double, 3>& p) {
        const double r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        return std::exp(-r2 / 3.0);
    });
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += 0.05 * gauss(rng);
    x = P(std::move(x));
    {
        const double n = h1_norm(x);
        if (n <= 1e-14) throw NonConvergenceError("inverse bound: degenerate start");
        x *= 1.0 / n;
    }

    HessBoundReport rep;
    Field p_dir(grid);
    bool have_p = false;
    double theta = 0.0, theta_prev = 0.0;
    int stall = 0;
    for (int it = 0; it < opt.max_iter; ++it) {
        Field cx = C(x);
        theta = h1_inner(x, cx);
        Field r = cx;
        axpy(-theta, x, r);
        const double rn = h1_norm(r);
        rep.iterations = it + 1;
        rep.residual = rn;
        if (rn <= opt.tol * std::max(1.0, std::fabs(theta))) break;
        if (it > 0 && std::fabs(theta - theta_prev) <= 1e-15 * std::max(1.0, std::fabs(theta))) {
            if (++stall >= 5) {
                if (rn <= 1e-3) break; // flat bottom resolved well enough
                throw NonConvergenceError("inverse bound: singular-value iteration stalled");
            }
        } else {
            stall = 0;
        }
        theta_prev = theta;

        std::vector<Field> sub;
        sub.push_back(x);
        {
            Field rr = P(std::move(r));
            const double n = h1_norm(rr);
            if (n > 1e-14) {
                rr *= 1.0 / n;
                sub.push_back(std::move(rr));
            }
        }
        if (have_p) {
            Field pp = P(p_dir);
            const double n = h1_norm(pp);
            if (n > 1e-14) {
                pp *= 1.0 / n;
                sub.push_back(std::move(pp));
            }
        }
        // orthonormalize the tiny subspace, then Rayleigh-Ritz on C
        for (std::size_t i = 0; i < sub.size(); ++i) {
            for (std::size_t j = 0; j < i; ++j) axpy(-h1_inner(sub[j], sub[i]), sub[j], sub[i]);
            const double n = h1_norm(sub[i]);
            if (n <= 1e-10) {
                sub.erase(sub.begin() + static_cast<std::ptrdiff_t>(i));
                --i;
                continue;
            }
            sub[i] *= 1.0 / n;
        }
        const int s = static_cast<int>(sub.size());
        std::vector<Field> csub;
        csub.reserve(sub.size());
        csub.push_back(std::move(cx)); // sub[0] is x, already applied
        for (std::size_t i = 1; i < sub.size(); ++i) csub.push_back(C(sub[i]));
        Eigen::MatrixXd B(s, s);
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < s; ++j) B(i, j) = h1_inner(sub[i], csub[j]);
        B = 0.5 * (B + B.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
        Eigen::VectorXd c = es.eigenvectors().col(0);

        Field xn(grid);
        Field pn(grid);
        for (int i = 0; i < s; ++i) {
            axpy(c[i], sub[i], xn);
            if (i >= 1) axpy(c[i], sub[i], pn);
        }
        xn = P(std::move(xn));
        const double n = h1_norm(xn);
        if (n <= 1e-14) throw NonConvergenceError("inverse bound: iterate collapsed");
        xn *= 1.0 / n;
        x = std::move(xn);
        const double pnn = h1_norm(pn);
        have_p = pnn > 1e-14;
        if (have_p) {
            pn *= 1.0 / pnn;
            p_dir = std::move(pn);
        }
    }

    rep.sigma_min = std::sqrt(std::max(theta - rep.residual, 0.0));
    rep.bound = rep.sigma_min > 1e-12 ? 1.0 / rep.sigma_min : 1e16;
    rep.invertible = rep.bound <= opt.certify_bound;
    return rep;
}

Reduction::Reduction(const EnergyModel& model, GalerkinBasis basis, Field anchor,
                     ReductionConfig cfg)
    : ops_(model_ops(model)),
      basis_(std::move(basis)),
      anchor_(std::move(anchor)),
      pk_anchor_(anchor_.grid()),
      cfg_(cfg) {
    finish_setup();
}

Reduction::Reduction(VariationalOps ops, GalerkinBasis basis, Field anchor, ReductionConfig cfg)
    : ops_(std::move(ops)),
      basis_(std::move(basis)),
      anchor_(std::move(anchor)),
      pk_anchor_(anchor_.grid()),
      cfg_(cfg) {
    finish_setup();
}

void Reduction::finish_setup() {
    const double scale = h1_norm(anchor_);
    if (cfg_.delta <= 0.0) cfg_.delta = 0.2 * scale;
    if (cfg_.tau <= 0.0) cfg_.tau = 0.25 * scale;
    if (cfg_.rho <= 0.0) cfg_.rho = cfg_.tau;
    if (cfg_.delta <= 0.0 || cfg_.tau <= 0.0 || cfg_.rho <= 0.0)
        throw std::invalid_argument("Reduction: neighborhood radii must be positive");

    pk_anchor_ = basis_.project(anchor_);

    // translation guard: derivative fields orthogonalized against X_k, so the
    // transverse space matches the radial-sector complement
    for (int d = 0; d < anchor_.grid().dim(); ++d) {
        Field zd = derivative(anchor_, d);
        for (const auto& e : basis_.basis_E) axpy(-h1_inner(e, zd), e, zd);
        for (const auto& y : basis_.basis_Y) axpy(-h1_inner(y, zd), y, zd);
        project_out(z_, zd);
        const double n = h1_norm(zd);
        if (n > 1e-8 * std::max(1.0, scale)) {
            zd *= 1.0 / n;
            z_.push_back(std::move(zd));
        }
    }

    if (cfg_.certify) {
        cert_ = inverse_bound(pk_anchor_, Selector::Xk_perp);
        if (!cert_.invertible)
            throw CertificateError("Reduction: projected Hessian inverse bound failed at the anchor");
    } else {
        cert_.invertible = true;
        cert_.bound = 0.0;
    }
}

Field Reduction::transverse(const Field& u) const {
    Field t = basis_.complement(u);
    project_out(z_, t);
    return t;
}

bool Reduction::in_neighborhood(const Field& v) const {
    Field d = v;
    d -= pk_anchor_;
    return h1_norm(d) <= cfg_.delta * (1.0 + 1e-12);
}

Field Reduction::solve_transverse(const Field& base, const Field& rhs) const {
    auto A = [this, &base](const Field& h) {
        Field t = transverse(h);
        Field out = transverse(ops_.hess(base, t));
        // identity on the kept directions keeps the operator nonsingular there
        out += h;
        out -= t;
        return out;
    };
    Field x(rhs.grid());
    SolveStats st = gmres_h1(A, rhs, x, cfg_.lin);
    if (!st.converged) throw NonConvergenceError("Reduction: transverse solve stalled");
    return transverse(x);
}

Field Reduction::psi(const Field& v, const Field& w) const {
    Field lift = v;
    lift += w;
    Field r = transverse(ops_.grad(lift));
    Field d = solve_transverse(v, r);
    Field out = w;
    out -= d;
    return out;
}

std::pair<Field, PiTrace> Reduction::solve_pi(const Field& v) const {
    return solve_pi_impl(v, nullptr);
}

std::pair<Field, PiTrace> Reduction::solve_pi(const Field& v, const Field& w0) const {
    return solve_pi_impl(v, &w0);
}

std::pair<Field, PiTrace> Reduction::solve_pi_impl(const Field& v, const Field* w0) const {
    if (!in_neighborhood(v))
        throw std::invalid_argument("Reduction: point outside the reduction neighborhood");
    if (!cert_.invertible)
        throw CertificateError("Reduction: inverse bound not certified");

    Field w = w0 ? transverse(*w0) : Field(v.grid());
    PiTrace trace;
    double prev_step = -1.0;
    for (int it = 0; it < cfg_.max_fix_iter; ++it) {
        Field lift = v;
        lift += w;
        Field r = transverse(ops_.grad(lift));
        const double rn = h1_norm(r);
        trace.residual = rn;
        if (rn <= cfg_.tol_fix && (it > 0 || w0)) break;
        if (rn <= 1e-16) break; // exactly transverse-critical from the start

        Field d = solve_transverse(v, r);
        const double step = h1_norm(d);
        w -= d;
        trace.iterations = it + 1;

        if (prev_step > 50.0 * cfg_.tol_fix && step > 50.0 * cfg_.tol_fix) {
            const double q = step / prev_step;
            trace.quotients.push_back(q);
            if (q > 1.0)
                throw CertificateError("Reduction: contraction quotient above one");
        }
        prev_step = step;

        const double wn = h1_norm(w);
        if (wn > cfg_.rho)
            throw CertificateError("Reduction: correction left the contraction ball");
        if (step <= cfg_.tol_fix) {
            Field lift2 = v;
            lift2 += w;
            Field r2 = transverse(ops_.grad(lift2));
            trace.residual = h1_norm(r2);
            if (trace.residual <= cfg_.tol_fix) break;
        }
        if (it + 1 == cfg_.max_fix_iter)
            throw NonConvergenceError("Reduction: fixed point iteration cap exceeded");
    }
    trace.pi_norm = h1_norm(w);
    return {std::move(w), std::move(trace)};
}

std::pair<Field, PiTrace> Reduction::pi(const Field& v) const {
    const std::uint64_t key = content_hash(v);
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = index_.find(key);
        if (it != index_.end())
            for (std::size_t idx : it->second)
                if (same_field(entries_[idx].v, v)) {
                    PiTrace t = entries_[idx].trace;
                    t.from_cache = true;
                    return {entries_[idx].pi, std::move(t)};
                }
    }
    auto solved = solve_pi_impl(v, nullptr);
    {
        std::lock_guard<std::mutex> lock(mu_);
        entries_.push_back(CacheEntry{v, solved.first, solved.second});
        index_[key].push_back(entries_.size() - 1);
    }
    return solved;
}

Field Reduction::dpi(const Field& v, const Field& h) const {
    auto [w, trace] = pi(v);
    Field lift = v;
    lift += w;
    Field rhs = transverse(ops_.hess(lift, h));
    rhs *= -1.0;
    return solve_transverse(lift, rhs);
}

double Reduction::g(const Field& v) const {
    auto [w, trace] = pi(v);
    Field lift = v;
    lift += w;
    return ops_.energy(lift);
}

Field Reduction::grad_g(const Field& v) const {
    auto [w, trace] = pi(v);
    Field lift = v;
    lift += w;
    return basis_.project(ops_.grad(lift));
}

double Reduction::script_I(const Field& u) const {
    Field vk = basis_.project(u);
    Field t = u;
    t -= vk;
    const double tn = h1_norm(t);
    return 0.5 * tn * tn + g(vk);
}

Field Reduction::grad_script_I(const Field& u) const {
    Field vk = basis_.project(u);
    Field t = u;
    t -= vk;
    Field out = grad_g(vk);
    out += t;
    return out;
}

HessBoundReport Reduction::inverse_bound(const Field& v, Selector sel,
                                         const HessBoundOptions& opt) const {
    std::vector<Field> frame;
    for (const auto& e : basis_.basis_E) frame.push_back(e);
    for (const auto& y : basis_.basis_Y) frame.push_back(y);
    switch (sel) {
    case Selector::Xk_perp:
    case Selector::W_perp:
        // single-orbit setting: the anchor's translation frame in both cases
        for (const auto& z : z_) frame.push_back(z);
        break;
    case Selector::E_perp:
        for (int d = 0; d < v.grid().dim(); ++d) {
            Field td = derivative(v, d);
            for (const auto& f : frame) axpy(-h1_inner(f, td), f, td);
            const double n = h1_norm(td);
            if (n > 1e-10) {
                td *= 1.0 / n;
                frame.push_back(std::move(td));
            }
        }
        break;
    }
    auto hfn = [this, &v](const Field& h) { return ops_.hess(v, h); };
    return projected_hessian_inverse_bound(hfn, frame, v.grid(), opt);
}

Reduction::Critical Reduction::critical_point(const Field& seed) const {
    Field v = basis_.project(seed);
    if (!in_neighborhood(v))
        throw std::invalid_argument("Reduction: seed outside the reduction neighborhood");

    std::vector<Field> frame;
    for (const auto& e : basis_.basis_E) frame.push_back(e);
    for (const auto& y : basis_.basis_Y) frame.push_back(y);
    const int n = static_cast<int>(frame.size());

    Field w(v.grid());
    bool have_w = false;
    Critical out{v, v, 0.0, 0.0, 0};

    for (int it = 0; it <= cfg_.max_newton; ++it) {
        auto solved = have_w ? solve_pi(v, w) : solve_pi(v);
        w = std::move(solved.first);
        have_w = true;
        Field lift = v;
        lift += w;
        Field gradf = ops_.grad(lift);
        Eigen::VectorXd gamma(n);
        for (int j = 0; j < n; ++j) gamma[j] = h1_inner(gradf, frame[j]);
        const double gn = gamma.norm();
        out.v = v;
        out.lift = lift;
        out.reduced_residual = gn;
        out.lifted_residual = h1_norm(gradf);
        out.newton_steps = it;
        if (gn <= cfg_.tol_crit) return out;
        if (it == cfg_.max_newton) break;

        // exact reduced Hessian: columns through the implicit derivative of pi
        Eigen::MatrixXd M(n, n);
        for (int l = 0; l < n; ++l) {
            Field rhs = transverse(ops_.hess(lift, frame[l]));
            rhs *= -1.0;
            Field dw = solve_transverse(lift, rhs);
            Field dir = frame[l];
            dir += dw;
            Field col = ops_.hess(lift, dir);
            for (int j = 0; j < n; ++j) M(j, l) = h1_inner(col, frame[j]);
        }
        M = 0.5 * (M + M.transpose()).eval();
        Eigen::VectorXd s = M.colPivHouseholderQr().solve(gamma);

        double alpha = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 10; ++bt, alpha *= 0.5) {
            Field vt = v;
            for (int j = 0; j < n; ++j) axpy(-alpha * s[j], frame[j], vt);
            if (!in_neighborhood(vt)) continue;
            try {
                auto ps = solve_pi(vt, w);
                Field liftt = vt;
                liftt += ps.first;
                Field gt = ops_.grad(liftt);
                Eigen::VectorXd gammat(n);
                for (int j = 0; j < n; ++j) gammat[j] = h1_inner(gt, frame[j]);
                if (gammat.norm() <= (1.0 - 0.3 * alpha) * gn || gammat.norm() <= cfg_.tol_crit) {
                    v = std::move(vt);
                    w = std::move(ps.first);
                    accepted = true;
                    break;
                }
            } catch (const NonConvergenceError&) {
                continue;
            }
        }
        if (!accepted)
            throw NonConvergenceError("Reduction: reduced Newton could not descend inside the neighborhood");
    }
    throw NonConvergenceError("Reduction: reduced Newton iteration cap exceeded");
}

std::size_t Reduction::cache_size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
}

} // namespace varred
