#include "varred/spectrum.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <stdexcept>

#include "varred/errors.hpp"
#include "varred/radial.hpp"
#include "varred/spectral.hpp"

namespace varred {

namespace {

/// Modified Gram-Schmidt in L2 with a drop tolerance; returns the kept columns.
std::vector<Field> orthonormalize_l2(std::vector<Field> cols, double drop_tol) {
    std::vector<Field> out;
    for (auto& c : cols) {
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : out) axpy(-l2_inner(q, c), q, c);
        const double n = l2_norm(c);
        if (n > drop_tol) {
            c *= 1.0 / n;
            out.push_back(std::move(c));
        }
    }
    return out;
}

std::vector<Field> structured_init(const GridSpec& g, int count, unsigned long long seed) {
    std::vector<Field> cols;
    auto push = [&](const std::function<double(const std::array<double, 3>&)>& f) {
        if (static_cast<int>(cols.size()) < count) cols.push_back(make_field(g, f));
    };
    auto r2 = [](const std::array<double, 3>& x) {
        return x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    };
    push([&](const auto& x) { return std::exp(-r2(x) / 2.0); });
    for (int d = 0; d < g.dim(); ++d)
        push([&, d](const auto& x) { return x[d] * std::exp(-r2(x) / 2.0); });
    for (int d = 0; d < g.dim(); ++d)
        for (int e = d; e < g.dim(); ++e)
            push([&, d, e](const auto& x) { return x[d] * x[e] * std::exp(-r2(x) / 2.0); });
    push([&](const auto& x) { return std::exp(-r2(x) / 8.0); });
    push([&](const auto& x) { return std::exp(-2.0 * r2(x)); });
    for (int d = 0; d < g.dim(); ++d)
        push([&, d](const auto& x) { return x[d] * (r2(x) - 2.0) * std::exp(-r2(x) / 2.0); });

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pos(-0.1 * g.half_width(), 0.1 * g.half_width());
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    while (static_cast<int>(cols.size()) < count) {
        const std::array<double, 3> c{pos(rng), pos(rng), pos(rng)};
        const double w = 1.0 + std::fabs(amp(rng));
        cols.push_back(make_field(g, [&](const std::array<double, 3>& x) {
            double s = 0.0;
            for (int d = 0; d < g.dim(); ++d) s += (x[d] - c[d]) * (x[d] - c[d]);
            return std::exp(-s / (w * w));
        }));
    }
    return cols;
}

} // namespace

Field schrodinger_apply(const Field& W, const Field& h) {
    Field out = helmholtz_apply(h);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= W[i] * h[i];
    return out;
}

SpectralData lowest_eigenpairs_potential(const Field& W, const EigOptions& opt) {
    const GridSpec& g = W.grid();
    const int m = opt.m;
    if (m < 1) throw std::invalid_argument("lowest_eigenpairs: m must be >= 1");

    auto A = [&](const Field& h) { return schrodinger_apply(W, h); };

    std::vector<Field> X = orthonormalize_l2(structured_init(g, m + 4, opt.seed), 1e-10);
    if (static_cast<int>(X.size()) < m) throw std::runtime_error("lowest_eigenpairs: degenerate init");
    X.resize(static_cast<std::size_t>(m), Field(g));
    std::vector<Field> P;

    std::vector<double> theta(m, 0.0);
    bool converged = false;
    int iter = 0;
    for (; iter < opt.max_iter && !converged; ++iter) {
        // Subspace S = [X, T R, P], orthonormalized.
        std::vector<Field> AX;
        AX.reserve(X.size());
        for (const auto& x : X) AX.push_back(A(x));

        Eigen::MatrixXd H(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = i; j < m; ++j) H(i, j) = H(j, i) = l2_inner(X[static_cast<std::size_t>(i)], AX[static_cast<std::size_t>(j)]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);

        // Rotate X to Ritz vectors.
        std::vector<Field> Xr, AXr;
        for (int j = 0; j < m; ++j) {
            Field xr(g), axr(g);
            for (int i = 0; i < m; ++i) {
                axpy(es.eigenvectors()(i, j), X[static_cast<std::size_t>(i)], xr);
                axpy(es.eigenvectors()(i, j), AX[static_cast<std::size_t>(i)], axr);
            }
            Xr.push_back(std::move(xr));
            AXr.push_back(std::move(axr));
            theta[static_cast<std::size_t>(j)] = es.eigenvalues()(j);
        }
        X = std::move(Xr);

        // Residuals and convergence.
        double worst = 0.0;
        std::vector<Field> Wdir;
        for (int j = 0; j < m; ++j) {
            Field r = AXr.empty() ? A(X[static_cast<std::size_t>(j)]) : std::move(AXr[static_cast<std::size_t>(j)]);
            axpy(-theta[static_cast<std::size_t>(j)], X[static_cast<std::size_t>(j)], r);
            const double rn = l2_norm(r);
            worst = std::max(worst, rn / std::max(1.0, std::fabs(theta[static_cast<std::size_t>(j)])));
            Field w = helmholtz_inverse(r);
            const double wn = l2_norm(w);
            if (wn > 0.0) {
                w *= 1.0 / wn;
                Wdir.push_back(std::move(w));
            }
        }
        if (worst <= opt.tol) {
            converged = true;
            break;
        }

        std::vector<Field> S = X;
        for (auto& w : Wdir) S.push_back(std::move(w));
        for (auto& p : P) S.push_back(std::move(p));
        S = orthonormalize_l2(std::move(S), 1e-8);
        const int s = static_cast<int>(S.size());
        if (s < m) throw NonConvergenceError("lowest_eigenpairs: subspace collapse");

        std::vector<Field> AS;
        AS.reserve(S.size());
        for (const auto& v : S) AS.push_back(A(v));
        Eigen::MatrixXd G(s, s);
        for (int i = 0; i < s; ++i)
            for (int j = i; j < s; ++j) G(i, j) = G(j, i) = l2_inner(S[static_cast<std::size_t>(i)], AS[static_cast<std::size_t>(j)]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gs(G);

        std::vector<Field> Xn, Pn;
        for (int j = 0; j < m; ++j) {
            Field xn(g), pn(g);
            for (int i = 0; i < s; ++i) {
                const double cij = gs.eigenvectors()(i, j);
                axpy(cij, S[static_cast<std::size_t>(i)], xn);
                if (i >= m) axpy(cij, S[static_cast<std::size_t>(i)], pn); // W and P components only
            }
            Xn.push_back(std::move(xn));
            const double pnn = l2_norm(pn);
            if (pnn > 1e-12) {
                pn *= 1.0 / pnn;
                Pn.push_back(std::move(pn));
            }
        }
        X = orthonormalize_l2(std::move(Xn), 1e-12);
        if (static_cast<int>(X.size()) < m) throw NonConvergenceError("lowest_eigenpairs: Ritz collapse");
        P = std::move(Pn);
    }
    if (!converged) throw NonConvergenceError("lowest_eigenpairs: stagnation after " + std::to_string(iter) + " iterations");

    SpectralData sd;
    sd.eigenvalues.assign(theta.begin(), theta.end());
    sd.eigenfields = std::move(X);
    for (int j = 0; j < m; ++j) {
        Field r = A(sd.eigenfields[static_cast<std::size_t>(j)]);
        axpy(-sd.eigenvalues[static_cast<std::size_t>(j)], sd.eigenfields[static_cast<std::size_t>(j)], r);
        sd.residuals.push_back(l2_norm(r));
    }
    const double tol_eig = 1e-6;
    sd.morse_index = 0;
    for (double lam : sd.eigenvalues)
        if (lam < -tol_eig) ++sd.morse_index;

    // H1-orthonormal span for downstream constructions.
    std::vector<Field> h1set = sd.eigenfields;
    std::vector<Field> kept;
    for (auto& c : h1set) {
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : kept) axpy(-h1_inner(q, c), q, c);
        const double n = h1_norm(c);
        if (n > 1e-10) {
            c *= 1.0 / n;
            kept.push_back(std::move(c));
        }
    }
    sd.eigenfields_h1 = std::move(kept);
    return sd;
}

SpectralData lowest_eigenpairs(const EnergyModel& model, const Field& omega, const EigOptions& opt) {
    SpectralData sd = lowest_eigenpairs_potential(model.nonlinearity().fprime_of(omega), opt);
    // The translation modes are only discretely-approximate kernel vectors, so
    // the kernel window scales with the resolved spectral width.
    const double gap = std::max(1.0, sd.eigenvalues.back() - sd.eigenvalues.front());
    kernel_spaces(sd, omega, 1e-6 * gap);
    return sd;
}

void kernel_spaces(SpectralData& sd, const Field& omega, double tol_kernel) {
    sd.tol_kernel = tol_kernel;
    sd.kernel_dim_full = 0;
    double nearest_outside = 1e30;
    for (double lam : sd.eigenvalues) {
        if (std::fabs(lam) < tol_kernel)
            ++sd.kernel_dim_full;
        else
            nearest_outside = std::min(nearest_outside, std::fabs(lam));
    }
    if (sd.kernel_dim_full > 0 && nearest_outside < 10.0 * tol_kernel)
        throw NonConvergenceError("kernel_spaces: kernel cluster not separated from the spectrum");

    sd.Z_basis.clear();
    for (int d = 0; d < omega.grid().dim(); ++d) {
        Field z = derivative(omega, d);
        for (const auto& prev : sd.Z_basis) axpy(-h1_inner(prev, z), prev, z);
        const double n = h1_norm(z);
        if (n > 1e-12) {
            z *= 1.0 / n;
            sd.Z_basis.push_back(std::move(z));
        }
    }

    sd.Y_basis.clear();
    for (std::size_t j = 0; j < sd.eigenvalues.size(); ++j) {
        if (std::fabs(sd.eigenvalues[j]) >= tol_kernel) continue;
        Field y = sd.eigenfields[j];
        for (const auto& z : sd.Z_basis) axpy(-h1_inner(z, y), z, y);
        for (const auto& prev : sd.Y_basis) axpy(-h1_inner(prev, y), prev, y);
        const double n = h1_norm(y);
        if (n < 0.3) continue; // the mode was a translation combination
        y *= 1.0 / n;
        if (angular_energy_fraction(y) > 1e-3) continue; // non-radial leftover, not part of Y
        sd.Y_basis.push_back(std::move(y));
    }
    sd.kernel_dim_radial = static_cast<int>(sd.Y_basis.size());
    sd.Y_script = sd.Y_basis;
    sd.q_dim = static_cast<int>(sd.Y_script.size());
}

SymmetryReport symmetry_check(const Field& v, const SpectralData& sd, const Field& W) {
    const double vn = h1_norm(v);
    if (vn == 0.0) throw std::invalid_argument("symmetry_check: zero field");
    Field Lv = schrodinger_apply(W, v);
    const double rel = l2_norm(Lv) / l2_norm(v);
    const double gate = std::max(100.0 * sd.tol_kernel, 1e-4);
    if (rel > gate)
        throw std::invalid_argument("symmetry_check: field is not in the numerical kernel, residual " +
                                    std::to_string(rel));

    SymmetryReport rep;
    Field res = v;
    double inside = 0.0;
    for (const auto& z : sd.Z_basis) {
        const double ov = h1_inner(z, v);
        rep.z_overlaps.push_back(ov);
        inside += ov * ov;
        axpy(-ov, z, res);
    }
    rep.z_fraction = std::sqrt(inside) / vn;
    rep.residual_norm = h1_norm(res);
    if (rep.residual_norm > 1e-8 * vn) {
        rep.residual_angular_fraction = angular_energy_fraction(res);
        rep.radial_after_z = rep.residual_angular_fraction <= 1e-4;
    } else {
        rep.residual_angular_fraction = 0.0;
        rep.radial_after_z = true;
    }
    return rep;
}

} // namespace varred
