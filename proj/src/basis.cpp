#include "varred/basis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "varred/errors.hpp"
#include "varred/spectral.hpp"

namespace varred {

namespace {

double pow_int(double r, int e) {
    double out = 1.0;
    for (int i = 0; i < e; ++i) out *= r;
    return out;
}

/// C-infinity step that is 1 below lo and 0 above hi.
double smooth_cut(double r, double lo, double hi) {
    if (r <= lo) return 1.0;
    if (r >= hi) return 0.0;
    auto g = [](double s) { return s <= 0.0 ? 0.0 : std::exp(-1.0 / s); };
    const double t = (r - lo) / (hi - lo);
    return g(1.0 - t) / (g(1.0 - t) + g(t));
}

RadialProfile tapered_profile(const RadialProfile& p, double lo, double hi, double corner) {
    RadialProfile out;
    out.radii.reserve(p.radii.size() + 8);
    out.values.reserve(p.radii.size() + 8);
    for (std::size_t i = 0; i < p.radii.size(); ++i) {
        if (p.radii[i] >= hi) break;
        out.radii.push_back(p.radii[i]);
        out.values.push_back(p.values[i] * smooth_cut(p.radii[i], lo, hi));
    }
    for (double r = hi; r < corner + 0.6; r += 0.5) {
        out.radii.push_back(r);
        out.values.push_back(0.0);
    }
    return out;
}

} // namespace

RadialEigen radial_eigen_lowest(const RadialSpline& W, int dim, double R, int n, int count) {
    if (count < 1 || n < 16) throw std::invalid_argument("radial_eigen_lowest: bad sizes");
    if (count > n / 4) throw std::invalid_argument("radial_eigen_lowest: too many pairs for the grid");
    const double hr = R / n;
    Eigen::VectorXd diag(n), sub(n - 1), wgt(n);
    auto face = [&](int i) { return pow_int(i * hr, dim - 1); };
    for (int i = 0; i < n; ++i) {
        const double ri = (i + 0.5) * hr;
        const double rpw = pow_int(ri, dim - 1);
        wgt(i) = rpw * hr;
        const double cm = i == 0 ? 0.0 : face(i) / hr; // zero flux through r = 0
        const double cp = face(i + 1) / hr;            // zero boundary value at R
        diag(i) = (cm + cp) / (rpw * hr) + 1.0 - W(ri);
    }
    for (int i = 0; i + 1 < n; ++i)
        sub(i) = -(face(i + 1) / hr) / std::sqrt(wgt(i) * wgt(i + 1));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub);
    if (es.info() != Eigen::Success)
        throw NonConvergenceError("radial_eigen_lowest: tridiagonal eigensolve failed");

    RadialEigen out;
    for (int j = 0; j < count; ++j) {
        out.eigenvalues.push_back(es.eigenvalues()(j));
        RadialProfile p;
        p.radii.reserve(static_cast<std::size_t>(n) + 1);
        p.values.reserve(static_cast<std::size_t>(n) + 1);
        // prepend r = 0 with the near-axis value (even reflection)
        p.radii.push_back(0.0);
        p.values.push_back(es.eigenvectors()(0, j) / std::sqrt(wgt(0)));
        for (int i = 0; i < n; ++i) {
            p.radii.push_back((i + 0.5) * hr);
            p.values.push_back(es.eigenvectors()(i, j) / std::sqrt(wgt(i)));
        }
        out.profiles.push_back(std::move(p));
    }
    return out;
}

std::vector<Field> orthonormalize_h1(std::vector<Field> cols, double drop_tol) {
    std::vector<Field> out;
    for (auto& c : cols) {
        const double pre = h1_norm(c);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : out) axpy(-h1_inner(q, c), q, c);
        const double n = h1_norm(c);
        if (n <= drop_tol * std::max(1.0, pre))
            throw CertificateError("orthonormalize_h1: linear dependence detected");
        c *= 1.0 / n;
        out.push_back(std::move(c));
    }
    return out;
}

Field GalerkinBasis::project(const Field& u) const {
    Field out(u.grid());
    for (const auto& b : basis_E) axpy(h1_inner(b, u), b, out);
    for (const auto& b : basis_Y) axpy(h1_inner(b, u), b, out);
    return out;
}

Field GalerkinBasis::complement(const Field& u) const {
    Field out = u;
    for (const auto& b : basis_E) axpy(-h1_inner(b, u), b, out);
    for (const auto& b : basis_Y) axpy(-h1_inner(b, u), b, out);
    return out;
}

std::vector<double> GalerkinBasis::coefficients(const Field& u) const {
    std::vector<double> c;
    c.reserve(static_cast<std::size_t>(x_dim()));
    for (const auto& b : basis_E) c.push_back(h1_inner(b, u));
    for (const auto& b : basis_Y) c.push_back(h1_inner(b, u));
    return c;
}

Field GalerkinBasis::from_coefficients(const std::vector<double>& c) const {
    if (c.size() != static_cast<std::size_t>(x_dim()))
        throw std::invalid_argument("from_coefficients: wrong length");
    if (basis_E.empty() && basis_Y.empty()) throw std::invalid_argument("from_coefficients: empty basis");
    const GridSpec& g = basis_E.empty() ? basis_Y.front().grid() : basis_E.front().grid();
    Field out(g);
    std::size_t i = 0;
    for (const auto& b : basis_E) axpy(c[i++], b, out);
    for (const auto& b : basis_Y) axpy(c[i++], b, out);
    return out;
}

double appendix_mu_cap(int k) {
    return std::min(1.0 / (std::sqrt(2.0 * k) + 1.0), 1.0 / (4.0 * std::sqrt(2.0)));
}

GalerkinBasis build_basis_potential(const Field& W, const SpectralData& sd, int k, BasisMode mode,
                                    const BasisOptions& opt) {
    if (k < 0) throw std::invalid_argument("build_basis: negative k");
    const GridSpec& g = W.grid();
    const double L = g.half_width();
    const double Rb = opt.support_radius > 0.0 ? opt.support_radius : 0.8125 * L;
    if (Rb + 0.1 >= L) throw std::invalid_argument("build_basis: support radius reaches the boundary");
    const double corner = std::sqrt(static_cast<double>(g.dim())) * L;

    GalerkinBasis basis;
    basis.k = k;
    basis.mode = mode;
    basis.basis_Y = sd.Y_script;

    RadialSpline Wr(radial_extract(W));
    // Oversolve: degeneracy-space members of the radial family are skipped.
    const int want = k + static_cast<int>(sd.Y_script.size()) + 2;
    RadialEigen re = radial_eigen_lowest(Wr, g.dim(), Rb, opt.radial_points, want);

    std::vector<Field> kept;
    const double lo = Rb - 1.25 * opt.taper_width, hi = Rb - 0.25 * opt.taper_width;
    for (int j = 0; j < want && static_cast<int>(kept.size()) < k; ++j) {
        Field e = radial_embed(tapered_profile(re.profiles[static_cast<std::size_t>(j)], lo, hi, corner), g);
        const double pre = h1_norm(e);
        for (const auto& y : basis.basis_Y) axpy(-h1_inner(y, e), y, e);
        if (h1_norm(e) < 0.3 * pre) continue; // the mode belongs to the degeneracy space
        kept.push_back(std::move(e));
        basis.radial_eigenvalues.push_back(re.eigenvalues[static_cast<std::size_t>(j)]);
    }
    if (static_cast<int>(kept.size()) < k)
        throw NonConvergenceError("build_basis: radial family exhausted before reaching k");
    basis.basis_E = orthonormalize_h1(std::move(kept), opt.drop_tol);

    if (mode == BasisMode::appendixA) {
        basis.mu_cap = appendix_mu_cap(k);
        const double target = opt.mu_target_frac * basis.mu_cap;
        std::vector<Field> trunc;
        double mu = 0.0;
        for (const auto& e : basis.basis_E) {
            RadialProfile p = radial_extract(e);
            // smallest support radius meeting the truncation budget
            double a = 1.0, b = Rb;
            Field best(g);
            double err_best = -1.0;
            for (int it = 0; it < 28; ++it) {
                const double m = 0.5 * (a + b);
                Field t = radial_embed(tapered_profile(p, m - opt.taper_width, m, corner), g);
                Field d = t;
                axpy(-1.0, e, d);
                const double err = h1_norm(d);
                if (err <= target) {
                    b = m;
                    best = t;
                    err_best = err;
                } else {
                    a = m;
                }
            }
            if (err_best < 0.0)
                throw NonConvergenceError("build_basis: mu bound unachievable at current grid");
            mu = std::max(mu, err_best);
            trunc.push_back(std::move(best));
        }
        basis.mu_k = mu;
        if (basis.mu_k >= basis.mu_cap)
            throw NonConvergenceError("build_basis: mu bound unachievable at current grid");

        double offdiag = 0.0;
        for (std::size_t i = 0; i < trunc.size(); ++i)
            for (std::size_t j = i + 1; j < trunc.size(); ++j)
                offdiag = std::max(offdiag, std::fabs(h1_inner(trunc[i], trunc[j])));
        basis.gram_offdiag_pre = offdiag;

        for (auto& t : trunc)
            for (const auto& y : basis.basis_Y) axpy(-h1_inner(y, t), y, t);
        basis.basis_E = orthonormalize_h1(std::move(trunc), opt.drop_tol);
    }

    basis.decay.clear();
    for (const auto& e : basis.basis_E)
        basis.decay.push_back(decay_fit(radial_extract(e), g.dim(), L));
    return basis;
}

GalerkinBasis build_basis(const EnergyModel& model, const Field& omega, const SpectralData& sd,
                          int k, BasisMode mode, const BasisOptions& opt) {
    return build_basis_potential(model.nonlinearity().fprime_of(omega), sd, k, mode, opt);
}

} // namespace varred
