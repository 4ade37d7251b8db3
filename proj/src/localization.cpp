#include "varred/localization.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "varred/errors.hpp"

namespace varred {

namespace {

double binom(int n, int k) {
    double v = 1.0;
    for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
    return v;
}

double ipow(double x, int n) {
    double v = 1.0;
    for (int i = 0; i < n; ++i) v *= x;
    return v;
}

Eigen::Matrix3d to_eigen(const Mat3& m) {
    Eigen::Matrix3d out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out(i, j) = m[i][j];
    return out;
}

} // namespace

GammaExpansion::GammaExpansion(const Potential& pot, const Field& lifted)
    : dim_(lifted.grid().dim()), nstar_(pot.nstar()), q_(pot.q_monomials()) {
    if (nstar_ > 4)
        throw std::invalid_argument("GammaExpansion: monomial degree above the moment table");
    const GridSpec& g = lifted.grid();
    const double vol = g.cell_volume();
    for (std::size_t i = 0; i < lifted.size(); ++i) {
        const std::array<int, 3> idx = g.unravel(i);
        const double rho = lifted[i] * lifted[i] * vol;
        double xp[3][5];
        for (int d = 0; d < 3; ++d) {
            const double c = d < dim_ ? g.coord(idx[d]) : 0.0;
            xp[d][0] = 1.0;
            for (int n = 1; n <= 4; ++n) xp[d][n] = xp[d][n - 1] * c;
        }
        for (int a = 0; a <= nstar_; ++a)
            for (int b = 0; a + b <= nstar_; ++b)
                for (int c = 0; a + b + c <= nstar_; ++c)
                    moments_[a][b][c] += xp[0][a] * xp[1][b] * xp[2][c] * rho;
    }
}

double GammaExpansion::moment(const std::array<int, 3>& beta) const {
    return moments_[beta[0]][beta[1]][beta[2]];
}

double GammaExpansion::value(const std::array<double, 3>& y) const {
    // Γ(u, y) = Σ_α c_α Σ_{β ≤ α} Π_d binom(α_d, β_d) y_d^{α_d - β_d} M_β
    double total = 0.0;
    for (const Monomial& m : q_) {
        double term = 0.0;
        for (int b0 = 0; b0 <= m.alpha[0]; ++b0)
            for (int b1 = 0; b1 <= m.alpha[1]; ++b1)
                for (int b2 = 0; b2 <= m.alpha[2]; ++b2) {
                    const double w = binom(m.alpha[0], b0) * binom(m.alpha[1], b1) *
                                     binom(m.alpha[2], b2) * ipow(y[0], m.alpha[0] - b0) *
                                     ipow(y[1], m.alpha[1] - b1) * ipow(y[2], m.alpha[2] - b2);
                    term += w * moments_[b0][b1][b2];
                }
        total += m.coeff * term;
    }
    return total;
}

std::array<double, 3> GammaExpansion::gradient(const std::array<double, 3>& y) const {
    std::array<double, 3> out{0.0, 0.0, 0.0};
    for (int j = 0; j < dim_; ++j) {
        double gj = 0.0;
        for (const Monomial& m : q_) {
            if (m.alpha[j] == 0) continue;
            // ∂_{y_j} of the binomial expansion shifts one power from y_j
            for (int b0 = 0; b0 <= m.alpha[0]; ++b0)
                for (int b1 = 0; b1 <= m.alpha[1]; ++b1)
                    for (int b2 = 0; b2 <= m.alpha[2]; ++b2) {
                        const int e[3] = {m.alpha[0] - b0, m.alpha[1] - b1, m.alpha[2] - b2};
                        if (e[j] == 0) continue;
                        double w = binom(m.alpha[0], b0) * binom(m.alpha[1], b1) *
                                   binom(m.alpha[2], b2);
                        double yfac = 1.0;
                        for (int d = 0; d < 3; ++d)
                            yfac *= ipow(y[d], d == j ? e[d] - 1 : e[d]);
                        gj += m.coeff * w * e[j] * yfac * moments_[b0][b1][b2];
                    }
        }
        out[j] = gj;
    }
    return out;
}

Mat3 GammaExpansion::hessian(const std::array<double, 3>& y) const {
    Mat3 out{};
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) {
            double hij = 0.0;
            for (const Monomial& m : q_) {
                for (int b0 = 0; b0 <= m.alpha[0]; ++b0)
                    for (int b1 = 0; b1 <= m.alpha[1]; ++b1)
                        for (int b2 = 0; b2 <= m.alpha[2]; ++b2) {
                            int e[3] = {m.alpha[0] - b0, m.alpha[1] - b1, m.alpha[2] - b2};
                            double fac = 1.0;
                            // differentiate twice, once in i and once in j
                            if (e[i] == 0) continue;
                            fac *= e[i];
                            --e[i];
                            if (e[j] == 0) continue;
                            fac *= e[j];
                            --e[j];
                            const double w = binom(m.alpha[0], b0) * binom(m.alpha[1], b1) *
                                             binom(m.alpha[2], b2);
                            const double yfac = ipow(y[0], e[0]) * ipow(y[1], e[1]) * ipow(y[2], e[2]);
                            hij += m.coeff * w * fac * yfac * moments_[b0][b1][b2];
                        }
            }
            out[i][j] = hij;
        }
    return out;
}

LocalizationData localize(const Reduction& red, const Potential& pot, const Field& u) {
    auto [pi, tr] = red.pi(u);
    (void)tr;
    Field lifted = u;
    lifted += pi;
    const GridSpec& g = lifted.grid();
    const int dim = g.dim();

    GammaExpansion gx(pot, lifted);
    LocalizationData out;
    out.gamma = gx.value({0.0, 0.0, 0.0});
    out.grad_y = gx.gradient({0.0, 0.0, 0.0});
    out.hess = gx.hessian({0.0, 0.0, 0.0});

    // independent route 1: central differences of direct shifted quadratures
    const Field rho = hadamard(lifted, lifted);
    auto direct = [&](const std::array<double, 3>& y) {
        return l2_inner(pot.q_field_shifted(g, y), rho);
    };
    const double h = 0.01;
    const double g0 = direct({0.0, 0.0, 0.0});
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            std::array<double, 3> ya{}, yb{}, yc{}, yd{};
            if (i == j) {
                ya[i] = h;
                yb[i] = -h;
                out.hess_fd[i][j] = (direct(ya) - 2.0 * g0 + direct(yb)) / (h * h);
            } else {
                ya[i] = h;
                ya[j] = h;
                yb[i] = h;
                yb[j] = -h;
                yc[i] = -h;
                yc[j] = h;
                yd[i] = -h;
                yd[j] = -h;
                out.hess_fd[i][j] =
                    (direct(ya) - direct(yb) - direct(yc) + direct(yd)) / (4.0 * h * h);
            }
        }

    // independent route 2: one integration by parts, -2 ∫ ∂_j Q (u+π) ∂_i (u+π)
    std::vector<Field> dlift;
    for (int d = 0; d < dim; ++d) dlift.push_back(derivative(lifted, d));
    std::vector<Field> dq;
    for (int d = 0; d < dim; ++d) {
        dq.push_back(make_field(g, [&](const std::array<double, 3>& x) {
            double v = 0.0;
            for (const Monomial& m : pot.q_monomials()) {
                if (m.alpha[d] == 0) continue;
                std::array<int, 3> a = m.alpha;
                --a[d];
                v += m.coeff * m.alpha[d] * ipow(x[0], a[0]) * ipow(x[1], a[1]) * ipow(x[2], a[2]);
            }
            return v;
        }));
    }
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            const double a = -2.0 * l2_inner(dq[j], hadamard(lifted, dlift[i]));
            const double b = -2.0 * l2_inner(dq[i], hadamard(lifted, dlift[j]));
            out.hess_gradq[i][j] = 0.5 * (a + b);
        }

    // isotropic route 3: (1/N) ∫ ΔQ ρ along the diagonal
    const Field lapq = make_field(g, [&](const std::array<double, 3>& x) {
        double v = 0.0;
        for (const Monomial& m : pot.laplacian_q_monomials())
            v += m.coeff * ipow(x[0], m.alpha[0]) * ipow(x[1], m.alpha[1]) * ipow(x[2], m.alpha[2]);
        return v;
    });
    out.alpha_lapq = l2_inner(lapq, rho) / dim;

    Eigen::MatrixXd H = to_eigen(out.hess).topLeftCorner(dim, dim);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    out.a_k = es.eigenvalues().minCoeff();
    return out;
}

std::array<double, 3> optimize_gamma(const GammaExpansion& gx, double R, int sigma) {
    if (sigma == 0) throw std::invalid_argument("optimize_gamma: indefinite localization sign");
    const int dim = gx.dim();
    std::array<double, 3> y{0.0, 0.0, 0.0};
    for (int it = 0; it < 50; ++it) {
        const std::array<double, 3> g = gx.gradient(y);
        double gn = 0.0;
        for (int d = 0; d < dim; ++d) gn += g[d] * g[d];
        gn = std::sqrt(gn);
        if (gn <= 1e-12) break;
        Eigen::MatrixXd H = to_eigen(gx.hessian(y)).topLeftCorner(dim, dim);
        Eigen::VectorXd gv(dim);
        for (int d = 0; d < dim; ++d) gv(d) = g[d];
        Eigen::VectorXd s = H.colPivHouseholderQr().solve(-gv);
        for (int d = 0; d < dim; ++d) y[d] += s(d);
        double yn = 0.0;
        for (int d = 0; d < dim; ++d) yn += y[d] * y[d];
        if (std::sqrt(yn) > R)
            throw HypothesisError("optimize_gamma: stationary point left the search ball");
    }
    Eigen::MatrixXd H = to_eigen(gx.hessian(y)).topLeftCorner(dim, dim);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const double extremal = sigma > 0 ? es.eigenvalues().minCoeff() : es.eigenvalues().maxCoeff();
    if (sigma > 0 ? extremal <= 0.0 : extremal >= 0.0)
        throw HypothesisError("optimize_gamma: curvature sign contradicts the localization sign");
    return y;
}

} // namespace varred
