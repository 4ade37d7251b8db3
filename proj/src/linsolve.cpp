#include "varred/linsolve.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace varred {

namespace {

/// y += s * x on spectra (grids match by construction).
void spec_axpy(double s, const Spectrum& x, Spectrum& y) {
    for (std::size_t i = 0; i < y.coef.size(); ++i) y.coef[i] += s * x.coef[i];
}

} // namespace

SolveStats gmres_h1(const OpFn& A, const Field& b, Field& x, const GmresOptions& opt) {
    if (opt.restart < 1) throw std::invalid_argument("gmres_h1: restart must be >= 1");
    SolveStats stats;
    const double bnorm = h1_norm(b);
    if (bnorm == 0.0) {
        x *= 0.0;
        stats.converged = true;
        return stats;
    }

    const int m = opt.restart;
    std::vector<Field> V;         // Krylov basis, physical space
    std::vector<Spectrum> Vs;     // and its spectra (inner products are spectral)
    std::vector<double> H(static_cast<std::size_t>(m + 1) * m, 0.0);
    auto Hat = [&](int i, int j) -> double& { return H[static_cast<std::size_t>(i) * m + j]; };

    while (stats.iterations < opt.max_iter) {
        Field r = b;
        if (h1_norm(x) > 0.0) {
            r -= A(x);
            ++stats.iterations;
        }
        Spectrum rs = fft_forward(r);
        const double beta = std::sqrt(h1_inner(rs, rs));
        stats.residual = beta / bnorm;
        if (stats.residual <= opt.tol) {
            stats.converged = true;
            return stats;
        }

        V.clear();
        Vs.clear();
        std::fill(H.begin(), H.end(), 0.0);
        r *= 1.0 / beta;
        for (auto& c : rs.coef) c /= beta;
        V.push_back(std::move(r));
        Vs.push_back(std::move(rs));

        std::vector<double> cs(m, 0.0), sn(m, 0.0), g(static_cast<std::size_t>(m) + 1, 0.0);
        g[0] = beta;
        int j = 0;
        for (; j < m && stats.iterations < opt.max_iter; ++j) {
            Field w = A(V[static_cast<std::size_t>(j)]);
            ++stats.iterations;
            Spectrum ws = fft_forward(w);
            for (int i = 0; i <= j; ++i) {
                const double hij = h1_inner(Vs[static_cast<std::size_t>(i)], ws);
                Hat(i, j) = hij;
                axpy(-hij, V[static_cast<std::size_t>(i)], w);
                spec_axpy(-hij, Vs[static_cast<std::size_t>(i)], ws);
            }
            const double hj1 = std::sqrt(std::max(0.0, h1_inner(ws, ws)));
            Hat(j + 1, j) = hj1;

            // Givens update of column j.
            for (int i = 0; i < j; ++i) {
                const double t = cs[i] * Hat(i, j) + sn[i] * Hat(i + 1, j);
                Hat(i + 1, j) = -sn[i] * Hat(i, j) + cs[i] * Hat(i + 1, j);
                Hat(i, j) = t;
            }
            const double denom = std::hypot(Hat(j, j), hj1);
            cs[j] = denom == 0.0 ? 1.0 : Hat(j, j) / denom;
            sn[j] = denom == 0.0 ? 0.0 : hj1 / denom;
            Hat(j, j) = denom;
            g[static_cast<std::size_t>(j) + 1] = -sn[j] * g[static_cast<std::size_t>(j)];
            g[static_cast<std::size_t>(j)] *= cs[j];

            const double est = std::fabs(g[static_cast<std::size_t>(j) + 1]) / bnorm;
            if (hj1 <= 1e-14 * bnorm || est <= 0.5 * opt.tol) {
                ++j;
                break;
            }
            w *= 1.0 / hj1;
            for (auto& c : ws.coef) c /= hj1;
            V.push_back(std::move(w));
            Vs.push_back(std::move(ws));
        }

        // Back substitution and update.
        std::vector<double> y(static_cast<std::size_t>(j), 0.0);
        for (int i = j - 1; i >= 0; --i) {
            double s = g[static_cast<std::size_t>(i)];
            for (int l = i + 1; l < j; ++l) s -= Hat(i, l) * y[static_cast<std::size_t>(l)];
            if (Hat(i, i) == 0.0) throw std::runtime_error("gmres_h1: singular Hessenberg block");
            y[static_cast<std::size_t>(i)] = s / Hat(i, i);
        }
        for (int i = 0; i < j; ++i) axpy(y[static_cast<std::size_t>(i)], V[static_cast<std::size_t>(i)], x);
    }

    // Budget exhausted: report the true residual.
    Field r = b - A(x);
    stats.residual = h1_norm(r) / bnorm;
    stats.converged = stats.residual <= opt.tol;
    return stats;
}

} // namespace varred
