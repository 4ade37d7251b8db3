#include "varred/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace varred {

namespace {

/// Cached FFTW plans for one (dim, points) shape. FFTW_ESTIMATE keeps planning
/// deterministic; FFTW_UNALIGNED lets the plans run on any caller buffer.
class PlanSet {
public:
    PlanSet(int dim, int points) : dim_(dim), points_(points) {
        std::array<int, 3> n{points, points, points};
        std::vector<double> rbuf(real_size());
        std::vector<std::complex<double>> cbuf(spec_size());
        fwd_ = fftw_plan_dft_r2c(dim, n.data(), rbuf.data(),
                                 reinterpret_cast<fftw_complex*>(cbuf.data()),
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
        bwd_ = fftw_plan_dft_c2r(dim, n.data(), reinterpret_cast<fftw_complex*>(cbuf.data()),
                                 rbuf.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!fwd_ || !bwd_) throw std::runtime_error("PlanSet: fftw planning failed");
    }
    ~PlanSet() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }
    PlanSet(const PlanSet&) = delete;
    PlanSet& operator=(const PlanSet&) = delete;

    std::size_t real_size() const {
        std::size_t s = 1;
        for (int d = 0; d < dim_; ++d) s *= static_cast<std::size_t>(points_);
        return s;
    }
    std::size_t spec_size() const {
        std::size_t s = 1;
        for (int d = 0; d < dim_ - 1; ++d) s *= static_cast<std::size_t>(points_);
        return s * static_cast<std::size_t>(points_ / 2 + 1);
    }
    void forward(const double* in, std::complex<double>* out) const {
        // r2c with FFTW_PRESERVE_INPUT is not available in all shapes; copy instead.
        std::vector<double> tmp(in, in + real_size());
        fftw_execute_dft_r2c(fwd_, tmp.data(), reinterpret_cast<fftw_complex*>(out));
    }
    void backward(std::complex<double>* in, double* out) const {
        fftw_execute_dft_c2r(bwd_, reinterpret_cast<fftw_complex*>(in), out);
    }

private:
    int dim_;
    int points_;
    fftw_plan fwd_;
    fftw_plan bwd_;
};

const PlanSet& plans_for(const GridSpec& g) {
    static std::map<std::pair<int, int>, std::unique_ptr<PlanSet>> cache;
    auto key = std::make_pair(g.dim(), g.points());
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, std::make_unique<PlanSet>(g.dim(), g.points())).first;
    return *it->second;
}

/// Signed frequency index for a full axis position.
inline int freq_index(int i, int M) { return i <= M / 2 ? i : i - M; }

/// Iterate the half-complex lattice, handing (flat, kappa0, kappa1, kappa2) to fn.
template <typename Fn>
void for_each_mode(const GridSpec& g, Fn&& fn) {
    const int M = g.points();
    const int Mh = M / 2 + 1;
    const double k0 = std::numbers::pi / g.half_width();
    if (g.dim() == 1) {
        for (int i = 0; i < Mh; ++i) fn(static_cast<std::size_t>(i), k0 * i, 0.0, 0.0);
    } else if (g.dim() == 2) {
        std::size_t p = 0;
        for (int i = 0; i < M; ++i) {
            const double ka = k0 * freq_index(i, M);
            for (int j = 0; j < Mh; ++j, ++p) fn(p, ka, k0 * j, 0.0);
        }
    } else {
        std::size_t p = 0;
        for (int i = 0; i < M; ++i) {
            const double ka = k0 * freq_index(i, M);
            for (int j = 0; j < M; ++j) {
                const double kb = k0 * freq_index(j, M);
                for (int l = 0; l < Mh; ++l, ++p) fn(p, ka, kb, k0 * l);
            }
        }
    }
}

/// Parseval weight: modes with 0 < last-axis index < M/2 represent a conjugate pair.
inline double mode_weight(std::size_t flat, const GridSpec& g) {
    const int Mh = g.points() / 2 + 1;
    const int j = static_cast<int>(flat % static_cast<std::size_t>(Mh));
    return (j == 0 || j == g.points() / 2) ? 1.0 : 2.0;
}

} // namespace

Spectrum fft_forward(const Field& u) {
    const auto& p = plans_for(u.grid());
    Spectrum s{u.grid(), std::vector<std::complex<double>>(p.spec_size())};
    p.forward(u.data(), s.coef.data());
    return s;
}

Field fft_inverse(const Spectrum& s) {
    const auto& p = plans_for(s.grid);
    Field out(s.grid);
    std::vector<std::complex<double>> tmp = s.coef; // c2r clobbers its input
    p.backward(tmp.data(), out.data());
    const double scale = 1.0 / static_cast<double>(s.grid.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= scale;
    return out;
}

void apply_symbol(Spectrum& s, const std::function<double(double)>& g) {
    for_each_mode(s.grid, [&](std::size_t p, double ka, double kb, double kc) {
        s.coef[p] *= g(ka * ka + kb * kb + kc * kc);
    });
}

double h1_inner(const Field& a, const Field& b) {
    require_same_grid(a, b, "h1_inner");
    return h1_inner(fft_forward(a), fft_forward(b));
}

double h1_inner(const Spectrum& a, const Spectrum& b) {
    if (a.grid != b.grid) throw std::invalid_argument("h1_inner: spectra on different grids");
    const double norm = a.grid.cell_volume() / static_cast<double>(a.grid.size());
    double acc = 0.0;
    for_each_mode(a.grid, [&](std::size_t p, double ka, double kb, double kc) {
        const double k2 = ka * ka + kb * kb + kc * kc;
        const double re = a.coef[p].real() * b.coef[p].real() + a.coef[p].imag() * b.coef[p].imag();
        acc += mode_weight(p, a.grid) * (1.0 + k2) * re;
    });
    return acc * norm;
}

double h1_norm(const Field& a) { return std::sqrt(h1_inner(a, a)); }

Field helmholtz_apply(const Field& u) {
    Spectrum s = fft_forward(u);
    apply_symbol(s, [](double k2) { return 1.0 + k2; });
    return fft_inverse(s);
}

Field helmholtz_inverse(const Field& h) {
    Spectrum s = fft_forward(h);
    apply_symbol(s, [](double k2) { return 1.0 / (1.0 + k2); });
    return fft_inverse(s);
}

Field helmholtz_inverse(const Field& h, const Field& V, const SolveOptions& opt, SolveStats* stats) {
    require_same_grid(h, V, "helmholtz_inverse");
    double vmin = V[0];
    for (std::size_t i = 0; i < V.size(); ++i) vmin = std::min(vmin, V[i]);
    if (!(1.0 + vmin > 0.0)) throw std::invalid_argument("helmholtz_inverse: 1 + V must be positive");

    auto apply = [&](const Field& u) {
        Field out = helmholtz_apply(u);
        for (std::size_t i = 0; i < u.size(); ++i) out[i] += V[i] * u[i];
        return out;
    };

    // PCG in L² with the free-resolvent preconditioner. rho = (r, P r)_{L²} is the
    // squared H¹ norm of the preconditioned residual, i.e. the H^{-1} residual norm.
    Field x(h.grid());
    Field r = h;
    Field z = helmholtz_inverse(r);
    Field d = z;
    double rho = l2_inner(r, z);
    const double rho0 = rho;
    SolveStats st;
    if (rho0 <= 0.0) {
        if (stats) *stats = SolveStats{0, 0.0, true};
        return x;
    }
    for (int it = 0; it < opt.max_iter; ++it) {
        Field Ad = apply(d);
        const double alpha = rho / l2_inner(d, Ad);
        axpy(alpha, d, x);
        axpy(-alpha, Ad, r);
        z = helmholtz_inverse(r);
        const double rho_next = l2_inner(r, z);
        st.iterations = it + 1;
        st.residual = std::sqrt(std::max(rho_next, 0.0) / rho0);
        if (st.residual <= opt.tol) {
            st.converged = true;
            break;
        }
        const double beta = rho_next / rho;
        rho = rho_next;
        d *= beta;
        d += z;
    }
    if (stats) *stats = st;
    if (!st.converged) throw std::runtime_error("helmholtz_inverse: CG did not converge");
    return x;
}

Field translate(const Field& u, const std::array<double, 3>& y) {
    Spectrum s = fft_forward(u);
    for_each_mode(u.grid(), [&](std::size_t p, double ka, double kb, double kc) {
        const double phase = -(ka * y[0] + kb * y[1] + kc * y[2]);
        s.coef[p] *= std::complex<double>(std::cos(phase), std::sin(phase));
    });
    return fft_inverse(s);
}

Field derivative(const Field& u, int axis) {
    if (axis < 0 || axis >= u.grid().dim()) throw std::invalid_argument("derivative: bad axis");
    Spectrum s = fft_forward(u);
    for_each_mode(u.grid(), [&](std::size_t p, double ka, double kb, double kc) {
        const double k = axis == 0 ? ka : (axis == 1 ? kb : kc);
        s.coef[p] *= std::complex<double>(0.0, k);
    });
    // The Nyquist sine component has no conjugate partner; drop it to keep d/dx real.
    const int M = u.grid().points();
    for_each_mode(u.grid(), [&](std::size_t p, double ka, double kb, double kc) {
        const double k0 = std::numbers::pi / u.grid().half_width();
        const double kn = k0 * (M / 2);
        const double k = axis == 0 ? ka : (axis == 1 ? kb : kc);
        if (std::fabs(std::fabs(k) - kn) < 1e-14 * kn) s.coef[p] = 0.0;
    });
    return fft_inverse(s);
}

Field laplacian(const Field& u) {
    Spectrum s = fft_forward(u);
    apply_symbol(s, [](double k2) { return -k2; });
    return fft_inverse(s);
}

Field upsample(const Field& u, int factor) {
    if (factor < 1) throw std::invalid_argument("upsample: factor must be >= 1");
    if (factor == 1) return u;
    const GridSpec& g = u.grid();
    GridSpec fine(g.dim(), g.points() * factor, g.half_width(), g.decay_tol());
    Spectrum coarse = fft_forward(u);
    Spectrum out{fine, std::vector<std::complex<double>>(plans_for(fine).spec_size(), 0.0)};

    const int M = g.points(), Mh = M / 2 + 1;
    const int F = fine.points(), Fh = F / 2 + 1;
    // Copy modes with |m| < M/2 per axis; the coarse Nyquist mode is dropped
    // (fields of interest have machine-zero content there).
    auto map_axis = [&](int i) {
        const int m = freq_index(i, M);
        return m >= 0 ? m : m + F;
    };
    if (g.dim() == 1) {
        for (int i = 0; i < Mh - 1; ++i) out.coef[static_cast<std::size_t>(i)] = coarse.coef[static_cast<std::size_t>(i)];
    } else if (g.dim() == 2) {
        for (int i = 0; i < M; ++i) {
            if (i == M / 2) continue;
            for (int j = 0; j < Mh - 1; ++j)
                out.coef[static_cast<std::size_t>(map_axis(i)) * Fh + j] =
                    coarse.coef[static_cast<std::size_t>(i) * Mh + j];
        }
    } else {
        for (int i = 0; i < M; ++i) {
            if (i == M / 2) continue;
            for (int j = 0; j < M; ++j) {
                if (j == M / 2) continue;
                for (int l = 0; l < Mh - 1; ++l)
                    out.coef[(static_cast<std::size_t>(map_axis(i)) * F + map_axis(j)) * Fh + l] =
                        coarse.coef[(static_cast<std::size_t>(i) * M + j) * Mh + l];
            }
        }
    }
    const double scale = std::pow(static_cast<double>(factor), g.dim());
    for (auto& c : out.coef) c *= scale;
    return fft_inverse(out);
}

namespace {
/// 6-point Lagrange weights on the uniform stencil {-2,...,3} at offset t in [0,1).
void lagrange6(double t, double w[6]) {
    static const double nodes[6] = {-2.0, -1.0, 0.0, 1.0, 2.0, 3.0};
    for (int a = 0; a < 6; ++a) {
        double num = 1.0, den = 1.0;
        for (int b = 0; b < 6; ++b) {
            if (a == b) continue;
            num *= t - nodes[b];
            den *= nodes[a] - nodes[b];
        }
        w[a] = num / den;
    }
}
} // namespace

double interpolate(const Field& u, const std::array<double, 3>& x) {
    const GridSpec& g = u.grid();
    const int M = g.points();
    const double h = g.spacing();
    int base[3] = {0, 0, 0};
    double w[3][6];
    for (int d = 0; d < g.dim(); ++d) {
        double s = (x[d] + g.half_width()) / h;
        double fl = std::floor(s);
        base[d] = static_cast<int>(fl);
        lagrange6(s - fl, w[d]);
    }
    auto wrap = [&](int i) { return ((i % M) + M) % M; };
    double acc = 0.0;
    if (g.dim() == 1) {
        for (int a = 0; a < 6; ++a) acc += w[0][a] * u[static_cast<std::size_t>(wrap(base[0] - 2 + a))];
    } else if (g.dim() == 2) {
        for (int a = 0; a < 6; ++a) {
            const std::size_t row = static_cast<std::size_t>(wrap(base[0] - 2 + a)) * M;
            double line = 0.0;
            for (int b = 0; b < 6; ++b) line += w[1][b] * u[row + wrap(base[1] - 2 + b)];
            acc += w[0][a] * line;
        }
    } else {
        for (int a = 0; a < 6; ++a) {
            const std::size_t ia = static_cast<std::size_t>(wrap(base[0] - 2 + a));
            double plane = 0.0;
            for (int b = 0; b < 6; ++b) {
                const std::size_t ib = static_cast<std::size_t>(wrap(base[1] - 2 + b));
                double line = 0.0;
                for (int c = 0; c < 6; ++c)
                    line += w[2][c] * u[(ia * M + ib) * M + wrap(base[2] - 2 + c)];
                plane += w[1][b] * line;
            }
            acc += w[0][a] * plane;
        }
    }
    return acc;
}

} // namespace varred
