#pragma once

#include <array>
#include <complex>
#include <vector>

#include "varred/field.hpp"

namespace varred {

/// Half-complex spectrum of a real field (FFTW r2c layout, last axis M/2+1).
struct Spectrum {
    GridSpec grid;
    std::vector<std::complex<double>> coef;
};

/// Iterative-solve settings shared by every preconditioned solve in the library.
struct SolveOptions {
    double tol = 1e-10;
    int max_iter = 500;
};

struct SolveStats {
    int iterations = 0;
    double residual = 0.0; // relative, in the solve's native norm
    bool converged = false;
};

Spectrum fft_forward(const Field& u);
Field fft_inverse(const Spectrum& s);

/// Multiply the spectrum by a function of |kappa|^2 in place.
void apply_symbol(Spectrum& s, const std::function<double(double)>& g);

/// H¹ pairing integral(grad a . grad b + a b), evaluated spectrally (Parseval).
double h1_inner(const Field& a, const Field& b);
double h1_norm(const Field& a);
/// Same pairing on precomputed spectra (no transforms).
double h1_inner(const Spectrum& a, const Spectrum& b);

/// (-Delta + 1) u, spectral.
Field helmholtz_apply(const Field& u);
/// (-Delta + 1)^{-1} h, spectral diagonal inverse.
Field helmholtz_inverse(const Field& h);
/// (-Delta + 1 + V)^{-1} h by preconditioned CG; requires inf(1 + V) > 0.
/// Convergence is measured through the preconditioned residual, whose H¹ norm
/// equals the H^{-1} norm of the true residual.
Field helmholtz_inverse(const Field& h, const Field& V, const SolveOptions& opt = {},
                        SolveStats* stats = nullptr);

/// Exact spectral translation u(. - y); inverse of translate(., -y) to round-off.
Field translate(const Field& u, const std::array<double, 3>& y);
/// Spectral partial derivative along an axis.
Field derivative(const Field& u, int axis);
/// Spectral Laplacian.
Field laplacian(const Field& u);

/// Zero-padded Fourier upsampling by an integer factor (trigonometric interpolation).
Field upsample(const Field& u, int factor);

/// Evaluate the 6-point tensor-Lagrange interpolant of a periodic field at a point.
double interpolate(const Field& u, const std::array<double, 3>& x);

} // namespace varred
