#pragma once

#include <vector>

#include "varred/model.hpp"

namespace varred {

struct EigOptions {
    int m = 12;            // eigenpairs requested
    double tol = 1e-8;     // L2 residual per pair
    int max_iter = 300;
    unsigned long long seed = 2026;
};

/// Spectral data of the linearized operator -Delta + 1 - W (W = f'(omega) for
/// the physical case). Reported eigenvalues are the L2 spectrum; kernel bases
/// and the H1-orthonormalized span are what downstream constructions consume.
struct SpectralData {
    std::vector<double> eigenvalues;   // ascending
    std::vector<Field> eigenfields;    // L2-orthonormal
    std::vector<Field> eigenfields_h1; // same span, H1-orthonormal
    std::vector<double> residuals;     // ||L phi - lambda phi||_L2 per pair
    int morse_index = 0;               // eigenvalues below -tol_eig
    int kernel_dim_full = 0;
    int kernel_dim_radial = 0;
    std::vector<Field> Z_basis;        // H1-orthonormal translation frame
    std::vector<Field> Y_basis;        // radial kernel modes H1-orthogonal to Z
    std::vector<Field> Y_script;       // aggregate degeneracy space (single chart: = Y_basis)
    int q_dim = 0;
    double tol_kernel = 0.0;
};

/// Apply -Delta + 1 - W.
Field schrodinger_apply(const Field& W, const Field& h);

/// Lowest eigenpairs of -Delta + 1 - W by blocked, preconditioned Rayleigh-Ritz
/// iteration (free-resolvent preconditioner). Deterministic given opt.seed.
SpectralData lowest_eigenpairs_potential(const Field& W, const EigOptions& opt = {});

/// Physical case W = f'(omega); also fills the kernel spaces about omega.
SpectralData lowest_eigenpairs(const EnergyModel& model, const Field& omega,
                               const EigOptions& opt = {});

/// Classify the kernel cluster |lambda| < tol_kernel of an already-computed
/// SpectralData: Z frame from omega's translations, Y the radial remainder.
/// Throws when the cluster is not separated from the rest by 10x tol_kernel.
void kernel_spaces(SpectralData& sd, const Field& omega, double tol_kernel);

struct SymmetryReport {
    std::vector<double> z_overlaps;          // <v, z_i>_{H1}
    double z_fraction = 0.0;                 // H1 fraction of v inside span Z
    double residual_norm = 0.0;              // ||v - P_Z v||_{H1}
    double residual_angular_fraction = 0.0;  // angular mass of the Z-orthogonal part
    bool radial_after_z = false;
};

/// Numerical content of the kernel-symmetry lemma: a kernel vector orthogonal
/// to the translations is radial. Precondition (throws): v lies in the
/// numerical kernel of -Delta + 1 - W.
SymmetryReport symmetry_check(const Field& v, const SpectralData& sd, const Field& W);

} // namespace varred
