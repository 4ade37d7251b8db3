#pragma once

#include <vector>

#include "varred/model.hpp"
#include "varred/radial.hpp"
#include "varred/spectrum.hpp"

namespace varred {

enum class BasisMode { eigen, appendixA };

struct BasisOptions {
    int radial_points = 1024;      // 1-D discretization of the radial operator
    double support_radius = 0.0;   // Dirichlet radius; 0 selects 0.8125 * half_width
    double taper_width = 1.6;      // smooth cutoff band inside the support radius
    double mu_target_frac = 0.9;   // appendixA: target mu as a fraction of the cap
    double drop_tol = 1e-8;        // Gram-Schmidt dependence threshold
};

/// Radial eigenpairs of -Delta + 1 - W restricted to radial functions,
/// computed on [0, R] with a zero boundary value at R.
struct RadialEigen {
    std::vector<double> eigenvalues;
    std::vector<RadialProfile> profiles; // unit weighted-L2 norm
};
RadialEigen radial_eigen_lowest(const RadialSpline& W, int dim, double R, int n, int count);

/// The kept subspace X_k = span{basis_E} (+) span{basis_Y}, basis fields
/// H1-orthonormal as one family, each orthogonal to the degeneracy space.
struct GalerkinBasis {
    int k = 0;
    BasisMode mode = BasisMode::eigen;
    std::vector<Field> basis_E;
    std::vector<Field> basis_Y;             // copy of the degeneracy basis
    std::vector<double> radial_eigenvalues; // 1-D values backing basis_E
    std::vector<DecayFit> decay;            // tail fit per basis_E field
    double mu_k = 0.0;          // appendixA: achieved max truncation error
    double mu_cap = 0.0;        // appendixA: admissible bound for this k
    double gram_offdiag_pre = 0.0; // appendixA: max off-diagonal before re-orthonormalization

    int x_dim() const { return static_cast<int>(basis_E.size() + basis_Y.size()); }
    /// H1-orthogonal projection onto X_k and its complement.
    Field project(const Field& u) const;
    Field complement(const Field& u) const;
    /// Coefficients of project(u) in the frame basis_E then basis_Y.
    std::vector<double> coefficients(const Field& u) const;
    Field from_coefficients(const std::vector<double>& c) const;
};

/// Build X_k around the linearization at omega: eigen mode embeds the k lowest
/// radial eigenfields of the 1-D reduction of -Delta + 1 - W, tapered to
/// compact support inside the box, orthogonalized against the degeneracy space
/// and H1-orthonormalized; appendixA mode re-truncates that family to minimal
/// supports with error mu_k below the admissible cap and re-orthonormalizes.
GalerkinBasis build_basis_potential(const Field& W, const SpectralData& sd, int k, BasisMode mode,
                                    const BasisOptions& opt = {});
GalerkinBasis build_basis(const EnergyModel& model, const Field& omega, const SpectralData& sd,
                          int k, BasisMode mode, const BasisOptions& opt = {});

/// mu cap of the mollified construction at dimension k.
double appendix_mu_cap(int k);

/// H1 modified Gram-Schmidt; throws CertificateError when a column drops below
/// drop_tol (linear dependence detected).
std::vector<Field> orthonormalize_h1(std::vector<Field> cols, double drop_tol);

} // namespace varred
