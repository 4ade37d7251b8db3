#pragma once

#include <optional>
#include <string>
#include <vector>

#include "varred/spectral.hpp"

namespace varred {

/// Radial samples u(r_j), radii strictly increasing with r_0 = 0.
struct RadialProfile {
    std::vector<double> radii;
    std::vector<double> values;

    void validate() const;
};

/// Natural cubic spline through (radii, values); evaluation clamps nothing and
/// throws outside the covered range.
class RadialSpline {
public:
    explicit RadialSpline(const RadialProfile& p);
    double operator()(double r) const;
    double r_max() const { return r_.back(); }

private:
    std::vector<double> r_, v_, m_; // knots, values, second derivatives
};

/// Sample a radial profile onto the lattice: u(x) = spline(|x|).
/// The profile must cover the corner radius sqrt(N) L and must itself have
/// decayed below grid.decay_tol() * max|p| at the boundary.
Field radial_embed(const RadialProfile& p, const GridSpec& grid);

/// Read the profile back from on-axis lattice values at radii j h, j = 0..0.95 L/h,
/// averaging the 2N axis directions. Exact (no interpolation) for radial fields;
/// the maximal direction spread is reported through *anisotropy when given.
RadialProfile radial_extract(const Field& u, double* anisotropy = nullptr);

/// Fraction of L² mass carried by nonzero angular harmonics about `center`,
/// computed on polar/spherical shells of the trigonometrically upsampled field.
double angular_energy_fraction(const Field& u, const std::array<double, 3>& center = {0.0, 0.0, 0.0});

/// Shell means of u about the origin on radii j h / 2 (resampled); used by the
/// kernel-symmetry report.
RadialProfile shell_means(const Field& u);

struct DecayFit {
    double exponent = 0.0;   // decay rate nu in u ~ r^{-(N-1)/2} e^{-nu r}
    double r_squared = 0.0;  // linear-fit quality on the compensated log profile
    double curvature = 0.0;  // quadratic coefficient of the compensated log profile
    bool exponential = false;
};

/// Least-squares decay fit of log|u(r)| + (N-1)/2 log r over r in [L/3, 2L/3].
/// A significant quadratic trend over the window flags a non-exponential tail.
DecayFit decay_fit(const RadialProfile& p, int dim, double half_width);

} // namespace varred
