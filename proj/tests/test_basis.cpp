#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "varred/basis.hpp"
#include "varred/errors.hpp"
#include "varred/ground_state.hpp"
#include "varred/spectrum.hpp"

using namespace varred;

namespace {

struct Lab {
    GridSpec g{2, 128, 16.0};
    EnergyModel model;
    GroundState gs;
    SpectralData sd;

    static GroundState make_gs(const EnergyModel& m) {
        GroundStateOptions go;
        go.reseed_checks = 0;
        return solve_ground_state(m, go);
    }

    Lab() : model(g, Nonlinearity::cubic(), Potential::isotropic_quadratic(2)), gs(make_gs(model)) {
        EigOptions eo;
        eo.m = 12;
        sd = lowest_eigenpairs(model, gs.omega, eo);
    }
};

const Lab& lab() {
    static Lab L;
    return L;
}

double gram_residual(const std::vector<Field>& fields) {
    double worst = 0.0;
    for (std::size_t i = 0; i < fields.size(); ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            const double want = i == j ? 1.0 : 0.0;
            worst = std::max(worst, std::fabs(h1_inner(fields[i], fields[j]) - want));
        }
    return worst;
}

double boundary_max(const Field& f) {
    // max |f| on the x0 = -L grid line, where a periodized non-decaying field
    // would carry wrap-around mass
    double worst = 0.0;
    for (int j = 0; j < f.grid().points(); ++j)
        worst = std::max(worst, std::fabs(f[(std::size_t)j]));
    return worst;
}

} // namespace

TEST_CASE("eigen basis is orthonormal, radial, and compactly supported") {
    const Lab& L = lab();
    GalerkinBasis B = build_basis(L.model, L.gs.omega, L.sd, 8, BasisMode::eigen);

    REQUIRE(B.basis_E.size() == 8);
    REQUIRE(B.radial_eigenvalues.size() == 8);
    CHECK(gram_residual(B.basis_E) <= 1e-10);
    for (const auto& e : B.basis_E) {
        for (const auto& y : B.basis_Y) CHECK(std::fabs(h1_inner(e, y)) <= 1e-10);
        CHECK(angular_energy_fraction(e) <= 1e-5);
        CHECK(boundary_max(e) <= 1e-12);
    }

    // the radial operator has exactly one bound state; it heads the family
    CHECK(std::fabs(B.radial_eigenvalues[0] + 5.4026) <= 2e-3);
    CHECK(B.radial_eigenvalues[1] > 0.9);
    CHECK(B.decay[0].exponential);
    CHECK(B.decay[0].exponent >= 0.5);
    CHECK(B.decay[0].r_squared >= 0.999);

    // the leading mode reproduces the grid eigensolver's ground eigenfield
    const Field& e0 = B.basis_E[0];
    const Field& phi = L.sd.eigenfields[0];
    const double align = std::fabs(h1_inner(e0, phi)) / (h1_norm(e0) * h1_norm(phi));
    CHECK(align >= 0.99999);
    Field W = L.model.nonlinearity().fprime_of(L.gs.omega);
    Field Le = schrodinger_apply(W, e0);
    const double rayleigh = l2_inner(Le, e0) / l2_inner(e0, e0);
    CHECK(std::fabs(rayleigh - L.sd.eigenvalues[0]) <= 5e-4);
}

TEST_CASE("k=1 returns the single bound mode unchanged") {
    const Lab& L = lab();
    GalerkinBasis B = build_basis(L.model, L.gs.omega, L.sd, 1, BasisMode::eigen);
    REQUIRE(B.basis_E.size() == 1);
    CHECK(std::fabs(h1_norm(B.basis_E[0]) - 1.0) <= 1e-10);
    const double align = std::fabs(h1_inner(B.basis_E[0], L.sd.eigenfields[0])) /
                         h1_norm(L.sd.eigenfields[0]);
    CHECK(align >= 0.9999);
}

TEST_CASE("projection completeness on the ground state and its square") {
    const Lab& L = lab();
    Field om2 = hadamard(L.gs.omega, L.gs.omega);
    const double n1 = h1_norm(L.gs.omega), n2 = h1_norm(om2);

    std::vector<double> tail1, tail2;
    for (int k : {4, 8, 16, 32}) {
        GalerkinBasis B = build_basis(L.model, L.gs.omega, L.sd, k, BasisMode::eigen);
        tail1.push_back(h1_norm(B.complement(L.gs.omega)) / n1);
        tail2.push_back(h1_norm(B.complement(om2)) / n2);
    }
    for (std::size_t i = 1; i < tail1.size(); ++i) {
        CHECK(tail1[i] < tail1[i - 1]);
        CHECK(tail2[i] < tail2[i - 1]);
    }
    CHECK(tail1.back() <= 2.5e-3);
    CHECK(tail2.back() <= 3e-3);
}

TEST_CASE("appendixA mollification honors the Gram bound") {
    const Lab& L = lab();
    GalerkinBasis A = build_basis(L.model, L.gs.omega, L.sd, 8, BasisMode::appendixA);
    const double cap = appendix_mu_cap(8);

    CHECK(cap == doctest::Approx(0.1767767).epsilon(1e-5));
    CHECK(A.mu_k < cap);
    CHECK(A.mu_k <= 0.9 * cap + 1e-12);
    CHECK(A.gram_offdiag_pre <= 2.0 * A.mu_k + A.mu_k * A.mu_k);
    CHECK(gram_residual(A.basis_E) <= 1e-10);
    // truncation radii sit close to the origin at this budget, so the far
    // field is identically zero; compact support is the decay statement here
    for (const auto& e : A.basis_E) CHECK(boundary_max(e) <= 1e-7);

    // truncation radii exist arbitrarily close to the cap
    BasisOptions bo;
    bo.mu_target_frac = 0.99;
    GalerkinBasis A2 = build_basis(L.model, L.gs.omega, L.sd, 8, BasisMode::appendixA, bo);
    CHECK(A2.mu_k < cap);
    CHECK(A2.mu_k > A.mu_k);
}

TEST_CASE("dependence detector fires on a degenerate family") {
    const Lab& L = lab();
    std::vector<Field> cols;
    cols.push_back(L.sd.eigenfields[0]);
    cols.push_back(L.sd.eigenfields[0]);
    CHECK_THROWS_AS((void)orthonormalize_h1(std::move(cols), 1e-8), CertificateError);
}

TEST_CASE("support radius must sit inside the box") {
    const Lab& L = lab();
    BasisOptions bo;
    bo.support_radius = 15.95;
    CHECK_THROWS_AS((void)build_basis(L.model, L.gs.omega, L.sd, 4, BasisMode::eigen, bo),
                    std::invalid_argument);
}

TEST_CASE("degenerate radial family skips the aggregated kernel direction") {
    // engineered operator with a radial kernel mode: the basis must stay
    // orthogonal to it, since that direction is carried separately
    GridSpec g(2, 128, 16.0);
    Field W = make_field(g, [](const std::array<double, 3>& x) {
        return 3.0 - (x[0] * x[0] + x[1] * x[1]);
    });
    Field phi0 = make_field(g, [](const std::array<double, 3>& x) {
        return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1]));
    });
    EigOptions eo;
    eo.m = 6;
    eo.tol = 1e-9;
    SpectralData sd = lowest_eigenpairs_potential(W, eo);
    kernel_spaces(sd, phi0, 1e-6);
    REQUIRE(sd.q_dim == 1);

    GalerkinBasis B = build_basis_potential(W, sd, 4, BasisMode::eigen);
    REQUIRE(B.basis_E.size() == 4);
    CHECK(gram_residual(B.basis_E) <= 1e-10);
    for (const auto& e : B.basis_E) {
        CHECK(std::fabs(h1_inner(e, B.basis_Y[0])) <= 1e-10);
        CHECK(angular_energy_fraction(e) <= 1e-4);
    }
}
