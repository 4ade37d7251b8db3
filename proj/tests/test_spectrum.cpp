#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "varred/errors.hpp"
#include "varred/ground_state.hpp"
#include "varred/spectrum.hpp"

using namespace varred;

namespace {

EnergyModel cubic_model(const GridSpec& g) {
    return EnergyModel(g, Nonlinearity::cubic(), Potential::isotropic_quadratic(g.dim()));
}

GroundStateOptions fast_opts() {
    GroundStateOptions o;
    o.reseed_checks = 0;
    return o;
}

} // namespace

TEST_CASE("Poeschl-Teller well: two bound states at -3 and 0") {
    // W = 6 sech^2 is f'(omega) for the one-dimensional cubic soliton; the
    // operator -d^2/dx^2 + 1 - W has point spectrum {-3, 0} with eigenfunctions
    // sech^2 and sech tanh, then continuum above the box infimum near +1.
    GridSpec g(1, 512, 16.0);
    Field W = make_field(g, [](const std::array<double, 3>& x) {
        const double s = 1.0 / std::cosh(x[0]);
        return 6.0 * s * s;
    });
    EigOptions opt;
    opt.m = 8;
    opt.tol = 1e-9;
    SpectralData sd = lowest_eigenpairs_potential(W, opt);

    REQUIRE(sd.eigenvalues.size() == 8);
    CHECK(std::fabs(sd.eigenvalues[0] + 3.0) <= 1e-6);
    CHECK(std::fabs(sd.eigenvalues[1]) <= 1e-6);
    CHECK(sd.eigenvalues[2] > 0.5);
    CHECK(sd.morse_index == 1);

    for (std::size_t i = 0; i < sd.eigenvalues.size(); ++i)
        CHECK(sd.residuals[i] <= 2e-9 * std::max(1.0, std::fabs(sd.eigenvalues[i])));

    Field ground = make_field(g, [](const std::array<double, 3>& x) {
        const double s = 1.0 / std::cosh(x[0]);
        return s * s;
    });
    Field excited = make_field(g, [](const std::array<double, 3>& x) {
        return std::tanh(x[0]) / std::cosh(x[0]);
    });
    const double o1 = std::fabs(l2_inner(sd.eigenfields[0], ground)) / l2_norm(ground);
    const double o2 = std::fabs(l2_inner(sd.eigenfields[1], excited)) / l2_norm(excited);
    CHECK(o1 >= 1.0 - 1e-8);
    CHECK(o2 >= 1.0 - 1e-8);
}

TEST_CASE("quadratic form of the linearization on the soliton ray") {
    // <L omega, omega>_{L2} = (2 - p) |omega|_{H1}^2 for the pure power p,
    // and the Hessian of I maps omega to -(p - 2) omega plus the resolvent
    // residue, so |Hess I(omega) omega + 2 omega| is tiny for p = 4.
    GridSpec g(1, 512, 16.0);
    EnergyModel model = cubic_model(g);
    Field omega = make_field(g, [](const std::array<double, 3>& x) {
        return std::sqrt(2.0) / std::cosh(x[0]);
    });

    Field W = model.nonlinearity().fprime_of(omega);
    const double quad = l2_inner(schrodinger_apply(W, omega), omega);
    const double h1 = h1_inner(omega, omega);
    CHECK(std::fabs(quad - (2.0 - 4.0) * h1) <= 1e-8 * h1);
    CHECK(std::fabs(h1 - 16.0 / 3.0) <= 1e-6);

    // At the discrete critical point the Hessian sends omega to -2 omega
    // exactly, up to the solver residual; the periodized analytic profile
    // only reaches the box truncation level.
    GroundState gs = solve_ground_state(model, fast_opts());
    Field hw = model.hess_I_apply(gs.omega, gs.omega);
    axpy(2.0, gs.omega, hw);
    CHECK(h1_norm(hw) <= 1e-8 * h1_norm(gs.omega));
}

TEST_CASE("one-dimensional kernel is the translation mode") {
    GridSpec g(1, 512, 16.0);
    EnergyModel model = cubic_model(g);
    GroundState gs = solve_ground_state(model, fast_opts());

    EigOptions opt;
    opt.m = 6;
    SpectralData sd = lowest_eigenpairs(model, gs.omega, opt);

    CHECK(sd.kernel_dim_full == 1);
    CHECK(sd.kernel_dim_radial == 0);
    CHECK(sd.q_dim == 0);
    REQUIRE(sd.Z_basis.size() == 1);
    CHECK(std::fabs(h1_inner(sd.Z_basis[0], sd.Z_basis[0]) - 1.0) <= 1e-10);

    GridSpec g2(1, 1024, 16.0);
    EnergyModel model2 = cubic_model(g2);
    GroundState gs2 = solve_ground_state(model2, upsample(gs.omega, 2), fast_opts());
    SpectralData fine = lowest_eigenpairs(model2, gs2.omega, opt);
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(std::fabs(sd.eigenvalues[i] - fine.eigenvalues[i]) <= 1e-6);
}

TEST_CASE("planar cubic linearization: Morse index one, kernel of translations") {
    GridSpec g(2, 128, 16.0);
    EnergyModel model = cubic_model(g);
    GroundState gs = solve_ground_state(model, fast_opts());

    SpectralData sd = lowest_eigenpairs(model, gs.omega);
    REQUIRE(sd.eigenvalues.size() == 12);

    CHECK(sd.morse_index == 1);
    CHECK(sd.kernel_dim_full == 2);
    CHECK(sd.kernel_dim_radial == 0);
    CHECK(sd.q_dim == 0);
    CHECK(std::fabs(sd.eigenvalues[1]) <= 1e-5);
    CHECK(std::fabs(sd.eigenvalues[2]) <= 1e-5);

    // The negative direction is certified by the Rayleigh quotient of omega.
    Field W = model.nonlinearity().fprime_of(gs.omega);
    const double rayleigh =
        l2_inner(schrodinger_apply(W, gs.omega), gs.omega) / l2_inner(gs.omega, gs.omega);
    CHECK(sd.eigenvalues[0] <= rayleigh + 1e-8);
    CHECK(rayleigh < -3.9);

    // Translation frame: H1-orthonormal.
    REQUIRE(sd.Z_basis.size() == 2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            const double want = i == j ? 1.0 : 0.0;
            CHECK(std::fabs(h1_inner(sd.Z_basis[i], sd.Z_basis[j]) - want) <= 1e-8);
        }

    // Both orthonormal frames returned over the same span.
    REQUIRE(sd.eigenfields_h1.size() == sd.eigenfields.size());
    for (std::size_t i = 0; i < sd.eigenfields.size(); ++i)
        for (std::size_t j = i; j < sd.eigenfields.size(); ++j) {
            const double want = i == j ? 1.0 : 0.0;
            CHECK(std::fabs(l2_inner(sd.eigenfields[i], sd.eigenfields[j]) - want) <= 1e-8);
            CHECK(std::fabs(h1_inner(sd.eigenfields_h1[i], sd.eigenfields_h1[j]) - want) <= 1e-8);
        }
}

TEST_CASE("refinement collapses the kernel defect and freezes the spectrum") {
    // The discrete translation modes annihilate the linearization only up to
    // the spectral truncation of the profile; one refinement collapses that
    // defect by orders of magnitude, and the resolved eigenvalues stop moving.
    GridSpec g(2, 128, 16.0);
    EnergyModel model = cubic_model(g);
    GroundState gs = solve_ground_state(model, fast_opts());
    Field Wc = model.nonlinearity().fprime_of(gs.omega);
    const double defect_coarse = l2_norm(schrodinger_apply(Wc, derivative(gs.omega, 0)));

    GridSpec g2(2, 256, 16.0);
    EnergyModel model2 = cubic_model(g2);
    GroundState gs2 = solve_ground_state(model2, upsample(gs.omega, 2), fast_opts());
    Field Wf = model2.nonlinearity().fprime_of(gs2.omega);
    for (int d = 0; d < 2; ++d) {
        const double defect = l2_norm(schrodinger_apply(Wf, derivative(gs2.omega, d)));
        CHECK(defect <= 1e-6);
        CHECK(defect <= defect_coarse / 100.0);
    }

    GridSpec g3(2, 512, 16.0);
    EnergyModel model3 = cubic_model(g3);
    GroundState gs3 = solve_ground_state(model3, upsample(gs2.omega, 2), fast_opts());

    EigOptions opt;
    opt.m = 6;
    SpectralData mid = lowest_eigenpairs(model2, gs2.omega, opt);
    SpectralData fine = lowest_eigenpairs(model3, gs3.omega, opt);
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(std::fabs(mid.eigenvalues[i] - fine.eigenvalues[i]) <= 1e-6);
    CHECK(mid.kernel_dim_full == 2);
    CHECK(fine.kernel_dim_full == 2);
}

TEST_CASE("symmetry decomposition of kernel vectors") {
    GridSpec gc(2, 128, 16.0);
    EnergyModel mc = cubic_model(gc);
    GroundState gsc = solve_ground_state(mc, fast_opts());

    GridSpec g(2, 256, 16.0);
    EnergyModel model = cubic_model(g);
    GroundState gs = solve_ground_state(model, upsample(gsc.omega, 2), fast_opts());
    EigOptions opt;
    opt.m = 6;
    SpectralData sd = lowest_eigenpairs(model, gs.omega, opt);
    Field W = model.nonlinearity().fprime_of(gs.omega);

    // A pure translation lies in the Z frame.
    Field v = derivative(gs.omega, 0);
    SymmetryReport rep = symmetry_check(v, sd, W);
    CHECK(rep.z_fraction >= 1.0 - 1e-8);
    CHECK(rep.residual_norm <= 1e-6 * h1_norm(v));
    CHECK(rep.radial_after_z);

    // So does a mixed translation.
    Field vm = derivative(gs.omega, 0);
    vm *= 0.6;
    axpy(0.8, derivative(gs.omega, 1), vm);
    SymmetryReport repm = symmetry_check(vm, sd, W);
    CHECK(repm.z_fraction >= 1.0 - 1e-8);
    CHECK(repm.radial_after_z);

    // A vector outside the kernel violates the precondition.
    CHECK_THROWS_AS(symmetry_check(gs.omega, sd, W), std::invalid_argument);
}

TEST_CASE("engineered degenerate linearization: radial kernel mode") {
    // W = 1 + N - r^2 turns -Delta + 1 - W into the shifted oscillator
    // -Delta + r^2 - N with spectrum 0, 2, 2, 4, 4, 4 in the plane and the
    // radial Gaussian exp(-r^2/2) spanning the kernel. Its translation
    // derivatives sit at eigenvalue 2, so Z is disjoint from the kernel.
    GridSpec g(2, 128, 16.0);
    Field W = make_field(g, [](const std::array<double, 3>& x) {
        return 3.0 - (x[0] * x[0] + x[1] * x[1]);
    });
    Field phi0 = make_field(g, [](const std::array<double, 3>& x) {
        return std::exp(-(x[0] * x[0] + x[1] * x[1]) / 2.0);
    });

    EigOptions opt;
    opt.m = 6;
    opt.tol = 1e-9;
    SpectralData sd = lowest_eigenpairs_potential(W, opt);

    const double want[6] = {0.0, 2.0, 2.0, 4.0, 4.0, 4.0};
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(std::fabs(sd.eigenvalues[i] - want[i]) <= 1e-7);
    CHECK(sd.morse_index == 0);

    kernel_spaces(sd, phi0, 1e-6);
    CHECK(sd.kernel_dim_full == 1);
    CHECK(sd.kernel_dim_radial == 1);
    CHECK(sd.q_dim == 1);
    REQUIRE(sd.Y_basis.size() == 1);
    CHECK(std::fabs(h1_inner(sd.Y_basis[0], sd.Y_basis[0]) - 1.0) <= 1e-10);
    for (const auto& z : sd.Z_basis)
        CHECK(std::fabs(h1_inner(sd.Y_basis[0], z)) <= 1e-8);

    SymmetryReport rep = symmetry_check(sd.eigenfields[0], sd, W);
    CHECK(rep.z_fraction <= 1e-6);
    CHECK(rep.radial_after_z);
    CHECK(rep.residual_angular_fraction <= 1e-4);

    // An unseparated cluster is reported, not classified.
    SpectralData copy = sd;
    CHECK_THROWS_AS(kernel_spaces(copy, phi0, 3.0), NonConvergenceError);
}
