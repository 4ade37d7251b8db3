#include "doctest.h"

#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

#include "varred/basis.hpp"
#include "varred/errors.hpp"
#include "varred/ground_state.hpp"
#include "varred/reduction.hpp"
#include "varred/spectrum.hpp"

using namespace varred;

namespace {

struct Lab {
    GridSpec g{2, 128, 16.0};
    EnergyModel model;
    GroundState gs;
    SpectralData sd;
    GalerkinBasis b4, b8, b16;
    Reduction red4, red8, red16;

    static GroundState make_gs(const EnergyModel& m) {
        GroundStateOptions go;
        go.reseed_checks = 0;
        return solve_ground_state(m, go);
    }
    static SpectralData make_sd(const EnergyModel& m, const Field& om) {
        EigOptions eo;
        eo.m = 12;
        return lowest_eigenpairs(m, om, eo);
    }
    static ReductionConfig wide(const Field& om) {
        // k=4 leaves a third of the profile transverse; widen the ball
        ReductionConfig c;
        c.tau = 0.45 * h1_norm(om);
        c.rho = c.tau;
        return c;
    }

    Lab()
        : model(g, Nonlinearity::cubic(), Potential::isotropic_quadratic(2)),
          gs(make_gs(model)),
          sd(make_sd(model, gs.omega)),
          b4(build_basis(model, gs.omega, sd, 4, BasisMode::eigen)),
          b8(build_basis(model, gs.omega, sd, 8, BasisMode::eigen)),
          b16(build_basis(model, gs.omega, sd, 16, BasisMode::eigen)),
          red4(model, b4, gs.omega, wide(gs.omega)),
          red8(model, b8, gs.omega),
          red16(model, b16, gs.omega) {}
};

const Lab& lab() {
    static Lab L;
    return L;
}

Field smooth_noise(const GridSpec& g, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Field r(g);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = gauss(rng);
    return helmholtz_inverse(r);
}

double quotient_max(const PiTrace& tr) {
    double q = 0.0;
    for (double v : tr.quotients) q = std::max(q, v);
    return q;
}

} // namespace

TEST_CASE("inverse bound certifies the transverse Hessian at the anchor") {
    const Lab& L = lab();
    const HessBoundReport& c8 = L.red8.certificate();
    CHECK(c8.invertible);
    CHECK(c8.bound <= 2.2);
    CHECK(c8.sigma_min == doctest::Approx(0.592).epsilon(0.05));

    const HessBoundReport& c16 = L.red16.certificate();
    CHECK(c16.invertible);
    CHECK(c16.bound <= 2.2);

    // the translated-orbit selector coincides with the plain complement here
    HessBoundReport w = L.red8.inverse_bound(L.red8.projected_anchor(), Selector::W_perp);
    CHECK(w.sigma_min == doctest::Approx(c8.sigma_min).epsilon(1e-8));

    HessBoundReport e = L.red8.inverse_bound(L.red8.projected_anchor(), Selector::E_perp);
    CHECK(e.invertible);
    CHECK(e.bound <= 2.2);
    CHECK(e.sigma_min == doctest::Approx(0.591).epsilon(0.05));
}

TEST_CASE("pi at the projected anchor recovers the full critical point") {
    const Lab& L = lab();
    Field v = L.red8.projected_anchor();
    auto [pi, tr] = L.red8.pi(v);

    CHECK(tr.residual <= 1e-10);
    CHECK(tr.iterations <= 15);
    CHECK(quotient_max(tr) <= 0.55);
    // the fixed point at P_k omega is the complement component of omega
    CHECK(std::fabs(tr.pi_norm - h1_norm(L.b8.complement(L.gs.omega))) <= 1e-8);

    Field lift = v;
    lift += pi;
    lift -= L.gs.omega;
    CHECK(h1_norm(lift) <= 1e-8);

    auto [pi2, tr2] = L.red8.pi(v);
    CHECK(tr2.from_cache);
    CHECK(std::memcmp(pi.data(), pi2.data(), pi.size() * sizeof(double)) == 0);
    CHECK(L.red8.cache_size() >= 1);
}

TEST_CASE("contraction quotients stay below the certificate bar") {
    const Lab& L = lab();

    // the iteration's own steps, which are concentrated like the profile
    auto [p4, t4] = L.red4.solve_pi(L.red4.projected_anchor());
    auto [p16, t16] = L.red16.solve_pi(L.red16.projected_anchor());
    CHECK(quotient_max(t4) <= 0.55);
    CHECK(quotient_max(t16) <= 0.55);
    CHECK(quotient_max(t4) == doctest::Approx(0.384).epsilon(0.1));

    // generic pairs at the edge of the certified neighborhood
    std::mt19937_64 rng(2026);
    const double delta = L.red8.config().delta, rho = L.red8.config().rho;
    for (int s = 0; s < 6; ++s) {
        Field dv = L.red8.project(smooth_noise(L.g, rng));
        dv *= 0.9 * delta / h1_norm(dv);
        Field v = L.red8.projected_anchor();
        v += dv;
        Field w1 = L.red8.transverse(smooth_noise(L.g, rng));
        w1 *= 0.9 * rho / h1_norm(w1);
        Field w2 = L.red8.transverse(smooth_noise(L.g, rng));
        w2 *= 0.9 * rho / h1_norm(w2);
        Field num = L.red8.psi(v, w1);
        num -= L.red8.psi(v, w2);
        Field den = w1;
        den -= w2;
        CHECK(h1_norm(num) / h1_norm(den) <= 0.55);
    }
}

TEST_CASE("pi norms shrink as the kept space grows") {
    const Lab& L = lab();
    auto [p4, t4] = L.red4.pi(L.red4.projected_anchor());
    auto [p8, t8] = L.red8.pi(L.red8.projected_anchor());
    auto [p16, t16] = L.red16.pi(L.red16.projected_anchor());

    CHECK(t4.pi_norm == doctest::Approx(1.6348).epsilon(1e-3));
    CHECK(t8.pi_norm == doctest::Approx(0.8189).epsilon(1e-3));
    CHECK(t16.pi_norm == doctest::Approx(0.1572).epsilon(1e-3));
    CHECK(t8.pi_norm < t4.pi_norm);
    CHECK(t16.pi_norm < t8.pi_norm);

    // the tau invariant holds over a sampled neighborhood cloud
    std::mt19937_64 rng(7);
    double sup = t8.pi_norm;
    for (int s = 0; s < 3; ++s) {
        Field dv = L.red8.project(smooth_noise(L.g, rng));
        dv *= 0.8 * L.red8.config().delta / h1_norm(dv);
        Field v = L.red8.projected_anchor();
        v += dv;
        auto [pv, tv] = L.red8.solve_pi(v);
        sup = std::max(sup, tv.pi_norm);
    }
    CHECK(sup < L.red8.config().tau);
}

TEST_CASE("dpi matches finite differences and decays with k") {
    const Lab& L = lab();
    Field v = L.red8.projected_anchor();
    auto [pi, tr] = L.red8.pi(v);
    Field h = L.red8.project(L.gs.omega);
    h *= 1.0 / h1_norm(h);
    Field dp = L.red8.dpi(v, h);

    double err[2];
    const double steps[2] = {1e-3, 1e-4};
    for (int i = 0; i < 2; ++i) {
        Field vs = v;
        axpy(steps[i], h, vs);
        auto [ps, ts] = L.red8.solve_pi(vs, pi);
        Field fd = ps;
        fd -= pi;
        fd *= 1.0 / steps[i];
        fd -= dp;
        err[i] = h1_norm(fd);
    }
    CHECK(err[0] / err[1] == doctest::Approx(10.0).epsilon(0.2));

    auto dpi_norm_at = [&L](const Reduction& red) {
        Field hh = red.project(L.gs.omega);
        hh *= 1.0 / h1_norm(hh);
        return h1_norm(red.dpi(red.projected_anchor(), hh));
    };
    const double d4 = dpi_norm_at(L.red4);
    const double d8 = h1_norm(dp);
    const double d16 = dpi_norm_at(L.red16);
    CHECK(d8 < d4);
    CHECK(d16 < d8);
    CHECK(d16 == doctest::Approx(0.108).epsilon(0.05));
}

TEST_CASE("reduced energy approaches the limit level as k grows") {
    const Lab& L = lab();
    const double c = L.model.energy_I(L.gs.omega);

    auto gap_at = [&](const Reduction& red, const GalerkinBasis& b) {
        const double gap = std::fabs(red.script_I(L.gs.omega) - c);
        // the lift at the projected anchor is exact, so the gap is the pure
        // transverse energy of the anchor
        const double tail = h1_norm(b.complement(L.gs.omega));
        CHECK(std::fabs(gap - 0.5 * tail * tail) <= 1e-8);
        return gap;
    };
    const double g8 = gap_at(L.red8, L.b8);
    const double g16 = gap_at(L.red16, L.b16);
    CHECK(g16 < 0.5 * g8);
    CHECK(g8 == doctest::Approx(0.3353).epsilon(1e-2));
    CHECK(g16 == doctest::Approx(1.236e-2).epsilon(1e-2));

    GalerkinBasis b32 = build_basis(L.model, L.gs.omega, L.sd, 32, BasisMode::eigen);
    Reduction red32(L.model, b32, L.gs.omega);
    const double g32 = gap_at(red32, b32);
    CHECK(g32 < g16);
    CHECK(g32 <= 1e-4);
}

TEST_CASE("script functional and gradient gaps halve from k=8 to k=16") {
    const Lab& L = lab();
    std::mt19937_64 rng(41);
    Field u = L.gs.omega;
    Field du = smooth_noise(L.g, rng);
    du *= 0.08 * h1_norm(L.gs.omega) / h1_norm(du);
    u += du;

    const double iu = L.model.energy_I(u);
    Field gi = L.model.grad_I(u);
    auto gaps = [&](const Reduction& red) {
        const double e = std::fabs(red.script_I(u) - iu);
        Field gg = red.grad_script_I(u);
        gg -= gi;
        return std::pair<double, double>(e, h1_norm(gg));
    };
    auto [e8, gg8] = gaps(L.red8);
    auto [e16, gg16] = gaps(L.red16);
    CHECK(e16 <= 0.5 * e8);
    CHECK(gg16 <= 0.5 * gg8);
    CHECK(e16 <= 2.5e-2);
}

TEST_CASE("reduced critical point lifts to the ground state") {
    const Lab& L = lab();

    Reduction::Critical direct = L.red8.critical_point(L.red8.projected_anchor());
    Field d0 = direct.lift;
    d0 -= L.gs.omega;
    CHECK(h1_norm(d0) <= 1e-6);
    CHECK(direct.reduced_residual <= 1e-8);

    Field seed = L.red8.projected_anchor();
    seed *= 1.05;
    Reduction::Critical crit = L.red8.critical_point(seed);
    Field d1 = crit.lift;
    d1 -= L.gs.omega;
    CHECK(h1_norm(d1) <= 1e-6);
    CHECK(crit.reduced_residual <= 1e-8);
    // criticality transfers: the full-space residual tracks the reduced one
    CHECK(crit.lifted_residual <= 10.0 * crit.reduced_residual + 1e-12);
    Field dd = crit.v;
    dd -= direct.v;
    CHECK(h1_norm(dd) <= 1e-6);
}

TEST_CASE("engineered degenerate operator defeats the k=0 complement") {
    // bounded radial potential whose operator annihilates sech(r); the kernel
    // is radial, so projecting out only the derivative frame leaves it in the
    // complement and the inverse bound must diverge
    GridSpec g(2, 128, 16.0);
    Field W = make_field(g, [](const std::array<double, 3>& x) {
        const double r = std::hypot(x[0], x[1]);
        const double s = 1.0 / std::cosh(r);
        const double t = r < 1e-8 ? 1.0 - r * r / 3.0 : std::tanh(r) / r;
        return 2.0 * s * s + t;
    });
    Field u0 = make_field(g, [](const std::array<double, 3>& x) {
        return 1.0 / std::cosh(std::hypot(x[0], x[1]));
    });
    Field Lu = schrodinger_apply(W, u0);
    REQUIRE(l2_norm(Lu) / l2_norm(u0) <= 1e-5);

    auto hess = [&W](const Field& h) {
        Field out = h;
        out -= helmholtz_inverse(hadamard(W, h));
        return out;
    };
    std::vector<Field> zout;
    for (int d = 0; d < 2; ++d) zout.push_back(derivative(u0, d));
    zout = orthonormalize_h1(std::move(zout), 1e-10);

    HessBoundReport div = projected_hessian_inverse_bound(hess, zout, g);
    CHECK(!div.invertible);
    CHECK(div.bound >= 1e3);
    CHECK(div.iterations <= 50);

    // once the kernel direction joins the projected-out frame the bound is
    // small again
    Field p0 = u0;
    p0 *= 1.0 / h1_norm(p0);
    zout.push_back(p0);
    HessBoundReport rec = projected_hessian_inverse_bound(hess, zout, g);
    CHECK(rec.invertible);
    CHECK(rec.bound <= 2.2);
}

TEST_CASE("linear model collapses the whole construction") {
    const Lab& L = lab();
    ReductionConfig cfg;
    cfg.delta = 1.0;
    cfg.tau = 1.0;
    Field zero(L.g);
    Reduction triv(quadratic_ops(), L.b4, zero, cfg);

    // projected Hessian is the identity: bound exactly one
    CHECK(triv.certificate().bound == doctest::Approx(1.0).epsilon(1e-9));

    std::mt19937_64 rng(11);
    Field v = triv.project(smooth_noise(L.g, rng));
    v *= 0.5 / h1_norm(v);
    auto [pi, tr] = triv.pi(v);
    CHECK(h1_norm(pi) <= 1e-12);
    CHECK(tr.iterations <= 1);

    Field h = triv.project(smooth_noise(L.g, rng));
    CHECK(h1_norm(triv.dpi(v, h)) <= 1e-12);

    const double n = h1_norm(v);
    CHECK(std::fabs(triv.script_I(v) - 0.5 * n * n) <= 1e-12);

    Reduction::Critical c0 = triv.critical_point(v);
    CHECK(h1_norm(c0.v) <= 1e-12);
    CHECK(c0.newton_steps <= 1);
}

TEST_CASE("neighborhood and ball guards reject bad inputs") {
    const Lab& L = lab();

    Field far = L.red8.projected_anchor();
    far *= 2.0;
    CHECK_THROWS_AS((void)L.red8.solve_pi(far), std::invalid_argument);
    CHECK_THROWS_AS((void)L.red8.critical_point(far), std::invalid_argument);

    // a ball smaller than the true correction trips the certificate
    ReductionConfig tight;
    tight.rho = 0.05 * h1_norm(L.gs.omega);
    tight.tau = tight.rho;
    tight.certify = false;
    Reduction redt(L.model, L.b8, L.gs.omega, tight);
    CHECK_THROWS_AS((void)redt.solve_pi(redt.projected_anchor()), CertificateError);
}
