#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "support/oracles.hpp"
#include "varred/io.hpp"
#include "varred/model.hpp"
#include "varred/radial.hpp"
#include "varred/spectral.hpp"

using namespace varred;

namespace {

Field smooth_random(const GridSpec& g, unsigned seed) {
    // Random smooth field: bumps wide enough that spectral content at the
    // lattice Nyquist frequency and at the box boundary is below round-off.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pos(-0.15 * g.half_width(), 0.15 * g.half_width());
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    Field u(g);
    for (int b = 0; b < 5; ++b) {
        const std::array<double, 3> c{pos(rng), pos(rng), pos(rng)};
        const double a = amp(rng), w = 1.2 + 0.6 * std::fabs(amp(rng));
        Field bump = make_field(g, [&](const std::array<double, 3>& x) {
            double r2 = 0.0;
            for (int d = 0; d < g.dim(); ++d) r2 += (x[d] - c[d]) * (x[d] - c[d]);
            return a * std::exp(-r2 / (w * w));
        });
        u += bump;
    }
    return u;
}

} // namespace

TEST_CASE("grid invariants") {
    CHECK_THROWS(GridSpec(4, 64, 16.0));
    CHECK_THROWS(GridSpec(2, 48, 16.0));   // not a power of two
    CHECK_THROWS(GridSpec(2, 4, 16.0));    // too few points
    CHECK_THROWS(GridSpec(2, 64, 8.0));    // e^{-8} above default decay tolerance
    GridSpec g(2, 64, 16.0);
    CHECK(g.spacing() == doctest::Approx(0.5));
    CHECK(g.size() == 4096);
    CHECK(g.coord(g.origin_index()) == doctest::Approx(0.0));
}

TEST_CASE("parseval single mode") {
    // h1_inner of cos(kappa . x) is (1 + |kappa|^2) vol / 2.
    GridSpec g(2, 64, 16.0);
    const double k0 = std::numbers::pi / g.half_width();
    for (int m1 : {1, 3}) {
        for (int m2 : {0, 2}) {
            const double kx = k0 * m1, ky = k0 * m2;
            Field u = make_field(g, [&](const std::array<double, 3>& x) {
                return std::cos(kx * x[0] + ky * x[1]);
            });
            const double vol = std::pow(2.0 * g.half_width(), g.dim());
            const double expected = (1.0 + kx * kx + ky * ky) * vol / 2.0;
            CHECK(h1_inner(u, u) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("gaussian h1 against radial quadrature oracle") {
    GridSpec g(2, 256, 16.0);
    Field u = make_field(g, [](const std::array<double, 3>& x) {
        return std::exp(-(x[0] * x[0] + x[1] * x[1]));
    });
    auto prof = [](double r) { return std::exp(-r * r); };
    auto dprof = [](double r) { return -2.0 * r * std::exp(-r * r); };
    const double oracle = oracles::radial_h1(prof, dprof, 2, 12.0);
    CHECK(std::fabs(h1_inner(u, u) - oracle) <= 1e-10 * oracle);
    // Same closed form: 3 pi / 2.
    CHECK(oracle == doctest::Approx(1.5 * std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("h1 spectral equals physical-space quadrature") {
    GridSpec g(2, 128, 16.0);
    Field a = smooth_random(g, 11), b = smooth_random(g, 12);
    double phys = l2_inner(a, b);
    for (int d = 0; d < g.dim(); ++d) phys += l2_inner(derivative(a, d), derivative(b, d));
    CHECK(h1_inner(a, b) == doctest::Approx(phys).epsilon(1e-8));
}

TEST_CASE("helmholtz free inverse and apply are mutually inverse") {
    GridSpec g(2, 64, 16.0);
    Field u = smooth_random(g, 21);
    Field v = helmholtz_inverse(helmholtz_apply(u));
    Field d = v - u;
    CHECK(h1_norm(d) <= 1e-11 * h1_norm(u));
    // Single mode diagonal identity.
    const double k0 = std::numbers::pi / g.half_width();
    Field c = make_field(g, [&](const std::array<double, 3>& x) { return std::cos(2 * k0 * x[0]); });
    Field ci = helmholtz_inverse(c);
    CHECK(ci[0] * (1.0 + 4.0 * k0 * k0) == doctest::Approx(c[0]).epsilon(1e-12));
}

TEST_CASE("helmholtz inverse with potential: constant shift closed form") {
    GridSpec g(2, 64, 16.0);
    Field h = smooth_random(g, 31);
    const double v0 = 0.7;
    Field V(g);
    for (std::size_t i = 0; i < V.size(); ++i) V[i] = v0;
    Field x = helmholtz_inverse(h, V);
    // (-Delta + 1 + v0)^{-1} via the free symbol shifted by v0.
    Spectrum s = fft_forward(h);
    apply_symbol(s, [&](double k2) { return 1.0 / (1.0 + v0 + k2); });
    Field ref = fft_inverse(s);
    CHECK(h1_norm(x - ref) <= 1e-9 * h1_norm(ref));
}

TEST_CASE("helmholtz inverse with potential: self-adjoint in L2 and rejects bad V") {
    GridSpec g(2, 64, 16.0);
    Field V = make_field(g, [](const std::array<double, 3>& x) {
        return 0.5 * std::exp(-0.02 * (x[0] * x[0] + x[1] * x[1]));
    });
    Field a = smooth_random(g, 41), b = smooth_random(g, 42);
    const double lhs = l2_inner(helmholtz_inverse(a, V), b);
    const double rhs = l2_inner(a, helmholtz_inverse(b, V));
    CHECK(std::fabs(lhs - rhs) <= 1e-9 * std::fabs(lhs));
    Field bad(g);
    for (std::size_t i = 0; i < bad.size(); ++i) bad[i] = -1.5;
    CHECK_THROWS(helmholtz_inverse(a, bad));
}

TEST_CASE("translation is exact and invertible") {
    GridSpec g(2, 128, 16.0);
    Field u = smooth_random(g, 51);
    const std::array<double, 3> y{0.3517, -1.2113, 0.0};
    Field v = translate(translate(u, y), {-y[0], -y[1], 0.0});
    CHECK(h1_norm(v - u) <= 1e-12 * h1_norm(u));
    // Lattice-vector translation equals an index roll.
    Field w = translate(u, {g.spacing() * 3, 0.0, 0.0});
    const int M = g.points();
    double err = 0.0;
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) {
            const int ii = (i - 3 + M) % M;
            err = std::max(err, std::fabs(w[static_cast<std::size_t>(i) * M + j] -
                                          u[static_cast<std::size_t>(ii) * M + j]));
        }
    CHECK(err <= 1e-12 * sup_norm(u));
}

TEST_CASE("translation against analytic shift of a gaussian") {
    GridSpec g(2, 128, 16.0);
    Field u = make_field(g, [](const std::array<double, 3>& x) {
        return std::exp(-(x[0] * x[0] + x[1] * x[1]));
    });
    const std::array<double, 3> y{0.77, 0.191, 0.0};
    Field v = translate(u, y);
    Field ref = make_field(g, [&](const std::array<double, 3>& x) {
        return std::exp(-((x[0] - y[0]) * (x[0] - y[0]) + (x[1] - y[1]) * (x[1] - y[1])));
    });
    CHECK(h1_norm(v - ref) <= 1e-10 * h1_norm(ref));
}

TEST_CASE("derivative matches analytic gradient") {
    GridSpec g(2, 64, 16.0);
    Field u = make_field(g, [](const std::array<double, 3>& x) {
        return std::exp(-(x[0] * x[0] + x[1] * x[1]) / 4.0);
    });
    Field dx = derivative(u, 0);
    Field ref = make_field(g, [](const std::array<double, 3>& x) {
        return -0.5 * x[0] * std::exp(-(x[0] * x[0] + x[1] * x[1]) / 4.0);
    });
    CHECK(l2_norm(dx - ref) <= 1e-9 * l2_norm(ref));
}

TEST_CASE("angular energy fraction") {
    GridSpec g(2, 128, 16.0);
    Field radial = make_field(g, [](const std::array<double, 3>& x) {
        return std::exp(-(x[0] * x[0] + x[1] * x[1]) / 2.0);
    });
    CHECK(angular_energy_fraction(radial) <= 1e-6);

    Field dx = derivative(radial, 0); // pure first harmonic
    CHECK(angular_energy_fraction(dx) >= 0.99);

    // Equal L2 masses of a radial and a first-harmonic part give fraction 1/2.
    Field mixed = radial;
    Field dxs = dx;
    dxs *= l2_norm(radial) / l2_norm(dx);
    mixed += dxs;
    CHECK(angular_energy_fraction(mixed) == doctest::Approx(0.5).epsilon(0.1));
    CHECK(std::fabs(angular_energy_fraction(mixed) - 0.5) <= 0.05);

    Field zero(g);
    CHECK_THROWS(angular_energy_fraction(zero));
}

TEST_CASE("angular energy fraction honors the center argument") {
    GridSpec g(2, 128, 16.0);
    const std::array<double, 3> c{1.25, -0.75, 0.0};
    Field u = make_field(g, [&](const std::array<double, 3>& x) {
        const double r2 = (x[0] - c[0]) * (x[0] - c[0]) + (x[1] - c[1]) * (x[1] - c[1]);
        return std::exp(-r2 / 2.0);
    });
    CHECK(angular_energy_fraction(u, c) <= 1e-6);
    CHECK(angular_energy_fraction(u) > 0.01); // off-center it is visibly non-radial
}

TEST_CASE("angular energy fraction in one dimension") {
    GridSpec g(1, 256, 16.0);
    Field even = make_field(g, [](const std::array<double, 3>& x) { return std::exp(-x[0] * x[0]); });
    CHECK(angular_energy_fraction(even) <= 1e-12);
    Field odd = make_field(g, [](const std::array<double, 3>& x) { return x[0] * std::exp(-x[0] * x[0]); });
    CHECK(angular_energy_fraction(odd) >= 0.999999);
}

TEST_CASE("radial embed and extract round trip") {
    GridSpec g(2, 256, 16.0);
    const double rmax = std::sqrt(2.0) * g.half_width() + 1.0;

    auto build_profile = [&](double dr, auto&& fn) {
        RadialProfile p;
        for (double r = 0.0; r <= rmax; r += dr) {
            p.radii.push_back(r);
            p.values.push_back(fn(r));
        }
        return p;
    };

    // Gaussian: exact smooth radial input.
    RadialProfile gp = build_profile(g.spacing() / 2, [](double r) { return std::exp(-r * r / 4.0); });
    Field gf = radial_embed(gp, g);
    double aniso = 0.0;
    RadialProfile back = radial_extract(gf, &aniso);
    CHECK(aniso <= 1e-12);
    double sup = 0.0;
    RadialSpline ref(gp);
    for (std::size_t i = 0; i < back.radii.size(); ++i)
        sup = std::max(sup, std::fabs(back.values[i] - std::exp(-back.radii[i] * back.radii[i] / 4.0)));
    CHECK(sup <= 1e-6);

    // e^{-r}: the pinned tolerance case.
    RadialProfile ep = build_profile(g.spacing() / 2, [](double r) { return std::exp(-r); });
    Field ef = radial_embed(ep, g);
    RadialProfile eback = radial_extract(ef);
    sup = 0.0;
    for (std::size_t i = 0; i < eback.radii.size(); ++i)
        sup = std::max(sup, std::fabs(eback.values[i] - std::exp(-eback.radii[i])));
    CHECK(sup <= 1e-6);
}

TEST_CASE("embed-extract error drops at least 4x when M doubles") {
    auto roundtrip_error = [](int M) {
        GridSpec g(2, M, 16.0);
        const double rmax = std::sqrt(2.0) * g.half_width() + 1.0;
        RadialProfile p;
        for (double r = 0.0; r <= rmax; r += g.spacing() / 2) {
            p.radii.push_back(r);
            p.values.push_back(1.0 / std::cosh(r));
        }
        Field f = radial_embed(p, g);
        RadialProfile back = radial_extract(f);
        double sup = 0.0;
        for (std::size_t i = 0; i < back.radii.size(); ++i)
            sup = std::max(sup, std::fabs(back.values[i] - 1.0 / std::cosh(back.radii[i])));
        return sup;
    };
    const double e1 = roundtrip_error(64);
    const double e2 = roundtrip_error(128);
    CHECK(e2 <= e1 / 4.0);
}

TEST_CASE("embed rejects non-covering and non-decayed profiles") {
    GridSpec g(2, 64, 16.0);
    RadialProfile shortp;
    for (double r = 0.0; r <= 10.0; r += 0.1) {
        shortp.radii.push_back(r);
        shortp.values.push_back(std::exp(-r));
    }
    CHECK_THROWS(radial_embed(shortp, g)); // does not cover the corner radius

    RadialProfile fat;
    for (double r = 0.0; r <= 24.0; r += 0.1) {
        fat.radii.push_back(r);
        fat.values.push_back(1.0 / (1.0 + r)); // still 0.06 at the boundary
    }
    CHECK_THROWS(radial_embed(fat, g)); // support exceeds box
}

TEST_CASE("decay fit identifies exponential and gaussian tails") {
    GridSpec g(2, 256, 16.0);
    // The planar tail shape r^{-1/2} e^{-r}: compensation makes the fit exact.
    RadialProfile p;
    for (double r = 0.0; r <= 16.0; r += 0.0625) {
        p.radii.push_back(r);
        p.values.push_back(r == 0.0 ? 4.0 : std::exp(-r) / std::sqrt(r));
    }
    DecayFit f = decay_fit(p, 2, g.half_width());
    CHECK(f.exponential);
    CHECK(std::fabs(f.exponent - 1.0) <= 1e-6);

    RadialProfile gp;
    for (double r = 0.0; r <= 16.0; r += 0.0625) {
        gp.radii.push_back(r);
        gp.values.push_back(std::exp(-r * r / 8.0));
    }
    DecayFit fg = decay_fit(gp, 2, g.half_width());
    CHECK_FALSE(fg.exponential);
}

TEST_CASE("field serialization round trip") {
    GridSpec g(2, 32, 16.0, 1e-3);
    Field u = smooth_random(g, 61);
    const std::string path = "/tmp/varred_test_field.bin";
    save_field(u, path);
    Field v = load_field(path, 1e-3);
    CHECK(v.grid() == u.grid());
    double err = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) err = std::max(err, std::fabs(u[i] - v[i]));
    CHECK(err == 0.0);

    // Corrupt the magic and expect a failure.
    FILE* fp = std::fopen(path.c_str(), "r+b");
    REQUIRE(fp);
    std::fputc('X', fp);
    std::fclose(fp);
    CHECK_THROWS(load_field(path, 1e-3));
}

TEST_CASE("profile csv round trip") {
    RadialProfile p;
    for (double r = 0.0; r <= 4.0; r += 0.25) {
        p.radii.push_back(r);
        p.values.push_back(std::exp(-r) * std::cos(r));
    }
    const std::string path = "/tmp/varred_test_profile.csv";
    save_profile(p, path);
    RadialProfile q = load_profile(path);
    REQUIRE(q.radii.size() == p.radii.size());
    for (std::size_t i = 0; i < p.radii.size(); ++i) {
        CHECK(q.radii[i] == p.radii[i]);
        CHECK(q.values[i] == p.values[i]);
    }
}

TEST_CASE("upsample is trigonometric interpolation") {
    GridSpec g(2, 128, 16.0);
    Field u = smooth_random(g, 71);
    Field fine = upsample(u, 2);
    const int M = g.points();
    // Fine lattice contains the coarse one at even indices.
    double err = 0.0;
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j)
            err = std::max(err, std::fabs(fine[static_cast<std::size_t>(2 * i) * (2 * M) + 2 * j] -
                                          u[static_cast<std::size_t>(i) * M + j]));
    CHECK(err <= 1e-11 * sup_norm(u));
}

TEST_CASE("interpolate reproduces smooth fields off-lattice at sixth order") {
    auto max_err = [](int M) {
        GridSpec g(2, M, 16.0);
        Field u = make_field(g, [](const std::array<double, 3>& x) {
            return std::exp(-(x[0] * x[0] + x[1] * x[1]) / 3.0);
        });
        std::mt19937_64 rng(81);
        std::uniform_real_distribution<double> pos(-4.0, 4.0);
        double err = 0.0;
        for (int s = 0; s < 200; ++s) {
            const double x = pos(rng), y = pos(rng);
            err = std::max(err, std::fabs(interpolate(u, {x, y, 0.0}) - std::exp(-(x * x + y * y) / 3.0)));
        }
        return err;
    };
    const double e1 = max_err(128);
    const double e2 = max_err(256);
    CHECK(e1 <= 1e-5);
    CHECK(e2 <= e1 / 32.0); // order six under halving, with sampling slack
}
