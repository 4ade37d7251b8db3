#include "varred/radial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace varred {

void RadialProfile::validate() const {
    if (radii.size() != values.size() || radii.size() < 4)
        throw std::invalid_argument("RadialProfile: need >= 4 matching samples");
    if (radii.front() != 0.0) throw std::invalid_argument("RadialProfile: radii must start at 0");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1])) throw std::invalid_argument("RadialProfile: radii must increase");
}

RadialSpline::RadialSpline(const RadialProfile& p) : r_(p.radii), v_(p.values), m_(p.radii.size(), 0.0) {
    p.validate();
    const std::size_t n = r_.size();
    // Natural spline: tridiagonal solve for interior second derivatives.
    std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hl = r_[i] - r_[i - 1], hr = r_[i + 1] - r_[i];
        a[i] = hl;
        b[i] = 2.0 * (hl + hr);
        c[i] = hr;
        d[i] = 6.0 * ((v_[i + 1] - v_[i]) / hr - (v_[i] - v_[i - 1]) / hl);
    }
    for (std::size_t i = 2; i + 1 < n; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
        m_[i] = (d[i] - c[i] * (i + 2 < n ? m_[i + 1] : 0.0)) / b[i];
        if (i == 1) break;
    }
}

double RadialSpline::operator()(double r) const {
    if (r < 0.0 || r > r_.back() * (1.0 + 1e-12))
        throw std::out_of_range("RadialSpline: radius outside profile coverage");
    r = std::min(r, r_.back());
    auto it = std::upper_bound(r_.begin(), r_.end(), r);
    std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - r_.begin())) - 1;
    i = std::min(i, r_.size() - 2);
    const double h = r_[i + 1] - r_[i];
    const double A = (r_[i + 1] - r) / h, B = (r - r_[i]) / h;
    return A * v_[i] + B * v_[i + 1] + ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
}

Field radial_embed(const RadialProfile& p, const GridSpec& grid) {
    p.validate();
    const double corner = std::sqrt(static_cast<double>(grid.dim())) * grid.half_width();
    if (p.radii.back() < corner * (1.0 - 1e-12))
        throw std::invalid_argument("radial_embed: profile does not cover the box corner radius");
    double peak = 0.0;
    for (double v : p.values) peak = std::max(peak, std::fabs(v));
    for (std::size_t i = 0; i < p.radii.size(); ++i)
        if (p.radii[i] >= grid.half_width() && std::fabs(p.values[i]) > grid.decay_tol() * peak)
            throw std::invalid_argument("radial_embed: profile support exceeds box");
    RadialSpline s(p);
    return make_field(grid, [&](const std::array<double, 3>& x) {
        return s(std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
    });
}

RadialProfile radial_extract(const Field& u, double* anisotropy) {
    const GridSpec& g = u.grid();
    const int o = g.origin_index(), dim = g.dim();
    const int jmax = static_cast<int>(std::floor(0.95 * g.half_width() / g.spacing()));
    RadialProfile p;
    double spread = 0.0;
    auto at = [&](int i, int j, int l) {
        std::array<int, 3> idx{o, o, o};
        idx[0] = i;
        if (dim > 1) idx[1] = j;
        if (dim > 2) idx[2] = l;
        std::array<int, 3> raw{idx[0], dim > 1 ? idx[1] : 0, dim > 2 ? idx[2] : 0};
        return u[g.ravel(raw)];
    };
    for (int j = 0; j <= jmax; ++j) {
        double mn = 0.0, mx = 0.0, sum = 0.0;
        int cnt = 0;
        auto add = [&](double v) {
            if (cnt == 0) mn = mx = v;
            mn = std::min(mn, v);
            mx = std::max(mx, v);
            sum += v;
            ++cnt;
        };
        if (j == 0) {
            add(at(o, o, o));
        } else {
            add(at(o + j, o, o));
            add(at(o - j, o, o));
            if (dim > 1) {
                add(at(o, o + j, o));
                add(at(o, o - j, o));
            }
            if (dim > 2) {
                add(at(o, o, o + j));
                add(at(o, o, o - j));
            }
        }
        p.radii.push_back(j * g.spacing());
        p.values.push_back(sum / cnt);
        spread = std::max(spread, mx - mn);
    }
    if (anisotropy) *anisotropy = spread;
    return p;
}

namespace {

double fraction_1d(const Field& u) {
    const int M = u.grid().points();
    double odd = 0.0, tot = 0.0;
    for (int i = 0; i < M; ++i) {
        const int mi = (M - i) % M;
        const double vo = 0.5 * (u[static_cast<std::size_t>(i)] - u[static_cast<std::size_t>(mi)]);
        odd += vo * vo;
        tot += u[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(i)];
    }
    return odd / tot;
}

/// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (t * p1 - p0) / (t * t - 1.0);
            const double step = p1 / dp;
            t -= step;
            if (std::fabs(step) < 1e-15) break;
        }
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        const double dp = n * (t * p1 - p0) / (t * t - 1.0);
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
}

} // namespace

double angular_energy_fraction(const Field& u, const std::array<double, 3>& center) {
    if (l2_norm(u) == 0.0) throw std::invalid_argument("angular_energy_fraction: zero field");
    Field v = (center[0] != 0.0 || center[1] != 0.0 || center[2] != 0.0)
                  ? translate(u, {-center[0], -center[1], -center[2]})
                  : u;
    const GridSpec& g = v.grid();
    if (g.dim() == 1) return fraction_1d(v);

    const int factor = g.points() <= 256 ? (g.dim() == 2 ? 4 : 2) : 1;
    Field fine = upsample(v, factor);
    const double h = g.spacing();
    const double dr = 0.5 * h;
    const double rmax = 0.95 * g.half_width();
    const int S = static_cast<int>(rmax / dr);

    double mass_radial = 0.0, mass_total = 0.0;
    if (g.dim() == 2) {
        const int T = 192;
        for (int s = 1; s <= S; ++s) {
            const double r = s * dr;
            double m1 = 0.0, m2 = 0.0;
            for (int t = 0; t < T; ++t) {
                const double th = 2.0 * std::numbers::pi * t / T;
                const double val = interpolate(fine, {r * std::cos(th), r * std::sin(th), 0.0});
                m1 += val;
                m2 += val * val;
            }
            m1 /= T;
            m2 /= T;
            mass_radial += m1 * m1 * r;
            mass_total += m2 * r;
        }
    } else {
        const int NMU = 24, NPHI = 48;
        std::vector<double> mu, wmu;
        gauss_legendre(NMU, mu, wmu);
        for (int s = 1; s <= S; ++s) {
            const double r = s * dr;
            double m1 = 0.0, m2 = 0.0;
            for (int a = 0; a < NMU; ++a) {
                const double sth = std::sqrt(std::max(0.0, 1.0 - mu[a] * mu[a]));
                for (int b = 0; b < NPHI; ++b) {
                    const double ph = 2.0 * std::numbers::pi * b / NPHI;
                    const double val = interpolate(
                        fine, {r * sth * std::cos(ph), r * sth * std::sin(ph), r * mu[a]});
                    m1 += wmu[a] * val;
                    m2 += wmu[a] * val * val;
                }
            }
            m1 /= 2.0 * NPHI;
            m2 /= 2.0 * NPHI;
            mass_radial += m1 * m1 * r * r;
            mass_total += m2 * r * r;
        }
    }
    if (mass_total <= 0.0) throw std::runtime_error("angular_energy_fraction: degenerate shell mass");
    return std::clamp(1.0 - mass_radial / mass_total, 0.0, 1.0);
}

RadialProfile shell_means(const Field& u) {
    const GridSpec& g = u.grid();
    RadialProfile p;
    if (g.dim() == 1) {
        const int M = g.points();
        const int jmax = static_cast<int>(std::floor(0.95 * g.half_width() / g.spacing()));
        for (int j = 0; j <= jmax; ++j) {
            const int o = g.origin_index();
            const double a = u[static_cast<std::size_t>(o + j)];
            const double b = u[static_cast<std::size_t>((o - j + M) % M)];
            p.radii.push_back(j * g.spacing());
            p.values.push_back(0.5 * (a + b));
        }
        return p;
    }
    const int factor = g.points() <= 256 ? (g.dim() == 2 ? 4 : 2) : 1;
    Field fine = upsample(u, factor);
    const double dr = 0.5 * g.spacing();
    const int S = static_cast<int>(0.95 * g.half_width() / dr);
    p.radii.push_back(0.0);
    p.values.push_back(interpolate(fine, {0.0, 0.0, 0.0}));
    if (g.dim() == 2) {
        const int T = 192;
        for (int s = 1; s <= S; ++s) {
            const double r = s * dr;
            double m1 = 0.0;
            for (int t = 0; t < T; ++t) {
                const double th = 2.0 * std::numbers::pi * t / T;
                m1 += interpolate(fine, {r * std::cos(th), r * std::sin(th), 0.0});
            }
            p.radii.push_back(r);
            p.values.push_back(m1 / T);
        }
    } else {
        const int NMU = 24, NPHI = 48;
        std::vector<double> mu, wmu;
        gauss_legendre(NMU, mu, wmu);
        for (int s = 1; s <= S; ++s) {
            const double r = s * dr;
            double m1 = 0.0;
            for (int a = 0; a < NMU; ++a) {
                const double sth = std::sqrt(std::max(0.0, 1.0 - mu[a] * mu[a]));
                for (int b = 0; b < NPHI; ++b) {
                    const double ph = 2.0 * std::numbers::pi * b / NPHI;
                    m1 += wmu[a] * interpolate(fine, {r * sth * std::cos(ph), r * sth * std::sin(ph), r * mu[a]});
                }
            }
            p.radii.push_back(r);
            p.values.push_back(m1 / (2.0 * NPHI));
        }
    }
    return p;
}

DecayFit decay_fit(const RadialProfile& p, int dim, double half_width) {
    const double lo = half_width / 3.0, hi = 2.0 * half_width / 3.0;
    std::vector<double> rs, ys;
    for (std::size_t i = 0; i < p.radii.size(); ++i) {
        const double r = p.radii[i];
        if (r < lo || r > hi) continue;
        const double a = std::fabs(p.values[i]);
        if (a < 1e-300) continue;
        rs.push_back(r);
        ys.push_back(std::log(a) + 0.5 * (dim - 1) * std::log(r));
    }
    DecayFit fit;
    if (rs.size() < 8) return fit;
    const std::size_t n = rs.size();
    // Linear fit y = a + b r.
    double sr = 0, sy = 0, srr = 0, sry = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sr += rs[i];
        sy += ys[i];
        srr += rs[i] * rs[i];
        sry += rs[i] * ys[i];
    }
    const double den = n * srr - sr * sr;
    const double b = (n * sry - sr * sy) / den;
    const double a = (sy - b * sr) / n;
    double ss_res = 0, ss_tot = 0;
    const double ybar = sy / n;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ys[i] - (a + b * rs[i]);
        ss_res += e * e;
        ss_tot += (ys[i] - ybar) * (ys[i] - ybar);
    }
    fit.exponent = -b;
    fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    // Quadratic fit for the curvature test (centered coordinates for conditioning).
    const double rc = sr / n;
    double s2 = 0, s3 = 0, s4 = 0, sy0 = 0, sy1 = 0, sy2 = 0, s1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = rs[i] - rc;
        s1 += t;
        s2 += t * t;
        s3 += t * t * t;
        s4 += t * t * t * t;
        sy0 += ys[i];
        sy1 += t * ys[i];
        sy2 += t * t * ys[i];
    }
    // Solve the 3x3 normal equations for (c0, c1, c2) by Cramer.
    const double m[3][3] = {{static_cast<double>(n), s1, s2}, {s1, s2, s3}, {s2, s3, s4}};
    const double rhs[3] = {sy0, sy1, sy2};
    auto det3 = [](const double q[3][3]) {
        return q[0][0] * (q[1][1] * q[2][2] - q[1][2] * q[2][1]) -
               q[0][1] * (q[1][0] * q[2][2] - q[1][2] * q[2][0]) +
               q[0][2] * (q[1][0] * q[2][1] - q[1][1] * q[2][0]);
    };
    const double D = det3(m);
    double mc[3][3];
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) mc[i][j] = m[i][j];
        for (int i = 0; i < 3; ++i) mc[i][c] = rhs[i];
        if (c == 2) fit.curvature = det3(mc) / D;
    }
    // Exponential tails have negligible quadratic trend over the window.
    const double width = hi - lo;
    fit.exponential = std::fabs(fit.curvature) * width <= 0.1 * std::max(std::fabs(b), 1e-12);
    return fit;
}

} // namespace varred
