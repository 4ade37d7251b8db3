#include "varred/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace varred {

Nonlinearity::Nonlinearity(std::vector<PowerTerm> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw std::invalid_argument("Nonlinearity: no terms");
    std::sort(terms_.begin(), terms_.end(), [](const PowerTerm& a, const PowerTerm& b) { return a.beta < b.beta; });
    for (std::size_t i = 1; i < terms_.size(); ++i)
        if (terms_[i].beta == terms_[i - 1].beta)
            throw std::invalid_argument("Nonlinearity: duplicate exponent");
    for (const auto& tm : terms_) {
        if (!(tm.a > 0.0)) throw std::invalid_argument("Nonlinearity: coefficients must be positive");
        if (!(tm.beta > 2.0)) throw std::invalid_argument("Nonlinearity: exponents must exceed 2");
    }
}

double Nonlinearity::f(double t) const {
    if (t == 0.0) return 0.0;
    const double at = std::fabs(t);
    double s = 0.0;
    for (const auto& tm : terms_) s += tm.a * std::pow(at, tm.beta - 2.0) * t;
    return s;
}

double Nonlinearity::F(double t) const {
    const double at = std::fabs(t);
    if (at == 0.0) return 0.0;
    double s = 0.0;
    for (const auto& tm : terms_) s += tm.a * std::pow(at, tm.beta) / tm.beta;
    return s;
}

double Nonlinearity::fprime(double t) const {
    const double at = std::fabs(t);
    if (at == 0.0) return 0.0;
    double s = 0.0;
    for (const auto& tm : terms_) s += tm.a * (tm.beta - 1.0) * std::pow(at, tm.beta - 2.0);
    return s;
}

Field Nonlinearity::f_of(const Field& u) const {
    Field out(u.grid());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = f(u[i]);
    return out;
}

Field Nonlinearity::fprime_of(const Field& u) const {
    Field out(u.grid());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = fprime(u[i]);
    return out;
}

double Nonlinearity::F_integral(const Field& u) const {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += F(u[i]);
    return s * u.grid().cell_volume();
}

namespace {

std::vector<Monomial> laplacian_of(const std::vector<Monomial>& q) {
    std::map<std::array<int, 3>, double> acc;
    for (const auto& m : q) {
        for (int d = 0; d < 3; ++d) {
            if (m.alpha[d] < 2) continue;
            auto a = m.alpha;
            a[d] -= 2;
            acc[a] += m.coeff * m.alpha[d] * (m.alpha[d] - 1);
        }
    }
    std::vector<Monomial> out;
    for (const auto& [a, c] : acc)
        if (c != 0.0) out.push_back({a, c});
    return out;
}

double eval_monomials(const std::vector<Monomial>& q, const std::array<double, 3>& x) {
    double s = 0.0;
    for (const auto& m : q) {
        double t = m.coeff;
        for (int d = 0; d < 3; ++d)
            for (int k = 0; k < m.alpha[d]; ++k) t *= x[d];
        s += t;
    }
    return s;
}

/// Smooth bump: 1 at 0, support |t| < 1.
double bump(double t) {
    const double t2 = t * t;
    if (t2 >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - t2));
}

} // namespace

Potential::Potential(int nstar, std::vector<Monomial> q_monomials, Remainder rem, std::array<double, 3> shift)
    : nstar_(nstar), q_(std::move(q_monomials)), rem_(rem), shift_(shift) {
    if (nstar_ < 2 || nstar_ % 2 != 0) throw std::invalid_argument("Potential: n* must be an even integer >= 2");
    if (q_.empty()) throw std::invalid_argument("Potential: empty Q");
    for (const auto& m : q_) {
        int deg = m.alpha[0] + m.alpha[1] + m.alpha[2];
        if (deg != nstar_) throw std::invalid_argument("Potential: monomial degree differs from n*");
    }
    lap_q_ = laplacian_of(q_);
    // Sign of ΔQ: symbolic zero detection plus deterministic sphere sampling.
    if (lap_q_.empty()) {
        sigma_ = 0;
    } else {
        std::mt19937_64 rng(2026);
        std::normal_distribution<double> gauss(0.0, 1.0);
        bool pos = false, neg = false;
        for (int s = 0; s < 256; ++s) {
            std::array<double, 3> x{gauss(rng), gauss(rng), gauss(rng)};
            const double n = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
            for (auto& c : x) c /= n;
            const double v = eval_monomials(lap_q_, x);
            if (v > 1e-12) pos = true;
            if (v < -1e-12) neg = true;
        }
        sigma_ = (pos && neg) ? 0 : (pos ? 1 : (neg ? -1 : 0));
    }
}

Potential Potential::isotropic_quadratic(int dim) {
    std::vector<Monomial> q;
    for (int d = 0; d < dim; ++d) {
        std::array<int, 3> a{0, 0, 0};
        a[d] = 2;
        q.push_back({a, 1.0});
    }
    return Potential(2, std::move(q));
}

Potential Potential::isotropic_quartic(int dim) {
    // |x|^4 = (sum x_i^2)^2 expanded.
    std::vector<Monomial> q;
    for (int d = 0; d < dim; ++d) {
        std::array<int, 3> a{0, 0, 0};
        a[d] = 4;
        q.push_back({a, 1.0});
    }
    for (int d = 0; d < dim; ++d)
        for (int e = d + 1; e < dim; ++e) {
            std::array<int, 3> a{0, 0, 0};
            a[d] = 2;
            a[e] = 2;
            q.push_back({a, 2.0});
        }
    return Potential(4, std::move(q));
}

Potential Potential::with_bump(double coeff, double width) const {
    Potential p = *this;
    p.rem_ = Remainder{coeff, width};
    return p;
}

double Potential::eval_Q(const std::array<double, 3>& x) const { return eval_monomials(q_, x); }

double Potential::eval_laplacian_Q(const std::array<double, 3>& x) const { return eval_monomials(lap_q_, x); }

double Potential::eval(const std::array<double, 3>& x) const {
    const std::array<double, 3> z{x[0] - shift_[0], x[1] - shift_[1], x[2] - shift_[2]};
    double v = eval_monomials(q_, z);
    if (rem_.coeff != 0.0) {
        const double r = std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]);
        v += rem_.coeff * std::pow(r, nstar_ + 2) * bump(r / rem_.width);
    }
    return v;
}

Field Potential::scaled_field(const GridSpec& grid, double eps) const {
    return make_field(grid, [&](const std::array<double, 3>& x) {
        return eval({eps * x[0], eps * x[1], eps * x[2]});
    });
}

Field Potential::q_field_shifted(const GridSpec& grid, const std::array<double, 3>& y) const {
    return make_field(grid, [&](const std::array<double, 3>& x) {
        return eval_Q({x[0] + y[0], x[1] + y[1], x[2] + y[2]});
    });
}

bool HypothesisReport::all_passed() const {
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

std::string HypothesisReport::summary() const {
    std::ostringstream os;
    for (const auto& c : checks)
        os << (c.passed ? "pass " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << "\n";
    return os.str();
}

HypothesisReport validate_nonlinearity(const Nonlinearity& nl, int dim) {
    HypothesisReport rep;
    const double two_star = dim >= 3 ? 2.0 * dim / (dim - 2.0) : std::numeric_limits<double>::infinity();
    {
        bool ok = true;
        std::ostringstream why;
        for (const auto& t : nl.terms()) {
            if (!(t.beta > 2.0)) {
                ok = false;
                why << "exponent " << t.beta << " not > 2; ";
            }
            if (!(t.beta < two_star)) {
                ok = false;
                why << "exponent " << t.beta << " not subcritical; ";
            }
        }
        rep.checks.push_back({"F1 exponent window", ok, why.str()});
    }
    {
        bool ok = true;
        std::ostringstream why;
        for (const auto& t : nl.terms())
            if (!(t.a > 0.0)) {
                ok = false;
                why << "coefficient " << t.a << " not positive; ";
            }
        rep.checks.push_back({"positive coefficients", ok, why.str()});
    }
    {
        // (F2) with mu = beta_1, sampled on both half-lines.
        bool ok = true;
        std::ostringstream why;
        const double mu = nl.mu();
        for (int i = -40; i <= 40; ++i) {
            if (i == 0) continue;
            const double t = 0.12 * i;
            const double lhs = nl.f(t) * t, rhs = mu * nl.F(t);
            if (!(lhs >= rhs - 1e-12 * std::fabs(lhs)) || !(rhs > 0.0)) {
                ok = false;
                why << "witness t=" << t << " f(t)t=" << lhs << " muF=" << rhs;
                break;
            }
        }
        rep.checks.push_back({"F2 Ambrosetti-Rabinowitz", ok, why.str()});
    }
    {
        // (F3): f(t)/|t| strictly increasing on each half-line.
        bool ok = true;
        std::ostringstream why;
        double prev = nl.f(0.05) / 0.05;
        for (int i = 2; i <= 60; ++i) {
            const double t = 0.05 * i;
            const double cur = nl.f(t) / t;
            if (!(cur > prev)) {
                ok = false;
                why << "witness t=" << t;
                break;
            }
            prev = cur;
        }
        rep.checks.push_back({"F3 monotone quotient", ok, why.str()});
    }
    return rep;
}

HypothesisReport validate_potential(const Potential& pot, const GridSpec& grid) {
    HypothesisReport rep;
    std::mt19937_64 rng(4099);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    {
        bool ok = true;
        std::ostringstream why;
        for (int s = 0; s < 64 && ok; ++s) {
            std::array<double, 3> x{uni(rng), uni(rng), uni(rng)};
            for (int d = grid.dim(); d < 3; ++d) x[d] = 0.0;
            const double t = 0.3 + 1.4 * std::fabs(uni(rng));
            const double lhs = pot.eval_Q({t * x[0], t * x[1], t * x[2]});
            const double rhs = std::pow(t, pot.nstar()) * pot.eval_Q(x);
            if (std::fabs(lhs - rhs) > 1e-10 * (1.0 + std::fabs(rhs))) {
                ok = false;
                why << "homogeneity fails at sample " << s;
            }
        }
        rep.checks.push_back({"V1 homogeneity of Q", ok, why.str()});
    }
    {
        const bool ok = pot.sigma() != 0;
        rep.checks.push_back({"V1 one-signed Laplacian of Q", ok,
                              ok ? (pot.sigma() > 0 ? "sigma=+1" : "sigma=-1")
                                 : "Laplacian of Q indefinite or identically zero"});
    }
    {
        // Critical-point normalization: gradient of V vanishes at the origin.
        bool ok = true;
        std::ostringstream why;
        const double s = 1e-4;
        for (int d = 0; d < grid.dim(); ++d) {
            std::array<double, 3> xp{0, 0, 0}, xm{0, 0, 0};
            xp[d] = s;
            xm[d] = -s;
            const double g = (pot.eval(xp) - pot.eval(xm)) / (2 * s);
            if (std::fabs(g) > 1e-6) {
                ok = false;
                why << "dV/dx" << d + 1 << "(0) = " << g << "; ";
            }
        }
        rep.checks.push_back({"V1 critical point at origin", ok, why.str()});
    }
    {
        // (V0) on the computational box (covers V(eps x) for all eps <= 1).
        bool ok = true;
        std::ostringstream why;
        double vmin = 0.0, vmax = 0.0;
        const int S = 17;
        std::array<double, 3> x{0, 0, 0};
        const double L = grid.half_width();
        auto scan = [&](auto&& self, int d) -> void {
            if (d == grid.dim()) {
                const double v = pot.eval(x);
                vmin = std::min(vmin, v);
                vmax = std::max(vmax, v);
                return;
            }
            for (int i = 0; i < S; ++i) {
                x[d] = -L + 2.0 * L * i / (S - 1);
                self(self, d + 1);
            }
        };
        scan(scan, 0);
        if (!(1.0 + vmin > 0.0)) {
            ok = false;
            why << "1 + V reaches " << 1.0 + vmin;
        }
        if (!std::isfinite(vmax)) {
            ok = false;
            why << "V unbounded on box";
        }
        rep.checks.push_back({"V0 coercivity and boundedness on box", ok, why.str()});
    }
    return rep;
}

EnergyModel::EnergyModel(GridSpec grid, Nonlinearity nl, Potential pot)
    : grid_(grid), nl_(std::move(nl)), pot_(std::move(pot)) {}

HypothesisReport EnergyModel::validate() const {
    HypothesisReport rep = validate_nonlinearity(nl_, grid_.dim());
    HypothesisReport rp = validate_potential(pot_, grid_);
    rep.checks.insert(rep.checks.end(), rp.checks.begin(), rp.checks.end());
    return rep;
}

double EnergyModel::energy_I(const Field& u) const {
    return 0.5 * h1_inner(u, u) - nl_.F_integral(u);
}

Field EnergyModel::grad_I(const Field& u) const {
    Field g = u;
    g -= helmholtz_inverse(nl_.f_of(u));
    return g;
}

Field EnergyModel::hess_I_apply(const Field& u, const Field& h) const {
    require_same_grid(u, h, "hess_I_apply");
    Field g = h;
    g -= helmholtz_inverse(hadamard(nl_.fprime_of(u), h));
    return g;
}

const Field& EnergyModel::potential_field(double eps) const {
    auto it = v_cache_.find(eps);
    if (it == v_cache_.end()) {
        Field v = pot_.scaled_field(grid_, eps);
        double vmin = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) vmin = std::min(vmin, v[i]);
        if (!(1.0 + vmin > 0.0))
            throw std::runtime_error("EnergyModel: 1 + V(eps x) loses coercivity on the box");
        it = v_cache_.emplace(eps, std::move(v)).first;
    }
    return it->second;
}

double EnergyModel::energy_E_eps(const Field& u, double eps) const {
    if (eps < 0.0) throw std::invalid_argument("energy_E_eps: eps must be >= 0");
    const Field& V = potential_field(eps);
    double pot_term = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) pot_term += V[i] * u[i] * u[i];
    pot_term *= 0.5 * grid_.cell_volume();
    return 0.5 * h1_inner(u, u) + pot_term - nl_.F_integral(u);
}

Field EnergyModel::grad_E_eps(const Field& u, double eps) const {
    const Field& V = potential_field(eps);
    Field rhs(grid_);
    for (std::size_t i = 0; i < u.size(); ++i) rhs[i] = V[i] * u[i] - nl_.f(u[i]);
    Field g = u;
    g += helmholtz_inverse(rhs);
    return g;
}

Field EnergyModel::hess_E_eps_apply(const Field& u, double eps, const Field& h) const {
    const Field& V = potential_field(eps);
    const Field fp = nl_.fprime_of(u);
    Field rhs(grid_);
    for (std::size_t i = 0; i < h.size(); ++i) rhs[i] = (V[i] - fp[i]) * h[i];
    Field g = h;
    g += helmholtz_inverse(rhs);
    return g;
}

} // namespace varred
