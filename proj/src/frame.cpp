#include "varred/frame.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "varred/errors.hpp"

namespace varred {

namespace {

Field zero_like(const GridSpec& g) { return Field(g); }

std::vector<Field> translated_frame(const std::vector<Field>& base,
                                    const std::array<double, 3>& y) {
    std::vector<Field> out;
    out.reserve(base.size());
    const bool moved = y[0] != 0.0 || y[1] != 0.0 || y[2] != 0.0;
    for (const Field& f : base) out.push_back(moved ? translate(f, y) : f);
    return out;
}

} // namespace

TangentFrame::TangentFrame(const EnergyModel& model, const Reduction& red, Field u,
                           const std::array<double, 3>& y, FrameOptions opt)
    : model_(&model),
      red_(&red),
      y_(y),
      u_(std::move(u)),
      u_shifted_(zero_like(model.grid())),
      fprime_shifted_(zero_like(model.grid())) {
    const double scale = std::max(1.0, h1_norm(u_));
    Field off = u_;
    off -= red.project(u_);
    if (h1_norm(off) > opt.xk_tol * scale)
        throw std::invalid_argument("TangentFrame: u has a transverse component");
    if (!red.in_neighborhood(u_))
        throw std::invalid_argument("TangentFrame: u outside the certified neighborhood");

    std::vector<Field> base;
    const GalerkinBasis& gb = red.galerkin();
    base.reserve(gb.basis_E.size() + gb.basis_Y.size() + red.guard_frame().size());
    for (const Field& f : gb.basis_E) base.push_back(f);
    for (const Field& f : gb.basis_Y) base.push_back(f);
    for (const Field& f : red.guard_frame()) base.push_back(f);
    fields_ = translated_frame(base, y_);

    u_shifted_ = translate(u_, y_);
    fprime_shifted_ = model.nonlinearity().fprime_of(u_shifted_);
    factor_gram(opt);
}

TangentFrame::TangentFrame(const EnergyModel* model, std::vector<Field> frame_at_zero, Field u,
                           const std::array<double, 3>& y, FrameOptions opt)
    : model_(model),
      y_(y),
      u_(std::move(u)),
      u_shifted_(zero_like(u_.grid())),
      fprime_shifted_(zero_like(u_.grid())),
      fields_(translated_frame(frame_at_zero, y)) {
    u_shifted_ = translate(u_, y_);
    if (model_ != nullptr)
        fprime_shifted_ = model_->nonlinearity().fprime_of(u_shifted_);
    factor_gram(opt);
}

void TangentFrame::factor_gram(const FrameOptions& opt) {
    const int n = static_cast<int>(fields_.size());
    if (n == 0) throw std::invalid_argument("TangentFrame: empty frame");
    Eigen::MatrixXd G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const double v = h1_inner(fields_[i], fields_[j]);
            G(i, j) = v;
            G(j, i) = v;
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    condition_ = (lo > 0.0) ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(lo > 0.0) || condition_ > opt.cond_limit)
        throw CertificateError("TangentFrame: frame Gram ill-conditioned");
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    gram_chol_.assign(static_cast<std::size_t>(n) * n, 0.0);
    Eigen::MatrixXd Lc = llt.matrixL();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) gram_chol_[static_cast<std::size_t>(i) * n + j] = Lc(i, j);
}

std::vector<double> TangentFrame::tangential_coefficients(const Field& h) const {
    const int n = static_cast<int>(fields_.size());
    std::vector<double> c(n);
    for (int i = 0; i < n; ++i) c[i] = h1_inner(fields_[i], h);
    // forward then back substitution with the stored Cholesky factor
    for (int i = 0; i < n; ++i) {
        double s = c[i];
        for (int j = 0; j < i; ++j) s -= gram_chol_[static_cast<std::size_t>(i) * n + j] * c[j];
        c[i] = s / gram_chol_[static_cast<std::size_t>(i) * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = c[i];
        for (int j = i + 1; j < n; ++j) s -= gram_chol_[static_cast<std::size_t>(j) * n + i] * c[j];
        c[i] = s / gram_chol_[static_cast<std::size_t>(i) * n + i];
    }
    return c;
}

Field TangentFrame::project(const Field& h) const {
    const std::vector<double> c = tangential_coefficients(h);
    Field out = h;
    for (std::size_t i = 0; i < fields_.size(); ++i) axpy(-c[i], fields_[i], out);
    return out;
}

Field apply_L(const TangentFrame& fr, double eps, const Field& w, const SolveOptions& inner) {
    if (fr.model() == nullptr) return w; // vanishing nonlinearity: the identity
    Field rhs = hadamard(fr.fprime_shifted(), w);
    Field g = helmholtz_inverse(rhs, fr.model()->potential_field(eps), inner);
    Field out = w;
    out -= fr.project(g);
    return out;
}

HessBoundReport inverse_bound_L(const TangentFrame& fr, double eps, HessBoundOptions opt) {
    OpFn op;
    if (fr.model() == nullptr) {
        op = [](const Field& h) { return h; };
    } else {
        const EnergyModel* m = fr.model();
        const Field* fp = &fr.fprime_shifted();
        op = [m, fp, eps](const Field& h) {
            Field out = h;
            out -= helmholtz_inverse(hadamard(*fp, h), m->potential_field(eps));
            return out;
        };
    }
    const GridSpec& g = fr.u().grid();
    return projected_hessian_inverse_bound(op, fr.fields(), g, opt);
}

} // namespace varred
