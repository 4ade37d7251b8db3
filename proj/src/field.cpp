#include "varred/field.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace varred {

Field::Field(const GridSpec& grid) : grid_(grid), data_(grid.size(), 0.0) {}

Field::Field(const GridSpec& grid, std::vector<double> values) : grid_(grid), data_(std::move(values)) {
    if (data_.size() != grid.size()) throw std::invalid_argument("Field: value count does not match grid");
}

bool Field::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void Field::require_finite(const char* where) const {
    if (!all_finite()) throw std::runtime_error(std::string(where) + ": non-finite field entries");
}

void require_same_grid(const Field& a, const Field& b, const char* where) {
    if (a.grid() != b.grid()) throw std::invalid_argument(std::string(where) + ": grid mismatch");
}

Field& Field::operator+=(const Field& o) {
    require_same_grid(*this, o, "Field::operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

Field& Field::operator-=(const Field& o) {
    require_same_grid(*this, o, "Field::operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

Field& Field::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

void axpy(double s, const Field& x, Field& y) {
    require_same_grid(x, y, "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

Field hadamard(const Field& a, const Field& b) {
    require_same_grid(a, b, "hadamard");
    Field out(a.grid());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

Field make_field(const GridSpec& grid, const std::function<double(const std::array<double, 3>&)>& u) {
    Field out(grid);
    const int M = grid.points();
    std::array<double, 3> x{0.0, 0.0, 0.0};
    if (grid.dim() == 1) {
        for (int i = 0; i < M; ++i) {
            x[0] = grid.coord(i);
            out[static_cast<std::size_t>(i)] = u(x);
        }
    } else if (grid.dim() == 2) {
        std::size_t p = 0;
        for (int i = 0; i < M; ++i) {
            x[0] = grid.coord(i);
            for (int j = 0; j < M; ++j, ++p) {
                x[1] = grid.coord(j);
                out[p] = u(x);
            }
        }
    } else {
        std::size_t p = 0;
        for (int i = 0; i < M; ++i) {
            x[0] = grid.coord(i);
            for (int j = 0; j < M; ++j) {
                x[1] = grid.coord(j);
                for (int l = 0; l < M; ++l, ++p) {
                    x[2] = grid.coord(l);
                    out[p] = u(x);
                }
            }
        }
    }
    return out;
}

double integrate(const Field& u) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i];
    return s * u.grid().cell_volume();
}

double l2_inner(const Field& a, const Field& b) {
    require_same_grid(a, b, "l2_inner");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s * a.grid().cell_volume();
}

double l2_norm(const Field& a) { return std::sqrt(l2_inner(a, a)); }

double sup_norm(const Field& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i]));
    return m;
}

} // namespace varred
