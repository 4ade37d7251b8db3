#pragma once

#include <functional>
#include <vector>

#include "varred/grid.hpp"

namespace varred {

/// Real scalar field sampled on a GridSpec lattice, row-major storage.
class Field {
public:
    explicit Field(const GridSpec& grid);
    Field(const GridSpec& grid, std::vector<double> values);

    const GridSpec& grid() const { return grid_; }
    std::size_t size() const { return data_.size(); }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool all_finite() const;
    /// Throws if any entry is non-finite.
    void require_finite(const char* where) const;

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(double s);

private:
    GridSpec grid_;
    std::vector<double> data_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

/// y += s * x (grids must match).
void axpy(double s, const Field& x, Field& y);
/// Pointwise product a .* b.
Field hadamard(const Field& a, const Field& b);

/// Sample a callable u(x) on the lattice; x passed as a 3-array (unused axes zero).
Field make_field(const GridSpec& grid, const std::function<double(const std::array<double, 3>&)>& u);

/// Lattice quadrature: h^N * sum of values.
double integrate(const Field& u);
/// L² pairing by lattice quadrature.
double l2_inner(const Field& a, const Field& b);
double l2_norm(const Field& a);
double sup_norm(const Field& a);

void require_same_grid(const Field& a, const Field& b, const char* where);

} // namespace varred
