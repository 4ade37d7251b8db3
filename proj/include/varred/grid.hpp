#pragma once

#include <array>
#include <cstddef>

namespace varred {

/// Uniform periodic lattice on [-L, L)^N, M points per axis, spacing h = 2L/M.
class GridSpec {
public:
    GridSpec(int dim, int points, double half_width, double decay_tol = 1e-6);

    int dim() const { return dim_; }
    int points() const { return points_; }
    double half_width() const { return half_width_; }
    double decay_tol() const { return decay_tol_; }
    double spacing() const { return 2.0 * half_width_ / points_; }
    std::size_t size() const { return size_; }
    /// Quadrature weight of one cell, h^N.
    double cell_volume() const { return cell_volume_; }
    /// Coordinate of lattice index i along one axis, in [-L, L).
    double coord(int i) const { return -half_width_ + spacing() * i; }
    /// Lattice index of the origin along one axis (x = 0 is always a lattice point).
    int origin_index() const { return points_ / 2; }

    /// Decompose a flat row-major index into per-axis indices.
    std::array<int, 3> unravel(std::size_t flat) const;
    std::size_t ravel(const std::array<int, 3>& idx) const;

    bool operator==(const GridSpec& o) const {
        return dim_ == o.dim_ && points_ == o.points_ && half_width_ == o.half_width_;
    }
    bool operator!=(const GridSpec& o) const { return !(*this == o); }

private:
    int dim_;
    int points_;
    double half_width_;
    double decay_tol_;
    std::size_t size_;
    double cell_volume_;
};

} // namespace varred
