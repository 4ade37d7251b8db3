#include "varred/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace varred {

namespace {
bool power_of_two(int m) { return m > 0 && (m & (m - 1)) == 0; }
}

GridSpec::GridSpec(int dim, int points, double half_width, double decay_tol)
    : dim_(dim), points_(points), half_width_(half_width), decay_tol_(decay_tol) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("GridSpec: dim must be 1, 2 or 3");
    if (!power_of_two(points) || points < 8)
        throw std::invalid_argument("GridSpec: points must be a power of two >= 8");
    if (!(half_width > 0.0)) throw std::invalid_argument("GridSpec: half_width must be positive");
    if (!(decay_tol > 0.0)) throw std::invalid_argument("GridSpec: decay_tol must be positive");
    // Boundary leakage of unit-rate exponential tails must sit below the decay budget.
    if (std::exp(-half_width) > decay_tol)
        throw std::invalid_argument("GridSpec: half_width too small for the decay tolerance");
    size_ = 1;
    for (int d = 0; d < dim; ++d) size_ *= static_cast<std::size_t>(points);
    cell_volume_ = std::pow(spacing(), dim);
}

std::array<int, 3> GridSpec::unravel(std::size_t flat) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int d = dim_ - 1; d >= 0; --d) {
        idx[d] = static_cast<int>(flat % points_);
        flat /= points_;
    }
    return idx;
}

std::size_t GridSpec::ravel(const std::array<int, 3>& idx) const {
    std::size_t flat = 0;
    for (int d = 0; d < dim_; ++d) flat = flat * points_ + static_cast<std::size_t>(idx[d]);
    return flat;
}

} // namespace varred
