#pragma once

#include <functional>

#include "varred/spectral.hpp"

namespace varred {

using OpFn = std::function<Field(const Field&)>;

struct GmresOptions {
    double tol = 1e-10; // relative H¹ residual
    int max_iter = 400; // total operator applications
    int restart = 60;   // Krylov basis size per cycle
};

/// Restarted GMRES for A x = b in the H¹ inner product. A need not be definite
/// but must map the grid to itself. On entry x is the initial guess; on exit it
/// holds the best iterate. stats.residual is the true relative H¹ residual.
SolveStats gmres_h1(const OpFn& A, const Field& b, Field& x, const GmresOptions& opt = {});

} // namespace varred
