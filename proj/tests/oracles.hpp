#pragma once

// Independent reference implementations shared by the unit and acceptance
// suites. They favour obviousness over speed.

#include "parsumi/core.hpp"
#include "parsumi/wstep.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace oracle {

using namespace parsumi;

struct SparseBest {
    Vector x;
    double objective = std::numeric_limits<double>::infinity();
};

/// min ‖x − b‖² over ‖x‖₀ ≤ N0, ‖x‖ ≤ K_E by enumerating every support of
/// size ≤ N0 and projecting b restricted to it onto the K_E ball.
inline SparseBest brute_force_sparse_step(const Vector& b, Index max_cardinality, double norm_bound) {
    const Index len = b.size();
    SparseBest best;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << len); ++mask) {
        if (static_cast<Index>(std::popcount(mask)) > max_cardinality) continue;
        Vector x = Vector::Zero(len);
        for (Index k = 0; k < len; ++k)
            if (mask >> k & 1U) x[k] = b[k];
        const double nrm = x.norm();
        if (nrm > norm_bound) x *= norm_bound / nrm;
        const double obj = (x - b).squaredNorm();
        if (obj < best.objective) {
            best.objective = obj;
            best.x = std::move(x);
        }
    }
    return best;
}

/// Central-difference gradient of f(N) along every coordinate of vec(N).
inline Vector finite_difference_gradient(const Matrix& n, const WStepWorkspace& ws, double step) {
    Vector g(n.size());
    for (Index k = 0; k < n.size(); ++k) {
        Matrix plus = n, minus = n;
        plus.data()[k] += step;
        minus.data()[k] -= step;
        g[k] = (subspace_objective(plus, ws) - subspace_objective(minus, ws)) / (2.0 * step);
    }
    return g;
}

}  // namespace oracle
