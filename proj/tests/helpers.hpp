#pragma once

// Hand-rolled generators for the property tests. Everything is driven by the
// library's portable Rng so failures reproduce from the printed seed.

#include "parsumi/core.hpp"
#include "parsumi/datagen.hpp"
#include "parsumi/wstep.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace testgen {

using namespace parsumi;

inline Index int_in(Rng& rng, Index lo, Index hi) {
    return lo + static_cast<Index>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

inline Matrix uniform_matrix(Rng& rng, Index rows, Index cols, double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(lo, hi);
    return m;
}

inline Vector uniform_vector(Rng& rng, Index size, double lo = -1.0, double hi = 1.0) {
    Vector v(size);
    for (Index k = 0; k < size; ++k) v[k] = rng.uniform(lo, hi);
    return v;
}

inline Matrix low_rank(Rng& rng, Index rows, Index cols, Index rank) {
    return uniform_matrix(rng, rows, rank) * uniform_matrix(rng, rank, cols);
}

/// Random support with each cell kept with probability `density`; when
/// `per_column_min` > 0 every column keeps at least that many cells.
inline SupportSet random_support(Rng& rng, Index rows, Index cols, double density,
                                 Index per_column_min = 0) {
    std::vector<Cell> cells;
    for (Index j = 0; j < cols; ++j) {
        std::vector<Index> picked;
        for (Index i = 0; i < rows; ++i)
            if (rng.uniform01() < density) picked.push_back(i);
        while (static_cast<Index>(picked.size()) < std::min(per_column_min, rows)) {
            const Index i = int_in(rng, 0, rows - 1);
            if (std::find(picked.begin(), picked.end(), i) == picked.end()) picked.push_back(i);
        }
        for (Index i : picked) cells.push_back({i, j});
    }
    return SupportSet(rows, cols, std::move(cells));
}

inline ObservedMatrix random_observed(Rng& rng, Index rows, Index cols, double density,
                                      double epsilon = ObservedMatrix::kDefaultEpsilon) {
    SupportSet omega = random_support(rng, rows, cols, density, 1);
    Vector values = uniform_vector(rng, omega.size(), -2.0, 2.0);
    return ObservedMatrix(std::move(omega), std::move(values), epsilon);
}

/// Sparse corruption with about `fraction` of Ω nonzero.
inline SparseCorruption random_corruption(Rng& rng, const SupportSet& omega, double fraction,
                                          double norm_bound = 1e6) {
    Vector v = Vector::Zero(omega.size());
    for (Index k = 0; k < omega.size(); ++k)
        if (rng.uniform01() < fraction) v[k] = rng.uniform(-1.0, 1.0);
    Index nnz = 0;
    for (Index k = 0; k < v.size(); ++k) nnz += v[k] != 0.0;
    return SparseCorruption(std::move(v), std::max<Index>(nnz, 1), norm_bound);
}

inline SubspaceBasis random_basis(Rng& rng, Index rows, Index rank) {
    return SubspaceBasis::orthonormalize(uniform_matrix(rng, rows, rank));
}

/// A W-step instance with a random observation pattern, W^k and E^k.
struct WStepCase {
    ObservedMatrix obs;
    Matrix w_k;
    SparseCorruption e_k;
    double beta1;
    WStepWorkspace ws;
    Index rank;
};

inline WStepCase random_wstep_case(Rng& rng, double epsilon = 1e-3) {
    const Index m = int_in(rng, 4, 9);
    const Index n = int_in(rng, 4, 10);
    const Index r = int_in(rng, 1, 3);
    ObservedMatrix obs = random_observed(rng, m, n, 0.6, epsilon);
    Matrix w_k = uniform_matrix(rng, m, n);
    SparseCorruption e_k = random_corruption(rng, obs.support(), 0.2);
    const double beta1 = rng.uniform(0.01, 1.0);
    WStepWorkspace ws = build_workspace(obs, w_k, e_k, beta1);
    return {std::move(obs), std::move(w_k), std::move(e_k), beta1, std::move(ws), r};
}

}  // namespace testgen
