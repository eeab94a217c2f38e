#include "parsumi/estep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace parsumi {

Vector estep_target(const ObservedMatrix& obs, const Matrix& w_next, const SparseCorruption& e_k,
                    double beta2) {
    if (!(beta2 > 0.0)) throw ParameterError("beta2 must be positive");
    if (e_k.values().size() != obs.support().size())
        throw DimensionError("estep_target: E^k does not match support");
    const Vector w_on = project_observed(w_next, obs.support());
    return (obs.values() - w_on + beta2 * e_k.values()) / (1.0 + beta2);
}

Vector solve_sparse_step(const Vector& b, Index max_cardinality, double norm_bound) {
    if (max_cardinality < 0) throw ParameterError("N0 must be nonnegative");
    if (!(norm_bound > 0.0)) throw ParameterError("K_E must be positive");

    Vector x = Vector::Zero(b.size());
    const Index keep = std::min(max_cardinality, b.size());
    if (keep == 0) return x;

    std::vector<Index> order(static_cast<std::size_t>(b.size()));
    std::iota(order.begin(), order.end(), Index{0});
    auto larger = [&b](Index a, Index c) {
        const double fa = std::abs(b[a]);
        const double fc = std::abs(b[c]);
        return fa != fc ? fa > fc : a < c;
    };
    std::partial_sort(order.begin(), order.begin() + keep, order.end(), larger);

    double norm_sq = 0.0;
    for (Index k = 0; k < keep; ++k) norm_sq += b[order[k]] * b[order[k]];
    const double norm = std::sqrt(norm_sq);
    const double scale = norm > norm_bound ? norm_bound / norm : 1.0;
    for (Index k = 0; k < keep; ++k) x[order[k]] = scale * b[order[k]];
    return x;
}

double estep_objective(const ObservedMatrix& obs, const Matrix& w_next, const SparseCorruption& e,
                       const SparseCorruption& e_k, double beta2) {
    return merit_f(w_next, e, obs) + 0.5 * beta2 * (e.values() - e_k.values()).squaredNorm();
}

SparseCorruption update_corruption(const ObservedMatrix& obs, const Matrix& w_next,
                                   const SparseCorruption& e_k, const SolverConfig& cfg) {
    const Vector b = estep_target(obs, w_next, e_k, cfg.beta2);
    return SparseCorruption(solve_sparse_step(b, cfg.max_corruptions, cfg.corruption_norm_bound),
                            cfg.max_corruptions, cfg.corruption_norm_bound);
}

}  // namespace parsumi
