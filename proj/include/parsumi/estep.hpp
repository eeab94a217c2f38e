#pragma once

#include "parsumi/core.hpp"

namespace parsumi {

/// b = P_Ω(Ŵ − W^{k+1} + β2 E^k)/(1 + β2), canonical Ω order.
Vector estep_target(const ObservedMatrix& obs, const Matrix& w_next, const SparseCorruption& e_k,
                    double beta2);

/// Closed-form minimizer of ‖x − b‖² s.t. ‖x‖₀ ≤ N0, ‖x‖ ≤ K_E.
///
/// Keeps the N0 largest |b_i| (ties broken by lowest index) and rescales
/// them onto the K_E ball when ‖b_I‖ > K_E.
Vector solve_sparse_step(const Vector& b, Index max_cardinality, double norm_bound);

/// ½‖H∘(W^{k+1} − Ŵ + E)‖² + (β2/2)‖E − E^k‖².
double estep_objective(const ObservedMatrix& obs, const Matrix& w_next, const SparseCorruption& e,
                       const SparseCorruption& e_k, double beta2);

/// E^{k+1} = P*_Ω(x), the global minimizer of the E subproblem.
SparseCorruption update_corruption(const ObservedMatrix& obs, const Matrix& w_next,
                                   const SparseCorruption& e_k, const SolverConfig& cfg);

}  // namespace parsumi
