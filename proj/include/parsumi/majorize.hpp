#pragma once

#include "parsumi/wstep.hpp"

namespace parsumi {

/// Row/column weights p, q with (1+δ)p_i q_j > H̄_ij², so that
/// diag(p)·(·)·diag(q) strictly dominates H̄∘H̄∘(·).
struct MajorizationWeights {
    static constexpr double kDefaultInflation = 1e-6;

    Vector row;      // p, inflation already applied
    Vector col;      // q
    double inflation = kDefaultInflation;
};

MajorizationWeights compute_weights(const Matrix& hbar,
                                    double inflation = MajorizationWeights::kDefaultInflation);

/// Best rank-r approximation U_r Σ_r V_rᵀ. When σ_r = σ_{r+1} the first r
/// triplets returned by the SVD are kept; the minimizer is not unique then.
Matrix truncated_svd_rank_r(const Matrix& m, Index r);

/// Q̂(W) = F(W^k) + ⟨G^k, W − W^k⟩ + ½⟨W − W^k, P(W − W^k)Q⟩, the quadratic
/// upper bound of F(·, B̂^k) around W^k.
double majorization_bound(const Matrix& w, const Matrix& w_k, const WStepWorkspace& ws,
                          const MajorizationWeights& wts);

/// Global minimizer of Q̂ over rank ≤ r: P^{-1/2} Π_r(U^k) Q^{-1/2} with
/// U^k = P^{1/2} W^k Q^{1/2} − P^{-1/2} G^k Q^{-1/2}.
Matrix majorized_minimizer(const Matrix& w_k, const WStepWorkspace& ws,
                           const MajorizationWeights& wts, Index r);

}  // namespace parsumi
