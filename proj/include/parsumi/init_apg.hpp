#pragma once

#include "parsumi/core.hpp"

#include <cmath>
#include <string>

namespace parsumi {

struct ApgConfig {
    double nuclear_weight = 0.2;
    /// γ; non-positive means 1/√max(m,n).
    double l1_weight = 0.0;
    int max_iter = 500;
    double tol = 1e-6;
    double continuation_factor = 0.5;
    int continuation_max_passes = 6;
    double spectral_gap_target = 1e-2;

    double l1_weight_for(Index rows, Index cols) const;
    void validate() const;
};

/// argmin_W ½‖W − M‖² + τ‖W‖_* : U max(Σ − τ, 0) Vᵀ.
Matrix svt(const Matrix& m, double tau);

/// sign(v) max(|v| − τ, 0), elementwise.
Matrix soft_threshold(const Matrix& v, double tau);
Vector soft_threshold(const Vector& v, double tau);

/// f(W,E) + λ‖W‖_* + γ‖E‖₁.
double convex_objective(const ObservedMatrix& obs, const Matrix& w, const Matrix& e,
                        double nuclear_weight, double l1_weight);

struct ApgResult {
    Matrix w;
    Matrix e;   // zero off Ω
    int iterations = 0;
    bool converged = false;
    double objective = 0.0;
};

/// Accelerated proximal gradient for the convex relaxation, started at (0,0)
/// or at a warm start. Returns the best iterate seen.
ApgResult apg_solve(const ObservedMatrix& obs, const ApgConfig& cfg);
ApgResult apg_solve(const ObservedMatrix& obs, const ApgConfig& cfg, const Matrix& w_start,
                    const Matrix& e_start);

/// FISTA step-size recursion t_{k+1} = (1 + √(1 + 4t_k²))/2.
inline double next_momentum(double t) { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t)); }

struct InitResult {
    Matrix w0;            // rank ≤ r
    SparseCorruption e0;
    SubspaceBasis n0;
    Matrix apg_w;         // last accepted APG iterate
    Matrix apg_e;
    double nuclear_weight = 0.0;   // λ of the accepted pass
    int passes = 0;
    bool converged = true;
    std::vector<std::string> warnings;
};

/// λ continuation: passes with λ multiplied by the continuation factor,
/// warm-started, keeping the last pass whose σ_{r+1}/σ_1 stays below the
/// spectral-gap target. W0 is that pass truncated to rank r, E0 its
/// largest min(N0, nnz) entries projected onto the K_E ball, and N0 the
/// leading r left singular vectors of W0.
InitResult continuation_init(const ObservedMatrix& obs, Index rank, Index max_corruptions,
                             double corruption_norm_bound, const ApgConfig& cfg);

/// σ_{r+1}/σ_1 (0 for a zero matrix or r ≥ min(m,n)).
double spectral_gap_ratio(const Matrix& w, Index rank);

}  // namespace parsumi
