#pragma once

#include "parsumi/core.hpp"

namespace parsumi {

/// Raised when NᵀD_i²N is singular for some column (possible only at ε = 0).
class DegenerateColumnError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Data of the proximally regularized rank-constrained W subproblem
///
///   min_W ½‖H∘(W − Ŵ + E^k)‖² + (β1/2)‖H∘(W − W^k)‖²   s.t. rank(W) ≤ r,
///
/// rewritten as ½‖H̄∘W − B^k‖² + const. Column i of H̄ is the diagonal of D_i
/// and column i of B^k is the target y_i.
struct WStepWorkspace {
    Matrix hbar;     // H̄
    Matrix target;   // B^k

    Index rows() const { return hbar.rows(); }
    Index cols() const { return hbar.cols(); }

    /// B̂^k = H̄⁻¹∘B^k.
    Matrix scaled_target() const { return target.cwiseQuotient(hbar); }
};

WStepWorkspace build_workspace(const ObservedMatrix& obs, const Matrix& w_k,
                               const SparseCorruption& e_k, double beta1);

/// F(W, B̂^k) = ½‖H̄∘(W − B̂^k)‖²; differs from the W-subproblem objective
/// by a constant.
double wstep_objective(const Matrix& w, const WStepWorkspace& ws);

/// The W-subproblem objective as written, without the completion of squares.
double wstep_objective_direct(const Matrix& w, const ObservedMatrix& obs, const Matrix& w_k,
                              const SparseCorruption& e_k, double beta1);

/// f(N) = ½ Σ_i ‖y_i − Q_i(N) y_i‖² with Q_i(N) the orthogonal projector onto
/// span(D_i N). Depends on N only through its column span, so any full
/// column rank N is accepted.
double subspace_objective(const Matrix& n, const WStepWorkspace& ws);
inline double subspace_objective(const SubspaceBasis& n, const WStepWorkspace& ws) {
    return subspace_objective(n.matrix(), ws);
}

/// Per-column pieces used by the Jacobian formulas.
struct ColumnTerms {
    Matrix gram_inv;   // (NᵀD_i²N)⁻¹, r x r
    Matrix a;          // A_i = D_i N (NᵀD_i²N)⁻¹, m x r
    Vector coeffs;     // C_i = A_iᵀ y_i
    Vector residual;   // r_i = y_i − Q_i y_i
};

ColumnTerms column_terms(const Matrix& n, const WStepWorkspace& ws, Index col);

/// Gauss-Newton quantities with column-major vec(N).
struct GaussNewtonSystem {
    Matrix jtj;
    Vector jtr;
    double objective = 0.0;
};

/// JᵀJ = Σ_i (c_i c_iᵀ) ⊗ (D_i(I−Q_i)D_i) + Tᵀ[(D_i r_i r_iᵀ D_i) ⊗ (A_iᵀA_i)]T
/// and Jᵀr = Σ_i vec(D_i r_i c_iᵀ), accumulated in ascending column order.
GaussNewtonSystem gauss_newton_system(const Matrix& n, const WStepWorkspace& ws);
inline GaussNewtonSystem gauss_newton_system(const SubspaceBasis& n, const WStepWorkspace& ws) {
    return gauss_newton_system(n.matrix(), ws);
}

/// Columns W_i = N C_i = D_i⁻¹ Q_i(N) y_i.
Matrix recover_w(const Matrix& n, const WStepWorkspace& ws);
inline Matrix recover_w(const SubspaceBasis& n, const WStepWorkspace& ws) {
    return recover_w(n.matrix(), ws);
}

struct LmResult {
    SubspaceBasis basis;
    Matrix w;
    int iterations = 0;
    double initial_objective = 0.0;
    double final_objective = 0.0;
    double final_damping = 0.0;
    bool stalled = false;
    /// f(N) after every accepted step, starting with f(N_init).
    std::vector<double> objective_trace;
};

/// Levenberg-Marquardt on f(N): Δx = (JᵀJ + λI)⁻¹Jᵀr, λ ← ρλ until the step
/// strictly decreases f, then λ ← λ/ρ and N is re-orthonormalized.
LmResult lm_gn_solve(const SubspaceBasis& n_init, const WStepWorkspace& ws,
                     const SolverConfig& cfg);

}  // namespace parsumi
