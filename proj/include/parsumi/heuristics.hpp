#pragma once

#include "parsumi/core.hpp"

namespace parsumi {

struct HuberConfig {
    double eta0 = 1e-2;        // Huber knee on Ω; also the floor of the η gate
    double eta_shrink = 0.8;
    int l_max = 3;
    double reweight_floor = 1e-4;
    int inner_apg_iters = 200;
    double inner_tol = 1e-9;

    void validate() const;
};

/// Quadratic-linear Huber loss with knee δ: z²/2 for |z| ≤ δ, δ|z| − δ²/2 beyond.
double huber_value(double z, double knee);

struct HuberResult {
    Matrix c;        // r x n coefficients
    Matrix e_soft;   // zero off Ω
    bool converged = true;
};

/// ½‖H∘(NC − Ŵ + E)‖² + η0 Σ w_ij |E_ij|, with per-entry knee weights w
/// (all ones when empty).
double huber_objective(const SubspaceBasis& n, const ObservedMatrix& obs, const Matrix& c,
                       const Matrix& e, double eta0, const Matrix& knee_weights = Matrix());

/// Column-wise robust fit against the fixed basis N. C is eliminated in
/// closed form and E is found by accelerated proximal gradient with
/// soft-thresholding (knee η0·w_ij on Ω). Returns the best iterate.
HuberResult huber_regression(const SubspaceBasis& n, const ObservedMatrix& obs,
                             const HuberConfig& cfg, const Matrix& knee_weights = Matrix());

/// l_max passes of huber_regression; pass t+1 scales knees by
/// η0/max(|residual of pass t|, δ_w).
HuberResult reweighted_huber(const SubspaceBasis& n, const ObservedMatrix& obs,
                             const HuberConfig& cfg);

struct EtaGate {
    bool use_huber;
    double eta_next;
    /// Minimum magnitude accepted for E's nonzeros this iteration (0 when off).
    double e_threshold;
};

/// Huber step and E gate are active while η > η0; η shrinks geometrically.
EtaGate eta_gate(double eta_current, const HuberConfig& cfg);

/// Zero entries whose magnitude is below `threshold`.
Vector gate_small_entries(const Vector& values, double threshold);

/// Iteration index after which the gate is permanently off.
int eta_gate_horizon(double eta_init, const HuberConfig& cfg);

}  // namespace parsumi
