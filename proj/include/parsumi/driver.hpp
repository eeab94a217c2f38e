#pragma once

#include "parsumi/core.hpp"
#include "parsumi/heuristics.hpp"
#include "parsumi/init_apg.hpp"

#include <functional>
#include <optional>

namespace parsumi {

struct SolveReport {
    int iterations = 0;
    /// L(W^k, E^k) for k = 0..iterations.
    std::vector<double> merit_trace;
    /// merit_monitor value per iteration.
    std::vector<double> augmented_decrease;
    /// True for iterations run without the Huber step / E gate.
    std::vector<bool> pure_phase;
    /// True for iterations where the majorized candidate was taken.
    std::vector<bool> safeguard_taken;
    int safeguard_activations = 0;
    int heuristic_iterations = 0;
    int lm_iterations = 0;
    bool converged = false;
    double rmse_visible = 0.0;
    double wall_time = 0.0;
    /// ‖Ŵ_QM^{k+1} − W^k‖ and ‖E^{k+1} − E^k‖ at the last iteration.
    double final_majorized_step = 0.0;
    double final_corruption_step = 0.0;
    double eta_init = 0.0;
    /// η0 in force when the gate closed. Unless configured, it starts at
    /// 3·1.4826·median|residual| of the initial fit and is re-estimated from
    /// each gated iterate, never increasing.
    double eta_floor = 0.0;
    std::vector<std::string> warnings;
};

struct InitTriple {
    Matrix w;
    SparseCorruption e;
    SubspaceBasis n;
};

struct SolveOptions {
    /// Starting point; the λ-continuation initializer runs when absent.
    std::optional<InitTriple> init;
    ApgConfig apg;
    /// Overrides the basis handed to the LM solver at outer iteration k
    /// (used to exercise the safeguard).
    std::function<SubspaceBasis(int, const SubspaceBasis&)> lm_start;
};

struct SolveResult {
    Matrix w;
    SparseCorruption e;
    SubspaceBasis n;
    SolveReport report;
};

/// L(prev) − [L(next) + ½‖W_next − W_prev‖²_S + ½‖E_next − E_prev‖²_T] with
/// S = β1(H∘H)∘ and T = β2 I. Nonnegative for every pure-phase iteration.
double merit_monitor(const IterationState& prev, const IterationState& next,
                     const ObservedMatrix& obs, const SolverConfig& cfg);

/// Starting point with W = 0, E = 0 and N from the zero-filled data.
InitTriple zero_init(const ObservedMatrix& obs, const SolverConfig& cfg);

/// Proximal alternating minimization with the majorization safeguard. Each
/// outer iteration: LM W-candidate, majorized W-candidate, keep the one with
/// the smaller F(·, B̂^k), optional η-gated Huber refit, closed-form E-step.
SolveResult parsumi_solve(const ObservedMatrix& obs, const SolverConfig& cfg,
                          const SolveOptions& options = {});

}  // namespace parsumi
