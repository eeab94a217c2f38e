#include "parsumi/driver.hpp"

#include "parsumi/estep.hpp"
#include "parsumi/majorize.hpp"
#include "parsumi/metrics.hpp"
#include "parsumi/wstep.hpp"

#include <chrono>
#include <cmath>

namespace parsumi {

double merit_monitor(const IterationState& prev, const IterationState& next,
                     const ObservedMatrix& obs, const SolverConfig& cfg) {
    const Matrix h = obs.weights();
    const double s_term = 0.5 * cfg.beta1 * h.cwiseProduct(next.w - prev.w).squaredNorm();
    const double t_term = 0.5 * cfg.beta2 * (next.e.values() - prev.e.values()).squaredNorm();
    return prev.merit - (next.merit + s_term + t_term);
}

InitTriple zero_init(const ObservedMatrix& obs, const SolverConfig& cfg) {
    const Matrix filled = obs.dense();
    SubspaceBasis n = filled.norm() > 0.0
                          ? SubspaceBasis::leading_left_singular(filled, cfg.rank)
                          : SubspaceBasis::orthonormalize(Matrix::Identity(obs.rows(), cfg.rank));
    return {Matrix::Zero(obs.rows(), obs.cols()),
            SparseCorruption::zero(obs.support().size(), cfg.max_corruptions,
                                   cfg.corruption_norm_bound),
            std::move(n)};
}

namespace {

double robust_sigma(const ObservedMatrix& obs, const Matrix& w, const SparseCorruption& e) {
    const Vector res = obs.values() - project_observed(w, obs.support()) - e.values();
    std::vector<double> mags(static_cast<std::size_t>(res.size()));
    for (Index k = 0; k < res.size(); ++k) mags[k] = std::abs(res[k]);
    return 1.4826 * median(std::move(mags));
}

bool small_change(double change, double reference, double tol) {
    return change < std::max(reference, 1e-12) * tol;
}

}  // namespace

SolveResult parsumi_solve(const ObservedMatrix& obs, const SolverConfig& cfg,
                          const SolveOptions& options) {
    cfg.validate(obs);
    const auto started = std::chrono::steady_clock::now();
    SolveReport report;

    InitTriple init = [&] {
        if (options.init) return *options.init;
        InitResult r = continuation_init(obs, cfg.rank, cfg.max_corruptions,
                                         cfg.corruption_norm_bound, options.apg);
        report.warnings = r.warnings;
        return InitTriple{std::move(r.w0), std::move(r.e0), std::move(r.n0)};
    }();
    if (init.w.rows() != obs.rows() || init.w.cols() != obs.cols() ||
        init.e.values().size() != obs.support().size() || init.n.rows() != obs.rows() ||
        init.n.rank() != cfg.rank)
        throw DimensionError("parsumi_solve: initial point does not match the problem");
    // Re-impose the configured bounds on E^0.
    SparseCorruption e0(init.e.values(), cfg.max_corruptions, cfg.corruption_norm_bound);

    IterationState state{std::move(init.w), std::move(e0), std::move(init.n), 0.0, 0};
    state.merit = merit_f(state.w, state.e, obs);
    report.merit_trace.push_back(state.merit);

    // η schedule of the Huber/E-gate heuristic.
    const bool heuristics = cfg.use_huber && cfg.max_corruptions > 0;
    double eta = 0.0;
    HuberConfig hcfg;
    hcfg.eta_shrink = cfg.eta_shrink;
    hcfg.l_max = std::max(cfg.huber_reweight_iters, 1);
    if (heuristics) {
        if (cfg.eta_init) {
            eta = *cfg.eta_init;
        } else {
            // Data scale, not max|E0|: a gate starting at the largest initial
            // corruption would erase the initializer's E on the first pass.
            std::vector<double> mags(static_cast<std::size_t>(obs.values().size()));
            for (Index k = 0; k < obs.values().size(); ++k) mags[k] = std::abs(obs.values()[k]);
            eta = median(std::move(mags));
            if (!(eta > 0.0)) eta = 1.0;
        }
        double floor = cfg.eta_floor ? *cfg.eta_floor : 3.0 * robust_sigma(obs, state.w, state.e);
        if (!(floor > 0.0)) floor = 1e-6 * std::max(eta, 1e-12);
        hcfg.eta0 = floor;
        report.eta_init = eta;
        report.eta_floor = floor;
    }

    for (int k = 0; k < cfg.outer_max_iter; ++k) {
        const EtaGate gate = heuristics ? eta_gate(eta, hcfg) : EtaGate{false, 0.0, 0.0};

        // 1a. LM candidate.
        const WStepWorkspace ws = build_workspace(obs, state.w, state.e, cfg.beta1);
        const SubspaceBasis lm_start = options.lm_start ? options.lm_start(k, state.n) : state.n;
        LmResult lm = lm_gn_solve(lm_start, ws, cfg);
        report.lm_iterations += lm.iterations;

        // 1b. Majorized candidate.
        const MajorizationWeights wts = compute_weights(ws.hbar);
        Matrix w_qm = majorized_minimizer(state.w, ws, wts, cfg.rank);

        // 2. Keep the better of the two under F(·, B̂^k).
        const double f_lm = wstep_objective(lm.w, ws);
        const double f_qm = wstep_objective(w_qm, ws);
        report.final_majorized_step = (w_qm - state.w).norm();
        Matrix w_next;
        SubspaceBasis n_next = lm.basis;
        const bool safeguard = f_qm < f_lm;
        if (safeguard) {
            ++report.safeguard_activations;
            n_next = SubspaceBasis::leading_left_singular(w_qm, cfg.rank);
            w_next = std::move(w_qm);
        } else {
            w_next = std::move(lm.w);
        }
        report.safeguard_taken.push_back(safeguard);

        if (gate.use_huber) {
            ++report.heuristic_iterations;
            const HuberResult hub = reweighted_huber(n_next, obs, hcfg);
            w_next = n_next.matrix() * hub.c;
        }

        // 3. E-step.
        SparseCorruption e_next = update_corruption(obs, w_next, state.e, cfg);
        if (gate.use_huber)
            e_next = SparseCorruption(gate_small_entries(e_next.values(), gate.e_threshold),
                                      cfg.max_corruptions, cfg.corruption_norm_bound);
        if (heuristics) eta = gate.eta_next;
        // The initial fit overstates the noise when many entries are
        // missing; the estimated floor follows the current fit downwards.
        if (gate.use_huber && !cfg.eta_floor) {
            const double refit = 3.0 * robust_sigma(obs, w_next, e_next);
            if (refit > 0.0 && refit < hcfg.eta0) hcfg.eta0 = refit;
        }

        IterationState next{std::move(w_next), std::move(e_next), std::move(n_next), 0.0, k + 1};
        next.merit = merit_f(next.w, next.e, obs);
        if (!std::isfinite(next.merit)) throw NumericalError("merit became non-finite");

        const double decrease = merit_monitor(state, next, obs, cfg);
        const bool pure = !gate.use_huber;
        report.augmented_decrease.push_back(decrease);
        report.pure_phase.push_back(pure);
        report.merit_trace.push_back(next.merit);
        if (pure && decrease < -1e-10 * std::max(1.0, state.merit))
            throw NumericalError("augmented merit increased by " + std::to_string(-decrease) +
                                 " at iteration " + std::to_string(k + 1));

        const double dw = (next.w - state.w).norm();
        const double de = (next.e.values() - state.e.values()).norm();
        report.final_corruption_step = de;
        const bool done = pure && small_change(dw, state.w.norm(), cfg.outer_tol) &&
                          small_change(de, state.e.norm(), cfg.outer_tol);
        state = std::move(next);
        report.iterations = k + 1;
        if (done) {
            report.converged = true;
            break;
        }
    }

    if (heuristics) report.eta_floor = hcfg.eta0;
    report.rmse_visible = rmse_visible(state.w, obs);
    report.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return {std::move(state.w), std::move(state.e), std::move(state.n), std::move(report)};
}

}  // namespace parsumi
