#pragma once

#include "parsumi/core.hpp"
#include "parsumi/driver.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace parsumi {

/// Portable random source: mt19937_64 (bit-exact across standard libraries)
/// with explicit conversions to uniform and normal draws.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform01();   // [0, 1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    double normal(double mean, double sigma);
    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);
    /// `count` distinct values of [0, population), in draw order.
    std::vector<std::uint64_t> sample_without_replacement(std::uint64_t population,
                                                          std::uint64_t count);

private:
    std::mt19937_64 engine_;
};

/// Independent seed for a (cell, trial) pair of a benchmark.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t trial);

struct SyntheticSpec {
    Index m = 40;
    Index n = 60;
    Index r = 4;
    double missing_fraction = 0.0;
    /// Fraction of observed entries that are corrupted.
    double corruption_fraction = 0.0;
    double corruption_lo = -2.0;
    double corruption_hi = 2.0;
    double noise_sigma = 0.0;
    /// Singular values rescaled ∝ 1/α^i (Frobenius norm kept) when α > 1.
    double decay_exponent = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
    Index observed_count() const;
    Index corrupted_count() const;
};

struct SyntheticProblem {
    ObservedMatrix obs;
    Matrix w_true;
    Matrix e_true;   // zero off Ω
    Index corrupted_count = 0;
};

SyntheticProblem generate(const SyntheticSpec& spec);

/// Solver configuration used by the benchmarks: defaults with N0 = 120% of
/// the injected corruption count.
SolverConfig benchmark_config(const SyntheticProblem& problem, Index rank);

enum class SolverKind { Parsumi, ApgOnly };

SolverKind parse_solver_kind(const std::string& name);
std::string to_string(SolverKind kind);

struct TrialResult {
    double rmse = 0.0;
    double rmse_visible = 0.0;
    int iterations = 0;
    int safeguards = 0;
    double seconds = 0.0;
    bool failed = false;
    std::string error;
};

TrialResult run_trial(const SyntheticProblem& problem, SolverKind kind, Index rank);

struct PhaseDiagramSpec {
    Index m = 40;
    Index n = 60;
    Index r = 4;
    double sigma = 0.01;
    std::vector<double> missing = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    std::vector<double> corruption = {0.0, 0.05, 0.1, 0.15, 0.2};
    double corruption_lo = -2.0;
    double corruption_hi = 2.0;
    int trials = 10;
    std::uint64_t seed = 0;
    std::vector<SolverKind> solvers = {SolverKind::Parsumi};
    /// 0 means PARSUMI_THREADS or the hardware concurrency.
    unsigned threads = 0;
};

struct PhaseRow {
    SolverKind solver = SolverKind::Parsumi;
    double missing = 0.0;
    double corruption = 0.0;
    double sigma = 0.0;
    int trial = 0;
    double rmse = 0.0;
    double rmse_visible = 0.0;
    double oracle = 0.0;
    bool success = false;
    int iterations = 0;
    int safeguards = 0;
    double seconds = 0.0;
};

/// Success: RMSE ≤ max(3·oracle, 1e-3).
bool phase_success(double rmse, double oracle);

/// One row per (solver, missing, corruption, trial), in that nesting order.
std::vector<PhaseRow> phase_diagram(const PhaseDiagramSpec& spec);

struct CellSummary {
    SolverKind solver = SolverKind::Parsumi;
    double missing = 0.0;
    double corruption = 0.0;
    double mean_excess = 0.0;     // mean of RMSE − oracle
    double median_excess = 0.0;
    double oracle = 0.0;          // mean oracle over trials
    double success_rate = 0.0;
    double mean_iterations = 0.0;
    int failures = 0;
};

std::vector<CellSummary> summarize_cells(const std::vector<PhaseRow>& rows);

/// Header `missing_frac,corrupt_frac,sigma,trial,rmse,rmse_visible,oracle,
/// success,iters,safeguards,seconds`; a trailing `solver` column is added
/// when rows come from more than one solver. 9 significant digits.
void write_phase_csv(std::ostream& os, const std::vector<PhaseRow>& rows);
void write_summary_csv(std::ostream& os, const std::vector<CellSummary>& cells);

/// Worker count: PARSUMI_THREADS when set, else hardware concurrency.
unsigned worker_count(unsigned requested);

}  // namespace parsumi
