#include "parsumi/datagen.hpp"

#include "parsumi/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <thread>
#include <tuple>

namespace parsumi {

double Rng::uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal(double mean, double sigma) {
    // Box-Muller; 1 − u keeps the logarithm finite.
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    return mean + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) throw ParameterError("Rng::below: empty range");
    // Rejection sampling removes the modulo bias.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % bound;
}

std::vector<std::uint64_t> Rng::sample_without_replacement(std::uint64_t population,
                                                           std::uint64_t count) {
    if (count > population) throw ParameterError("cannot sample more items than the population");
    std::vector<std::uint64_t> pool(population);
    for (std::uint64_t k = 0; k < population; ++k) pool[k] = k;
    for (std::uint64_t k = 0; k < count; ++k) std::swap(pool[k], pool[k + below(population - k)]);
    pool.resize(count);
    return pool;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t trial) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(master) ^ cell) ^ (trial * 0xd6e8feb86659fd93ULL));
}

void SyntheticSpec::validate() const {
    if (m <= 0 || n <= 0 || r <= 0 || r > std::min(m, n))
        throw ParameterError("synthetic spec: need 0 < r <= min(m,n)");
    if (!(missing_fraction >= 0.0 && missing_fraction < 1.0))
        throw ParameterError("synthetic spec: missing fraction must be in [0,1)");
    if (!(corruption_fraction >= 0.0 && corruption_fraction < 1.0))
        throw ParameterError("synthetic spec: corruption fraction must be in [0,1)");
    if (!(corruption_lo <= corruption_hi))
        throw ParameterError("synthetic spec: corruption range is empty");
    if (!(noise_sigma >= 0.0)) throw ParameterError("synthetic spec: sigma must be nonnegative");
    if (!(decay_exponent >= 0.0)) throw ParameterError("synthetic spec: decay exponent must be nonnegative");
    if (observed_count() <= 0) throw ParameterError("synthetic spec: no observed entries");
}

Index SyntheticSpec::observed_count() const {
    return static_cast<Index>(std::llround((1.0 - missing_fraction) * static_cast<double>(m * n)));
}

Index SyntheticSpec::corrupted_count() const {
    return static_cast<Index>(
        std::llround(corruption_fraction * static_cast<double>(observed_count())));
}

SyntheticProblem generate(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    Matrix u(spec.m, spec.r);
    Matrix v(spec.n, spec.r);
    for (Index j = 0; j < spec.r; ++j)
        for (Index i = 0; i < spec.m; ++i) u(i, j) = rng.uniform(-1.0, 1.0);
    for (Index j = 0; j < spec.r; ++j)
        for (Index i = 0; i < spec.n; ++i) v(i, j) = rng.uniform(-1.0, 1.0);
    Matrix w = u * v.transpose();

    if (spec.decay_exponent > 1.0) {
        Eigen::JacobiSVD<Matrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
        Vector s(spec.r);
        for (Index i = 0; i < spec.r; ++i) s[i] = std::pow(spec.decay_exponent, -double(i + 1));
        s *= w.norm() / s.norm();
        w = svd.matrixU().leftCols(spec.r) * s.asDiagonal() *
            svd.matrixV().leftCols(spec.r).transpose();
    }

    const Index total = spec.m * spec.n;
    const auto picked = rng.sample_without_replacement(static_cast<std::uint64_t>(total),
                                                       static_cast<std::uint64_t>(spec.observed_count()));
    std::vector<Cell> cells;
    cells.reserve(picked.size());
    for (auto idx : picked)
        cells.push_back({static_cast<Index>(idx) % spec.m, static_cast<Index>(idx) / spec.m});
    SupportSet support(spec.m, spec.n, std::move(cells));

    // Corrupted cells are chosen among canonical positions of Ω.
    const Index n_corrupt = spec.corrupted_count();
    const auto corrupt = rng.sample_without_replacement(static_cast<std::uint64_t>(support.size()),
                                                        static_cast<std::uint64_t>(n_corrupt));
    Vector e_vals = Vector::Zero(support.size());
    for (auto k : corrupt) e_vals[static_cast<Index>(k)] = rng.uniform(spec.corruption_lo, spec.corruption_hi);

    Vector values = project_observed(w, support) + e_vals;
    if (spec.noise_sigma > 0.0)
        for (Index k = 0; k < values.size(); ++k) values[k] += rng.normal(0.0, spec.noise_sigma);

    Matrix e_true = embed_observed(e_vals, support);
    return {ObservedMatrix(std::move(support), std::move(values)), std::move(w), std::move(e_true),
            n_corrupt};
}

SolverConfig benchmark_config(const SyntheticProblem& problem, Index rank) {
    const auto n0 = static_cast<Index>(std::ceil(1.2 * static_cast<double>(problem.corrupted_count)));
    return SolverConfig::defaults_for(problem.obs, rank, n0);
}

SolverKind parse_solver_kind(const std::string& name) {
    if (name == "parsumi") return SolverKind::Parsumi;
    if (name == "apg-only") return SolverKind::ApgOnly;
    throw ParameterError("unknown solver '" + name + "' (expected parsumi or apg-only)");
}

std::string to_string(SolverKind kind) {
    return kind == SolverKind::Parsumi ? "parsumi" : "apg-only";
}

TrialResult run_trial(const SyntheticProblem& problem, SolverKind kind, Index rank) {
    TrialResult out;
    const auto started = std::chrono::steady_clock::now();
    try {
        const SolverConfig cfg = benchmark_config(problem, rank);
        Matrix w;
        if (kind == SolverKind::Parsumi) {
            SolveResult res = parsumi_solve(problem.obs, cfg);
            out.iterations = res.report.iterations;
            out.safeguards = res.report.safeguard_activations;
            w = std::move(res.w);
        } else {
            InitResult init = continuation_init(problem.obs, rank, cfg.max_corruptions,
                                                cfg.corruption_norm_bound, ApgConfig{});
            out.iterations = init.passes;
            w = std::move(init.w0);
        }
        out.rmse = rmse(w, problem.w_true);
        out.rmse_visible = rmse_visible(w, problem.obs);
    } catch (const std::exception& ex) {
        out.failed = true;
        out.error = ex.what();
        out.rmse = std::numeric_limits<double>::quiet_NaN();
        out.rmse_visible = std::numeric_limits<double>::quiet_NaN();
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return out;
}

bool phase_success(double rmse_value, double oracle) {
    return std::isfinite(rmse_value) && rmse_value <= std::max(3.0 * oracle, 1e-3);
}

unsigned worker_count(unsigned requested) {
    unsigned n = requested;
    if (n == 0) {
        if (const char* env = std::getenv("PARSUMI_THREADS")) {
            const long v = std::strtol(env, nullptr, 10);
            if (v > 0) n = static_cast<unsigned>(v);
        }
    }
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

std::vector<PhaseRow> phase_diagram(const PhaseDiagramSpec& spec) {
    if (spec.trials <= 0) throw ParameterError("phase diagram needs at least one trial");
    std::vector<PhaseRow> rows;
    for (auto solver : spec.solvers) {
        for (std::size_t a = 0; a < spec.missing.size(); ++a) {
            for (std::size_t b = 0; b < spec.corruption.size(); ++b) {
                for (int t = 0; t < spec.trials; ++t) {
                    PhaseRow row;
                    row.solver = solver;
                    row.missing = spec.missing[a];
                    row.corruption = spec.corruption[b];
                    row.sigma = spec.sigma;
                    row.trial = t;
                    rows.push_back(row);
                }
            }
        }
    }

    // Seeds depend on the grid position only, so every solver sees the same
    // instances and the result does not depend on scheduling.
    auto run_row = [&spec](PhaseRow& row, std::size_t cell) {
        SyntheticSpec s;
        s.m = spec.m;
        s.n = spec.n;
        s.r = spec.r;
        s.missing_fraction = row.missing;
        s.corruption_fraction = row.corruption;
        s.corruption_lo = spec.corruption_lo;
        s.corruption_hi = spec.corruption_hi;
        s.noise_sigma = spec.sigma;
        s.seed = derive_seed(spec.seed, cell, static_cast<std::uint64_t>(row.trial));
        const SyntheticProblem problem = generate(s);
        row.oracle = oracle_rmse(s.m, s.n, s.r, problem.obs.support().size(),
                                 problem.corrupted_count, s.noise_sigma);
        const TrialResult res = run_trial(problem, row.solver, spec.r);
        row.rmse = res.rmse;
        row.rmse_visible = res.rmse_visible;
        row.success = !res.failed && phase_success(res.rmse, row.oracle);
        row.iterations = res.iterations;
        row.safeguards = res.safeguards;
        row.seconds = res.seconds;
    };

    const std::size_t cells_per_solver = spec.missing.size() * spec.corruption.size();
    const auto trials = static_cast<std::size_t>(spec.trials);
    const unsigned workers =
        std::min<unsigned>(worker_count(spec.threads), static_cast<unsigned>(rows.size()));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < rows.size(); k = next++)
            run_row(rows[k], (k / trials) % cells_per_solver);
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    return rows;
}

std::vector<CellSummary> summarize_cells(const std::vector<PhaseRow>& rows) {
    std::vector<CellSummary> out;
    std::map<std::tuple<int, double, double>, std::vector<const PhaseRow*>> groups;
    std::vector<std::tuple<int, double, double>> order;
    for (const auto& row : rows) {
        auto key = std::make_tuple(static_cast<int>(row.solver), row.missing, row.corruption);
        if (groups.find(key) == groups.end()) order.push_back(key);
        groups[key].push_back(&row);
    }
    for (const auto& key : order) {
        const auto& members = groups[key];
        CellSummary c;
        c.solver = static_cast<SolverKind>(std::get<0>(key));
        c.missing = std::get<1>(key);
        c.corruption = std::get<2>(key);
        std::vector<double> excess;
        double iters = 0.0;
        double oracle = 0.0;
        int successes = 0;
        for (const auto* row : members) {
            oracle += row->oracle;
            iters += row->iterations;
            successes += row->success;
            if (std::isfinite(row->rmse))
                excess.push_back(row->rmse - row->oracle);
            else
                ++c.failures;
        }
        const double count = static_cast<double>(members.size());
        c.oracle = oracle / count;
        c.mean_iterations = iters / count;
        c.success_rate = successes / count;
        if (!excess.empty()) {
            double sum = 0.0;
            for (double x : excess) sum += x;
            c.mean_excess = sum / static_cast<double>(excess.size());
            c.median_excess = median(excess);
        } else {
            c.mean_excess = c.median_excess = std::numeric_limits<double>::quiet_NaN();
        }
        out.push_back(c);
    }
    return out;
}

void write_phase_csv(std::ostream& os, const std::vector<PhaseRow>& rows) {
    bool tagged = false;
    for (const auto& row : rows) tagged = tagged || row.solver != rows.front().solver;
    os << "missing_frac,corrupt_frac,sigma,trial,rmse,rmse_visible,oracle,success,iters,safeguards,seconds";
    if (tagged) os << ",solver";
    os << '\n';
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << std::setprecision(9);
    for (const auto& row : rows) {
        os << row.missing << ',' << row.corruption << ',' << row.sigma << ',' << row.trial << ','
           << row.rmse << ',' << row.rmse_visible << ',' << row.oracle << ',' << (row.success ? 1 : 0)
           << ',' << row.iterations << ',' << row.safeguards << ',' << row.seconds;
        if (tagged) os << ',' << to_string(row.solver);
        os << '\n';
    }
    os.flags(flags);
    os.precision(prec);
}

void write_summary_csv(std::ostream& os, const std::vector<CellSummary>& cells) {
    os << "solver,missing_frac,corrupt_frac,oracle,mean_excess,median_excess,success_rate,mean_iters,failures\n";
    const auto prec = os.precision();
    os << std::setprecision(9);
    for (const auto& c : cells)
        os << to_string(c.solver) << ',' << c.missing << ',' << c.corruption << ',' << c.oracle << ','
           << c.mean_excess << ',' << c.median_excess << ',' << c.success_rate << ','
           << c.mean_iterations << ',' << c.failures << '\n';
    os.precision(prec);
}

}  // namespace parsumi
