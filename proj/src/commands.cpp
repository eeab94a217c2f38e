#include "parsumi/commands.hpp"

#include "parsumi/datagen.hpp"
#include "parsumi/driver.hpp"
#include "parsumi/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

namespace parsumi {

namespace fs = std::filesystem;

namespace {

struct CompleteArgs {
    std::string input;
    Index rank = 0;
    std::optional<Index> n0;
    std::optional<double> ke;
    std::optional<double> beta1;
    std::optional<double> beta2;
    std::optional<double> tol;
    std::optional<int> max_iter;
    std::optional<double> epsilon;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    bool no_huber = false;
    bool no_init = false;
};

struct SimulateArgs {
    SyntheticSpec spec;
    std::vector<double> range = {-2.0, 2.0};
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
};

struct PhaseArgs {
    PhaseDiagramSpec spec;
    std::vector<double> range = {-2.0, 2.0};
    std::string solvers = "parsumi";
    std::string out;
    std::string summary;
};

void add_config(CLI::App* cmd) {
    // Accepted here so it shows in --help; the file itself is expanded by
    // with_config_file before parsing.
    cmd->add_option("--config", "Flat 'key = value' file; flags on the command line win")
        ->type_name("PATH");
}

bool given_on_command_line(const std::vector<std::string>& args, const CLI::Option& opt) {
    for (const auto& a : args) {
        const std::string name = a.substr(0, a.find('='));
        if (name.size() > 1 && name[0] == '-' && opt.check_name(name)) return true;
    }
    return false;
}

// Turns every key of the --config file that the command line leaves unset
// into `--key value` tokens placed right after the subcommand name, so CLI11
// validates them like typed flags.
std::vector<std::string> with_config_file(const std::vector<std::string>& args, CLI::App& app) {
    if (args.empty()) return args;
    CLI::App* sub = app.get_subcommand_no_throw(args.front());
    if (sub == nullptr) return args;
    std::string path;
    for (std::size_t k = 1; k < args.size(); ++k) {
        if (args[k] == "--config" && k + 1 < args.size()) path = args[k + 1];
        if (args[k].rfind("--config=", 0) == 0) path = args[k].substr(9);
    }
    if (path.empty()) return args;
    if (!fs::is_regular_file(path)) throw FormatError("cannot open config file " + path);

    std::vector<std::string> injected;
    for (const CLI::ConfigItem& item : CLI::ConfigBase().from_file(path)) {
        if (item.name == "++" || item.name == "--") continue;   // section markers
        if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == "default"))
            throw FormatError(path + ": sections are not supported ('" + item.fullname() + "')");
        const std::string flag = "--" + item.name;
        const CLI::Option* opt = sub->get_option_no_throw(flag);
        if (opt == nullptr || item.name == "config")
            throw FormatError(path + ": unknown key '" + item.name + "' for " + args.front());
        if (given_on_command_line(args, *opt)) continue;
        if (opt->get_expected_max() == 0) {
            if (item.inputs.size() != 1 || !(item.inputs[0] == "true" || item.inputs[0] == "false"))
                throw FormatError(path + ": key '" + item.name + "' takes true or false");
            if (item.inputs[0] == "true") injected.push_back(flag);
            continue;
        }
        injected.push_back(flag);
        for (const auto& value : item.inputs) {
            std::istringstream words(value);
            for (std::string w; words >> w;) injected.push_back(w);
        }
    }
    std::vector<std::string> expanded{args.front()};
    expanded.insert(expanded.end(), injected.begin(), injected.end());
    expanded.insert(expanded.end(), args.begin() + 1, args.end());
    return expanded;
}

void make_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw FormatError("cannot create " + dir + ": " + ec.message());
}

int run_complete(const CompleteArgs& a, std::ostream& out) {
    const double eps = a.epsilon.value_or(ObservedMatrix::kDefaultEpsilon);
    const ObservedMatrix obs = read_observation_file(a.input, eps);

    SolverConfig cfg = SolverConfig::defaults_for(obs, a.rank, a.n0);
    if (a.ke) cfg.corruption_norm_bound = *a.ke;
    if (a.beta1) cfg.beta1 = *a.beta1;
    if (a.beta2) cfg.beta2 = *a.beta2;
    if (a.tol) cfg.outer_tol = *a.tol;
    if (a.max_iter) cfg.outer_max_iter = *a.max_iter;
    cfg.use_huber = !a.no_huber;
    cfg.rng_seed = a.seed;
    cfg.validate(obs);

    SolveOptions options;
    if (a.no_init) options.init = zero_init(obs, cfg);
    const SolveResult res = parsumi_solve(obs, cfg, options);

    make_dir(a.out_dir);
    std::ostringstream w_csv;
    write_dense_csv(w_csv, res.w);
    write_text_file(fs::path(a.out_dir) / "W.csv", w_csv.str());
    std::ostringstream e_csv;
    write_triplet_csv(e_csv, res.e.dense(obs.support()));
    write_text_file(fs::path(a.out_dir) / "E.csv", e_csv.str());
    write_text_file(fs::path(a.out_dir) / "report.json", report_json(res.report, cfg));

    out << (res.report.converged ? "converged" : "not converged") << " after "
        << res.report.iterations << " iterations, rmse_visible " << res.report.rmse_visible
        << '\n';
    return res.report.converged ? 0 : 2;
}

int run_simulate(SimulateArgs a, std::ostream& out) {
    if (a.range.size() != 2) throw ParameterError("--corrupt-range takes two values");
    a.spec.corruption_lo = a.range[0];
    a.spec.corruption_hi = a.range[1];
    a.spec.seed = a.seed ? *a.seed : std::random_device{}() * 0x100000001ULL + std::random_device{}();
    const SyntheticProblem p = generate(a.spec);

    make_dir(a.out_dir);
    std::ostringstream obs_txt;
    obs_txt << "# seed " << a.spec.seed << '\n';
    write_observations(obs_txt, p.obs);
    write_text_file(fs::path(a.out_dir) / "observations.txt", obs_txt.str());
    std::ostringstream w_csv;
    write_dense_csv(w_csv, p.w_true);
    write_text_file(fs::path(a.out_dir) / "W_true.csv", w_csv.str());
    std::ostringstream e_csv;
    write_triplet_csv(e_csv, p.e_true);
    write_text_file(fs::path(a.out_dir) / "E_true.csv", e_csv.str());

    out << "seed " << a.spec.seed << '\n';
    return 0;
}

int run_phase(PhaseArgs a, std::ostream& out) {
    if (a.range.size() != 2) throw ParameterError("--corrupt-range takes two values");
    a.spec.corruption_lo = a.range[0];
    a.spec.corruption_hi = a.range[1];
    a.spec.solvers.clear();
    std::stringstream names(a.solvers);
    for (std::string name; std::getline(names, name, ',');) {
        const SolverKind kind = parse_solver_kind(name);
        if (std::find(a.spec.solvers.begin(), a.spec.solvers.end(), kind) == a.spec.solvers.end())
            a.spec.solvers.push_back(kind);
    }
    if (a.spec.solvers.empty()) throw ParameterError("--solvers is empty");

    const auto rows = phase_diagram(a.spec);
    if (a.out.empty()) {
        write_phase_csv(out, rows);
    } else {
        std::ostringstream csv;
        write_phase_csv(csv, rows);
        write_text_file(a.out, csv.str());
    }
    if (!a.summary.empty()) {
        std::ostringstream csv;
        write_summary_csv(csv, summarize_cells(rows));
        write_text_file(a.summary, csv.str());
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Robust low-rank matrix completion by proximal alternating minimization",
                 "parsumi"};
    app.require_subcommand(1);

    CompleteArgs ca;
    auto* complete = app.add_subcommand("complete", "Complete a partially observed matrix");
    add_config(complete);
    complete->add_option("input", ca.input, "Observation file ('m n' header, then 'i j value')")
        ->required();
    complete->add_option("-r,--rank", ca.rank, "Target rank")->required()->check(CLI::PositiveNumber);
    complete->add_option("--n0", ca.n0, "Maximum number of corrupted entries");
    complete->add_option("--ke", ca.ke, "Norm bound on the corruption");
    complete->add_option("--beta1", ca.beta1, "Proximal weight of the W-step");
    complete->add_option("--beta2", ca.beta2, "Proximal weight of the E-step");
    complete->add_option("--tol", ca.tol, "Relative change tolerance of the outer loop");
    complete->add_option("--max-iter", ca.max_iter, "Outer iteration cap");
    complete->add_option("--epsilon", ca.epsilon, "Weight of the unobserved entries");
    complete->add_option("--seed", ca.seed, "Recorded in the report");
    complete->add_option("--out-dir", ca.out_dir, "Directory for W.csv, E.csv and report.json");
    complete->add_flag("--no-huber", ca.no_huber, "Disable the Huber refit and E gate");
    complete->add_flag("--no-init", ca.no_init, "Skip the convex initializer and start from zero");

    SimulateArgs sa;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic instance");
    add_config(simulate);
    simulate->add_option("--m", sa.spec.m, "Rows")->check(CLI::PositiveNumber);
    simulate->add_option("--n", sa.spec.n, "Columns")->check(CLI::PositiveNumber);
    simulate->add_option("-r,--rank", sa.spec.r, "Rank")->check(CLI::PositiveNumber);
    simulate->add_option("--missing", sa.spec.missing_fraction, "Fraction of unobserved entries");
    simulate->add_option("--corrupt", sa.spec.corruption_fraction,
                         "Fraction of observed entries that are corrupted");
    simulate->add_option("--corrupt-range", sa.range, "Corruption value range: lo hi")
        ->expected(2);
    simulate->add_option("--sigma", sa.spec.noise_sigma, "Gaussian noise level");
    simulate->add_option("--alpha", sa.spec.decay_exponent, "Singular value decay 1/alpha^i");
    simulate->add_option("--seed", sa.seed, "Random seed (drawn and echoed when absent)");
    simulate->add_option("--out-dir", sa.out_dir, "Output directory");

    PhaseArgs pa;
    auto* phase = app.add_subcommand("phase-diagram", "Recovery over a missing x corruption grid");
    add_config(phase);
    phase->add_option("--m", pa.spec.m, "Rows")->check(CLI::PositiveNumber);
    phase->add_option("--n", pa.spec.n, "Columns")->check(CLI::PositiveNumber);
    phase->add_option("-r,--rank", pa.spec.r, "Rank")->check(CLI::PositiveNumber);
    phase->add_option("--sigma", pa.spec.sigma, "Gaussian noise level");
    phase->add_option("--missing", pa.spec.missing, "Missing fractions, comma separated")
        ->delimiter(',');
    phase->add_option("--corrupt", pa.spec.corruption, "Corruption fractions, comma separated")
        ->delimiter(',');
    phase->add_option("--corrupt-range", pa.range, "Corruption value range: lo hi")->expected(2);
    phase->add_option("--trials", pa.spec.trials, "Trials per cell")->check(CLI::PositiveNumber);
    phase->add_option("--seed", pa.spec.seed, "Master seed");
    phase->add_option("--solvers", pa.solvers, "parsumi, apg-only or both, comma separated");
    phase->add_option("--threads", pa.spec.threads, "Worker threads (default PARSUMI_THREADS)");
    phase->add_option("--out", pa.out, "CSV path (default stdout)");
    phase->add_option("--summary", pa.summary, "Optional per-cell summary CSV");

    std::vector<std::string> expanded;
    try {
        expanded = with_config_file(args, app);
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return 1;
    }
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*complete) return run_complete(ca, out);
        if (*simulate) return run_simulate(sa, out);
        return run_phase(pa, out);
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return 1;
    }
}

}  // namespace parsumi
