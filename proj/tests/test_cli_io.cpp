#include "helpers.hpp"

#include "parsumi/commands.hpp"
#include "parsumi/datagen.hpp"
#include "parsumi/driver.hpp"
#include "parsumi/io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace parsumi;
using namespace testgen;
namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory, removed on destruction.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("parsumi_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

Matrix read_dense(const std::string& path) {
    std::ifstream in(path);
    return read_dense_csv(in, path);
}

/// Drops the `seconds` column (index 10) from each CSV line.
std::string without_seconds(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, result;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
        if (cells.size() > 10) cells.erase(cells.begin() + 10);
        for (std::size_t k = 0; k < cells.size(); ++k) result += (k ? "," : "") + cells[k];
        result += '\n';
    }
    return result;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
        if (!l.empty()) out.push_back(l);
    return out;
}

}  // namespace

TEST_CASE("complete on a 2x2 file with three observations") {
    TempDir dir("tiny");
    spit(dir / "obs.txt", "2 2\n0 0 1.0\n0 1 2.0\n1 0 3.0\n");
    const CliRun run = cli({"complete", dir / "obs.txt", "--rank", "1", "--out-dir", dir / "out"});
    CHECK(run.code == 0);
    CHECK(run.out.find("converged after") == 0);
    const Matrix w = read_dense(dir / "out/W.csv");
    REQUIRE(w.rows() == 2);
    REQUIRE(w.cols() == 2);
    Eigen::JacobiSVD<Matrix> svd(w);
    CHECK(svd.singularValues()(1) <= 1e-8 * svd.singularValues()(0));
    CHECK(fs::exists(dir / "out/E.csv"));
    CHECK(fs::exists(dir / "out/report.json"));
}

TEST_CASE("usage errors exit with status 1") {
    TempDir dir("usage");
    spit(dir / "obs.txt", "2 2\n0 0 1.0\n");
    CHECK(cli({"complete", dir / "obs.txt"}).code == 1);
    CHECK(cli({}).code == 1);
    CHECK(cli({"--help"}).code == 0);
    const CliRun sim = cli({"simulate", "--missing", "1.0", "--seed", "1", "--out-dir", dir / "sim"});
    CHECK(sim.code == 1);
    CHECK(sim.err.find("error:") == 0);
}

TEST_CASE("malformed input names the line") {
    TempDir dir("bad");
    spit(dir / "obs.txt", "# comment\n3 3\n0 0 1.0\n1 x 2.0\n");
    const CliRun run = cli({"complete", dir / "obs.txt", "--rank", "1", "--out-dir", dir / "out"});
    CHECK(run.code == 1);
    CHECK(run.err.find("obs.txt:4:") != std::string::npos);

    std::istringstream range("2 2\n0 0 1\n2 0 1\n");
    CHECK_THROWS_WITH_AS(read_observations(range, "f"), doctest::Contains("f:3:"), FormatError);
    std::istringstream dup("2 2\n0 0 1\n0 0 2\n");
    CHECK_THROWS_AS(read_observations(dup, "f"), FormatError);
    std::istringstream noheader("# nothing\n");
    CHECK_THROWS_AS(read_observations(noheader, "f"), FormatError);
    std::istringstream nan("2 2\n0 0 nan\n");
    CHECK_THROWS_AS(read_observations(nan, "f"), FormatError);
    std::istringstream ragged("1,2\n3\n");
    CHECK_THROWS_WITH_AS(read_dense_csv(ragged, "d"), doctest::Contains("d:2:"), FormatError);
}

TEST_CASE("simulate is reproducible from its seed") {
    TempDir dir("sim");
    const std::vector<std::string> base = {"simulate", "--m", "7", "--n", "12", "--rank", "3",
                                           "--missing", "0.2", "--corrupt", "0.1", "--corrupt-range",
                                           "-5", "5", "--seed", "99"};
    auto a = base, b = base;
    a.insert(a.end(), {"--out-dir", dir / "a"});
    b.insert(b.end(), {"--out-dir", dir / "b"});
    const CliRun ra = cli(a), rb = cli(b);
    REQUIRE(ra.code == 0);
    REQUIRE(rb.code == 0);
    CHECK(ra.out == "seed 99\n");
    for (const char* f : {"observations.txt", "W_true.csv", "E_true.csv"}) {
        CHECK(!slurp(dir / (std::string("a/") + f)).empty());
        CHECK(slurp(dir / (std::string("a/") + f)) == slurp(dir / (std::string("b/") + f)));
    }
    const ObservedMatrix obs = read_observation_file(dir / "a/observations.txt");
    CHECK(obs.rows() == 7);
    CHECK(obs.cols() == 12);
    CHECK(obs.support().size() == 67);
    std::ifstream e_in(dir / "a/E_true.csv");
    const Matrix e = read_triplet_csv(e_in, 7, 12);
    CHECK((e.array() != 0.0).count() == 7);
    CHECK(e.cwiseAbs().maxCoeff() <= 5.0);
}

TEST_CASE("simulate without a seed echoes the one it drew") {
    TempDir dir("seedless");
    const CliRun run = cli({"simulate", "--m", "4", "--n", "5", "--rank", "1", "--out-dir", dir / "x"});
    REQUIRE(run.code == 0);
    const std::string seed = run.out.substr(5, run.out.size() - 6);
    const CliRun again = cli({"simulate", "--m", "4", "--n", "5", "--rank", "1", "--seed", seed,
                              "--out-dir", dir / "y"});
    REQUIRE(again.code == 0);
    CHECK(slurp(dir / "x/observations.txt") == slurp(dir / "y/observations.txt"));
}

TEST_CASE("phase-diagram CLI: rows, determinism and solver tags") {
    TempDir dir("phase");
    const std::vector<std::string> base = {"phase-diagram", "--m", "10", "--n", "12", "--rank", "2",
                                           "--missing", "0,0.3", "--corrupt", "0,0.1",
                                           "--trials", "1", "--seed", "5"};
    auto a = base, b = base;
    a.insert(a.end(), {"--out", dir / "a.csv", "--summary", dir / "s.csv"});
    b.insert(b.end(), {"--out", dir / "b.csv"});
    REQUIRE(cli(a).code == 0);
    REQUIRE(cli(b).code == 0);
    const std::string ca = slurp(dir / "a.csv");
    CHECK(lines_of(ca).size() == 5);
    CHECK(lines_of(ca)[0].find("missing_frac,corrupt_frac") == 0);
    CHECK(without_seconds(ca) == without_seconds(slurp(dir / "b.csv")));
    CHECK(lines_of(slurp(dir / "s.csv")).size() == 5);

    auto both = base;
    both.insert(both.end(), {"--solvers", "parsumi,apg-only"});
    const CliRun run = cli(both);
    REQUIRE(run.code == 0);
    const auto rows = lines_of(run.out);
    REQUIRE(rows.size() == 9);
    CHECK(rows[0].find(",solver") != std::string::npos);
    int parsumi_rows = 0, apg_rows = 0;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const std::string tag = rows[k].substr(rows[k].rfind(',') + 1);
        parsumi_rows += tag == "parsumi";
        apg_rows += tag == "apg-only";
    }
    CHECK(parsumi_rows == 4);
    CHECK(apg_rows == 4);
    CHECK(cli({"phase-diagram", "--solvers", "nope", "--trials", "1"}).code == 1);
}

TEST_CASE("file formats round-trip exactly") {
    Rng rng(401);
    for (int trial = 0; trial < 20; ++trial) {
        const ObservedMatrix obs = random_observed(rng, int_in(rng, 2, 8), int_in(rng, 2, 8), 0.6);
        std::stringstream ss;
        write_observations(ss, obs);
        const ObservedMatrix back = read_observations(ss);
        CHECK(back.rows() == obs.rows());
        CHECK(back.cols() == obs.cols());
        CHECK(back.support() == obs.support());
        CHECK(back.values() == obs.values());

        Matrix m = uniform_matrix(rng, obs.rows(), obs.cols(), -1e3, 1e3);
        m(0, 0) = 1.0 / 3.0;
        m(obs.rows() - 1, 0) = -2.5e-300;
        std::stringstream dense;
        write_dense_csv(dense, m);
        CHECK(read_dense_csv(dense) == m);

        Matrix sparse = m.unaryExpr([&](double v) { return rng.uniform01() < 0.7 ? 0.0 : v; });
        std::stringstream trip;
        write_triplet_csv(trip, sparse);
        CHECK(read_triplet_csv(trip, m.rows(), m.cols()) == sparse);
    }
}

TEST_CASE("a solve through files matches the in-memory solve") {
    TempDir dir("equiv");
    REQUIRE(cli({"simulate", "--m", "7", "--n", "12", "--rank", "3", "--missing", "0.2", "--corrupt",
                 "0.1", "--corrupt-range", "-5", "5", "--seed", "2718", "--out-dir", dir / "sim"})
                .code == 0);
    const CliRun run = cli({"complete", dir / "sim/observations.txt", "--rank", "3", "--out-dir", dir / "out"});
    REQUIRE(run.code != 1);

    SyntheticSpec spec;
    spec.m = 7;
    spec.n = 12;
    spec.r = 3;
    spec.missing_fraction = 0.2;
    spec.corruption_fraction = 0.1;
    spec.corruption_lo = -5.0;
    spec.corruption_hi = 5.0;
    spec.seed = 2718;
    const SyntheticProblem p = generate(spec);
    const ObservedMatrix from_file = read_observation_file(dir / "sim/observations.txt");
    REQUIRE(from_file.support() == p.obs.support());
    REQUIRE(from_file.values() == p.obs.values());

    const SolveResult mem = parsumi_solve(p.obs, SolverConfig::defaults_for(p.obs, 3));
    CHECK(read_dense(dir / "out/W.csv") == mem.w);
    std::ifstream e_in(dir / "out/E.csv");
    CHECK(read_triplet_csv(e_in, 7, 12) == mem.e.dense(p.obs.support()));
    CHECK(run.code == (mem.report.converged ? 0 : 2));
}

TEST_CASE("report.json carries the report and the configuration") {
    TempDir dir("report");
    REQUIRE(cli({"simulate", "--m", "8", "--n", "9", "--rank", "2", "--missing", "0.3", "--corrupt", "0.05",
                 "--seed", "3", "--out-dir", dir / "sim"})
                .code == 0);
    spit(dir / "cfg.ini", "max-iter = 1\nbeta1 = 0.5\n");
    const CliRun from_cfg = cli({"complete", dir / "sim/observations.txt", "--rank", "2", "--config",
                                 dir / "cfg.ini", "--out-dir", dir / "a"});
    REQUIRE(from_cfg.code != 1);
    const auto ja = nlohmann::json::parse(slurp(dir / "a/report.json"));
    for (const char* key : {"iterations", "converged", "merit_trace", "augmented_decrease", "pure_phase",
                            "safeguard_taken", "safeguard_activations", "heuristic_iterations",
                            "lm_iterations", "rmse_visible", "wall_time", "eta_init", "eta_floor",
                            "warnings", "config"})
        CHECK_MESSAGE(ja.contains(key), key);
    CHECK(ja["config"]["max_iter"] == 1);
    CHECK(ja["config"]["beta1"] == 0.5);
    CHECK(ja["config"]["rank"] == 2);
    CHECK(ja["iterations"] == 1);
    CHECK(ja["merit_trace"].size() == 2);

    const CliRun flag_wins = cli({"complete", dir / "sim/observations.txt", "--rank", "2", "--config",
                                  dir / "cfg.ini", "--max-iter", "3", "--out-dir", dir / "b"});
    REQUIRE(flag_wins.code != 1);
    const auto jb = nlohmann::json::parse(slurp(dir / "b/report.json"));
    CHECK(jb["config"]["max_iter"] == 3);
    CHECK(jb["config"]["beta1"] == 0.5);
}

TEST_CASE("config files may supply required keys and reject unknown ones") {
    TempDir dir("cfgkeys");
    spit(dir / "obs.txt", "2 2\n0 0 1.0\n0 1 2.0\n1 0 3.0\n");
    spit(dir / "rank.ini", "# rank from the file\nrank = 1\nno-huber = true\n");
    const CliRun ok = cli({"complete", dir / "obs.txt", "--config", dir / "rank.ini", "--out-dir", dir / "o"});
    CHECK(ok.code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "o/report.json"));
    CHECK(j["config"]["rank"] == 1);
    CHECK(j["config"]["use_huber"] == false);

    spit(dir / "bad.ini", "rank = 1\nbogus = 3\n");
    const CliRun bad = cli({"complete", dir / "obs.txt", "--config", dir / "bad.ini", "--out-dir", dir / "o"});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("bogus") != std::string::npos);
    CHECK(cli({"complete", dir / "obs.txt", "--config", dir / "missing.ini"}).code == 1);
}
