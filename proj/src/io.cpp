#include "parsumi/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace parsumi {

namespace {

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
    throw FormatError(source + ":" + std::to_string(line) + ": " + what);
}

bool skippable(const std::string& line) {
    const auto first = line.find_first_not_of(" \t\r");
    return first == std::string::npos || line[first] == '#';
}

// Strict numeric parsing: the whole token must be consumed.
template <class T>
bool parse_token(const std::string& tok, T& value) {
    if constexpr (std::is_floating_point_v<T>) {
        try {
            std::size_t used = 0;
            value = std::stod(tok, &used);
            return used == tok.size();
        } catch (const std::exception&) {
            return false;
        }
    } else {
        const auto* end = tok.data() + tok.size();
        auto [ptr, ec] = std::from_chars(tok.data(), end, value);
        return ec == std::errc() && ptr == end;
    }
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    if (sep == ' ') {
        std::istringstream ss(line);
        std::string tok;
        while (ss >> tok) out.push_back(tok);
        return out;
    }
    std::string tok;
    std::istringstream ss(line);
    while (std::getline(ss, tok, sep)) {
        const auto b = tok.find_first_not_of(" \t\r");
        const auto e = tok.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : tok.substr(b, e - b + 1));
    }
    return out;
}

struct Precise {
    std::ostream& os;
    std::ios::fmtflags flags;
    std::streamsize prec;
    explicit Precise(std::ostream& o) : os(o), flags(o.flags()), prec(o.precision()) {
        os << std::setprecision(17);
    }
    ~Precise() {
        os.flags(flags);
        os.precision(prec);
    }
};

}  // namespace

ObservedMatrix read_observations(std::istream& in, const std::string& source, double epsilon) {
    std::string line;
    std::size_t lineno = 0;
    Index rows = -1;
    Index cols = -1;
    std::vector<Observation> obs;
    while (std::getline(in, line)) {
        ++lineno;
        if (skippable(line)) continue;
        const auto tok = split(line, ' ');
        if (rows < 0) {
            if (tok.size() != 2 || !parse_token(tok[0], rows) || !parse_token(tok[1], cols) ||
                rows <= 0 || cols <= 0)
                fail(source, lineno, "expected header 'm n' with positive integers");
            continue;
        }
        Observation o{};
        if (tok.size() != 3 || !parse_token(tok[0], o.row) || !parse_token(tok[1], o.col) ||
            !parse_token(tok[2], o.value))
            fail(source, lineno, "expected 'i j value'");
        if (o.row < 0 || o.row >= rows || o.col < 0 || o.col >= cols)
            fail(source, lineno, "index out of range for a " + std::to_string(rows) + "x" +
                                     std::to_string(cols) + " matrix");
        if (!std::isfinite(o.value)) fail(source, lineno, "value is not finite");
        obs.push_back(o);
    }
    if (rows < 0) fail(source, lineno, "missing header 'm n'");
    try {
        return ObservedMatrix(rows, cols, obs, epsilon);
    } catch (const std::invalid_argument& ex) {
        throw FormatError(source + ": " + ex.what());
    }
}

ObservedMatrix read_observation_file(const std::filesystem::path& path, double epsilon) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    return read_observations(in, path.string(), epsilon);
}

void write_observations(std::ostream& out, const ObservedMatrix& obs) {
    Precise guard(out);
    out << obs.rows() << ' ' << obs.cols() << '\n';
    const auto& omega = obs.support();
    for (Index k = 0; k < omega.size(); ++k)
        out << omega[k].row << ' ' << omega[k].col << ' ' << obs.values()[k] << '\n';
}

void write_dense_csv(std::ostream& out, const Matrix& m) {
    Precise guard(out);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << m(i, j);
        }
        out << '\n';
    }
}

Matrix read_dense_csv(std::istream& in, const std::string& source) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (skippable(line)) continue;
        std::vector<double> row;
        for (const auto& tok : split(line, ',')) {
            double v = 0.0;
            if (!parse_token(tok, v)) fail(source, lineno, "bad number '" + tok + "'");
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            fail(source, lineno, "row length differs from the first row");
        rows.push_back(std::move(row));
    }
    Matrix m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows[0].size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
    return m;
}

void write_triplet_csv(std::ostream& out, const Matrix& m) {
    Precise guard(out);
    out << "row,col,value\n";
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i)
            if (m(i, j) != 0.0) out << i << ',' << j << ',' << m(i, j) << '\n';
}

Matrix read_triplet_csv(std::istream& in, Index rows, Index cols, const std::string& source) {
    Matrix m = Matrix::Zero(rows, cols);
    std::string line;
    std::size_t lineno = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (skippable(line)) continue;
        if (header) {
            header = false;
            if (line.rfind("row,col,value", 0) == 0) continue;
        }
        const auto tok = split(line, ',');
        Index i = 0;
        Index j = 0;
        double v = 0.0;
        if (tok.size() != 3 || !parse_token(tok[0], i) || !parse_token(tok[1], j) ||
            !parse_token(tok[2], v))
            fail(source, lineno, "expected 'row,col,value'");
        if (i < 0 || i >= rows || j < 0 || j >= cols) fail(source, lineno, "index out of range");
        m(i, j) = v;
    }
    return m;
}

std::string report_json(const SolveReport& r, const SolverConfig& cfg) {
    nlohmann::json j;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["merit_trace"] = r.merit_trace;
    j["augmented_decrease"] = r.augmented_decrease;
    j["pure_phase"] = r.pure_phase;
    j["safeguard_taken"] = r.safeguard_taken;
    j["safeguard_activations"] = r.safeguard_activations;
    j["heuristic_iterations"] = r.heuristic_iterations;
    j["lm_iterations"] = r.lm_iterations;
    j["rmse_visible"] = r.rmse_visible;
    j["wall_time"] = r.wall_time;
    j["final_majorized_step"] = r.final_majorized_step;
    j["final_corruption_step"] = r.final_corruption_step;
    j["eta_init"] = r.eta_init;
    j["eta_floor"] = r.eta_floor;
    j["warnings"] = r.warnings;

    nlohmann::json c;
    c["rank"] = cfg.rank;
    c["n0"] = cfg.max_corruptions;
    c["ke"] = cfg.corruption_norm_bound;
    c["epsilon"] = cfg.epsilon;
    c["beta1"] = cfg.beta1;
    c["beta2"] = cfg.beta2;
    c["lm_lambda_init"] = cfg.lm_lambda_init;
    c["lm_rho"] = cfg.lm_rho;
    c["lm_tol"] = cfg.lm_tol;
    c["lm_max_iter"] = cfg.lm_max_iter;
    c["tol"] = cfg.outer_tol;
    c["max_iter"] = cfg.outer_max_iter;
    c["use_huber"] = cfg.use_huber;
    c["eta_shrink"] = cfg.eta_shrink;
    c["huber_reweight_iters"] = cfg.huber_reweight_iters;
    c["seed"] = cfg.rng_seed;
    j["config"] = c;
    return j.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out << contents;
    if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace parsumi
