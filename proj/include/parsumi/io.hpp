#pragma once

#include "parsumi/core.hpp"
#include "parsumi/driver.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace parsumi {

/// Malformed input file. The message names the source and line number.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Observation files: a header line `m n`, then `i j value` per observation
// (0-based, whitespace separated). Lines starting with `#` and blank lines
// are ignored.
ObservedMatrix read_observations(std::istream& in, const std::string& source = "<stream>",
                                 double epsilon = ObservedMatrix::kDefaultEpsilon);
ObservedMatrix read_observation_file(const std::filesystem::path& path,
                                     double epsilon = ObservedMatrix::kDefaultEpsilon);
void write_observations(std::ostream& out, const ObservedMatrix& obs);

// Dense CSV: one line per row, no header, 17 significant digits.
void write_dense_csv(std::ostream& out, const Matrix& m);
Matrix read_dense_csv(std::istream& in, const std::string& source = "<stream>");

// Triplet CSV with header `row,col,value`; only nonzero entries are listed.
void write_triplet_csv(std::ostream& out, const Matrix& m);
Matrix read_triplet_csv(std::istream& in, Index rows, Index cols,
                        const std::string& source = "<stream>");

/// JSON report: every SolveReport field plus the configuration used.
std::string report_json(const SolveReport& report, const SolverConfig& cfg);

void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace parsumi
