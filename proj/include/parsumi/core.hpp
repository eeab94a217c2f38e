#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace parsumi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised when matrix/vector shapes or indices do not agree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised for parameters outside their admissible range.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a computation produces non-finite values or breaks a
/// guaranteed numerical property.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Cell {
    Index row;
    Index col;

    friend bool operator==(const Cell&, const Cell&) = default;
};

/// Observed index set Ω of an m x n matrix.
///
/// Cells are stored in canonical column-major order (by column, then row).
/// Duplicates and out-of-range cells are rejected at construction.
class SupportSet {
public:
    SupportSet(Index rows, Index cols, std::vector<Cell> cells);

    static SupportSet full(Index rows, Index cols);

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    Index size() const { return static_cast<Index>(cells_.size()); }
    bool empty() const { return cells_.empty(); }

    const std::vector<Cell>& cells() const { return cells_; }
    const Cell& operator[](Index k) const { return cells_[static_cast<std::size_t>(k)]; }

    bool contains(Index i, Index j) const { return position(i, j) >= 0; }
    /// Canonical position of (i,j) in Ω, or -1 when unobserved.
    Index position(Index i, Index j) const;

    /// Number of observed cells in column j.
    Index column_count(Index j) const { return col_start_[j + 1] - col_start_[j]; }
    /// Canonical positions [begin, end) belonging to column j.
    Index column_begin(Index j) const { return col_start_[j]; }
    Index column_end(Index j) const { return col_start_[j + 1]; }

    /// 1 on Ω, 0 elsewhere.
    Matrix indicator() const;

    friend bool operator==(const SupportSet& a, const SupportSet& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.cells_ == b.cells_;
    }

private:
    Index rows_;
    Index cols_;
    std::vector<Cell> cells_;
    std::vector<Index> col_start_;
    Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> lookup_;
};

/// P_Ω: entries of M on Ω in canonical order.
Vector project_observed(const Matrix& M, const SupportSet& omega);

/// P*_Ω: matrix that is v on Ω and zero elsewhere.
Matrix embed_observed(const Vector& v, const SupportSet& omega);

struct Observation {
    Index row;
    Index col;
    double value;
};

/// Partially observed measurement matrix Ŵ together with its support Ω and
/// the regularization weight ε that defines H (1 on Ω, √ε off Ω).
class ObservedMatrix {
public:
    static constexpr double kDefaultEpsilon = 1e-10;

    ObservedMatrix(Index rows, Index cols, const std::vector<Observation>& obs,
                   double epsilon = kDefaultEpsilon);
    ObservedMatrix(SupportSet support, Vector values, double epsilon = kDefaultEpsilon);

    /// Observe every cell of `dense` that is in `support`.
    static ObservedMatrix from_dense(const Matrix& dense, const SupportSet& support,
                                     double epsilon = kDefaultEpsilon);

    Index rows() const { return support_.rows(); }
    Index cols() const { return support_.cols(); }
    double epsilon() const { return epsilon_; }
    const SupportSet& support() const { return support_; }
    /// Ŵ restricted to Ω, canonical order.
    const Vector& values() const { return values_; }

    double weight(Index i, Index j) const;
    /// H, materialized.
    Matrix weights() const;
    /// Ŵ with zeros off Ω.
    Matrix dense() const { return embed_observed(values_, support_); }

    ObservedMatrix with_epsilon(double epsilon) const {
        return ObservedMatrix(support_, values_, epsilon);
    }

private:
    SupportSet support_;
    Vector values_;
    double epsilon_;
};

/// Orthonormal m x r basis N.
class SubspaceBasis {
public:
    static constexpr double kOrthoTol = 1e-10;

    /// Wraps an already-orthonormal matrix; throws ParameterError otherwise.
    explicit SubspaceBasis(Matrix n);

    /// Thin QR of `m` with R's diagonal made nonnegative.
    static SubspaceBasis orthonormalize(const Matrix& m);

    /// Top-r left singular vectors of `m`.
    static SubspaceBasis leading_left_singular(const Matrix& m, Index r);

    const Matrix& matrix() const { return n_; }
    Index rows() const { return n_.rows(); }
    Index rank() const { return n_.cols(); }

    double orthonormality_error() const;

private:
    struct Trusted {};
    SubspaceBasis(Matrix n, Trusted) : n_(std::move(n)) {}
    Matrix n_;
};

/// Sparse corruption E stored as its values on Ω (canonical order); zero
/// off Ω by construction.
class SparseCorruption {
public:
    SparseCorruption(Vector values, Index max_cardinality, double norm_bound);

    static SparseCorruption zero(Index support_size, Index max_cardinality, double norm_bound) {
        return SparseCorruption(Vector::Zero(support_size), max_cardinality, norm_bound);
    }

    const Vector& values() const { return values_; }
    Index max_cardinality() const { return max_cardinality_; }
    double norm_bound() const { return norm_bound_; }

    Index cardinality() const;
    double norm() const { return values_.norm(); }
    Matrix dense(const SupportSet& omega) const { return embed_observed(values_, omega); }

private:
    Vector values_;
    Index max_cardinality_;
    double norm_bound_;
};

/// Every scalar the solver uses. Start from `SolverConfig::defaults_for`.
struct SolverConfig {
    Index rank = 1;
    Index max_corruptions = 0;   // N0
    double corruption_norm_bound = 1.0;   // K_E
    double epsilon = ObservedMatrix::kDefaultEpsilon;
    double beta1 = 1e-4;
    double beta2 = 1e-4;
    double lm_lambda_init = 1e-6;
    double lm_rho = 10.0;
    double lm_tol = 1e-10;
    int lm_max_iter = 100;
    double outer_tol = 1e-6;
    int outer_max_iter = 300;

    bool use_huber = true;
    /// Starting E-gate threshold; median|P_Ω(Ŵ)| when unset.
    std::optional<double> eta_init;
    std::optional<double> eta_floor;
    double eta_shrink = 0.8;
    int huber_reweight_iters = 3;

    std::uint64_t rng_seed = 0;

    /// Defaults for an observed matrix: β1 = β2 = 1e-3/√max(m,n),
    /// K_E = 20·√N0·median|P_Ω(Ŵ)|, and N0 = ceil(0.15|Ω|) when not given.
    static SolverConfig defaults_for(const ObservedMatrix& obs, Index rank,
                                     std::optional<Index> max_corruptions = std::nullopt);

    void validate(const ObservedMatrix& obs) const;
};

struct IterationState {
    Matrix w;
    SparseCorruption e;
    SubspaceBasis n;
    double merit;
    int iter;
};

/// f(W,E) = ½‖H∘(W+E−Ŵ)‖².
double merit_f(const Matrix& w, const SparseCorruption& e, const ObservedMatrix& obs);
double merit_f(const Matrix& w, const Matrix& e_dense, const ObservedMatrix& obs);

double median(std::vector<double> values);

}  // namespace parsumi
