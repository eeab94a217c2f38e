#include "parsumi/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace parsumi {

namespace {

std::string cell_str(Index i, Index j) {
    std::ostringstream os;
    os << "(" << i << "," << j << ")";
    return os.str();
}

}  // namespace

SupportSet::SupportSet(Index rows, Index cols, std::vector<Cell> cells)
    : rows_(rows), cols_(cols), cells_(std::move(cells)) {
    if (rows <= 0 || cols <= 0)
        throw DimensionError("support set needs positive dimensions");
    for (const auto& c : cells_) {
        if (c.row < 0 || c.row >= rows || c.col < 0 || c.col >= cols)
            throw DimensionError("cell " + cell_str(c.row, c.col) + " outside " +
                                 std::to_string(rows) + "x" + std::to_string(cols));
    }
    std::sort(cells_.begin(), cells_.end(), [](const Cell& a, const Cell& b) {
        return a.col != b.col ? a.col < b.col : a.row < b.row;
    });
    for (std::size_t k = 1; k < cells_.size(); ++k) {
        if (cells_[k] == cells_[k - 1])
            throw ParameterError("duplicate observation at " +
                                 cell_str(cells_[k].row, cells_[k].col));
    }
    col_start_.assign(static_cast<std::size_t>(cols + 1), 0);
    for (const auto& c : cells_) ++col_start_[static_cast<std::size_t>(c.col + 1)];
    for (Index j = 0; j < cols; ++j) col_start_[j + 1] += col_start_[j];

    lookup_.setConstant(rows, cols, -1);
    for (Index k = 0; k < size(); ++k) lookup_((*this)[k].row, (*this)[k].col) = k;
}

SupportSet SupportSet::full(Index rows, Index cols) {
    std::vector<Cell> cells;
    cells.reserve(static_cast<std::size_t>(rows * cols));
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) cells.push_back({i, j});
    return SupportSet(rows, cols, std::move(cells));
}

Index SupportSet::position(Index i, Index j) const {
    if (i < 0 || i >= rows_ || j < 0 || j >= cols_)
        throw DimensionError("cell " + cell_str(i, j) + " out of bounds");
    return lookup_(i, j);
}

Matrix SupportSet::indicator() const {
    Matrix out = Matrix::Zero(rows_, cols_);
    for (const auto& c : cells_) out(c.row, c.col) = 1.0;
    return out;
}

Vector project_observed(const Matrix& M, const SupportSet& omega) {
    if (M.rows() != omega.rows() || M.cols() != omega.cols())
        throw DimensionError("project_observed: matrix is " + std::to_string(M.rows()) + "x" +
                             std::to_string(M.cols()) + ", support expects " +
                             std::to_string(omega.rows()) + "x" + std::to_string(omega.cols()));
    Vector v(omega.size());
    for (Index k = 0; k < omega.size(); ++k) v[k] = M(omega[k].row, omega[k].col);
    return v;
}

Matrix embed_observed(const Vector& v, const SupportSet& omega) {
    if (v.size() != omega.size())
        throw DimensionError("embed_observed: vector length " + std::to_string(v.size()) +
                             " != |Ω| = " + std::to_string(omega.size()));
    Matrix M = Matrix::Zero(omega.rows(), omega.cols());
    for (Index k = 0; k < omega.size(); ++k) M(omega[k].row, omega[k].col) = v[k];
    return M;
}

namespace {

void check_epsilon(double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw ParameterError("epsilon must lie in (0,1)");
}

SupportSet support_of(Index rows, Index cols, const std::vector<Observation>& obs) {
    std::vector<Cell> cells;
    cells.reserve(obs.size());
    for (const auto& o : obs) cells.push_back({o.row, o.col});
    return SupportSet(rows, cols, std::move(cells));
}

}  // namespace

ObservedMatrix::ObservedMatrix(Index rows, Index cols, const std::vector<Observation>& obs,
                               double epsilon)
    : support_(support_of(rows, cols, obs)), values_(support_.size()), epsilon_(epsilon) {
    check_epsilon(epsilon);
    for (const auto& o : obs) {
        if (!std::isfinite(o.value))
            throw ParameterError("non-finite observation at " + cell_str(o.row, o.col));
        values_[support_.position(o.row, o.col)] = o.value;
    }
}

ObservedMatrix::ObservedMatrix(SupportSet support, Vector values, double epsilon)
    : support_(std::move(support)), values_(std::move(values)), epsilon_(epsilon) {
    check_epsilon(epsilon);
    if (values_.size() != support_.size())
        throw DimensionError("observed values do not match support size");
    if (!values_.allFinite()) throw ParameterError("non-finite observation");
}

ObservedMatrix ObservedMatrix::from_dense(const Matrix& dense, const SupportSet& support,
                                          double epsilon) {
    return ObservedMatrix(support, project_observed(dense, support), epsilon);
}

double ObservedMatrix::weight(Index i, Index j) const {
    return support_.contains(i, j) ? 1.0 : std::sqrt(epsilon_);
}

Matrix ObservedMatrix::weights() const {
    Matrix h = Matrix::Constant(rows(), cols(), std::sqrt(epsilon_));
    for (const auto& c : support_.cells()) h(c.row, c.col) = 1.0;
    return h;
}

SubspaceBasis::SubspaceBasis(Matrix n) : n_(std::move(n)) {
    if (n_.cols() <= 0 || n_.cols() > n_.rows())
        throw DimensionError("basis must be m x r with 0 < r <= m");
    if (orthonormality_error() > kOrthoTol)
        throw ParameterError("basis is not orthonormal");
}

SubspaceBasis SubspaceBasis::orthonormalize(const Matrix& m) {
    if (m.cols() <= 0 || m.cols() > m.rows())
        throw DimensionError("basis must be m x r with 0 < r <= m");
    if (!m.allFinite()) throw NumericalError("orthonormalize: non-finite input");
    Eigen::HouseholderQR<Matrix> qr(m);
    Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
    const auto& r = qr.matrixQR();
    for (Index k = 0; k < m.cols(); ++k)
        if (r(k, k) < 0.0) q.col(k) = -q.col(k);
    return SubspaceBasis(std::move(q), Trusted{});
}

SubspaceBasis SubspaceBasis::leading_left_singular(const Matrix& m, Index r) {
    if (r <= 0 || r > std::min(m.rows(), m.cols()))
        throw DimensionError("leading_left_singular: rank out of range");
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU);
    return orthonormalize(svd.matrixU().leftCols(r));
}

double SubspaceBasis::orthonormality_error() const {
    const Index r = n_.cols();
    return (n_.transpose() * n_ - Matrix::Identity(r, r)).cwiseAbs().maxCoeff();
}

SparseCorruption::SparseCorruption(Vector values, Index max_cardinality, double norm_bound)
    : values_(std::move(values)), max_cardinality_(max_cardinality), norm_bound_(norm_bound) {
    if (max_cardinality < 0) throw ParameterError("N0 must be nonnegative");
    if (!(norm_bound > 0.0)) throw ParameterError("K_E must be positive");
    if (cardinality() > max_cardinality)
        throw ParameterError("corruption has " + std::to_string(cardinality()) +
                             " nonzeros, bound is " + std::to_string(max_cardinality));
    if (values_.norm() > norm_bound + 1e-12)
        throw ParameterError("corruption norm exceeds K_E");
}

Index SparseCorruption::cardinality() const {
    return static_cast<Index>((values_.array() != 0.0).count());
}

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    const auto mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    double hi = values[mid];
    if (values.size() % 2 == 1) return hi;
    double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

SolverConfig SolverConfig::defaults_for(const ObservedMatrix& obs, Index rank,
                                        std::optional<Index> max_corruptions) {
    SolverConfig cfg;
    cfg.rank = rank;
    cfg.epsilon = obs.epsilon();
    const double scale = std::sqrt(static_cast<double>(std::max(obs.rows(), obs.cols())));
    cfg.beta1 = 1e-3 / scale;
    cfg.beta2 = 1e-3 / scale;
    cfg.max_corruptions = max_corruptions.value_or(static_cast<Index>(
        std::ceil(0.15 * static_cast<double>(obs.support().size()))));

    std::vector<double> mags(static_cast<std::size_t>(obs.values().size()));
    for (Index k = 0; k < obs.values().size(); ++k) mags[k] = std::abs(obs.values()[k]);
    double med = median(std::move(mags));
    if (!(med > 0.0)) med = 1.0;
    cfg.corruption_norm_bound =
        20.0 * std::sqrt(static_cast<double>(std::max<Index>(cfg.max_corruptions, 1))) * med;
    return cfg;
}

void SolverConfig::validate(const ObservedMatrix& obs) const {
    if (rank <= 0 || rank > std::min(obs.rows(), obs.cols()))
        throw ParameterError("rank must lie in [1, min(m,n)]");
    if (max_corruptions < 0) throw ParameterError("N0 must be nonnegative");
    if (!(corruption_norm_bound > 0.0)) throw ParameterError("K_E must be positive");
    if (!(beta1 > 0.0) || !(beta2 > 0.0)) throw ParameterError("beta1, beta2 must be positive");
    if (!(lm_lambda_init > 0.0)) throw ParameterError("lm_lambda_init must be positive");
    if (!(lm_rho > 1.0)) throw ParameterError("lm_rho must exceed 1");
    if (!(eta_shrink > 0.0 && eta_shrink < 1.0)) throw ParameterError("eta_shrink must be in (0,1)");
    if (outer_max_iter <= 0 || lm_max_iter <= 0) throw ParameterError("iteration caps must be positive");
}

double merit_f(const Matrix& w, const Matrix& e_dense, const ObservedMatrix& obs) {
    if (w.rows() != obs.rows() || w.cols() != obs.cols() || e_dense.rows() != obs.rows() ||
        e_dense.cols() != obs.cols())
        throw DimensionError("merit_f: dimension mismatch");
    const auto& omega = obs.support();
    double on = 0.0;
    double off = 0.0;
    for (Index j = 0; j < w.cols(); ++j) {
        for (Index i = 0; i < w.rows(); ++i) {
            const Index k = omega.position(i, j);
            if (k >= 0) {
                const double res = w(i, j) + e_dense(i, j) - obs.values()[k];
                on += res * res;
            } else {
                off += w(i, j) * w(i, j);
            }
        }
    }
    return 0.5 * (on + obs.epsilon() * off);
}

double merit_f(const Matrix& w, const SparseCorruption& e, const ObservedMatrix& obs) {
    if (e.values().size() != obs.support().size())
        throw DimensionError("merit_f: corruption does not match support");
    return merit_f(w, e.dense(obs.support()), obs);
}

}  // namespace parsumi
