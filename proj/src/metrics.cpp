#include "parsumi/metrics.hpp"

#include <cmath>

namespace parsumi {

namespace {
constexpr double kZero = 1e-9;
}

double rmse(const Matrix& w_rec, const Matrix& w_true) {
    if (w_rec.rows() != w_true.rows() || w_rec.cols() != w_true.cols())
        throw DimensionError("rmse: shape mismatch");
    return (w_rec - w_true).norm() / std::sqrt(static_cast<double>(w_rec.size()));
}

double rmse_visible(const Matrix& w_rec, const ObservedMatrix& obs) {
    if (obs.support().empty()) throw ParameterError("rmse_visible: no observed entries");
    const Vector res = project_observed(w_rec, obs.support()) - obs.values();
    return res.norm() / std::sqrt(static_cast<double>(res.size()));
}

double oracle_rmse(Index m, Index n, Index r, Index observed_count, Index corrupted_count,
                   double sigma) {
    if (observed_count <= corrupted_count)
        throw ParameterError("oracle_rmse: need more observed than corrupted entries");
    const double dof = static_cast<double>((m + n - r) * r);
    if (!(dof > 0.0)) throw ParameterError("oracle_rmse: (m+n-r)r must be positive");
    if (sigma < 0.0) throw ParameterError("oracle_rmse: sigma must be nonnegative");
    return sigma * std::sqrt(dof / static_cast<double>(observed_count - corrupted_count));
}

SupportStats support_stats(const Matrix& e_rec, const Matrix& e_true) {
    if (e_rec.rows() != e_true.rows() || e_rec.cols() != e_true.cols())
        throw DimensionError("support statistics: shape mismatch");
    Index both = 0;
    Index rec = 0;
    Index truth = 0;
    double ratio_sum = 0.0;
    for (Index j = 0; j < e_rec.cols(); ++j) {
        for (Index i = 0; i < e_rec.rows(); ++i) {
            const bool in_rec = std::abs(e_rec(i, j)) >= kZero;
            const bool in_true = std::abs(e_true(i, j)) >= kZero;
            rec += in_rec;
            truth += in_true;
            both += in_rec && in_true;
            if (in_true) ratio_sum += std::abs(e_rec(i, j)) / std::abs(e_true(i, j));
        }
    }
    SupportStats s;
    s.precision = rec == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(rec);
    s.recall = truth == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(truth);
    s.magnitude_ratio = truth == 0 ? 0.0 : ratio_sum / static_cast<double>(truth);
    return s;
}

double support_f_measure(const Matrix& e_rec, const Matrix& e_true) {
    const SupportStats s = support_stats(e_rec, e_true);
    if (s.precision + s.recall == 0.0) return 0.0;
    return 2.0 * s.precision * s.recall / (s.precision + s.recall);
}

}  // namespace parsumi
