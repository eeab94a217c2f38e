#include "parsumi/heuristics.hpp"

#include <cmath>

namespace parsumi {

void HuberConfig::validate() const {
    if (!(eta0 > 0.0)) throw ParameterError("eta0 must be positive");
    if (!(eta_shrink > 0.0 && eta_shrink < 1.0)) throw ParameterError("eta_shrink must be in (0,1)");
    if (l_max <= 0 || inner_apg_iters <= 0) throw ParameterError("Huber iteration counts must be positive");
    if (!(reweight_floor > 0.0)) throw ParameterError("reweight floor must be positive");
}

double huber_value(double z, double knee) {
    if (!(knee > 0.0)) throw ParameterError("Huber knee must be positive");
    const double a = std::abs(z);
    return a <= knee ? 0.5 * z * z : knee * a - 0.5 * knee * knee;
}

namespace {

double knee_weight(const Matrix& weights, Index i, Index j) {
    return weights.size() == 0 ? 1.0 : weights(i, j);
}

/// One column of the Huber fit with C eliminated:
///   φ(e) = ½‖h∘(N c(e) − ŵ + e)‖²,  c(e) = argmin_c of the same expression.
class ColumnProblem {
public:
    ColumnProblem(const Matrix& n, const ObservedMatrix& obs, Index col)
        : rows_(obs.support().column_count(col)) {
        const auto& omega = obs.support();
        h_ = Vector::Constant(n.rows(), std::sqrt(obs.epsilon()));
        target_ = Vector::Zero(n.rows());
        obs_rows_.resize(static_cast<std::size_t>(rows_));
        for (Index k = omega.column_begin(col); k < omega.column_end(col); ++k) {
            const Index i = omega[k].row;
            obs_rows_[static_cast<std::size_t>(k - omega.column_begin(col))] = i;
            h_[i] = 1.0;
            target_[i] = obs.values()[k];
        }
        z_ = h_.asDiagonal() * n;
        llt_.compute(z_.transpose() * z_);
        if (llt_.info() != Eigen::Success) throw NumericalError("Huber column system is singular");
    }

    Index size() const { return rows_; }
    Index row(Index k) const { return obs_rows_[static_cast<std::size_t>(k)]; }

    Vector coeffs(const Vector& e) const {
        return llt_.solve(z_.transpose() * h_.cwiseProduct(data_minus(e)));
    }

    /// h∘(N c(e) − ŵ + e), full length m.
    Vector residual(const Vector& e) const {
        return z_ * coeffs(e) - h_.cwiseProduct(data_minus(e));
    }

private:
    Vector data_minus(const Vector& e) const {
        Vector d = target_;
        for (Index k = 0; k < rows_; ++k) d[row(k)] -= e[k];
        return d;
    }

    Index rows_;
    std::vector<Index> obs_rows_;
    Vector h_;
    Vector target_;
    Matrix z_;
    Eigen::LLT<Matrix> llt_;
};

}  // namespace

double huber_objective(const SubspaceBasis& n, const ObservedMatrix& obs, const Matrix& c,
                       const Matrix& e, double eta0, const Matrix& knee_weights) {
    const Matrix fit = n.matrix() * c;
    double penalty = 0.0;
    for (const auto& cell : obs.support().cells())
        penalty += knee_weight(knee_weights, cell.row, cell.col) * std::abs(e(cell.row, cell.col));
    return merit_f(fit, e, obs) + eta0 * penalty;
}

HuberResult huber_regression(const SubspaceBasis& n, const ObservedMatrix& obs,
                             const HuberConfig& cfg, const Matrix& knee_weights) {
    cfg.validate();
    if (n.rows() != obs.rows()) throw DimensionError("huber_regression: basis row mismatch");
    if (knee_weights.size() != 0 &&
        (knee_weights.rows() != obs.rows() || knee_weights.cols() != obs.cols()))
        throw DimensionError("huber_regression: weight shape mismatch");

    HuberResult out;
    out.c = Matrix::Zero(n.rank(), obs.cols());
    out.e_soft = Matrix::Zero(obs.rows(), obs.cols());

    for (Index j = 0; j < obs.cols(); ++j) {
        const ColumnProblem col(n.matrix(), obs, j);
        const Index len = col.size();
        Vector thresh(len);
        for (Index k = 0; k < len; ++k) thresh[k] = cfg.eta0 * knee_weight(knee_weights, col.row(k), j);

        auto objective = [&](const Vector& e, const Vector& res) {
            return 0.5 * res.squaredNorm() + thresh.dot(e.cwiseAbs());
        };

        Vector e = Vector::Zero(len);
        Vector e_bar = e;
        Vector best = e;
        double best_obj = objective(e, col.residual(e));
        double t = 1.0;
        bool converged = len == 0;

        for (int it = 0; it < cfg.inner_apg_iters && !converged; ++it) {
            const Vector res = col.residual(e_bar);
            Vector next(len);
            for (Index k = 0; k < len; ++k) {
                // Unit step: the gradient's Lipschitz constant is at most 1.
                const double v = e_bar[k] - res[col.row(k)];
                const double mag = std::abs(v) - thresh[k];
                next[k] = mag > 0.0 ? std::copysign(mag, v) : 0.0;
            }
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            e_bar = next + ((t - 1.0) / t_next) * (next - e);
            const double change = (next - e).norm();
            const double size = std::max(e.norm(), 1e-12);
            e = std::move(next);
            t = t_next;

            const double obj = objective(e, col.residual(e));
            if (obj <= best_obj) {
                best_obj = obj;
                best = e;
            }
            if (change <= cfg.inner_tol * size) converged = true;
        }
        out.converged = out.converged && converged;
        out.c.col(j) = col.coeffs(best);
        for (Index k = 0; k < len; ++k) out.e_soft(col.row(k), j) = best[k];
    }
    return out;
}

HuberResult reweighted_huber(const SubspaceBasis& n, const ObservedMatrix& obs,
                             const HuberConfig& cfg) {
    HuberResult result = huber_regression(n, obs, cfg);
    const auto& omega = obs.support();
    for (int pass = 1; pass < cfg.l_max; ++pass) {
        // Weight η0/|residual|: a residual at the knee keeps knee η0, larger
        // residuals are shrunk less and smaller ones are pushed out of E.
        const Matrix fit = n.matrix() * result.c;
        Matrix weights = Matrix::Ones(obs.rows(), obs.cols());
        for (Index k = 0; k < omega.size(); ++k) {
            const auto [i, j] = omega[k];
            const double res = std::abs(obs.values()[k] - fit(i, j));
            weights(i, j) = cfg.eta0 / std::max(res, cfg.reweight_floor);
        }
        const bool prior = result.converged;
        result = huber_regression(n, obs, cfg, weights);
        result.converged = result.converged && prior;
    }
    return result;
}

EtaGate eta_gate(double eta_current, const HuberConfig& cfg) {
    if (eta_current < 0.0) throw ParameterError("eta must be nonnegative");
    const bool on = eta_current > cfg.eta0;
    return {on, cfg.eta_shrink * eta_current, on ? eta_current : 0.0};
}

Vector gate_small_entries(const Vector& values, double threshold) {
    return values.unaryExpr([threshold](double v) { return std::abs(v) < threshold ? 0.0 : v; });
}

int eta_gate_horizon(double eta_init, const HuberConfig& cfg) {
    if (eta_init <= cfg.eta0) return 0;
    return static_cast<int>(std::ceil(std::log(cfg.eta0 / eta_init) / std::log(cfg.eta_shrink)));
}

}  // namespace parsumi
