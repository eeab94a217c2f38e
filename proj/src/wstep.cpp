#include "parsumi/wstep.hpp"

#include <cmath>
#include <limits>

namespace parsumi {

namespace {

constexpr double kStallDamping = 1e32;

void check_shape(const Matrix& m, const WStepWorkspace& ws, const char* what) {
    if (m.rows() != ws.rows()) throw DimensionError(std::string(what) + ": row mismatch");
}

Eigen::Map<const Matrix> as_matrix(const Vector& v, Index rows, Index cols) {
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

}  // namespace

WStepWorkspace build_workspace(const ObservedMatrix& obs, const Matrix& w_k,
                               const SparseCorruption& e_k, double beta1) {
    if (!(beta1 > 0.0)) throw ParameterError("beta1 must be positive");
    if (w_k.rows() != obs.rows() || w_k.cols() != obs.cols())
        throw DimensionError("build_workspace: W^k shape mismatch");
    if (e_k.values().size() != obs.support().size())
        throw DimensionError("build_workspace: E^k does not match support");

    const double eps = obs.epsilon();
    const double h_off = std::sqrt(eps + eps * beta1);
    const double h_on = std::sqrt(1.0 + beta1);

    WStepWorkspace ws;
    ws.hbar = Matrix::Constant(obs.rows(), obs.cols(), h_off);
    ws.target = (eps * beta1 / h_off) * w_k;
    const auto& omega = obs.support();
    for (Index k = 0; k < omega.size(); ++k) {
        const auto [i, j] = omega[k];
        ws.hbar(i, j) = h_on;
        ws.target(i, j) = (obs.values()[k] - e_k.values()[k] + beta1 * w_k(i, j)) / h_on;
    }
    return ws;
}

double wstep_objective(const Matrix& w, const WStepWorkspace& ws) {
    if (w.rows() != ws.rows() || w.cols() != ws.cols())
        throw DimensionError("wstep_objective: shape mismatch");
    return 0.5 * (ws.hbar.cwiseProduct(w) - ws.target).squaredNorm();
}

double wstep_objective_direct(const Matrix& w, const ObservedMatrix& obs, const Matrix& w_k,
                              const SparseCorruption& e_k, double beta1) {
    const Matrix h = obs.weights();
    const Matrix fit = h.cwiseProduct(w - obs.dense() + e_k.dense(obs.support()));
    const Matrix prox = h.cwiseProduct(w - w_k);
    return 0.5 * fit.squaredNorm() + 0.5 * beta1 * prox.squaredNorm();
}

ColumnTerms column_terms(const Matrix& n, const WStepWorkspace& ws, Index col) {
    const auto d = ws.hbar.col(col);
    const auto y = ws.target.col(col);
    const Matrix z = d.asDiagonal() * n;
    const Index r = n.cols();

    Eigen::LLT<Matrix> llt(z.transpose() * z);
    if (llt.info() != Eigen::Success)
        throw DegenerateColumnError("NᵀD²N is singular for column " + std::to_string(col));

    ColumnTerms t;
    t.gram_inv = llt.solve(Matrix::Identity(r, r));
    t.a = z * t.gram_inv;
    t.coeffs = llt.solve(z.transpose() * y);
    t.residual = y - z * t.coeffs;
    return t;
}

double subspace_objective(const Matrix& n, const WStepWorkspace& ws) {
    check_shape(n, ws, "subspace_objective");
    double total = 0.0;
    for (Index i = 0; i < ws.cols(); ++i) {
        const auto d = ws.hbar.col(i);
        const auto y = ws.target.col(i);
        const Matrix z = d.asDiagonal() * n;
        Eigen::LLT<Matrix> llt(z.transpose() * z);
        if (llt.info() != Eigen::Success)
            throw DegenerateColumnError("NᵀD²N is singular for column " + std::to_string(i));
        const Vector c = llt.solve(z.transpose() * y);
        total += (y - z * c).squaredNorm();
    }
    return 0.5 * total;
}

GaussNewtonSystem gauss_newton_system(const Matrix& n, const WStepWorkspace& ws) {
    check_shape(n, ws, "gauss_newton_system");
    const Index m = n.rows();
    const Index r = n.cols();

    GaussNewtonSystem sys;
    sys.jtj = Matrix::Zero(m * r, m * r);
    Matrix jtr = Matrix::Zero(m, r);
    Matrix k(m, m);
    Matrix ggt(m, m);

    for (Index i = 0; i < ws.cols(); ++i) {
        const ColumnTerms t = column_terms(n, ws, i);
        const auto d = ws.hbar.col(i);
        const Vector g = d.cwiseProduct(t.residual);   // D_i r_i

        // D_i (I − Q_i) D_i with Q_i = A_i (D_i N)ᵀ.
        const Matrix da = d.asDiagonal() * t.a;
        const Matrix dz = d.cwiseProduct(d).asDiagonal() * n;
        k.noalias() = -da * dz.transpose();
        k.diagonal() += d.cwiseProduct(d);
        ggt.noalias() = g * g.transpose();
        const Matrix ata = t.a.transpose() * t.a;

        for (Index b = 0; b < r; ++b) {
            for (Index a = 0; a < r; ++a) {
                sys.jtj.block(a * m, b * m, m, m) +=
                    (t.coeffs[a] * t.coeffs[b]) * k + ata(a, b) * ggt;
            }
        }
        jtr.noalias() += g * t.coeffs.transpose();
        sys.objective += t.residual.squaredNorm();
    }
    sys.objective *= 0.5;
    sys.jtr = Eigen::Map<const Vector>(jtr.data(), m * r);
    return sys;
}

Matrix recover_w(const Matrix& n, const WStepWorkspace& ws) {
    check_shape(n, ws, "recover_w");
    Matrix w(ws.rows(), ws.cols());
    for (Index i = 0; i < ws.cols(); ++i) {
        const auto d = ws.hbar.col(i);
        const Matrix z = d.asDiagonal() * n;
        Eigen::LLT<Matrix> llt(z.transpose() * z);
        if (llt.info() != Eigen::Success)
            throw DegenerateColumnError("NᵀD²N is singular for column " + std::to_string(i));
        w.col(i) = n * llt.solve(z.transpose() * ws.target.col(i));
    }
    return w;
}

namespace {

/// Solves (JᵀJ + λI)Δ = Jᵀr. JᵀJ is singular along the gauge directions of N,
/// so a vanishing λ can lose definiteness to round-off; the shift is then
/// raised from a trace-scaled jitter until the Cholesky factorization holds.
Vector damped_step(const GaussNewtonSystem& sys, double lambda) {
    const Index dim = sys.jtr.size();
    const double scale = std::max(sys.jtj.trace() / static_cast<double>(dim),
                                  std::numeric_limits<double>::min());
    double shift = lambda;
    for (double jitter = 1e-14 * scale; jitter <= scale; jitter *= 100.0) {
        Matrix lhs = sys.jtj;
        lhs.diagonal().array() += shift;
        Eigen::LLT<Matrix> llt(lhs);
        if (llt.info() == Eigen::Success) return llt.solve(sys.jtr);
        shift = lambda + jitter;
    }
    throw NumericalError("LM system factorization failed");
}

}  // namespace

LmResult lm_gn_solve(const SubspaceBasis& n_init, const WStepWorkspace& ws,
                     const SolverConfig& cfg) {
    if (n_init.rows() != ws.rows()) throw DimensionError("lm_gn_solve: basis row mismatch");
    const Index m = n_init.rows();
    const Index r = n_init.rank();

    SubspaceBasis basis = n_init;
    double lambda = cfg.lm_lambda_init;
    GaussNewtonSystem sys = gauss_newton_system(basis, ws);

    LmResult out{basis, Matrix(), 0, sys.objective, sys.objective, lambda, false, {sys.objective}};

    // Residuals at this level are round-off of the target itself.
    const double floor = 1e-28 * 0.5 * ws.target.squaredNorm();

    while (out.iterations < cfg.lm_max_iter) {
        ++out.iterations;
        if (sys.objective <= floor || sys.jtr.lpNorm<Eigen::Infinity>() == 0.0) break;

        double trial_objective = std::numeric_limits<double>::infinity();
        Matrix trial;
        bool first_trial = true;
        bool negligible = false;
        for (;;) {
            const Vector step = damped_step(sys, lambda);
            if (first_trial) {
                // Decrease predicted by the damped Gauss-Newton model. When even
                // the model cannot reach the relative tolerance, N is converged.
                const double predicted = 0.5 * step.dot(sys.jtr + lambda * step);
                if (predicted <= cfg.lm_tol * sys.objective) {
                    negligible = true;
                    break;
                }
                first_trial = false;
            }
            trial = basis.matrix() + as_matrix(step, m, r);
            if (trial.allFinite()) {
                try {
                    trial_objective = subspace_objective(SubspaceBasis::orthonormalize(trial), ws);
                } catch (const DegenerateColumnError&) {
                    trial_objective = std::numeric_limits<double>::infinity();
                }
            }
            if (trial_objective < sys.objective) break;
            lambda *= cfg.lm_rho;
            if (lambda > kStallDamping) {
                out.stalled = true;
                break;
            }
        }
        if (out.stalled || negligible) break;

        lambda /= cfg.lm_rho;
        const double previous = sys.objective;
        basis = SubspaceBasis::orthonormalize(trial);
        sys = gauss_newton_system(basis, ws);
        out.objective_trace.push_back(sys.objective);

        const double decrease = previous - sys.objective;
        if (decrease <= cfg.lm_tol * std::max(previous, std::numeric_limits<double>::min()))
            break;
    }

    out.final_damping = lambda;
    out.final_objective = sys.objective;
    out.w = recover_w(basis, ws);
    out.basis = std::move(basis);
    return out;
}

}  // namespace parsumi
