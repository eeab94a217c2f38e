#include "parsumi/init_apg.hpp"

#include "parsumi/estep.hpp"
#include "parsumi/majorize.hpp"

#include <cmath>
#include <limits>

namespace parsumi {

double ApgConfig::l1_weight_for(Index rows, Index cols) const {
    if (l1_weight > 0.0) return l1_weight;
    return 1.0 / std::sqrt(static_cast<double>(std::max(rows, cols)));
}

void ApgConfig::validate() const {
    if (!(nuclear_weight > 0.0)) throw ParameterError("nuclear weight must be positive");
    if (max_iter <= 0 || continuation_max_passes <= 0)
        throw ParameterError("APG iteration counts must be positive");
    if (!(tol > 0.0)) throw ParameterError("APG tolerance must be positive");
    if (!(continuation_factor > 0.0 && continuation_factor < 1.0))
        throw ParameterError("continuation factor must be in (0,1)");
    if (!(spectral_gap_target > 0.0)) throw ParameterError("spectral gap target must be positive");
}

namespace {

struct SvtOut {
    Matrix w;
    double nuclear_norm;
};

SvtOut svt_with_norm(const Matrix& m, double tau) {
    if (tau < 0.0) throw ParameterError("svt: threshold must be nonnegative");
    if (tau == 0.0) {
        Eigen::BDCSVD<Matrix> svd(m);
        return {m, svd.singularValues().sum()};
    }
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("SVD failed");
    const Vector s = (svd.singularValues().array() - tau).cwiseMax(0.0);
    Index keep = 0;
    while (keep < s.size() && s[keep] > 0.0) ++keep;
    Matrix w = svd.matrixU().leftCols(keep) * s.head(keep).asDiagonal() *
               svd.matrixV().leftCols(keep).transpose();
    return {std::move(w), s.sum()};
}

// Same map as svt_with_norm through the eigendecomposition of the smaller
// Gram matrix, about three times cheaper at APG sizes. Only triplets with
// σ > τ are needed, and W = M·V_k·diag(1 − τ/σ_k)·V_kᵀ never forms U.
// Squaring costs accuracy near τ when σ1/τ is huge, so that case (and τ = 0)
// goes to the full SVD.
SvtOut svt_gram(const Matrix& m, double tau) {
    const bool tall = m.rows() >= m.cols();
    const Matrix gram = tall ? Matrix(m.transpose() * m) : Matrix(m * m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    if (eig.info() != Eigen::Success) return svt_with_norm(m, tau);
    const Vector& lam = eig.eigenvalues();   // ascending
    const double top = std::max(lam[lam.size() - 1], 0.0);
    if (!(tau > 0.0) || top * 1e-10 > tau * tau) return svt_with_norm(m, tau);

    Index keep = 0;
    while (keep < lam.size() && lam[lam.size() - 1 - keep] > tau * tau) ++keep;
    if (keep == 0) return {Matrix::Zero(m.rows(), m.cols()), 0.0};
    const Matrix v = eig.eigenvectors().rightCols(keep);
    Vector shrink(keep);
    double nuclear = 0.0;
    for (Index k = 0; k < keep; ++k) {
        const double sigma = std::sqrt(lam[lam.size() - keep + k]);
        shrink[k] = 1.0 - tau / sigma;
        nuclear += sigma - tau;
    }
    Matrix w = tall ? Matrix(m * v * shrink.asDiagonal() * v.transpose())
                    : Matrix(v * shrink.asDiagonal() * v.transpose() * m);
    return {std::move(w), nuclear};
}

double smooth_part(const ObservedMatrix& obs, const Matrix& w, const Matrix& e) {
    return merit_f(w, e, obs);
}

}  // namespace

Matrix svt(const Matrix& m, double tau) { return svt_with_norm(m, tau).w; }

Matrix soft_threshold(const Matrix& v, double tau) {
    if (tau < 0.0) throw ParameterError("soft_threshold: threshold must be nonnegative");
    return v.unaryExpr([tau](double x) {
        const double mag = std::abs(x) - tau;
        return mag > 0.0 ? std::copysign(mag, x) : 0.0;
    });
}

Vector soft_threshold(const Vector& v, double tau) {
    return soft_threshold(Matrix(v), tau).col(0);
}

double convex_objective(const ObservedMatrix& obs, const Matrix& w, const Matrix& e,
                        double nuclear_weight, double l1_weight) {
    Eigen::BDCSVD<Matrix> svd(w);
    return smooth_part(obs, w, e) + nuclear_weight * svd.singularValues().sum() +
           l1_weight * e.cwiseAbs().sum();
}

ApgResult apg_solve(const ObservedMatrix& obs, const ApgConfig& cfg) {
    const Matrix zero = Matrix::Zero(obs.rows(), obs.cols());
    return apg_solve(obs, cfg, zero, zero);
}

ApgResult apg_solve(const ObservedMatrix& obs, const ApgConfig& cfg, const Matrix& w_start,
                    const Matrix& e_start) {
    cfg.validate();
    if (w_start.rows() != obs.rows() || w_start.cols() != obs.cols() ||
        e_start.rows() != obs.rows() || e_start.cols() != obs.cols())
        throw DimensionError("apg_solve: warm start shape mismatch");

    const double lambda = cfg.nuclear_weight;
    const double gamma = cfg.l1_weight_for(obs.rows(), obs.cols());
    const Matrix h2 = obs.weights().cwiseAbs2();
    const Matrix w_hat = obs.dense();
    const Matrix mask = obs.support().indicator();

    Matrix w = w_start;
    Matrix e = e_start.cwiseProduct(mask);
    Matrix w_bar = w;
    Matrix e_bar = e;
    double t = 1.0;

    ApgResult best;
    best.w = w;
    best.e = e;
    best.objective = convex_objective(obs, w, e, lambda, gamma);

    for (int k = 0; k < cfg.max_iter; ++k) {
        // Gradient of f at (W̄, Ē).
        const Matrix g = h2.cwiseProduct(w_bar + e_bar - w_hat);
        SvtOut next_w = svt_gram(w_bar - 0.5 * g, 0.5 * lambda);
        Matrix next_e = soft_threshold(Matrix(e_bar - 0.5 * g), 0.5 * gamma).cwiseProduct(mask);

        const double t_next = next_momentum(t);
        const double mix = (t - 1.0) / t_next;
        w_bar = next_w.w + mix * (next_w.w - w);
        e_bar = next_e + mix * (next_e - e);

        const double change = std::sqrt((next_w.w - w).squaredNorm() + (next_e - e).squaredNorm());
        const double size = std::sqrt(w.squaredNorm() + e.squaredNorm());
        w = std::move(next_w.w);
        e = std::move(next_e);
        t = t_next;

        const double objective = smooth_part(obs, w, e) + lambda * next_w.nuclear_norm +
                                 gamma * e.cwiseAbs().sum();
        if (!std::isfinite(objective)) throw NumericalError("APG objective is not finite");
        best.iterations = k + 1;
        if (objective <= best.objective) {
            best.objective = objective;
            best.w = w;
            best.e = e;
        }
        if (change <= cfg.tol * std::max(size, 1e-12)) {
            best.converged = true;
            break;
        }
    }
    return best;
}

double spectral_gap_ratio(const Matrix& w, Index rank) {
    Eigen::BDCSVD<Matrix> svd(w);
    const Vector& s = svd.singularValues();
    if (rank >= s.size() || s[0] <= 0.0) return 0.0;
    return s[rank] / s[0];
}

InitResult continuation_init(const ObservedMatrix& obs, Index rank, Index max_corruptions,
                             double corruption_norm_bound, const ApgConfig& cfg) {
    cfg.validate();
    if (rank <= 0 || rank > std::min(obs.rows(), obs.cols()))
        throw ParameterError("continuation_init: rank out of range");

    ApgConfig pass_cfg = cfg;
    Matrix w_start = Matrix::Zero(obs.rows(), obs.cols());
    Matrix e_start = w_start;

    std::optional<ApgResult> accepted;
    double accepted_lambda = 0.0;
    ApgResult last;
    bool converged = true;
    int passes = 0;
    std::vector<std::string> warnings;

    for (int p = 0; p < cfg.continuation_max_passes; ++p) {
        last = apg_solve(obs, pass_cfg, w_start, e_start);
        ++passes;
        converged = converged && last.converged;
        const bool gap_ok = spectral_gap_ratio(last.w, rank) < cfg.spectral_gap_target;
        if (gap_ok) {
            accepted = last;
            accepted_lambda = pass_cfg.nuclear_weight;
            pass_cfg.nuclear_weight *= cfg.continuation_factor;
        } else if (accepted) {
            break;
        } else {
            // No pass has separated the top r singular values yet: back off.
            pass_cfg.nuclear_weight /= cfg.continuation_factor;
        }
        w_start = last.w;
        e_start = last.e;
    }
    if (!converged) warnings.emplace_back("APG reached its iteration cap in some pass");
    if (!accepted) {
        warnings.emplace_back("spectral gap target not reached; using last pass");
        accepted = last;
        accepted_lambda = pass_cfg.nuclear_weight;
    }

    InitResult out{truncated_svd_rank_r(accepted->w, rank),
                   SparseCorruption::zero(obs.support().size(), max_corruptions,
                                          corruption_norm_bound),
                   SubspaceBasis::orthonormalize(Matrix::Identity(obs.rows(), rank)),
                   accepted->w,
                   accepted->e,
                   accepted_lambda,
                   passes,
                   converged,
                   std::move(warnings)};

    const Vector e_vals = project_observed(accepted->e, obs.support());
    out.e0 = SparseCorruption(solve_sparse_step(e_vals, max_corruptions, corruption_norm_bound),
                              max_corruptions, corruption_norm_bound);
    // A zero W0 carries no subspace; fall back to the zero-filled data.
    const Matrix& source = out.w0.norm() > 0.0 ? out.w0 : obs.dense();
    if (source.norm() > 0.0) out.n0 = SubspaceBasis::leading_left_singular(source, rank);
    return out;
}

}  // namespace parsumi
