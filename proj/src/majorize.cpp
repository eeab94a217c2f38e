#include "parsumi/majorize.hpp"

namespace parsumi {

MajorizationWeights compute_weights(const Matrix& hbar, double inflation) {
    if (hbar.size() == 0 || (hbar.array() <= 0.0).any())
        throw ParameterError("compute_weights: H̄ must be positive");
    MajorizationWeights wts;
    wts.inflation = inflation;
    wts.row = (1.0 + inflation) * hbar.rowwise().maxCoeff();
    wts.col = hbar.colwise().maxCoeff().transpose();
    return wts;
}

Matrix truncated_svd_rank_r(const Matrix& m, Index r) {
    const Index k = std::min(m.rows(), m.cols());
    if (r < 0 || r > k) throw DimensionError("truncated_svd_rank_r: rank exceeds min(m,n)");
    if (r == 0) return Matrix::Zero(m.rows(), m.cols());
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("SVD failed");
    return svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
           svd.matrixV().leftCols(r).transpose();
}

namespace {

Matrix gradient(const Matrix& w_k, const WStepWorkspace& ws) {
    return ws.hbar.cwiseProduct(ws.hbar).cwiseProduct(w_k - ws.scaled_target());
}

void check(const Matrix& w, const WStepWorkspace& ws, const MajorizationWeights& wts) {
    if (w.rows() != ws.rows() || w.cols() != ws.cols() || wts.row.size() != ws.rows() ||
        wts.col.size() != ws.cols())
        throw DimensionError("majorization: dimension mismatch");
}

}  // namespace

double majorization_bound(const Matrix& w, const Matrix& w_k, const WStepWorkspace& ws,
                          const MajorizationWeights& wts) {
    check(w, ws, wts);
    check(w_k, ws, wts);
    const Matrix delta = w - w_k;
    const double quad = (wts.row.asDiagonal() * delta * wts.col.asDiagonal()).cwiseProduct(delta).sum();
    return wstep_objective(w_k, ws) + gradient(w_k, ws).cwiseProduct(delta).sum() + 0.5 * quad;
}

Matrix majorized_minimizer(const Matrix& w_k, const WStepWorkspace& ws,
                           const MajorizationWeights& wts, Index r) {
    check(w_k, ws, wts);
    const Vector p_half = wts.row.cwiseSqrt();
    const Vector q_half = wts.col.cwiseSqrt();
    const Vector p_inv_half = p_half.cwiseInverse();
    const Vector q_inv_half = q_half.cwiseInverse();

    const Matrix u = p_half.asDiagonal() * w_k * q_half.asDiagonal() -
                     p_inv_half.asDiagonal() * gradient(w_k, ws) * q_inv_half.asDiagonal();
    return p_inv_half.asDiagonal() * truncated_svd_rank_r(u, r) * q_inv_half.asDiagonal();
}

}  // namespace parsumi
