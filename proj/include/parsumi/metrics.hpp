#pragma once

#include "parsumi/core.hpp"

namespace parsumi {

/// ‖W_rec − W_true‖_F / √(mn).
double rmse(const Matrix& w_rec, const Matrix& w_true);

/// ‖P_Ω(W_rec − Ŵ)‖ / √|Ω|; throws ParameterError for an empty Ω.
double rmse_visible(const Matrix& w_rec, const ObservedMatrix& obs);

/// Noise floor σ√((m + n − r) r / (observed − corrupted)).
double oracle_rmse(Index m, Index n, Index r, Index observed_count, Index corrupted_count,
                   double sigma);

/// Harmonic mean of precision and recall of the nonzero supports (|x| < 1e-9
/// counts as zero). Two empty supports score 1.
double support_f_measure(const Matrix& e_rec, const Matrix& e_true);

struct SupportStats {
    double precision = 1.0;
    double recall = 1.0;
    /// mean |E_rec|/|E_true| over the true support.
    double magnitude_ratio = 0.0;
};

SupportStats support_stats(const Matrix& e_rec, const Matrix& e_true);

}  // namespace parsumi
