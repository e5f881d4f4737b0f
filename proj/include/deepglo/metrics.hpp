#pragma once

#include "deepglo/common.hpp"

namespace deepglo {

/// Σ|obs − pred| / Σ|obs|. Throws Error when every observation is zero.
double wape(const Matrix& obs, const Matrix& pred);
/// Mean of |obs − pred| / |obs| over cells with obs ≠ 0.
double mape(const Matrix& obs, const Matrix& pred);
/// Mean of 2|obs − pred| / |obs + pred| over cells with obs ≠ 0. Cells where
/// obs + pred = 0 are dropped from both the sum and the count.
double smape(const Matrix& obs, const Matrix& pred);

struct MaeRmse {
  double mae = 0.0;
  double rmse = 0.0;
};
MaeRmse mae_rmse(const Matrix& obs, const Matrix& pred);

/// All five metrics; undefined ones are NaN instead of throwing.
struct MetricSet {
  double wape = 0.0;
  double mape = 0.0;
  double smape = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
};
MetricSet compute_metrics(const Matrix& obs, const Matrix& pred);

}  // namespace deepglo
