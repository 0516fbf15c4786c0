#pragma once

#include "surrosim/random.hpp"
#include "surrosim/scenario.hpp"

namespace surrosim {

/// Per-patient shrinkage (ks) and regrowth (kg) rates, per week.
struct TrajectoryParams {
  double ks = 0.0;
  double kg = 0.0;
};

struct SurrogateMeasurement {
  double true_f = 0.0;
  double observed_y = 0.0;
};

/// exp(-ks t) + exp(kg t) - 2. Throws std::domain_error when the value
/// exceeds 1e300.
double biexp_value(const TrajectoryParams& params, double t);

/// Same closed form without the overflow check; may return +inf.
double biexp_unchecked(const TrajectoryParams& params, double t) noexcept;

/// Draws lognormal ks and kg. `omega_*` are variances of log K; with the
/// median anchor the grid value is the lognormal median, with the mean
/// anchor it is the arithmetic mean.
TrajectoryParams sample_params(Stream& stream, double mean_ks, double mean_kg, double omega_ks,
                               double omega_kg, LognormalAnchor anchor = LognormalAnchor::median);

SurrogateMeasurement measure_surrogate(const TrajectoryParams& params, double t_star,
                                       double sigma_err, Stream& stream);

}  // namespace surrosim
