#include "surrosim/trajectory.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace surrosim {

double biexp_unchecked(const TrajectoryParams& p, double t) noexcept {
  return std::exp(-p.ks * t) + std::exp(p.kg * t) - 2.0;
}

double biexp_value(const TrajectoryParams& p, double t) {
  const double f = biexp_unchecked(p, t);
  if (!(f <= 1e300))
    throw std::domain_error("biexponential trajectory overflows at t=" + std::to_string(t) +
                            " (kg=" + std::to_string(p.kg) + ")");
  return f;
}

namespace {

double draw_lognormal(Stream& stream, double anchor_value, double log_variance,
                      LognormalAnchor anchor) {
  // Consume the normal draw even when degenerate so stream positions do not
  // depend on the variance.
  const double z = stream.normal();
  if (log_variance == 0.0) return anchor_value;
  double log_location = std::log(anchor_value);
  if (anchor == LognormalAnchor::mean) log_location -= 0.5 * log_variance;
  return std::exp(log_location + std::sqrt(log_variance) * z);
}

}  // namespace

TrajectoryParams sample_params(Stream& stream, double mean_ks, double mean_kg, double omega_ks,
                               double omega_kg, LognormalAnchor anchor) {
  TrajectoryParams p;
  p.ks = draw_lognormal(stream, mean_ks, omega_ks, anchor);
  p.kg = draw_lognormal(stream, mean_kg, omega_kg, anchor);
  return p;
}

SurrogateMeasurement measure_surrogate(const TrajectoryParams& params, double t_star,
                                       double sigma_err, Stream& stream) {
  SurrogateMeasurement m;
  m.true_f = biexp_value(params, t_star);
  const double eps = stream.normal();
  m.observed_y = sigma_err == 0.0 ? m.true_f : m.true_f + sigma_err * eps;
  return m;
}

}  // namespace surrosim
