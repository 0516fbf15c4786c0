#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "surrosim/random.hpp"
#include "surrosim/scenario.hpp"
#include "surrosim/trajectory.hpp"

namespace surrosim {

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RootFindError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleCell : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HazardParams {
  double gamma = 1.0;
  double beta0 = 0.0;
  double beta1 = 0.0;
  double alpha = 0.0;
  int trt = 0;
  TrajectoryParams trajectory;
};

/// gamma t^(gamma-1) exp(beta0 + beta1 trt + alpha f(t)). May be +inf when
/// the trajectory term overflows.
double hazard(const HazardParams& p, double t);

/// Integral of the hazard over [a, b] by adaptive Gauss-Kronrod
/// (abs 1e-10, rel 1e-8). Throws IntegrationError on non-convergence.
double integrate_hazard(const HazardParams& p, double a, double b);

/// H(t) accumulated over the panels [0,1], [1,2], [2,4], ... so that the
/// same partition is used by the event-time sampler.
double cumulative_hazard(const HazardParams& p, double t);

struct EventDraw {
  double time = 0.0;
  bool event = false;
  double target = 0.0;  // -log(u)
};

/// Solves H(T) = target on (0, t_max]. Returns {t_max, false} when
/// H(t_max) < target. The root satisfies |H(T) - target| <= 1e-9 or is
/// bracketed to within a few ulps.
EventDraw invert_cumulative_hazard(const HazardParams& p, double target, double t_max);

/// Draws u ~ U(0,1) and inverts H at -log(u).
EventDraw sample_event_time(const HazardParams& p, Stream& stream, double t_max);

struct Patient {
  int id = 0;
  int arm = 0;
  TrajectoryParams trajectory;
  SurrogateMeasurement surrogate;
  double time = 0.0;
  bool event = false;
};

struct Trial {
  SimulationCell cell;
  int replicate = 0;
  double beta0 = 0.0;
  std::vector<Patient> patients;
  double censor_time = 0.0;
};

struct Calibration {
  double beta0 = 0.0;
  double early_fraction = 0.0;    // pilot P(T <= t_star)
  double horizon_fraction = 0.0;  // pilot P(T <= max_duration)
  bool warning = false;
  std::string note;
};

/// Bisection on beta0 in [-15, 0] so that the pilot probability of an event
/// before t_star equals spec.early_event_target. The pilot probability is
/// the average of 1 - exp(-e^beta0 A_i(t_star)) over pilot patients, where
/// A_i is the cumulative hazard at beta0 = 0.
Calibration calibrate_beta0(const SimulationCell& cell, const ScenarioSpec& spec, Stream& stream);

/// Simulates one randomized trial: patients [0, n) are control, [n, 2n)
/// active. Survivors are censored at the calendar time of the
/// ceil(target_event_fraction * 2n)-th event, capped at max_duration.
Trial simulate_trial(const SimulationCell& cell, const ScenarioSpec& spec, double beta0,
                     int replicate, Stream& stream);

}  // namespace surrosim
