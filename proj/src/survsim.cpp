#include "surrosim/survsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "surrosim/quadrature.hpp"

namespace surrosim {

namespace {

constexpr double kAbsTol = 1e-10;
constexpr double kRelTol = 1e-8;
constexpr double kRootTol = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string describe(const HazardParams& p) {
  std::ostringstream os;
  os << "gamma=" << p.gamma << " beta0=" << p.beta0 << " beta1=" << p.beta1
     << " alpha=" << p.alpha << " trt=" << p.trt << " ks=" << p.trajectory.ks
     << " kg=" << p.trajectory.kg;
  return os.str();
}

// Right end of the panel that starts at `a` ([0,1], [1,2], [2,4], ...).
double next_panel_end(double a) { return a < 1.0 ? 1.0 : 2.0 * a; }

}  // namespace

double hazard(const HazardParams& p, double t) {
  double linear = p.beta0 + p.beta1 * p.trt;
  if (p.alpha != 0.0) linear += p.alpha * biexp_unchecked(p.trajectory, t);
  const double shape = p.gamma == 1.0 ? 1.0 : p.gamma * std::pow(t, p.gamma - 1.0);
  return shape * std::exp(linear);
}

double integrate_hazard(const HazardParams& p, double a, double b) {
  auto f = [&p](double s) { return hazard(p, s); };
  const auto r = numeric::integrate(f, a, b, kAbsTol, kRelTol);
  if (std::isnan(r.value) || (!r.converged && std::isfinite(r.value))) {
    std::ostringstream os;
    os << "cumulative hazard quadrature did not converge on [" << a << ", " << b
       << "] (" << describe(p) << ")";
    throw IntegrationError(os.str());
  }
  return r.value;
}

double cumulative_hazard(const HazardParams& p, double t) {
  if (t <= 0.0) return 0.0;
  double total = 0.0;
  double a = 0.0;
  while (a < t) {
    const double b = std::min(next_panel_end(a), t);
    total += integrate_hazard(p, a, b);
    if (std::isinf(total)) return total;
    a = b;
  }
  return total;
}

EventDraw invert_cumulative_hazard(const HazardParams& p, double target, double t_max) {
  if (!(t_max > 0.0)) throw RootFindError("t_max must be positive");

  // Grow the bracket panel by panel.
  double lo = 0.0, h_lo = 0.0;
  double hi = std::min(1.0, t_max);
  double h_hi = integrate_hazard(p, lo, hi);
  while (h_hi < target) {
    if (hi >= t_max) return {t_max, false, target};
    if (hi > 1e15)
      throw RootFindError("cumulative hazard stays below " + std::to_string(target) + " (" +
                          describe(p) + ")");
    lo = hi;
    h_lo = h_hi;
    hi = std::min(next_panel_end(lo), t_max);
    h_hi = h_lo + integrate_hazard(p, lo, hi);
  }
  if (h_hi == target) return {hi, true, target};

  // Illinois-modified regula falsi with bisection fallback; every H value is
  // accumulated from the current lower end of the bracket.
  double f_lo = h_lo - target;
  double f_hi = h_hi - target;
  double w_lo = f_lo, w_hi = f_hi;  // Illinois-weighted copies
  int side = 0;
  for (int iter = 0; iter < 400; ++iter) {
    double c = 0.5 * (lo + hi);
    if (std::isfinite(w_hi) && iter % 8 != 7) {
      const double s = hi - w_hi * (hi - lo) / (w_hi - w_lo);
      if (s > lo && s < hi) c = s;
    }
    if (!(c > lo && c < hi)) {
      // Bracket is down to adjacent doubles.
      return {std::abs(f_lo) <= std::abs(f_hi) ? lo : hi, true, target};
    }
    const double h_c = h_lo + integrate_hazard(p, lo, c);
    const double f_c = h_c - target;
    const double tol = std::max(std::min(kRootTol, 1e-8 * hazard(p, c)),
                                8.0 * std::numeric_limits<double>::epsilon() * target);
    if (std::abs(f_c) <= tol) return {c, true, target};
    if (f_c < 0.0) {
      lo = c;
      h_lo = h_c;
      f_lo = w_lo = f_c;
      if (side == -1) w_hi *= 0.5;
      side = -1;
    } else {
      hi = c;
      f_hi = w_hi = f_c;
      if (side == 1) w_lo *= 0.5;
      side = 1;
    }
  }
  throw RootFindError("event-time root refinement did not converge (" + describe(p) + ")");
}

EventDraw sample_event_time(const HazardParams& p, Stream& stream, double t_max) {
  const double u = stream.uniform();
  return invert_cumulative_hazard(p, -std::log(u), t_max);
}

namespace {

struct PilotPatient {
  double early = 0.0;  // cumulative hazard at t_star with beta0 = 0
  double end = 0.0;    // cumulative hazard at max_duration with beta0 = 0
};

double event_probability(const std::vector<PilotPatient>& pilot, double beta0, bool at_end) {
  const double scale = std::exp(beta0);
  double sum = 0.0;
  for (const auto& pp : pilot) {
    const double h = at_end ? pp.end : pp.early;
    sum += std::isinf(h) ? 1.0 : -std::expm1(-scale * h);
  }
  return sum / static_cast<double>(pilot.size());
}

// Smallest beta0 in [lo, hi] with probability >= level (probability is
// increasing in beta0). Caller guarantees prob(hi) >= level.
double solve_beta0(const std::vector<PilotPatient>& pilot, double level, double lo, double hi,
                   bool at_end) {
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (event_probability(pilot, mid, at_end) >= level) hi = mid;
    else lo = mid;
  }
  return hi;
}

}  // namespace

Calibration calibrate_beta0(const SimulationCell& cell, const ScenarioSpec& spec, Stream& stream) {
  constexpr double kLower = -15.0, kUpper = 0.0;
  std::vector<PilotPatient> pilot(static_cast<std::size_t>(spec.pilot_size));
  const int n_control = spec.pilot_size / 2;
  for (int i = 0; i < spec.pilot_size; ++i) {
    const bool active = i >= n_control;
    HazardParams hp;
    hp.gamma = spec.gamma;
    hp.beta1 = cell.beta1;
    hp.alpha = cell.alpha;
    hp.trt = active ? 1 : 0;
    hp.trajectory = sample_params(stream, active ? cell.ks_active_mean : cell.ks_control_mean,
                                  active ? cell.kg_active_mean : cell.kg_control_mean,
                                  spec.omega_ks, spec.omega_kg, spec.lognormal_anchor);
    pilot[i].early = cumulative_hazard(hp, spec.t_star);
    pilot[i].end = std::isinf(spec.max_duration) ? kInf : cumulative_hazard(hp, spec.max_duration);
  }

  Calibration cal;
  auto finish = [&](double b) {
    cal.beta0 = b;
    cal.early_fraction = event_probability(pilot, b, false);
    cal.horizon_fraction = event_probability(pilot, b, true);
    return cal;
  };
  auto warn = [&](const std::string& msg) {
    cal.warning = true;
    cal.note += cal.note.empty() ? msg : "; " + msg;
  };

  if (spec.beta0_override) {
    finish(*spec.beta0_override);
    if (cal.early_fraction >= spec.max_early_event_fraction)
      warn("override gives early-event fraction above bound");
    if (cal.horizon_fraction < spec.target_event_fraction)
      warn("override cannot reach target event fraction by max_duration");
    if (cal.note.empty()) cal.note = "beta0 override";
    return cal;
  }

  double beta0;
  if (event_probability(pilot, kUpper, false) < spec.early_event_target) {
    beta0 = kUpper;
    warn("early-event target unreachable; beta0 at upper bound");
  } else if (event_probability(pilot, kLower, false) > spec.early_event_target) {
    beta0 = kLower;
    warn("early-event target exceeded at beta0 lower bound");
  } else {
    beta0 = solve_beta0(pilot, spec.early_event_target, kLower, kUpper, false);
  }

  if (event_probability(pilot, beta0, true) < spec.target_event_fraction) {
    if (event_probability(pilot, kUpper, true) < spec.target_event_fraction)
      throw InfeasibleCell("cell " + std::to_string(cell.cell_index) +
                           ": target event fraction unreachable by max_duration");
    const double needed = solve_beta0(pilot, spec.target_event_fraction, beta0, kUpper, true);
    if (event_probability(pilot, needed, false) >= spec.max_early_event_fraction)
      throw InfeasibleCell("cell " + std::to_string(cell.cell_index) +
                           ": reaching the target event fraction needs too many early events");
    beta0 = needed;
    warn("beta0 raised so the target event fraction is reached by max_duration");
  }
  return finish(beta0);
}

Trial simulate_trial(const SimulationCell& cell, const ScenarioSpec& spec, double beta0,
                     int replicate, Stream& stream) {
  Trial trial;
  trial.cell = cell;
  trial.replicate = replicate;
  trial.beta0 = beta0;
  const int n_total = 2 * spec.n_per_arm;
  trial.patients.resize(static_cast<std::size_t>(n_total));

  std::vector<double> event_times;
  event_times.reserve(trial.patients.size());
  for (int i = 0; i < n_total; ++i) {
    Patient& pt = trial.patients[i];
    pt.id = i;
    pt.arm = i < spec.n_per_arm ? 0 : 1;
    const bool active = pt.arm == 1;
    pt.trajectory = sample_params(stream, active ? cell.ks_active_mean : cell.ks_control_mean,
                                  active ? cell.kg_active_mean : cell.kg_control_mean,
                                  spec.omega_ks, spec.omega_kg, spec.lognormal_anchor);
    HazardParams hp;
    hp.gamma = spec.gamma;
    hp.beta0 = beta0;
    hp.beta1 = cell.beta1;
    hp.alpha = cell.alpha;
    hp.trt = pt.arm;
    hp.trajectory = pt.trajectory;
    const EventDraw draw = sample_event_time(hp, stream, spec.max_duration);
    pt.time = draw.time;
    pt.event = draw.event;
    if (pt.event) event_times.push_back(pt.time);
    pt.surrogate = measure_surrogate(pt.trajectory, spec.t_star, spec.sigma_err, stream);
  }

  const auto needed = static_cast<std::size_t>(
      std::ceil(spec.target_event_fraction * n_total - 1e-9));
  trial.censor_time = spec.max_duration;
  if (needed >= 1 && event_times.size() >= needed) {
    std::nth_element(event_times.begin(), event_times.begin() + (needed - 1), event_times.end());
    trial.censor_time = std::min(event_times[needed - 1], spec.max_duration);
  }
  for (auto& pt : trial.patients) {
    if (pt.event && pt.time <= trial.censor_time) continue;
    pt.time = trial.censor_time;
    pt.event = false;
  }
  if (std::isinf(trial.censor_time)) {
    // Unbounded follow-up: every patient has an observed event.
    double last = 0.0;
    for (const auto& pt : trial.patients) last = std::max(last, pt.time);
    trial.censor_time = last;
  }
  return trial;
}

}  // namespace surrosim
