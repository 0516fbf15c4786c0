#pragma once

// All simulation times are in weeks; rate parameters are per week.
namespace surrosim {

inline constexpr double kDaysPerMonth = 30.4375;
inline constexpr double kWeeksPerMonth = kDaysPerMonth / 7.0;

constexpr double months_to_weeks(double months) { return months * kWeeksPerMonth; }

}  // namespace surrosim
