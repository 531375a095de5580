#pragma once

#include "fhsim/error.hpp"
#include "fhsim/time.hpp"

namespace fhsim {

// Per-device ON/OFF wattages for one OLT line card and one ONU.
struct PowerModel {
  double p_olt_on = 6.0;
  double p_olt_off = 4.2;
  double p_onu_on = 3.2;
  double p_onu_off = 2.3;

  bool valid() const {
    return p_olt_on >= 0 && p_olt_off >= 0 && p_onu_on >= 0 && p_onu_off >= 0 &&
           p_olt_off <= p_olt_on && p_onu_off <= p_onu_on;
  }
};

struct DutyCycle {
  double t_on_s = 0.0;
  double t_off_s = 0.0;

  bool valid() const { return t_on_s >= 0 && t_off_s >= 0 && (t_on_s + t_off_s) > 0; }
};

// Power with both LC-ONU pairs on.
inline double power_all_on(const PowerModel& m) {
  return 2.0 * (m.p_olt_on + m.p_onu_on);
}

// Power with one pair on and the other asleep.
inline double power_one_pair_off(const PowerModel& m) {
  return m.p_olt_on + m.p_onu_on + m.p_olt_off + m.p_onu_off;
}

// Fractional saving of average power against the always-on baseline:
//   1 - (T_on*P_on + T_off*P_off) / (P_on * (T_on + T_off))
inline double energy_savings(const PowerModel& m, const DutyCycle& d) {
  const double p_on = power_all_on(m);
  const double p_off = power_one_pair_off(m);
  const double total = d.t_on_s + d.t_off_s;
  if (p_on <= 0.0) return 0.0;
  return 1.0 - (d.t_on_s * p_on + d.t_off_s * p_off) / (p_on * total);
}

}  // namespace fhsim
