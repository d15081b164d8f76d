#pragma once

#include <string>

#include "apportion/timeseries.hpp"

namespace apportion {

/// Heat-transfer constants in US customary units.
struct PhysicalConstants {
  /// Density x specific heat of standard air x unit conversion, BTU/(hr CFM degF).
  double air_power_k = 1.08;
  /// AHU mode deadband on (mixed - supply) temperature, degF.
  double deadband_f = 0.5;

  void validate() const;
};

inline constexpr double kBtuPerMmbtu = 1e6;

enum class Mode { Cooling, Heating };

/// Thermal power of one piece of equipment in MMBTU/hr, never negative.
struct PowerSeries {
  std::string equipment;
  Mode mode;
  TimeSeries series;
};

// Instantaneous kernels, MMBTU/hr.

/// k q (t_zone - t_supply), clamped at zero.
double vav_cooling_power(double flow_cfm, double t_zone, double t_supply,
                         const PhysicalConstants& c = {});
/// Convex outside/return mix; throws Error for a damper outside [0, 1].
double estimate_mixed_air(double t_oa, double t_ra, double damper);
/// Signed k q_sum (t_return - t_mixed).
double economizer_term(double flow_sum_cfm, double t_return, double t_mixed,
                       const PhysicalConstants& c = {});

struct AhuInstant {
  double cooling = 0.0;
  double heating = 0.0;
};
/// Splits k q_sum (t_mixed - t_supply) by sign, with a deadband on the
/// temperature difference inside which the AHU is idle.
AhuInstant ahu_power(double t_mixed, double t_supply, double flow_sum_cfm,
                     const PhysicalConstants& c = {});
/// k (t_hot_water - t_supply_air) q h_valve, clamped at zero.
double vav_heating_power(double t_hot_water, double t_supply_air, double flow_cfm,
                         double heating_valve, const PhysicalConstants& c = {});

/// +1 cooling, -1 heating, 0 idle.
int ahu_mode(double t_mixed, double t_supply, const PhysicalConstants& c = {});

// Series forms. Inputs must share start, interval and length ("misaligned
// series" otherwise); a gap in any input makes a gap in the output.

PowerSeries vav_cooling_power(const std::string& equipment, const TimeSeries& flow,
                              const TimeSeries& t_zone, const TimeSeries& t_supply,
                              const PhysicalConstants& c = {});
TimeSeries estimate_mixed_air(const std::string& point_id, const TimeSeries& t_oa,
                              const TimeSeries& t_ra, const TimeSeries& damper);
TimeSeries economizer_term(const std::string& point_id, const TimeSeries& flow_sum,
                           const TimeSeries& t_return, const TimeSeries& t_mixed,
                           const PhysicalConstants& c = {});

struct AhuPower {
  PowerSeries cooling;
  PowerSeries heating;
};
AhuPower ahu_power(const std::string& equipment, const TimeSeries& t_mixed,
                   const TimeSeries& t_supply, const TimeSeries& flow_sum,
                   const PhysicalConstants& c = {});
PowerSeries vav_heating_power(const std::string& equipment, const TimeSeries& t_hot_water,
                              const TimeSeries& t_supply_air, const TimeSeries& flow,
                              const TimeSeries& heating_valve, const PhysicalConstants& c = {});

}  // namespace apportion
