#include "apportion/energy.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>

#include "apportion/error.hpp"

namespace apportion {

namespace {

void check_aligned(std::initializer_list<const TimeSeries*> series) {
  const TimeSeries& first = **series.begin();
  for (const auto* s : series) {
    if (s->start() != first.start() || s->interval() != first.interval() ||
        s->size() != first.size()) {
      throw Error("misaligned series: '" + s->point_id() + "' vs '" + first.point_id() + "'");
    }
  }
}

template <typename F>
std::vector<Sample> zip(std::initializer_list<const TimeSeries*> series, F f) {
  check_aligned(series);
  const std::size_t n = (*series.begin())->size();
  std::vector<Sample> out(n);
  std::vector<double> args(series.size());
  for (std::size_t i = 0; i < n; ++i) {
    bool ok = true;
    std::size_t j = 0;
    for (const auto* s : series) {
      const Sample& v = (*s)[i];
      if (!v) {
        ok = false;
        break;
      }
      args[j++] = *v;
    }
    if (ok) out[i] = f(args);
  }
  return out;
}

TimeSeries like(const TimeSeries& shape, std::string id, std::vector<Sample> values, Unit unit) {
  return TimeSeries(std::move(id), shape.start(), shape.interval(), std::move(values), unit);
}

}  // namespace

void PhysicalConstants::validate() const {
  if (!(air_power_k > 0.0)) throw Error("air_power_k must be positive");
  if (!(deadband_f >= 0.0)) throw Error("deadband must be non-negative");
}

double vav_cooling_power(double flow_cfm, double t_zone, double t_supply,
                         const PhysicalConstants& c) {
  return std::max(0.0, c.air_power_k * flow_cfm * (t_zone - t_supply) / kBtuPerMmbtu);
}

double estimate_mixed_air(double t_oa, double t_ra, double damper) {
  if (!(damper >= 0.0 && damper <= 1.0)) {
    throw Error("damper position " + std::to_string(damper) + " outside [0, 1]");
  }
  return damper * t_oa + (1.0 - damper) * t_ra;
}

double economizer_term(double flow_sum_cfm, double t_return, double t_mixed,
                       const PhysicalConstants& c) {
  return c.air_power_k * flow_sum_cfm * (t_return - t_mixed) / kBtuPerMmbtu;
}

int ahu_mode(double t_mixed, double t_supply, const PhysicalConstants& c) {
  const double dt = t_mixed - t_supply;
  if (dt >= c.deadband_f && dt > 0.0) return 1;
  if (dt <= -c.deadband_f && dt < 0.0) return -1;
  return 0;
}

AhuInstant ahu_power(double t_mixed, double t_supply, double flow_sum_cfm,
                     const PhysicalConstants& c) {
  const double p = c.air_power_k * flow_sum_cfm * (t_mixed - t_supply) / kBtuPerMmbtu;
  switch (ahu_mode(t_mixed, t_supply, c)) {
    case 1: return {std::max(0.0, p), 0.0};
    case -1: return {0.0, std::max(0.0, -p)};
    default: return {};
  }
}

double vav_heating_power(double t_hot_water, double t_supply_air, double flow_cfm,
                         double heating_valve, const PhysicalConstants& c) {
  return std::max(0.0, c.air_power_k * (t_hot_water - t_supply_air) * flow_cfm * heating_valve /
                           kBtuPerMmbtu);
}

PowerSeries vav_cooling_power(const std::string& equipment, const TimeSeries& flow,
                              const TimeSeries& t_zone, const TimeSeries& t_supply,
                              const PhysicalConstants& c) {
  auto v = zip({&flow, &t_zone, &t_supply}, [&](const std::vector<double>& a) {
    return vav_cooling_power(a[0], a[1], a[2], c);
  });
  return {equipment, Mode::Cooling,
          like(flow, equipment + ".cooling", std::move(v), Unit::MmbtuPerHour)};
}

TimeSeries estimate_mixed_air(const std::string& point_id, const TimeSeries& t_oa,
                              const TimeSeries& t_ra, const TimeSeries& damper) {
  auto v = zip({&t_oa, &t_ra, &damper}, [](const std::vector<double>& a) {
    return estimate_mixed_air(a[0], a[1], a[2]);
  });
  return like(t_oa, point_id, std::move(v), Unit::Fahrenheit);
}

TimeSeries economizer_term(const std::string& point_id, const TimeSeries& flow_sum,
                           const TimeSeries& t_return, const TimeSeries& t_mixed,
                           const PhysicalConstants& c) {
  auto v = zip({&flow_sum, &t_return, &t_mixed}, [&](const std::vector<double>& a) {
    return economizer_term(a[0], a[1], a[2], c);
  });
  return like(flow_sum, point_id, std::move(v), Unit::MmbtuPerHour);
}

AhuPower ahu_power(const std::string& equipment, const TimeSeries& t_mixed,
                   const TimeSeries& t_supply, const TimeSeries& flow_sum,
                   const PhysicalConstants& c) {
  auto cooling = zip({&t_mixed, &t_supply, &flow_sum}, [&](const std::vector<double>& a) {
    return ahu_power(a[0], a[1], a[2], c).cooling;
  });
  auto heating = zip({&t_mixed, &t_supply, &flow_sum}, [&](const std::vector<double>& a) {
    return ahu_power(a[0], a[1], a[2], c).heating;
  });
  return {{equipment, Mode::Cooling,
           like(flow_sum, equipment + ".cooling", std::move(cooling), Unit::MmbtuPerHour)},
          {equipment, Mode::Heating,
           like(flow_sum, equipment + ".heating", std::move(heating), Unit::MmbtuPerHour)}};
}

PowerSeries vav_heating_power(const std::string& equipment, const TimeSeries& t_hot_water,
                              const TimeSeries& t_supply_air, const TimeSeries& flow,
                              const TimeSeries& heating_valve, const PhysicalConstants& c) {
  auto v = zip({&t_hot_water, &t_supply_air, &flow, &heating_valve},
               [&](const std::vector<double>& a) {
                 return vav_heating_power(a[0], a[1], a[2], a[3], c);
               });
  return {equipment, Mode::Heating,
          like(flow, equipment + ".heating", std::move(v), Unit::MmbtuPerHour)};
}

}  // namespace apportion
