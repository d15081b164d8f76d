#include "apportion/building_estimate.hpp"

#include <algorithm>

#include "apportion/error.hpp"

namespace apportion {

namespace col {
std::string input(std::string_view equipment, PointRole role) {
  return to_string(BindingKey{std::string(equipment), role});
}
std::string derived(std::string_view equipment, std::string_view quantity) {
  std::string s(equipment);
  s += '/';
  s += quantity;
  return s;
}
}  // namespace col

namespace {

using Column = std::vector<Sample>;

Column sum_columns(const std::vector<const Column*>& parts, std::size_t rows) {
  Column out(rows, 0.0);
  for (const auto* p : parts) {
    for (std::size_t i = 0; i < rows; ++i) {
      if (out[i] && (*p)[i]) {
        *out[i] += *(*p)[i];
      } else {
        out[i].reset();
      }
    }
  }
  return out;
}

template <typename F>
Column map_rows(std::size_t rows, std::initializer_list<const Column*> in, F f) {
  Column out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    bool ok = true;
    for (const auto* c : in) ok = ok && (*c)[i].has_value();
    if (ok) out[i] = f(i);
  }
  return out;
}

}  // namespace

BuildingEstimate estimate_building(const EquipmentGraph& graph, const PointBinding& binding,
                                   const TrendSet& trends, const PhysicalConstants& constants) {
  constants.validate();
  require_model_inputs(graph, binding);

  std::vector<NamedSeries> inputs;
  for (const auto& [key, point] : binding.bound) {
    const TimeSeries* s = trends.find(key.equipment, key.role);
    if (!s) throw Error("no trend data for point '" + point + "' (" + to_string(key) + ")");
    inputs.push_back({to_string(key), s});
  }

  BuildingEstimate est;
  est.constants = constants;
  est.frame = align(inputs);
  AlignedFrame& f = est.frame;
  const std::size_t n = f.rows();
  const auto& k = constants;
  const auto& b = graph.building_id;

  const auto note = [&](std::string_view eq, PointRole role, Fallback fb) {
    est.fallbacks.push_back({{std::string(eq), role}, fb});
  };
  const auto in = [&](std::string_view eq, PointRole role) -> const Column* {
    return f.find(col::input(eq, role));
  };

  const Column* oat = in(b, PointRole::OutsideAirTemp);
  const Column* hw = in(b, PointRole::HotWaterSupplyTemp);

  std::vector<const Column*> vav_cooling, vav_heating, econ, ahu_cooling, ahu_heating;

  for (const auto& ahu : graph.ahus) {
    const std::string& a = ahu.id;
    est.ahus.push_back(a);
    const Column& sat = f.column(col::input(a, PointRole::AhuSupplyAirTemp));

    std::vector<std::string> vavs;
    for (const auto* v : graph.children(a)) {
      if (binding.point(v->id, PointRole::ZoneTemp) && binding.point(v->id, PointRole::VavSupplyFlow)) {
        vavs.push_back(v->id);
      } else {
        note(v->id, binding.point(v->id, PointRole::ZoneTemp) ? PointRole::VavSupplyFlow
                                                               : PointRole::ZoneTemp,
             Fallback::ExcludeFromSums);
        est.warnings.push_back("VAV '" + v->id + "' excluded from sums: missing " +
                               (binding.point(v->id, PointRole::ZoneTemp) ? "flow" : "zone temperature"));
      }
    }

    std::vector<const Column*> flows, zones;
    for (const auto& v : vavs) {
      const Column& q = f.column(col::input(v, PointRole::VavSupplyFlow));
      const Column& tz = f.column(col::input(v, PointRole::ZoneTemp));
      flows.push_back(&q);
      zones.push_back(&tz);

      const Column* vsat = in(v, PointRole::VavSupplyAirTemp);
      if (!vsat) {
        note(v, PointRole::VavSupplyAirTemp, Fallback::ParentAhuSupplyAirTemp);
        vsat = &sat;
      }
      f.set_column(col::derived(v, col::kSupplyAir), *vsat);
      const Column& tsa = f.column(col::derived(v, col::kSupplyAir));

      f.set_column(col::derived(v, col::kCooling), map_rows(n, {&q, &tz, &tsa}, [&](std::size_t i) {
                     return vav_cooling_power(*q[i], *tz[i], *tsa[i], k);
                   }));
      vav_cooling.push_back(&f.column(col::derived(v, col::kCooling)));

      const Column* hv = in(v, PointRole::VavHeatingValveCmd);
      if (hv && hw) {
        f.set_column(col::derived(v, col::kHeating),
                     map_rows(n, {hw, &tsa, &q, hv}, [&](std::size_t i) {
                       return vav_heating_power(*(*hw)[i], *tsa[i], *q[i], *(*hv)[i], k);
                     }));
        vav_heating.push_back(&f.column(col::derived(v, col::kHeating)));
        est.reheat_vavs.push_back(v);
      }
    }
    est.included_vavs[a] = vavs;

    f.set_column(col::derived(a, col::kFlowSum), sum_columns(flows, n));
    const Column& qsum = f.column(col::derived(a, col::kFlowSum));

    if (const Column* rat = in(a, PointRole::AhuReturnAirTemp)) {
      f.set_column(col::derived(a, col::kReturnAir), *rat);
    } else {
      note(a, PointRole::AhuReturnAirTemp, Fallback::MeanChildZoneTemp);
      Column m = sum_columns(zones, n);
      for (auto& x : m) {
        if (x) *x /= static_cast<double>(zones.size());
      }
      f.set_column(col::derived(a, col::kReturnAir), std::move(m));
    }
    const Column& tra = f.column(col::derived(a, col::kReturnAir));

    const Column* damper = in(a, PointRole::EconomizerDamperPos);
    if (damper && oat) {
      f.set_column(col::derived(a, col::kMixedAirEstimated),
                   map_rows(n, {oat, &tra, damper}, [&](std::size_t i) {
                     return estimate_mixed_air(*(*oat)[i], *tra[i], *(*damper)[i]);
                   }));
    }
    if (const Column* mat = in(a, PointRole::AhuMixedAirTemp)) {
      f.set_column(col::derived(a, col::kMixedAir), *mat);
    } else {
      note(a, PointRole::AhuMixedAirTemp, Fallback::MixedAirFromOutsideAir);
      f.set_column(col::derived(a, col::kMixedAir),
                   f.column(col::derived(a, col::kMixedAirEstimated)));
    }
    const Column& tma = f.column(col::derived(a, col::kMixedAir));

    f.set_column(col::derived(a, col::kEconomizer),
                 map_rows(n, {&qsum, &tra, &tma}, [&](std::size_t i) {
                   return economizer_term(*qsum[i], *tra[i], *tma[i], k);
                 }));
    Column cool = map_rows(n, {&tma, &sat, &qsum}, [&](std::size_t i) {
      return ahu_power(*tma[i], *sat[i], *qsum[i], k).cooling;
    });
    Column heat = map_rows(n, {&tma, &sat, &qsum}, [&](std::size_t i) {
      return ahu_power(*tma[i], *sat[i], *qsum[i], k).heating;
    });
    f.set_column(col::derived(a, col::kCooling), std::move(cool));
    f.set_column(col::derived(a, col::kHeating), std::move(heat));
    econ.push_back(&f.column(col::derived(a, col::kEconomizer)));
    ahu_cooling.push_back(&f.column(col::derived(a, col::kCooling)));
    ahu_heating.push_back(&f.column(col::derived(a, col::kHeating)));
  }

  for (const auto& v : graph.vavs) {
    if (v.unmapped) {
      note(v.id, PointRole::VavSupplyFlow, Fallback::ExcludeFromSums);
      est.warnings.push_back("VAV '" + v.id + "' has no AHU and is excluded from sums");
    }
  }
  if (!hw && binding.fallback(b, PointRole::HotWaterSupplyTemp)) {
    note(b, PointRole::HotWaterSupplyTemp, Fallback::NoReheat);
  }

  // A row is a cooling row when no AHU heats and at least one cools.
  Column mode(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool ok = true, any_cooling = false, any_heating = false;
    for (std::size_t j = 0; j < ahu_cooling.size(); ++j) {
      const auto& tma = f.column(col::derived(est.ahus[j], col::kMixedAir));
      const auto& sat = f.column(col::input(est.ahus[j], PointRole::AhuSupplyAirTemp));
      if (!tma[i] || !sat[i]) {
        ok = false;
        break;
      }
      const int m = ahu_mode(*tma[i], *sat[i], k);
      any_cooling = any_cooling || m > 0;
      any_heating = any_heating || m < 0;
    }
    if (ok) mode[i] = (any_cooling && !any_heating) ? 1.0 : 0.0;
  }

  f.set_column(std::string(col::kSumVavCooling), sum_columns(vav_cooling, n));
  f.set_column(std::string(col::kSumEconomizer), sum_columns(econ, n));
  f.set_column(std::string(col::kSumAhuCooling), sum_columns(ahu_cooling, n));
  f.set_column(std::string(col::kSumAhuHeating), sum_columns(ahu_heating, n));
  f.set_column(std::string(col::kSumVavHeating), sum_columns(vav_heating, n));
  f.set_column(std::string(col::kMeasuredCooling),
               f.column(col::input(b, PointRole::BuildingCoolingPower)));
  f.set_column(std::string(col::kMeasuredHeating),
               f.column(col::input(b, PointRole::BuildingHeatingPower)));
  f.set_column(std::string(col::kCoolingModeRow), std::move(mode));
  return est;
}

TimeSeries frame_series(const AlignedFrame& frame, std::string_view column, Unit unit) {
  return TimeSeries(std::string(column), frame.start(), frame.interval(), frame.column(column), unit);
}

}  // namespace apportion
