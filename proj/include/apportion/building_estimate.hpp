#pragma once

#include <map>
#include <string>
#include <vector>

#include "apportion/building_model.hpp"
#include "apportion/energy.hpp"
#include "apportion/ingest.hpp"
#include "apportion/timeseries.hpp"

namespace apportion {

/// Column naming inside BuildingEstimate::frame.
namespace col {
/// Bound input, e.g. "AHU1/AhuSupplyAirTemp".
std::string input(std::string_view equipment, PointRole role);
/// Derived per-equipment quantity, e.g. "AHU1/cooling".
std::string derived(std::string_view equipment, std::string_view quantity);

inline constexpr std::string_view kFlowSum = "flow_sum";
inline constexpr std::string_view kMixedAir = "mixed_air";
inline constexpr std::string_view kMixedAirEstimated = "mixed_air_estimated";
inline constexpr std::string_view kReturnAir = "return_air";
inline constexpr std::string_view kEconomizer = "economizer";
inline constexpr std::string_view kCooling = "cooling";
inline constexpr std::string_view kHeating = "heating";
inline constexpr std::string_view kSupplyAir = "supply_air";

inline constexpr std::string_view kSumVavCooling = "sum_vav_cooling";
inline constexpr std::string_view kSumEconomizer = "sum_economizer";
inline constexpr std::string_view kSumAhuCooling = "sum_ahu_cooling";
inline constexpr std::string_view kSumAhuHeating = "sum_ahu_heating";
inline constexpr std::string_view kSumVavHeating = "sum_vav_heating";
inline constexpr std::string_view kMeasuredCooling = "measured_cooling";
inline constexpr std::string_view kMeasuredHeating = "measured_heating";
/// 1 when no AHU is heating and at least one is cooling, else 0.
inline constexpr std::string_view kCoolingModeRow = "cooling_mode_row";
}  // namespace col

struct FallbackUse {
  BindingKey key;
  Fallback fallback;
};

/// Physical power estimates for the whole building on one grid.
struct BuildingEstimate {
  AlignedFrame frame;
  PhysicalConstants constants;
  std::vector<std::string> ahus;
  /// VAVs that contribute to each AHU's flow and power sums.
  std::map<std::string, std::vector<std::string>> included_vavs;
  std::vector<std::string> reheat_vavs;
  std::vector<FallbackUse> fallbacks;
  std::vector<std::string> warnings;

  bool has_reheat() const { return !reheat_vavs.empty(); }
};

/// Aligns every bound input and derives VAV cooling, AHU cooling/heating, the
/// economizer term, VAV reheat and their building sums. Missing inputs are
/// replaced per the binding's fallbacks and every substitution is logged.
/// Throws Error when a required input is missing or the inputs do not overlap.
BuildingEstimate estimate_building(const EquipmentGraph& graph, const PointBinding& binding,
                                   const TrendSet& trends, const PhysicalConstants& constants = {});

/// Extracts a frame column as a series.
TimeSeries frame_series(const AlignedFrame& frame, std::string_view column, Unit unit);

}  // namespace apportion
