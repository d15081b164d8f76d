#pragma once

#include <array>
#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "apportion/time.hpp"
#include "apportion/timeseries.hpp"

namespace apportion {

enum class PointRole {
  ZoneTemp,
  VavSupplyFlow,
  VavSupplyFlowSetpoint,
  VavSupplyAirTemp,
  VavHeatingValveCmd,
  VavMinFlow,
  ZoneUpperLimit,
  OccupiedCmd,
  AhuSupplyAirTemp,
  AhuMixedAirTemp,
  AhuReturnAirTemp,
  AhuCoolingValveCmd,
  AhuHeatingValveCmd,
  EconomizerDamperPos,
  OutsideAirTemp,
  HotWaterSupplyTemp,
  BuildingCoolingPower,
  BuildingHeatingPower,
};

inline constexpr std::array kAllRoles = {
    PointRole::ZoneTemp,           PointRole::VavSupplyFlow,
    PointRole::VavSupplyFlowSetpoint, PointRole::VavSupplyAirTemp,
    PointRole::VavHeatingValveCmd, PointRole::VavMinFlow,
    PointRole::ZoneUpperLimit,     PointRole::OccupiedCmd,
    PointRole::AhuSupplyAirTemp,   PointRole::AhuMixedAirTemp,
    PointRole::AhuReturnAirTemp,   PointRole::AhuCoolingValveCmd,
    PointRole::AhuHeatingValveCmd, PointRole::EconomizerDamperPos,
    PointRole::OutsideAirTemp,     PointRole::HotWaterSupplyTemp,
    PointRole::BuildingCoolingPower, PointRole::BuildingHeatingPower,
};

std::string_view to_string(PointRole role);
std::optional<PointRole> parse_role(std::string_view name);

/// Unit a role is stored in after ingestion. Actuator commands are fractions;
/// they may arrive as percent.
Unit expected_unit(PointRole role);
bool unit_accepted(PointRole role, Unit unit);

enum class EquipmentKind { Building, Ahu, Vav };

/// Which kind of equipment a role belongs to.
EquipmentKind role_owner(PointRole role);

struct AhuNode {
  std::string id;
};

struct VavNode {
  std::string id;
  std::optional<std::string> parent_ahu;
  std::string zone;
  std::optional<double> min_flow_cfm;
  std::optional<double> upper_limit_f;
  /// No parent could be assigned; excluded from all sums.
  bool unmapped = false;
};

/// Weekly occupancy window in building-local time (fixed UTC offset).
struct OccupancySchedule {
  int start_minute = 7 * 60;
  int end_minute = 19 * 60;
  bool weekdays_only = true;
  int utc_offset_minutes = 0;

  bool occupied(Timestamp t) const;
};

struct MeterPoints {
  std::string cooling;
  std::string heating;
};

enum class UnmappedVavPolicy { SingleAhu, Exclude };

/// Maps raw point names to (equipment, role). `*` matches any run of
/// characters, `?` one character and `{name}` one or more of [A-Za-z0-9_-];
/// captured names may be substituted into the equipment template.
struct PatternRule {
  std::string pattern;
  std::string equipment;
  PointRole role;
};

/// Two-level tree building -> AHU -> VAV with per-equipment configuration.
class EquipmentGraph {
 public:
  std::string building_id;
  std::vector<AhuNode> ahus;
  std::vector<VavNode> vavs;
  MeterPoints meters;
  OccupancySchedule schedule;
  std::vector<std::string> warnings;

  const AhuNode* find_ahu(std::string_view id) const;
  const VavNode* find_vav(std::string_view id) const;
  /// Mapped VAVs served by an AHU, in declaration order.
  std::vector<const VavNode*> children(std::string_view ahu_id) const;
  std::optional<EquipmentKind> kind_of(std::string_view id) const;

  std::size_t zone_count() const;
};

struct Topology {
  EquipmentGraph graph;
  std::vector<PatternRule> rules;
};

/// Parses and validates the JSON topology document (schema in docs/formats.md).
Topology parse_topology(std::string_view json_text);
/// Reads a topology file; throws IoError when unreadable.
Topology load_topology(const std::filesystem::path& path);
EquipmentGraph load_metadata(const std::filesystem::path& path);

struct PointInfo {
  std::string point_id;
  std::string raw_name;
  Unit unit;
};

/// CSV `point_id,raw_name,unit`.
std::vector<PointInfo> read_point_inventory(const std::filesystem::path& path);
std::vector<PointInfo> parse_point_inventory(std::string_view csv_text);

struct BindingKey {
  std::string equipment;
  PointRole role;

  auto operator<=>(const BindingKey&) const = default;
  bool operator==(const BindingKey&) const = default;
};

std::string to_string(const BindingKey& key);

enum class Fallback {
  None,                    ///< required, no substitute: the model refuses to run
  ParentAhuSupplyAirTemp,  ///< VAV supply-air temp <- serving AHU supply-air temp
  MeanChildZoneTemp,       ///< AHU return-air temp <- mean of child zone temps
  MixedAirFromOutsideAir,  ///< AHU mixed-air temp <- outside air + damper mixing
  ExcludeFromSums,         ///< VAV left out of AHU flow and power sums
  OccupancySchedule,       ///< occupancy <- weekly schedule
  NoReheat,                ///< VAV treated as having no reheat coil
  ConfiguredConstant,      ///< constant from the topology file
  RuleSkipped,             ///< only fault rules use it; those rules are inconclusive
};

std::string_view to_string(Fallback fallback);

struct UnresolvedRole {
  BindingKey key;
  Fallback fallback;
};

class PointBinding {
 public:
  std::map<BindingKey, std::string> bound;
  std::map<std::string, PointInfo> points;  ///< bound point id -> inventory entry
  std::vector<UnresolvedRole> unresolved;
  std::vector<std::string> unmatched_points;

  const std::string* point(std::string_view equipment, PointRole role) const;
  std::optional<Fallback> fallback(std::string_view equipment, PointRole role) const;
  /// Reverse lookup of a point id's key.
  const BindingKey* key_of(std::string_view point_id) const;

 private:
  friend PointBinding bind_points(const EquipmentGraph&, std::span<const PointInfo>,
                                  std::span<const PatternRule>);
  std::map<std::string, BindingKey, std::less<>> by_point_;
};

/// Deterministic first-match-wins binding of the inventory to roles.
/// Throws Error on a point claimed with conflicting roles, a unit mismatch or
/// two points bound to the same (equipment, role).
PointBinding bind_points(const EquipmentGraph& graph, std::span<const PointInfo> inventory,
                         std::span<const PatternRule> rules);

/// Throws Error naming every (equipment, role) that the energy model needs and
/// that is neither bound nor covered by a fallback.
void require_model_inputs(const EquipmentGraph& graph, const PointBinding& binding);

}  // namespace apportion
