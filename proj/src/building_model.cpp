#include "apportion/building_model.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "apportion/error.hpp"

namespace apportion {

namespace {

struct RoleInfo {
  PointRole role;
  std::string_view name;
  Unit unit;
  EquipmentKind owner;
};

constexpr std::array<RoleInfo, kAllRoles.size()> kRoleTable{{
    {PointRole::ZoneTemp, "ZoneTemp", Unit::Fahrenheit, EquipmentKind::Vav},
    {PointRole::VavSupplyFlow, "VavSupplyFlow", Unit::Cfm, EquipmentKind::Vav},
    {PointRole::VavSupplyFlowSetpoint, "VavSupplyFlowSetpoint", Unit::Cfm, EquipmentKind::Vav},
    {PointRole::VavSupplyAirTemp, "VavSupplyAirTemp", Unit::Fahrenheit, EquipmentKind::Vav},
    {PointRole::VavHeatingValveCmd, "VavHeatingValveCmd", Unit::Fraction, EquipmentKind::Vav},
    {PointRole::VavMinFlow, "VavMinFlow", Unit::Cfm, EquipmentKind::Vav},
    {PointRole::ZoneUpperLimit, "ZoneUpperLimit", Unit::Fahrenheit, EquipmentKind::Vav},
    {PointRole::OccupiedCmd, "OccupiedCmd", Unit::Boolean, EquipmentKind::Vav},
    {PointRole::AhuSupplyAirTemp, "AhuSupplyAirTemp", Unit::Fahrenheit, EquipmentKind::Ahu},
    {PointRole::AhuMixedAirTemp, "AhuMixedAirTemp", Unit::Fahrenheit, EquipmentKind::Ahu},
    {PointRole::AhuReturnAirTemp, "AhuReturnAirTemp", Unit::Fahrenheit, EquipmentKind::Ahu},
    {PointRole::AhuCoolingValveCmd, "AhuCoolingValveCmd", Unit::Fraction, EquipmentKind::Ahu},
    {PointRole::AhuHeatingValveCmd, "AhuHeatingValveCmd", Unit::Fraction, EquipmentKind::Ahu},
    {PointRole::EconomizerDamperPos, "EconomizerDamperPos", Unit::Fraction, EquipmentKind::Ahu},
    {PointRole::OutsideAirTemp, "OutsideAirTemp", Unit::Fahrenheit, EquipmentKind::Building},
    {PointRole::HotWaterSupplyTemp, "HotWaterSupplyTemp", Unit::Fahrenheit, EquipmentKind::Building},
    {PointRole::BuildingCoolingPower, "BuildingCoolingPower", Unit::MmbtuPerHour, EquipmentKind::Building},
    {PointRole::BuildingHeatingPower, "BuildingHeatingPower", Unit::MmbtuPerHour, EquipmentKind::Building},
}};

const RoleInfo& info(PointRole role) {
  return kRoleTable[static_cast<std::size_t>(role)];
}

std::string kind_name(EquipmentKind k) {
  switch (k) {
    case EquipmentKind::Building: return "building";
    case EquipmentKind::Ahu: return "AHU";
    case EquipmentKind::Vav: return "VAV";
  }
  return "?";
}

// Compiled form of a PatternRule.
struct CompiledRule {
  std::regex re;
  std::vector<std::string> captures;
  const PatternRule* rule;
};

CompiledRule compile(const PatternRule& rule) {
  std::string re;
  std::vector<std::string> captures;
  const std::string& p = rule.pattern;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const char c = p[i];
    if (c == '*') {
      re += ".*";
    } else if (c == '?') {
      re += '.';
    } else if (c == '{') {
      const auto close = p.find('}', i);
      if (close == std::string::npos) throw Error("pattern '" + p + "': unclosed '{'");
      captures.push_back(p.substr(i + 1, close - i - 1));
      if (captures.back().empty()) throw Error("pattern '" + p + "': empty capture name");
      re += "([A-Za-z0-9_\\-]+)";
      i = close;
    } else if (std::string_view("\\^$.|+()[]").find(c) != std::string_view::npos) {
      re += '\\';
      re += c;
    } else {
      re += c;
    }
  }
  return {std::regex(re), std::move(captures), &rule};
}

std::string substitute(const std::string& tmpl, const std::vector<std::string>& names,
                       const std::smatch& m, const std::string& pattern) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] != '{') {
      out += tmpl[i];
      continue;
    }
    const auto close = tmpl.find('}', i);
    if (close == std::string::npos) throw Error("equipment template '" + tmpl + "': unclosed '{'");
    const std::string name = tmpl.substr(i + 1, close - i - 1);
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
      throw Error("equipment template '" + tmpl + "' uses '{" + name +
                  "}' which pattern '" + pattern + "' does not capture");
    }
    out += m[static_cast<std::size_t>(it - names.begin()) + 1].str();
    i = close;
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view to_string(PointRole role) { return info(role).name; }

std::optional<PointRole> parse_role(std::string_view name) {
  for (const auto& r : kRoleTable) {
    if (r.name == name) return r.role;
  }
  return std::nullopt;
}

Unit expected_unit(PointRole role) { return info(role).unit; }

bool unit_accepted(PointRole role, Unit unit) {
  const Unit want = expected_unit(role);
  if (want == Unit::Fraction) return unit == Unit::Fraction || unit == Unit::Percent;
  return unit == want;
}

EquipmentKind role_owner(PointRole role) { return info(role).owner; }

bool OccupancySchedule::occupied(Timestamp t) const {
  using namespace std::chrono;
  const sys_seconds local = t + minutes{utc_offset_minutes};
  const auto day = floor<days>(local);
  const int minute = static_cast<int>(duration_cast<minutes>(local - day).count());
  if (weekdays_only) {
    const unsigned wd = weekday{day}.c_encoding();  // 0 = Sunday
    if (wd == 0 || wd == 6) return false;
  }
  return minute >= start_minute && minute < end_minute;
}

const AhuNode* EquipmentGraph::find_ahu(std::string_view id) const {
  auto it = std::find_if(ahus.begin(), ahus.end(), [&](const AhuNode& a) { return a.id == id; });
  return it == ahus.end() ? nullptr : &*it;
}

const VavNode* EquipmentGraph::find_vav(std::string_view id) const {
  auto it = std::find_if(vavs.begin(), vavs.end(), [&](const VavNode& v) { return v.id == id; });
  return it == vavs.end() ? nullptr : &*it;
}

std::vector<const VavNode*> EquipmentGraph::children(std::string_view ahu_id) const {
  std::vector<const VavNode*> out;
  for (const auto& v : vavs) {
    if (!v.unmapped && v.parent_ahu && *v.parent_ahu == ahu_id) out.push_back(&v);
  }
  return out;
}

std::optional<EquipmentKind> EquipmentGraph::kind_of(std::string_view id) const {
  if (id == building_id) return EquipmentKind::Building;
  if (find_ahu(id)) return EquipmentKind::Ahu;
  if (find_vav(id)) return EquipmentKind::Vav;
  return std::nullopt;
}

std::size_t EquipmentGraph::zone_count() const {
  std::set<std::string> zones;
  for (const auto& v : vavs) zones.insert(v.zone.empty() ? v.id : v.zone);
  return zones.size();
}

Topology parse_topology(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("topology: malformed JSON: ") + e.what());
  }

  Topology topo;
  EquipmentGraph& g = topo.graph;
  try {
    g.building_id = doc.at("building").get<std::string>();
    std::set<std::string> ids{g.building_id};
    const auto add_id = [&ids](const std::string& id, const char* what) {
      if (id.empty()) throw Error(std::string("topology: empty ") + what + " id");
      if (!ids.insert(id).second) throw Error("topology: duplicate id '" + id + "'");
    };

    UnmappedVavPolicy policy = UnmappedVavPolicy::SingleAhu;
    if (doc.contains("unmapped_vav_policy")) {
      const auto p = doc["unmapped_vav_policy"].get<std::string>();
      if (p == "single-ahu") policy = UnmappedVavPolicy::SingleAhu;
      else if (p == "exclude") policy = UnmappedVavPolicy::Exclude;
      else throw Error("topology: unknown unmapped_vav_policy '" + p + "'");
    }

    const auto meters = doc.value("meters", nlohmann::json::object());
    g.meters.cooling = meters.value("cooling", "");
    g.meters.heating = meters.value("heating", "");
    if (g.meters.cooling.empty()) {
      throw Error("topology: missing building meter point for role BuildingCoolingPower");
    }
    if (g.meters.heating.empty()) {
      throw Error("topology: missing building meter point for role BuildingHeatingPower");
    }

    if (doc.contains("schedule")) {
      const auto& s = doc["schedule"];
      if (s.contains("occupied_start")) {
        g.schedule.start_minute = parse_clock_minutes(s["occupied_start"].get<std::string>());
      }
      if (s.contains("occupied_end")) {
        g.schedule.end_minute = parse_clock_minutes(s["occupied_end"].get<std::string>());
      }
      g.schedule.weekdays_only = s.value("weekdays_only", true);
      g.schedule.utc_offset_minutes = s.value("utc_offset_minutes", 0);
    }

    for (const auto& a : doc.value("ahus", nlohmann::json::array())) {
      AhuNode node{a.at("id").get<std::string>()};
      add_id(node.id, "AHU");
      g.ahus.push_back(std::move(node));
    }
    for (const auto& v : doc.value("vavs", nlohmann::json::array())) {
      VavNode node;
      node.id = v.at("id").get<std::string>();
      add_id(node.id, "VAV");
      if (v.contains("ahu") && !v["ahu"].is_null()) node.parent_ahu = v["ahu"].get<std::string>();
      node.zone = v.value("zone", "");
      if (v.contains("min_flow_cfm")) node.min_flow_cfm = v["min_flow_cfm"].get<double>();
      if (v.contains("upper_limit_f")) node.upper_limit_f = v["upper_limit_f"].get<double>();
      g.vavs.push_back(std::move(node));
    }

    for (auto& v : g.vavs) {
      if (v.parent_ahu) {
        if (!g.find_ahu(*v.parent_ahu)) {
          throw Error("topology: VAV '" + v.id + "' references unknown AHU '" + *v.parent_ahu + "'");
        }
        continue;
      }
      if (policy == UnmappedVavPolicy::SingleAhu && g.ahus.size() == 1) {
        v.parent_ahu = g.ahus.front().id;
        g.warnings.push_back("VAV '" + v.id + "' has no parent AHU; assigned to '" +
                             g.ahus.front().id + "' (single-AHU building)");
      } else {
        v.unmapped = true;
        g.warnings.push_back("VAV '" + v.id + "' has no parent AHU; excluded from sums");
      }
    }

    for (const auto& r : doc.value("rules", nlohmann::json::array())) {
      const auto role_name = r.at("role").get<std::string>();
      const auto role = parse_role(role_name);
      if (!role) throw Error("topology: unknown role '" + role_name + "'");
      PatternRule rule{r.at("pattern").get<std::string>(), r.at("equipment").get<std::string>(),
                       *role};
      compile(rule);  // validate early
      topo.rules.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("topology: ") + e.what());
  }
  return topo;
}

Topology load_topology(const std::filesystem::path& path) {
  return parse_topology(read_file(path));
}

EquipmentGraph load_metadata(const std::filesystem::path& path) {
  return load_topology(path).graph;
}

std::vector<PointInfo> parse_point_inventory(std::string_view csv_text) {
  std::vector<PointInfo> out;
  std::istringstream in{std::string(csv_text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "point_id,raw_name,unit") {
        throw IoError("point inventory: expected header 'point_id,raw_name,unit'");
      }
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) {
      throw IoError("point inventory line " + std::to_string(line_no) + ": expected 3 fields");
    }
    PointInfo p;
    p.point_id = line.substr(0, c1);
    p.raw_name = line.substr(c1 + 1, c2 - c1 - 1);
    try {
      p.unit = parse_unit(line.substr(c2 + 1));
    } catch (const Error& e) {
      throw IoError("point inventory line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PointInfo> read_point_inventory(const std::filesystem::path& path) {
  return parse_point_inventory(read_file(path));
}

std::string to_string(const BindingKey& key) {
  return key.equipment + "/" + std::string(to_string(key.role));
}

std::string_view to_string(Fallback fallback) {
  switch (fallback) {
    case Fallback::None: return "none";
    case Fallback::ParentAhuSupplyAirTemp: return "parent-ahu-supply-air-temp";
    case Fallback::MeanChildZoneTemp: return "mean-child-zone-temp";
    case Fallback::MixedAirFromOutsideAir: return "mixed-air-from-outside-air";
    case Fallback::ExcludeFromSums: return "exclude-from-sums";
    case Fallback::OccupancySchedule: return "occupancy-schedule";
    case Fallback::NoReheat: return "no-reheat";
    case Fallback::ConfiguredConstant: return "configured-constant";
    case Fallback::RuleSkipped: return "rule-skipped";
  }
  return "?";
}

const std::string* PointBinding::point(std::string_view equipment, PointRole role) const {
  auto it = bound.find(BindingKey{std::string(equipment), role});
  return it == bound.end() ? nullptr : &it->second;
}

std::optional<Fallback> PointBinding::fallback(std::string_view equipment, PointRole role) const {
  for (const auto& u : unresolved) {
    if (u.key.equipment == equipment && u.key.role == role) return u.fallback;
  }
  return std::nullopt;
}

const BindingKey* PointBinding::key_of(std::string_view point_id) const {
  auto it = by_point_.find(point_id);
  return it == by_point_.end() ? nullptr : &it->second;
}

PointBinding bind_points(const EquipmentGraph& graph, std::span<const PointInfo> inventory,
                         std::span<const PatternRule> rules) {
  std::vector<PointInfo> points(inventory.begin(), inventory.end());
  std::sort(points.begin(), points.end(),
            [](const PointInfo& a, const PointInfo& b) { return a.point_id < b.point_id; });
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].point_id == points[i - 1].point_id) {
      throw Error("point inventory: duplicate point id '" + points[i].point_id + "'");
    }
  }

  std::vector<CompiledRule> compiled;
  compiled.reserve(rules.size());
  for (const auto& r : rules) compiled.push_back(compile(r));

  PointBinding binding;
  const auto bind = [&](const PointInfo& p, BindingKey key) {
    if (!unit_accepted(key.role, p.unit)) {
      throw Error("unit mismatch: point '" + p.point_id + "' has unit " +
                  std::string(to_string(p.unit)) + " but role " +
                  std::string(to_string(key.role)) + " expects " +
                  std::string(to_string(expected_unit(key.role))));
    }
    auto [it, inserted] = binding.bound.emplace(key, p.point_id);
    if (!inserted) {
      throw Error("points '" + it->second + "' and '" + p.point_id + "' both bind to " +
                  to_string(key));
    }
    binding.points.emplace(p.point_id, p);
    binding.by_point_.emplace(p.point_id, std::move(key));
  };

  for (const auto& p : points) {
    if (p.point_id == graph.meters.cooling) {
      bind(p, {graph.building_id, PointRole::BuildingCoolingPower});
      continue;
    }
    if (p.point_id == graph.meters.heating) {
      bind(p, {graph.building_id, PointRole::BuildingHeatingPower});
      continue;
    }

    std::optional<BindingKey> first;
    const PatternRule* first_rule = nullptr;
    for (const auto& c : compiled) {
      std::smatch m;
      if (!std::regex_match(p.raw_name, m, c.re)) continue;
      BindingKey key{substitute(c.rule->equipment, c.captures, m, c.rule->pattern), c.rule->role};
      if (!first) {
        first = std::move(key);
        first_rule = c.rule;
      } else if (key.role != first->role) {
        throw Error("point '" + p.point_id + "' (" + p.raw_name + ") claimed as " +
                    std::string(to_string(first->role)) + " by rule '" + first_rule->pattern +
                    "' and as " + std::string(to_string(key.role)) + " by rule '" +
                    c.rule->pattern + "'");
      }
    }
    if (!first) {
      binding.unmatched_points.push_back(p.point_id);
      continue;
    }
    const auto kind = graph.kind_of(first->equipment);
    if (!kind) {
      binding.unmatched_points.push_back(p.point_id);
      continue;
    }
    if (*kind != role_owner(first->role)) {
      throw Error("point '" + p.point_id + "': role " + std::string(to_string(first->role)) +
                  " belongs to a " + kind_name(role_owner(first->role)) + ", but '" +
                  first->equipment + "' is a " + kind_name(*kind));
    }
    bind(p, std::move(*first));
  }

  // Every role of every piece of equipment is either bound or carries a fallback.
  const auto has = [&](const std::string& eq, PointRole r) { return binding.point(eq, r) != nullptr; };
  const auto unresolved = [&](const std::string& eq, PointRole r, Fallback f) {
    if (!has(eq, r)) binding.unresolved.push_back({{eq, r}, f});
  };

  bool any_reheat = false;
  for (const auto& v : graph.vavs) {
    if (v.unmapped) continue;
    any_reheat = any_reheat || has(v.id, PointRole::VavHeatingValveCmd);
    unresolved(v.id, PointRole::ZoneTemp, Fallback::ExcludeFromSums);
    unresolved(v.id, PointRole::VavSupplyFlow, Fallback::ExcludeFromSums);
    unresolved(v.id, PointRole::VavSupplyFlowSetpoint, Fallback::RuleSkipped);
    unresolved(v.id, PointRole::VavSupplyAirTemp, Fallback::ParentAhuSupplyAirTemp);
    unresolved(v.id, PointRole::VavHeatingValveCmd, Fallback::NoReheat);
    unresolved(v.id, PointRole::VavMinFlow,
               v.min_flow_cfm ? Fallback::ConfiguredConstant : Fallback::RuleSkipped);
    unresolved(v.id, PointRole::ZoneUpperLimit,
               v.upper_limit_f ? Fallback::ConfiguredConstant : Fallback::RuleSkipped);
    unresolved(v.id, PointRole::OccupiedCmd, Fallback::OccupancySchedule);
  }
  const bool have_oat = has(graph.building_id, PointRole::OutsideAirTemp);
  for (const auto& a : graph.ahus) {
    unresolved(a.id, PointRole::AhuSupplyAirTemp, Fallback::None);
    const bool can_estimate_mixed = have_oat && has(a.id, PointRole::EconomizerDamperPos);
    unresolved(a.id, PointRole::AhuMixedAirTemp,
               can_estimate_mixed ? Fallback::MixedAirFromOutsideAir : Fallback::None);
    unresolved(a.id, PointRole::AhuReturnAirTemp, Fallback::MeanChildZoneTemp);
    unresolved(a.id, PointRole::AhuCoolingValveCmd, Fallback::RuleSkipped);
    unresolved(a.id, PointRole::AhuHeatingValveCmd, Fallback::RuleSkipped);
    unresolved(a.id, PointRole::EconomizerDamperPos, Fallback::RuleSkipped);
  }
  const auto& b = graph.building_id;
  unresolved(b, PointRole::OutsideAirTemp, Fallback::None);
  unresolved(b, PointRole::HotWaterSupplyTemp, any_reheat ? Fallback::None : Fallback::NoReheat);
  unresolved(b, PointRole::BuildingCoolingPower, Fallback::None);
  unresolved(b, PointRole::BuildingHeatingPower, Fallback::None);

  std::sort(binding.unresolved.begin(), binding.unresolved.end(),
            [](const UnresolvedRole& x, const UnresolvedRole& y) { return x.key < y.key; });
  return binding;
}

void require_model_inputs(const EquipmentGraph& graph, const PointBinding& binding) {
  std::string missing;
  for (const auto& u : binding.unresolved) {
    if (u.fallback != Fallback::None) continue;
    if (!missing.empty()) missing += ", ";
    missing += to_string(u.key);
  }
  if (!missing.empty()) throw Error("missing required points: " + missing);
  for (const auto& a : graph.ahus) {
    bool any = false;
    for (const auto* v : graph.children(a.id)) {
      any = any || (binding.point(v->id, PointRole::VavSupplyFlow) &&
                    binding.point(v->id, PointRole::ZoneTemp));
    }
    if (!any) throw Error("AHU flow unknown: '" + a.id + "' has no child VAV with a flow point");
  }
}

}  // namespace apportion
