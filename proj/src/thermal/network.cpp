#include "smartstat/thermal/network.hpp"

#include "smartstat/error.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace smartstat::thermal {

std::string_view to_string(Preset preset) {
  switch (preset) {
    case Preset::single_zone: return "single_zone";
    case Preset::three_region: return "three_region";
    case Preset::custom: return "custom";
  }
  return "custom";
}

Preset preset_from_string(std::string_view name) {
  if (name == "single_zone") return Preset::single_zone;
  if (name == "three_region") return Preset::three_region;
  if (name == "custom") return Preset::custom;
  throw Error(ErrorCode::InvalidParameter, "unknown preset '" + std::string(name) + "'");
}

std::string edge_key(std::string_view a, std::string_view b) {
  std::string key(a);
  key += '-';
  key += b;
  return key;
}

RCNetwork::RCNetwork(std::vector<Zone> zones, std::vector<Boundary> boundaries,
                     std::vector<Edge> edges,
                     std::map<std::string, double> ac_coupling, Preset preset)
    : preset_(preset),
      zones_(std::move(zones)),
      boundaries_(std::move(boundaries)),
      edges_(std::move(edges)),
      ac_coupling_(std::move(ac_coupling)) {
  validate();
  assemble();
}

std::optional<Eigen::Index> RCNetwork::find_zone(std::string_view id) const {
  for (std::size_t i = 0; i < zones_.size(); ++i) {
    if (zones_[i].id == id) return static_cast<Eigen::Index>(i);
  }
  return std::nullopt;
}

Eigen::Index RCNetwork::zone_index(std::string_view id) const {
  if (auto idx = find_zone(id)) return *idx;
  throw Error(ErrorCode::UnknownZone, "no zone '" + std::string(id) + "'");
}

std::optional<Eigen::Index> RCNetwork::find_boundary(std::string_view id) const {
  for (std::size_t i = 0; i < boundaries_.size(); ++i) {
    if (boundaries_[i].id == id) return static_cast<Eigen::Index>(i);
  }
  return std::nullopt;
}

std::vector<std::string> RCNetwork::zone_ids() const {
  std::vector<std::string> ids;
  ids.reserve(zones_.size());
  for (const auto &z : zones_) ids.push_back(z.id);
  return ids;
}

bool RCNetwork::has_edge(std::string_view a, std::string_view b) const {
  return resistance(a, b).has_value();
}

std::optional<double> RCNetwork::resistance(std::string_view a,
                                            std::string_view b) const {
  for (const auto &e : edges_) {
    if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) return e.resistance;
  }
  return std::nullopt;
}

void RCNetwork::validate() const {
  if (zones_.empty()) {
    throw Error(ErrorCode::InvalidTopology, "network needs at least one zone");
  }
  std::map<std::string, std::size_t> node;
  for (const auto &z : zones_) {
    if (!(z.capacitance > 0.0) || !std::isfinite(z.capacitance)) {
      throw Error(ErrorCode::InvalidParameter,
                  "capacitance of '" + z.id + "' must be positive");
    }
    if (!node.emplace(z.id, node.size()).second) {
      throw Error(ErrorCode::InvalidTopology, "duplicate node id '" + z.id + "'");
    }
  }
  for (const auto &b : boundaries_) {
    if (!node.emplace(b.id, node.size()).second) {
      throw Error(ErrorCode::InvalidTopology, "duplicate node id '" + b.id + "'");
    }
  }

  std::vector<std::vector<std::size_t>> adjacency(node.size());
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto &e : edges_) {
    if (!(e.resistance > 0.0) || !std::isfinite(e.resistance)) {
      throw Error(ErrorCode::InvalidParameter,
                  "resistance of " + edge_key(e.a, e.b) + " must be positive");
    }
    if (e.a == e.b) {
      throw Error(ErrorCode::InvalidTopology, "self-edge on '" + e.a + "'");
    }
    const auto ia = node.find(e.a);
    const auto ib = node.find(e.b);
    if (ia == node.end() || ib == node.end()) {
      throw Error(ErrorCode::InvalidTopology,
                  "edge " + edge_key(e.a, e.b) + " references an unknown node");
    }
    auto key = std::minmax(e.a, e.b);
    if (!pairs.emplace(key.first, key.second).second) {
      throw Error(ErrorCode::InvalidTopology,
                  "duplicate edge " + edge_key(e.a, e.b));
    }
    adjacency[ia->second].push_back(ib->second);
    adjacency[ib->second].push_back(ia->second);
  }

  std::vector<bool> seen(node.size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const auto cur = stack.back();
    stack.pop_back();
    for (auto nb : adjacency[cur]) {
      if (!seen[nb]) {
        seen[nb] = true;
        ++reached;
        stack.push_back(nb);
      }
    }
  }
  if (reached != node.size()) {
    throw Error(ErrorCode::InvalidTopology, "node graph is not connected");
  }

  double total = 0.0;
  for (const auto &[zone, fraction] : ac_coupling_) {
    if (!find_zone(zone)) {
      throw Error(ErrorCode::InvalidTopology,
                  "ac coupling references unknown zone '" + zone + "'");
    }
    if (!(fraction >= 0.0) || !std::isfinite(fraction)) {
      throw Error(ErrorCode::InvalidTopology, "ac fractions must be >= 0");
    }
    total += fraction;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidTopology, "ac fractions must sum to 1");
  }
}

void RCNetwork::assemble() {
  const auto n = zone_count();
  const auto nb = boundary_count();
  capacitance_.resize(n);
  ac_fraction_ = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    capacitance_(i) = zones_[static_cast<std::size_t>(i)].capacitance;
    if (auto it = ac_coupling_.find(zones_[static_cast<std::size_t>(i)].id);
        it != ac_coupling_.end()) {
      ac_fraction_(i) = it->second;
    }
  }

  zone_coupling_ = Eigen::MatrixXd::Zero(n, n);
  boundary_coupling_ = Eigen::MatrixXd::Zero(n, nb);
  for (const auto &e : edges_) {
    const double g = 1.0 / e.resistance;
    const auto za = find_zone(e.a);
    const auto zb = find_zone(e.b);
    if (za && zb) {
      zone_coupling_(*za, *zb) += g;
      zone_coupling_(*zb, *za) += g;
      zone_coupling_(*za, *za) -= g;
      zone_coupling_(*zb, *zb) -= g;
    } else if (za) {
      boundary_coupling_(*za, *find_boundary(e.b)) += g;
      zone_coupling_(*za, *za) -= g;
    } else if (zb) {
      boundary_coupling_(*zb, *find_boundary(e.a)) += g;
      zone_coupling_(*zb, *zb) -= g;
    }
  }
}

std::vector<std::string> preset_zones(Preset preset) {
  switch (preset) {
    case Preset::single_zone: return {std::string(kRoom), std::string(kWall)};
    case Preset::three_region:
      return {std::string(kHir), std::string(kMir), std::string(kLir),
              std::string(kWall)};
    case Preset::custom: break;
  }
  return {};
}

std::vector<std::string> preset_room_zones(Preset preset) {
  auto zones = preset_zones(preset);
  std::erase(zones, std::string(kWall));
  return zones;
}

std::vector<std::string> preset_edges(Preset preset) {
  switch (preset) {
    case Preset::single_zone:
      return {edge_key(kRoom, kWall), edge_key(kWall, kAmbient)};
    case Preset::three_region:
      return {edge_key(kHir, kMir),  edge_key(kMir, kLir),
              edge_key(kHir, kWall), edge_key(kMir, kWall),
              edge_key(kLir, kWall), edge_key(kWall, kAmbient)};
    case Preset::custom: break;
  }
  return {};
}

RCNetwork build_room_model(Preset preset,
                           const std::map<std::string, double> &capacitances,
                           const std::map<std::string, double> &resistances,
                           const std::map<std::string, double> &ac_fractions) {
  if (preset == Preset::custom) {
    throw Error(ErrorCode::InvalidParameter,
                "build_room_model needs a named preset");
  }
  std::vector<Zone> zones;
  for (const auto &id : preset_zones(preset)) {
    auto it = capacitances.find(id);
    if (it == capacitances.end()) {
      throw Error(ErrorCode::InvalidTopology, "missing capacitance for '" + id + "'");
    }
    zones.push_back({id, it->second});
  }

  const auto required = preset_edges(preset);
  for (const auto &[key, r] : resistances) {
    if (std::find(required.begin(), required.end(), key) == required.end()) {
      throw Error(ErrorCode::InvalidTopology,
                  "edge " + key + " is not part of preset " +
                      std::string(to_string(preset)));
    }
  }
  std::vector<Edge> edges;
  for (const auto &key : required) {
    auto it = resistances.find(key);
    if (it == resistances.end()) {
      throw Error(ErrorCode::InvalidTopology, "missing required edge " + key);
    }
    const auto dash = key.find('-');
    edges.push_back({key.substr(0, dash), key.substr(dash + 1), it->second});
  }

  if (preset == Preset::three_region) {
    const auto frac = [&](std::string_view z) {
      auto it = ac_fractions.find(std::string(z));
      return it == ac_fractions.end() ? 0.0 : it->second;
    };
    if (frac(kHir) < frac(kMir) || frac(kHir) < frac(kLir) ||
        frac(kHir) < frac(kWall)) {
      throw Error(ErrorCode::InvalidTopology,
                  "hir must receive the largest ac fraction");
    }
  }

  return RCNetwork(std::move(zones), {Boundary{std::string(kAmbient), "outdoor"}},
                   std::move(edges), ac_fractions, preset);
}

double stable_dt(const RCNetwork &network) {
  double bound = std::numeric_limits<double>::infinity();
  const auto &k = network.zone_coupling();
  for (Eigen::Index i = 0; i < network.zone_count(); ++i) {
    const double total_g = -k(i, i);
    if (total_g > 0.0) {
      bound = std::min(bound, 0.5 * network.capacitance()(i) / total_g);
    }
  }
  return bound;
}

}  // namespace smartstat::thermal
