#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace smartstat::thermal {

// Node ids used by the built-in room presets.
inline constexpr std::string_view kRoom = "room";
inline constexpr std::string_view kHir = "hir";
inline constexpr std::string_view kMir = "mir";
inline constexpr std::string_view kLir = "lir";
inline constexpr std::string_view kWall = "wall";
inline constexpr std::string_view kAmbient = "ambient";

enum class Preset { custom, single_zone, three_region };

std::string_view to_string(Preset preset);
Preset preset_from_string(std::string_view name);

struct Zone {
  std::string id;
  double capacitance = 0.0;  // J/°C
};

struct Boundary {
  std::string id;
  std::string source = "outdoor";
};

struct Edge {
  std::string a;
  std::string b;
  double resistance = 0.0;  // °C/W
};

/// Canonical "a-b" key for an undirected edge, preserving the given order.
std::string edge_key(std::string_view a, std::string_view b);

/// Validated lumped RC network. Zone temperatures are the state; boundary
/// nodes are driven externally. Construction throws on any invariant
/// violation, so every live instance is consistent.
class RCNetwork {
 public:
  RCNetwork(std::vector<Zone> zones, std::vector<Boundary> boundaries,
            std::vector<Edge> edges, std::map<std::string, double> ac_coupling,
            Preset preset = Preset::custom);

  [[nodiscard]] Preset preset() const { return preset_; }
  [[nodiscard]] const std::vector<Zone> &zones() const { return zones_; }
  [[nodiscard]] const std::vector<Boundary> &boundaries() const {
    return boundaries_;
  }
  [[nodiscard]] const std::vector<Edge> &edges() const { return edges_; }
  [[nodiscard]] const std::map<std::string, double> &ac_coupling() const {
    return ac_coupling_;
  }

  [[nodiscard]] Eigen::Index zone_count() const {
    return static_cast<Eigen::Index>(zones_.size());
  }
  [[nodiscard]] Eigen::Index boundary_count() const {
    return static_cast<Eigen::Index>(boundaries_.size());
  }

  [[nodiscard]] std::optional<Eigen::Index> find_zone(std::string_view id) const;
  /// Throws UnknownZone.
  [[nodiscard]] Eigen::Index zone_index(std::string_view id) const;
  [[nodiscard]] std::optional<Eigen::Index> find_boundary(std::string_view id) const;
  [[nodiscard]] std::vector<std::string> zone_ids() const;

  [[nodiscard]] bool has_edge(std::string_view a, std::string_view b) const;
  [[nodiscard]] std::optional<double> resistance(std::string_view a,
                                                 std::string_view b) const;

  [[nodiscard]] const Eigen::VectorXd &capacitance() const { return capacitance_; }
  /// Zone-to-zone conductance Laplacian; diagonal also carries boundary terms.
  [[nodiscard]] const Eigen::MatrixXd &zone_coupling() const { return zone_coupling_; }
  /// Conductance from each boundary into each zone (zones x boundaries).
  [[nodiscard]] const Eigen::MatrixXd &boundary_coupling() const {
    return boundary_coupling_;
  }
  [[nodiscard]] const Eigen::VectorXd &ac_fraction() const { return ac_fraction_; }

 private:
  void validate() const;
  void assemble();

  Preset preset_;
  std::vector<Zone> zones_;
  std::vector<Boundary> boundaries_;
  std::vector<Edge> edges_;
  std::map<std::string, double> ac_coupling_;

  Eigen::VectorXd capacitance_;
  Eigen::MatrixXd zone_coupling_;
  Eigen::MatrixXd boundary_coupling_;
  Eigen::VectorXd ac_fraction_;
};

/// Zone ids of a preset, in state-vector order.
std::vector<std::string> preset_zones(Preset preset);
/// Occupied (non-wall) zones of a preset.
std::vector<std::string> preset_room_zones(Preset preset);
/// Required edges of a preset as "a-b" keys.
std::vector<std::string> preset_edges(Preset preset);

/// Builds a preset room. Capacitances keyed by zone id, resistances by
/// edge_key(); ac fractions default to zero for zones not listed.
RCNetwork build_room_model(Preset preset,
                           const std::map<std::string, double> &capacitances,
                           const std::map<std::string, double> &resistances,
                           const std::map<std::string, double> &ac_fractions);

/// Largest admissible forward-Euler step: 0.5 * min_i C_i / sum_j (1/R_ij).
double stable_dt(const RCNetwork &network);

}  // namespace smartstat::thermal
