#pragma once

#include <Eigen/Dense>
#include <unordered_map>
#include <vector>

namespace flexmkt::net {

/// Line rating used for "no limit"; keeps every LP the same shape.
inline constexpr double kUnlimited = 1e9;

/// Flow is positive in the from -> to direction.
struct Line {
  int from;
  int to;
  double x;  // reactance, p.u.
  double fmin = -kUnlimited;
  double fmax = kUnlimited;
};

/// Immutable DC network. Buses are addressed by id externally and by
/// position (0..n-1, in the order given) internally.
class Network {
 public:
  Network() = default;
  /// Throws TopologyError (unknown bus, self-loop, disconnected, duplicate id)
  /// or ValidationError (reactance <= 0, flow bounds excluding 0).
  Network(std::vector<int> buses, std::vector<Line> lines, int root);

  const std::vector<int>& buses() const { return buses_; }
  const std::vector<Line>& lines() const { return lines_; }
  int root() const { return root_; }
  int num_buses() const { return static_cast<int>(buses_.size()); }
  int num_lines() const { return static_cast<int>(lines_.size()); }
  int root_index() const { return index_.at(root_); }
  bool has_bus(int id) const { return index_.count(id) > 0; }
  /// Throws TopologyError for unknown ids.
  int index_of(int id) const;

  /// Copy with new flow limits (same topology).
  Network with_limits(const std::vector<double>& fmin, const std::vector<double>& fmax) const;

 private:
  std::vector<int> buses_;
  std::vector<Line> lines_;
  int root_ = 0;
  std::unordered_map<int, int> index_;
};

/// lines x buses, MW per MW of injection; the root column is zero.
using SensitivityMatrix = Eigen::MatrixXd;

bool is_radial(const Network& net);

/// Radial: path matrix (-1 when the line lies on the root->k path and points
/// away from the root, +1 when it points toward it). Meshed: DC PTDF from the
/// reduced susceptance Laplacian with the root as slack.
SensitivityMatrix build_sensitivity(const Network& net);

/// sens * injections. Throws ContractError on a dimension mismatch.
Eigen::VectorXd line_flows(const SensitivityMatrix& sens, const Eigen::VectorXd& injections);

/// Radial network with every line flipped to point away from the root.
Network orient_from_root(const Network& net);

/// True when every line of a radial network points away from the root.
bool oriented_from_root(const Network& net);

/// Number of lines between each bus (by index) and the root. Radial only.
std::vector<int> depths(const Network& net);

}  // namespace flexmkt::net
