#include "flexmkt/netmodel.hpp"

#include <cmath>
#include <queue>
#include <string>

#include "flexmkt/errors.hpp"
#include "flexmkt/linalg.hpp"

namespace flexmkt::net {
namespace {

struct Adjacent {
  int bus;   // neighbour index
  int line;  // line index
};

std::vector<std::vector<Adjacent>> adjacency(const Network& net) {
  std::vector<std::vector<Adjacent>> adj(net.num_buses());
  for (int l = 0; l < net.num_lines(); ++l) {
    const int a = net.index_of(net.lines()[l].from), b = net.index_of(net.lines()[l].to);
    adj[a].push_back({b, l});
    adj[b].push_back({a, l});
  }
  return adj;
}

// BFS from the root: parent line per bus index (-1 for the root / unreached).
std::vector<int> bfs_parent_lines(const Network& net, std::vector<int>* order = nullptr) {
  const auto adj = adjacency(net);
  std::vector<int> parent(net.num_buses(), -1);
  std::vector<char> seen(net.num_buses(), 0);
  std::queue<int> q;
  q.push(net.root_index());
  seen[net.root_index()] = 1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    if (order) order->push_back(v);
    for (const auto& e : adj[v]) {
      if (seen[e.bus]) continue;
      seen[e.bus] = 1;
      parent[e.bus] = e.line;
      q.push(e.bus);
    }
  }
  return parent;
}

}  // namespace

Network::Network(std::vector<int> buses, std::vector<Line> lines, int root)
    : buses_(std::move(buses)), lines_(std::move(lines)), root_(root) {
  if (buses_.empty()) throw TopologyError("network has no buses");
  for (int i = 0; i < num_buses(); ++i)
    if (!index_.emplace(buses_[i], i).second)
      throw TopologyError("duplicate bus id " + std::to_string(buses_[i]));
  if (!has_bus(root_)) throw TopologyError("root bus " + std::to_string(root_) + " is not a bus");
  for (int l = 0; l < num_lines(); ++l) {
    const auto& ln = lines_[l];
    const std::string tag = "line " + std::to_string(l) + " (" + std::to_string(ln.from) + "-" +
                            std::to_string(ln.to) + ")";
    if (!has_bus(ln.from) || !has_bus(ln.to)) throw TopologyError(tag + " references unknown bus");
    if (ln.from == ln.to) throw TopologyError(tag + " is a self-loop");
    if (!(ln.x > 0.0) || !std::isfinite(ln.x)) throw ValidationError(tag + ": reactance must be > 0");
    if (!(ln.fmin <= 0.0) || !(ln.fmax >= 0.0))
      throw ValidationError(tag + ": flow bounds must satisfy fmin <= 0 <= fmax");
  }
  std::vector<int> order;
  bfs_parent_lines(*this, &order);
  if (static_cast<int>(order.size()) != num_buses())
    throw TopologyError("network is not connected (" + std::to_string(order.size()) + " of " +
                        std::to_string(num_buses()) + " buses reachable from the root)");
}

int Network::index_of(int id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw TopologyError("unknown bus " + std::to_string(id));
  return it->second;
}

Network Network::with_limits(const std::vector<double>& fmin, const std::vector<double>& fmax) const {
  if (static_cast<int>(fmin.size()) != num_lines() || static_cast<int>(fmax.size()) != num_lines())
    throw ContractError("with_limits: one bound per line expected");
  auto lines = lines_;
  for (int l = 0; l < num_lines(); ++l) {
    lines[l].fmin = fmin[l];
    lines[l].fmax = fmax[l];
  }
  return Network(buses_, std::move(lines), root_);
}

bool is_radial(const Network& net) { return net.num_lines() == net.num_buses() - 1; }

SensitivityMatrix build_sensitivity(const Network& net) {
  const int n = net.num_buses(), L = net.num_lines();
  const int r = net.root_index();
  SensitivityMatrix s = SensitivityMatrix::Zero(L, n);

  if (is_radial(net)) {
    const auto parent = bfs_parent_lines(net);
    for (int k = 0; k < n; ++k) {
      int v = k;
      while (v != r) {
        const int l = parent[v];
        const auto& ln = net.lines()[l];
        const int child_end = net.index_of(ln.to);
        s(l, k) = child_end == v ? -1.0 : 1.0;
        v = child_end == v ? net.index_of(ln.from) : child_end;
      }
    }
    return s;
  }

  // Reduced Laplacian over non-root buses.
  std::vector<int> red(n, -1);
  for (int k = 0, c = 0; k < n; ++k)
    if (k != r) red[k] = c++;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n - 1, n - 1);
  for (const auto& ln : net.lines()) {
    const int a = red[net.index_of(ln.from)], c = red[net.index_of(ln.to)];
    const double y = 1.0 / ln.x;
    if (a >= 0) b(a, a) += y;
    if (c >= 0) b(c, c) += y;
    if (a >= 0 && c >= 0) {
      b(a, c) -= y;
      b(c, a) -= y;
    }
  }
  Eigen::MatrixXd binv;
  try {
    binv = linalg::DenseLu(b).inverse();
  } catch (const linalg::SingularMatrixError& e) {
    int bus = -1;
    for (int k = 0; k < n; ++k)
      if (red[k] == e.pivot()) bus = net.buses()[k];
    throw NumericalError("singular reduced Laplacian at pivot " + std::to_string(e.pivot()) +
                         " (bus " + std::to_string(bus) + ")");
  }
  for (int l = 0; l < L; ++l) {
    const auto& ln = net.lines()[l];
    const int a = red[net.index_of(ln.from)], c = red[net.index_of(ln.to)];
    for (int k = 0; k < n; ++k) {
      if (red[k] < 0) continue;
      const double ta = a >= 0 ? binv(a, red[k]) : 0.0;
      const double tc = c >= 0 ? binv(c, red[k]) : 0.0;
      s(l, k) = (ta - tc) / ln.x;
    }
  }
  return s;
}

Eigen::VectorXd line_flows(const SensitivityMatrix& sens, const Eigen::VectorXd& injections) {
  if (injections.size() != sens.cols())
    throw ContractError("line_flows: expected " + std::to_string(sens.cols()) + " injections, got " +
                        std::to_string(injections.size()));
  return sens * injections;
}

Network orient_from_root(const Network& net) {
  if (!is_radial(net)) throw ContractError("orient_from_root: network is not radial");
  const auto parent = bfs_parent_lines(net);
  auto lines = net.lines();
  for (int k = 0; k < net.num_buses(); ++k) {
    const int l = parent[k];
    if (l < 0) continue;
    if (net.index_of(lines[l].to) != k) {
      std::swap(lines[l].from, lines[l].to);
      const double lo = lines[l].fmin;
      lines[l].fmin = -lines[l].fmax;
      lines[l].fmax = -lo;
    }
  }
  return Network(net.buses(), std::move(lines), net.root());
}

bool oriented_from_root(const Network& net) {
  if (!is_radial(net)) return false;
  const auto parent = bfs_parent_lines(net);
  for (int k = 0; k < net.num_buses(); ++k)
    if (parent[k] >= 0 && net.index_of(net.lines()[parent[k]].to) != k) return false;
  return true;
}

std::vector<int> depths(const Network& net) {
  if (!is_radial(net)) throw ContractError("depths: network is not radial");
  std::vector<int> order;
  const auto parent = bfs_parent_lines(net, &order);
  std::vector<int> d(net.num_buses(), 0);
  for (int v : order) {
    if (parent[v] < 0) continue;
    const auto& ln = net.lines()[parent[v]];
    const int up = net.index_of(ln.from) == v ? net.index_of(ln.to) : net.index_of(ln.from);
    d[v] = d[up] + 1;
  }
  return d;
}

}  // namespace flexmkt::net
