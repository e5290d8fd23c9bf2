#include <cmath>
#include <set>
#include <string>

#include "flexmkt/errors.hpp"
#include "flexmkt/market_model.hpp"

namespace flexmkt::market {

const char* to_string(Direction d) { return d == Direction::up ? "up" : "down"; }

int MarketCase::dso_position(int index) const {
  for (size_t i = 0; i < dsos.size(); ++i)
    if (dsos[i].index == index) return static_cast<int>(i);
  throw ContractError("no distribution system with index " + std::to_string(index));
}

const net::Network& MarketCase::network_of(int system) const {
  return system == 0 ? transmission : dsos[dso_position(system)].network;
}

const std::vector<double>& MarketCase::base_of(int system) const {
  return system == 0 ? e0 : dsos[dso_position(system)].e;
}

std::vector<int> MarketCase::bids_of(int system) const {
  std::vector<int> out;
  for (size_t b = 0; b < bids.size(); ++b)
    if (bids[b].system == system) out.push_back(static_cast<int>(b));
  return out;
}

double MarketCase::cost(const std::vector<double>& volumes) const {
  if (volumes.size() != bids.size()) throw ContractError("cost: one volume per bid expected");
  double j = 0.0;
  for (size_t b = 0; b < bids.size(); ++b) j += bids[b].unit_cost() * volumes[b];
  return j;
}

namespace {

void need(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ValidationError(path + ": " + what);
}

void check_vector(const std::vector<double>& v, size_t n, const std::string& path) {
  need(v.size() == n, path, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
  for (size_t i = 0; i < v.size(); ++i)
    need(std::isfinite(v[i]), path + "[" + std::to_string(i) + "]", "not a finite number");
}

}  // namespace

void MarketCase::check() const {
  check_vector(e0, transmission.num_buses(), "transmission.e");
  std::set<int> indices, coupling;
  for (size_t i = 0; i < dsos.size(); ++i) {
    const auto& d = dsos[i];
    const std::string path = "dsos[" + std::to_string(i) + "]";
    need(d.index >= 1, path + ".index", "must be >= 1 (0 is the transmission grid)");
    need(indices.insert(d.index).second, path + ".index", "duplicate DSO index " + std::to_string(d.index));
    need(transmission.has_bus(d.coupling_bus), path + ".coupling_bus",
         "bus " + std::to_string(d.coupling_bus) + " is not a transmission bus");
    need(coupling.insert(d.coupling_bus).second, path + ".coupling_bus",
         "duplicate coupling bus " + std::to_string(d.coupling_bus));
    need(std::isfinite(d.z_min) && std::isfinite(d.z_max), path + ".z_min", "interface bounds must be finite");
    need(d.z_min <= d.z_max, path + ".z_min", "z_min exceeds z_max");
    check_vector(d.e, d.network.num_buses(), path + ".e");
  }
  std::set<int> ids;
  for (size_t b = 0; b < bids.size(); ++b) {
    const auto& bid = bids[b];
    const std::string path = "bids[" + std::to_string(b) + "]";
    need(ids.insert(bid.id).second, path + ".id", "duplicate bid id " + std::to_string(bid.id));
    need(bid.system == 0 || indices.count(bid.system), path + ".system",
         "unknown system " + std::to_string(bid.system));
    need(network_of(bid.system).has_bus(bid.bus), path + ".bus",
         "bus " + std::to_string(bid.bus) + " does not exist in system " + std::to_string(bid.system));
    need(std::isfinite(bid.price) && bid.price >= 0.0, path + ".price", "must be a finite number >= 0");
    need(std::isfinite(bid.qmax) && bid.qmax >= 0.0, path + ".qmax", "must be a finite number >= 0");
  }
}

}  // namespace flexmkt::market
