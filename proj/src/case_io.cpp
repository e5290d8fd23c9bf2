#include <json.hpp>
#include <string>

#include "flexmkt/errors.hpp"
#include "flexmkt/market_model.hpp"

namespace flexmkt::market {
namespace {

using json = nlohmann::json;

const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ParseError(path, "expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ParseError(path, "expected an integer");
  return v.get<int>();
}

const json& array(const json& v, const std::string& path) {
  if (!v.is_array()) throw ParseError(path, "expected an array");
  return v;
}

std::vector<double> numbers(const json& v, const std::string& path) {
  std::vector<double> out;
  for (size_t i = 0; i < array(v, path).size(); ++i)
    out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

net::Network network(const json& j, const std::string& path) {
  std::vector<int> buses;
  const auto& jb = array(field(j, "buses", path), path + ".buses");
  for (size_t i = 0; i < jb.size(); ++i) buses.push_back(integer(jb[i], path + ".buses[" + std::to_string(i) + "]"));
  std::vector<net::Line> lines;
  const auto& jl = array(field(j, "lines", path), path + ".lines");
  for (size_t i = 0; i < jl.size(); ++i) {
    const std::string lp = path + ".lines[" + std::to_string(i) + "]";
    net::Line ln{integer(field(jl[i], "from", lp), lp + ".from"), integer(field(jl[i], "to", lp), lp + ".to"),
                 number(field(jl[i], "x", lp), lp + ".x")};
    if (jl[i].contains("fmin")) ln.fmin = number(jl[i]["fmin"], lp + ".fmin");
    if (jl[i].contains("fmax")) ln.fmax = number(jl[i]["fmax"], lp + ".fmax");
    lines.push_back(ln);
  }
  const int root = integer(field(j, "root", path), path + ".root");
  try {
    return net::Network(std::move(buses), std::move(lines), root);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  } catch (const TopologyError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

json network_json(const net::Network& nw) {
  json lines = json::array();
  for (const auto& l : nw.lines())
    lines.push_back({{"from", l.from}, {"to", l.to}, {"x", l.x}, {"fmin", l.fmin}, {"fmax", l.fmax}});
  return {{"buses", nw.buses()}, {"lines", lines}, {"root", nw.root()}};
}

}  // namespace

MarketCase parse_case(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("", "top level must be an object");

  MarketCase c;
  if (j.contains("case_id")) {
    if (!j["case_id"].is_string()) throw ParseError("case_id", "expected a string");
    c.case_id = j["case_id"].get<std::string>();
  }
  const auto& jt = field(j, "transmission", "");
  c.transmission = network(jt, "transmission");
  c.e0 = numbers(field(jt, "e", "transmission"), "transmission.e");

  const auto& jd = array(field(j, "dsos", ""), "dsos");
  for (size_t i = 0; i < jd.size(); ++i) {
    const std::string path = "dsos[" + std::to_string(i) + "]";
    DistributionSystem d;
    d.index = integer(field(jd[i], "index", path), path + ".index");
    d.network = network(field(jd[i], "network", path), path + ".network");
    d.coupling_bus = integer(field(jd[i], "coupling_bus", path), path + ".coupling_bus");
    d.z_min = number(field(jd[i], "z_min", path), path + ".z_min");
    d.z_max = number(field(jd[i], "z_max", path), path + ".z_max");
    d.e = numbers(field(jd[i], "e", path), path + ".e");
    c.dsos.push_back(std::move(d));
  }

  const auto& jbids = array(field(j, "bids", ""), "bids");
  for (size_t i = 0; i < jbids.size(); ++i) {
    const std::string path = "bids[" + std::to_string(i) + "]";
    const auto& b = jbids[i];
    Bid bid;
    bid.id = integer(field(b, "id", path), path + ".id");
    bid.system = integer(field(b, "system", path), path + ".system");
    bid.bus = integer(field(b, "bus", path), path + ".bus");
    const auto& dir = field(b, "dir", path);
    if (!dir.is_string() || (dir != "up" && dir != "down"))
      throw ParseError(path + ".dir", "expected \"up\" or \"down\"");
    bid.dir = dir == "up" ? Direction::up : Direction::down;
    bid.price = number(field(b, "price", path), path + ".price");
    bid.qmax = number(field(b, "qmax", path), path + ".qmax");
    c.bids.push_back(bid);
  }
  c.check();
  return c;
}

std::string serialize_case(const MarketCase& c) {
  json j;
  if (!c.case_id.empty()) j["case_id"] = c.case_id;
  j["transmission"] = network_json(c.transmission);
  j["transmission"]["e"] = c.e0;
  j["dsos"] = json::array();
  for (const auto& d : c.dsos)
    j["dsos"].push_back({{"index", d.index},
                         {"network", network_json(d.network)},
                         {"coupling_bus", d.coupling_bus},
                         {"z_min", d.z_min},
                         {"z_max", d.z_max},
                         {"e", d.e}});
  j["bids"] = json::array();
  for (const auto& b : c.bids)
    j["bids"].push_back({{"id", b.id},
                         {"system", b.system},
                         {"bus", b.bus},
                         {"dir", to_string(b.dir)},
                         {"price", b.price},
                         {"qmax", b.qmax}});
  return j.dump(1) + "\n";
}

}  // namespace flexmkt::market
