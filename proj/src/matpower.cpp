#include <cmath>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "flexmkt/errors.hpp"
#include "flexmkt/market_model.hpp"

namespace flexmkt::market {
namespace {

std::string strip_comments(const std::string& text) {
  std::ostringstream out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    // MATPOWER files only use % for comments; no string literals contain it
    // inside the numeric tables.
    const auto pct = line.find('%');
    out << (pct == std::string::npos ? line : line.substr(0, pct)) << '\n';
  }
  return out.str();
}

std::vector<std::vector<double>> table(const std::string& text, const std::string& name) {
  const std::regex head("mpc\\." + name + "\\s*=\\s*\\[");
  std::smatch m;
  if (!std::regex_search(text, m, head)) throw ParseError("mpc." + name, "table not found");
  const auto start = m.position(0) + m.length(0);
  const auto stop = text.find(']', start);
  if (stop == std::string::npos) throw ParseError("mpc." + name, "unterminated table");
  std::vector<std::vector<double>> rows;
  std::string body = text.substr(start, stop - start);
  for (char& ch : body)
    if (ch == ';') ch = '\n';
  std::istringstream in(body);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      try {
        size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError("mpc." + name + " row " + std::to_string(rows.size() + 1),
                         "not a number: " + tok);
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

net::Network parse_matpower(const std::string& text, std::vector<std::string>* warnings) {
  const std::string src = strip_comments(text);
  if (!std::regex_search(src, std::regex("mpc\\.baseMVA\\s*=\\s*[-+0-9.eE]+")))
    throw ParseError("mpc.baseMVA", "missing");
  const auto bus = table(src, "bus");
  const auto branch = table(src, "branch");
  if (bus.empty()) throw ParseError("mpc.bus", "empty table");

  std::vector<int> ids;
  int root = -1;
  for (size_t i = 0; i < bus.size(); ++i) {
    if (bus[i].size() < 2) throw ParseError("mpc.bus row " + std::to_string(i + 1), "too few columns");
    ids.push_back(static_cast<int>(bus[i][0]));
    if (static_cast<int>(bus[i][1]) == 3 && root < 0) root = ids.back();
  }
  if (root < 0) root = ids.front();

  std::vector<net::Line> lines;
  int unlimited = 0;
  for (size_t i = 0; i < branch.size(); ++i) {
    const auto& r = branch[i];
    const std::string path = "mpc.branch row " + std::to_string(i + 1);
    if (r.size() < 6) throw ParseError(path, "too few columns");
    if (r.size() >= 11 && r[10] == 0.0) continue;  // out of service
    const double x = r[3];
    if (!(x > 0.0)) throw ValidationError(path + ": reactance must be > 0");
    const double rate = r.size() > 5 ? r[5] : 0.0;
    net::Line ln{static_cast<int>(r[0]), static_cast<int>(r[1]), x};
    if (rate > 0.0) {
      ln.fmin = -rate;
      ln.fmax = rate;
    } else {
      ++unlimited;
    }
    lines.push_back(ln);
  }
  if (unlimited > 0 && warnings)
    warnings->push_back(std::to_string(unlimited) +
                        " branch(es) with rateA = 0 treated as unlimited (+/-1e9 MW)");
  return net::Network(std::move(ids), std::move(lines), root);
}

}  // namespace flexmkt::market
