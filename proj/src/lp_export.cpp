#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "flexmkt/mp_solver.hpp"

namespace flexmkt::mp {
namespace {

std::string num(double v) {
  if (v == kInf) return "+inf";
  if (v == -kInf) return "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// LP-format identifiers: no leading digit or period, restricted charset, unique.
std::vector<std::string> sanitize(const std::vector<std::string>& raw, const char* prefix) {
  std::vector<std::string> out;
  std::unordered_set<std::string> used;
  for (size_t i = 0; i < raw.size(); ++i) {
    std::string s;
    for (char c : raw[i]) {
      const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                      c == '_' || c == '.';
      s.push_back(ok ? c : '_');
    }
    if (s.empty() || (s[0] >= '0' && s[0] <= '9') || s[0] == '.' || s[0] == 'e' || s[0] == 'E')
      s = prefix + s;
    if (s.size() > 200) s.resize(200);
    if (used.count(s)) s += "_" + std::to_string(i);
    used.insert(s);
    out.push_back(std::move(s));
  }
  return out;
}

void write_terms(std::ostringstream& os, const std::vector<std::pair<double, std::string>>& terms) {
  int on_line = 0;
  bool first = true;
  for (const auto& [c, name] : terms) {
    if (on_line == 8) {
      os << "\n   ";
      on_line = 0;
    }
    if (first) {
      os << (c < 0 ? "- " : "") << num(std::abs(c)) << " " << name;
      first = false;
    } else {
      os << (c < 0 ? " - " : " + ") << num(std::abs(c)) << " " << name;
    }
    ++on_line;
  }
}

std::string render(const LinearProgram& lp, const std::vector<OneHotGroup>* groups) {
  std::vector<std::string> raw;
  for (const auto& v : lp.variables()) raw.push_back(v.name);
  const auto vn = sanitize(raw, "x_");
  raw.clear();
  for (const auto& r : lp.constraints()) raw.push_back(r.name);
  if (groups)
    for (const auto& g : *groups) raw.push_back("onehot_" + g.name);
  const auto rn = sanitize(raw, "r_");

  std::ostringstream os;
  os << "Minimize\n obj: ";
  std::vector<std::pair<double, std::string>> obj;
  for (size_t j = 0; j < lp.variables().size(); ++j)
    if (lp.variables()[j].cost != 0.0) obj.emplace_back(lp.variables()[j].cost, vn[j]);
  if (obj.empty() && !vn.empty()) obj.emplace_back(0.0, vn[0]);
  write_terms(os, obj);
  if (lp.objective_offset() != 0.0)
    os << (lp.objective_offset() < 0 ? " - " : " + ") << num(std::abs(lp.objective_offset()));
  os << "\nSubject To\n";

  auto row = [&](const std::string& name, const std::vector<Term>& terms, const char* sense,
                 double rhs) {
    std::vector<std::pair<double, std::string>> t;
    for (const auto& term : terms) t.emplace_back(term.coef, vn[term.var]);
    if (t.empty() && !vn.empty()) t.emplace_back(0.0, vn[0]);
    os << " " << name << ": ";
    write_terms(os, t);
    os << " " << sense << " " << num(rhs) << "\n";
  };
  for (size_t i = 0; i < lp.constraints().size(); ++i) {
    const auto& r = lp.constraints()[i];
    if (r.is_equality()) {
      row(rn[i], r.terms, "=", r.lower);
    } else if (std::isfinite(r.lower) && std::isfinite(r.upper)) {
      row(rn[i] + "_lo", r.terms, ">=", r.lower);
      row(rn[i] + "_hi", r.terms, "<=", r.upper);
    } else if (std::isfinite(r.lower)) {
      row(rn[i], r.terms, ">=", r.lower);
    } else if (std::isfinite(r.upper)) {
      row(rn[i], r.terms, "<=", r.upper);
    }
  }
  if (groups) {
    size_t k = lp.constraints().size();
    for (const auto& g : *groups) {
      std::vector<Term> t;
      for (int v : g.members) t.push_back({v, 1.0});
      row(rn[k++], t, "=", 1.0);
    }
  }

  os << "Bounds\n";
  for (size_t j = 0; j < lp.variables().size(); ++j) {
    const auto& v = lp.variables()[j];
    const bool lo = std::isfinite(v.lower), hi = std::isfinite(v.upper);
    if (lo && hi && v.lower == v.upper) os << " " << vn[j] << " = " << num(v.lower) << "\n";
    else if (lo && hi) os << " " << num(v.lower) << " <= " << vn[j] << " <= " << num(v.upper) << "\n";
    else if (lo) os << " " << vn[j] << " >= " << num(v.lower) << "\n";
    else if (hi) os << " -inf <= " << vn[j] << " <= " << num(v.upper) << "\n";
    else os << " " << vn[j] << " free\n";
  }

  if (groups && !groups->empty()) {
    os << "Binaries\n";
    for (const auto& g : *groups) {
      os << " ";
      for (size_t i = 0; i < g.members.size(); ++i) os << (i ? " " : "") << vn[g.members[i]];
      os << "\n";
    }
  }
  os << "End\n";
  return os.str();
}

}  // namespace

std::string export_lp(const LinearProgram& lp) { return render(lp, nullptr); }

std::string export_lp(const MixedProgram& mip) { return render(mip.lp, &mip.groups); }

}  // namespace flexmkt::mp
