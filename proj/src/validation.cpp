#include <algorithm>
#include <cmath>

#include "flexmkt/clearing.hpp"
#include "flexmkt/market_model.hpp"

namespace flexmkt::market {

bool ValidationReport::all_radial() const {
  return std::all_of(dsos.begin(), dsos.end(), [](const DsoCheck& d) { return d.radial; });
}
bool ValidationReport::all_price_ordered() const {
  return std::all_of(dsos.begin(), dsos.end(), [](const DsoCheck& d) { return d.price_ordering; });
}
bool ValidationReport::all_layer1_feasible() const {
  return std::all_of(dsos.begin(), dsos.end(), [](const DsoCheck& d) { return d.layer1_feasible; });
}

ValidationReport validate_case(const MarketCase& c) {
  ValidationReport rep;
  for (const auto& d : c.dsos) {
    DsoCheck chk;
    chk.index = d.index;
    chk.radial = net::is_radial(d.network);
    chk.oriented = net::oriented_from_root(d.network);
    chk.max_down_price = -mp::kInf;
    chk.min_up_price = mp::kInf;
    int n_up = 0, n_down = 0;
    for (int b : c.bids_of(d.index)) {
      const auto& bid = c.bids[b];
      if (bid.dir == Direction::down) {
        chk.max_down_price = std::max(chk.max_down_price, bid.price);
        ++n_down;
      } else {
        chk.min_up_price = std::min(chk.min_up_price, bid.price);
        ++n_up;
      }
    }
    chk.price_ordering = chk.max_down_price < chk.min_up_price;
    const auto l1 = clearing::clear_dso_layer1(c, d.index, {});
    chk.layer1_feasible = l1.status != mp::SolveStatus::infeasible;

    const std::string tag = "DSO " + std::to_string(d.index) + ": ";
    if (!chk.radial) rep.warnings.push_back(tag + "network is meshed");
    else if (!chk.oriented) rep.warnings.push_back(tag + "some lines point toward the feeder head");
    if (!chk.price_ordering)
      rep.warnings.push_back(tag + "a downward bid is priced at or above an upward bid");
    if (n_up + n_down == 0) rep.warnings.push_back(tag + "no local bids");
    if (!chk.layer1_feasible) rep.warnings.push_back(tag + "local market is infeasible");
    rep.dsos.push_back(chk);
  }
  return rep;
}

}  // namespace flexmkt::market
