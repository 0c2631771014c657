#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "mpm/market.hpp"
#include "mpm/scoring.hpp"

namespace mpm {

struct DaMatch {
  std::string requirement_id;
  std::string service_id;
  std::size_t row = 0;
  std::size_t col = 0;
  double x = 0;      // proportion in (0, 1]
  double price = 0;  // always the requester's bid
};

struct DaResult {
  MatchMatrix x;
  std::vector<DaMatch> matches;
};

/// Price-only double auction baseline.
///
/// Bids are walked in ascending order and offers in descending order (stable
/// on submission order). While the current offer is not below the current
/// bid the offer cursor advances; a crossing offer is matched with the bid at
/// the bid price and both cursors advance. Each match takes the largest
/// cache-feasible proportion min(1, C/s). Delay, energy and reputation are
/// never read.
inline DaResult run_da(const MarketInstance& inst) {
  const std::size_t m = inst.m(), n = inst.n();
  DaResult out{MatchMatrix(m, n), {}};

  std::vector<std::size_t> bids(m), offers(n);
  std::iota(bids.begin(), bids.end(), std::size_t{0});
  std::iota(offers.begin(), offers.end(), std::size_t{0});
  std::stable_sort(bids.begin(), bids.end(), [&](std::size_t l, std::size_t r) {
    return inst.requirements[l].bp < inst.requirements[r].bp;
  });
  std::stable_sort(offers.begin(), offers.end(), [&](std::size_t l, std::size_t r) {
    return inst.services[l].op > inst.services[r].op;
  });

  std::size_t bi = 0, oi = 0;
  while (bi < m && oi < n) {
    const Requirement& req = inst.requirements[bids[bi]];
    const ServiceOffer& svc = inst.services[offers[oi]];
    if (svc.op >= req.bp) {
      ++oi;
      continue;
    }
    const double x = std::min(1.0, svc.C / req.s);
    if (x > 0) {
      out.x(bids[bi], offers[oi]) = x;
      out.matches.push_back({req.id, svc.id, bids[bi], offers[oi], x, req.bp});
    }
    ++bi;
    ++oi;
  }
  return out;
}

}  // namespace mpm
