#include "peb/diagnostics/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "peb/diagnostics/energy.hpp"
#include "peb/diagnostics/statistics.hpp"
#include "peb/errors.hpp"

namespace peb::diagnostics {

namespace {

int cell_index(double t, double side, int per_axis) {
  const int i = static_cast<int>(std::floor((t + 1.0) / side));
  return std::clamp(i, 0, per_axis - 1);
}

}  // namespace

PatchPartition make_partition(const EvalGrid& grid, double side) {
  if (!(side > 0.0) || side > 2.0) throw DomainError("patch side must lie in (0, 2]");
  PatchPartition part;
  part.side = side;
  part.per_axis = static_cast<int>(std::ceil(2.0 / side - 1e-12));
  std::vector<int> id_of(static_cast<std::size_t>(part.per_axis * part.per_axis), -1);
  for (int iy = 0; iy < part.per_axis; ++iy) {
    for (int ix = 0; ix < part.per_axis; ++ix) {
      const double x0 = -1.0 + ix * side;
      const double y0 = -1.0 + iy * side;
      // Closest point of the square to the origin decides whether it meets the disk.
      const double cx = std::clamp(0.0, x0, x0 + side);
      const double cy = std::clamp(0.0, y0, y0 + side);
      if (cx * cx + cy * cy > 1.0) continue;
      Patch p;
      p.id = static_cast<int>(part.patches.size());
      p.ix = ix;
      p.iy = iy;
      p.center = {x0 + 0.5 * side, y0 + 0.5 * side};
      p.h = side * std::sqrt(2.0);
      id_of[static_cast<std::size_t>(iy * part.per_axis + ix)] = p.id;
      part.patches.push_back(p);
    }
  }
  auto locate = [&](Point q) {
    const int id = id_of[static_cast<std::size_t>(cell_index(q.y, side, part.per_axis) * part.per_axis +
                                                   cell_index(q.x, side, part.per_axis))];
    if (id < 0) throw DomainError("point outside every patch");
    return id;
  };
  for (const Point& q : grid.inside) {
    part.interior_patch.push_back(locate(q));
    ++part.patches[static_cast<std::size_t>(part.interior_patch.back())].n_interior;
  }
  for (const Point& q : grid.ring) {
    part.ring_patch.push_back(locate(q));
    ++part.patches[static_cast<std::size_t>(part.ring_patch.back())].n_ring;
  }
  return part;
}

IndicatorField local_indicators(const ResidualFields& r, const EvalGrid& grid, const PatchPartition& part,
                                const IndicatorWeights& a) {
  if (r.twist_sq.size() != grid.inside.size() || r.div.size() != grid.inside.size() ||
      r.port.size() != grid.ring.size() || part.interior_patch.size() != grid.inside.size()) {
    throw DomainError("residual fields do not match the grid or partition");
  }
  const std::size_t n = part.patches.size();
  IndicatorField f;
  f.twist.assign(n, 0.0);
  f.div.assign(n, 0.0);
  f.port.assign(n, 0.0);
  for (std::size_t k = 0; k < grid.inside.size(); ++k) {
    const auto i = static_cast<std::size_t>(part.interior_patch[k]);
    f.twist[i] += r.twist_sq[k];
    f.div[i] += r.div[k] * r.div[k];
  }
  for (std::size_t k = 0; k < grid.ring.size(); ++k) {
    const auto i = static_cast<std::size_t>(part.ring_patch[k]);
    f.port[i] += r.port[k] * r.port[k];
  }
  f.eta_sq.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Patch& p = part.patches[i];
    if (p.empty()) f.skipped.push_back(p.id);
    f.twist[i] *= a.alpha1 * grid.cell_area;
    f.div[i] *= a.alpha2 * p.h * p.h * grid.cell_area;
    f.port[i] *= a.alpha3 * p.h * grid.ring_ds;
    f.eta_sq[i] = f.twist[i] + f.div[i] + f.port[i];
  }
  return f;
}

std::vector<double> local_energy(const ErrorJets& e, const EvalGrid& grid, const PatchPartition& part,
                                 const physics::NonDimScheme& scheme) {
  if (e.interior.size() != grid.inside.size() || e.ring.size() != grid.ring.size()) {
    throw DomainError("error jets do not match the grid");
  }
  std::vector<double> out(part.patches.size(), 0.0);
  for (std::size_t k = 0; k < e.interior.size(); ++k) {
    const Jet2& j = e.interior[k];
    out[static_cast<std::size_t>(part.interior_patch[k])] += (j.gx * j.gx + j.gy * j.gy) * grid.cell_area;
  }
  for (std::size_t k = 0; k < e.ring.size(); ++k) {
    out[static_cast<std::size_t>(part.ring_patch[k])] += scheme.Bi * e.ring[k].v * e.ring[k].v * grid.ring_ds;
  }
  return out;
}

TwoSidedReport two_sided_check(const IndicatorField& eta, const ErrorJets& e, const EvalGrid& grid,
                               const PatchPartition& part, const physics::NonDimScheme& scheme,
                               const TwoSidedOptions& opt) {
  TwoSidedReport rep;
  const std::vector<double> local = local_energy(e, grid, part, scheme);
  rep.energy = std::accumulate(local.begin(), local.end(), 0.0);
  rep.eta_total = std::accumulate(eta.eta_sq.begin(), eta.eta_sq.end(), 0.0);
  if (rep.energy == 0.0 && rep.eta_total == 0.0) {
    rep.vacuous = true;
    rep.passed = true;
    rep.note = "no error energy and no residual: ratios undefined";
    return rep;
  }
  if (rep.eta_total == 0.0) {
    rep.note = "indicators vanish while the error energy does not";
    return rep;
  }
  rep.global_ratio = rep.energy / rep.eta_total;

  std::vector<double> ratios, eta_used, energy_used;
  for (const Patch& p : part.patches) {
    if (p.empty()) continue;
    const auto i = static_cast<std::size_t>(p.id);
    eta_used.push_back(eta.eta_sq[i]);
    energy_used.push_back(local[i]);
    if (eta.eta_sq[i] > 0.0) ratios.push_back(local[i] / eta.eta_sq[i]);
  }
  if (!ratios.empty()) {
    rep.ratio_min = *std::min_element(ratios.begin(), ratios.end());
    rep.ratio_max = *std::max_element(ratios.begin(), ratios.end());
    rep.ratio_median = median(ratios);
  }
  try {
    rep.spearman = spearman(eta_used, energy_used);
  } catch (const DomainError&) {
    rep.note = "rank correlation undefined (constant sample)";
  }

  // Patch holding the largest pointwise |e|.
  double best = -1.0;
  for (std::size_t k = 0; k < e.interior.size(); ++k) {
    if (std::abs(e.interior[k].v) > best) {
      best = std::abs(e.interior[k].v);
      rep.argmax_patch = part.interior_patch[k];
    }
  }
  for (std::size_t k = 0; k < e.ring.size(); ++k) {
    if (std::abs(e.ring[k].v) > best) {
      best = std::abs(e.ring[k].v);
      rep.argmax_patch = part.ring_patch[k];
    }
  }
  if (rep.argmax_patch >= 0) {
    const double mine = eta.eta_sq[static_cast<std::size_t>(rep.argmax_patch)];
    std::size_t above = 0;
    for (double v : eta_used) above += v > mine ? 1 : 0;
    rep.argmax_rank = static_cast<double>(above + 1) / static_cast<double>(eta_used.size());
  }

  const bool in_band = rep.global_ratio && *rep.global_ratio >= opt.ratio_low && *rep.global_ratio <= opt.ratio_high &&
                       rep.ratio_min && *rep.ratio_min >= opt.ratio_low && *rep.ratio_max <= opt.ratio_high;
  const bool ranked = rep.spearman && *rep.spearman >= opt.min_spearman;
  const bool top = rep.argmax_rank && *rep.argmax_rank <= opt.top_fraction;
  rep.passed = in_band && ranked && top;
  return rep;
}

}  // namespace peb::diagnostics
