#include "anisova/smoothness.hpp"

#include <cmath>
#include <map>

#include "anisova/error.hpp"
#include "anisova/parallel.hpp"

namespace anisova {

DecayFit weighted_loglog_fit(std::span<const double> y) {
  const auto n = static_cast<int>(y.size());
  if (n < kMinFitPoints) {
    throw Error(ErrorCode::kInsufficientData,
                "log-log fit needs at least 3 points, got " + std::to_string(n));
  }
  for (double v : y) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kDomain, "log-log fit needs positive values");
    }
  }
  double harmonic = 0.0;
  for (int i = 1; i <= n; ++i) harmonic += 1.0 / i;

  DecayFit out;
  out.n_points = n;
  out.weights.resize(static_cast<std::size_t>(n));
  double sw_x = 0.0, sw_xx = 0.0, sw_y = 0.0, sw_xy = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double w = 1.0 / (harmonic * i);
    const double x = std::log(static_cast<double>(i));
    const double ly = std::log(y[static_cast<std::size_t>(i - 1)]);
    out.weights[static_cast<std::size_t>(i - 1)] = w;
    sw_x += w * x;
    sw_xx += w * x * x;
    sw_y += w * ly;
    sw_xy += w * x * ly;
  }
  const double denom = sw_xx - sw_x * sw_x;
  out.D = std::exp((sw_xx * sw_y - sw_xy * sw_x) / denom);
  out.t = -0.5 * (sw_xy - sw_x * sw_y) / denom;
  return out;
}

CoefficientFloor coefficient_floor(std::span<const Complex> coefficients) {
  std::map<long, std::size_t> histogram;
  for (const auto& g : coefficients) {
    const double mag = std::abs(g);
    if (mag > 0.0 && std::isfinite(mag)) {
      ++histogram[std::lround(std::log10(mag) / kFloorBinDex)];
    }
  }
  CoefficientFloor out;
  if (histogram.empty()) {
    out.all_zero = true;
    return out;
  }
  // Ascending bin order, strict comparison: ties keep the smaller bin.
  long best_bin = histogram.begin()->first;
  std::size_t best_count = 0;
  for (const auto& [bin, count] : histogram) {
    if (count > best_count) {
      best_bin = bin;
      best_count = count;
    }
  }
  out.c = std::pow(10.0, static_cast<double>(best_bin) * kFloorBinDex);
  return out;
}

CoefficientFloor coefficient_floor(const AnovaApproximation& approx) {
  return coefficient_floor(approx.coefficients);
}

int cutoff(const TailProfile& profile, double c) {
  const double c2 = c * c;
  int m_bar = 0;
  for (std::size_t i = 0; i < profile.energy.size(); ++i) {
    const double e = profile.energy[i];
    if (!(e > 0.0 && e > c2 * static_cast<double>(profile.count[i]))) break;
    m_bar = static_cast<int>(2 * i);
  }
  return m_bar;
}

int cutoff(const AnovaApproximation& approx, const AnovaTerm& term, int dim,
           double c) {
  return cutoff(tail_profile(approx, term, dim), c);
}

std::vector<double> decay_vector(const TailProfile& profile, int m_bar) {
  const auto count = static_cast<std::size_t>(m_bar / 2 + 1);
  return {profile.energy.begin(),
          profile.energy.begin() +
              static_cast<std::ptrdiff_t>(std::min(count, profile.energy.size()))};
}

const TermSmoothness* SmoothnessEstimate::find(const AnovaTerm& term) const {
  for (const auto& t : terms) {
    if (t.term == term) return &t;
  }
  return nullptr;
}

SmoothnessEstimate learn(const AnovaApproximation& approx) {
  SmoothnessEstimate est;
  const CoefficientFloor floor = coefficient_floor(approx);
  est.floor_c = floor.c;
  est.floor_all_zero = floor.all_zero;

  struct Probe {
    std::size_t term;
    int dim;
    int m_bar = 0;
    bool ok = false;
    double D = 0.0, s = 0.0;
  };
  std::vector<Probe> probes;
  const auto& boxes = approx.index_set.boxes();
  est.terms.resize(boxes.size());
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    est.terms[b].term = boxes[b].term();
    for (int j : boxes[b].term().dims()) probes.push_back({b, j});
  }

  ParallelFor(probes.size(), [&](std::size_t p) {
    Probe& probe = probes[p];
    const TailProfile profile =
        tail_profile(approx, boxes[probe.term].term(), probe.dim);
    probe.m_bar = floor.all_zero ? 0 : cutoff(profile, floor.c);
    const std::vector<double> v = decay_vector(profile, probe.m_bar);
    if (static_cast<int>(v.size()) < kMinFitPoints) return;
    const DecayFit f = weighted_loglog_fit(v);
    if (std::isfinite(f.D) && std::isfinite(f.t) && f.D > 0.0 && f.t > 0.0) {
      probe.ok = true;
      probe.D = f.D;
      probe.s = f.t;
    }
  });

  for (const auto& probe : probes) {
    auto& ts = est.terms[probe.term];
    ts.cutoff[probe.dim] = probe.m_bar;
    if (probe.ok) {
      ts.J.push_back(probe.dim);
      ts.D[probe.dim] = probe.D;
      ts.s[probe.dim] = probe.s;
    }
  }
  return est;
}

}  // namespace anisova
