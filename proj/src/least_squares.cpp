#include "anisova/least_squares.hpp"

#include <cmath>
#include <sstream>

#include "anisova/error.hpp"
#include "anisova/log.hpp"
#include "anisova/lsqr.hpp"
#include "anisova/random.hpp"

namespace anisova {
namespace {

constexpr std::size_t kTestBatch = 16384;

const FrequencyBox& BoxOf(const AnovaApproximation& approx,
                          const AnovaTerm& term, std::size_t* offset) {
  const int b = approx.index_set.find(term);
  if (b < 0) {
    throw Error(ErrorCode::kUnknownTerm,
                "term " + term.label() + " not in approximation");
  }
  *offset = approx.index_set.offset(static_cast<std::size_t>(b));
  return approx.index_set.boxes()[static_cast<std::size_t>(b)];
}

}  // namespace

void FitConfig::validate() const {
  if (max_iter < 1) throw Error(ErrorCode::kConfig, "max_iter must be >= 1");
  if (!(rel_tol > 0.0)) throw Error(ErrorCode::kConfig, "rel_tol must be > 0");
}

bool IsLogOversampled(std::size_t n, std::size_t set_size, double t) {
  const double m = static_cast<double>(set_size);
  return static_cast<double>(n) >= 10.0 * m * (std::log(m) + t);
}

AnovaApproximation fit(const SamplingSet& x, const GroupedIndexSet& set,
                       const FitConfig& cfg) {
  cfg.validate();
  x.validate();
  if (set.size() == 0) {
    throw Error(ErrorCode::kEmptyIndexSet, "cannot fit on an empty index set");
  }
  if (x.d != set.d()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "sample dimension differs from index set dimension");
  }
  AnovaApproximation approx;
  approx.index_set = set;
  approx.fit.n_samples = x.n();
  approx.fit.undersampled = !IsLogOversampled(x.n(), set.size(),
                                              cfg.oversampling_t);
  if (approx.fit.undersampled) {
    std::ostringstream os;
    os << "n = " << x.n() << " is below logarithmic oversampling for |I| = "
       << set.size();
    LogWarning(os.str());
  }

  const auto op = backend_select(OperatorConfig{cfg.backend}, x, set);
  LsqrResult sol = Lsqr(*op, x.values, cfg.max_iter, cfg.rel_tol);
  approx.coefficients = std::move(sol.x);
  approx.fit.iterations = sol.iterations;
  approx.fit.converged = sol.converged;
  approx.fit.normal_residual = sol.normal_residual_norm;

  const std::vector<Complex> g = op->forward(approx.coefficients);
  double rss = 0.0, ynorm = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    rss += std::norm(g[i] - x.values[i]);
    ynorm += std::norm(x.values[i]);
  }
  approx.fit.residual_sum_squares = rss;
  approx.fit.relative_residual = ynorm > 0.0 ? std::sqrt(rss / ynorm) : 0.0;
  if (!sol.converged) {
    LogWarning("LSQR did not converge within " + std::to_string(cfg.max_iter) +
               " iterations");
  }
  return approx;
}

std::vector<Complex> evaluate(const AnovaApproximation& approx,
                              std::span<const double> points,
                              const std::string& backend) {
  const int d = approx.index_set.d();
  if (d <= 0 || points.size() % static_cast<std::size_t>(d) != 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                "point array is not a multiple of dimension " +
                    std::to_string(d));
  }
  const auto op = backend_select(OperatorConfig{backend}, points, d,
                                 approx.index_set);
  return op->forward(approx.coefficients);
}

double group_energy(const AnovaApproximation& approx, const AnovaTerm& term) {
  std::size_t offset = 0;
  const auto& box = BoxOf(approx, term, &offset);
  double e = 0.0;
  for (std::size_t l = 0; l < box.size(); ++l) {
    e += std::norm(approx.coefficients[offset + l]);
  }
  return e;
}

double constant_energy(const AnovaApproximation& approx) {
  return approx.index_set.includes_constant()
             ? std::norm(approx.coefficients[0])
             : 0.0;
}

double tail_energy(const AnovaApproximation& approx, const AnovaTerm& term,
                   int dim, int m_prime) {
  const GroupedIndexSet varied =
      varied_set(approx.index_set, term, dim, m_prime);
  double e = 0.0;
  for (std::size_t pos : set_difference_tail(approx.index_set, varied)) {
    e += std::norm(approx.coefficients[pos]);
  }
  return e;
}

TailProfile tail_profile(const AnovaApproximation& approx,
                         const AnovaTerm& term, int dim) {
  std::size_t offset = 0;
  const auto& box = BoxOf(approx, term, &offset);
  const int pos = term.position(dim);
  if (pos < 0) {
    throw Error(ErrorCode::kOutOfRange, "dimension " + std::to_string(dim) +
                                            " not in term " + term.label());
  }
  const auto p = static_cast<std::size_t>(pos);
  const int m = box.bandwidths()[p];
  const int ext = box.extent(p);
  const int half = m / 2;

  // Marginal energy per value index along the probed dim.
  std::vector<double> marginal(static_cast<std::size_t>(ext), 0.0);
  for (std::size_t l = 0; l < box.size(); ++l) {
    const int v = box.component(l, p);
    const int idx = v < 0 ? v + half : v + half - 1;
    marginal[static_cast<std::size_t>(idx)] +=
        std::norm(approx.coefficients[offset + l]);
  }
  const std::size_t others = box.size() / static_cast<std::size_t>(ext);

  TailProfile out;
  for (int mp = 0; mp <= m; mp += 2) {
    // Kept values are [-mp/2, mp/2) \ {0}; tail is everything else.
    double e = 0.0;
    std::size_t outside = 0;
    for (int idx = 0; idx < ext; ++idx) {
      const int v = BoxValue(m, idx);
      if (v < -mp / 2 || v >= mp / 2) {
        e += marginal[static_cast<std::size_t>(idx)];
        ++outside;
      }
    }
    out.energy.push_back(e);
    out.count.push_back(outside * others);
  }
  return out;
}

double fcv_score(double residual_sum_squares, std::size_t n,
                 std::size_t set_size) {
  if (set_size >= n) {
    throw Error(ErrorCode::kUndefinedScore,
                "fast CV needs |I| < n (|I| = " + std::to_string(set_size) +
                    ", n = " + std::to_string(n) + ")");
  }
  const double ratio = 1.0 - static_cast<double>(set_size) /
                                 static_cast<double>(n);
  return residual_sum_squares / static_cast<double>(n) / (ratio * ratio);
}

double fcv_score(const AnovaApproximation& approx, const SamplingSet& x) {
  if (approx.index_set.size() >= x.n()) {
    return fcv_score(0.0, x.n(), approx.index_set.size());
  }
  const std::vector<Complex> g = evaluate(approx, x.points);
  double rss = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) rss += std::norm(g[i] - x.values[i]);
  return fcv_score(rss, x.n(), approx.index_set.size());
}

double l2_test_error(const AnovaApproximation& approx, const PointFunction& f,
                     std::size_t n_test, std::uint64_t seed,
                     const std::string& backend) {
  if (n_test == 0) {
    throw Error(ErrorCode::kInsufficientData, "n_test must be positive");
  }
  const auto d = static_cast<std::size_t>(approx.index_set.d());
  Rng rng(seed);
  double sum = 0.0;
  std::vector<double> pts;
  for (std::size_t done = 0; done < n_test; done += kTestBatch) {
    const std::size_t count = std::min(kTestBatch, n_test - done);
    pts.resize(count * d);
    for (auto& p : pts) p = rng.uniform();
    const std::vector<Complex> g = evaluate(approx, pts, backend);
    double batch = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      batch += std::norm(f({pts.data() + i * d, d}) - g[i]);
    }
    sum += batch;
  }
  return std::sqrt(sum / static_cast<double>(n_test));
}

}  // namespace anisova
