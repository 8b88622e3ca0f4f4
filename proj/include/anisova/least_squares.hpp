#ifndef ANISOVA_LEAST_SQUARES_HPP_
#define ANISOVA_LEAST_SQUARES_HPP_

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "anisova/fourier_operator.hpp"
#include "anisova/index_sets.hpp"

namespace anisova {

struct FitConfig {
  int max_iter = 50;
  double rel_tol = 1e-8;
  // Confidence parameter t of the oversampling rule n >= 10|I|(log|I| + t);
  // only used to decide whether to warn.
  double oversampling_t = 1.0;
  std::string backend = "direct-cached";

  void validate() const;
};

struct FitDiagnostics {
  int iterations = 0;
  // ||L g - y|| / ||y|| computed from the explicit final residual.
  double relative_residual = 0.0;
  // ||L^*(L g - y)|| as estimated by LSQR.
  double normal_residual = 0.0;
  bool converged = false;
  bool undersampled = false;
  // Sum of squared training residuals; feeds the fast CV score.
  double residual_sum_squares = 0.0;
  std::size_t n_samples = 0;
};

// Least squares trigonometric polynomial on a grouped index set.
struct AnovaApproximation {
  GroupedIndexSet index_set;
  CoefficientVector coefficients;
  FitDiagnostics fit;
};

// True when n >= 10 |I| (log|I| + t).
bool IsLogOversampled(std::size_t n, std::size_t set_size, double t);

AnovaApproximation fit(const SamplingSet& x, const GroupedIndexSet& set,
                       const FitConfig& cfg = {});

// Evaluates the approximation at row-major points of dimension d.
std::vector<Complex> evaluate(const AnovaApproximation& approx,
                              std::span<const double> points,
                              const std::string& backend = "direct-cached");

// Sum of |g_k|^2 over the box of `term`.
double group_energy(const AnovaApproximation& approx, const AnovaTerm& term);

// |g_0|^2, or 0 when the constant is absent.
double constant_energy(const AnovaApproximation& approx);

// Sum of |g_k|^2 over frequencies removed when dim `dim` of `term` is
// narrowed to m_prime.
double tail_energy(const AnovaApproximation& approx, const AnovaTerm& term,
                   int dim, int m_prime);

// Tail energies and tail sizes for every even m' = 0, 2, ..., m along one dim
// of a term, computed from the marginal energy profile of the box.
struct TailProfile {
  std::vector<double> energy;
  std::vector<std::size_t> count;
};
TailProfile tail_profile(const AnovaApproximation& approx,
                         const AnovaTerm& term, int dim);

// (1/n) sum |g(x_i) - y_i|^2 / (1 - |I|/n)^2.
double fcv_score(const AnovaApproximation& approx, const SamplingSet& x);
double fcv_score(double residual_sum_squares, std::size_t n,
                 std::size_t set_size);

using PointFunction = std::function<Complex(std::span<const double>)>;

// Monte Carlo estimate of ||f - g||_{L2} over n_test seeded uniform points.
double l2_test_error(const AnovaApproximation& approx, const PointFunction& f,
                     std::size_t n_test, std::uint64_t seed,
                     const std::string& backend = "direct-cached");

}  // namespace anisova

#endif  // ANISOVA_LEAST_SQUARES_HPP_
