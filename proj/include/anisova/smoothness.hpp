#ifndef ANISOVA_SMOOTHNESS_HPP_
#define ANISOVA_SMOOTHNESS_HPP_

#include <map>
#include <span>
#include <vector>

#include "anisova/index_sets.hpp"
#include "anisova/least_squares.hpp"

namespace anisova {

// Model y_i ~ D i^{-2t}, fitted in log-log scale with weights 1/(H_n i).
struct DecayFit {
  double D = 0.0;
  double t = 0.0;
  int n_points = 0;
  std::vector<double> weights;
};

DecayFit weighted_loglog_fit(std::span<const double> y);

struct CoefficientFloor {
  double c = 0.0;
  bool all_zero = false;
};

// Histogram bin width for log10 |g_k|.
inline constexpr double kFloorBinDex = 0.25;

// Most common coefficient magnitude: bins of width kFloorBinDex centred on
// multiples of kFloorBinDex; ties go to the smaller magnitude.
CoefficientFloor coefficient_floor(const AnovaApproximation& approx);
CoefficientFloor coefficient_floor(std::span<const Complex> coefficients);

// Largest even m <= m_{term,dim} such that the tail energy exceeds
// c^2 |tail| for every even m' in [0, m]; 0 if it already fails at 0.
int cutoff(const AnovaApproximation& approx, const AnovaTerm& term, int dim,
           double c);
int cutoff(const TailProfile& profile, double c);

// Fit vector for a cutoff: tail energies at m' = 0, 2, ..., m_bar.
std::vector<double> decay_vector(const TailProfile& profile, int m_bar);

struct TermSmoothness {
  AnovaTerm term;
  std::vector<int> J;
  std::map<int, double> D;
  std::map<int, double> s;
  std::map<int, int> cutoff;
};

struct SmoothnessEstimate {
  double floor_c = 0.0;
  bool floor_all_zero = false;
  std::vector<TermSmoothness> terms;

  const TermSmoothness* find(const AnovaTerm& term) const;
};

// Minimum number of decay points needed to attempt a fit.
inline constexpr int kMinFitPoints = 3;

SmoothnessEstimate learn(const AnovaApproximation& approx);

}  // namespace anisova

#endif  // ANISOVA_SMOOTHNESS_HPP_
