#ifndef ANISOVA_BANDWIDTH_OPT_HPP_
#define ANISOVA_BANDWIDTH_OPT_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "anisova/index_sets.hpp"

namespace anisova {

// Per term: dims with learned (C, s) take part in the optimisation, all other
// dims keep a fixed even bandwidth. Vectors are aligned with term.dims().
struct TermProblem {
  AnovaTerm term;
  std::vector<bool> learned;
  std::vector<double> C;
  std::vector<double> s;
  std::vector<int> fixed_bandwidth;
};

struct AllocationProblem {
  // Total |I| including the constant frequency.
  std::size_t budget = 0;
  std::vector<TermProblem> terms;
  int min_bandwidth = 4;

  void validate() const;
};

// Term with every dim learned from the same (C, s).
TermProblem uniform_term(const AnovaTerm& term, double C, double s);

struct TermConstants {
  double A = 0.0;
  double B = 0.0;
};

std::vector<TermConstants> reduce_constants(const AllocationProblem& problem);

// Sum_u B_u^{1/(1+A_u)} (lambda A_u)^{-A_u/(1+A_u)}; terms with A_u = 0
// contribute B_u.
double lambda_lhs(std::span<const TermConstants> constants, double lambda);

// Root of lambda_lhs(lambda) = m - 1 by bisection in log(lambda).
double solve_lambda(std::span<const TermConstants> constants, std::size_t m);

// Continuous bandwidths m_{u,j}; fixed dims pass through unchanged.
std::vector<std::vector<double>> bandwidths_from_lambda(
    const AllocationProblem& problem, std::span<const TermConstants> constants,
    double lambda);

struct BandwidthPlan {
  std::vector<AnovaTerm> terms;
  std::vector<BandwidthVector> bandwidths;
  std::size_t realized_cardinality = 0;
  double lambda = 0.0;
  std::vector<std::vector<double>> continuous;

  GroupedIndexSet index_set(int d) const;
};

BandwidthPlan round_and_repair(
    const std::vector<std::vector<double>>& continuous,
    const AllocationProblem& problem);

// Full chain: constants, lambda, continuous solution, rounding.
BandwidthPlan optimize(const AllocationProblem& problem);

// sum_u max_{j learned} C_{u,j} (m_{u,j} - 1)^{-2 s_{u,j}}
double allocation_objective(const AllocationProblem& problem,
                            const std::vector<std::vector<double>>& bandwidths);

// 1 + sum_u prod_j (m_{u,j} - 1) for real-valued bandwidths.
double continuous_cardinality(const std::vector<std::vector<double>>& bandwidths);

// Largest m with m log(m) <= n, log in the given base (natural by default).
std::size_t plan_budget(std::size_t n_samples, double log_base = 0.0);

// Worst-case squared L2 error of projecting the unit ball of the anisotropic
// Sobolev space onto the box prod_j [-m_j/2, m_j/2):
// max_j (m_j/2)^{-2 s_j}.
double box_projection_worst_case(std::span<const int> bandwidths,
                                 std::span<const double> smoothness);

}  // namespace anisova

#endif  // ANISOVA_BANDWIDTH_OPT_HPP_
