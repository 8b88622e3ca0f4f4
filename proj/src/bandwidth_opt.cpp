#include "anisova/bandwidth_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "anisova/error.hpp"

namespace anisova {
namespace {

constexpr double kLogLambdaLo = -30.0 * 2.302585092994046;  // 1e-30
constexpr double kLogLambdaHi = 30.0 * 2.302585092994046;   // 1e30
constexpr double kLogLambdaLimit = 700.0;
constexpr int kBisectionSteps = 200;

double TermLhs(const TermConstants& k, double log_lambda) {
  if (k.A == 0.0) return k.B;
  const double a1 = 1.0 + k.A;
  return std::exp(std::log(k.B) / a1 -
                  k.A / a1 * (log_lambda + std::log(k.A)));
}

double LhsLog(std::span<const TermConstants> constants, double log_lambda) {
  double sum = 0.0;
  for (const auto& k : constants) sum += TermLhs(k, log_lambda);
  return sum;
}

std::size_t TermCardinality(const BandwidthVector& bw) {
  std::size_t p = 1;
  for (int m : bw) p *= static_cast<std::size_t>(m - 1);
  return p;
}

double TermObjective(const TermProblem& tp, const BandwidthVector& bw) {
  double obj = 0.0;
  for (std::size_t i = 0; i < bw.size(); ++i) {
    if (!tp.learned[i]) continue;
    obj = std::max(obj, tp.C[i] * std::pow(bw[i] - 1.0, -2.0 * tp.s[i]));
  }
  return obj;
}

int RoundEven(double m) {
  if (!std::isfinite(m)) return std::numeric_limits<int>::max() / 4;
  const double half = std::round(m / 2.0);
  if (half > static_cast<double>(std::numeric_limits<int>::max() / 4)) {
    return std::numeric_limits<int>::max() / 4;
  }
  return 2 * static_cast<int>(half);
}

}  // namespace

void AllocationProblem::validate() const {
  if (budget < 2) throw Error(ErrorCode::kConfig, "budget must be >= 2");
  if (min_bandwidth < 2 || min_bandwidth % 2 != 0) {
    throw Error(ErrorCode::kInvalidBandwidth,
                "min_bandwidth must be even and >= 2");
  }
  std::size_t minimal = 1;
  for (const auto& tp : terms) {
    const std::size_t k = tp.term.size();
    if (tp.learned.size() != k || tp.C.size() != k || tp.s.size() != k ||
        tp.fixed_bandwidth.size() != k) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "term problem vectors do not match term " + tp.term.label());
    }
    std::size_t box = 1;
    for (std::size_t i = 0; i < k; ++i) {
      if (tp.learned[i]) {
        if (!(tp.C[i] > 0.0) || !(tp.s[i] > 0.0) || !std::isfinite(tp.C[i]) ||
            !std::isfinite(tp.s[i])) {
          throw Error(ErrorCode::kDomain,
                      "C and s must be positive for term " + tp.term.label());
        }
        box *= static_cast<std::size_t>(min_bandwidth - 1);
      } else {
        const int m = tp.fixed_bandwidth[i];
        if (m < 2 || m % 2 != 0) {
          throw Error(ErrorCode::kInvalidBandwidth,
                      "fixed bandwidths must be even and >= 2 in term " +
                          tp.term.label());
        }
        box *= static_cast<std::size_t>(m - 1);
      }
    }
    minimal += box;
  }
  if (minimal > budget) {
    throw Error(ErrorCode::kInfeasible,
                "minimal boxes need " + std::to_string(minimal) +
                    " frequencies, budget is " + std::to_string(budget));
  }
}

TermProblem uniform_term(const AnovaTerm& term, double C, double s) {
  const std::size_t k = term.size();
  return TermProblem{term, std::vector<bool>(k, true), std::vector<double>(k, C),
                     std::vector<double>(k, s), std::vector<int>(k, 0)};
}

std::vector<TermConstants> reduce_constants(const AllocationProblem& problem) {
  std::vector<TermConstants> out;
  out.reserve(problem.terms.size());
  for (const auto& tp : problem.terms) {
    if (tp.term.empty()) {
      throw Error(ErrorCode::kDegenerateTerm,
                  "term without dims has no bandwidth to allocate");
    }
    TermConstants k;
    double log_b = 0.0;
    for (std::size_t i = 0; i < tp.term.size(); ++i) {
      if (tp.learned[i]) {
        k.A += 0.5 / tp.s[i];
        log_b += std::log(tp.C[i]) / (2.0 * tp.s[i]);
      } else {
        log_b += std::log(tp.fixed_bandwidth[i] - 1.0);
      }
    }
    k.B = std::exp(log_b);
    out.push_back(k);
  }
  return out;
}

double lambda_lhs(std::span<const TermConstants> constants, double lambda) {
  return LhsLog(constants, std::log(lambda));
}

double solve_lambda(std::span<const TermConstants> constants, std::size_t m) {
  if (m < 2) throw Error(ErrorCode::kConfig, "budget must be >= 2");
  const double target = static_cast<double>(m - 1);
  double fixed = 0.0;
  bool any_free = false;
  for (const auto& k : constants) {
    if (k.A > 0.0) {
      any_free = true;
    } else {
      fixed += k.B;
    }
  }
  if (!any_free) {
    throw Error(ErrorCode::kSolver,
                "no term has learned dimensions; lambda is undetermined");
  }
  if (fixed >= target) {
    throw Error(ErrorCode::kInfeasible,
                "fixed boxes already use the whole budget");
  }

  double lo = kLogLambdaLo, hi = kLogLambdaHi;
  while (LhsLog(constants, lo) <= target && lo > -kLogLambdaLimit) lo -= 23.0;
  while (LhsLog(constants, hi) >= target && hi < kLogLambdaLimit) hi += 23.0;
  const double f_lo = LhsLog(constants, lo), f_hi = LhsLog(constants, hi);
  if (!(f_lo > target && f_hi < target)) {
    std::ostringstream os;
    os << "cannot bracket lambda: lhs(" << std::exp(lo) << ") = " << f_lo
       << ", lhs(" << std::exp(hi) << ") = " << f_hi << ", target " << target;
    throw Error(ErrorCode::kSolver, os.str());
  }
  for (int it = 0; it < kBisectionSteps; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (LhsLog(constants, mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // Pick the bracket end with the smaller residual.
  const double r_lo = std::abs(LhsLog(constants, lo) - target);
  const double r_hi = std::abs(LhsLog(constants, hi) - target);
  return std::exp(r_lo <= r_hi ? lo : hi);
}

std::vector<std::vector<double>> bandwidths_from_lambda(
    const AllocationProblem& problem, std::span<const TermConstants> constants,
    double lambda) {
  std::vector<std::vector<double>> out;
  out.reserve(problem.terms.size());
  const double log_lambda = std::log(lambda);
  for (std::size_t u = 0; u < problem.terms.size(); ++u) {
    const auto& tp = problem.terms[u];
    const auto& k = constants[u];
    std::vector<double> m(tp.term.size());
    const double log_z =
        k.A > 0.0 ? (log_lambda + std::log(k.A) + std::log(k.B)) / (1.0 + k.A)
                  : 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (tp.learned[i]) {
        m[i] = std::exp((std::log(tp.C[i]) - log_z) / (2.0 * tp.s[i])) + 1.0;
      } else {
        m[i] = tp.fixed_bandwidth[i];
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

GroupedIndexSet BandwidthPlan::index_set(int d) const {
  std::vector<std::pair<AnovaTerm, BandwidthVector>> pairs;
  pairs.reserve(terms.size());
  for (std::size_t u = 0; u < terms.size(); ++u) {
    pairs.emplace_back(terms[u], bandwidths[u]);
  }
  return build_grouped(d, pairs, true);
}

BandwidthPlan round_and_repair(
    const std::vector<std::vector<double>>& continuous,
    const AllocationProblem& problem) {
  problem.validate();
  const std::size_t budget = problem.budget;
  const int min_bw = problem.min_bandwidth;
  const auto& terms = problem.terms;

  BandwidthPlan plan;
  plan.continuous = continuous;
  plan.bandwidths.resize(terms.size());
  for (std::size_t u = 0; u < terms.size(); ++u) {
    plan.terms.push_back(terms[u].term);
    auto& bw = plan.bandwidths[u];
    bw.resize(terms[u].term.size());
    for (std::size_t i = 0; i < bw.size(); ++i) {
      bw[i] = terms[u].learned[i]
                  ? std::max(min_bw, RoundEven(continuous[u][i]))
                  : terms[u].fixed_bandwidth[i];
    }
  }

  auto cardinality = [&] {
    std::size_t c = 1;
    for (const auto& bw : plan.bandwidths) c += TermCardinality(bw);
    return c;
  };
  // Change in cardinality and objective from moving bandwidth (u, i) by step.
  struct Move {
    std::size_t u, i;
    long delta_card;
    double delta_obj;
  };
  auto evaluate_move = [&](std::size_t u, std::size_t i, int step) {
    BandwidthVector after = plan.bandwidths[u];
    after[i] += step;
    return Move{u, i,
                static_cast<long>(TermCardinality(after)) -
                    static_cast<long>(TermCardinality(plan.bandwidths[u])),
                TermObjective(terms[u], after) -
                    TermObjective(terms[u], plan.bandwidths[u])};
  };

  std::size_t card = cardinality();
  // Shrink: smallest objective increase first.
  while (card > budget) {
    bool found = false;
    Move best{};
    for (std::size_t u = 0; u < terms.size(); ++u) {
      for (std::size_t i = 0; i < terms[u].term.size(); ++i) {
        if (!terms[u].learned[i] || plan.bandwidths[u][i] - 2 < min_bw) continue;
        const Move mv = evaluate_move(u, i, -2);
        if (!found || mv.delta_obj < best.delta_obj) {
          best = mv;
          found = true;
        }
      }
    }
    if (!found) {
      throw Error(ErrorCode::kInfeasible,
                  "cannot shrink bandwidths below min_bandwidth to meet budget " +
                      std::to_string(budget));
    }
    plan.bandwidths[best.u][best.i] -= 2;
    card = cardinality();
  }

  // Grow while an increment still fits: largest objective decrease first.
  for (;;) {
    bool found = false;
    Move best{};
    for (std::size_t u = 0; u < terms.size(); ++u) {
      for (std::size_t i = 0; i < terms[u].term.size(); ++i) {
        if (!terms[u].learned[i]) continue;
        const Move mv = evaluate_move(u, i, +2);
        if (card + static_cast<std::size_t>(mv.delta_card) > budget) continue;
        if (!found || mv.delta_obj < best.delta_obj) {
          best = mv;
          found = true;
        }
      }
    }
    if (!found) break;
    plan.bandwidths[best.u][best.i] += 2;
    card = cardinality();
  }

  // One overshooting increment if it lands closer to the budget.
  {
    const std::size_t gap = budget - card;
    bool found = false;
    Move best{};
    std::size_t best_gap = gap;
    for (std::size_t u = 0; u < terms.size(); ++u) {
      for (std::size_t i = 0; i < terms[u].term.size(); ++i) {
        if (!terms[u].learned[i]) continue;
        const Move mv = evaluate_move(u, i, +2);
        const std::size_t over =
            card + static_cast<std::size_t>(mv.delta_card) - budget;
        if (over < best_gap ||
            (found && over == best_gap && mv.delta_obj < best.delta_obj)) {
          best = mv;
          best_gap = over;
          found = true;
        }
      }
    }
    if (found) {
      plan.bandwidths[best.u][best.i] += 2;
      card = cardinality();
    }
  }

  plan.realized_cardinality = card;
  return plan;
}

BandwidthPlan optimize(const AllocationProblem& problem) {
  problem.validate();
  const auto constants = reduce_constants(problem);
  bool any_free = false;
  for (const auto& k : constants) any_free = any_free || k.A > 0.0;
  if (!any_free) {
    // Nothing to optimise: every bandwidth is fixed.
    std::vector<std::vector<double>> continuous;
    for (const auto& tp : problem.terms) {
      continuous.emplace_back(tp.fixed_bandwidth.begin(),
                              tp.fixed_bandwidth.end());
    }
    return round_and_repair(continuous, problem);
  }
  const double lambda = solve_lambda(constants, problem.budget);
  BandwidthPlan plan = round_and_repair(
      bandwidths_from_lambda(problem, constants, lambda), problem);
  plan.lambda = lambda;
  return plan;
}

double allocation_objective(const AllocationProblem& problem,
                            const std::vector<std::vector<double>>& bandwidths) {
  double total = 0.0;
  for (std::size_t u = 0; u < problem.terms.size(); ++u) {
    const auto& tp = problem.terms[u];
    double obj = 0.0;
    for (std::size_t i = 0; i < tp.term.size(); ++i) {
      if (!tp.learned[i]) continue;
      obj = std::max(obj,
                     tp.C[i] * std::pow(bandwidths[u][i] - 1.0, -2.0 * tp.s[i]));
    }
    total += obj;
  }
  return total;
}

double continuous_cardinality(
    const std::vector<std::vector<double>>& bandwidths) {
  double total = 1.0;
  for (const auto& bw : bandwidths) {
    double p = 1.0;
    for (double m : bw) p *= m - 1.0;
    total += p;
  }
  return total;
}

std::size_t plan_budget(std::size_t n_samples, double log_base) {
  const double scale = log_base > 0.0 ? 1.0 / std::log(log_base) : 1.0;
  const double n = static_cast<double>(n_samples);
  auto fits = [&](std::size_t m) {
    const double md = static_cast<double>(m);
    return md * std::log(md) * scale <= n;
  };
  std::size_t lo = 1, hi = std::max<std::size_t>(n_samples, 2) + 2;
  while (fits(hi)) hi *= 2;
  // Invariant: fits(lo), !fits(hi).
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (fits(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double box_projection_worst_case(std::span<const int> bandwidths,
                                 std::span<const double> smoothness) {
  if (bandwidths.size() != smoothness.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "bandwidth and smoothness vectors differ in length");
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < bandwidths.size(); ++j) {
    if (bandwidths[j] < 2 || bandwidths[j] % 2 != 0) {
      throw Error(ErrorCode::kInvalidBandwidth,
                  "box bandwidths must be even and >= 2");
    }
    const double half = bandwidths[j] / 2;
    worst = std::max(worst, 1.0 / std::pow(half, 2.0 * smoothness[j]));
  }
  return worst;
}

}  // namespace anisova
