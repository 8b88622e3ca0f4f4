#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "anisova/bandwidth_opt.hpp"
#include "test_util.hpp"

using namespace anisova;

namespace {

TermProblem Term(std::vector<int> dims, std::vector<double> c, std::vector<double> s,
                 std::vector<int> fixed = {}) {
  TermProblem t;
  t.term = AnovaTerm(dims);
  const auto k = dims.size();
  t.fixed_bandwidth = fixed.empty() ? std::vector<int>(k, 0) : fixed;
  t.learned.resize(k);
  t.C.resize(k);
  t.s.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    t.learned[i] = t.fixed_bandwidth[i] == 0;
    t.C[i] = c[i];
    t.s[i] = s[i];
  }
  return t;
}

// Random problem over d dims with up to max_terms distinct terms; some dims
// are fixed when allow_fixed.
AllocationProblem RandomProblem(std::mt19937_64& rng, bool allow_fixed) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AllocationProblem p;
  const auto set = testutil::RandomSet(rng, 4, 4, 3, 8);
  for (const auto& box : set.boxes()) {
    TermProblem t = uniform_term(box.term(), 1.0, 1.0);
    for (std::size_t i = 0; i < t.term.size(); ++i) {
      t.C[i] = std::exp(6.0 * u(rng) - 3.0);
      t.s[i] = 0.3 + 3.0 * u(rng);
      if (allow_fixed && u(rng) < 0.25) {
        t.learned[i] = false;
        t.fixed_bandwidth[i] = 2 + 2 * static_cast<int>(rng() % 4);
      }
    }
    p.terms.push_back(t);
  }
  // at least one learned dim
  p.terms[0].learned[0] = true;
  p.budget = 200 + rng() % 20000;
  return p;
}

double TermMax(const TermProblem& t, const std::vector<double>& m) {
  double v = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (t.learned[i]) v = std::max(v, t.C[i] * std::pow(m[i] - 1.0, -2.0 * t.s[i]));
  }
  return v;
}

}  // namespace

TEST_CASE("reduced constants") {
  AllocationProblem p;
  p.budget = 100;
  p.terms = {Term({0}, {1.0}, {1.0})};
  auto k = reduce_constants(p);
  CHECK(k[0].A == 0.5);
  CHECK(k[0].B == 1.0);

  p.terms = {Term({0, 1}, {1.0, 1.0}, {1.0, 3.0})};
  k = reduce_constants(p);
  CHECK(k[0].A == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(k[0].B == 1.0);

  p.terms = {Term({0, 1}, {16.0, 0.0}, {2.0, 0.0}, {0, 4})};
  k = reduce_constants(p);
  CHECK(k[0].A == 0.25);
  CHECK(k[0].B == doctest::Approx(6.0).epsilon(1e-14));

  p.terms = {TermProblem{}};
  CHECK_ERROR_CODE(reduce_constants(p), ErrorCode::kDegenerateTerm);
}

TEST_CASE("lambda closed forms") {
  const std::vector<TermConstants> one = {{1.0, 1.0}};
  CHECK(solve_lambda(one, 5) == doctest::Approx(1.0 / 16.0).epsilon(1e-12));
  const std::vector<TermConstants> two = {{1.0, 1.0}, {1.0, 1.0}};
  CHECK(solve_lambda(two, 9) == doctest::Approx(1.0 / 16.0).epsilon(1e-12));
  const std::vector<TermConstants> half = {{0.5, 1.0}};
  CHECK(solve_lambda(half, 5) == doctest::Approx(1.0 / 32.0).epsilon(1e-12));
}

TEST_CASE("one-term lambda matches its closed form") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double a = 0.05 + 3.0 * u(rng);
    const double b = std::exp(8.0 * u(rng) - 4.0);
    const std::size_t m = 10 + rng() % 100000;
    if (b >= static_cast<double>(m - 1)) continue;
    const std::vector<TermConstants> k = {{a, b}};
    // B^{1/(1+A)} (lambda A)^{-A/(1+A)} = m - 1
    const double closed = std::exp(std::log(b) / a - (1.0 + a) / a * std::log(double(m - 1))) / a;
    CHECK(solve_lambda(k, m) == doctest::Approx(closed).epsilon(1e-10));
  }
}

TEST_CASE("lambda residual and monotone left-hand side") {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 1000; ++trial) {
    AllocationProblem p = RandomProblem(rng, true);
    const auto k = reduce_constants(p);
    double fixed = 0.0;
    for (const auto& c : k) fixed += c.A == 0.0 ? c.B : 0.0;
    if (fixed >= static_cast<double>(p.budget - 1)) continue;
    const double lambda = solve_lambda(k, p.budget);
    const double target = static_cast<double>(p.budget - 1);
    CHECK(std::abs(lambda_lhs(k, lambda) - target) <= 1e-10 * target);
    double prev = lambda_lhs(k, lambda * 1e-6);
    for (double f = 1e-5; f < 1e6; f *= 10.0) {
      const double cur = lambda_lhs(k, lambda * f);
      CHECK(cur < prev);
      prev = cur;
    }
  }
}

TEST_CASE("lambda solver errors") {
  CHECK_ERROR_CODE(solve_lambda(std::vector<TermConstants>{{0.0, 3.0}}, 100), ErrorCode::kSolver);
  CHECK_ERROR_CODE(solve_lambda(std::vector<TermConstants>{{0.5, 1.0}, {0.0, 99.0}}, 100),
                   ErrorCode::kInfeasible);
}

TEST_CASE("one dim, s = 1, C = 1, budget 5") {
  AllocationProblem p;
  p.budget = 5;
  p.terms = {Term({0}, {1.0}, {1.0})};
  const auto k = reduce_constants(p);
  const double lambda = solve_lambda(k, 5);
  CHECK(lambda == doctest::Approx(1.0 / 32.0).epsilon(1e-12));
  const auto m = bandwidths_from_lambda(p, k, lambda);
  CHECK(m[0][0] == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("continuous solution: constraint and equal-max structure") {
  std::mt19937_64 rng(53);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    AllocationProblem p = RandomProblem(rng, true);
    const auto k = reduce_constants(p);
    double fixed = 0.0;
    for (const auto& c : k) fixed += c.A == 0.0 ? c.B : 0.0;
    if (fixed >= static_cast<double>(p.budget - 1)) continue;
    ++checked;
    const auto m = bandwidths_from_lambda(p, k, solve_lambda(k, p.budget));
    CHECK(continuous_cardinality(m) == doctest::Approx(double(p.budget)).epsilon(1e-8));
    for (std::size_t u = 0; u < p.terms.size(); ++u) {
      const auto& t = p.terms[u];
      double ref = -1.0;
      for (std::size_t i = 0; i < t.term.size(); ++i) {
        if (!t.learned[i]) {
          CHECK(m[u][i] == t.fixed_bandwidth[i]);
          continue;
        }
        const double v = t.C[i] * std::pow(m[u][i] - 1.0, -2.0 * t.s[i]);
        if (ref < 0.0) ref = v;
        CHECK(v == doctest::Approx(ref).epsilon(1e-8));
      }
    }
  }
  CHECK(checked > 500);
}

TEST_CASE("equal smoothness in a term gives a cube") {
  AllocationProblem p;
  p.budget = 1000;
  p.terms = {uniform_term(AnovaTerm({0, 1, 2}), 2.0, 1.25)};
  const auto k = reduce_constants(p);
  const auto m = bandwidths_from_lambda(p, k, solve_lambda(k, p.budget));
  CHECK(m[0][0] == doctest::Approx(m[0][1]).epsilon(1e-12));
  CHECK(m[0][1] == doctest::Approx(m[0][2]).epsilon(1e-12));
  CHECK(m[0][0] - 1.0 == doctest::Approx(std::cbrt(999.0)).epsilon(1e-10));
}

TEST_CASE("continuous optimum beats random feasible perturbations") {
  std::mt19937_64 rng(54);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    AllocationProblem p;
    p.budget = 500 + rng() % 5000;
    // two terms with at most three learned dims in total
    p.terms.push_back(Term({0}, {std::exp(2.0 * u(rng) - 1.0)}, {0.5 + 2.0 * u(rng)}));
    p.terms.push_back(Term({0, 1}, {std::exp(2.0 * u(rng) - 1.0), std::exp(2.0 * u(rng) - 1.0)},
                           {0.5 + 2.0 * u(rng), 0.5 + 2.0 * u(rng)}));
    const auto k = reduce_constants(p);
    const auto best = bandwidths_from_lambda(p, k, solve_lambda(k, p.budget));
    const double f_best = allocation_objective(p, best);
    const double target = static_cast<double>(p.budget - 1);
    for (int pert = 0; pert < 10000; ++pert) {
      auto m = best;
      for (auto& row : m) {
        for (auto& v : row) v = 1.0 + (v - 1.0) * std::exp(0.3 * g(rng));
      }
      // project back onto the constraint: common factor alpha on (m - 1)
      // solves alpha (m0-1) + alpha^2 (m1-1)(m2-1) = target
      const double a1 = m[0][0] - 1.0, a2 = (m[1][0] - 1.0) * (m[1][1] - 1.0);
      const double alpha = (-a1 + std::sqrt(a1 * a1 + 4.0 * a2 * target)) / (2.0 * a2);
      for (auto& row : m) {
        for (auto& v : row) v = 1.0 + alpha * (v - 1.0);
      }
      CHECK(continuous_cardinality(m) == doctest::Approx(double(p.budget)).epsilon(1e-9));
      const double f = allocation_objective(p, m);
      if (f < f_best * (1.0 - 1e-12)) {
        FAIL("perturbation improved the objective");
        break;
      }
    }
  }
}

TEST_CASE("rounding keeps an even solution that fits") {
  AllocationProblem p;
  p.budget = 8;
  p.terms = {Term({0}, {1.0}, {1.0})};
  const BandwidthPlan plan = optimize(p);
  CHECK(plan.bandwidths[0] == BandwidthVector{8});
  CHECK(plan.realized_cardinality == 8);
  const BandwidthPlan same = round_and_repair({{12.0}}, AllocationProblem{12, {Term({0}, {1.0}, {1.0})}, 4});
  CHECK(same.bandwidths[0] == BandwidthVector{12});
}

TEST_CASE("budget that only fits the minimal boxes") {
  AllocationProblem p;
  p.budget = 16;
  p.terms = {uniform_term(AnovaTerm{0}, 1.0, 1.0), uniform_term(AnovaTerm{1}, 1.0, 1.0),
             uniform_term(AnovaTerm({0, 1}), 1.0, 1.0)};
  const BandwidthPlan plan = optimize(p);
  for (const auto& bw : plan.bandwidths) {
    for (int m : bw) CHECK(m == 4);
  }
  CHECK(plan.realized_cardinality == 16);
  p.budget = 15;
  CHECK_ERROR_CODE(optimize(p), ErrorCode::kInfeasible);
}

TEST_CASE("problem validation") {
  AllocationProblem p;
  p.budget = 100;
  p.terms = {Term({0}, {-1.0}, {1.0})};
  CHECK_ERROR_CODE(p.validate(), ErrorCode::kDomain);
  p.terms = {Term({0, 1}, {1.0, 0.0}, {1.0, 0.0}, {0, 3})};
  CHECK_ERROR_CODE(p.validate(), ErrorCode::kInvalidBandwidth);
  p.terms = {Term({0}, {1.0}, {1.0})};
  p.min_bandwidth = 3;
  CHECK_ERROR_CODE(p.validate(), ErrorCode::kInvalidBandwidth);
  p.min_bandwidth = 4;
  p.terms[0].C.pop_back();
  CHECK_ERROR_CODE(p.validate(), ErrorCode::kDimensionMismatch);
}

TEST_CASE("rounded plans stay within one increment of the budget") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 500; ++trial) {
    AllocationProblem p = RandomProblem(rng, true);
    BandwidthPlan plan;
    try {
      plan = optimize(p);
    } catch (const Error& e) {
      CHECK((e.code() == ErrorCode::kInfeasible));
      continue;
    }
    std::size_t card = 1;
    double bound = 0.0;
    for (std::size_t u = 0; u < plan.terms.size(); ++u) {
      std::size_t prod = 1;
      int smallest = 1 << 30;
      for (std::size_t i = 0; i < plan.bandwidths[u].size(); ++i) {
        const int m = plan.bandwidths[u][i];
        CHECK(m % 2 == 0);
        if (p.terms[u].learned[i]) {
          CHECK(m >= p.min_bandwidth);
          smallest = std::min(smallest, m - 1);
        } else {
          CHECK(m == p.terms[u].fixed_bandwidth[i]);
        }
        prod *= static_cast<std::size_t>(m - 1);
      }
      card += prod;
      // growing a learned dim by 2 adds prod / (m - 1) * 2 frequencies
      if (smallest < (1 << 30)) bound = std::max(bound, 2.0 * double(prod) / smallest);
    }
    CHECK(card == plan.realized_cardinality);
    const double gap = std::abs(double(card) - double(p.budget));
    CHECK(gap <= bound);
    CHECK(plan.index_set(4).size() == card);
  }
}

TEST_CASE("rounding is deterministic with lexicographic ties") {
  AllocationProblem p;
  p.budget = 40;
  p.terms = {uniform_term(AnovaTerm{0}, 1.0, 1.0), uniform_term(AnovaTerm{1}, 1.0, 1.0)};
  const auto a = optimize(p), b = optimize(p);
  CHECK(a.bandwidths == b.bandwidths);
  // symmetric problem: the first term wins ties
  CHECK(a.bandwidths[0][0] >= a.bandwidths[1][0]);
}

TEST_CASE("budget from m log m <= n") {
  CHECK(plan_budget(100000) == 10770);
  CHECK(plan_budget(1) == 1);
  CHECK(plan_budget(2) == 2);   // 2 log 2 = 1.386 <= 2 < 3 log 3
  CHECK(plan_budget(3) == 2);   // e < 3 < 3 log 3 = 3.30
  CHECK(plan_budget(4) == 3);
  // brute-force oracle
  for (std::size_t n : {8u, 57u, 1000u, 12345u, 200000u}) {
    std::size_t m = 1;
    while (double(m + 1) * std::log(double(m + 1)) <= double(n)) ++m;
    CHECK(plan_budget(n) == m);
  }
  CHECK(plan_budget(100000, 2.0) == 7740);
  CHECK(plan_budget(100000, 10.0) == 22933);
}

TEST_CASE("box projection worst case equals brute force over fooling monomials") {
  const std::vector<double> rates = {0.5, 1.0, 1.5, 2.0, 1.0 / 3.0, 2.0 / 3.0, 1.25, 3.0};
  for (int m1 = 2; m1 <= 16; m1 += 2) {
    for (int m2 = 2; m2 <= 16; m2 += 2) {
      for (double s1 : rates) {
        for (double s2 : rates) {
          // the unit-norm monomial exp(2 pi i <l, x>) / w(l) loses all its
          // energy 1/w(l)^2 when l is outside the box
          double worst = 0.0;
          for (int l1 = -40; l1 <= 40; ++l1) {
            for (int l2 = -40; l2 <= 40; ++l2) {
              const bool inside = l1 >= -m1 / 2 && l1 < m1 / 2 && l2 >= -m2 / 2 && l2 < m2 / 2;
              if (inside) continue;
              const double w2 = std::max({1.0, std::pow(std::abs(l1), 2.0 * s1),
                                          std::pow(std::abs(l2), 2.0 * s2)});
              worst = std::max(worst, 1.0 / w2);
            }
          }
          const std::vector<int> bw = {m1, m2};
          const std::vector<double> s = {s1, s2};
          CHECK(box_projection_worst_case(bw, s) == worst);
        }
      }
    }
  }
}
