#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "anisova/least_squares.hpp"
#include "anisova/lsqr.hpp"
#include "anisova/random.hpp"
#include "test_util.hpp"

using namespace anisova;

namespace {

using DenseMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
using DenseVec = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;

DenseMat ToDense(const std::vector<std::vector<Complex>>& a) {
  DenseMat m(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(a[0].size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < a[i].size(); ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = a[i][k];
  }
  return m;
}

SamplingSet Planted(std::mt19937_64& rng, const GroupedIndexSet& set, std::size_t n,
                    std::vector<Complex>* coeffs, double noise = 0.0) {
  SamplingSet x;
  x.d = set.d();
  x.points = testutil::RandomPoints(rng, n, set.d());
  *coeffs = testutil::RandomComplex(rng, set.size());
  const auto a = testutil::NaiveMatrix(x.points, x.d, set);
  std::normal_distribution<double> g(0.0, noise);
  x.values.assign(n, Complex(0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < set.size(); ++k) x.values[i] += a[i][k] * (*coeffs)[k];
    if (noise > 0.0) x.values[i] += Complex(g(rng), g(rng));
  }
  return x;
}

double RelErr(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / den);
}

// Exact leave-one-out CV: n refits by dense QR.
double BruteForceLoocv(const SamplingSet& x, const GroupedIndexSet& set) {
  const DenseMat a = ToDense(testutil::NaiveMatrix(x.points, x.d, set));
  const auto n = a.rows();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    DenseMat sub(n - 1, a.cols());
    DenseVec y(n - 1);
    for (Eigen::Index r = 0, q = 0; r < n; ++r) {
      if (r == i) continue;
      sub.row(q) = a.row(r);
      y(q) = x.values[static_cast<std::size_t>(r)];
      ++q;
    }
    const DenseVec g = sub.colPivHouseholderQr().solve(y);
    sum += std::norm((a.row(i) * g)(0) - x.values[static_cast<std::size_t>(i)]);
  }
  return sum / static_cast<double>(n);
}

}  // namespace

TEST_CASE("planted coefficients are recovered under logarithmic oversampling") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 1 + trial % 3;
    const auto set = testutil::RandomSet(rng, d, 3, 2, 8);
    const double m = static_cast<double>(set.size());
    const auto n = static_cast<std::size_t>(std::ceil(10.0 * m * (std::log(m) + 1.0)));
    std::vector<Complex> c;
    const SamplingSet x = Planted(rng, set, n, &c);
    const AnovaApproximation approx = fit(x, set);
    CHECK(approx.fit.converged);
    CHECK_FALSE(approx.fit.undersampled);
    CHECK(approx.fit.iterations <= 50);
    CHECK(RelErr(approx.coefficients, c) <= 1e-8);
  }
}

TEST_CASE("zero data gives zero coefficients") {
  std::mt19937_64 rng(22);
  const auto set = build_grouped(2, {{AnovaTerm{0}, {6}}, {AnovaTerm({0, 1}), {4, 4}}}, true);
  SamplingSet x{2, testutil::RandomPoints(rng, 300, 2), std::vector<Complex>(300), {}};
  const auto approx = fit(x, set);
  for (const auto& g : approx.coefficients) CHECK(g == Complex(0.0));
  CHECK(approx.fit.iterations == 0);
  CHECK(approx.fit.converged);
}

TEST_CASE("one point, constant only: exact interpolation") {
  const auto set = build_grouped(1, {}, true);
  SamplingSet x{1, {0.37}, {Complex(3.0, 4.0)}, {}};
  const auto approx = fit(x, set);
  CHECK(std::abs(approx.coefficients[0] - Complex(3.0, 4.0)) < 1e-14);
}

TEST_CASE("fit errors and warnings") {
  std::mt19937_64 rng(23);
  SamplingSet x{2, testutil::RandomPoints(rng, 20, 2), std::vector<Complex>(20, 1.0), {}};
  CHECK_ERROR_CODE(fit(x, build_grouped(2, {}, false)), ErrorCode::kEmptyIndexSet);
  CHECK_ERROR_CODE(fit(x, build_grouped(3, {}, true)), ErrorCode::kDimensionMismatch);
  FitConfig bad;
  bad.max_iter = 0;
  CHECK_ERROR_CODE(fit(x, build_grouped(2, {}, true), bad), ErrorCode::kConfig);
  const auto big = build_grouped(2, {{AnovaTerm({0, 1}), {6, 6}}}, true);
  CHECK(fit(x, big).fit.undersampled);
  CHECK(IsLogOversampled(1000, 10, 1.0));   // 10*10*(log 10 + 1) = 330
  CHECK_FALSE(IsLogOversampled(300, 10, 1.0));
}

TEST_CASE("normal equation residual at convergence") {
  std::mt19937_64 rng(24);
  const auto set = build_grouped(2, {{AnovaTerm{0}, {10}}, {AnovaTerm({0, 1}), {6, 6}}}, true);
  std::vector<Complex> c;
  SamplingSet x = Planted(rng, set, 1500, &c, 0.3);
  FitConfig cfg;
  cfg.max_iter = 200;
  const auto approx = fit(x, set, cfg);
  REQUIRE(approx.fit.converged);
  const auto op = backend_select(OperatorConfig{}, x, set);
  auto r = op->forward(approx.coefficients);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= x.values[i];
  const double normal = testutil::Norm(op->adjoint(r));
  // ||L||_2 <= ||L||_F = sqrt(n |I|)
  const double l_fro = std::sqrt(1500.0 * static_cast<double>(set.size()));
  CHECK(normal <= cfg.rel_tol * l_fro * testutil::Norm(r) * 1.01);
  CHECK(approx.fit.relative_residual >= 0.0);
}

TEST_CASE("LSQR matches the dense least squares solution") {
  std::mt19937_64 rng(25);
  const auto set = build_grouped(2, {{AnovaTerm{1}, {8}}, {AnovaTerm({0, 1}), {4, 6}}}, true);
  std::vector<Complex> c;
  const SamplingSet x = Planted(rng, set, 400, &c, 1.0);
  FitConfig cfg;
  cfg.rel_tol = 1e-13;
  cfg.max_iter = 500;
  const auto approx = fit(x, set, cfg);
  const DenseMat a = ToDense(testutil::NaiveMatrix(x.points, 2, set));
  const DenseVec y = Eigen::Map<const DenseVec>(x.values.data(), 400);
  const DenseVec g = a.colPivHouseholderQr().solve(y);
  const std::vector<Complex> ref(g.data(), g.data() + g.size());
  CHECK(RelErr(approx.coefficients, ref) <= 1e-9);
}

TEST_CASE("evaluate matches forward and the dense oracle") {
  std::mt19937_64 rng(26);
  const auto set = build_grouped(3, {{AnovaTerm{2}, {12}}, {AnovaTerm({0, 1}), {4, 6}}}, true);
  std::vector<Complex> c;
  const SamplingSet x = Planted(rng, set, 800, &c);
  const auto approx = fit(x, set);
  const auto at_train = evaluate(approx, x.points);
  CHECK(testutil::MaxAbsDiff(at_train, forward(x, set, approx.coefficients)) == 0.0);
  const auto pts = testutil::RandomPoints(rng, 50, 3);
  const auto a = testutil::NaiveMatrix(pts, 3, set);
  for (std::size_t i = 0; i < 50; ++i) {
    Complex ref = 0.0;
    for (std::size_t k = 0; k < set.size(); ++k) ref += a[i][k] * approx.coefficients[k];
    CHECK(std::abs(evaluate(approx, std::vector<double>(pts.begin() + 3 * i, pts.begin() + 3 * i + 3))[0] - ref) < 1e-12);
  }
  AnovaApproximation constant{build_grouped(3, {}, true), {Complex(2.5, -1.0)}, {}};
  for (const auto& v : evaluate(constant, pts)) CHECK(v == Complex(2.5, -1.0));
  CHECK_ERROR_CODE(evaluate(approx, std::vector<double>{0.1, 0.2}), ErrorCode::kDimensionMismatch);
}

TEST_CASE("group energies split the coefficient energy") {
  std::mt19937_64 rng(27);
  const auto set = build_grouped(3, {{AnovaTerm{0}, {10}}, {AnovaTerm({1, 2}), {6, 8}}, {AnovaTerm({0, 2}), {4, 4}}}, true);
  AnovaApproximation approx{set, testutil::RandomComplex(rng, set.size()), {}};
  double total = 0.0;
  for (const auto& g : approx.coefficients) total += std::norm(g);
  double split = constant_energy(approx);
  for (const auto& t : set.terms()) split += group_energy(approx, t);
  CHECK(split == doctest::Approx(total).epsilon(1e-14));

  AnovaApproximation single{set, std::vector<Complex>(set.size()), {}};
  CHECK(group_energy(single, AnovaTerm({1, 2})) == 0.0);
  single.coefficients[set.offset(1) + 7] = Complex(0.0, -3.0);
  CHECK(group_energy(single, AnovaTerm({1, 2})) == 9.0);
  CHECK(group_energy(single, AnovaTerm{0}) == 0.0);
  CHECK_ERROR_CODE(group_energy(single, AnovaTerm{1}), ErrorCode::kUnknownTerm);
  AnovaApproximation no_const{build_grouped(3, {{AnovaTerm{0}, {4}}}, false), {1.0, 1.0, 1.0}, {}};
  CHECK(constant_energy(no_const) == 0.0);
}

TEST_CASE("tail energies against a brute-force filter") {
  std::mt19937_64 rng(28);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 2 + trial % 3;
    const auto set = testutil::RandomSet(rng, d, 4, 3, 12);
    AnovaApproximation approx{set, testutil::RandomComplex(rng, set.size()), {}};
    const auto& box = set.boxes()[rng() % set.boxes().size()];
    const std::size_t i = rng() % box.term().size();
    const int dim = box.term().dims()[i];
    const int m = box.bandwidths()[i];
    const std::size_t off = set.offset(static_cast<std::size_t>(set.find(box.term())));
    const TailProfile profile = tail_profile(approx, box.term(), dim);
    REQUIRE(profile.energy.size() == static_cast<std::size_t>(m / 2 + 1));
    for (int mp = 0; mp <= m; mp += 2) {
      double ref = 0.0;
      std::size_t count = 0;
      for (std::size_t l = 0; l < box.size(); ++l) {
        const int kj = box.component(l, i);
        if (kj < -mp / 2 || kj >= mp / 2) {
          ref += std::norm(approx.coefficients[off + l]);
          ++count;
        }
      }
      const double e = tail_energy(approx, box.term(), dim, mp);
      CHECK(e == doctest::Approx(ref).epsilon(1e-13));
      CHECK(profile.energy[static_cast<std::size_t>(mp / 2)] == doctest::Approx(ref).epsilon(1e-13));
      CHECK(profile.count[static_cast<std::size_t>(mp / 2)] == count);
    }
    CHECK(tail_energy(approx, box.term(), dim, m) == 0.0);
    CHECK(tail_energy(approx, box.term(), dim, 0) ==
          doctest::Approx(group_energy(approx, box.term())).epsilon(1e-13));
  }
}

TEST_CASE("fast CV score basics") {
  CHECK(fcv_score(0.0, 100, 10) == 0.0);
  CHECK(fcv_score(50.0, 100, 50) == doctest::Approx(2.0));
  // |I|/n -> 0: mean squared residual
  CHECK(fcv_score(7.0, 10000000, 1) == doctest::Approx(7e-7).epsilon(1e-6));
  CHECK_ERROR_CODE(fcv_score(1.0, 10, 10), ErrorCode::kUndefinedScore);
  CHECK_ERROR_CODE(fcv_score(1.0, 10, 11), ErrorCode::kUndefinedScore);
}

TEST_CASE("fast CV approximates leave-one-out CV") {
  std::mt19937_64 rng(29);
  // |I| = 1 + 9 + 1 + 9 = 20
  const auto set = build_grouped(
      2, {{AnovaTerm{0}, {10}}, {AnovaTerm{1}, {2}}, {AnovaTerm({0, 1}), {2, 10}}}, true);
  REQUIRE(set.size() == 20);
  int passing = 0;
  for (int seed = 0; seed < 20; ++seed) {
    std::vector<Complex> c;
    const SamplingSet x = Planted(rng, set, 200, &c, 0.5);
    FitConfig cfg;
    cfg.rel_tol = 1e-12;
    cfg.max_iter = 200;
    const auto approx = fit(x, set, cfg);
    const double fast = fcv_score(approx, x);
    CHECK(fast == doctest::Approx(fcv_score(approx.fit.residual_sum_squares, 200, 20)).epsilon(1e-10));
    const double exact = BruteForceLoocv(x, set);
    if (std::abs(fast - exact) <= 0.1 * exact) ++passing;
  }
  CHECK(passing >= 18);
}

TEST_CASE("L2 test error") {
  std::mt19937_64 rng(30);
  const auto set = build_grouped(2, {{AnovaTerm{0}, {6}}, {AnovaTerm({0, 1}), {4, 4}}}, true);
  AnovaApproximation approx{set, testutil::RandomComplex(rng, set.size()), {}};
  const PointFunction self = [&](std::span<const double> x) {
    return evaluate(approx, std::vector<double>(x.begin(), x.end()))[0];
  };
  CHECK(l2_test_error(approx, self, 2000, 1) < 1e-12);
  const PointFunction offset = [&](std::span<const double> x) { return self(x) + Complex(0.25, 0.0); };
  CHECK(l2_test_error(approx, offset, 2000, 1) == doctest::Approx(0.25).epsilon(1e-12));

  // f trigonometric with known coefficients: error by Parseval
  std::vector<Complex> f_coeffs = approx.coefficients;
  double diff = 0.0;
  for (std::size_t k = 0; k < f_coeffs.size(); k += 3) {
    f_coeffs[k] += Complex(0.1 * static_cast<double>(k % 5), -0.05);
    diff += std::norm(f_coeffs[k] - approx.coefficients[k]);
  }
  AnovaApproximation f_approx{set, f_coeffs, {}};
  const PointFunction f = [&](std::span<const double> x) {
    return evaluate(f_approx, std::vector<double>(x.begin(), x.end()))[0];
  };
  const double est = l2_test_error(approx, f, 200000, 7);
  CHECK(est == doctest::Approx(std::sqrt(diff)).epsilon(0.02));
  CHECK_ERROR_CODE(l2_test_error(approx, f, 0, 7), ErrorCode::kInsufficientData);
  // seeded
  CHECK(l2_test_error(approx, f, 5000, 3) == l2_test_error(approx, f, 5000, 3));
}

TEST_CASE("empirical conditioning under logarithmic oversampling") {
  std::mt19937_64 rng(31);
  int good = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto set = build_grouped(2, {{AnovaTerm{0}, {8}}, {AnovaTerm({0, 1}), {4, 6}}}, true);
    const double m = static_cast<double>(set.size());
    const auto n = static_cast<std::size_t>(std::ceil(10.0 * m * (std::log(m) + 1.0)));
    const auto pts = testutil::RandomPoints(rng, n, 2);
    const DenseMat a = ToDense(testutil::NaiveMatrix(pts, 2, set));
    const DenseMat gram = a.adjoint() * a / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<DenseMat> eig(gram);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (lo >= 0.5 && hi <= 1.5) ++good;
  }
  CHECK(good >= 18);
}

TEST_CASE("fits are deterministic") {
  std::mt19937_64 rng(32);
  const auto set = build_grouped(2, {{AnovaTerm{0}, {40}}, {AnovaTerm({0, 1}), {10, 12}}}, true);
  std::vector<Complex> c;
  const SamplingSet x = Planted(rng, set, 3000, &c, 0.1);
  const auto a = fit(x, set);
  const auto b = fit(x, set);
  CHECK(a.coefficients == b.coefficients);
  CHECK(a.fit.residual_sum_squares == b.fit.residual_sum_squares);
}
