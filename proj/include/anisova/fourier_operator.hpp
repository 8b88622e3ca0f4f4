#ifndef ANISOVA_FOURIER_OPERATOR_HPP_
#define ANISOVA_FOURIER_OPERATOR_HPP_

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anisova/index_sets.hpp"

namespace anisova {

using Complex = std::complex<double>;
using CoefficientVector = std::vector<Complex>;

struct NoiseMeta {
  double sigma2 = 0.0;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

// n points in [0,1)^d (row-major) with complex samples.
struct SamplingSet {
  int d = 0;
  std::vector<double> points;
  std::vector<Complex> values;
  std::optional<NoiseMeta> noise;

  std::size_t n() const { return values.size(); }
  std::span<const double> point(std::size_t i) const {
    return {points.data() + i * static_cast<std::size_t>(d),
            static_cast<std::size_t>(d)};
  }
  // Checks coordinates lie in [0,1), values are finite and sizes agree.
  void validate() const;
};

// Matrix-free application of L = [exp(2 pi i <k, x^i>)] and its adjoint.
class FourierOperator {
 public:
  virtual ~FourierOperator() = default;

  virtual std::vector<Complex> forward(std::span<const Complex> c) const = 0;
  virtual CoefficientVector adjoint(std::span<const Complex> r) const = 0;

  virtual std::string name() const = 0;
  std::size_t rows() const { return n_; }
  std::size_t cols() const { return index_set_.size(); }
  const GroupedIndexSet& index_set() const { return index_set_; }

 protected:
  FourierOperator(std::span<const double> points, int d, GroupedIndexSet set);

  void check_forward(std::span<const Complex> c) const;
  void check_adjoint(std::span<const Complex> r) const;

  std::vector<double> points_;
  int d_;
  std::size_t n_;
  GroupedIndexSet index_set_;
};

struct OperatorConfig {
  std::string backend = "direct-cached";
};

// "direct-cached": per row block, builds the per-dimension exponential tables
// of every box and contracts them with the coefficient block (GEMM).
// "direct-naive": evaluates every matrix entry on the fly.
std::unique_ptr<FourierOperator> backend_select(const OperatorConfig& cfg,
                                                std::span<const double> points,
                                                int d,
                                                const GroupedIndexSet& set);

std::unique_ptr<FourierOperator> backend_select(const OperatorConfig& cfg,
                                                const SamplingSet& x,
                                                const GroupedIndexSet& set);

std::vector<Complex> forward(const SamplingSet& x, const GroupedIndexSet& set,
                             std::span<const Complex> c);
CoefficientVector adjoint(const SamplingSet& x, const GroupedIndexSet& set,
                          std::span<const Complex> r);

}  // namespace anisova

#endif  // ANISOVA_FOURIER_OPERATOR_HPP_
