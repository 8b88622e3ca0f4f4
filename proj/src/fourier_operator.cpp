#include "anisova/fourier_operator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "anisova/error.hpp"
#include "anisova/parallel.hpp"

namespace anisova {
namespace {

using Table = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
using CVec = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
using RowMajorBlock =
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr std::size_t kBlockRows = 256;
constexpr int kPieceCols = 512;
constexpr int kLeadPiece = 256;
// The power recurrence is resynchronised with an exact evaluation this often.
constexpr int kResync = 32;

inline Complex UnitPhase(double cycles) {
  cycles -= std::floor(cycles);
  return std::polar(1.0, 2.0 * std::numbers::pi * cycles);
}

// Fills table(:, c) = exp(2 pi i v(first + c) x_r) for the block rows, where
// v enumerates [-m/2, m/2) \ {0}.
void FillTable(std::span<const double> x, int bandwidth, int first, int count,
               Table& table) {
  const auto rows = static_cast<Eigen::Index>(x.size());
  table.resize(rows, count);
  const int half = bandwidth / 2;
  Eigen::Array<Complex, Eigen::Dynamic, 1> step(rows);
  for (Eigen::Index r = 0; r < rows; ++r) step[r] = UnitPhase(x[r]);
  for (int c = 0; c < count; ++c) {
    const int idx = first + c;
    const int v = BoxValue(bandwidth, idx);
    if (c == 0 || idx % kResync == 0 || idx == half) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        table(r, c) = UnitPhase(static_cast<double>(v) * x[r]);
      }
    } else {
      table.col(c).array() = table.col(c - 1).array() * step;
    }
  }
}

class DirectCachedOperator final : public FourierOperator {
 public:
  DirectCachedOperator(std::span<const double> points, int d,
                       GroupedIndexSet set)
      : FourierOperator(points, d, std::move(set)) {}

  std::string name() const override { return "direct-cached"; }

  std::vector<Complex> forward(std::span<const Complex> c) const override {
    check_forward(c);
    std::vector<Complex> out(n_, Complex(0.0));
    const std::size_t blocks = (n_ + kBlockRows - 1) / kBlockRows;
    ParallelFor(blocks, [&](std::size_t b) {
      const std::size_t r0 = b * kBlockRows;
      const std::size_t r1 = std::min(n_, r0 + kBlockRows);
      forward_block(c, r0, r1, std::span<Complex>(out).subspan(r0, r1 - r0));
    });
    return out;
  }

  CoefficientVector adjoint(std::span<const Complex> r) const override {
    check_adjoint(r);
    const std::size_t blocks = (n_ + kBlockRows - 1) / kBlockRows;
    const std::size_t wave = static_cast<std::size_t>(ThreadCount());
    CoefficientVector total(cols(), Complex(0.0));
    std::vector<CVec> partial(std::min(wave, blocks),
                              CVec(static_cast<Eigen::Index>(cols())));
    // Block contributions are reduced in block order, independent of the
    // number of workers.
    for (std::size_t first = 0; first < blocks; first += wave) {
      const std::size_t count = std::min(wave, blocks - first);
      ParallelFor(count, [&](std::size_t w) {
        const std::size_t b = first + w;
        const std::size_t r0 = b * kBlockRows;
        const std::size_t r1 = std::min(n_, r0 + kBlockRows);
        partial[w].setZero();
        adjoint_block(r.subspan(r0, r1 - r0), r0, r1, partial[w]);
      });
      for (std::size_t w = 0; w < count; ++w) {
        for (std::size_t k = 0; k < total.size(); ++k) total[k] += partial[w][k];
      }
    }
    return total;
  }

 private:
  std::vector<double> column(std::size_t r0, std::size_t r1, int dim) const {
    std::vector<double> x(r1 - r0);
    for (std::size_t r = r0; r < r1; ++r) {
      x[r - r0] = points_[r * static_cast<std::size_t>(d_) +
                          static_cast<std::size_t>(dim)];
    }
    return x;
  }

  // Tables for all leading dims of a box (every dim except the last).
  std::vector<Table> leading_tables(const FrequencyBox& box, std::size_t r0,
                                    std::size_t r1) const {
    std::vector<Table> tables(box.term().size() - 1);
    for (std::size_t l = 0; l + 1 < box.term().size(); ++l) {
      const auto x = column(r0, r1, box.term().dims()[l]);
      FillTable(x, box.bandwidths()[l], 0, box.extent(l), tables[l]);
    }
    return tables;
  }

  // G(:, p) = prod_l E_l(:, i_l(p)) for leading multi-indices p in
  // [p0, p0 + count).
  static void LeadingProduct(const FrequencyBox& box,
                             const std::vector<Table>& tables, Eigen::Index rows,
                             std::size_t p0, int count, Table& g) {
    g.resize(rows, count);
    const std::size_t lead = tables.size();
    if (lead == 0) {
      g.setOnes();
      return;
    }
    std::vector<int> idx(lead);
    for (int c = 0; c < count; ++c) {
      std::size_t p = p0 + static_cast<std::size_t>(c);
      for (std::size_t l = lead; l-- > 0;) {
        const auto ext = static_cast<std::size_t>(box.extent(l));
        idx[l] = static_cast<int>(p % ext);
        p /= ext;
      }
      g.col(c) = tables[0].col(idx[0]);
      for (std::size_t l = 1; l < lead; ++l) {
        g.col(c).array() *= tables[l].col(idx[l]).array();
      }
    }
  }

  // Eigen picks scalar or packet code by address alignment, and the two
  // round complex products differently; all arithmetic therefore runs on
  // Eigen-owned (aligned) buffers.
  void forward_block(std::span<const Complex> c, std::size_t r0,
                     std::size_t r1, std::span<Complex> out) const {
    const auto rows = static_cast<Eigen::Index>(r1 - r0);
    CVec acc = CVec::Zero(rows);
    if (index_set_.includes_constant()) acc.array() += c[0];
    Table g, e_last, t;
    for (std::size_t b = 0; b < index_set_.boxes().size(); ++b) {
      const auto& box = index_set_.boxes()[b];
      if (box.size() == 0) continue;
      const std::size_t last = box.term().size() - 1;
      const int ext_last = box.extent(last);
      const std::size_t lead_count = box.size() / static_cast<std::size_t>(ext_last);
      const auto tables = leading_tables(box, r0, r1);
      const auto x_last = column(r0, r1, box.term().dims()[last]);
      Eigen::Map<const RowMajorBlock> coeff(c.data() + index_set_.offset(b),
                                            static_cast<Eigen::Index>(lead_count),
                                            ext_last);
      for (std::size_t p0 = 0; p0 < lead_count; p0 += kLeadPiece) {
        const int pp = static_cast<int>(
            std::min<std::size_t>(kLeadPiece, lead_count - p0));
        LeadingProduct(box, tables, rows, p0, pp, g);
        for (int e0 = 0; e0 < ext_last; e0 += kPieceCols) {
          const int pe = std::min(kPieceCols, ext_last - e0);
          FillTable(x_last, box.bandwidths()[last], e0, pe, e_last);
          t.noalias() = e_last *
                        coeff.block(static_cast<Eigen::Index>(p0), e0, pp, pe)
                            .transpose();
          acc.array() += (t.array() * g.array()).rowwise().sum();
        }
      }
    }
    std::copy(acc.data(), acc.data() + rows, out.begin());
  }

  void adjoint_block(std::span<const Complex> res, std::size_t r0,
                     std::size_t r1, CVec& out) const {
    const auto rows = static_cast<Eigen::Index>(r1 - r0);
    const CVec rv = Eigen::Map<const CVec>(res.data(), rows);
    if (index_set_.includes_constant()) out[0] += rv.sum();
    Table g, e_last;
    for (std::size_t b = 0; b < index_set_.boxes().size(); ++b) {
      const auto& box = index_set_.boxes()[b];
      if (box.size() == 0) continue;
      const std::size_t last = box.term().size() - 1;
      const int ext_last = box.extent(last);
      const std::size_t lead_count = box.size() / static_cast<std::size_t>(ext_last);
      const auto tables = leading_tables(box, r0, r1);
      const auto x_last = column(r0, r1, box.term().dims()[last]);
      Eigen::Map<RowMajorBlock> coeff(out.data() + index_set_.offset(b),
                                      static_cast<Eigen::Index>(lead_count),
                                      ext_last);
      for (std::size_t p0 = 0; p0 < lead_count; p0 += kLeadPiece) {
        const int pp = static_cast<int>(
            std::min<std::size_t>(kLeadPiece, lead_count - p0));
        LeadingProduct(box, tables, rows, p0, pp, g);
        // W(r, p) = res_r * conj(G(r, p))
        g = (g.conjugate().array().colwise() * rv.array()).matrix();
        for (int e0 = 0; e0 < ext_last; e0 += kPieceCols) {
          const int pe = std::min(kPieceCols, ext_last - e0);
          FillTable(x_last, box.bandwidths()[last], e0, pe, e_last);
          coeff.block(static_cast<Eigen::Index>(p0), e0, pp, pe).noalias() +=
              g.transpose() * e_last.conjugate();
        }
      }
    }
  }
};

class DirectNaiveOperator final : public FourierOperator {
 public:
  DirectNaiveOperator(std::span<const double> points, int d,
                      GroupedIndexSet set)
      : FourierOperator(points, d, std::move(set)),
        freqs_(index_set_.enumerate()) {}

  std::string name() const override { return "direct-naive"; }

  std::vector<Complex> forward(std::span<const Complex> c) const override {
    check_forward(c);
    std::vector<Complex> out(n_);
    ParallelFor(n_, [&](std::size_t i) {
      Complex acc(0.0);
      for (std::size_t k = 0; k < freqs_.size(); ++k) acc += c[k] * entry(i, k);
      out[i] = acc;
    });
    return out;
  }

  CoefficientVector adjoint(std::span<const Complex> r) const override {
    check_adjoint(r);
    CoefficientVector out(freqs_.size());
    ParallelFor(freqs_.size(), [&](std::size_t k) {
      Complex acc(0.0);
      for (std::size_t i = 0; i < n_; ++i) acc += std::conj(entry(i, k)) * r[i];
      out[k] = acc;
    });
    return out;
  }

 private:
  Complex entry(std::size_t i, std::size_t k) const {
    double cycles = 0.0;
    for (int j = 0; j < d_; ++j) {
      const int kj = freqs_[k][static_cast<std::size_t>(j)];
      if (kj != 0) {
        cycles += kj * points_[i * static_cast<std::size_t>(d_) +
                               static_cast<std::size_t>(j)];
      }
    }
    return UnitPhase(cycles);
  }

  std::vector<Frequency> freqs_;
};

}  // namespace

void SamplingSet::validate() const {
  if (d < 0) throw Error(ErrorCode::kDimensionMismatch, "negative dimension");
  if (values.empty()) {
    throw Error(ErrorCode::kInsufficientData, "sampling set has no points");
  }
  if (points.size() != values.size() * static_cast<std::size_t>(d)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "points array does not match n x d");
  }
  for (double x : points) {
    if (!(x >= 0.0 && x < 1.0)) {
      throw Error(ErrorCode::kDomain, "point coordinate outside [0,1)");
    }
  }
  for (const auto& v : values) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw Error(ErrorCode::kDomain, "non-finite sample value");
    }
  }
}

FourierOperator::FourierOperator(std::span<const double> points, int d,
                                 GroupedIndexSet set)
    : points_(points.begin(), points.end()),
      d_(d),
      n_(d > 0 ? points.size() / static_cast<std::size_t>(d) : 0),
      index_set_(std::move(set)) {
  if (d != index_set_.d()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "point dimension " + std::to_string(d) +
                    " differs from index set dimension " +
                    std::to_string(index_set_.d()));
  }
  if (d > 0 && points.size() % static_cast<std::size_t>(d) != 0) {
    throw Error(ErrorCode::kDimensionMismatch, "ragged point array");
  }
  if (n_ == 0) {
    throw Error(ErrorCode::kInsufficientData, "operator needs n >= 1 points");
  }
}

void FourierOperator::check_forward(std::span<const Complex> c) const {
  if (c.size() != cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "coefficient vector has length " + std::to_string(c.size()) +
                    ", index set has " + std::to_string(cols()));
  }
}

void FourierOperator::check_adjoint(std::span<const Complex> r) const {
  if (r.size() != rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "residual vector has length " + std::to_string(r.size()) +
                    ", expected " + std::to_string(rows()));
  }
}

std::unique_ptr<FourierOperator> backend_select(const OperatorConfig& cfg,
                                                std::span<const double> points,
                                                int d,
                                                const GroupedIndexSet& set) {
  if (cfg.backend == "direct-cached") {
    return std::make_unique<DirectCachedOperator>(points, d, set);
  }
  if (cfg.backend == "direct-naive") {
    return std::make_unique<DirectNaiveOperator>(points, d, set);
  }
  throw Error(ErrorCode::kUnknownBackend,
              "unknown operator backend '" + cfg.backend +
                  "' (available: direct-cached, direct-naive)");
}

std::unique_ptr<FourierOperator> backend_select(const OperatorConfig& cfg,
                                                const SamplingSet& x,
                                                const GroupedIndexSet& set) {
  return backend_select(cfg, x.points, x.d, set);
}

std::vector<Complex> forward(const SamplingSet& x, const GroupedIndexSet& set,
                             std::span<const Complex> c) {
  return backend_select(OperatorConfig{}, x, set)->forward(c);
}

CoefficientVector adjoint(const SamplingSet& x, const GroupedIndexSet& set,
                          std::span<const Complex> r) {
  return backend_select(OperatorConfig{}, x, set)->adjoint(r);
}

}  // namespace anisova
