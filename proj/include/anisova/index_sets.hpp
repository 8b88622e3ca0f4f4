#ifndef ANISOVA_INDEX_SETS_HPP_
#define ANISOVA_INDEX_SETS_HPP_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace anisova {

using Frequency = std::vector<int>;

// A subset of coordinate indices (0-based, strictly increasing). The empty
// term stands for the constant function.
class AnovaTerm {
 public:
  AnovaTerm() = default;
  explicit AnovaTerm(std::vector<int> dims);
  AnovaTerm(std::initializer_list<int> dims)
      : AnovaTerm(std::vector<int>(dims)) {}

  const std::vector<int>& dims() const { return dims_; }
  std::size_t size() const { return dims_.size(); }
  bool empty() const { return dims_.empty(); }
  bool contains(int dim) const;
  // Position of `dim` inside the term, or -1.
  int position(int dim) const;
  // "{0,2}" style label; used as a JSON key.
  std::string label() const;

  friend bool operator==(const AnovaTerm&, const AnovaTerm&) = default;
  friend auto operator<=>(const AnovaTerm&, const AnovaTerm&) = default;

 private:
  std::vector<int> dims_;
};

// Nonzero coordinates of k.
AnovaTerm support(std::span<const int> k);

// Even bandwidth per active dimension of a term.
using BandwidthVector = std::vector<int>;

// Frequencies k with k_j in [-m_j/2, m_j/2) \ {0} for j in the term and
// k_j = 0 elsewhere. Enumeration is lexicographic over the term's dims with
// the first dim varying slowest. A bandwidth of 0 inside the term yields an
// empty box; only varied sets are allowed to build those.
class FrequencyBox {
 public:
  FrequencyBox(AnovaTerm term, BandwidthVector bandwidths,
               bool allow_empty = false);

  const AnovaTerm& term() const { return term_; }
  const BandwidthVector& bandwidths() const { return bandwidths_; }
  std::size_t size() const { return size_; }
  // Admissible values of the frequency component along the i-th term dim.
  std::vector<int> values(std::size_t i) const;
  // Number of values along the i-th term dim (m - 1, or 0 for m = 0).
  int extent(std::size_t i) const;
  // Component along the i-th term dim of the frequency at local position.
  int component(std::size_t local, std::size_t i) const;
  // Writes the full d-dimensional frequency at `local` into k.
  void frequency(std::size_t local, std::span<int> k) const;
  bool contains(std::span<const int> k) const;

 private:
  AnovaTerm term_;
  BandwidthVector bandwidths_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

// Maps a per-dim position in [0, m-1) to the frequency value.
inline int BoxValue(int bandwidth, int idx) {
  const int half = bandwidth / 2;
  return idx < half ? idx - half : idx - half + 1;
}

FrequencyBox build_box(const AnovaTerm& term, const BandwidthVector& bw);

// Disjoint union of per-term boxes, optionally with the zero frequency.
// Global order: constant first, then terms in declaration order.
class GroupedIndexSet {
 public:
  GroupedIndexSet() = default;
  GroupedIndexSet(int d, bool include_constant, std::vector<FrequencyBox> boxes);

  int d() const { return d_; }
  bool includes_constant() const { return include_constant_; }
  const std::vector<FrequencyBox>& boxes() const { return boxes_; }
  std::size_t size() const { return size_; }
  // Global position of the first frequency of box i.
  std::size_t offset(std::size_t box) const { return offsets_[box]; }
  // Index of the box for a term, or -1.
  int find(const AnovaTerm& term) const;
  std::vector<AnovaTerm> terms() const;

  Frequency frequency(std::size_t pos) const;
  std::vector<Frequency> enumerate() const;
  bool contains(std::span<const int> k) const;

 private:
  int d_ = 0;
  bool include_constant_ = false;
  std::vector<FrequencyBox> boxes_;
  std::vector<std::size_t> offsets_;
  std::size_t size_ = 0;
};

GroupedIndexSet build_grouped(
    int d, const std::vector<std::pair<AnovaTerm, BandwidthVector>>& terms,
    bool include_constant);

// The base set with dim `dim` of `term` narrowed to bandwidth m_prime.
GroupedIndexSet varied_set(const GroupedIndexSet& base, const AnovaTerm& term,
                           int dim, int m_prime);

// Positions (into base's enumeration) of frequencies absent from varied.
std::vector<std::size_t> set_difference_tail(const GroupedIndexSet& base,
                                             const GroupedIndexSet& varied);

// 1 + sum_u prod_j (m_{u,j} - 1), or without the 1 when no constant.
std::size_t cardinality_formula(
    const std::vector<std::pair<AnovaTerm, BandwidthVector>>& terms,
    bool include_constant);

}  // namespace anisova

#endif  // ANISOVA_INDEX_SETS_HPP_
