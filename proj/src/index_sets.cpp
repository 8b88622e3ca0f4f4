#include "anisova/index_sets.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "anisova/error.hpp"

namespace anisova {

AnovaTerm::AnovaTerm(std::vector<int> dims) : dims_(std::move(dims)) {
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i] < 0) {
      throw Error(ErrorCode::kOutOfRange, "negative dimension index in term");
    }
    if (i > 0 && dims_[i] <= dims_[i - 1]) {
      throw Error(ErrorCode::kInconsistency,
                  "term dims must be strictly increasing");
    }
  }
}

bool AnovaTerm::contains(int dim) const { return position(dim) >= 0; }

int AnovaTerm::position(int dim) const {
  auto it = std::lower_bound(dims_.begin(), dims_.end(), dim);
  if (it == dims_.end() || *it != dim) return -1;
  return static_cast<int>(it - dims_.begin());
}

std::string AnovaTerm::label() const {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) os << ',';
    os << dims_[i];
  }
  os << '}';
  return os.str();
}

AnovaTerm support(std::span<const int> k) {
  std::vector<int> dims;
  for (std::size_t j = 0; j < k.size(); ++j) {
    if (k[j] != 0) dims.push_back(static_cast<int>(j));
  }
  return AnovaTerm(std::move(dims));
}

FrequencyBox::FrequencyBox(AnovaTerm term, BandwidthVector bandwidths,
                           bool allow_empty)
    : term_(std::move(term)), bandwidths_(std::move(bandwidths)) {
  if (bandwidths_.size() != term_.size()) {
    throw Error(ErrorCode::kInvalidBandwidth,
                "bandwidth vector length does not match term " + term_.label());
  }
  for (int m : bandwidths_) {
    if (m < 0 || m % 2 != 0) {
      throw Error(ErrorCode::kInvalidBandwidth,
                  "bandwidths must be even and nonnegative, got " +
                      std::to_string(m));
    }
    if (m == 0 && !allow_empty) {
      throw Error(ErrorCode::kInvalidBandwidth,
                  "zero bandwidth inside term " + term_.label() +
                      " contradicts its support");
    }
  }
  strides_.assign(term_.size(), 1);
  size_ = 1;
  for (std::size_t i = term_.size(); i-- > 0;) {
    strides_[i] = size_;
    size_ *= static_cast<std::size_t>(extent(i));
  }
}

int FrequencyBox::extent(std::size_t i) const {
  return bandwidths_[i] == 0 ? 0 : bandwidths_[i] - 1;
}

std::vector<int> FrequencyBox::values(std::size_t i) const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(extent(i)));
  for (int idx = 0; idx < extent(i); ++idx) {
    out.push_back(BoxValue(bandwidths_[i], idx));
  }
  return out;
}

int FrequencyBox::component(std::size_t local, std::size_t i) const {
  const auto idx = static_cast<int>((local / strides_[i]) %
                                    static_cast<std::size_t>(extent(i)));
  return BoxValue(bandwidths_[i], idx);
}

void FrequencyBox::frequency(std::size_t local, std::span<int> k) const {
  std::fill(k.begin(), k.end(), 0);
  for (std::size_t i = 0; i < term_.size(); ++i) {
    k[static_cast<std::size_t>(term_.dims()[i])] = component(local, i);
  }
}

bool FrequencyBox::contains(std::span<const int> k) const {
  if (size_ == 0) return false;
  std::size_t i = 0;
  for (std::size_t j = 0; j < k.size(); ++j) {
    const bool active = i < term_.size() &&
                        term_.dims()[i] == static_cast<int>(j);
    if (!active) {
      if (k[j] != 0) return false;
      continue;
    }
    const int half = bandwidths_[i] / 2;
    if (k[j] == 0 || k[j] < -half || k[j] >= half) return false;
    ++i;
  }
  return i == term_.size();
}

FrequencyBox build_box(const AnovaTerm& term, const BandwidthVector& bw) {
  return FrequencyBox(term, bw, false);
}

GroupedIndexSet::GroupedIndexSet(int d, bool include_constant,
                                 std::vector<FrequencyBox> boxes)
    : d_(d), include_constant_(include_constant), boxes_(std::move(boxes)) {
  if (d < 0) throw Error(ErrorCode::kOutOfRange, "negative dimension");
  std::set<AnovaTerm> seen;
  size_ = include_constant_ ? 1 : 0;
  offsets_.reserve(boxes_.size());
  for (const auto& box : boxes_) {
    const auto& dims = box.term().dims();
    if (box.term().empty()) {
      throw Error(ErrorCode::kDegenerateTerm,
                  "the empty term is represented by the constant flag");
    }
    if (dims.back() >= d_) {
      throw Error(ErrorCode::kOutOfRange,
                  "term " + box.term().label() + " exceeds dimension " +
                      std::to_string(d_));
    }
    if (!seen.insert(box.term()).second) {
      throw Error(ErrorCode::kDuplicateTerm,
                  "duplicate term " + box.term().label());
    }
    offsets_.push_back(size_);
    size_ += box.size();
  }
}

int GroupedIndexSet::find(const AnovaTerm& term) const {
  for (std::size_t i = 0; i < boxes_.size(); ++i) {
    if (boxes_[i].term() == term) return static_cast<int>(i);
  }
  return -1;
}

std::vector<AnovaTerm> GroupedIndexSet::terms() const {
  std::vector<AnovaTerm> out;
  out.reserve(boxes_.size());
  for (const auto& box : boxes_) out.push_back(box.term());
  return out;
}

Frequency GroupedIndexSet::frequency(std::size_t pos) const {
  if (pos >= size_) throw Error(ErrorCode::kOutOfRange, "frequency position");
  Frequency k(static_cast<std::size_t>(d_), 0);
  if (include_constant_) {
    if (pos == 0) return k;
  }
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), pos);
  // Empty boxes share their offset with the next box; step back to the
  // last box starting at or before pos that actually holds frequencies.
  std::size_t b = static_cast<std::size_t>(it - offsets_.begin()) - 1;
  while (boxes_[b].size() == 0 || pos - offsets_[b] >= boxes_[b].size()) --b;
  boxes_[b].frequency(pos - offsets_[b], k);
  return k;
}

std::vector<Frequency> GroupedIndexSet::enumerate() const {
  std::vector<Frequency> out;
  out.reserve(size_);
  if (include_constant_) out.emplace_back(static_cast<std::size_t>(d_), 0);
  for (const auto& box : boxes_) {
    for (std::size_t l = 0; l < box.size(); ++l) {
      Frequency k(static_cast<std::size_t>(d_));
      box.frequency(l, k);
      out.push_back(std::move(k));
    }
  }
  return out;
}

bool GroupedIndexSet::contains(std::span<const int> k) const {
  if (k.size() != static_cast<std::size_t>(d_)) return false;
  const AnovaTerm s = support(k);
  if (s.empty()) return include_constant_;
  const int b = find(s);
  return b >= 0 && boxes_[static_cast<std::size_t>(b)].contains(k);
}

GroupedIndexSet build_grouped(
    int d, const std::vector<std::pair<AnovaTerm, BandwidthVector>>& terms,
    bool include_constant) {
  std::vector<FrequencyBox> boxes;
  boxes.reserve(terms.size());
  for (const auto& [term, bw] : terms) boxes.push_back(build_box(term, bw));
  return GroupedIndexSet(d, include_constant, std::move(boxes));
}

GroupedIndexSet varied_set(const GroupedIndexSet& base, const AnovaTerm& term,
                           int dim, int m_prime) {
  const int b = base.find(term);
  if (b < 0) {
    throw Error(ErrorCode::kUnknownTerm,
                "term " + term.label() + " not in index set");
  }
  const int pos = term.position(dim);
  if (pos < 0) {
    throw Error(ErrorCode::kOutOfRange, "dimension " + std::to_string(dim) +
                                            " not in term " + term.label());
  }
  const auto& box = base.boxes()[static_cast<std::size_t>(b)];
  const int m = box.bandwidths()[static_cast<std::size_t>(pos)];
  if (m_prime < 0 || m_prime > m) {
    throw Error(ErrorCode::kOutOfRange,
                "varied bandwidth " + std::to_string(m_prime) +
                    " outside [0, " + std::to_string(m) + "]");
  }
  if (m_prime % 2 != 0) {
    throw Error(ErrorCode::kInvalidBandwidth, "varied bandwidth must be even");
  }
  std::vector<FrequencyBox> boxes = base.boxes();
  BandwidthVector bw = box.bandwidths();
  bw[static_cast<std::size_t>(pos)] = m_prime;
  boxes[static_cast<std::size_t>(b)] = FrequencyBox(term, std::move(bw), true);
  return GroupedIndexSet(base.d(), base.includes_constant(), std::move(boxes));
}

std::vector<std::size_t> set_difference_tail(const GroupedIndexSet& base,
                                             const GroupedIndexSet& varied) {
  if (base.d() != varied.d()) {
    throw Error(ErrorCode::kInconsistency, "dimension differs");
  }
  if (varied.includes_constant() && !base.includes_constant()) {
    throw Error(ErrorCode::kInconsistency,
                "varied set holds the constant, base does not");
  }
  for (const auto& vbox : varied.boxes()) {
    if (vbox.size() == 0) continue;
    const int b = base.find(vbox.term());
    if (b < 0) {
      throw Error(ErrorCode::kInconsistency,
                  "varied term " + vbox.term().label() + " missing in base");
    }
    const auto& bbw = base.boxes()[static_cast<std::size_t>(b)].bandwidths();
    for (std::size_t i = 0; i < bbw.size(); ++i) {
      if (vbox.bandwidths()[i] > bbw[i]) {
        throw Error(ErrorCode::kInconsistency,
                    "varied box exceeds base box for " + vbox.term().label());
      }
    }
  }

  std::vector<std::size_t> out;
  if (base.includes_constant() && !varied.includes_constant()) out.push_back(0);
  std::vector<int> k(static_cast<std::size_t>(base.d()));
  for (std::size_t b = 0; b < base.boxes().size(); ++b) {
    const auto& bbox = base.boxes()[b];
    const int v = varied.find(bbox.term());
    const FrequencyBox* vbox =
        v < 0 ? nullptr : &varied.boxes()[static_cast<std::size_t>(v)];
    for (std::size_t l = 0; l < bbox.size(); ++l) {
      bbox.frequency(l, k);
      if (vbox == nullptr || !vbox->contains(k)) {
        out.push_back(base.offset(b) + l);
      }
    }
  }
  return out;
}

std::size_t cardinality_formula(
    const std::vector<std::pair<AnovaTerm, BandwidthVector>>& terms,
    bool include_constant) {
  std::size_t total = include_constant ? 1 : 0;
  for (const auto& [term, bw] : terms) {
    std::size_t p = 1;
    for (int m : bw) p *= static_cast<std::size_t>(m > 0 ? m - 1 : 0);
    total += p;
  }
  return total;
}

}  // namespace anisova
