#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace vrrw {

/// Lattice site on the integer line.
using Site = std::int64_t;

/// Dense window over a contiguous range of sites, behaving like a total map
/// Site -> T that returns a default value outside the touched window.
/// The window grows on demand in both directions; reads never grow it.
template <class T>
class SiteArray {
 public:
  SiteArray() = default;
  explicit SiteArray(T default_value) : default_(std::move(default_value)) {}

  const T& at(Site s) const {
    if (s < lo_ || s >= lo_ + static_cast<Site>(cells_.size())) return default_;
    return cells_[static_cast<std::size_t>(s - lo_)];
  }

  T& slot(Site s) {
    reserve_site(s);
    return cells_[static_cast<std::size_t>(s - lo_)];
  }

  bool empty() const { return cells_.empty(); }
  Site lo() const { return lo_; }
  Site hi() const { return lo_ + static_cast<Site>(cells_.size()) - 1; }
  const T& default_value() const { return default_; }

  template <class F>
  void for_each(F&& f) const {
    Site s = lo_;
    for (const T& v : cells_) f(s++, v);
  }

 private:
  void reserve_site(Site s) {
    if (cells_.empty()) {
      lo_ = s;
      cells_.push_back(default_);
      return;
    }
    if (s < lo_) {
      const std::size_t add = static_cast<std::size_t>(lo_ - s);
      const std::size_t pad = std::max<std::size_t>(add, cells_.size() / 2 + 4);
      cells_.insert(cells_.begin(), pad, default_);
      lo_ -= static_cast<Site>(pad);
    } else if (s >= lo_ + static_cast<Site>(cells_.size())) {
      const std::size_t need =
          static_cast<std::size_t>(s - lo_) + 1 - cells_.size();
      const std::size_t pad = std::max<std::size_t>(need, cells_.size() / 2 + 4);
      cells_.insert(cells_.end(), pad, default_);
    }
  }

  std::vector<T> cells_;
  Site lo_ = 0;
  T default_{};
};

/// Per-site initial weights: a uniform default plus sparse overrides.
struct InitialWeights {
  std::int64_t default_weight = 1;
  std::map<Site, std::int64_t> overrides;

  std::int64_t at(Site s) const {
    auto it = overrides.find(s);
    return it == overrides.end() ? default_weight : it->second;
  }

  bool operator==(const InitialWeights&) const = default;
};

/// Occupation counters over the lattice. Untouched sites read as their
/// initial weight, so the map is total and z(x) >= 1 everywhere with the
/// default convention.
class SiteCounts {
 public:
  SiteCounts() = default;
  explicit SiteCounts(InitialWeights w) : weights_(std::move(w)) {}

  std::int64_t at(Site s) const {
    if (cells_.empty() || s < cells_.lo() || s > cells_.hi())
      return weights_.at(s);
    return cells_.at(s);
  }

  void add(Site s, std::int64_t d) {
    auto& cell = touch(s);
    cell += d;
  }

  bool empty() const { return cells_.empty(); }
  Site lo() const { return cells_.lo(); }
  Site hi() const { return cells_.hi(); }
  const InitialWeights& weights() const { return weights_; }

  /// Sum of (count - initial weight) over the touched window.
  std::int64_t excess() const {
    std::int64_t total = 0;
    cells_.for_each([&](Site s, std::int64_t v) { total += v - weights_.at(s); });
    return total;
  }

  /// Sites whose count differs from the initial weight, sorted.
  std::vector<std::pair<Site, std::int64_t>> nontrivial() const {
    std::vector<std::pair<Site, std::int64_t>> out;
    cells_.for_each([&](Site s, std::int64_t v) {
      if (v != weights_.at(s)) out.emplace_back(s, v);
    });
    return out;
  }

  template <class F>
  void for_each_touched(F&& f) const {
    cells_.for_each(std::forward<F>(f));
  }

 private:
  std::int64_t& touch(Site s) {
    const bool fresh =
        cells_.empty() || s < cells_.lo() || s > cells_.hi();
    auto& cell = cells_.slot(s);
    if (fresh) init_window();
    return cell;
  }

  // Newly exposed cells start at 0 (SiteArray default); rewrite them with
  // their initial weights. Cells already holding counts are left alone by
  // tracking the previously initialized window.
  void init_window() {
    for (Site s = cells_.lo(); s <= cells_.hi(); ++s) {
      if (s >= init_lo_ && s <= init_hi_) continue;
      cells_.slot(s) = weights_.at(s);
    }
    init_lo_ = cells_.lo();
    init_hi_ = cells_.hi();
  }

  SiteArray<std::int64_t> cells_;
  Site init_lo_ = 1;
  Site init_hi_ = 0;  // empty interval until first touch
  InitialWeights weights_;
};

}  // namespace vrrw
