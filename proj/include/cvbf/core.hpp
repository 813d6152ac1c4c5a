#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cvbf {

// Base of everything the library throws. The CLI maps InputError to exit
// code 2 and NumericalError to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An ordered collection of finite real observations.
class Sample {
 public:
  Sample() = default;
  explicit Sample(std::vector<double> values) : values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw InputError("sample value at index " + std::to_string(i) +
                         " is not finite");
      }
    }
  }
  Sample(std::initializer_list<double> values)
      : Sample(std::vector<double>(values)) {}

  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] bool empty() const noexcept { return values_.empty(); }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
  [[nodiscard]] auto begin() const noexcept { return values_.begin(); }
  [[nodiscard]] auto end() const noexcept { return values_.end(); }
  [[nodiscard]] std::span<const double> values() const noexcept {
    return values_;
  }
  [[nodiscard]] const std::vector<double>& vector() const noexcept {
    return values_;
  }
  operator std::span<const double>() const noexcept { return values_; }

  [[nodiscard]] Sample subset(std::span<const std::size_t> idx) const {
    std::vector<double> out;
    out.reserve(idx.size());
    for (auto i : idx) {
      if (i >= values_.size()) throw InputError("subset index out of range");
      out.push_back(values_[i]);
    }
    Sample s;
    s.values_ = std::move(out);
    return s;
  }

  [[nodiscard]] Sample sorted() const {
    Sample s(*this);
    std::sort(s.values_.begin(), s.values_.end());
    return s;
  }

  friend Sample concat(const Sample& a, const Sample& b) {
    Sample s;
    s.values_.reserve(a.size() + b.size());
    s.values_.insert(s.values_.end(), a.begin(), a.end());
    s.values_.insert(s.values_.end(), b.begin(), b.end());
    return s;
  }

  friend bool operator==(const Sample&, const Sample&) = default;

 private:
  std::vector<double> values_;
};

inline void require_size(const Sample& s, std::size_t min_size,
                         const char* what) {
  if (s.size() < min_size) {
    throw InputError(std::string(what) + " needs at least " +
                     std::to_string(min_size) + " observations, got " +
                     std::to_string(s.size()));
  }
}

/// Partition of a sample into training and validation index sets.
struct SplitPlan {
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> valid_idx;
  std::uint64_t seed = 0;

  // Throws InputError unless the two index sets are nonempty, disjoint and
  // together cover 0..n-1.
  void validate(std::size_t n) const {
    if (train_idx.empty() || valid_idx.empty()) {
      throw InputError("split plan needs nonempty training and validation sets");
    }
    if (train_idx.size() + valid_idx.size() != n) {
      throw InputError("split plan does not cover the sample");
    }
    std::vector<char> seen(n, 0);
    for (auto i : train_idx) {
      if (i >= n || seen[i]) throw InputError("split plan index invalid or repeated");
      seen[i] = 1;
    }
    for (auto i : valid_idx) {
      if (i >= n || seen[i]) throw InputError("split plan index invalid or repeated");
      seen[i] = 1;
    }
  }

  [[nodiscard]] std::pair<Sample, Sample> apply(const Sample& s) const {
    validate(s.size());
    return {s.subset(train_idx), s.subset(valid_idx)};
  }
};

namespace detail {

// Neumaier-compensated sum in index order.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double log_sum_exp(std::span<const double> v) {
  double mx = -INFINITY;
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  CompensatedSum s;
  for (double x : v) s.add(std::exp(x - mx));
  return mx + std::log(s.value());
}

}  // namespace detail
}  // namespace cvbf
