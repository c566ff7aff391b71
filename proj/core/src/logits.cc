#include "focus/logits.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>

#include "focus/error.h"

namespace focus {
namespace {

void require_finite(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw InvalidArgument("LogitVector: value " + std::to_string(i) +
                            " is not finite");
    }
  }
}

}  // namespace

LogitVector::LogitVector(std::vector<double> values, std::string vocab_id)
    : values_(std::move(values)), vocab_id_(std::move(vocab_id)) {
  require_finite(values_);
}

LogitVector LogitVector::zeros(std::size_t size, std::string vocab_id) {
  return LogitVector(std::vector<double>(size, 0.0), std::move(vocab_id));
}

std::size_t LogitVector::argmax() const {
  if (values_.empty()) throw InvalidArgument("LogitVector::argmax: empty");
  return static_cast<std::size_t>(
      std::max_element(values_.begin(), values_.end()) - values_.begin());
}

void LogitVector::check_compatible(const LogitVector& other) const {
  if (vocab_id_ != other.vocab_id_) {
    throw VocabMismatch("logit vocab_id mismatch: '" + vocab_id_ + "' vs '" +
                        other.vocab_id_ + "'");
  }
  if (values_.size() != other.values_.size()) {
    throw VocabMismatch("logit length mismatch: " +
                        std::to_string(values_.size()) + " vs " +
                        std::to_string(other.values_.size()));
  }
}

LogitVector& LogitVector::operator+=(const LogitVector& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

LogitVector& LogitVector::operator-=(const LogitVector& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

LogitVector& LogitVector::add_scaled(const LogitVector& other, double scale) {
  check_compatible(other);
  for (std::size_t i = 0; i < values_.size(); ++i) {
    values_[i] += scale * other.values_[i];
  }
  require_finite(values_);
  return *this;
}

LogitVector operator*(double s, const LogitVector& v) {
  std::vector<double> out(v.values_.size());
  std::transform(v.values_.begin(), v.values_.end(), out.begin(),
                 [s](double x) { return s * x; });
  return LogitVector(std::move(out), v.vocab_id_);
}

bool operator==(const LogitVector& a, const LogitVector& b) {
  return a.vocab_id_ == b.vocab_id_ &&
         std::equal(a.values_.begin(), a.values_.end(), b.values_.begin(),
                    b.values_.end(), [](double x, double y) {
                      return std::bit_cast<std::uint64_t>(x) ==
                             std::bit_cast<std::uint64_t>(y);
                    });
}

}  // namespace focus
