#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace focus {

// Dense logits over a provider vocabulary. Values are finite; arithmetic is
// only defined between vectors with the same vocab_id and length, and throws
// VocabMismatch otherwise.
class LogitVector {
 public:
  LogitVector(std::vector<double> values, std::string vocab_id);

  static LogitVector zeros(std::size_t size, std::string vocab_id);

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::string& vocab_id() const noexcept { return vocab_id_; }

  // Index of the largest value; lowest index wins ties.
  std::size_t argmax() const;

  // Throws VocabMismatch unless ids and sizes agree.
  void check_compatible(const LogitVector& other) const;

  LogitVector& operator+=(const LogitVector& other);
  LogitVector& operator-=(const LogitVector& other);
  // this += scale * other
  LogitVector& add_scaled(const LogitVector& other, double scale);

  friend LogitVector operator+(LogitVector a, const LogitVector& b) {
    return a += b;
  }
  friend LogitVector operator-(LogitVector a, const LogitVector& b) {
    return a -= b;
  }
  friend LogitVector operator*(double s, const LogitVector& v);

  // Bitwise equality of values plus vocab_id.
  friend bool operator==(const LogitVector& a, const LogitVector& b);

 private:
  std::vector<double> values_;
  std::string vocab_id_;
};

}  // namespace focus
