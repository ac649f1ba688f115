#pragma once

// Bit-packed linear algebra over GF(2).
//
// Rows are stored row-major in 64-bit words; bits beyond the logical length
// of a row are always zero. Elimination pivots on the first set bit of each
// reduced row and never permutes columns, so results are deterministic.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mixlab::gf2 {

using Word = std::uint64_t;
inline constexpr std::size_t kWordBits = 64;

/// Default upper bound on the number of matrix columns.
inline constexpr std::size_t kMaxColumns = std::size_t{1} << 16;

class DimensionError : public std::length_error {
 public:
  using std::length_error::length_error;
};

inline constexpr std::size_t words_for(std::size_t bits) {
  return (bits + kWordBits - 1) / kWordBits;
}

class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t length) : length_(length), words_(words_for(length), 0) {}

  /// Parses a string of '0'/'1' characters; index 0 is the leftmost char.
  static BitVector from_string(std::string_view bits);
  static BitVector unit(std::size_t length, std::size_t index);

  std::size_t size() const { return length_; }
  bool empty() const { return length_ == 0; }

  bool get(std::size_t i) const { return (words_[i / kWordBits] >> (i % kWordBits)) & 1U; }
  void set(std::size_t i, bool value = true) {
    const Word mask = Word{1} << (i % kWordBits);
    if (value)
      words_[i / kWordBits] |= mask;
    else
      words_[i / kWordBits] &= ~mask;
  }
  void flip(std::size_t i) { words_[i / kWordBits] ^= Word{1} << (i % kWordBits); }

  BitVector& operator^=(const BitVector& other);
  BitVector& operator&=(const BitVector& other);
  friend BitVector operator^(BitVector a, const BitVector& b) { return a ^= b; }
  friend BitVector operator&(BitVector a, const BitVector& b) { return a &= b; }

  /// Inner product over GF(2).
  bool dot(const BitVector& other) const;
  std::size_t popcount() const;
  bool any() const;
  bool none() const { return !any(); }
  /// Index of the first set bit, or size() if none.
  std::size_t first_set() const;

  std::span<const Word> words() const { return words_; }
  std::span<Word> words() { return words_; }

  std::string to_string() const;

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  std::size_t length_ = 0;
  std::vector<Word> words_;
};

class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols);

  static BitMatrix identity(std::size_t n);
  /// Builds a matrix from equal-length row strings such as {"110", "011"}.
  static BitMatrix from_rows(const std::vector<std::string>& rows);
  static BitMatrix from_rows(std::size_t cols, const std::vector<BitVector>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t row_words() const { return row_words_; }
  bool square() const { return rows_ == cols_; }

  bool get(std::size_t r, std::size_t c) const {
    return (data_[r * row_words_ + c / kWordBits] >> (c % kWordBits)) & 1U;
  }
  void set(std::size_t r, std::size_t c, bool value = true) {
    Word& w = data_[r * row_words_ + c / kWordBits];
    const Word mask = Word{1} << (c % kWordBits);
    w = value ? (w | mask) : (w & ~mask);
  }

  std::span<const Word> row_span(std::size_t r) const {
    return {data_.data() + r * row_words_, row_words_};
  }
  std::span<Word> row_span(std::size_t r) { return {data_.data() + r * row_words_, row_words_}; }

  BitVector row(std::size_t r) const;
  void set_row(std::size_t r, const BitVector& v);

  BitMatrix transpose() const;
  BitVector operator*(const BitVector& v) const;
  friend BitMatrix operator*(const BitMatrix& a, const BitMatrix& b);
  BitMatrix& operator^=(const BitMatrix& other);

  bool is_zero() const;
  std::string to_string() const;

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t row_words_ = 0;
  std::vector<Word> data_;
};

/// Incremental reduced row echelon form. Rows are inserted one at a time;
/// each stored row has a distinct pivot (its first set bit), and no other
/// stored row has that bit set.
class Echelon {
 public:
  explicit Echelon(std::size_t cols);

  /// Reduces v against the stored rows and keeps the remainder if nonzero.
  /// Returns true iff the rank grew.
  bool insert(BitVector v);
  /// Reduces v against the stored rows.
  BitVector reduce(BitVector v) const;
  bool in_span(const BitVector& v) const { return reduce(v).none(); }

  std::size_t rank() const { return rows_.size(); }
  std::size_t cols() const { return cols_; }
  const std::vector<BitVector>& rows() const { return rows_; }
  const std::vector<std::size_t>& pivots() const { return pivots_; }

 private:
  std::size_t cols_;
  std::vector<BitVector> rows_;
  std::vector<std::size_t> pivots_;
};

struct AffineSolution {
  BitVector particular;
  std::vector<BitVector> nullspace;
};

std::size_t rank(const BitMatrix& m);
/// Basis of {v : m v = 0}; its size is cols - rank(m).
std::vector<BitVector> nullspace(const BitMatrix& m);
/// Solves m x = b. Returns nullopt iff the system is inconsistent.
std::optional<AffineSolution> solve_affine(const BitMatrix& m, const BitVector& b);
/// m^e by repeated squaring; m must be square.
BitMatrix mat_pow(const BitMatrix& m, std::uint64_t e);

}  // namespace mixlab::gf2
