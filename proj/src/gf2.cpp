#include "mixlab/gf2.hpp"

#include <algorithm>
#include <bit>

namespace mixlab::gf2 {

namespace {

void check_columns(std::size_t cols) {
  if (cols > kMaxColumns)
    throw DimensionError("gf2: " + std::to_string(cols) + " columns exceeds the cap of " +
                         std::to_string(kMaxColumns));
}

void xor_words(std::span<Word> dst, std::span<const Word> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] ^= src[i];
}

}  // namespace

BitVector BitVector::from_string(std::string_view bits) {
  BitVector v(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1')
      v.set(i);
    else if (bits[i] != '0')
      throw std::invalid_argument("gf2: bit string contains '" + std::string(1, bits[i]) + "'");
  }
  return v;
}

BitVector BitVector::unit(std::size_t length, std::size_t index) {
  BitVector v(length);
  v.set(index);
  return v;
}

BitVector& BitVector::operator^=(const BitVector& other) {
  if (other.length_ != length_) throw std::invalid_argument("gf2: length mismatch in xor");
  xor_words(words_, other.words_);
  return *this;
}

BitVector& BitVector::operator&=(const BitVector& other) {
  if (other.length_ != length_) throw std::invalid_argument("gf2: length mismatch in and");
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= other.words_[i];
  return *this;
}

bool BitVector::dot(const BitVector& other) const {
  if (other.length_ != length_) throw std::invalid_argument("gf2: length mismatch in dot");
  Word acc = 0;
  for (std::size_t i = 0; i < words_.size(); ++i) acc ^= words_[i] & other.words_[i];
  return std::popcount(acc) & 1;
}

std::size_t BitVector::popcount() const {
  std::size_t n = 0;
  for (Word w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

bool BitVector::any() const {
  return std::any_of(words_.begin(), words_.end(), [](Word w) { return w != 0; });
}

std::size_t BitVector::first_set() const {
  for (std::size_t i = 0; i < words_.size(); ++i)
    if (words_[i]) return i * kWordBits + static_cast<std::size_t>(std::countr_zero(words_[i]));
  return length_;
}

std::string BitVector::to_string() const {
  std::string s(length_, '0');
  for (std::size_t i = 0; i < length_; ++i)
    if (get(i)) s[i] = '1';
  return s;
}

BitMatrix::BitMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), row_words_(words_for(cols)) {
  check_columns(cols);
  data_.assign(rows_ * row_words_, 0);
}

BitMatrix BitMatrix::identity(std::size_t n) {
  BitMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.set(i, i);
  return m;
}

BitMatrix BitMatrix::from_rows(const std::vector<std::string>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  BitMatrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw std::invalid_argument("gf2: ragged row strings");
    m.set_row(r, BitVector::from_string(rows[r]));
  }
  return m;
}

BitMatrix BitMatrix::from_rows(std::size_t cols, const std::vector<BitVector>& rows) {
  BitMatrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) m.set_row(r, rows[r]);
  return m;
}

BitVector BitMatrix::row(std::size_t r) const {
  BitVector v(cols_);
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(r * row_words_), row_words_,
              v.words().begin());
  return v;
}

void BitMatrix::set_row(std::size_t r, const BitVector& v) {
  if (v.size() != cols_) throw std::invalid_argument("gf2: row length mismatch");
  std::copy(v.words().begin(), v.words().end(),
            data_.begin() + static_cast<std::ptrdiff_t>(r * row_words_));
}

BitMatrix BitMatrix::transpose() const {
  BitMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    auto words = row_span(r);
    for (std::size_t w = 0; w < row_words_; ++w) {
      Word bits = words[w];
      while (bits) {
        const std::size_t c = w * kWordBits + static_cast<std::size_t>(std::countr_zero(bits));
        t.set(c, r);
        bits &= bits - 1;
      }
    }
  }
  return t;
}

BitVector BitMatrix::operator*(const BitVector& v) const {
  if (v.size() != cols_) throw std::invalid_argument("gf2: matrix-vector size mismatch");
  BitVector out(rows_);
  auto vw = v.words();
  for (std::size_t r = 0; r < rows_; ++r) {
    auto rw = row_span(r);
    Word acc = 0;
    for (std::size_t w = 0; w < row_words_; ++w) acc ^= rw[w] & vw[w];
    if (std::popcount(acc) & 1) out.set(r);
  }
  return out;
}

BitMatrix operator*(const BitMatrix& a, const BitMatrix& b) {
  if (a.cols_ != b.rows_) throw std::invalid_argument("gf2: matrix product size mismatch");
  BitMatrix out(a.rows_, b.cols_);
  for (std::size_t r = 0; r < a.rows_; ++r) {
    auto dst = out.row_span(r);
    auto src = a.row_span(r);
    for (std::size_t w = 0; w < a.row_words_; ++w) {
      Word bits = src[w];
      while (bits) {
        const std::size_t k = w * kWordBits + static_cast<std::size_t>(std::countr_zero(bits));
        xor_words(dst, b.row_span(k));
        bits &= bits - 1;
      }
    }
  }
  return out;
}

BitMatrix& BitMatrix::operator^=(const BitMatrix& other) {
  if (other.rows_ != rows_ || other.cols_ != cols_)
    throw std::invalid_argument("gf2: matrix xor size mismatch");
  xor_words(data_, other.data_);
  return *this;
}

bool BitMatrix::is_zero() const {
  return std::all_of(data_.begin(), data_.end(), [](Word w) { return w == 0; });
}

std::string BitMatrix::to_string() const {
  std::string s;
  for (std::size_t r = 0; r < rows_; ++r) {
    s += row(r).to_string();
    s += '\n';
  }
  return s;
}

Echelon::Echelon(std::size_t cols) : cols_(cols) { check_columns(cols); }

BitVector Echelon::reduce(BitVector v) const {
  for (std::size_t i = 0; i < rows_.size(); ++i)
    if (v.get(pivots_[i])) v ^= rows_[i];
  return v;
}

bool Echelon::insert(BitVector v) {
  if (v.size() != cols_) throw std::invalid_argument("gf2: echelon row length mismatch");
  v = reduce(std::move(v));
  const std::size_t pivot = v.first_set();
  if (pivot == v.size()) return false;
  for (auto& row : rows_)
    if (row.get(pivot)) row ^= v;
  rows_.push_back(std::move(v));
  pivots_.push_back(pivot);
  return true;
}

std::size_t rank(const BitMatrix& m) {
  Echelon e(m.cols());
  for (std::size_t r = 0; r < m.rows() && e.rank() < m.cols(); ++r) e.insert(m.row(r));
  return e.rank();
}

std::vector<BitVector> nullspace(const BitMatrix& m) {
  Echelon e(m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) e.insert(m.row(r));

  std::vector<char> is_pivot(m.cols(), 0);
  for (std::size_t p : e.pivots()) is_pivot[p] = 1;

  std::vector<BitVector> basis;
  basis.reserve(m.cols() - e.rank());
  for (std::size_t free = 0; free < m.cols(); ++free) {
    if (is_pivot[free]) continue;
    BitVector v(m.cols());
    v.set(free);
    for (std::size_t i = 0; i < e.rank(); ++i)
      if (e.rows()[i].get(free)) v.set(e.pivots()[i]);
    basis.push_back(std::move(v));
  }
  return basis;
}

std::optional<AffineSolution> solve_affine(const BitMatrix& m, const BitVector& b) {
  if (b.size() != m.rows()) throw std::invalid_argument("gf2: rhs length must equal row count");
  // Eliminate on the augmented matrix [m | b]; the last column carries the rhs.
  const std::size_t n = m.cols();
  Echelon e(n + 1);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    BitVector aug(n + 1);
    auto src = m.row_span(r);
    for (std::size_t c = 0; c < n; ++c)
      if ((src[c / kWordBits] >> (c % kWordBits)) & 1U) aug.set(c);
    if (b.get(r)) aug.set(n);
    e.insert(std::move(aug));
  }

  AffineSolution sol{BitVector(n), {}};
  std::vector<char> is_pivot(n, 0);
  for (std::size_t i = 0; i < e.rank(); ++i) {
    const std::size_t p = e.pivots()[i];
    if (p == n) return std::nullopt;
    is_pivot[p] = 1;
    if (e.rows()[i].get(n)) sol.particular.set(p);
  }
  for (std::size_t free = 0; free < n; ++free) {
    if (is_pivot[free]) continue;
    BitVector v(n);
    v.set(free);
    for (std::size_t i = 0; i < e.rank(); ++i)
      if (e.rows()[i].get(free)) v.set(e.pivots()[i]);
    sol.nullspace.push_back(std::move(v));
  }
  return sol;
}

BitMatrix mat_pow(const BitMatrix& m, std::uint64_t e) {
  if (!m.square()) throw std::invalid_argument("gf2: mat_pow requires a square matrix");
  BitMatrix result = BitMatrix::identity(m.rows());
  BitMatrix base = m;
  while (e) {
    if (e & 1U) result = result * base;
    e >>= 1;
    if (e) base = base * base;
  }
  return result;
}

}  // namespace mixlab::gf2
