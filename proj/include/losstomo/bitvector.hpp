#pragma once

#include <bit>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace losstomo {

// Fixed-length packed bit vector. One instance holds one column of an
// observation matrix (bit i = probe i), so subtree unions and intersections
// are word-wise OR/AND followed by popcount.
class BitVector {
 public:
  using Word = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  BitVector() = default;
  explicit BitVector(std::size_t size, bool value = false)
      : size_(size), words_((size + kWordBits - 1) / kWordBits, value ? ~Word{0} : Word{0}) {
    clear_tail();
  }

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  bool test(std::size_t i) const {
    assert(i < size_);
    return (words_[i / kWordBits] >> (i % kWordBits)) & 1U;
  }
  void set(std::size_t i, bool value = true) {
    assert(i < size_);
    const Word mask = Word{1} << (i % kWordBits);
    if (value)
      words_[i / kWordBits] |= mask;
    else
      words_[i / kWordBits] &= ~mask;
  }

  std::size_t count() const noexcept {
    std::size_t total = 0;
    for (Word w : words_) total += static_cast<std::size_t>(std::popcount(w));
    return total;
  }

  BitVector& operator&=(const BitVector& other) {
    assert(other.size_ == size_);
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] &= other.words_[w];
    return *this;
  }
  BitVector& operator|=(const BitVector& other) {
    assert(other.size_ == size_);
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= other.words_[w];
    return *this;
  }

  std::vector<Word>& words() noexcept { return words_; }
  const std::vector<Word>& words() const noexcept { return words_; }

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  void clear_tail() {
    if (size_ % kWordBits != 0 && !words_.empty())
      words_.back() &= (Word{1} << (size_ % kWordBits)) - 1;
  }

  std::size_t size_ = 0;
  std::vector<Word> words_;
};

inline BitVector operator&(BitVector lhs, const BitVector& rhs) { return lhs &= rhs; }
inline BitVector operator|(BitVector lhs, const BitVector& rhs) { return lhs |= rhs; }

}  // namespace losstomo
