#ifndef KOTRIE_MINREG_HPP
#define KOTRIE_MINREG_HPP

#include <atomic>
#include <bit>
#include <cstdint>
#include <memory>

namespace kotrie {

/// Bounded min register over values 0..bits, stored in unary as a suffix of
/// ones in a single word. Reads and writes are one shared step each.
class FlatMinRegister {
 public:
  static constexpr unsigned kMaxBits = 64;

  explicit FlatMinRegister(unsigned bits = kMaxBits);

  FlatMinRegister(const FlatMinRegister &) = delete;
  FlatMinRegister &operator=(const FlatMinRegister &) = delete;

  [[nodiscard]] unsigned read() const noexcept {
    return static_cast<unsigned>(
        std::countr_zero(~word_.load(std::memory_order_seq_cst)));
  }

  void min_write(unsigned v) noexcept {
    word_.fetch_and(mask_for(v), std::memory_order_seq_cst);
  }

  /// Restores the initial value, optionally with a new width. Only valid
  /// while no other thread can access the register.
  void reset() noexcept { word_.store(mask_for(bits_), std::memory_order_relaxed); }
  void reset(unsigned bits) noexcept {
    bits_ = bits;
    reset();
  }

  [[nodiscard]] unsigned bits() const noexcept { return bits_; }
  [[nodiscard]] std::uint64_t raw() const noexcept { return word_.load(); }

  static constexpr std::uint64_t mask_for(unsigned v) noexcept {
    return v >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << v) - 1;
  }

 private:
  std::atomic<std::uint64_t> word_;
  unsigned bits_;
};

/// X-bounded min register built as a perfect k-ary tree of k-bounded flat
/// registers. A read takes exactly `height()` shared steps; a write takes at
/// most 2*height()-1.
class TreeMinRegister {
 public:
  /// Accepts values 0..bound-1. The tree is sized for the smallest power of
  /// `arity` that is >= bound.
  TreeMinRegister(std::uint64_t arity, std::uint64_t bound);

  [[nodiscard]] std::uint64_t read() const noexcept {
    unsigned steps = 0;
    return read(steps);
  }
  std::uint64_t read(unsigned &steps) const noexcept;

  /// Throws std::out_of_range if v >= bound().
  void min_write(std::uint64_t v) {
    unsigned steps = 0;
    min_write(v, steps);
  }
  void min_write(std::uint64_t v, unsigned &steps);

  [[nodiscard]] std::uint64_t arity() const noexcept { return k_; }
  [[nodiscard]] unsigned height() const noexcept { return x_; }
  [[nodiscard]] std::uint64_t bound() const noexcept { return bound_; }
  [[nodiscard]] std::uint64_t capacity() const noexcept { return capacity_; }

  /// Every flat register holds a suffix-of-ones pattern.
  [[nodiscard]] bool well_formed() const noexcept;

 private:
  [[nodiscard]] std::size_t child(std::size_t node, std::uint64_t i) const noexcept {
    return node * k_ + 1 + i;
  }

  std::uint64_t k_;
  unsigned x_;
  std::uint64_t bound_;
  std::uint64_t capacity_;
  std::size_t node_count_;
  std::unique_ptr<FlatMinRegister[]> nodes_;
};

}  // namespace kotrie

#endif  // KOTRIE_MINREG_HPP
