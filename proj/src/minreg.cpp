#include "kotrie/minreg.hpp"

#include <stdexcept>

#include "kotrie/debug.hpp"

namespace kotrie {

FlatMinRegister::FlatMinRegister(unsigned bits)
    : word_{mask_for(bits)}, bits_{bits} {
  if (bits == 0 || bits > kMaxBits)
    throw std::invalid_argument("flat min register width must be in 1..64");
}

namespace {

std::unique_ptr<FlatMinRegister[]> make_nodes(std::size_t count,
                                              std::uint64_t arity) {
  auto nodes = std::make_unique<FlatMinRegister[]>(count);
  for (std::size_t i = 0; i < count; ++i)
    nodes[i].reset(static_cast<unsigned>(arity - 1));
  return nodes;
}

}  // namespace

TreeMinRegister::TreeMinRegister(std::uint64_t arity, std::uint64_t bound)
    : k_{arity}, x_{1}, bound_{bound}, capacity_{arity}, node_count_{1} {
  if (arity < 2 || arity > FlatMinRegister::kMaxBits + 1)
    throw std::invalid_argument("min register arity must be in 2..65");
  if (bound < 1) throw std::invalid_argument("min register bound must be >= 1");
  std::size_t level_width = 1;
  while (capacity_ < bound) {
    if (capacity_ > (std::uint64_t{1} << 40) / k_)
      throw std::invalid_argument("min register bound too large");
    capacity_ *= k_;
    level_width *= k_;
    node_count_ += level_width;
    ++x_;
  }
  nodes_ = make_nodes(node_count_, k_);
  if (bound_ < capacity_) min_write(bound_ - 1);
}

std::uint64_t TreeMinRegister::read(unsigned &steps) const noexcept {
  std::size_t node = 0;
  std::uint64_t scale = capacity_ / k_;
  std::uint64_t value = 0;
  for (unsigned level = 0; level < x_; ++level) {
    const std::uint64_t i = nodes_[node].read();
    ++steps;
    value += i * scale;
    if (level + 1 < x_) node = child(node, i);
    scale /= k_;
  }
  return value;
}

void TreeMinRegister::min_write(std::uint64_t v, unsigned &steps) {
  if (v >= bound_) throw std::out_of_range("min register value out of range");
  std::size_t node = 0;
  std::uint64_t scale = capacity_ / k_;
  // Switch registers to lower after the subtree write, deepest first.
  std::size_t pending_node[64];
  std::uint64_t pending_value[64];
  unsigned pending = 0;
  for (unsigned level = 0;; ++level) {
    if (level + 1 == x_) {
      debug::sched_point(debug::Site::kMinWrite);
      nodes_[node].min_write(static_cast<unsigned>(v));
      ++steps;
      break;
    }
    const std::uint64_t i = v / scale;
    const std::uint64_t j = v % scale;
    const std::uint64_t d = nodes_[node].read();
    ++steps;
    if (d < i) break;
    if (d > i) {
      pending_node[pending] = node;
      pending_value[pending] = i;
      ++pending;
    }
    node = child(node, i);
    v = j;
    scale /= k_;
  }
  while (pending > 0) {
    --pending;
    debug::sched_point(debug::Site::kMinWrite);
    nodes_[pending_node[pending]].min_write(
        static_cast<unsigned>(pending_value[pending]));
    ++steps;
  }
}

bool TreeMinRegister::well_formed() const noexcept {
  for (std::size_t n = 0; n < node_count_; ++n) {
    const std::uint64_t w = nodes_[n].raw();
    if ((w & (w + 1)) != 0) return false;
  }
  return true;
}

}  // namespace kotrie
