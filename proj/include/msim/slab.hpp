#pragma once

#include <atomic>
#include <memory>
#include <span>
#include <vector>

#include "msim/forces.hpp"

namespace msim {

class SlabOverflow : public Error {
 public:
  explicit SlabOverflow(Index mass)
      : Error("force slab overflow on mass " + std::to_string(mass) + " (degree bookkeeping bug)") {}
};

/// Per-mass append-only force buffers. Springs reserve a slot with one
/// atomic integer increment and write their contribution there; a later
/// per-mass pass sums the occupied slots and resets the counter.
template <typename Scalar>
class ForceSlab {
 public:
  static constexpr Index kConstraintSlots = 4;

  struct Slot {
    Vec3<Scalar> force;
    Index spring;
  };

  ForceSlab() = default;

  explicit ForceSlab(const Topology& topology) {
    const std::size_t n = topology.offsets.empty() ? 0 : topology.offsets.size() - 1;
    offsets_.resize(n + 1, 0);
    for (std::size_t m = 0; m < n; ++m)
      offsets_[m + 1] = offsets_[m] + topology.degree(static_cast<Index>(m)) + kConstraintSlots;
    slots_.resize(offsets_[n]);
    counters_ = std::make_unique<std::atomic<Index>[]>(n);
    for (std::size_t m = 0; m < n; ++m) counters_[m].store(0, std::memory_order_relaxed);
    size_ = n;
  }

  std::size_t size() const noexcept { return size_; }
  Index capacity(Index mass) const { return offsets_[mass + 1] - offsets_[mass]; }
  Index count(Index mass) const { return counters_[mass].load(std::memory_order_relaxed); }

  /// Safe to call concurrently from any number of spring tasks.
  void append(Index mass, const Vec3<Scalar>& force, Index spring) {
    const Index slot = counters_[mass].fetch_add(1, std::memory_order_relaxed);
    if (slot >= capacity(mass)) throw SlabOverflow(mass);
    slots_[offsets_[mass] + slot] = Slot{force, spring};
  }

  std::span<Slot> occupied(Index mass) {
    return {slots_.data() + offsets_[mass], static_cast<std::size_t>(count(mass))};
  }

  void reset(Index mass) { counters_[mass].store(0, std::memory_order_relaxed); }

 private:
  std::vector<Index> offsets_;
  std::vector<Slot> slots_;
  std::unique_ptr<std::atomic<Index>[]> counters_;
  std::size_t size_ = 0;
};

}  // namespace msim
