#pragma once

#include <cstddef>
#include <memory>
#include <new>
#include <vector>

#include "kamtorus/core.hpp"

namespace kt {

template <class T>
struct AlignedAllocator {
  using value_type = T;
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}
  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(64)));
  }
  void deallocate(T* p, std::size_t) { ::operator delete(p, std::align_val_t(64)); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using CVec = std::vector<cplx, AlignedAllocator<cplx>>;

namespace fft {

// In-place multidimensional complex DFT, unnormalized.
// sign = +1 evaluates sum_n c_n e^{+2 pi i n.j/G} (synthesis), -1 analysis.
// `data` must be 64-byte aligned (CVec storage).
void transform(cplx* data, const std::vector<int>& shape, int sign);

}  // namespace fft
}  // namespace kt
