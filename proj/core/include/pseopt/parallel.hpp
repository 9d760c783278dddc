#pragma once

#include <cstdint>

#include <functional>

namespace pseopt {

/// Worker cap for the gather-style loops (grid-to-particle, rendering).
/// 1 selects the serial reference path. Results are bitwise identical for
/// any thread count: work is split into contiguous index ranges and every
/// index writes only its own slot.
int max_threads();
void set_max_threads(int n);

namespace detail {
void parallel_for_impl(std::int64_t begin, std::int64_t end,
                       const std::function<void(std::int64_t, std::int64_t)>& range_fn);
}

template <class F>
void parallel_for(std::int64_t n, F&& body) {
  detail::parallel_for_impl(0, n, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) body(i);
  });
}

}  // namespace pseopt
