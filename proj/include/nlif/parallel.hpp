// Fixed-size block decomposition shared by the serial and OpenMP kernels.
//
// Every stochastic kernel draws one random engine per block, so the serial
// reference and the threaded version consume identical streams and produce
// bit-identical output for any thread count.
#pragma once

#include <algorithm>
#include <exception>
#include <cstddef>
#include <cstdint>

namespace nlif {

inline constexpr std::size_t kBlockSize = 16384;

inline std::size_t block_count(std::size_t n) { return (n + kBlockSize - 1) / kBlockSize; }

enum class Exec { serial, parallel };

template <class Fn>
void for_each_block(Exec exec, std::size_t n, Fn&& fn) {
  const auto blocks = static_cast<std::int64_t>(block_count(n));
  if (exec == Exec::parallel && blocks > 1) {
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < blocks; ++b) {
      const std::size_t begin = static_cast<std::size_t>(b) * kBlockSize;
      fn(static_cast<std::uint64_t>(b), begin, std::min(n, begin + kBlockSize));
    }
  } else {
    for (std::int64_t b = 0; b < blocks; ++b) {
      const std::size_t begin = static_cast<std::size_t>(b) * kBlockSize;
      fn(static_cast<std::uint64_t>(b), begin, std::min(n, begin + kBlockSize));
    }
  }
}

/// Runs fn(i) for i in [0, n) across threads. The first exception thrown by
/// any iteration is rethrown on the calling thread.
template <class Fn>
void for_each_replica(int n, Fn&& fn) {
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
#pragma omp critical(nlif_replica_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace nlif
