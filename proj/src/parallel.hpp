#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace curvetomo {

/// Execution settings shared by the operators. Results depend on `chunk_size`
/// only through the order of floating-point reductions, never on the thread count.
struct ExecutionConfig {
    std::size_t chunk_size = 4096;
    unsigned threads = 0;  // 0: CURVETOMO_THREADS or hardware concurrency
};

ExecutionConfig& execution_config();
unsigned resolved_thread_count();

/// Runs body(begin, end) over [0, n) split into chunks of `chunk` items.
void parallel_for(std::size_t n, std::size_t chunk,
                  const std::function<void(std::size_t, std::size_t)>& body);

inline void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
    parallel_for(n, execution_config().chunk_size, body);
}

/// Pairwise (cascade) summation; the order is fixed by the input length.
double pairwise_sum(std::span<const double> values);

/// Sum of term(i) for i in [0, n): per-chunk partials, then a pairwise combine.
double chunked_sum(std::size_t n, const std::function<double(std::size_t)>& term);

}  // namespace curvetomo
