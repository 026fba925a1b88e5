#include "parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace curvetomo {

ExecutionConfig& execution_config() {
    static ExecutionConfig config;
    return config;
}

unsigned resolved_thread_count() {
    if (execution_config().threads > 0) return execution_config().threads;
    if (const char* env = std::getenv("CURVETOMO_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t chunk,
                  const std::function<void(std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    chunk = std::max<std::size_t>(1, chunk);
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    const unsigned threads =
        static_cast<unsigned>(std::min<std::size_t>(resolved_thread_count(), n_chunks));
    if (threads <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c)
            body(c * chunk, std::min(n, (c + 1) * chunk));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= n_chunks || failed.load()) return;
            try {
                body(c * chunk, std::min(n, (c + 1) * chunk));
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double acc = 0.0;
        for (double v : values) acc += v;
        return acc;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double chunked_sum(std::size_t n, const std::function<double(std::size_t)>& term) {
    const std::size_t chunk = std::max<std::size_t>(1, execution_config().chunk_size);
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    std::vector<double> partial(n_chunks, 0.0);
    parallel_for(n_chunks, 1, [&](std::size_t b, std::size_t e) {
        std::vector<double> buf;
        for (std::size_t c = b; c < e; ++c) {
            const std::size_t lo = c * chunk, hi = std::min(n, lo + chunk);
            buf.resize(hi - lo);
            for (std::size_t i = lo; i < hi; ++i) buf[i - lo] = term(i);
            partial[c] = pairwise_sum(buf);
        }
    });
    return pairwise_sum(partial);
}

}  // namespace curvetomo
