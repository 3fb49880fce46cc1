#ifndef MEMES_PARALLEL_HPP
#define MEMES_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace memes {

    namespace detail {
        inline std::atomic<unsigned>& thread_setting()
        {
            static std::atomic<unsigned> n{0};
            return n;
        }
    } // namespace detail

    /// 0 means "one per hardware thread".
    inline void set_num_threads(unsigned n) { detail::thread_setting().store(n); }

    inline unsigned num_threads()
    {
        unsigned n = detail::thread_setting().load();
        if (n == 0)
            n = std::max(1u, std::thread::hardware_concurrency());
        return n;
    }

    /// Runs f(i) for i in [0, n). Each index must write only its own output slot;
    /// under that rule results do not depend on the thread count.
    template <typename F>
    void parallel_for(std::size_t n, F&& f)
    {
        const std::size_t workers = std::min<std::size_t>(num_threads(), n);
        if (workers <= 1) {
            for (std::size_t i = 0; i < n; ++i)
                f(i);
            return;
        }

        std::atomic<std::size_t> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        auto body = [&]() {
            try {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
                    f(i);
            }
            catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                next.store(n);
            }
        };

        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t w = 1; w < workers; ++w)
            pool.emplace_back(body);
        body();
        pool.clear();

        if (error)
            std::rethrow_exception(error);
    }

} // namespace memes

#endif
