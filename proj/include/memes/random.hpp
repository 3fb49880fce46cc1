#ifndef MEMES_RANDOM_HPP
#define MEMES_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace memes {

    /// What a random stream is used for. Part of the stream key, so two subsystems
    /// never share draws even with identical ids.
    enum class StreamPurpose : std::uint64_t {
        seeding = 1,
        seed_evaluation = 2,
        es_noise = 3,
        task_noise = 4,
        reset_selection = 5,
        variation = 6,
        reevaluation = 7,
        correction = 8,
        biased_selection = 9,
        projection = 10,
        test = 99,
    };

    namespace detail {
        constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

        constexpr std::uint64_t mix64(std::uint64_t z)
        {
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            return z ^ (z >> 31);
        }
    } // namespace detail

    /// Counter-based generator: draw k of a stream is mix64(key + k * golden).
    /// Streams are cheap to create, so every (purpose, generation, emitter, sample)
    /// tuple gets its own and thread scheduling cannot reorder draws.
    class StreamRng {
    public:
        using result_type = std::uint64_t;

        explicit StreamRng(std::uint64_t key = 0) : _key(key) {}

        static constexpr result_type min() { return 0; }
        static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

        result_type operator()() { return detail::mix64(_key + (++_counter) * detail::kGolden); }

        double normal() { return _normal(*this); }
        double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
        double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

        /// Uniform integer in [0, n).
        std::size_t index(std::size_t n)
        {
            return std::uniform_int_distribution<std::size_t>(0, n - 1)(*this);
        }

        std::uint64_t key() const { return _key; }
        std::uint64_t draws() const { return _counter; }

    private:
        std::uint64_t _key;
        std::uint64_t _counter = 0;
        std::normal_distribution<double> _normal{0.0, 1.0};
    };

    inline std::uint64_t stream_key(std::uint64_t seed, StreamPurpose purpose, std::initializer_list<std::uint64_t> ids)
    {
        std::uint64_t k = detail::mix64(seed ^ detail::mix64(static_cast<std::uint64_t>(purpose) * detail::kGolden));
        for (std::uint64_t id : ids)
            k = detail::mix64(k + detail::kGolden + detail::mix64(id + 0x632be59bd9b4e019ULL));
        return k;
    }

    inline StreamRng make_stream(std::uint64_t seed, StreamPurpose purpose, std::initializer_list<std::uint64_t> ids = {})
    {
        return StreamRng(stream_key(seed, purpose, ids));
    }

} // namespace memes

#endif
