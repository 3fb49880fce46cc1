#ifndef MEMES_NOVELTY_HPP
#define MEMES_NOVELTY_HPP

#include <memes/archive.hpp>
#include <memes/types.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace memes {

    enum class NoveltyBackend { fifo, all, elites, none };

    inline std::string to_string(NoveltyBackend b)
    {
        switch (b) {
        case NoveltyBackend::fifo: return "fifo";
        case NoveltyBackend::all: return "all";
        case NoveltyBackend::elites: return "elites";
        case NoveltyBackend::none: return "none";
        }
        return "?";
    }

    struct NoveltyConfig {
        int k_nearest = 10;
        std::size_t fifo_capacity = 50000;
        NoveltyBackend backend = NoveltyBackend::fifo;
        // Also push every ES sample's feature, not just the offspring means.
        bool insert_samples = false;

        void validate() const
        {
            require(k_nearest >= 1, "NoveltyConfig: k_nearest must be >= 1");
            require(fifo_capacity >= static_cast<std::size_t>(k_nearest), "NoveltyConfig: fifo_capacity must be >= k_nearest");
        }
    };

    /// Score returned against an empty store: everything is maximally novel.
    inline constexpr double kMaxNovelty = std::numeric_limits<double>::max();

    /// Feature store for novelty scoring. Bounded stores evict the oldest entry once full.
    class NoveltyArchive {
    public:
        NoveltyArchive() = default;

        static NoveltyArchive bounded(std::size_t capacity)
        {
            require(capacity > 0, "NoveltyArchive: capacity must be positive");
            NoveltyArchive a;
            a._capacity = capacity;
            return a;
        }
        static NoveltyArchive unbounded() { return NoveltyArchive{}; }

        static NoveltyArchive for_config(const NoveltyConfig& cfg)
        {
            return cfg.backend == NoveltyBackend::fifo ? bounded(cfg.fifo_capacity) : unbounded();
        }

        std::optional<std::size_t> capacity() const { return _capacity; }
        std::size_t size() const { return _size; }
        bool empty() const { return _size == 0; }
        Eigen::Index dims() const { return _dims; }
        std::size_t total_inserted() const { return _inserted; }

        void insert(const Vector& feature)
        {
            if (_dims == 0)
                _dims = feature.size();
            require(feature.size() == _dims && _dims > 0, "NoveltyArchive: feature dimensionality mismatch");

            const auto d = static_cast<std::size_t>(_dims);
            if (!_capacity || _size < *_capacity) {
                _data.insert(_data.end(), feature.data(), feature.data() + d);
                ++_size;
            }
            else {
                // Full ring: overwrite the oldest slot.
                std::copy(feature.data(), feature.data() + d, _data.begin() + static_cast<std::ptrdiff_t>(_head * d));
                _head = (_head + 1) % *_capacity;
            }
            ++_inserted;
        }

        void insert(std::span<const Vector> features)
        {
            for (const auto& f : features)
                insert(f);
        }

        /// k-th stored feature, oldest first.
        Vector feature(std::size_t k) const
        {
            const std::size_t slot = (_head + k) % std::max<std::size_t>(_size, 1);
            const auto d = static_cast<std::size_t>(_dims);
            return Eigen::Map<const Vector>(_data.data() + slot * d, _dims);
        }

        /// Visits raw rows in storage order (not age order); fine for order-free reductions.
        template <typename F>
        void for_each_raw(F&& f) const
        {
            const auto d = static_cast<std::size_t>(_dims);
            for (std::size_t s = 0; s < _size; ++s)
                f(_data.data() + s * d);
        }

    private:
        std::optional<std::size_t> _capacity;
        Eigen::Index _dims = 0;
        std::size_t _size = 0;
        std::size_t _head = 0;
        std::size_t _inserted = 0;
        std::vector<double> _data;
    };

    namespace detail {
        inline double euclidean(const double* a, const double* b, Eigen::Index dims)
        {
            double s = 0.0;
            for (Eigen::Index i = 0; i < dims; ++i) {
                const double diff = a[i] - b[i];
                s += diff * diff;
            }
            return std::sqrt(s);
        }

        /// Mean of the k smallest distances, summed in ascending order.
        inline double mean_of_smallest(std::vector<double>& dist, int k)
        {
            if (dist.empty())
                return kMaxNovelty;
            const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), dist.size());
            std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
            double s = 0.0;
            for (std::size_t i = 0; i < kk; ++i)
                s += dist[i];
            return s / static_cast<double>(kk);
        }

        inline std::vector<double>& scratch()
        {
            thread_local std::vector<double> buf;
            buf.clear();
            return buf;
        }
    } // namespace detail

    /// Mean Euclidean distance to the k nearest stored features (all of them if fewer than k).
    inline double novelty_score(const Vector& query, const NoveltyArchive& store, int k)
    {
        require(k >= 1, "novelty_score: k must be >= 1");
        if (store.empty())
            return kMaxNovelty;
        require(query.size() == store.dims(), "novelty_score: query dimensionality mismatch");
        auto& dist = detail::scratch();
        dist.reserve(store.size());
        store.for_each_raw([&](const double* row) { dist.push_back(detail::euclidean(query.data(), row, query.size())); });
        return detail::mean_of_smallest(dist, k);
    }

    /// Same score against the features of the occupied elite cells.
    inline double novelty_score(const Vector& query, const EliteArchive& elites, int k)
    {
        require(k >= 1, "novelty_score: k must be >= 1");
        if (elites.empty())
            return kMaxNovelty;
        require(static_cast<std::size_t>(query.size()) == elites.spec().dims(), "novelty_score: query dimensionality mismatch");
        auto& dist = detail::scratch();
        dist.reserve(elites.size());
        for (std::size_t flat : elites.occupied())
            dist.push_back(detail::euclidean(query.data(), elites.at(flat)->eval.feature.data(), query.size()));
        return detail::mean_of_smallest(dist, k);
    }

    /// Read-only view that dispatches to the configured backend.
    struct NoveltySource {
        const NoveltyArchive* novelty = nullptr;
        const EliteArchive* elites = nullptr;
        NoveltyBackend backend = NoveltyBackend::fifo;
        int k = 10;

        double score(const Vector& feature) const
        {
            if (!feature.allFinite())
                return std::numeric_limits<double>::quiet_NaN();
            switch (backend) {
            case NoveltyBackend::fifo:
            case NoveltyBackend::all: return novelty_score(feature, *novelty, k);
            case NoveltyBackend::elites: return novelty_score(feature, *elites, k);
            case NoveltyBackend::none: break;
            }
            throw ContractViolation("novelty backend 'none' cannot score features");
        }
    };

} // namespace memes

#endif
