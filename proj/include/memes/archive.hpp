#ifndef MEMES_ARCHIVE_HPP
#define MEMES_ARCHIVE_HPP

#include <memes/random.hpp>
#include <memes/types.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace memes {

    /// Regular grid over a bounded feature box.
    struct GridSpec {
        BoundedBox bounds;
        std::vector<int> cells_per_dim;

        GridSpec() = default;
        GridSpec(BoundedBox b, std::vector<int> cells) : bounds(std::move(b)), cells_per_dim(std::move(cells)) { validate(); }

        void validate() const
        {
            bounds.validate();
            require(static_cast<Eigen::Index>(cells_per_dim.size()) == bounds.dims(),
                "GridSpec: cells_per_dim has " + std::to_string(cells_per_dim.size()) + " entries, bounds have "
                    + std::to_string(bounds.dims()) + " dims");
            for (int c : cells_per_dim)
                require(c > 0, "GridSpec: cells_per_dim entries must be positive");
        }

        std::size_t dims() const { return cells_per_dim.size(); }

        std::size_t total_cells() const
        {
            std::size_t n = 1;
            for (int c : cells_per_dim)
                n *= static_cast<std::size_t>(c);
            return n;
        }

        double width(std::size_t i) const
        {
            const auto k = static_cast<Eigen::Index>(i);
            return (bounds.high[k] - bounds.low[k]) / cells_per_dim[i];
        }

        /// Mean over dimensions of the cell width; the unit for feature-distance metrics.
        double mean_cell_width() const
        {
            double s = 0.0;
            for (std::size_t i = 0; i < dims(); ++i)
                s += width(i);
            return s / static_cast<double>(dims());
        }

        bool operator==(const GridSpec& o) const { return bounds == o.bounds && cells_per_dim == o.cells_per_dim; }
    };

    using CellIndex = std::vector<int>;

    /// Grid coordinates of a feature. Features on or beyond a bound are clamped to the
    /// nearest edge cell. Returns nullopt for non-finite features.
    inline std::optional<CellIndex> cell_index(const GridSpec& spec, const Vector& feature)
    {
        require(static_cast<std::size_t>(feature.size()) == spec.dims(),
            "cell_index: feature has " + std::to_string(feature.size()) + " dims, grid has " + std::to_string(spec.dims()));
        if (!feature.allFinite())
            return std::nullopt;

        CellIndex idx(spec.dims());
        for (std::size_t i = 0; i < spec.dims(); ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            const double pos = std::floor((feature[k] - spec.bounds.low[k]) / spec.width(i));
            const double clamped = std::clamp(pos, 0.0, static_cast<double>(spec.cells_per_dim[i] - 1));
            idx[i] = static_cast<int>(clamped);
        }
        return idx;
    }

    /// Row-major flattening, last dimension fastest.
    inline std::size_t flat_index(const GridSpec& spec, const CellIndex& idx)
    {
        std::size_t flat = 0;
        for (std::size_t i = 0; i < spec.dims(); ++i)
            flat = flat * static_cast<std::size_t>(spec.cells_per_dim[i]) + static_cast<std::size_t>(idx[i]);
        return flat;
    }

    inline CellIndex unflatten_index(const GridSpec& spec, std::size_t flat)
    {
        CellIndex idx(spec.dims());
        for (std::size_t i = spec.dims(); i-- > 0;) {
            const auto c = static_cast<std::size_t>(spec.cells_per_dim[i]);
            idx[i] = static_cast<int>(flat % c);
            flat /= c;
        }
        return idx;
    }

    struct Elite {
        Genome genome;
        Evaluation eval;

        bool operator==(const Elite& o) const
        {
            return genome.size() == o.genome.size() && genome == o.genome && eval.fitness == o.eval.fitness
                && eval.feature.size() == o.eval.feature.size() && eval.feature == o.eval.feature;
        }
    };

    enum class AddOutcome { added_new, replaced, rejected, invalid };

    inline bool is_added(AddOutcome o) { return o == AddOutcome::added_new || o == AddOutcome::replaced; }

    /// MAP-Elites grid archive: at most one elite per cell, the best fitness ever offered.
    ///
    /// Mutated by a single writer between generations; const access is safe from many threads.
    /// Occupied cells are remembered in the order they were first filled, which fixes the
    /// iteration order for selection, serialization and re-evaluation.
    class EliteArchive {
    public:
        EliteArchive() = default;
        explicit EliteArchive(GridSpec spec) : _spec(std::move(spec)), _cells(_spec.total_cells()) {}

        const GridSpec& spec() const { return _spec; }

        /// Strictly better fitness replaces the incumbent; ties keep it.
        AddOutcome offer(const Genome& genome, const Evaluation& eval)
        {
            if (!eval.valid()) {
                ++_invalid;
                return AddOutcome::invalid;
            }
            const auto idx = cell_index(_spec, eval.feature);
            if (!idx) {
                ++_invalid;
                return AddOutcome::invalid;
            }
            const std::size_t flat = flat_index(_spec, *idx);
            auto& cell = _cells[flat];
            if (!cell) {
                cell = Elite{genome, eval};
                _occupied.push_back(flat);
                return AddOutcome::added_new;
            }
            if (eval.fitness > cell->eval.fitness) {
                *cell = Elite{genome, eval};
                return AddOutcome::replaced;
            }
            return AddOutcome::rejected;
        }

        bool try_add(const Genome& genome, const Evaluation& eval) { return is_added(offer(genome, eval)); }

        std::size_t size() const { return _occupied.size(); }
        bool empty() const { return _occupied.empty(); }
        std::size_t invalid_count() const { return _invalid; }

        /// Elite stored at a flat cell index, or nullptr.
        const Elite* at(std::size_t flat) const { return _cells[flat] ? &*_cells[flat] : nullptr; }

        /// Flat indices of occupied cells in first-fill order.
        std::span<const std::size_t> occupied() const { return _occupied; }

        /// k-th occupant in first-fill order.
        const Elite& occupant(std::size_t k) const { return *_cells[_occupied[k]]; }

        const Elite& uniform_pick(StreamRng& rng) const
        {
            if (empty())
                throw EmptyArchiveError();
            return occupant(rng.index(_occupied.size()));
        }

        /// count i.i.d. uniform draws over occupied cells, with replacement.
        std::vector<Genome> uniform_select(StreamRng& rng, std::size_t count) const
        {
            if (empty())
                throw EmptyArchiveError();
            std::vector<Genome> out;
            out.reserve(count);
            for (std::size_t i = 0; i < count; ++i)
                out.push_back(uniform_pick(rng).genome);
            return out;
        }

        bool operator==(const EliteArchive& o) const
        {
            if (!(_spec == o._spec) || _occupied != o._occupied)
                return false;
            for (std::size_t flat : _occupied)
                if (!(*_cells[flat] == *o._cells[flat]))
                    return false;
            return true;
        }

    private:
        GridSpec _spec;
        std::vector<std::optional<Elite>> _cells;
        std::vector<std::size_t> _occupied;
        std::size_t _invalid = 0;
    };

    // Serialization -------------------------------------------------------------

    inline nlohmann::json vector_to_json(const Vector& v) { return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size())); }

    inline Vector vector_from_json(const nlohmann::json& j)
    {
        const auto values = j.get<std::vector<double>>();
        return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    }

    inline nlohmann::json grid_to_json(const GridSpec& spec)
    {
        return {{"low", vector_to_json(spec.bounds.low)}, {"high", vector_to_json(spec.bounds.high)}, {"cells_per_dim", spec.cells_per_dim}};
    }

    inline GridSpec grid_from_json(const nlohmann::json& j)
    {
        return GridSpec(BoundedBox(vector_from_json(j.at("low")), vector_from_json(j.at("high"))), j.at("cells_per_dim").get<std::vector<int>>());
    }

    /// One record per occupied cell (first-fill order); doubles are written with
    /// shortest round-trip precision so load(save(a)) == a bitwise.
    inline nlohmann::json archive_to_json(const EliteArchive& archive, const nlohmann::json& metadata = nlohmann::json::object())
    {
        nlohmann::json elites = nlohmann::json::array();
        for (std::size_t flat : archive.occupied()) {
            const Elite& e = *archive.at(flat);
            elites.push_back({
                {"cell", unflatten_index(archive.spec(), flat)},
                {"fitness", e.eval.fitness},
                {"feature", vector_to_json(e.eval.feature)},
                {"genome", vector_to_json(e.genome)},
            });
        }
        return {
            {"format", "memes-archive"},
            {"version", 1},
            {"grid", grid_to_json(archive.spec())},
            {"metadata", metadata},
            {"elites", std::move(elites)},
        };
    }

    inline EliteArchive archive_from_json(const nlohmann::json& j)
    {
        if (j.value("format", std::string{}) != "memes-archive")
            throw std::runtime_error("archive snapshot: missing or wrong 'format' field");
        EliteArchive archive(grid_from_json(j.at("grid")));
        for (const auto& rec : j.at("elites")) {
            Elite e{vector_from_json(rec.at("genome")), Evaluation{rec.at("fitness").get<double>(), vector_from_json(rec.at("feature"))}};
            const auto expected = rec.at("cell").get<CellIndex>();
            const auto idx = cell_index(archive.spec(), e.eval.feature);
            if (!idx || *idx != expected)
                throw std::runtime_error("archive snapshot: record feature does not map to its recorded cell");
            if (archive.offer(e.genome, e.eval) != AddOutcome::added_new)
                throw std::runtime_error("archive snapshot: duplicate or invalid cell record");
        }
        return archive;
    }

} // namespace memes

#endif
