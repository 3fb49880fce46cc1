#ifndef MEMES_METRICS_HPP
#define MEMES_METRICS_HPP

#include <memes/archive.hpp>
#include <memes/parallel.hpp>
#include <memes/report.hpp>
#include <memes/tasks.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <vector>

namespace memes {

    struct ArchiveMetrics {
        double qd_score = 0.0;
        double coverage = 0.0;
        double max_fitness = -std::numeric_limits<double>::infinity();
        std::size_t occupied_cells = 0;

        bool operator==(const ArchiveMetrics&) const = default;
    };

    /// QD-score sums fitness + offset over occupants (the offset makes contributions >= 0).
    inline ArchiveMetrics archive_metrics(const EliteArchive& archive, double fitness_offset = 0.0)
    {
        ArchiveMetrics m;
        for (std::size_t flat : archive.occupied()) {
            const double f = archive.at(flat)->eval.fitness;
            m.qd_score += f + fitness_offset;
            m.max_fitness = std::max(m.max_fitness, f);
        }
        m.occupied_cells = archive.size();
        m.coverage = static_cast<double>(archive.size()) / static_cast<double>(archive.spec().total_cells());
        return m;
    }

    inline double loss_percent(double original, double corrected)
    {
        return original > 0.0 ? 100.0 * (original - corrected) / original : 0.0;
    }

    struct CorrectionReport {
        ArchiveMetrics original;
        ArchiveMetrics corrected;
        double qd_score_loss_pct = 0.0;
        double coverage_loss_pct = 0.0;
        double max_fitness_loss_pct = 0.0;
        int reevaluations = 0;
        // Mean over occupants of the per-elite re-evaluation spreads.
        double mean_fitness_std = 0.0;
        double mean_feature_std = 0.0;
        // Mean over occupants of |estimate - stored value|; nonzero on noisy tasks even for m = 1.
        double mean_fitness_shift = 0.0;
        double mean_feature_shift = 0.0;
    };

    struct CorrectionResult {
        EliteArchive archive;
        CorrectionReport report;
    };

    /// Re-evaluates every elite m times and re-inserts the mean estimates into an empty
    /// archive with the same grid. Elite k's draws come from the stream keyed by its cell.
    inline CorrectionResult corrected_archive(const EliteArchive& archive, const Task& task, int m, std::uint64_t seed)
    {
        require(m >= 1, "corrected_archive: m must be >= 1");
        const auto occupied = archive.occupied();
        std::vector<Reevaluation> estimates(occupied.size());
        parallel_for(occupied.size(), [&](std::size_t k) {
            const std::uint64_t key = stream_key(seed, StreamPurpose::correction, {occupied[k]});
            estimates[k] = reevaluate(task, archive.at(occupied[k])->genome, m, key);
        });

        CorrectionResult out{EliteArchive(archive.spec()), {}};
        double f_std = 0.0, d_std = 0.0, f_shift = 0.0, d_shift = 0.0;
        for (std::size_t k = 0; k < occupied.size(); ++k) {
            const Elite& stored = *archive.at(occupied[k]);
            out.archive.try_add(stored.genome, estimates[k].mean);
            f_shift += std::abs(estimates[k].mean.fitness - stored.eval.fitness);
            d_shift += (estimates[k].mean.feature - stored.eval.feature).norm();
            f_std += estimates[k].fitness_std;
            d_std += estimates[k].feature_std.size() > 0 ? estimates[k].feature_std.mean() : 0.0;
        }

        const double offset = task.spec().fitness_offset;
        auto& r = out.report;
        r.original = archive_metrics(archive, offset);
        r.corrected = archive_metrics(out.archive, offset);
        r.qd_score_loss_pct = loss_percent(r.original.qd_score, r.corrected.qd_score);
        r.coverage_loss_pct = loss_percent(r.original.coverage, r.corrected.coverage);
        r.max_fitness_loss_pct = loss_percent(r.original.max_fitness, r.corrected.max_fitness);
        r.reevaluations = m;
        if (!occupied.empty()) {
            r.mean_fitness_std = f_std / static_cast<double>(occupied.size());
            r.mean_feature_std = d_std / static_cast<double>(occupied.size());
            r.mean_fitness_shift = f_shift / static_cast<double>(occupied.size());
            r.mean_feature_shift = d_shift / static_cast<double>(occupied.size());
        }
        return out;
    }

    // Distribution summaries -----------------------------------------------------

    /// Linear-interpolation quantile of an unsorted sample (q in [0,1]).
    inline double quantile(std::vector<double> values, double q)
    {
        if (values.empty())
            return std::numeric_limits<double>::quiet_NaN();
        std::sort(values.begin(), values.end());
        const double pos = q * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, values.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return values[lo] + frac * (values[hi] - values[lo]);
    }

    struct QuartileSummary {
        double q1 = std::numeric_limits<double>::quiet_NaN();
        double median = std::numeric_limits<double>::quiet_NaN();
        double q3 = std::numeric_limits<double>::quiet_NaN();
        std::size_t count = 0;
    };

    inline QuartileSummary summarize(const std::vector<double>& values)
    {
        QuartileSummary s;
        s.count = values.size();
        if (values.empty())
            return s;
        s.q1 = quantile(values, 0.25);
        s.median = quantile(values, 0.5);
        s.q3 = quantile(values, 0.75);
        return s;
    }

    /// Parent-to-offspring feature distances of one generation, in mean-cell-width units.
    inline std::vector<double> parent_offspring_distances(const GenerationReport& report, OffspringSource source, const GridSpec& grid)
    {
        std::vector<double> out;
        const double unit = grid.mean_cell_width();
        for (const auto& rec : report.offspring) {
            if (rec.source != source || !rec.valid || !rec.parent_feature)
                continue;
            out.push_back((rec.offspring_feature - *rec.parent_feature).norm() / unit);
        }
        return out;
    }

    struct DistanceRow {
        int generation = 0;
        QuartileSummary summary;
    };

    /// Per-generation median and quartiles; generations without matching offspring are skipped.
    inline std::vector<DistanceRow> parent_offspring_distance(std::span<const GenerationReport> reports, const GridSpec& grid,
        OffspringSource source = OffspringSource::exploit)
    {
        std::vector<DistanceRow> rows;
        for (const auto& rep : reports) {
            auto d = parent_offspring_distances(rep, source, grid);
            if (d.empty())
                continue;
            rows.push_back({rep.generation, summarize(d)});
        }
        return rows;
    }

    // Lifespans ------------------------------------------------------------------

    struct LifespanSummary {
        double exploit = std::numeric_limits<double>::quiet_NaN();
        double explore = std::numeric_limits<double>::quiet_NaN();
        std::size_t exploit_episodes = 0;
        std::size_t explore_episodes = 0;
    };

    /// Tracks reset-to-reset episode lengths per emitter mode. Episodes still running are
    /// counted at their current length when summarized.
    class LifespanTracker {
    public:
        void observe(const GenerationReport& report)
        {
            for (const auto& rec : report.offspring) {
                if (rec.lifespan < 0 || rec.source == OffspringSource::variation)
                    continue;
                if (rec.reset && rec.completed_lifespan >= 0)
                    _completed.push_back({rec.completed_source, rec.completed_lifespan});
                _current[rec.slot] = {rec.source, rec.lifespan};
            }
        }

        LifespanSummary summary() const
        {
            double sums[2] = {0.0, 0.0};
            std::size_t counts[2] = {0, 0};
            auto add = [&](const Episode& e) {
                const int m = e.source == OffspringSource::exploit ? 0 : 1;
                sums[m] += e.length;
                ++counts[m];
            };
            for (const auto& e : _completed)
                add(e);
            for (const auto& [slot, e] : _current)
                add(e);
            LifespanSummary s;
            s.exploit_episodes = counts[0];
            s.explore_episodes = counts[1];
            if (counts[0] > 0)
                s.exploit = sums[0] / static_cast<double>(counts[0]);
            if (counts[1] > 0)
                s.explore = sums[1] / static_cast<double>(counts[1]);
            return s;
        }

    private:
        struct Episode {
            OffspringSource source;
            int length;
        };
        std::vector<Episode> _completed;
        std::map<int, Episode> _current;
    };

    inline LifespanSummary emitter_lifespans(std::span<const GenerationReport> reports)
    {
        LifespanTracker t;
        for (const auto& r : reports)
            t.observe(r);
        return t.summary();
    }

    // Metrics log ----------------------------------------------------------------

    struct MetricsRow {
        int generation = 0;
        std::int64_t evaluations = 0;
        ArchiveMetrics archive;
        std::size_t invalid = 0;
        std::size_t added_exploit = 0;
        std::size_t added_explore = 0;
        std::size_t added_variation = 0;
        std::size_t added_samples = 0;
        LifespanSummary lifespans;
        QuartileSummary po_exploit;
        QuartileSummary po_variation;
    };

    using MetricsLog = std::vector<MetricsRow>;

    /// Folds generation reports into metric rows at generation 0, every `cadence`
    /// generations, and at the final generation.
    class MetricsRecorder {
    public:
        MetricsRecorder(double fitness_offset, int cadence, int n_generations)
            : _offset(fitness_offset), _cadence(std::max(1, cadence)), _last(n_generations)
        {
        }

        void on_seeded(const EliteArchive& archive, std::int64_t evaluations)
        {
            _evaluations = evaluations;
            emit(0, archive);
        }

        void on_generation(const GenerationReport& report, const EliteArchive& archive)
        {
            _evaluations = report.evaluations_total;
            _lifespans.observe(report);
            for (const auto& rec : report.offspring) {
                if (rec.added) {
                    switch (rec.source) {
                    case OffspringSource::exploit: ++_added[0]; break;
                    case OffspringSource::explore: ++_added[1]; break;
                    case OffspringSource::variation: ++_added[2]; break;
                    }
                }
            }
            _added_samples += report.samples_added;
            auto de = parent_offspring_distances(report, OffspringSource::exploit, archive.spec());
            auto dv = parent_offspring_distances(report, OffspringSource::variation, archive.spec());
            _po_exploit.insert(_po_exploit.end(), de.begin(), de.end());
            _po_variation.insert(_po_variation.end(), dv.begin(), dv.end());

            if (report.generation % _cadence == 0 || report.generation == _last)
                emit(report.generation, archive);
        }

        /// Called with every row as it is produced.
        void set_row_sink(std::function<void(const MetricsRow&)> sink) { _sink = std::move(sink); }

        const MetricsLog& log() const { return _log; }
        MetricsLog take() { return std::move(_log); }

    private:
        void emit(int generation, const EliteArchive& archive)
        {
            MetricsRow row;
            row.generation = generation;
            row.evaluations = _evaluations;
            row.archive = archive_metrics(archive, _offset);
            row.invalid = archive.invalid_count();
            row.added_exploit = _added[0];
            row.added_explore = _added[1];
            row.added_variation = _added[2];
            row.added_samples = _added_samples;
            row.lifespans = _lifespans.summary();
            row.po_exploit = summarize(_po_exploit);
            row.po_variation = summarize(_po_variation);
            if (_sink)
                _sink(row);
            _log.push_back(std::move(row));
            _added[0] = _added[1] = _added[2] = 0;
            _added_samples = 0;
            _po_exploit.clear();
            _po_variation.clear();
        }

        double _offset;
        int _cadence;
        int _last;
        std::int64_t _evaluations = 0;
        std::size_t _added[3] = {0, 0, 0};
        std::size_t _added_samples = 0;
        LifespanTracker _lifespans;
        std::vector<double> _po_exploit, _po_variation;
        MetricsLog _log;
        std::function<void(const MetricsRow&)> _sink;
    };

} // namespace memes

#endif
