#ifndef MEMES_RUN_HPP
#define MEMES_RUN_HPP

#include <memes/archive.hpp>
#include <memes/metrics.hpp>
#include <memes/novelty.hpp>
#include <memes/parallel.hpp>
#include <memes/report.hpp>
#include <memes/tasks.hpp>

#include <cstdint>
#include <functional>
#include <vector>

namespace memes {

    struct RunOptions {
        std::uint64_t seed = 0;
        int metric_cadence = 10;
        // Called after every generation with the post-barrier archive.
        std::function<void(const GenerationReport&, const EliteArchive&)> on_generation;
        // Receives each metrics row as soon as it is recorded.
        std::function<void(const MetricsRow&)> on_row;
    };

    struct RunResult {
        EliteArchive archive;
        MetricsLog log;
        std::int64_t evaluations = 0;
        int generations = 0;
    };

    inline MetricsRecorder make_recorder(const Task& task, const RunOptions& opts, int n_generations)
    {
        MetricsRecorder rec(task.spec().fitness_offset, opts.metric_cadence, n_generations);
        rec.set_row_sink(opts.on_row);
        return rec;
    }

    struct SeedBatch {
        std::vector<Genome> genomes;
        std::vector<Evaluation> evals;
    };

    /// count genomes uniform over the task's genome domain, evaluated and offered to the
    /// archive in index order. Genome i always comes from the stream (seed, i).
    inline SeedBatch seed_archive(const Task& task, EliteArchive& archive, std::size_t count, std::uint64_t seed)
    {
        SeedBatch s;
        s.genomes.resize(count);
        s.evals.resize(count);
        parallel_for(count, [&](std::size_t i) {
            StreamRng g = make_stream(seed, StreamPurpose::seeding, {i});
            s.genomes[i] = task.random_genome(g);
            StreamRng e = make_stream(seed, StreamPurpose::seed_evaluation, {i});
            s.evals[i] = task.evaluate(s.genomes[i], e);
        });
        for (std::size_t i = 0; i < count; ++i)
            archive.try_add(s.genomes[i], s.evals[i]);
        return s;
    }

    /// Stream for the task-noise draw of one evaluation within a generation.
    inline StreamRng evaluation_stream(std::uint64_t seed, int generation, std::size_t slot, std::size_t sample)
    {
        return make_stream(seed, StreamPurpose::task_noise, {static_cast<std::uint64_t>(generation), slot, sample});
    }

    inline void insert_if_valid(NoveltyArchive& store, const Evaluation& e)
    {
        if (e.valid())
            store.insert(e.feature);
    }

    inline bool uses_novelty_store(NoveltyBackend b) { return b == NoveltyBackend::fifo || b == NoveltyBackend::all; }

    /// NaN for invalid evaluations so rank shaping floors them.
    inline double fitness_score(const Evaluation& e) { return e.valid() ? e.fitness : std::numeric_limits<double>::quiet_NaN(); }

} // namespace memes

#endif
