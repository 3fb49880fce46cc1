#ifndef MEMES_EMITTERS_HPP
#define MEMES_EMITTERS_HPP

#include <memes/archive.hpp>
#include <memes/es.hpp>
#include <memes/metrics.hpp>
#include <memes/novelty.hpp>
#include <memes/run.hpp>
#include <memes/tasks.hpp>
#include <memes/variation.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace memes {

    enum class EmitterMode { exploit, explore };

    inline std::string to_string(EmitterMode m) { return m == EmitterMode::exploit ? "exploit" : "explore"; }

    enum class ResetKind { adaptive, fixed, none };

    /// When an emitter restarts from a uniformly drawn elite.
    struct ResetPolicy {
        ResetKind kind = ResetKind::adaptive;
        // adaptive: reset once more than this many consecutive offspring were rejected.
        int stagnation_budget = 32;
        // fixed: reset after exactly this many generations.
        int period = 10;
    };

    /// How explore slots generate offspring: novelty-seeking ES, or plain iso+line variation.
    enum class ExploreKind { es, ga };

    struct MemesConfig {
        int n_emitters = 32;
        double p_exploit = 0.5;
        ResetPolicy reset;
        // Offer every ES sample to the archive too, not only the updated mean.
        bool add_all_samples = false;
        ESConfig es;
        NoveltyConfig novelty;
        ExploreKind explore = ExploreKind::es;
        IsoLineConfig ga;
        // All emitters share one mode and swap it on every (fixed-period) reset.
        bool sequential = false;

        /// round-half-up of n_emitters * p_exploit
        int exploit_count() const { return static_cast<int>(std::floor(n_emitters * p_exploit + 0.5)); }

        void validate() const
        {
            require(n_emitters >= 1, "MemesConfig: n_emitters must be >= 1");
            require(p_exploit >= 0.0 && p_exploit <= 1.0, "MemesConfig: p_exploit must lie in [0, 1]");
            es.validate();
            novelty.validate();
            if (reset.kind == ResetKind::adaptive)
                require(reset.stagnation_budget >= 1, "MemesConfig: stagnation_budget must be >= 1");
            if (reset.kind == ResetKind::fixed)
                require(reset.period >= 1, "MemesConfig: reset period must be >= 1");
            const bool has_explore_es = explore == ExploreKind::es && (sequential || exploit_count() < n_emitters);
            if (has_explore_es)
                require(novelty.backend != NoveltyBackend::none, "MemesConfig: explore ES emitters need a novelty backend");
            if (explore == ExploreKind::ga)
                ga.validate();
            if (sequential)
                require(reset.kind == ResetKind::fixed && explore == ExploreKind::es,
                    "MemesConfig: sequential mode needs a fixed reset period and ES explore emitters");
        }
    };

    struct EmitterState {
        EmitterMode mode = EmitterMode::exploit;
        Genome mean;
        OptimizerState optimizer;
        int stagnation = 0;
        bool require_reset = false;
        int lifespan = 0;
        // Feature of the last evaluation of `mean` (parent feature for the next offspring).
        std::optional<Vector> mean_feature;
    };

    /// Stagnation bookkeeping after an archive offer: an addition clears the counter, a
    /// rejection increments it, and under the adaptive policy a counter above the budget
    /// flags the emitter for reset at the start of the next generation.
    inline void record_offer(EmitterState& em, bool added, const ResetPolicy& policy)
    {
        em.stagnation = added ? 0 : em.stagnation + 1;
        if (policy.kind == ResetKind::adaptive && em.stagnation > policy.stagnation_budget)
            em.require_reset = true;
    }

    /// First exploit_count() slots exploit, the rest explore (all explore in sequential mode).
    /// Slot e starts from seed e modulo the number of seeds.
    inline std::vector<EmitterState> init_emitters(const MemesConfig& cfg, std::span<const Genome> seeds,
        std::span<const Evaluation> seed_evals = {})
    {
        if (seeds.empty())
            throw ContractViolation("init_emitters: at least one seed genome is required");
        const int n_exploit = cfg.exploit_count();
        std::vector<EmitterState> out(static_cast<std::size_t>(cfg.n_emitters));
        for (std::size_t e = 0; e < out.size(); ++e) {
            auto& em = out[e];
            em.mode = (!cfg.sequential && static_cast<int>(e) < n_exploit) ? EmitterMode::exploit : EmitterMode::explore;
            const std::size_t s = e % seeds.size();
            em.mean = seeds[s];
            em.optimizer = OptimizerState::zeros(em.mean.size());
            if (s < seed_evals.size() && seed_evals[s].valid())
                em.mean_feature = seed_evals[s].feature;
        }
        return out;
    }

    struct MemesState {
        std::vector<EmitterState> emitters;
        EliteArchive archive;
        NoveltyArchive novelty;
        int generation = 0;
        std::int64_t evaluations = 0;
    };

    namespace detail {
        inline bool runs_es(const MemesConfig& cfg, const EmitterState& em)
        {
            return em.mode == EmitterMode::exploit || cfg.explore == ExploreKind::es;
        }

        inline OffspringSource source_of(const MemesConfig& cfg, const EmitterState& em)
        {
            if (!runs_es(cfg, em))
                return OffspringSource::variation;
            return em.mode == EmitterMode::exploit ? OffspringSource::exploit : OffspringSource::explore;
        }
    } // namespace detail

    /// One MEMES generation.
    ///
    /// Emitters work in parallel against the archives as they stood at the start of the
    /// generation; every archive write happens afterwards, serially, in emitter order.
    /// Per emitter: optional reset from a uniform elite, one ES step (exploit scores =
    /// task fitness, explore scores = novelty), evaluation of the updated mean, an archive
    /// offer, and the stagnation update. Offspring features then enter the novelty store.
    inline GenerationReport generation_step(MemesState& st, const Task& task, const MemesConfig& cfg, std::uint64_t seed)
    {
        const int g = st.generation;
        const auto n_em = st.emitters.size();
        const auto n_samples = static_cast<std::size_t>(cfg.es.sample_count);
        const auto& domain = task.spec().genome_domain;

        GenerationReport report;
        report.generation = g + 1;
        report.offspring.resize(n_em);

        // (a) resets, against the start-of-generation archive
        for (std::size_t e = 0; e < n_em; ++e) {
            auto& em = st.emitters[e];
            auto& rec = report.offspring[e];
            rec.slot = static_cast<int>(e);
            if (!detail::runs_es(cfg, em))
                continue;
            const bool fixed_due = cfg.reset.kind == ResetKind::fixed && em.lifespan >= cfg.reset.period;
            if (!(em.require_reset || fixed_due))
                continue;
            StreamRng rng = make_stream(seed, StreamPurpose::reset_selection, {static_cast<std::uint64_t>(g), e});
            const Elite& pick = st.archive.uniform_pick(rng);
            rec.reset = true;
            rec.completed_lifespan = em.lifespan;
            rec.completed_source = detail::source_of(cfg, em);
            em.mean = pick.genome;
            em.mean_feature = pick.eval.feature;
            em.optimizer = OptimizerState::zeros(em.mean.size());
            em.stagnation = 0;
            em.require_reset = false;
            em.lifespan = 0;
            if (cfg.sequential)
                em.mode = em.mode == EmitterMode::exploit ? EmitterMode::explore : EmitterMode::exploit;
        }

        // (b) sample batches; GA slots draw their parents and child instead
        std::vector<SampleBatch> batches(n_em);
        std::vector<Genome> offspring(n_em);
        std::vector<std::optional<Vector>> ga_parent_feature(n_em);
        parallel_for(n_em, [&](std::size_t e) {
            const auto& em = st.emitters[e];
            if (detail::runs_es(cfg, em)) {
                StreamRng rng = make_stream(seed, StreamPurpose::es_noise, {static_cast<std::uint64_t>(g), e});
                batches[e] = sample_batch(em.mean, cfg.es, rng);
            }
            else {
                StreamRng rng = make_stream(seed, StreamPurpose::variation, {static_cast<std::uint64_t>(g), e});
                const Elite& p1 = st.archive.uniform_pick(rng);
                const Elite& p2 = st.archive.uniform_pick(rng);
                offspring[e] = iso_line_variation(p1.genome, p2.genome, cfg.ga, rng, &domain);
                ga_parent_feature[e] = p1.eval.feature;
            }
        });

        // (c) evaluate every sample of every ES emitter
        std::vector<std::vector<Evaluation>> evals(n_em);
        for (std::size_t e = 0; e < n_em; ++e)
            if (detail::runs_es(cfg, st.emitters[e]))
                evals[e].resize(n_samples);
        parallel_for(n_em * n_samples, [&](std::size_t flat) {
            const std::size_t e = flat / n_samples, i = flat % n_samples;
            if (evals[e].empty())
                return;
            StreamRng rng = evaluation_stream(seed, g, e, i);
            evals[e][i] = task.evaluate(batches[e].genome(i), rng);
        });

        // (d) objective scores
        const NoveltySource novelty{&st.novelty, &st.archive, cfg.novelty.backend, cfg.novelty.k_nearest};
        parallel_for(n_em * n_samples, [&](std::size_t flat) {
            const std::size_t e = flat / n_samples, i = flat % n_samples;
            if (evals[e].empty())
                return;
            const auto& ev = evals[e][i];
            if (st.emitters[e].mode == EmitterMode::exploit || !ev.valid())
                batches[e].raw_scores[i] = fitness_score(ev);
            else
                batches[e].raw_scores[i] = novelty.score(ev.feature);
        });

        // (e) shape, estimate, update
        std::vector<EsStepResult> steps(n_em);
        parallel_for(n_em, [&](std::size_t e) {
            if (evals[e].empty())
                return;
            ShapedScores shaped = rank_shape(batches[e].raw_scores);
            steps[e] = es_finish(std::move(batches[e]), std::move(shaped), st.emitters[e].optimizer, cfg.es);
            offspring[e] = steps[e].mean;
        });

        // (f) evaluate offspring
        std::vector<Evaluation> off_eval(n_em);
        parallel_for(n_em, [&](std::size_t e) {
            StreamRng rng = evaluation_stream(seed, g, e, evals[e].empty() ? 0 : n_samples);
            off_eval[e] = task.evaluate(offspring[e], rng);
        });

        // (g) barrier: archive writes in emitter order
        std::int64_t used = 0;
        for (std::size_t e = 0; e < n_em; ++e) {
            auto& em = st.emitters[e];
            auto& rec = report.offspring[e];
            const bool es_slot = !evals[e].empty();
            rec.source = detail::source_of(cfg, em);
            rec.valid = off_eval[e].valid();
            rec.offspring_feature = off_eval[e].feature;
            rec.fitness = off_eval[e].fitness;
            rec.added = st.archive.try_add(offspring[e], off_eval[e]);

            if (!es_slot) {
                rec.parent_feature = ga_parent_feature[e];
                used += 1;
                continue;
            }
            used += static_cast<std::int64_t>(n_samples) + 1;
            rec.parent_feature = em.mean_feature;
            rec.genome = offspring[e];

            if (cfg.add_all_samples) {
                const auto& batch = steps[e].batch;
                for (std::size_t i = 0; i < n_samples; ++i)
                    report.samples_added += st.archive.try_add(batch.genome(i), evals[e][i]) ? 1 : 0;
            }

            record_offer(em, rec.added, cfg.reset);
            if (!steps[e].ok)
                em.require_reset = true;
            em.mean = std::move(steps[e].mean);
            em.optimizer = std::move(steps[e].optimizer);
            em.mean_feature = rec.valid ? std::optional<Vector>(off_eval[e].feature) : std::nullopt;
            ++em.lifespan;
            rec.lifespan = em.lifespan;
            rec.stagnation = em.stagnation;
        }

        // (h) novelty store: offspring of all emitters, then optionally every sample
        if (uses_novelty_store(cfg.novelty.backend)) {
            for (std::size_t e = 0; e < n_em; ++e)
                insert_if_valid(st.novelty, off_eval[e]);
            if (cfg.novelty.insert_samples)
                for (std::size_t e = 0; e < n_em; ++e)
                    for (const auto& ev : evals[e])
                        insert_if_valid(st.novelty, ev);
        }

        st.evaluations += used;
        st.generation = g + 1;
        report.evaluations = used;
        report.evaluations_total = st.evaluations;
        return report;
    }

    /// Seeds the archive with n_emitters uniform genomes and builds the emitters.
    inline MemesState memes_initial_state(const MemesConfig& cfg, const Task& task, const GridSpec& grid, std::uint64_t seed)
    {
        cfg.validate();
        MemesState st;
        st.archive = EliteArchive(grid);
        st.novelty = NoveltyArchive::for_config(cfg.novelty);
        const auto seeds = seed_archive(task, st.archive, static_cast<std::size_t>(cfg.n_emitters), seed);
        if (uses_novelty_store(cfg.novelty.backend))
            for (const auto& ev : seeds.evals)
                insert_if_valid(st.novelty, ev);
        st.emitters = init_emitters(cfg, seeds.genomes, seeds.evals);
        st.evaluations = cfg.n_emitters;
        return st;
    }

    inline RunResult run_memes(const MemesConfig& cfg, const Task& task, const GridSpec& grid, int n_generations, const RunOptions& opts = {})
    {
        require(n_generations >= 0, "run_memes: n_generations must be >= 0");
        MemesState st = memes_initial_state(cfg, task, grid, opts.seed);
        MetricsRecorder rec = make_recorder(task, opts, n_generations);
        rec.on_seeded(st.archive, st.evaluations);
        for (int g = 0; g < n_generations; ++g) {
            const auto report = generation_step(st, task, cfg, opts.seed);
            rec.on_generation(report, st.archive);
            if (opts.on_generation)
                opts.on_generation(report, st.archive);
        }
        return {std::move(st.archive), rec.take(), st.evaluations, st.generation};
    }

} // namespace memes

#endif
