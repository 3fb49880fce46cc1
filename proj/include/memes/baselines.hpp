#ifndef MEMES_BASELINES_HPP
#define MEMES_BASELINES_HPP

#include <memes/archive.hpp>
#include <memes/emitters.hpp>
#include <memes/es.hpp>
#include <memes/metrics.hpp>
#include <memes/novelty.hpp>
#include <memes/run.hpp>
#include <memes/tasks.hpp>
#include <memes/variation.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace memes {

    // MAP-Elites with iso+line variation, optionally averaging n re-evaluations --------

    /// Per generation: batch_size parent pairs drawn uniformly, one iso+line child each,
    /// every child evaluated n_reevals times and offered with its mean fitness and feature.
    inline RunResult run_me_sampling(const Task& task, const GridSpec& grid, const IsoLineConfig& cfg, int n_reevals, int n_generations,
        const RunOptions& opts = {})
    {
        cfg.validate();
        require(n_reevals >= 1, "run_me_sampling: n_reevals must be >= 1");
        require(n_generations >= 0, "run_me_sampling: n_generations must be >= 0");
        const auto batch = static_cast<std::size_t>(cfg.batch_size);
        const auto& domain = task.spec().genome_domain;

        EliteArchive archive(grid);
        seed_archive(task, archive, batch, opts.seed);
        std::int64_t evaluations = static_cast<std::int64_t>(batch);

        MetricsRecorder rec = make_recorder(task, opts, n_generations);
        rec.on_seeded(archive, evaluations);

        std::vector<Genome> children(batch);
        std::vector<Evaluation> child_eval(batch);
        std::vector<Vector> parent_feature(batch);
        for (int g = 0; g < n_generations; ++g) {
            parallel_for(batch, [&](std::size_t b) {
                StreamRng rng = make_stream(opts.seed, StreamPurpose::variation, {static_cast<std::uint64_t>(g), b});
                const Elite& p1 = archive.uniform_pick(rng);
                const Elite& p2 = archive.uniform_pick(rng);
                children[b] = iso_line_variation(p1.genome, p2.genome, cfg, rng, &domain);
                parent_feature[b] = p1.eval.feature;
                EvaluationAccumulator acc;
                for (int r = 0; r < n_reevals; ++r) {
                    StreamRng noise = evaluation_stream(opts.seed, g, b, static_cast<std::size_t>(r));
                    acc.add(task.evaluate(children[b], noise));
                }
                child_eval[b] = acc.mean();
            });

            GenerationReport report;
            report.generation = g + 1;
            report.offspring.resize(batch);
            for (std::size_t b = 0; b < batch; ++b) {
                auto& r = report.offspring[b];
                r.slot = static_cast<int>(b);
                r.source = OffspringSource::variation;
                r.valid = child_eval[b].valid();
                r.added = archive.try_add(children[b], child_eval[b]);
                r.parent_feature = parent_feature[b];
                r.offspring_feature = child_eval[b].feature;
                r.fitness = child_eval[b].fitness;
            }
            report.evaluations = static_cast<std::int64_t>(batch) * n_reevals;
            evaluations += report.evaluations;
            report.evaluations_total = evaluations;
            rec.on_generation(report, archive);
            if (opts.on_generation)
                opts.on_generation(report, archive);
        }
        return {std::move(archive), rec.take(), evaluations, n_generations};
    }

    inline RunResult run_me(const Task& task, const GridSpec& grid, const IsoLineConfig& cfg, int n_generations, const RunOptions& opts = {})
    {
        return run_me_sampling(task, grid, cfg, 1, n_generations, opts);
    }

    // ME-ES --------------------------------------------------------------------

    struct MeEsConfig {
        int mode_length = 10;
        ESConfig es{10000, 0.02, 0.01, 0.01};
        NoveltyConfig novelty;
        // Biased selection draws uniformly from this top fraction of elites.
        double selection_quantile = 0.1;
        int seed_count = 1;

        void validate() const
        {
            require(mode_length >= 1, "MeEsConfig: mode_length must be >= 1");
            require(selection_quantile > 0.0 && selection_quantile <= 1.0, "MeEsConfig: selection_quantile must lie in (0, 1]");
            require(seed_count >= 1, "MeEsConfig: seed_count must be >= 1");
            require(novelty.backend != NoveltyBackend::none, "MeEsConfig: explore mode needs a novelty backend");
            es.validate();
            novelty.validate();
        }
    };

    /// Uniform draw from the top `quantile` of occupants by score (ties keep first-fill order).
    inline const Elite& biased_select(const EliteArchive& archive, std::span<const double> scores, double quantile, StreamRng& rng)
    {
        if (archive.empty())
            throw EmptyArchiveError();
        std::vector<std::size_t> order(archive.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
        const auto top = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(order.size()))));
        return archive.occupant(order[rng.index(top)]);
    }

    /// Single ES thread alternating modes every mode_length generations. Generation n
    /// (1-based) switches to explore when n % 2G == 0 and to exploit when (n - G) % 2G == 0;
    /// the run starts in explore mode from a biased explore pick.
    inline RunResult run_me_es(const Task& task, const GridSpec& grid, const MeEsConfig& cfg, int n_generations, const RunOptions& opts = {})
    {
        cfg.validate();
        require(n_generations >= 0, "run_me_es: n_generations must be >= 0");
        const int G = cfg.mode_length;
        const auto n_samples = static_cast<std::size_t>(cfg.es.sample_count);

        EliteArchive archive(grid);
        NoveltyArchive novelty = NoveltyArchive::for_config(cfg.novelty);
        const auto seeds = seed_archive(task, archive, static_cast<std::size_t>(cfg.seed_count), opts.seed);
        if (uses_novelty_store(cfg.novelty.backend))
            for (const auto& ev : seeds.evals)
                insert_if_valid(novelty, ev);
        std::int64_t evaluations = cfg.seed_count;

        MetricsRecorder rec = make_recorder(task, opts, n_generations);
        rec.on_seeded(archive, evaluations);

        const NoveltySource source{&novelty, &archive, cfg.novelty.backend, cfg.novelty.k_nearest};
        EmitterMode mode = EmitterMode::explore;
        Genome mean;
        std::optional<Vector> mean_feature;
        OptimizerState opt;
        int lifespan = 0;

        auto select = [&](EmitterMode m, std::uint64_t n_gen) {
            std::vector<double> scores(archive.size());
            parallel_for(archive.size(), [&](std::size_t k) {
                const auto& e = archive.occupant(k);
                scores[k] = m == EmitterMode::exploit ? e.eval.fitness : source.score(e.eval.feature);
            });
            StreamRng rng = make_stream(opts.seed, StreamPurpose::biased_selection, {n_gen});
            const Elite& pick = biased_select(archive, scores, cfg.selection_quantile, rng);
            mode = m;
            mean = pick.genome;
            mean_feature = pick.eval.feature;
            opt = OptimizerState::zeros(mean.size());
        };
        select(EmitterMode::explore, 0);

        for (int g = 0; g < n_generations; ++g) {
            const int n_gen = g + 1;
            GenerationReport report;
            report.generation = n_gen;
            report.offspring.resize(1);
            auto& r = report.offspring[0];

            const bool to_explore = n_gen % (2 * G) == 0;
            const bool to_exploit = n_gen >= G && (n_gen - G) % (2 * G) == 0;
            if (to_explore || to_exploit) {
                r.reset = true;
                r.completed_lifespan = lifespan;
                r.completed_source = mode == EmitterMode::exploit ? OffspringSource::exploit : OffspringSource::explore;
                select(to_explore ? EmitterMode::explore : EmitterMode::exploit, static_cast<std::uint64_t>(n_gen));
                lifespan = 0;
            }

            StreamRng noise = make_stream(opts.seed, StreamPurpose::es_noise, {static_cast<std::uint64_t>(g), 0});
            SampleBatch batch = sample_batch(mean, cfg.es, noise);
            std::vector<Evaluation> evals(n_samples);
            parallel_for(n_samples, [&](std::size_t i) {
                StreamRng rng = evaluation_stream(opts.seed, g, 0, i);
                evals[i] = task.evaluate(batch.genome(i), rng);
                batch.raw_scores[i] = (mode == EmitterMode::exploit || !evals[i].valid()) ? fitness_score(evals[i]) : source.score(evals[i].feature);
            });
            ShapedScores shaped = rank_shape(batch.raw_scores);
            EsStepResult step = es_finish(std::move(batch), std::move(shaped), opt, cfg.es);

            StreamRng off_rng = evaluation_stream(opts.seed, g, 0, n_samples);
            const Evaluation off = task.evaluate(step.mean, off_rng);
            r.slot = 0;
            r.source = mode == EmitterMode::exploit ? OffspringSource::exploit : OffspringSource::explore;
            r.valid = off.valid();
            r.added = archive.try_add(step.mean, off);
            r.parent_feature = mean_feature;
            r.offspring_feature = off.feature;
            r.fitness = off.fitness;
            r.genome = step.mean;

            if (uses_novelty_store(cfg.novelty.backend)) {
                insert_if_valid(novelty, off);
                if (cfg.novelty.insert_samples)
                    for (const auto& ev : evals)
                        insert_if_valid(novelty, ev);
            }

            mean = std::move(step.mean);
            opt = std::move(step.optimizer);
            mean_feature = r.valid ? std::optional<Vector>(off.feature) : std::nullopt;
            r.lifespan = ++lifespan;

            report.evaluations = static_cast<std::int64_t>(n_samples) + 1;
            evaluations += report.evaluations;
            report.evaluations_total = evaluations;
            rec.on_generation(report, archive);
            if (opts.on_generation)
                opts.on_generation(report, archive);
        }
        return {std::move(archive), rec.take(), evaluations, n_generations};
    }

    // ES / NS-ES / NSR-ES / NSRA-ES ----------------------------------------------

    enum class EsVariant { es, ns_es, nsr_es, nsra_es };

    inline std::string to_string(EsVariant v)
    {
        switch (v) {
        case EsVariant::es: return "es";
        case EsVariant::ns_es: return "ns_es";
        case EsVariant::nsr_es: return "nsr_es";
        case EsVariant::nsra_es: return "nsra_es";
        }
        return "?";
    }

    struct EsFamilyConfig {
        EsVariant variant = EsVariant::es;
        ESConfig es;
        NoveltyConfig novelty;
        int meta_population = 1;
        double fitness_weight = 1.0;
        double adapt_amount = 0.05;
        int adapt_period = 50;
        // Mix raw fitness and novelty before shaping instead of mixing shaped ranks.
        bool raw_mixing = false;

        static EsFamilyConfig defaults(EsVariant v)
        {
            EsFamilyConfig c;
            c.variant = v;
            switch (v) {
            case EsVariant::es: c.meta_population = 1; c.fitness_weight = 1.0; break;
            case EsVariant::ns_es: c.meta_population = 5; c.fitness_weight = 0.0; break;
            case EsVariant::nsr_es: c.meta_population = 5; c.fitness_weight = 0.5; break;
            case EsVariant::nsra_es: c.meta_population = 5; c.fitness_weight = 1.0; break;
            }
            return c;
        }

        bool needs_novelty() const { return variant != EsVariant::es; }

        void validate() const
        {
            es.validate();
            require(meta_population >= 1, "EsFamilyConfig: meta_population must be >= 1");
            require(fitness_weight >= 0.0 && fitness_weight <= 1.0, "EsFamilyConfig: fitness_weight must lie in [0, 1]");
            require(adapt_amount > 0.0 && adapt_period >= 1, "EsFamilyConfig: adapt_amount must be > 0 and adapt_period >= 1");
            if (needs_novelty()) {
                novelty.validate();
                require(novelty.backend != NoveltyBackend::none, "EsFamilyConfig: novelty variants need a novelty backend");
            }
        }
    };

    struct EsFamilyResult : RunResult {
        std::vector<double> weight_trace; // fitness weight after each generation
    };

    /// ES-based baselines with a passive archive: each generation one member of the
    /// meta-population (round-robin) takes an ES step and its updated mean is offered to
    /// the archive, which the algorithm never reads.
    inline EsFamilyResult run_es_family(const Task& task, const GridSpec& grid, const EsFamilyConfig& cfg, int n_generations,
        const RunOptions& opts = {})
    {
        cfg.validate();
        require(n_generations >= 0, "run_es_family: n_generations must be >= 0");
        const auto n_samples = static_cast<std::size_t>(cfg.es.sample_count);
        const auto pop = static_cast<std::size_t>(cfg.meta_population);
        const bool novelty_on = cfg.needs_novelty();

        EliteArchive archive(grid);
        NoveltyArchive novelty = NoveltyArchive::for_config(cfg.novelty);
        const auto seeds = seed_archive(task, archive, pop, opts.seed);
        if (novelty_on && uses_novelty_store(cfg.novelty.backend))
            for (const auto& ev : seeds.evals)
                insert_if_valid(novelty, ev);
        std::int64_t evaluations = static_cast<std::int64_t>(pop);

        struct Member {
            Genome mean;
            OptimizerState opt;
            std::optional<Vector> feature;
            int lifespan = 0;
        };
        std::vector<Member> members(pop);
        double best_fitness = -std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < pop; ++m) {
            members[m].mean = seeds.genomes[m];
            members[m].opt = OptimizerState::zeros(members[m].mean.size());
            if (seeds.evals[m].valid()) {
                members[m].feature = seeds.evals[m].feature;
                best_fitness = std::max(best_fitness, seeds.evals[m].fitness);
            }
        }

        MetricsRecorder rec = make_recorder(task, opts, n_generations);
        rec.on_seeded(archive, evaluations);

        EsFamilyResult out;
        double weight = cfg.variant == EsVariant::ns_es ? 0.0 : cfg.fitness_weight;
        int since_improvement = 0;
        const NoveltySource source{&novelty, &archive, cfg.novelty.backend, cfg.novelty.k_nearest};

        for (int g = 0; g < n_generations; ++g) {
            const std::size_t m = static_cast<std::size_t>(g) % pop;
            Member& mem = members[m];

            StreamRng noise = make_stream(opts.seed, StreamPurpose::es_noise, {static_cast<std::uint64_t>(g), m});
            SampleBatch batch = sample_batch(mem.mean, cfg.es, noise);
            std::vector<Evaluation> evals(n_samples);
            std::vector<double> fit(n_samples), nov(n_samples);
            parallel_for(n_samples, [&](std::size_t i) {
                StreamRng rng = evaluation_stream(opts.seed, g, m, i);
                evals[i] = task.evaluate(batch.genome(i), rng);
                fit[i] = fitness_score(evals[i]);
                if (novelty_on)
                    nov[i] = evals[i].valid() ? source.score(evals[i].feature) : std::numeric_limits<double>::quiet_NaN();
            });

            ShapedScores shaped;
            switch (cfg.variant) {
            case EsVariant::es:
                batch.raw_scores = fit;
                shaped = rank_shape(fit);
                break;
            case EsVariant::ns_es:
                batch.raw_scores = nov;
                shaped = rank_shape(nov);
                break;
            case EsVariant::nsr_es:
            case EsVariant::nsra_es:
                if (cfg.raw_mixing) {
                    for (std::size_t i = 0; i < n_samples; ++i)
                        batch.raw_scores[i] = weight * fit[i] + (1.0 - weight) * nov[i];
                    shaped = rank_shape(batch.raw_scores);
                }
                else {
                    const auto sf = rank_shape(fit);
                    const auto sn = rank_shape(nov);
                    shaped.values.resize(n_samples);
                    shaped.non_finite = sf.non_finite + sn.non_finite;
                    for (std::size_t i = 0; i < n_samples; ++i) {
                        shaped.values[i] = weight * sf.values[i] + (1.0 - weight) * sn.values[i];
                        batch.raw_scores[i] = shaped.values[i];
                    }
                }
                break;
            }

            EsStepResult step = es_finish(std::move(batch), std::move(shaped), mem.opt, cfg.es);
            StreamRng off_rng = evaluation_stream(opts.seed, g, m, n_samples);
            const Evaluation off = task.evaluate(step.mean, off_rng);

            GenerationReport report;
            report.generation = g + 1;
            report.offspring.resize(1);
            auto& r = report.offspring[0];
            r.slot = static_cast<int>(m);
            r.source = cfg.variant == EsVariant::ns_es ? OffspringSource::explore : OffspringSource::exploit;
            r.valid = off.valid();
            r.added = archive.try_add(step.mean, off);
            r.parent_feature = mem.feature;
            r.offspring_feature = off.feature;
            r.fitness = off.fitness;
            r.genome = step.mean;

            if (novelty_on && uses_novelty_store(cfg.novelty.backend)) {
                insert_if_valid(novelty, off);
                if (cfg.novelty.insert_samples)
                    for (const auto& ev : evals)
                        insert_if_valid(novelty, ev);
            }

            if (cfg.variant == EsVariant::nsra_es) {
                if (off.valid() && off.fitness > best_fitness) {
                    best_fitness = off.fitness;
                    weight = std::min(1.0, weight + cfg.adapt_amount);
                    since_improvement = 0;
                }
                else if (++since_improvement >= cfg.adapt_period) {
                    weight = std::max(0.0, weight - cfg.adapt_amount);
                    since_improvement = 0;
                }
            }
            out.weight_trace.push_back(weight);

            mem.mean = std::move(step.mean);
            mem.opt = std::move(step.optimizer);
            mem.feature = r.valid ? std::optional<Vector>(off.feature) : std::nullopt;
            r.lifespan = ++mem.lifespan;

            report.evaluations = static_cast<std::int64_t>(n_samples) + 1;
            evaluations += report.evaluations;
            report.evaluations_total = evaluations;
            rec.on_generation(report, archive);
            if (opts.on_generation)
                opts.on_generation(report, archive);
        }
        out.archive = std::move(archive);
        out.log = rec.take();
        out.evaluations = evaluations;
        out.generations = n_generations;
        return out;
    }

    // MEMES-Sequential -----------------------------------------------------------

    /// MEMES with adaptive resets off: every emitter resets and swaps mode every
    /// `cfg.reset.period` generations (10 unless configured), all sharing one mode.
    inline RunResult run_memes_sequential(const Task& task, const GridSpec& grid, MemesConfig cfg, int n_generations, const RunOptions& opts = {})
    {
        cfg.sequential = true;
        cfg.explore = ExploreKind::es;
        if (cfg.reset.kind != ResetKind::fixed) {
            cfg.reset.kind = ResetKind::fixed;
            cfg.reset.period = 10;
        }
        return run_memes(cfg, task, grid, n_generations, opts);
    }

} // namespace memes

#endif
