#ifndef MEMES_HARNESS_ALGORITHMS_HPP
#define MEMES_HARNESS_ALGORITHMS_HPP

#include <memes/baselines.hpp>
#include <memes/emitters.hpp>
#include <memes/harness/config.hpp>

#include <functional>
#include <string>
#include <vector>

namespace memes::harness {

    using Runner = std::function<RunResult(const Task&, const GridSpec&, int, const RunOptions&)>;

    struct AlgorithmInfo {
        std::string name;
        std::string description;
        std::function<Runner(const json& params)> build;
    };

    namespace detail {

        inline OptimizerKind parse_optimizer(ParamReader& r, OptimizerKind fallback)
        {
            const auto s = r.get<std::string>("optimizer", fallback == OptimizerKind::adam ? "adam" : "sgd");
            if (s == "adam")
                return OptimizerKind::adam;
            if (s == "sgd")
                return OptimizerKind::sgd;
            throw ConfigError(r.path("optimizer"), "expected \"adam\" or \"sgd\", got \"" + s + "\"");
        }

        inline void read_es(ParamReader& r, ESConfig& es)
        {
            es.sample_count = r.get("sample_count", es.sample_count);
            es.sigma = r.get("sigma", es.sigma);
            es.learning_rate = r.get("learning_rate", es.learning_rate);
            es.l2_coefficient = r.get("l2_coefficient", es.l2_coefficient);
            es.optimizer = parse_optimizer(r, es.optimizer);
        }

        /// Returns true when the backend string is "ga" (GA explore emitters, no novelty store).
        inline bool read_novelty(ParamReader& r, NoveltyConfig& nv, bool allow_ga)
        {
            nv.k_nearest = r.get("k_nearest", nv.k_nearest);
            nv.fifo_capacity = r.get("fifo_capacity", nv.fifo_capacity);
            nv.insert_samples = r.get("insert_samples", nv.insert_samples);
            const auto b = r.get<std::string>("novelty_backend", to_string(nv.backend));
            if (b == "fifo")
                nv.backend = NoveltyBackend::fifo;
            else if (b == "all")
                nv.backend = NoveltyBackend::all;
            else if (b == "elites")
                nv.backend = NoveltyBackend::elites;
            else if (b == "none")
                nv.backend = NoveltyBackend::none;
            else if (b == "ga" && allow_ga) {
                nv.backend = NoveltyBackend::none;
                return true;
            }
            else
                throw ConfigError(r.path("novelty_backend"), "unknown backend \"" + b + "\"");
            return false;
        }

        inline void read_iso_line(ParamReader& r, IsoLineConfig& c)
        {
            c.iso_sigma = r.get("iso_sigma", c.iso_sigma);
            c.line_sigma = r.get("line_sigma", c.line_sigma);
            c.batch_size = r.get("batch_size", c.batch_size);
        }

        /// "reset": "adaptive" | "none" | positive integer (fixed period).
        inline void read_reset(ParamReader& r, ResetPolicy& p)
        {
            p.stagnation_budget = r.get("stagnation_budget", p.stagnation_budget);
            if (!r.has("reset"))
                return;
            const json& v = r.raw("reset");
            if (v.is_string() && v.get<std::string>() == "adaptive")
                p.kind = ResetKind::adaptive;
            else if (v.is_string() && v.get<std::string>() == "none")
                p.kind = ResetKind::none;
            else if (v.is_number_integer()) {
                p.kind = ResetKind::fixed;
                p.period = v.get<int>();
            }
            else
                throw ConfigError(r.path("reset"), "expected \"adaptive\", \"none\" or an integer period");
        }

        template <class F>
        auto validated(const std::string& where, F&& f)
        {
            try {
                return f();
            }
            catch (const ContractViolation& e) {
                throw ConfigError(where, e.what());
            }
        }

        inline MemesConfig read_memes(const json& params, bool all_samples, bool sequential)
        {
            ParamReader r(params, "algorithm.params");
            MemesConfig c;
            c.add_all_samples = all_samples;
            c.sequential = sequential;
            if (sequential)
                c.reset = {ResetKind::fixed, c.reset.stagnation_budget, 10};
            c.n_emitters = r.get("n_emitters", c.n_emitters);
            c.p_exploit = r.get("p_exploit", c.p_exploit);
            read_reset(r, c.reset);
            c.add_all_samples = r.get("add_all_samples", c.add_all_samples);
            read_es(r, c.es);
            if (read_novelty(r, c.novelty, !sequential))
                c.explore = ExploreKind::ga;
            c.ga.iso_sigma = r.get("iso_sigma", c.ga.iso_sigma);
            c.ga.line_sigma = r.get("line_sigma", c.ga.line_sigma);
            r.finish();
            validated("algorithm.params", [&] {
                c.validate();
                return 0;
            });
            return c;
        }

        inline Runner memes_runner(const json& params, bool all_samples, bool sequential)
        {
            const MemesConfig c = read_memes(params, all_samples, sequential);
            return [c](const Task& t, const GridSpec& g, int n, const RunOptions& o) { return run_memes(c, t, g, n, o); };
        }

        inline Runner es_family_runner(const json& params, EsVariant v)
        {
            ParamReader r(params, "algorithm.params");
            EsFamilyConfig c = EsFamilyConfig::defaults(v);
            read_es(r, c.es);
            read_novelty(r, c.novelty, false);
            c.meta_population = r.get("meta_population", c.meta_population);
            if (v == EsVariant::nsr_es || v == EsVariant::nsra_es)
                c.fitness_weight = r.get("fitness_weight", c.fitness_weight);
            if (v == EsVariant::nsra_es) {
                c.adapt_amount = r.get("adapt_amount", c.adapt_amount);
                c.adapt_period = r.get("adapt_period", c.adapt_period);
            }
            if (v == EsVariant::nsr_es || v == EsVariant::nsra_es)
                c.raw_mixing = r.get("raw_mixing", c.raw_mixing);
            r.finish();
            validated("algorithm.params", [&] {
                c.validate();
                return 0;
            });
            return [c](const Task& t, const GridSpec& g, int n, const RunOptions& o) -> RunResult { return run_es_family(t, g, c, n, o); };
        }

    } // namespace detail

    inline const std::vector<AlgorithmInfo>& algorithms()
    {
        static const std::vector<AlgorithmInfo> registry = {
            {"memes", "parallel explore/exploit ES emitters with adaptive resets",
                [](const json& p) { return detail::memes_runner(p, false, false); }},
            {"memes_all", "MEMES that also offers every ES sample to the archive",
                [](const json& p) { return detail::memes_runner(p, true, false); }},
            {"memes_sequential", "MEMES with all emitters swapping mode on a fixed reset period",
                [](const json& p) { return detail::memes_runner(p, false, true); }},
            {"me", "MAP-Elites with iso+line variation",
                [](const json& p) -> Runner {
                    ParamReader r(p, "algorithm.params");
                    IsoLineConfig c;
                    detail::read_iso_line(r, c);
                    r.finish();
                    detail::validated("algorithm.params", [&] {
                        c.validate();
                        return 0;
                    });
                    return [c](const Task& t, const GridSpec& g, int n, const RunOptions& o) { return run_me(t, g, c, n, o); };
                }},
            {"me_sampling", "MAP-Elites averaging n_reevals evaluations per offspring",
                [](const json& p) -> Runner {
                    ParamReader r(p, "algorithm.params");
                    IsoLineConfig c;
                    c.batch_size = 512;
                    detail::read_iso_line(r, c);
                    const int m = r.get("n_reevals", 32);
                    r.finish();
                    detail::validated("algorithm.params", [&] {
                        c.validate();
                        require(m >= 1, "n_reevals must be >= 1");
                        return 0;
                    });
                    return [c, m](const Task& t, const GridSpec& g, int n, const RunOptions& o) { return run_me_sampling(t, g, c, m, n, o); };
                }},
            {"me_es", "single ES alternating explore and exploit modes",
                [](const json& p) -> Runner {
                    ParamReader r(p, "algorithm.params");
                    MeEsConfig c;
                    c.mode_length = r.get("mode_length", c.mode_length);
                    detail::read_es(r, c.es);
                    detail::read_novelty(r, c.novelty, false);
                    c.selection_quantile = r.get("selection_quantile", c.selection_quantile);
                    c.seed_count = r.get("seed_count", c.seed_count);
                    r.finish();
                    detail::validated("algorithm.params", [&] {
                        c.validate();
                        return 0;
                    });
                    return [c](const Task& t, const GridSpec& g, int n, const RunOptions& o) { return run_me_es(t, g, c, n, o); };
                }},
            {"es", "plain ES with a passive archive", [](const json& p) { return detail::es_family_runner(p, EsVariant::es); }},
            {"ns_es", "novelty-search ES meta-population", [](const json& p) { return detail::es_family_runner(p, EsVariant::ns_es); }},
            {"nsr_es", "ES on a fixed fitness/novelty mix", [](const json& p) { return detail::es_family_runner(p, EsVariant::nsr_es); }},
            {"nsra_es", "ES with an adaptive fitness/novelty mix", [](const json& p) { return detail::es_family_runner(p, EsVariant::nsra_es); }},
        };
        return registry;
    }

    inline const AlgorithmInfo* find_algorithm(const std::string& name)
    {
        for (const auto& a : algorithms())
            if (a.name == name)
                return &a;
        return nullptr;
    }

} // namespace memes::harness

#endif
