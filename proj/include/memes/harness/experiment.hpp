#ifndef MEMES_HARNESS_EXPERIMENT_HPP
#define MEMES_HARNESS_EXPERIMENT_HPP

#include <memes/harness/algorithms.hpp>
#include <memes/harness/config.hpp>
#include <memes/harness/io.hpp>
#include <memes/metrics.hpp>
#include <memes/tasks.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace memes::harness {

    namespace fs = std::filesystem;

    /// A config whose task, algorithm and grid all resolved against the registries.
    struct PreparedRun {
        RunConfig config;
        std::unique_ptr<Task> task;
        Runner runner;
        GridSpec grid;
        std::string id;
    };

    inline PreparedRun prepare(RunConfig cfg)
    {
        PreparedRun p;
        try {
            p.task = make_task(cfg.task, cfg.task_params);
        }
        catch (const ContractViolation& e) {
            const auto infos = task_names();
            const bool known = std::any_of(infos.begin(), infos.end(), [&](const TaskInfo& t) { return t.name == cfg.task; });
            std::string msg = e.what();
            if (!known) {
                msg = "unknown task \"" + cfg.task + "\" (known:";
                for (const auto& t : infos)
                    msg += " " + t.name;
                msg += ")";
            }
            throw ConfigError(known ? "task.params" : "task.name", msg);
        }
        catch (const nlohmann::json::exception& e) {
            throw ConfigError("task.params", e.what());
        }

        const AlgorithmInfo* algo = find_algorithm(cfg.algorithm);
        if (!algo) {
            std::string msg = "unknown algorithm \"" + cfg.algorithm + "\" (known:";
            for (const auto& a : algorithms())
                msg += " " + a.name;
            throw ConfigError("algorithm.name", msg + ")");
        }
        p.runner = algo->build(cfg.algorithm_params);

        if (static_cast<int>(cfg.cells_per_dim.size()) != p.task->spec().feature_bounds.dims())
            throw ConfigError("grid.cells_per_dim", "task \"" + cfg.task + "\" has " + std::to_string(p.task->spec().feature_bounds.dims()) +
                                                        " feature dimensions");
        try {
            p.grid = cfg.grid_for(p.task->spec());
        }
        catch (const ContractViolation& e) {
            throw ConfigError("grid", e.what());
        }
        p.id = run_id(cfg);
        p.config = std::move(cfg);
        return p;
    }

    /// Reads, parses and validates a config file; ConfigErrors come back line-anchored.
    inline PreparedRun load_run(const std::string& path)
    {
        const std::string text = read_text_file(path);
        try {
            return prepare(parse_config(parse_json_text(text)));
        }
        catch (const ConfigError& e) {
            throw anchor(e, text);
        }
    }

    struct RunOutcome {
        std::string id;
        fs::path dir;
        bool complete = false;
        std::string error;
        int generations_completed = 0;
        std::optional<MetricsRow> last_row;
    };

    inline nlohmann::json archive_metadata(const PreparedRun& p, int generation)
    {
        return {{"run_id", p.id}, {"task", p.config.task}, {"task_params", p.task->params()}, {"fitness_offset", p.task->spec().fitness_offset},
            {"algorithm", p.config.algorithm}, {"algorithm_params", p.config.algorithm_params}, {"seed", p.config.seed},
            {"generation", generation}};
    }

    /// Executes one prepared run into <output root>/<run id>/. Failures after the output
    /// directory exists are reported through the summary (status "incomplete"), not thrown.
    inline RunOutcome execute(const PreparedRun& p)
    {
        RunOutcome out;
        out.id = p.id;
        out.dir = fs::path(output_root(p.config)) / p.id;
        fs::create_directories(out.dir);

        std::ofstream csv(out.dir / "metrics.csv", std::ios::binary | std::ios::trunc);
        if (!csv)
            throw std::runtime_error("cannot write " + (out.dir / "metrics.csv").string());
        csv << csv_line(metrics_columns());

        RunOptions opts;
        opts.seed = p.config.seed;
        opts.metric_cadence = p.config.metric_cadence;
        opts.on_row = [&](const MetricsRow& row) {
            csv << csv_line(metrics_cells(row));
            csv.flush();
            out.last_row = row;
        };
        opts.on_generation = [&](const GenerationReport& report, const EliteArchive& archive) {
            out.generations_completed = report.generation;
            if (p.config.snapshot_every > 0 && report.generation % p.config.snapshot_every == 0 && report.generation != p.config.n_generations) {
                char name[32];
                std::snprintf(name, sizeof name, "archive_g%06d.json", report.generation);
                write_json(out.dir / name, archive_to_json(archive, archive_metadata(p, report.generation)));
            }
        };

        nlohmann::json summary = {{"run_id", p.id}, {"config", p.config.source}, {"n_generations", p.config.n_generations}};
        try {
            RunResult r = p.runner(*p.task, p.grid, p.config.n_generations, opts);
            out.generations_completed = r.generations;
            write_json(out.dir / "archive_final.json", archive_to_json(r.archive, archive_metadata(p, r.generations)));
            out.complete = true;
            summary["evaluations"] = r.evaluations;
        }
        catch (const std::exception& e) {
            out.error = e.what();
        }
        csv.close();

        summary["status"] = out.complete ? "complete" : "incomplete";
        summary["generations_completed"] = out.generations_completed;
        if (!out.complete)
            summary["error"] = out.error;
        if (out.last_row) {
            summary["final"] = metrics_to_json(out.last_row->archive);
            summary["final"]["generation"] = out.last_row->generation;
            summary["final"]["evaluations"] = out.last_row->evaluations;
        }
        write_json(out.dir / "summary.json", summary);
        return out;
    }

    inline RunOutcome run_experiment(const std::string& config_path) { return execute(load_run(config_path)); }

    // Correction -------------------------------------------------------------------

    struct CorrectionFiles {
        fs::path corrected_archive;
        fs::path report;
        CorrectionReport summary;
    };

    /// Re-evaluates every elite of a saved archive m times and writes the corrected archive
    /// and a loss report next to it (or into out_dir). Task params default to the ones
    /// recorded in the archive metadata when the task name matches.
    inline CorrectionFiles correct_archive_file(const std::string& archive_path, const std::string& task_name,
        std::optional<nlohmann::json> task_params, int m, std::uint64_t seed, const std::string& out_dir = "")
    {
        require(m >= 1, "correct: m must be >= 1");
        const auto doc = nlohmann::json::parse(read_text_file(archive_path));
        const EliteArchive archive = archive_from_json(doc);
        const nlohmann::json meta = doc.value("metadata", nlohmann::json::object());

        std::string name = task_name.empty() ? meta.value("task", std::string()) : task_name;
        require(!name.empty(), "correct: no task given and none recorded in the archive");
        if (meta.contains("task") && meta["task"].get<std::string>() != name)
            throw ContractViolation("correct: archive was produced by task \"" + meta["task"].get<std::string>() + "\", not \"" + name + "\"");
        if (!task_params)
            task_params = meta.value("task_params", nlohmann::json::object());
        const auto task = make_task(name, *task_params);

        const auto& spec = task->spec();
        if (archive.spec().dims() != static_cast<std::size_t>(spec.feature_bounds.dims()))
            throw ContractViolation("correct: archive grid has " + std::to_string(archive.spec().dims()) + " dimensions, task \"" + name +
                                    "\" has " + std::to_string(spec.feature_bounds.dims()));
        for (std::size_t k = 0; k < archive.size(); ++k)
            if (archive.occupant(k).genome.size() != spec.genome_dim)
                throw ContractViolation("correct: archive genomes do not match the task genome size");

        const auto result = corrected_archive(archive, *task, m, seed);

        const fs::path src(archive_path);
        const fs::path dir = out_dir.empty() ? src.parent_path() : fs::path(out_dir);
        if (!dir.empty())
            fs::create_directories(dir);
        const auto stem = src.stem().string();
        CorrectionFiles files{dir / (stem + "_corrected.json"), dir / (stem + "_correction.json"), result.report};

        nlohmann::json cmeta = meta;
        cmeta["corrected_from"] = src.filename().string();
        cmeta["reevaluations"] = m;
        cmeta["correction_seed"] = seed;
        write_json(files.corrected_archive, archive_to_json(result.archive, cmeta));

        auto report = correction_to_json(result.report);
        report["task"] = name;
        report["task_params"] = task->params();
        report["seed"] = seed;
        report["source"] = src.filename().string();
        write_json(files.report, report);
        return files;
    }

    // Sweeps -------------------------------------------------------------------------

    struct SweepAxis {
        std::string path; // dotted, e.g. "algorithm.params.reset"
        std::vector<nlohmann::json> values;
    };

    /// "path=v1,v2,..." with each value read as JSON when it parses, else as a string.
    inline SweepAxis parse_axis(const std::string& spec)
    {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size())
            throw ConfigError("", "axis must look like path=v1,v2,... (got \"" + spec + "\")");
        SweepAxis a;
        a.path = spec.substr(0, eq);
        std::size_t start = eq + 1;
        while (start <= spec.size()) {
            const auto comma = spec.find(',', start);
            const auto item = spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            if (item.empty())
                throw ConfigError("", "empty value in axis \"" + spec + "\"");
            auto v = nlohmann::json::parse(item, nullptr, false);
            a.values.push_back(v.is_discarded() ? nlohmann::json(item) : v);
            if (comma == std::string::npos)
                break;
            start = comma + 1;
        }
        return a;
    }

    inline void set_path(nlohmann::json& doc, const std::string& path, const nlohmann::json& value)
    {
        nlohmann::json* node = &doc;
        std::size_t start = 0;
        while (true) {
            const auto dot = path.find('.', start);
            const auto key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (!node->is_object())
                throw ConfigError(path, "cannot set a field inside a non-object");
            if (dot == std::string::npos) {
                (*node)[key] = value;
                return;
            }
            node = &(*node)[key];
            if (node->is_null())
                *node = nlohmann::json::object();
            start = dot + 1;
        }
    }

    struct SweepPoint {
        std::vector<nlohmann::json> values;
        std::string id;
        std::string status; // complete | incomplete | failed
        std::string error;
        std::optional<MetricsRow> final_row;
    };

    struct SweepResult {
        std::vector<SweepPoint> points;
        fs::path table;
    };

    inline std::string value_text(const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

    /// One run per point of the axes' cartesian product (first axis slowest). A failing
    /// point is recorded and the sweep moves on. Writes sweep-<hash>.csv into the output root.
    inline SweepResult sweep(const std::string& template_path, const std::vector<SweepAxis>& axes)
    {
        require(!axes.empty(), "sweep: at least one axis is required");
        const std::string text = read_text_file(template_path);
        const nlohmann::json base = parse_json_text(text);

        std::size_t total = 1;
        for (const auto& a : axes) {
            require(!a.values.empty(), "sweep: axis " + a.path + " has no values");
            total *= a.values.size();
        }

        SweepResult res;
        std::string root;
        for (std::size_t flat = 0; flat < total; ++flat) {
            SweepPoint pt;
            nlohmann::json doc = base;
            std::size_t rem = flat;
            std::vector<std::size_t> idx(axes.size());
            for (std::size_t k = axes.size(); k-- > 0;) {
                idx[k] = rem % axes[k].values.size();
                rem /= axes[k].values.size();
            }
            for (std::size_t k = 0; k < axes.size(); ++k) {
                pt.values.push_back(axes[k].values[idx[k]]);
                set_path(doc, axes[k].path, axes[k].values[idx[k]]);
            }
            try {
                PreparedRun p = prepare(parse_config(doc));
                root = output_root(p.config);
                pt.id = p.id;
                const RunOutcome o = execute(p);
                pt.status = o.complete ? "complete" : "incomplete";
                pt.error = o.error;
                pt.final_row = o.last_row;
            }
            catch (const std::exception& e) {
                pt.status = "failed";
                pt.error = e.what();
            }
            res.points.push_back(std::move(pt));
        }

        if (root.empty()) {
            const char* env = std::getenv("MEMES_OUTPUT_ROOT");
            root = env && *env ? env : base.value("output_dir", std::string("runs"));
        }
        std::string key = base.dump();
        for (const auto& a : axes) {
            key += "|" + a.path;
            for (const auto& v : a.values)
                key += "," + v.dump();
        }
        char hash[17];
        std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(key)));
        fs::create_directories(root);
        res.table = fs::path(root) / ("sweep-" + std::string(hash, 12) + ".csv");

        std::vector<std::string> header;
        for (const auto& a : axes)
            header.push_back(a.path);
        for (const char* c : {"run_id", "status", "generation", "evaluations", "qd_score", "coverage", "max_fitness", "occupied_cells", "error"})
            header.emplace_back(c);
        std::string table = csv_line(header);
        for (const auto& pt : res.points) {
            std::vector<std::string> row;
            for (const auto& v : pt.values)
                row.push_back(value_text(v));
            row.push_back(pt.id);
            row.push_back(pt.status);
            if (pt.final_row) {
                const auto& r = *pt.final_row;
                row.push_back(std::to_string(r.generation));
                row.push_back(std::to_string(r.evaluations));
                row.push_back(format_double(r.archive.qd_score));
                row.push_back(format_double(r.archive.coverage));
                row.push_back(format_double(r.archive.max_fitness));
                row.push_back(std::to_string(r.archive.occupied_cells));
            }
            else
                row.insert(row.end(), 6, "");
            row.push_back(pt.error);
            table += csv_line(row);
        }
        write_file(res.table, table);
        return res;
    }

} // namespace memes::harness

#endif
