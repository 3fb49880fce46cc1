// memes: run, correct and sweep QD experiments from JSON configs.

#include <memes/harness/experiment.hpp>
#include <memes/parallel.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace memes;
using namespace memes::harness;

int main(int argc, char** argv)
{
    CLI::App app{"MAP-Elites with parallel ES emitters: experiment runner"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (0 = all cores); results do not depend on it")->check(CLI::NonNegativeNumber);

    std::string config_path;
    auto* run = app.add_subcommand("run", "run one experiment config");
    run->add_option("config", config_path, "run config (JSON)")->required()->check(CLI::ExistingFile);

    std::string archive_path, task_name, task_params_text, out_dir;
    int m = 512;
    std::uint64_t seed = 0;
    auto* correct = app.add_subcommand("correct", "re-evaluate a saved archive and report metric losses");
    correct->add_option("archive", archive_path, "archive JSON (e.g. archive_final.json)")->required()->check(CLI::ExistingFile);
    correct->add_option("--task", task_name, "task name (default: the one recorded in the archive)");
    correct->add_option("--task-params", task_params_text, "task params as a JSON object (default: recorded params)");
    correct->add_option("--m", m, "re-evaluations per elite")->check(CLI::PositiveNumber);
    correct->add_option("--seed", seed, "seed for the re-evaluation noise");
    correct->add_option("--out", out_dir, "output directory (default: next to the archive)");

    std::string template_path;
    std::vector<std::string> axis_specs;
    auto* sw = app.add_subcommand("sweep", "run a config template over parameter axes");
    sw->add_option("template", template_path, "config template (JSON)")->required()->check(CLI::ExistingFile);
    sw->add_option("--axis", axis_specs, "dotted.path=v1,v2,... (repeatable; cartesian product)")->required();

    app.add_subcommand("list-tasks", "print registered task names");
    app.add_subcommand("list-algos", "print registered algorithms");

    CLI11_PARSE(app, argc, argv);
    set_num_threads(threads);

    try {
        if (*run) {
            const auto out = run_experiment(config_path);
            std::cout << out.dir.string() << "\n";
            if (!out.complete) {
                std::cerr << "run incomplete: " << out.error << "\n";
                return 1;
            }
            if (out.last_row)
                std::printf("qd_score %s coverage %s max_fitness %s evaluations %lld\n", format_double(out.last_row->archive.qd_score).c_str(),
                    format_double(out.last_row->archive.coverage).c_str(), format_double(out.last_row->archive.max_fitness).c_str(),
                    static_cast<long long>(out.last_row->evaluations));
        }
        else if (*correct) {
            std::optional<nlohmann::json> params;
            if (!task_params_text.empty())
                params = nlohmann::json::parse(task_params_text);
            const auto files = correct_archive_file(archive_path, task_name, params, m, seed, out_dir);
            std::cout << files.corrected_archive.string() << "\n" << files.report.string() << "\n";
            std::printf("qd_score loss %s%%  coverage loss %s%%  max_fitness loss %s%%\n", format_double(files.summary.qd_score_loss_pct).c_str(),
                format_double(files.summary.coverage_loss_pct).c_str(), format_double(files.summary.max_fitness_loss_pct).c_str());
        }
        else if (*sw) {
            std::vector<SweepAxis> axes;
            for (const auto& s : axis_specs)
                axes.push_back(parse_axis(s));
            const auto res = sweep(template_path, axes);
            int failed = 0;
            for (const auto& pt : res.points) {
                std::cout << (pt.id.empty() ? "-" : pt.id) << " " << pt.status;
                if (!pt.error.empty())
                    std::cout << " (" << pt.error << ")";
                std::cout << "\n";
                failed += pt.status != "complete";
            }
            std::cout << res.table.string() << "\n";
            return failed ? 1 : 0;
        }
        else if (app.got_subcommand("list-tasks")) {
            for (const auto& t : task_names())
                std::cout << t.name << "\t" << t.description << "\n";
        }
        else if (app.got_subcommand("list-algos")) {
            for (const auto& a : algorithms())
                std::cout << a.name << "\t" << a.description << "\n";
        }
    }
    catch (const ConfigError& e) {
        std::cerr << (*run ? config_path : *sw ? template_path : std::string("config")) << ": " << e.what() << "\n";
        return 2;
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
