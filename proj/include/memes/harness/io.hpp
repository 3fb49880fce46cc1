#ifndef MEMES_HARNESS_IO_HPP
#define MEMES_HARNESS_IO_HPP

#include <memes/metrics.hpp>

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace memes::harness {

    /// Shortest decimal that parses back to the same double ("nan", "inf", "-inf" otherwise).
    inline std::string format_double(double v)
    {
        char buf[64];
        const auto r = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, r.ptr);
    }

    inline std::string csv_escape(const std::string& s)
    {
        if (s.find_first_of(",\"\n\r") == std::string::npos)
            return s;
        std::string out = "\"";
        for (char c : s) {
            if (c == '"')
                out += '"';
            out += c;
        }
        return out + '"';
    }

    inline std::string csv_line(const std::vector<std::string>& cells)
    {
        std::string out;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i)
                out += ',';
            out += csv_escape(cells[i]);
        }
        return out + '\n';
    }

    inline const std::vector<std::string>& metrics_columns()
    {
        static const std::vector<std::string> cols = {"generation", "evaluations", "qd_score", "coverage", "max_fitness", "occupied_cells",
            "invalid", "added_exploit", "added_explore", "added_variation", "added_samples", "lifespan_exploit", "lifespan_explore",
            "episodes_exploit", "episodes_explore", "po_exploit_count", "po_exploit_q1", "po_exploit_median", "po_exploit_q3",
            "po_variation_count", "po_variation_q1", "po_variation_median", "po_variation_q3"};
        return cols;
    }

    inline std::vector<std::string> metrics_cells(const MetricsRow& r)
    {
        auto u = [](std::size_t v) { return std::to_string(v); };
        auto d = format_double;
        return {std::to_string(r.generation), std::to_string(r.evaluations), d(r.archive.qd_score), d(r.archive.coverage),
            d(r.archive.max_fitness), u(r.archive.occupied_cells), u(r.invalid), u(r.added_exploit), u(r.added_explore),
            u(r.added_variation), u(r.added_samples), d(r.lifespans.exploit), d(r.lifespans.explore), u(r.lifespans.exploit_episodes),
            u(r.lifespans.explore_episodes), u(r.po_exploit.count), d(r.po_exploit.q1), d(r.po_exploit.median), d(r.po_exploit.q3),
            u(r.po_variation.count), d(r.po_variation.q1), d(r.po_variation.median), d(r.po_variation.q3)};
    }

    /// JSON has no non-finite numbers; they become null.
    inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

    inline nlohmann::json metrics_to_json(const ArchiveMetrics& m)
    {
        return {{"qd_score", m.qd_score}, {"coverage", m.coverage}, {"max_fitness", finite_or_null(m.max_fitness)},
            {"occupied_cells", m.occupied_cells}};
    }

    inline nlohmann::json correction_to_json(const CorrectionReport& r)
    {
        return {{"reevaluations", r.reevaluations}, {"original", metrics_to_json(r.original)}, {"corrected", metrics_to_json(r.corrected)},
            {"loss_pct",
                {{"qd_score", r.qd_score_loss_pct}, {"coverage", r.coverage_loss_pct}, {"max_fitness", finite_or_null(r.max_fitness_loss_pct)}}},
            {"mean_fitness_std", r.mean_fitness_std}, {"mean_feature_std", r.mean_feature_std},
            {"mean_fitness_shift", r.mean_fitness_shift}, {"mean_feature_shift", r.mean_feature_shift}};
    }

    /// Writes via a temporary file and rename so readers never see a half-written file.
    inline void write_file(const std::filesystem::path& path, const std::string& content)
    {
        auto tmp = path;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out)
                throw std::runtime_error("cannot write " + tmp.string());
            out << content;
            if (!out)
                throw std::runtime_error("write failed for " + tmp.string());
        }
        std::filesystem::rename(tmp, path);
    }

    inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

} // namespace memes::harness

#endif
