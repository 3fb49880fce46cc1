#ifndef MEMES_HARNESS_CONFIG_HPP
#define MEMES_HARNESS_CONFIG_HPP

#include <memes/archive.hpp>
#include <memes/tasks.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace memes::harness {

    using nlohmann::json;

    /// A config problem tied to a dotted field path and, when known, a source line.
    class ConfigError : public std::runtime_error {
    public:
        ConfigError(std::string field, const std::string& message, int line = 0)
            : std::runtime_error(format(field, message, line)), _field(std::move(field)), _line(line)
        {
        }

        const std::string& field() const { return _field; }
        int line() const { return _line; }

    private:
        static std::string format(const std::string& field, const std::string& message, int line)
        {
            std::string out = line > 0 ? "line " + std::to_string(line) + ": " : std::string();
            if (!field.empty())
                out += field + ": ";
            return out + message;
        }

        std::string _field;
        int _line;
    };

    /// Line of the last key of a dotted path inside raw JSON text, found by scanning for each
    /// quoted key in turn; 0 when the path cannot be located.
    inline int locate_line(const std::string& text, const std::string& path)
    {
        std::size_t pos = 0;
        std::size_t start = 0;
        bool found = false;
        while (start <= path.size()) {
            const auto dot = path.find('.', start);
            const auto key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            const auto hit = text.find('"' + key + '"', pos);
            if (hit == std::string::npos)
                break;
            pos = hit;
            found = true;
            if (dot == std::string::npos)
                break;
            start = dot + 1;
        }
        if (!found)
            return 0;
        return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
    }

    /// Reads typed fields from a JSON object, remembering which keys were consumed so that
    /// leftovers (typos, unsupported options) can be rejected by finish().
    class ParamReader {
    public:
        ParamReader(const json& obj, std::string prefix) : _obj(obj), _prefix(std::move(prefix))
        {
            if (!_obj.is_null() && !_obj.is_object())
                throw ConfigError(_prefix, "expected an object");
        }

        bool has(const std::string& key) const { return _obj.is_object() && _obj.contains(key); }

        const json& raw(const std::string& key)
        {
            _used.insert(key);
            return _obj.at(key);
        }

        template <class T>
        T get(const std::string& key, T fallback)
        {
            if (!has(key))
                return fallback;
            _used.insert(key);
            try {
                return _obj.at(key).get<T>();
            }
            catch (const json::exception&) {
                throw ConfigError(path(key), "wrong type (" + std::string(_obj.at(key).type_name()) + ")");
            }
        }

        template <class T>
        T require_field(const std::string& key)
        {
            if (!has(key))
                throw ConfigError(path(key), "missing required field");
            return get<T>(key, T{});
        }

        std::string path(const std::string& key) const { return _prefix.empty() ? key : _prefix + "." + key; }

        void finish() const
        {
            if (!_obj.is_object())
                return;
            for (const auto& [key, _] : _obj.items())
                if (!_used.contains(key))
                    throw ConfigError(path(key), "unknown field");
        }

    private:
        const json& _obj;
        std::string _prefix;
        std::set<std::string> _used;
    };

    struct RunConfig {
        std::string task;
        json task_params = json::object();
        std::string algorithm;
        json algorithm_params = json::object();
        std::vector<int> cells_per_dim;
        std::optional<Vector> grid_low, grid_high;
        int n_generations = 0;
        std::uint64_t seed = 0;
        std::string output_dir = "runs";
        int metric_cadence = 10;
        int snapshot_every = 0;
        json source = json::object(); // the parsed document, used for hashing and summaries

        GridSpec grid_for(const TaskSpec& spec) const
        {
            BoundedBox b = spec.feature_bounds;
            if (grid_low)
                b.low = *grid_low;
            if (grid_high)
                b.high = *grid_high;
            GridSpec g{b, cells_per_dim};
            g.validate();
            return g;
        }
    };

    /// Parses and structurally validates a run config. Registry-level checks (task and
    /// algorithm names, their params) happen in validate_config.
    inline RunConfig parse_config(const json& doc)
    {
        RunConfig c;
        c.source = doc;
        ParamReader top(doc, "");

        if (!top.has("task"))
            throw ConfigError("task", "missing required field");
        {
            ParamReader t(top.raw("task"), "task");
            c.task = t.require_field<std::string>("name");
            if (t.has("params")) {
                c.task_params = t.raw("params");
                if (!c.task_params.is_object())
                    throw ConfigError("task.params", "expected an object");
            }
            t.finish();
        }
        if (!top.has("algorithm"))
            throw ConfigError("algorithm", "missing required field");
        {
            ParamReader a(top.raw("algorithm"), "algorithm");
            c.algorithm = a.require_field<std::string>("name");
            if (a.has("params")) {
                c.algorithm_params = a.raw("params");
                if (!c.algorithm_params.is_object())
                    throw ConfigError("algorithm.params", "expected an object");
            }
            a.finish();
        }
        if (!top.has("grid"))
            throw ConfigError("grid", "missing required field");
        {
            ParamReader g(top.raw("grid"), "grid");
            c.cells_per_dim = g.require_field<std::vector<int>>("cells_per_dim");
            if (c.cells_per_dim.empty())
                throw ConfigError("grid.cells_per_dim", "must not be empty");
            for (int n : c.cells_per_dim)
                if (n < 1)
                    throw ConfigError("grid.cells_per_dim", "entries must be >= 1");
            auto vec = [&](const char* key) -> std::optional<Vector> {
                if (!g.has(key))
                    return std::nullopt;
                const auto v = g.get<std::vector<double>>(key, {});
                if (v.size() != c.cells_per_dim.size())
                    throw ConfigError(g.path(key), "length must match cells_per_dim");
                return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
            };
            c.grid_low = vec("low");
            c.grid_high = vec("high");
            g.finish();
        }
        c.n_generations = top.require_field<int>("n_generations");
        if (c.n_generations < 0)
            throw ConfigError("n_generations", "must be >= 0");
        c.seed = top.get<std::uint64_t>("seed", 0);
        c.output_dir = top.get<std::string>("output_dir", "runs");
        c.metric_cadence = top.get<int>("metric_cadence", 10);
        if (c.metric_cadence < 1)
            throw ConfigError("metric_cadence", "must be >= 1");
        c.snapshot_every = top.get<int>("snapshot_every", 0);
        if (c.snapshot_every < 0)
            throw ConfigError("snapshot_every", "must be >= 0");
        top.finish();
        return c;
    }

    /// Attaches a source line to a ConfigError raised while handling `text`.
    inline ConfigError anchor(const ConfigError& e, const std::string& text)
    {
        if (e.line() > 0 || e.field().empty())
            return e;
        std::string msg = e.what();
        msg = msg.substr(e.field().size() + 2);
        return ConfigError(e.field(), msg, locate_line(text, e.field()));
    }

    inline json parse_json_text(const std::string& text)
    {
        try {
            return json::parse(text);
        }
        catch (const json::parse_error& e) {
            // nlohmann reports "... at line L, column C: ..."
            throw ConfigError("", e.what());
        }
    }

    inline std::string read_text_file(const std::string& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw std::runtime_error("cannot open " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    /// 64-bit FNV-1a, used for run ids.
    inline std::uint64_t fnv1a(const std::string& s)
    {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char ch : s) {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    /// "<hash of the config without seed and output_dir>-s<seed>"
    inline std::string run_id(const RunConfig& c)
    {
        json canon = c.source;
        canon.erase("seed");
        canon.erase("output_dir");
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canon.dump())));
        return std::string(buf, 12) + "-s" + std::to_string(c.seed);
    }

    /// Output root: MEMES_OUTPUT_ROOT when set, else the config's output_dir.
    inline std::string output_root(const RunConfig& c)
    {
        if (const char* env = std::getenv("MEMES_OUTPUT_ROOT"); env && *env)
            return env;
        return c.output_dir;
    }

} // namespace memes::harness

#endif
