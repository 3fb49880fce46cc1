#ifndef MEMES_TASKS_HPP
#define MEMES_TASKS_HPP

#include <memes/random.hpp>
#include <memes/types.hpp>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

namespace memes {

    struct TaskSpec {
        std::string name;
        int genome_dim = 0;
        BoundedBox genome_domain;
        BoundedBox feature_bounds;
        bool stochastic = false;
        // Added to every fitness when summing QD-scores so that contributions are >= 0.
        double fitness_offset = 0.0;
    };

    /// Evaluation function. Implementations are immutable after construction, so one
    /// instance may be evaluated from any number of threads. Deterministic tasks ignore rng.
    class Task {
    public:
        virtual ~Task() = default;
        virtual const TaskSpec& spec() const = 0;
        virtual Evaluation evaluate(const Genome& genome, StreamRng& rng) const = 0;
        virtual nlohmann::json params() const = 0;

        Genome random_genome(StreamRng& rng) const
        {
            const auto& box = spec().genome_domain;
            Genome g(box.dims());
            for (Eigen::Index i = 0; i < g.size(); ++i)
                g[i] = rng.uniform(box.low[i], box.high[i]);
            return g;
        }
    };

    // Arm ----------------------------------------------------------------------

    struct ArmParams {
        int n_joints = 1000;
        // Joint angle = (theta - 0.5) * 2 * joint_half_range.
        double joint_half_range = std::numbers::pi / 2.0;
        // Std-dev of actuation noise added to each theta_i (0 = deterministic).
        double noise_sigma = 0.0;
    };

    /// Redundant planar arm with n unit-total-length links. Genome in [0,1]^n, feature is the
    /// end-effector rescaled from [-1,1]^2 to [0,1]^2, fitness = 1 - std-dev of the genome.
    class ArmTask final : public Task {
    public:
        explicit ArmTask(ArmParams p = {}, std::string name = "arm") : _p(p)
        {
            require(p.n_joints >= 1, "arm: n_joints must be >= 1");
            require(p.joint_half_range > 0.0, "arm: joint_half_range must be > 0");
            require(p.noise_sigma >= 0.0, "arm: noise_sigma must be >= 0");
            _spec.name = std::move(name);
            _spec.genome_dim = p.n_joints;
            _spec.genome_domain = BoundedBox::uniform(p.n_joints, 0.0, 1.0);
            _spec.feature_bounds = BoundedBox::uniform(2, 0.0, 1.0);
            _spec.stochastic = p.noise_sigma > 0.0;
            _spec.fitness_offset = 0.0;
        }

        const TaskSpec& spec() const override { return _spec; }
        const ArmParams& arm_params() const { return _p; }

        nlohmann::json params() const override
        {
            return {{"n_joints", _p.n_joints}, {"joint_half_range", _p.joint_half_range}, {"noise_sigma", _p.noise_sigma}};
        }

        Evaluation evaluate(const Genome& genome, StreamRng& rng) const override
        {
            require(genome.size() == _p.n_joints, "arm: genome dimensionality mismatch");
            Vector theta = genome.cwiseMax(0.0).cwiseMin(1.0);
            if (_p.noise_sigma > 0.0) {
                for (Eigen::Index i = 0; i < theta.size(); ++i)
                    theta[i] += _p.noise_sigma * rng.normal();
                theta = theta.cwiseMax(0.0).cwiseMin(1.0);
            }
            return evaluate_angles(theta);
        }

        /// Deterministic core on already-clipped genome values.
        Evaluation evaluate_angles(const Vector& theta) const
        {
            const double n = static_cast<double>(theta.size());
            const double mean = theta.mean();
            const double variance = (theta.array() - mean).square().sum() / n;

            const double link = 1.0 / n;
            const double scale = 2.0 * _p.joint_half_range;
            double angle = 0.0, x = 0.0, y = 0.0;
            for (Eigen::Index i = 0; i < theta.size(); ++i) {
                angle += (theta[i] - 0.5) * scale;
                x += link * std::cos(angle);
                y += link * std::sin(angle);
            }
            Evaluation e;
            e.fitness = 1.0 - std::sqrt(variance);
            e.feature = Vector(2);
            e.feature << (x + 1.0) / 2.0, (y + 1.0) / 2.0;
            return e;
        }

    private:
        ArmParams _p;
        TaskSpec _spec;
    };

    // PointTrap ----------------------------------------------------------------

    struct PointTrapParams {
        int genome_dim = 20;
        int steps = 10;
        double max_speed = 0.1;
        // Gain applied to the rotated control slice before tanh.
        double control_gain = 1.0;
        // Std-dev of velocity noise per component and step (0 = deterministic).
        double noise_sigma = 0.0;
        std::uint64_t projection_seed = 0x5eed7a9;
    };

    /// Deceptive point-mass maze: a wall in front of the start punishes greedy forward motion.
    struct TrapWall {
        static constexpr double x_min = 0.25;
        static constexpr double x_max = 0.30;
        static constexpr double y_min = -0.25;
        static constexpr double y_max = 0.25;

        /// True if the closed segment p->q touches the closed wall rectangle (Liang-Barsky).
        static bool blocks(double px, double py, double qx, double qy)
        {
            double t0 = 0.0, t1 = 1.0;
            const double dx = qx - px, dy = qy - py;
            const std::array<double, 4> p{-dx, dx, -dy, dy};
            const std::array<double, 4> q{px - x_min, x_max - px, py - y_min, y_max - py};
            for (int i = 0; i < 4; ++i) {
                if (p[i] == 0.0) {
                    if (q[i] < 0.0)
                        return false;
                    continue;
                }
                const double t = q[i] / p[i];
                if (p[i] < 0.0)
                    t0 = std::max(t0, t);
                else
                    t1 = std::min(t1, t);
                if (t0 > t1)
                    return false;
            }
            return true;
        }
    };

    /// A 2-D point starting at the origin takes `steps` moves with velocity
    /// max_speed * tanh(W_t * theta[2t : 2t+2]); W_t is gain times a fixed pseudo-random
    /// rotation. Moves whose segment touches the wall are cancelled. Fitness is the final x,
    /// feature the final position; the arena is [-1,1]^2.
    class PointTrapTask final : public Task {
    public:
        struct Trace {
            std::vector<std::array<double, 2>> positions; // steps + 1 entries, origin first
            std::vector<bool> blocked;
        };

        explicit PointTrapTask(PointTrapParams p = {}, std::string name = "point_trap") : _p(p)
        {
            require(p.steps >= 1, "point_trap: steps must be >= 1");
            require(p.genome_dim >= 2 * p.steps, "point_trap: genome_dim must be >= 2 * steps");
            require(p.max_speed > 0.0 && p.control_gain > 0.0, "point_trap: max_speed and control_gain must be > 0");
            require(p.noise_sigma >= 0.0, "point_trap: noise_sigma must be >= 0");
            _spec.name = std::move(name);
            _spec.genome_dim = p.genome_dim;
            _spec.genome_domain = BoundedBox::uniform(p.genome_dim, -1.0, 1.0);
            _spec.feature_bounds = BoundedBox::uniform(2, -1.0, 1.0);
            _spec.stochastic = p.noise_sigma > 0.0;
            _spec.fitness_offset = 1.0;

            StreamRng rng = make_stream(p.projection_seed, StreamPurpose::projection);
            for (int t = 0; t < p.steps; ++t) {
                const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
                Eigen::Matrix2d w;
                w << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
                _projection.push_back(p.control_gain * w);
            }
        }

        const TaskSpec& spec() const override { return _spec; }
        const std::vector<Eigen::Matrix2d>& projection() const { return _projection; }

        nlohmann::json params() const override
        {
            return {{"genome_dim", _p.genome_dim}, {"steps", _p.steps}, {"max_speed", _p.max_speed}, {"control_gain", _p.control_gain},
                {"noise_sigma", _p.noise_sigma}, {"projection_seed", _p.projection_seed}};
        }

        Trace simulate(const Genome& genome, StreamRng& rng) const
        {
            require(genome.size() == _p.genome_dim, "point_trap: genome dimensionality mismatch");
            const Vector theta = genome.cwiseMax(-1.0).cwiseMin(1.0);
            Trace tr;
            tr.positions.push_back({0.0, 0.0});
            double x = 0.0, y = 0.0;
            for (int t = 0; t < _p.steps; ++t) {
                const Eigen::Vector2d control = _projection[static_cast<std::size_t>(t)] * theta.segment<2>(2 * t);
                double vx = _p.max_speed * std::tanh(control[0]);
                double vy = _p.max_speed * std::tanh(control[1]);
                if (_p.noise_sigma > 0.0) {
                    vx += _p.noise_sigma * rng.normal();
                    vy += _p.noise_sigma * rng.normal();
                }
                const double nx = std::clamp(x + vx, -1.0, 1.0);
                const double ny = std::clamp(y + vy, -1.0, 1.0);
                const bool hit = TrapWall::blocks(x, y, nx, ny);
                if (!hit) {
                    x = nx;
                    y = ny;
                }
                tr.blocked.push_back(hit);
                tr.positions.push_back({x, y});
            }
            return tr;
        }

        Evaluation evaluate(const Genome& genome, StreamRng& rng) const override
        {
            const auto tr = simulate(genome, rng);
            const auto& end = tr.positions.back();
            Evaluation e;
            e.fitness = end[0];
            e.feature = Vector(2);
            e.feature << std::clamp(end[0], -1.0, 1.0), std::clamp(end[1], -1.0, 1.0);
            return e;
        }

    private:
        PointTrapParams _p;
        TaskSpec _spec;
        std::vector<Eigen::Matrix2d> _projection;
    };

    // Re-evaluation --------------------------------------------------------------

    /// Running component-wise mean and spread of evaluations (Welford). The first sample is
    /// copied verbatim, so one sample, or many identical ones, give that sample back bitwise.
    class EvaluationAccumulator {
    public:
        void add(const Evaluation& e)
        {
            ++_n;
            if (_n == 1) {
                _f_mean = e.fitness;
                _d_mean = e.feature;
                _f_m2 = 0.0;
                _d_m2 = Vector::Zero(e.feature.size());
                return;
            }
            const double k = static_cast<double>(_n);
            const double df = e.fitness - _f_mean;
            _f_mean += df / k;
            _f_m2 += df * (e.fitness - _f_mean);
            const Vector dd = e.feature - _d_mean;
            _d_mean += dd / k;
            _d_m2 += dd.cwiseProduct(e.feature - _d_mean);
        }

        int count() const { return _n; }
        Evaluation mean() const { return {_f_mean, _d_mean}; }
        double fitness_std() const { return _n > 1 ? std::sqrt(_f_m2 / (_n - 1)) : 0.0; }
        Vector feature_std() const { return _n > 1 ? Vector((_d_m2 / (_n - 1)).cwiseSqrt()) : Vector::Zero(_d_mean.size()); }

    private:
        int _n = 0;
        double _f_mean = 0.0, _f_m2 = 0.0;
        Vector _d_mean, _d_m2;
    };

    struct Reevaluation {
        Evaluation mean;
        double fitness_std = 0.0;
        Vector feature_std;
    };

    /// Component-wise mean (and sample std-dev) of m evaluations; draw r uses the stream
    /// keyed by (key, r).
    inline Reevaluation reevaluate(const Task& task, const Genome& genome, int m, std::uint64_t key)
    {
        require(m >= 1, "reevaluate: m must be >= 1");
        EvaluationAccumulator acc;
        for (int r = 0; r < m; ++r) {
            StreamRng rng = make_stream(key, StreamPurpose::reevaluation, {static_cast<std::uint64_t>(r)});
            acc.add(task.evaluate(genome, rng));
        }
        return {acc.mean(), acc.fitness_std(), acc.feature_std()};
    }

    // Registry -------------------------------------------------------------------

    struct TaskInfo {
        std::string name;
        std::string description;
    };

    inline std::vector<TaskInfo> task_names()
    {
        return {
            {"arm", "redundant planar arm, deterministic (default 1000 joints)"},
            {"arm_noisy", "redundant planar arm with actuation noise on every joint"},
            {"point_trap", "deceptive point-mass maze with a wall in front of the start"},
            {"point_trap_noisy", "point_trap with velocity noise"},
        };
    }

    inline constexpr double kDefaultArmNoise = 0.001;
    inline constexpr double kDefaultPointTrapNoise = 0.01;

    /// Builds a registered task. Unknown parameter keys are rejected.
    inline std::unique_ptr<Task> make_task(const std::string& name, const nlohmann::json& params = nlohmann::json::object())
    {
        auto check_keys = [&](std::initializer_list<const char*> allowed) {
            for (const auto& [key, _] : params.items()) {
                if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
                    throw ContractViolation("task '" + name + "': unknown parameter '" + key + "'");
            }
        };
        if (name == "arm" || name == "arm_noisy") {
            check_keys({"n_joints", "joint_half_range", "noise_sigma"});
            ArmParams p;
            p.n_joints = params.value("n_joints", p.n_joints);
            p.joint_half_range = params.value("joint_half_range", p.joint_half_range);
            p.noise_sigma = params.value("noise_sigma", name == "arm_noisy" ? kDefaultArmNoise : 0.0);
            if (name == "arm_noisy")
                require(p.noise_sigma > 0.0, "arm_noisy: noise_sigma must be > 0");
            return std::make_unique<ArmTask>(p, name);
        }
        if (name == "point_trap" || name == "point_trap_noisy") {
            check_keys({"genome_dim", "steps", "max_speed", "control_gain", "noise_sigma", "projection_seed"});
            PointTrapParams p;
            p.genome_dim = params.value("genome_dim", p.genome_dim);
            p.steps = params.value("steps", p.steps);
            p.max_speed = params.value("max_speed", p.max_speed);
            p.control_gain = params.value("control_gain", p.control_gain);
            p.noise_sigma = params.value("noise_sigma", name == "point_trap_noisy" ? kDefaultPointTrapNoise : 0.0);
            p.projection_seed = params.value("projection_seed", p.projection_seed);
            if (name == "point_trap_noisy")
                require(p.noise_sigma > 0.0, "point_trap_noisy: noise_sigma must be > 0");
            return std::make_unique<PointTrapTask>(p, name);
        }
        throw ContractViolation("unknown task '" + name + "'");
    }

} // namespace memes

#endif
