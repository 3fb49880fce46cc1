#ifndef MEMES_ES_HPP
#define MEMES_ES_HPP

#include <memes/parallel.hpp>
#include <memes/random.hpp>
#include <memes/types.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace memes {

    enum class OptimizerKind { adam, sgd };

    /// Isotropic-Gaussian ES with fixed sigma.
    struct ESConfig {
        int sample_count = 512;
        double sigma = 0.02;
        double learning_rate = 0.01;
        double l2_coefficient = 0.0;
        OptimizerKind optimizer = OptimizerKind::adam;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-8;

        void validate() const
        {
            require(sample_count >= 2, "ESConfig: sample_count must be >= 2");
            require(std::isfinite(sigma) && sigma > 0.0, "ESConfig: sigma must be > 0");
            require(std::isfinite(learning_rate) && learning_rate > 0.0, "ESConfig: learning_rate must be > 0");
            require(std::isfinite(l2_coefficient) && l2_coefficient >= 0.0, "ESConfig: l2_coefficient must be >= 0");
            require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "ESConfig: betas must lie in [0, 1)");
            require(epsilon > 0.0, "ESConfig: epsilon must be > 0");
        }
    };

    struct OptimizerState {
        Vector first_moment;
        Vector second_moment;
        std::int64_t step_count = 0;

        static OptimizerState zeros(Eigen::Index dims) { return {Vector::Zero(dims), Vector::Zero(dims), 0}; }
    };

    /// N perturbations around a mean. Genomes are mean + sigma * noise.col(i) and are
    /// materialized on demand instead of stored.
    struct SampleBatch {
        Genome mean;
        double sigma = 0.0;
        Eigen::MatrixXd noise; // dims x N
        std::vector<double> raw_scores;

        std::size_t size() const { return static_cast<std::size_t>(noise.cols()); }
        Genome genome(std::size_t i) const { return mean + sigma * noise.col(static_cast<Eigen::Index>(i)); }
    };

    inline SampleBatch sample_batch(const Genome& mean, const ESConfig& cfg, StreamRng& rng)
    {
        cfg.validate();
        require(mean.allFinite(), "sample_batch: mean must be finite");
        SampleBatch batch;
        batch.mean = mean;
        batch.sigma = cfg.sigma;
        batch.noise.resize(mean.size(), cfg.sample_count);
        for (Eigen::Index i = 0; i < batch.noise.cols(); ++i)
            for (Eigen::Index j = 0; j < batch.noise.rows(); ++j)
                batch.noise(j, i) = rng.normal();
        batch.raw_scores.assign(static_cast<std::size_t>(cfg.sample_count), 0.0);
        return batch;
    }

    struct ShapedScores {
        std::vector<double> values;
        std::size_t non_finite = 0;
    };

    /// Centered ranks: rank/(N-1) - 0.5 with rank 0 the worst. Ties keep sample order;
    /// non-finite scores rank below every finite one.
    inline ShapedScores rank_shape(std::span<const double> raw)
    {
        const std::size_t n = raw.size();
        require(n >= 2, "rank_shape: need at least two scores");

        ShapedScores out;
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        for (double s : raw)
            out.non_finite += std::isfinite(s) ? 0 : 1;

        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const bool fa = std::isfinite(raw[a]);
            const bool fb = std::isfinite(raw[b]);
            if (fa != fb)
                return !fa;
            return fa && raw[a] < raw[b];
        });

        out.values.resize(n);
        const double denom = static_cast<double>(n - 1);
        for (std::size_t rank = 0; rank < n; ++rank)
            out.values[order[rank]] = static_cast<double>(rank) / denom - 0.5;
        return out;
    }

    /// g = (1 / (N sigma)) * sum_i shaped_i * noise_i, the ascent direction.
    inline Vector estimate_gradient(const SampleBatch& batch, std::span<const double> shaped)
    {
        require(shaped.size() == batch.size(), "estimate_gradient: one shaped score per sample required");
        const Eigen::Map<const Vector> w(shaped.data(), static_cast<Eigen::Index>(shaped.size()));
        return (batch.noise * w) / (static_cast<double>(batch.size()) * batch.sigma);
    }

    struct UpdateResult {
        Genome mean;
        OptimizerState optimizer;
        bool ok = true;
    };

    /// One ascent step on grad - l2 * mean. A non-finite gradient leaves everything
    /// untouched and reports ok = false so the owner can reset.
    inline UpdateResult optimizer_update(const Genome& mean, const Vector& grad, const OptimizerState& opt, const ESConfig& cfg)
    {
        require(mean.size() == grad.size(), "optimizer_update: gradient/mean dimensionality differ");
        require(opt.first_moment.size() == mean.size() && opt.second_moment.size() == mean.size(),
            "optimizer_update: optimizer state dimensionality differs from mean");
        if (!grad.allFinite())
            return {mean, opt, false};

        const Vector direction = cfg.l2_coefficient > 0.0 ? Vector(grad - cfg.l2_coefficient * mean) : grad;
        UpdateResult r{mean, opt, true};
        r.optimizer.step_count = opt.step_count + 1;

        if (cfg.optimizer == OptimizerKind::sgd) {
            r.mean = mean + cfg.learning_rate * direction;
            return r;
        }

        r.optimizer.first_moment = cfg.beta1 * opt.first_moment + (1.0 - cfg.beta1) * direction;
        r.optimizer.second_moment = cfg.beta2 * opt.second_moment + (1.0 - cfg.beta2) * direction.cwiseAbs2();
        const double t = static_cast<double>(r.optimizer.step_count);
        const double c1 = 1.0 - std::pow(cfg.beta1, t);
        const double c2 = 1.0 - std::pow(cfg.beta2, t);
        const Vector m_hat = r.optimizer.first_moment / c1;
        const Vector v_hat = r.optimizer.second_moment / c2;
        r.mean = mean + cfg.learning_rate * (m_hat.array() / (v_hat.array().sqrt() + cfg.epsilon)).matrix();
        return r;
    }

    struct EsStepResult {
        Genome mean;
        OptimizerState optimizer;
        SampleBatch batch;
        ShapedScores shaped;
        bool ok = true;
    };

    /// Shapes already-scored samples, estimates the gradient and updates the mean.
    inline EsStepResult es_finish(SampleBatch batch, ShapedScores shaped, const OptimizerState& opt, const ESConfig& cfg)
    {
        const Vector grad = estimate_gradient(batch, shaped.values);
        auto upd = optimizer_update(batch.mean, grad, opt, cfg);
        return {std::move(upd.mean), std::move(upd.optimizer), std::move(batch), std::move(shaped), upd.ok};
    }

    /// Sample, score, shape, estimate, update. objective(genome, sample_index) is called
    /// exactly N times, possibly concurrently.
    template <typename Objective>
    EsStepResult es_step(const Genome& mean, const OptimizerState& opt, Objective&& objective, const ESConfig& cfg, StreamRng& rng)
    {
        SampleBatch batch = sample_batch(mean, cfg, rng);
        parallel_for(batch.size(), [&](std::size_t i) { batch.raw_scores[i] = objective(batch.genome(i), i); });
        ShapedScores shaped = rank_shape(batch.raw_scores);
        return es_finish(std::move(batch), std::move(shaped), opt, cfg);
    }

} // namespace memes

#endif
