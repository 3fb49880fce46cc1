#include <memes/es.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

using namespace memes;

namespace {

    ESConfig small_cfg(int n, OptimizerKind opt = OptimizerKind::adam)
    {
        ESConfig c;
        c.sample_count = n;
        c.optimizer = opt;
        return c;
    }

    // Scalar Adam written out per coordinate, for comparison with the vectorized update.
    struct ScalarAdam {
        double m = 0, v = 0;
        int t = 0;
        double step(double g, const ESConfig& c)
        {
            ++t;
            m = c.beta1 * m + (1 - c.beta1) * g;
            v = c.beta2 * v + (1 - c.beta2) * g * g;
            const double mh = m / (1 - std::pow(c.beta1, t));
            const double vh = v / (1 - std::pow(c.beta2, t));
            return c.learning_rate * mh / (std::sqrt(vh) + c.epsilon);
        }
    };

} // namespace

TEST_CASE("rank shaping hand examples")
{
    const std::vector<double> raw{3.0, 1.0, 2.0};
    const auto s = rank_shape(raw);
    REQUIRE(s.values == std::vector<double>{0.5, -0.5, 0.0});
    REQUIRE(s.non_finite == 0);

    const std::vector<double> tie{1.0, 1.0};
    REQUIRE(rank_shape(tie).values == std::vector<double>{-0.5, 0.5});

    const std::vector<double> bad{std::nan(""), 5.0, 1.0, -std::numeric_limits<double>::infinity()};
    const auto b = rank_shape(bad);
    REQUIRE(b.non_finite == 2);
    REQUIRE(b.values[0] == -0.5);
    REQUIRE(b.values[3] == Catch::Approx(-0.5 + 1.0 / 3.0));
    REQUIRE(b.values[2] == Catch::Approx(-0.5 + 2.0 / 3.0));
    REQUIRE(b.values[1] == 0.5);

    const std::vector<double> one{1.0};
    REQUIRE_THROWS_AS(rank_shape(one), ContractViolation);
}

TEST_CASE("shaped values are a permutation of an antisymmetric ladder")
{
    StreamRng rng = make_stream(2, StreamPurpose::test);
    for (int n : {2, 7, 128}) {
        std::vector<double> raw(static_cast<std::size_t>(n));
        for (auto& r : raw)
            r = rng.normal();
        auto v = rank_shape(raw).values;
        std::sort(v.begin(), v.end());
        for (int i = 0; i < n; ++i) {
            REQUIRE(v[static_cast<std::size_t>(i)] == static_cast<double>(i) / (n - 1) - 0.5);
            REQUIRE(v[static_cast<std::size_t>(i)] == Catch::Approx(-v[static_cast<std::size_t>(n - 1 - i)]).margin(1e-15));
        }
    }
}

TEST_CASE("gradient estimate matches an explicit sum")
{
    StreamRng rng = make_stream(3, StreamPurpose::test);
    const auto cfg = small_cfg(16);
    auto batch = sample_batch(Genome::Constant(5, 0.3), cfg, rng);
    std::vector<double> w(16);
    for (auto& x : w)
        x = rng.normal();
    const Vector g = estimate_gradient(batch, w);
    for (int d = 0; d < 5; ++d) {
        double s = 0;
        for (int i = 0; i < 16; ++i)
            s += w[static_cast<std::size_t>(i)] * batch.noise(d, i);
        REQUIRE(g[d] == Catch::Approx(s / (16 * cfg.sigma)).epsilon(1e-12));
    }
}

TEST_CASE("sample batch noise is standard normal per coordinate")
{
    StreamRng rng = make_stream(4, StreamPurpose::test);
    auto cfg = small_cfg(100000);
    const Genome mean = Genome::Constant(5, 0.7);
    const auto batch = sample_batch(mean, cfg, rng);
    for (int d = 0; d < 5; ++d) {
        double s = 0;
        for (std::size_t i = 0; i < batch.size(); ++i)
            s += (batch.genome(i)[d] - mean[d]) / cfg.sigma;
        REQUIRE(std::abs(s / 100000.0) < 0.02);
    }
}

TEST_CASE("same stream gives the same batch")
{
    const auto cfg = small_cfg(2);
    StreamRng a = make_stream(8, StreamPurpose::es_noise, {1, 2});
    StreamRng b = make_stream(8, StreamPurpose::es_noise, {1, 2});
    REQUIRE(sample_batch(Genome::Zero(3), cfg, a).noise == sample_batch(Genome::Zero(3), cfg, b).noise);
}

TEST_CASE("sgd update follows grad minus the l2 pull")
{
    auto cfg = small_cfg(4, OptimizerKind::sgd);
    cfg.l2_coefficient = 0.5;
    Genome mean(3);
    mean << 1.0, -2.0, 0.0;
    Vector grad(3);
    grad << 0.5, 0.5, -1.0;
    const auto r = optimizer_update(mean, grad, OptimizerState::zeros(3), cfg);
    REQUIRE(r.ok);
    for (int i = 0; i < 3; ++i)
        REQUIRE(r.mean[i] == Catch::Approx(mean[i] + cfg.learning_rate * (grad[i] - 0.5 * mean[i])));
    REQUIRE(r.optimizer.step_count == 1);
}

TEST_CASE("adam update matches a scalar reference over many steps")
{
    const auto cfg = small_cfg(4);
    StreamRng rng = make_stream(6, StreamPurpose::test);
    Genome mean = Genome::Zero(4);
    OptimizerState st = OptimizerState::zeros(4);
    std::vector<ScalarAdam> ref(4);
    Vector expected = Vector::Zero(4);
    for (int t = 0; t < 50; ++t) {
        Vector g(4);
        for (int i = 0; i < 4; ++i)
            g[i] = rng.normal() * (i + 1);
        auto r = optimizer_update(mean, g, st, cfg);
        mean = r.mean;
        st = r.optimizer;
        for (int i = 0; i < 4; ++i)
            expected[i] += ref[static_cast<std::size_t>(i)].step(g[i], cfg);
    }
    for (int i = 0; i < 4; ++i)
        REQUIRE(mean[i] == Catch::Approx(expected[i]).epsilon(1e-10));
}

TEST_CASE("first adam step has magnitude learning_rate along the gradient sign")
{
    const auto cfg = small_cfg(4);
    Vector g(2);
    g << 3.0, -0.2;
    const auto r = optimizer_update(Genome::Zero(2), g, OptimizerState::zeros(2), cfg);
    REQUIRE(r.mean[0] == Catch::Approx(cfg.learning_rate).epsilon(1e-6));
    REQUIRE(r.mean[1] == Catch::Approx(-cfg.learning_rate).epsilon(1e-6));
}

TEST_CASE("a non-finite gradient leaves mean and optimizer untouched")
{
    const auto cfg = small_cfg(4);
    Vector g(2);
    g << 1.0, std::nan("");
    const Genome mean = Genome::Constant(2, 0.25);
    const auto r = optimizer_update(mean, g, OptimizerState::zeros(2), cfg);
    REQUIRE_FALSE(r.ok);
    REQUIRE(r.mean == mean);
    REQUIRE(r.optimizer.step_count == 0);
}

TEST_CASE("equal scores give a zero expected gradient")
{
    // Ties keep sample order, so the weights are a fixed antisymmetric ladder over
    // i.i.d. noise; the mean estimate should sit within 3 standard errors of zero.
    const auto cfg = small_cfg(8);
    const int dims = 3, batches = 10000;
    StreamRng rng = make_stream(10, StreamPurpose::test);
    Vector acc = Vector::Zero(dims);
    const std::vector<double> raw(8, 1.0);
    const auto shaped = rank_shape(raw);
    for (int b = 0; b < batches; ++b) {
        const auto batch = sample_batch(Genome::Zero(dims), cfg, rng);
        acc += estimate_gradient(batch, shaped.values);
    }
    acc /= batches;
    const double w2 = std::inner_product(shaped.values.begin(), shaped.values.end(), shaped.values.begin(), 0.0);
    const double se = std::sqrt(w2) / (8 * cfg.sigma) / std::sqrt(static_cast<double>(batches));
    for (int d = 0; d < dims; ++d)
        REQUIRE(std::abs(acc[d]) < 3 * se);
}

TEST_CASE("mean ES gradient on a quadratic aligns with the analytic gradient")
{
    const auto cfg = small_cfg(128);
    const int dims = 20;
    StreamRng rng = make_stream(12, StreamPurpose::test);
    Vector c(dims), theta(dims);
    for (int i = 0; i < dims; ++i) {
        c[i] = rng.normal();
        theta[i] = rng.normal();
    }
    Vector acc = Vector::Zero(dims);
    for (int b = 0; b < 1000; ++b) {
        auto batch = sample_batch(theta, cfg, rng);
        for (std::size_t i = 0; i < batch.size(); ++i)
            batch.raw_scores[i] = -(batch.genome(i) - c).squaredNorm();
        acc += estimate_gradient(batch, rank_shape(batch.raw_scores).values);
    }
    const Vector truth = -2.0 * (theta - c);
    REQUIRE(acc.dot(truth) / (acc.norm() * truth.norm()) > 0.9);
}

TEST_CASE("es_step is reproducible and evaluates each sample once")
{
    const auto cfg = small_cfg(32);
    std::vector<int> calls(32, 0);
    auto f = [&](const Genome& g, std::size_t i) {
        ++calls[i];
        return -g.squaredNorm();
    };
    StreamRng a = make_stream(1, StreamPurpose::es_noise, {0, 0});
    StreamRng b = make_stream(1, StreamPurpose::es_noise, {0, 0});
    const auto r1 = es_step(Genome::Constant(6, 0.5), OptimizerState::zeros(6), f, cfg, a);
    for (int c : calls)
        REQUIRE(c == 1);
    const auto r2 = es_step(Genome::Constant(6, 0.5), OptimizerState::zeros(6), f, cfg, b);
    REQUIRE(r1.mean == r2.mean);
    // moving toward the origin
    REQUIRE(r1.mean.squaredNorm() < Genome::Constant(6, 0.5).squaredNorm());
}

TEST_CASE("ES config validation")
{
    ESConfig c;
    c.sample_count = 1;
    REQUIRE_THROWS_AS(c.validate(), ContractViolation);
    c = {};
    c.sigma = 0;
    REQUIRE_THROWS_AS(c.validate(), ContractViolation);
    c = {};
    c.l2_coefficient = -1;
    REQUIRE_THROWS_AS(c.validate(), ContractViolation);
}
