#include <memes/tasks.hpp>

#include <Eigen/LU>

#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

using namespace memes;

namespace {

    // End effector by chaining unit complex rotations, independent of the cumulative-angle loop.
    std::complex<double> fk_complex(const Vector& theta, double half_range)
    {
        const double n = static_cast<double>(theta.size());
        std::complex<double> heading(1.0, 0.0), tip(0.0, 0.0);
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            heading *= std::polar(1.0, (theta[i] - 0.5) * 2.0 * half_range);
            tip += heading / n;
        }
        return tip;
    }

    StreamRng any_rng() { return make_stream(0, StreamPurpose::test); }

    // Slice controls that produce a desired unit control vector at step t.
    Genome steer(const PointTrapTask& task, const std::vector<std::array<double, 2>>& dirs, int dim)
    {
        Genome g = Genome::Zero(dim);
        for (std::size_t t = 0; t < dirs.size(); ++t) {
            Eigen::Vector2d want(dirs[t][0], dirs[t][1]);
            const Eigen::Vector2d slice = task.projection()[t].inverse() * want;
            g.segment<2>(static_cast<Eigen::Index>(2 * t)) = slice;
        }
        return g;
    }

} // namespace

TEST_CASE("arm: constant genomes are perfectly smooth")
{
    ArmTask arm;
    auto rng = any_rng();
    const auto e = arm.evaluate(Genome::Constant(1000, 0.5), rng);
    REQUIRE(e.fitness == 1.0);
    REQUIRE(e.feature[0] == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(e.feature[1] == Catch::Approx(0.5).margin(1e-12));
    for (double c : {0.0, 0.3, 1.0})
        REQUIRE(arm.evaluate(Genome::Constant(1000, c), rng).fitness == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("arm: two-joint hand example")
{
    ArmTask arm(ArmParams{2});
    auto rng = any_rng();
    Genome g(2);
    g << 0.25, 0.75;
    const auto e = arm.evaluate(g, rng);
    REQUIRE(e.fitness == Catch::Approx(0.75));
    // angles -pi/4 then 0
    const double x = 0.5 * std::cos(-std::numbers::pi / 4) + 0.5;
    const double y = 0.5 * std::sin(-std::numbers::pi / 4);
    REQUIRE(e.feature[0] == Catch::Approx((x + 1) / 2));
    REQUIRE(e.feature[1] == Catch::Approx((y + 1) / 2));
}

TEST_CASE("arm: forward kinematics agrees with a complex-rotation oracle")
{
    ArmTask arm;
    StreamRng rng = make_stream(31, StreamPurpose::test);
    for (int t = 0; t < 50; ++t) {
        const Genome g = arm.random_genome(rng);
        const auto e = arm.evaluate(g, rng);
        const auto tip = fk_complex(g, arm.arm_params().joint_half_range);
        REQUIRE(std::abs(e.feature[0] - (tip.real() + 1) / 2) < 1e-12);
        REQUIRE(std::abs(e.feature[1] - (tip.imag() + 1) / 2) < 1e-12);
    }
}

TEST_CASE("arm: fitness stays in [0, 1]")
{
    ArmTask arm(ArmParams{64});
    StreamRng rng = make_stream(32, StreamPurpose::test);
    Genome alt(64);
    for (int i = 0; i < 64; ++i)
        alt[i] = i % 2;
    auto r = any_rng();
    REQUIRE(arm.evaluate(alt, r).fitness == Catch::Approx(0.5));
    for (int t = 0; t < 200; ++t) {
        Genome g(64);
        for (int i = 0; i < 64; ++i)
            g[i] = rng.uniform(-0.5, 1.5); // out-of-domain values are clipped
        const auto e = arm.evaluate(g, rng);
        REQUIRE(e.fitness >= 0.0);
        REQUIRE(e.fitness <= 1.0);
        REQUIRE(e.feature.minCoeff() >= 0.0);
        REQUIRE(e.feature.maxCoeff() <= 1.0);
    }
}

TEST_CASE("arm: deterministic evaluations are bitwise repeatable")
{
    ArmTask arm;
    StreamRng rng = make_stream(33, StreamPurpose::test);
    const Genome g = arm.random_genome(rng);
    StreamRng a = make_stream(1, StreamPurpose::test), b = make_stream(2, StreamPurpose::test);
    const auto e1 = arm.evaluate(g, a), e2 = arm.evaluate(g, b);
    REQUIRE(e1.fitness == e2.fitness);
    REQUIRE(e1.feature == e2.feature);
}

TEST_CASE("noisy arm perturbs the joints before kinematics and fitness")
{
    ArmTask arm(ArmParams{1000, std::numbers::pi / 2, 0.01}, "arm_noisy");
    REQUIRE(arm.spec().stochastic);
    const Genome g = Genome::Constant(1000, 0.5);
    StreamRng a = make_stream(1, StreamPurpose::test), b = make_stream(2, StreamPurpose::test);
    const auto e1 = arm.evaluate(g, a), e2 = arm.evaluate(g, b);
    REQUIRE(e1.fitness < 1.0); // perturbed angles are no longer constant
    REQUIRE(e1.feature != e2.feature);
    StreamRng a2 = make_stream(1, StreamPurpose::test);
    REQUIRE(arm.evaluate(g, a2).feature == e1.feature);
}

TEST_CASE("point trap: zero control stays at the origin")
{
    PointTrapTask pt;
    auto rng = any_rng();
    const auto e = pt.evaluate(Genome::Zero(20), rng);
    REQUIRE(e.fitness == 0.0);
    REQUIRE(e.feature == Vector::Zero(2));
    REQUIRE(pt.spec().fitness_offset == 1.0);
}

TEST_CASE("point trap: genome components past 2T are ignored")
{
    PointTrapTask pt(PointTrapParams{30});
    StreamRng rng = make_stream(34, StreamPurpose::test);
    for (int t = 0; t < 20; ++t) {
        Genome g = pt.random_genome(rng);
        auto r1 = any_rng();
        const auto e1 = pt.evaluate(g, r1);
        for (int i = 20; i < 30; ++i)
            g[i] = rng.uniform(-1, 1);
        auto r2 = any_rng();
        const auto e2 = pt.evaluate(g, r2);
        REQUIRE(e1.fitness == e2.fitness);
        REQUIRE(e1.feature == e2.feature);
    }
}

TEST_CASE("point trap: heading straight for the goal hits the wall")
{
    PointTrapTask pt;
    const std::vector<std::array<double, 2>> ahead(10, {1.0, 0.0});
    auto rng = any_rng();
    const auto tr = pt.simulate(steer(pt, ahead, 20), rng);
    REQUIRE(tr.positions.back()[0] <= TrapWall::x_min);
    REQUIRE(std::count(tr.blocked.begin(), tr.blocked.end(), true) > 0);
}

TEST_CASE("point trap: a detour around the wall passes it")
{
    PointTrapTask pt;
    std::vector<std::array<double, 2>> detour(4, {0.0, 1.0});
    detour.resize(10, {1.0, 0.0});
    auto rng = any_rng();
    const auto e = pt.evaluate(steer(pt, detour, 20), rng);
    REQUIRE(e.feature[1] > TrapWall::y_max);
    REQUIRE(e.fitness > TrapWall::x_max);
}

TEST_CASE("point trap: no trajectory ever enters the wall")
{
    // Densely sample every executed segment and check the rectangle is never touched; any
    // run that ends past the wall must have been outside |y| <= 0.25 while crossing it.
    PointTrapTask pt;
    StreamRng rng = make_stream(35, StreamPurpose::test);
    int passed = 0;
    for (int t = 0; t < 3000; ++t) {
        Genome g = pt.random_genome(rng);
        if (t % 3 == 0) // bias some samples toward an upward-then-forward detour
            g = steer(pt, {{0, 1}, {0, 1}, {0, 1}, {0.3, 1}, {1, 0.2}, {1, 0}, {1, 0}, {1, 0}, {1, 0}, {1, 0}}, 20) + 0.3 * pt.random_genome(rng);
        auto noise = any_rng();
        const auto tr = pt.simulate(g.cwiseMax(-1).cwiseMin(1), noise);
        for (std::size_t s = 1; s < tr.positions.size(); ++s) {
            const auto& a = tr.positions[s - 1];
            const auto& b = tr.positions[s];
            for (int k = 0; k <= 200; ++k) {
                const double u = k / 200.0;
                const double x = a[0] + u * (b[0] - a[0]), y = a[1] + u * (b[1] - a[1]);
                const bool inside = x >= TrapWall::x_min && x <= TrapWall::x_max && y >= TrapWall::y_min && y <= TrapWall::y_max;
                REQUIRE_FALSE(inside);
                if (x >= TrapWall::x_min && x <= TrapWall::x_max)
                    REQUIRE(std::abs(y) > TrapWall::y_max);
            }
        }
        passed += tr.positions.back()[0] > TrapWall::x_max;
    }
    REQUIRE(passed > 0); // the check above was exercised by wall-passing runs
}

TEST_CASE("noisy point trap adds velocity noise")
{
    const auto task = make_task("point_trap_noisy");
    REQUIRE(task->spec().stochastic);
    StreamRng a = make_stream(1, StreamPurpose::test), b = make_stream(2, StreamPurpose::test);
    const auto e1 = task->evaluate(Genome::Zero(20), a), e2 = task->evaluate(Genome::Zero(20), b);
    REQUIRE(e1.feature != e2.feature);
}

TEST_CASE("reevaluate: deterministic task returns the single evaluation exactly")
{
    ArmTask arm(ArmParams{50});
    StreamRng rng = make_stream(36, StreamPurpose::test);
    const Genome g = arm.random_genome(rng);
    const auto single = arm.evaluate(g, rng);
    for (int m : {1, 2, 7, 64}) {
        const auto r = reevaluate(arm, g, m, 99);
        REQUIRE(r.mean.fitness == single.fitness);
        REQUIRE(r.mean.feature == single.feature);
        REQUIRE(r.fitness_std == 0.0);
    }
}

TEST_CASE("reevaluate: m = 1 is the single draw of its stream")
{
    ArmTask arm(ArmParams{100, std::numbers::pi / 2, 0.05});
    const Genome g = Genome::Constant(100, 0.4);
    const auto r = reevaluate(arm, g, 1, 5);
    StreamRng rng = make_stream(5, StreamPurpose::reevaluation, {0});
    const auto e = arm.evaluate(g, rng);
    REQUIRE(r.mean.fitness == e.fitness);
    REQUIRE(r.mean.feature == e.feature);
}

TEST_CASE("reevaluate: spread of the mean feature shrinks like 1/sqrt(m)")
{
    ArmTask arm(ArmParams{200, std::numbers::pi / 2, 0.02});
    const Genome g = Genome::Constant(200, 0.45);
    auto spread = [&](int m) {
        const int repeats = 300;
        std::vector<double> xs;
        for (int k = 0; k < repeats; ++k)
            xs.push_back(reevaluate(arm, g, m, stream_key(static_cast<std::uint64_t>(m), StreamPurpose::test, {static_cast<std::uint64_t>(k)})).mean.feature[0]);
        double mean = 0;
        for (double x : xs)
            mean += x;
        mean /= repeats;
        double s2 = 0;
        for (double x : xs)
            s2 += (x - mean) * (x - mean);
        return std::sqrt(s2 / (repeats - 1));
    };
    const double ratio = spread(4) / spread(64); // expected sqrt(16) = 4
    REQUIRE(ratio > 3.2);
    REQUIRE(ratio < 5.0);
}

TEST_CASE("task registry")
{
    REQUIRE(task_names().size() == 4);
    for (const auto& t : task_names())
        REQUIRE(make_task(t.name)->spec().name == t.name);
    REQUIRE_THROWS_AS(make_task("hexapod"), ContractViolation);
    REQUIRE_THROWS_AS(make_task("arm", {{"joints", 3}}), ContractViolation);
    REQUIRE_THROWS_AS(make_task("arm_noisy", {{"noise_sigma", 0.0}}), ContractViolation);
    REQUIRE_THROWS_AS(make_task("point_trap", {{"genome_dim", 10}}), ContractViolation);
    REQUIRE(make_task("arm", {{"n_joints", 7}})->spec().genome_dim == 7);
    REQUIRE(make_task("arm_noisy")->params()["noise_sigma"] == kDefaultArmNoise);
}
