#include <memes/variation.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace memes;

namespace {

    struct Moments {
        double mean = 0, sd = 0;
    };

    template <typename F>
    Moments moments(int n, F&& draw)
    {
        double s = 0, s2 = 0;
        for (int i = 0; i < n; ++i) {
            const double x = draw();
            s += x;
            s2 += x * x;
        }
        const double m = s / n;
        return {m, std::sqrt(s2 / n - m * m)};
    }

} // namespace

TEST_CASE("identical parents: child is parent plus isotropic noise")
{
    IsoLineConfig cfg;
    const Genome p = Genome::Constant(4, 0.5);
    StreamRng rng = make_stream(41, StreamPurpose::test);
    const auto m = moments(40000, [&] { return iso_line_variation(p, p, cfg, rng)[2] - 0.5; });
    REQUIRE(std::abs(m.mean) < 4 * cfg.iso_sigma / std::sqrt(40000.0));
    REQUIRE(m.sd == Catch::Approx(cfg.iso_sigma).epsilon(0.03));
}

TEST_CASE("line component spreads along the parent difference")
{
    IsoLineConfig cfg;
    Genome p1 = Genome::Zero(2), p2 = Genome::Zero(2);
    p2[0] = 1.0;
    StreamRng rng = make_stream(42, StreamPurpose::test);
    // coordinate 0: iso + line (variances add); coordinate 1: iso only
    const auto along = moments(40000, [&] { return iso_line_variation(p1, p2, cfg, rng)[0]; });
    const auto across = moments(40000, [&] { return iso_line_variation(p1, p2, cfg, rng)[1]; });
    const double expected = std::sqrt(cfg.iso_sigma * cfg.iso_sigma + cfg.line_sigma * cfg.line_sigma);
    REQUIRE(along.sd == Catch::Approx(expected).epsilon(0.03));
    REQUIRE(across.sd == Catch::Approx(cfg.iso_sigma).epsilon(0.03));
}

TEST_CASE("children are clipped to the domain")
{
    IsoLineConfig cfg{0.5, 2.0, 1};
    const BoundedBox box = BoundedBox::uniform(5, 0.0, 1.0);
    StreamRng rng = make_stream(43, StreamPurpose::test);
    const Genome a = Genome::Constant(5, 0.05), b = Genome::Constant(5, 0.95);
    for (int i = 0; i < 1000; ++i) {
        const Genome c = iso_line_variation(a, b, cfg, rng, &box);
        REQUIRE(c.minCoeff() >= 0.0);
        REQUIRE(c.maxCoeff() <= 1.0);
    }
}

TEST_CASE("variation is reproducible per stream and checks shapes")
{
    IsoLineConfig cfg;
    const Genome a = Genome::Constant(3, 0.1), b = Genome::Constant(3, 0.9);
    StreamRng r1 = make_stream(7, StreamPurpose::variation, {3, 4});
    StreamRng r2 = make_stream(7, StreamPurpose::variation, {3, 4});
    REQUIRE(iso_line_variation(a, b, cfg, r1) == iso_line_variation(a, b, cfg, r2));
    REQUIRE_THROWS_AS(iso_line_variation(a, Genome::Zero(2), cfg, r1), ContractViolation);
    REQUIRE_THROWS_AS((IsoLineConfig{0.0, 0.1, 1}.validate()), ContractViolation);
}
