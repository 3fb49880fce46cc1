#include <memes/archive.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <vector>

using namespace memes;

namespace {

    GridSpec unit_grid(int n) { return GridSpec(BoundedBox::uniform(2, 0.0, 1.0), {n, n}); }

    Vector vec2(double a, double b)
    {
        Vector v(2);
        v << a, b;
        return v;
    }

    Evaluation eval_at(double fitness, double x, double y) { return {fitness, vec2(x, y)}; }

} // namespace

TEST_CASE("cell_index floors interior features")
{
    const auto g = unit_grid(10);
    REQUIRE(*cell_index(g, vec2(0.05, 0.95)) == CellIndex{0, 9});
    REQUIRE(*cell_index(g, vec2(0.10, 0.5)) == CellIndex{1, 5});
    REQUIRE(*cell_index(g, vec2(0.999, 0.0)) == CellIndex{9, 0});
}

TEST_CASE("cell_index clamps bounds and beyond into edge cells")
{
    const auto g = unit_grid(10);
    REQUIRE(*cell_index(g, vec2(1.0, 1.0)) == CellIndex{9, 9});
    REQUIRE(*cell_index(g, vec2(-3.0, 7.0)) == CellIndex{0, 9});
}

TEST_CASE("cell_index rejects non-finite features and wrong dimensionality")
{
    const auto g = unit_grid(10);
    REQUIRE_FALSE(cell_index(g, vec2(std::nan(""), 0.5)).has_value());
    REQUIRE_FALSE(cell_index(g, vec2(0.5, std::numeric_limits<double>::infinity())).has_value());
    REQUIRE_THROWS_AS(cell_index(g, Vector::Zero(3)), ContractViolation);
}

TEST_CASE("grid spec validation")
{
    REQUIRE_THROWS_AS(GridSpec(BoundedBox::uniform(2, 0.0, 1.0), {10}), ContractViolation);
    REQUIRE_THROWS_AS(GridSpec(BoundedBox::uniform(2, 0.0, 1.0), {10, 0}), ContractViolation);
    REQUIRE_THROWS_AS(BoundedBox::uniform(2, 1.0, 1.0), ContractViolation);
    const GridSpec g(BoundedBox(vec2(0, -1), vec2(2, 1)), {4, 8});
    REQUIRE(g.total_cells() == 32);
    REQUIRE(g.width(0) == 0.5);
    REQUIRE(g.width(1) == 0.25);
    REQUIRE(g.mean_cell_width() == 0.375);
}

TEST_CASE("flat index round-trips over every cell of a 3-D grid")
{
    const GridSpec g(BoundedBox::uniform(3, 0.0, 1.0), {3, 4, 5});
    for (std::size_t flat = 0; flat < g.total_cells(); ++flat)
        REQUIRE(flat_index(g, unflatten_index(g, flat)) == flat);
    REQUIRE(flat_index(g, {1, 2, 3}) == 1 * 20 + 2 * 5 + 3);
}

TEST_CASE("elitist addition: new, strictly better, tie and worse")
{
    EliteArchive a(unit_grid(10));
    const Genome g1 = Genome::Constant(3, 1.0), g2 = Genome::Constant(3, 2.0), g3 = Genome::Constant(3, 3.0);
    REQUIRE(a.offer(g1, eval_at(0.5, 0.51, 0.51)) == AddOutcome::added_new);
    REQUIRE(a.offer(g2, eval_at(0.5, 0.52, 0.53)) == AddOutcome::rejected); // tie keeps incumbent
    REQUIRE(a.offer(g3, eval_at(0.4, 0.55, 0.55)) == AddOutcome::rejected);
    REQUIRE(a.at(55)->genome == g1);
    REQUIRE(a.offer(g2, eval_at(0.6, 0.59, 0.50)) == AddOutcome::replaced);
    REQUIRE(a.at(55)->genome == g2);
    REQUIRE(a.size() == 1);
}

TEST_CASE("invalid evaluations are counted, never stored")
{
    EliteArchive a(unit_grid(4));
    REQUIRE(a.offer(Genome::Zero(2), eval_at(std::nan(""), 0.5, 0.5)) == AddOutcome::invalid);
    REQUIRE(a.offer(Genome::Zero(2), eval_at(1.0, std::nan(""), 0.5)) == AddOutcome::invalid);
    REQUIRE(a.empty());
    REQUIRE(a.invalid_count() == 2);
}

TEST_CASE("random add events match a brute-force per-cell maximum")
{
    const auto g = unit_grid(8);
    EliteArchive a(g);
    std::map<std::size_t, std::pair<double, int>> oracle; // cell -> (best fitness, event id of the first best)
    StreamRng rng = make_stream(5, StreamPurpose::test);
    for (int ev = 0; ev < 5000; ++ev) {
        const double x = rng.uniform(-0.1, 1.1), y = rng.uniform(-0.1, 1.1);
        // coarse fitness values force many ties
        const double f = std::floor(rng.uniform() * 20.0) / 20.0;
        a.try_add(Genome::Constant(1, ev), eval_at(f, x, y));
        const auto cx = std::clamp(static_cast<int>(std::floor(x * 8)), 0, 7);
        const auto cy = std::clamp(static_cast<int>(std::floor(y * 8)), 0, 7);
        const std::size_t flat = static_cast<std::size_t>(cx * 8 + cy);
        auto it = oracle.find(flat);
        if (it == oracle.end() || f > it->second.first)
            oracle[flat] = {f, ev};
    }
    REQUIRE(a.size() == oracle.size());
    for (const auto& [flat, best] : oracle) {
        REQUIRE(a.at(flat) != nullptr);
        REQUIRE(a.at(flat)->eval.fitness == best.first);
        REQUIRE(a.at(flat)->genome[0] == best.second);
    }
}

TEST_CASE("uniform selection on an empty archive throws")
{
    EliteArchive a(unit_grid(4));
    StreamRng rng = make_stream(0, StreamPurpose::test);
    REQUIRE_THROWS_AS(a.uniform_select(rng, 3), EmptyArchiveError);
    REQUIRE_THROWS_AS(a.uniform_pick(rng), EmptyArchiveError);
}

TEST_CASE("uniform selection is uniform over occupants (chi-square)")
{
    EliteArchive a(unit_grid(5));
    for (int i = 0; i < 5; ++i)
        a.try_add(Genome::Constant(1, i), eval_at(1.0, 0.1 + 0.2 * i, 0.1));
    REQUIRE(a.size() == 5);
    StreamRng rng = make_stream(9, StreamPurpose::test);
    const int n = 50000;
    std::vector<int> counts(5, 0);
    for (const auto& g : a.uniform_select(rng, n))
        ++counts[static_cast<std::size_t>(g[0])];
    double chi2 = 0;
    for (int c : counts)
        chi2 += (c - n / 5.0) * (c - n / 5.0) / (n / 5.0);
    // 4 dof, p = 0.001
    REQUIRE(chi2 < 18.47);
}

TEST_CASE("archive JSON round trip is bitwise")
{
    const GridSpec g(BoundedBox(vec2(-1, -1), vec2(1, 1)), {7, 5});
    EliteArchive a(g);
    StreamRng rng = make_stream(1, StreamPurpose::test);
    for (int i = 0; i < 300; ++i) {
        Genome gen(4);
        for (int k = 0; k < 4; ++k)
            gen[k] = rng.normal() * 1e-7 + (k == 0 ? -0.0 : 1.0 / 3.0);
        a.try_add(gen, eval_at(rng.normal(), rng.uniform(-1.2, 1.2), rng.uniform(-1, 1)));
    }
    const auto text = archive_to_json(a, {{"note", "x"}}).dump();
    const EliteArchive b = archive_from_json(nlohmann::json::parse(text));
    REQUIRE(a == b);
    REQUIRE(archive_to_json(b, {{"note", "x"}}).dump() == text);
}

TEST_CASE("archive JSON rejects a record whose feature left its cell")
{
    EliteArchive a(unit_grid(4));
    a.try_add(Genome::Zero(1), eval_at(1.0, 0.1, 0.1));
    auto j = archive_to_json(a);
    j["elites"][0]["cell"] = {3, 3};
    REQUIRE_THROWS(archive_from_json(j));
    j = archive_to_json(a);
    j["format"] = "other";
    REQUIRE_THROWS(archive_from_json(j));
}
