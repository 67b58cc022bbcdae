#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "cloudheight/errors.hpp"
#include "cloudheight/simstudy.hpp"

using namespace cloudheight;

namespace {

SimConfig near_truth()
{
    SimConfig cfg;
    cfg.d_min = 0.49;
    cfg.d_max = 0.52;
    return cfg;
}

const StripSimulator& shared_sim()
{
    static const StripSimulator sim{SimConfig{}};
    return sim;
}

}  // namespace

TEST_CASE("strip layout")
{
    const SimConfig cfg;
    CHECK(fine_dy(cfg) == doctest::Approx(1.0 / 500.0));
    CHECK(anchor_fine_row(cfg) == 252);
    const auto ph = image_phases(cfg);
    CHECK(ph[2] == 252 % 3);
    CHECK(std::set<long>(ph.begin(), ph.end()).size() == 3);
    const auto grid = d_grid(cfg);
    CHECK(grid.size() == 5001);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == doctest::Approx(1.0));
    CHECK(parse_method("no_newton") == Method::no_newton);
    CHECK_THROWS_AS(parse_method("M2"), ConfigError);
}

TEST_CASE("strip field is pinned at the anchors and seeded")
{
    const auto& sim = shared_sim();
    REQUIRE(sim.pinned().size() == 3);
    const Raster a = sim.draw(1);
    const Raster b = sim.draw(2);
    for (const auto i : sim.pinned()) {
        CHECK(a.values[i] == 0.0);
        CHECK(b.values[i] == 0.0);
    }
    CHECK(a.values != b.values);
    CHECK(sim.draw(1).values == a.values);
    CHECK(simulate_strip(SimConfig{}, 1).values == a.values);
    CHECK(a.rows == 501);
    CHECK(a.cols == 3);
}

TEST_CASE("second increments along the strip have the predicted variance")
{
    const auto& sim = shared_sim();
    const GenCovParams g;
    const double delta = 1.0 / 500.0;
    const double want = 2.0 * g.sigma * g.sigma * std::pow(g.space_scale * delta, g.exponent) *
                        (std::pow(2.0, g.exponent) - 4.0);
    double acc = 0.0;
    long count = 0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        const Raster f = sim.draw(1000 + s);
        for (long r = 1; r + 1 < f.rows; r += 7) {
            for (long c = 0; c < f.cols; ++c) {
                const double w = f(r - 1, c) - 2.0 * f(r, c) + f(r + 1, c);
                acc += w * w;
                ++count;
            }
        }
    }
    CHECK(acc / static_cast<double>(count) == doctest::Approx(want).epsilon(0.10));
}

TEST_CASE("three-image extraction")
{
    const SimConfig cfg;
    const Raster field = shared_sim().draw(4);
    const SimImages im = extract_three_images(field, cfg);
    const long rows2 = (field.rows - 1 - im.phases[2]) / 3 + 1;
    const long lo = std::min({im.image1.rows, im.image2.rows, rows2});
    const long hi = std::max({im.image1.rows, im.image2.rows, rows2});
    CHECK(hi - lo <= 1);
    CHECK(im.image1.rows + im.image2.rows + rows2 == field.rows);

    for (long i = 0; i < im.image2.rows; ++i)
        for (long c = 0; c < 3; ++c) {
            CHECK(im.image1(std::min(i, im.image1.rows - 1), c) ==
                  field(im.phases[0] + 3 * std::min(i, im.image1.rows - 1), c));
            CHECK(im.image2(i, c) == 10.0 * field(im.phases[1] + 3 * i, c));
        }

    REQUIRE(im.patch.size() == 12);
    REQUIRE(im.patch_raster.rows == 4);
    REQUIRE(im.patch_raster.cols == 3);
    for (long a = 0; a < 4; ++a)
        for (long b = 0; b < 3; ++b)
            CHECK(im.patch_raster(a, b) == 5.0 * field(252 + 3 * a, b));
    CHECK(im.patch.coords[0].row == 0.0);
    CHECK(im.patch.coords[11].row == 3.0);
    CHECK(im.patch.coords[11].col == 2.0);

    // At the truth both images see the patch at its own fine row.
    CHECK(patch_position(cfg, im, 0, 0.504) * 3.0 + static_cast<double>(im.phases[0]) == doctest::Approx(252.0));
    CHECK(patch_position(cfg, im, 1, 0.504) * 3.0 + static_cast<double>(im.phases[1]) == doctest::Approx(252.0));
    CHECK(patch_position(cfg, im, 1, 0.604) - patch_position(cfg, im, 1, 0.504) ==
          doctest::Approx(-0.9 * 0.1 * 500.0 / 3.0));
}

TEST_CASE("unit brightness multipliers recover the truth with the full likelihood")
{
    SimConfig cfg = near_truth();
    cfg.strip2_gain = 1.0;
    cfg.patch_gain = 1.0;
    const auto grid = d_grid(cfg);
    CHECK(std::any_of(grid.begin(), grid.end(), [](double d) { return std::abs(d - 0.504) < 1e-12; }));
    // Frozen from a self-consistency run; exact recovery is realization dependent.
    const SimImages im = extract_three_images(shared_sim().draw(rep_seed(1, 7)), cfg);
    CHECK(estimate_d(im, Method::full, cfg) == doctest::Approx(0.504).epsilon(1e-12));
    for (std::uint64_t rep = 0; rep < 20; rep += 4) {
        const SimImages other = extract_three_images(shared_sim().draw(rep_seed(1, rep)), cfg);
        CHECK(std::abs(estimate_d(other, Method::full, cfg) - 0.504) <= 1e-3);
    }
}

TEST_CASE("brightness multipliers leave the full-likelihood argmax unchanged")
{
    for (std::uint64_t rep = 0; rep < 3; ++rep) {
        SimConfig unit = near_truth();
        unit.strip2_gain = 1.0;
        unit.patch_gain = 1.0;
        const Raster f = shared_sim().draw(rep_seed(2, rep));
        const double a = estimate_d(extract_three_images(f, unit), Method::full, unit);
        const double b = estimate_d(extract_three_images(f, near_truth()), Method::full, near_truth());
        CHECK(a == b);
    }
}

TEST_CASE("wrong nu is the full method with a different smoothness")
{
    const SimConfig cfg = near_truth();
    SimConfig swapped = cfg;
    swapped.params.nu = cfg.wrong_nu;
    const SimImages im = extract_three_images(shared_sim().draw(9), cfg);
    const auto a = d_profile(im, Method::wrong_nu, cfg);
    const auto b = d_profile(im, Method::full, swapped);
    REQUIRE(a.score.size() == b.score.size());
    for (std::size_t i = 0; i < a.score.size(); ++i)
        CHECK(a.score[i] == b.score[i]);
    CHECK(cfg.wrong_nu == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("candidates that leave the strip are skipped")
{
    const SimConfig cfg;
    const SimImages im = extract_three_images(shared_sim().draw(5), cfg);
    const auto prof = d_profile(im, Method::baseline, cfg);
    CHECK(std::isnan(prof.score.back()));
    CHECK(std::isfinite(prof.score[2520]));
}

TEST_CASE("method batching matches single-method estimates")
{
    const SimConfig cfg = near_truth();
    const SimImages im = extract_three_images(shared_sim().draw(12), cfg);
    const auto all = estimate_d(im, kAllMethods, cfg);
    for (std::size_t i = 0; i < kAllMethods.size(); ++i)
        CHECK(all[i] == estimate_d(im, kAllMethods[i], cfg));
}

TEST_CASE("replicate seeds and the table")
{
    CHECK(rep_seed(1, 0) != rep_seed(1, 1));
    CHECK(rep_seed(1, 0) != rep_seed(2, 0));
    CHECK(rep_seed(7, 3) == rep_seed(7, 3));

    const SimConfig cfg = near_truth();
    const std::array<Method, 2> methods{Method::full, Method::baseline};
    const auto one = run_table1(cfg, methods, 1, 5);
    REQUIRE(one.size() == 2);
    for (const auto& r : one) {
        REQUIRE(r.estimates.size() == 1);
        CHECK(r.rmse == std::abs(r.estimates[0] - 0.504));
        CHECK(r.mean == r.estimates[0]);
    }

    const auto a = run_table1(cfg, methods, 3, 11, 1);
    const auto b = run_table1(cfg, methods, 3, 11, 2);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].estimates == b[i].estimates);
        double sq = 0.0;
        for (const double e : a[i].estimates)
            sq += (e - 0.504) * (e - 0.504);
        CHECK(a[i].rmse * a[i].rmse == doctest::Approx(sq / 3.0).epsilon(1e-12));
    }
    CHECK(table1_csv(a, 3, 11) == table1_csv(b, 3, 11));

    const std::string csv = table1_csv(one, 1, 5);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "method,mean,rmse,reps,master_seed");
    std::getline(in, line);
    CHECK(line.rfind("full,", 0) == 0);
    CHECK(line.substr(line.size() - 4) == ",1,5");

    CHECK_THROWS_AS(run_table1(cfg, methods, 0, 1), ConfigError);
    CHECK_THROWS_AS(run_table1(cfg, std::span<const Method>{}, 1, 1), ConfigError);
}
