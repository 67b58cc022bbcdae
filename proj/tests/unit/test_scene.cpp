#include <cmath>
#include <vector>

#include <doctest.h>

#include "cloudheight/errors.hpp"
#include "cloudheight/scene.hpp"

using namespace cloudheight;

TEST_CASE("scene pixels sample the shifted reference field")
{
    SceneConfig sc;
    sc.rows = 12;
    sc.cols = 8;
    // 27.5 m/s over 20 s is exactly two pixels across-track.
    sc.cameras = {CameraSpec{"ref", 0.0, 0.0}, CameraSpec{"late", 0.0, 20.0}};
    sc.truth = {3000.0, 27.5, 0.0};
    const SceneSimulator sim(sc);
    CHECK(sim.sites() == static_cast<std::size_t>(12 * 8 + 12 * 2));
    const auto imgs = sim.draw(5);
    REQUIRE(imgs.size() == 2);
    for (long r = 0; r < 12; ++r)
        for (long c = 2; c < 8; ++c)
            CHECK(imgs[1](r, c) == imgs[0](r, c - 2));
    CHECK(imgs[0].pitch == 275.0);
}

TEST_CASE("scene draws are seeded and gains are applied per camera")
{
    SceneConfig sc;
    sc.rows = 10;
    sc.cols = 6;
    sc.cameras = {CameraSpec{"a", 0.0, 0.0}, CameraSpec{"b", 20.0, 0.0}};
    const auto a = simulate_scene(sc, 1);
    CHECK(simulate_scene(sc, 1)[1].values == a[1].values);
    CHECK(simulate_scene(sc, 2)[0].values != a[0].values);

    sc.gains = {Gain{}, Gain{3.0, -0.5}};
    const auto g = simulate_scene(sc, 1);
    CHECK(g[0].values == a[0].values);
    for (std::size_t i = 0; i < g[1].size(); ++i)
        CHECK(g[1].values[i] == doctest::Approx(3.0 * a[1].values[i] - 0.5));
}

TEST_CASE("scene configuration validation")
{
    SceneConfig sc;
    CHECK_THROWS_AS(validate(sc), ConfigError);
    sc.cameras = {CameraSpec{"a", 0.0, 0.0}};
    CHECK_NOTHROW(validate(sc));
    sc.gains = {Gain{}, Gain{}};
    CHECK_THROWS_AS(validate(sc), ConfigError);
    sc.gains.clear();
    sc.rows = 0;
    CHECK_THROWS_AS(validate(sc), ConfigError);
    sc.rows = 4;
    sc.params.rho = -1.0;
    CHECK_THROWS(validate(sc));
}
