#include "cloudheight/estimator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "cloudheight/errors.hpp"

namespace cloudheight {

std::string_view to_string(Mode mode)
{
    switch (mode) {
    case Mode::low: return "low";
    case Mode::high: return "high";
    case Mode::baseline: return "baseline";
    }
    return "?";
}

Mode parse_mode(std::string_view text)
{
    if (text == "low")
        return Mode::low;
    if (text == "high")
        return Mode::high;
    if (text == "baseline")
        return Mode::baseline;
    throw ConfigError("unknown mode '" + std::string(text) + "' (expected low, high or baseline)");
}

std::string_view to_string(Rejection r)
{
    switch (r) {
    case Rejection::none: return "ok";
    case Rejection::all_invalid: return "all_invalid";
    case Rejection::few_valid: return "few_valid";
    case Rejection::boundary: return "boundary";
    case Rejection::flat: return "flat";
    }
    return "?";
}

std::vector<double> SearchGrid::heights() const
{
    std::vector<double> out;
    const double slack = 1e-9 * std::max(1.0, std::abs(h_max));
    for (long k = 1;; ++k) {
        const double h = h_min + static_cast<double>(k) * h_step;
        if (h > h_max + slack)
            break;
        out.push_back(h);
    }
    return out;
}

std::vector<HeightWind> SearchGrid::candidates() const
{
    std::vector<HeightWind> out;
    for (const double h : heights())
        for (const double a : v1)
            for (const double b : v2)
                out.push_back({h, a, b});
    return out;
}

void validate(const SearchGrid& grid)
{
    if (!(grid.h_step > 0.0))
        throw ConfigError("search grid: h_step must be positive");
    if (!(grid.h_min < grid.h_max))
        throw ConfigError("search grid: h_min must be below h_max");
    if (grid.v1.empty() || grid.v2.empty())
        throw ConfigError("search grid: wind candidate lists must be nonempty");
    if (grid.heights().empty())
        throw ConfigError("search grid: no heights in (h_min, h_max]");
}

void validate(const EstimatorConfig& cfg)
{
    if (cfg.cameras.empty())
        throw ConfigError("at least one camera is required");
    for (const auto& c : cfg.cameras)
        validate(c);
    if (!(cfg.pitch > 0.0))
        throw ConfigError("pixel pitch must be positive");
    validate(cfg.params);
    if (!(cfg.nugget >= 0.0))
        throw ConfigError("nugget must be nonnegative");
    if (cfg.mode == Mode::baseline && cfg.cameras.size() < 2)
        throw ConfigError("baseline mode needs at least two cameras");
}

namespace {

void check_scene(std::span<const Raster> scene, const EstimatorConfig& cfg)
{
    if (scene.size() != cfg.cameras.size())
        throw ConfigError("scene has " + std::to_string(scene.size()) + " rasters for " +
                          std::to_string(cfg.cameras.size()) + " cameras");
    for (const auto& r : scene) {
        if (r.rows != scene.front().rows || r.cols != scene.front().cols)
            throw ConfigError("camera rasters differ in dimensions");
    }
}

double baseline_score(std::span<const Raster> scene, const Window& window, const HeightWind& hw,
                      const EstimatorConfig& cfg)
{
    const CameraSpec& ref = cfg.cameras.front();
    const Patch ref_patch = extract_patch(scene[0], window.origin, window.size, PixelShift{});
    double total = 0.0;
    for (std::size_t k = 1; k < cfg.cameras.size(); ++k) {
        PixelShift s = shift_for_camera(hw, cfg.cameras[k], ref, cfg.pitch);
        s.frac_along = 0.0;
        s.frac_across = 0.0;
        total += correlation_metric(ref_patch, extract_patch(scene[k], window.origin, window.size, s));
    }
    return total / static_cast<double>(cfg.cameras.size() - 1);
}

}  // namespace

std::optional<double> evaluate_candidate(std::span<const Raster> scene, const Window& window, const HeightWind& hw,
                                         const EstimatorConfig& cfg, MaternCache* cache)
{
    check_scene(scene, cfg);
    if (!window_fits(scene[0], window.origin, window.size, PixelShift{}))
        throw OutOfRasterError("window outside reference raster");
    try {
        if (cfg.mode == Mode::baseline)
            return baseline_score(scene, window, hw, cfg);

        const CameraSpec& ref = cfg.cameras.front();
        std::vector<Patch> patches;
        patches.reserve(cfg.cameras.size());
        for (std::size_t k = 0; k < cfg.cameras.size(); ++k) {
            const PixelShift s = k == 0 ? PixelShift{} : shift_for_camera(hw, cfg.cameras[k], ref, cfg.pitch);
            patches.push_back(extract_patch(scene[k], window.origin, window.size, s));
        }
        const SuperImage si = interlace(patches);

        std::optional<MaternCache> local;
        if (cache == nullptr) {
            local.emplace(cfg.params);
            cache = &*local;
        }
        if (cfg.mode == Mode::low) {
            LowCloudOptions opts;
            opts.nugget = cfg.nugget;
            opts.divisor = cfg.divisor;
            return low_cloud_loglik(build_low_workspace(si, *cache, opts));
        }
        return high_cloud_loglik(build_high_workspace(si, *cache, cfg.nugget));
    } catch (const OutOfRasterError&) {
        return std::nullopt;
    } catch (const DegenerateError&) {
        return std::nullopt;
    }
}

std::optional<HeightWind> LikelihoodProfile::best_candidate() const
{
    if (!best)
        return std::nullopt;
    return candidates[*best];
}

LikelihoodProfile search(std::span<const Raster> scene, const Window& window, const SearchGrid& grid,
                         const EstimatorConfig& cfg, MaternCache* cache)
{
    validate(grid);
    std::optional<MaternCache> local;
    if (cache == nullptr) {
        local.emplace(cfg.params);
        cache = &*local;
    }

    LikelihoodProfile prof;
    prof.candidates = grid.candidates();
    const std::size_t total = prof.candidates.size();
    prof.loglik.assign(total, std::numeric_limits<double>::quiet_NaN());
    prof.candidate_valid.assign(total, false);

    std::vector<double> good;
    good.reserve(total);
    for (std::size_t i = 0; i < total; ++i) {
        const auto v = evaluate_candidate(scene, window, prof.candidates[i], cfg, cache);
        if (!v || !std::isfinite(*v))
            continue;
        prof.loglik[i] = *v;
        prof.candidate_valid[i] = true;
        good.push_back(*v);
        // Strict comparison keeps the earliest (smallest h) of tied maxima.
        if (!prof.best || *v > prof.loglik[*prof.best])
            prof.best = i;
    }
    prof.valid_count = good.size();
    if (good.empty()) {
        prof.rejection = Rejection::all_invalid;
        return prof;
    }

    std::sort(good.begin(), good.end());
    const std::size_t mid = good.size() / 2;
    const double median = good.size() % 2 == 1 ? good[mid] : 0.5 * (good[mid - 1] + good[mid]);
    prof.flatness = good.back() - median;

    const auto heights = grid.heights();
    const double best_h = prof.candidates[*prof.best].h;
    if (static_cast<double>(prof.valid_count) < cfg.min_valid_fraction * static_cast<double>(total))
        prof.rejection = Rejection::few_valid;
    else if (best_h == heights.front() || best_h == heights.back())
        prof.rejection = Rejection::boundary;
    else if (prof.flatness < cfg.tau_flat)
        prof.rejection = Rejection::flat;
    else
        prof.rejection = Rejection::none;
    prof.valid = prof.rejection == Rejection::none;
    return prof;
}

Point2 HeightMap::midpoint(long r, long c) const
{
    return {static_cast<double>(r * stride) + 0.5 * static_cast<double>(window.rows - 1),
            static_cast<double>(c * stride) + 0.5 * static_cast<double>(window.cols - 1)};
}

double HeightMap::coverage() const
{
    if (valid.empty())
        return 0.0;
    const auto good = std::count(valid.begin(), valid.end(), std::uint8_t{1});
    return static_cast<double>(good) / static_cast<double>(valid.size());
}

HeightMap sliding_height_map(std::span<const Raster> scene, WindowSize window, long stride, const SearchGrid& grid,
                             const EstimatorConfig& cfg)
{
    validate(cfg);
    validate(grid);
    check_scene(scene, cfg);
    if (stride <= 0)
        throw ConfigError("stride must be positive");
    const Raster& ref = scene.front();
    if (window.rows <= 0 || window.cols <= 0 || window.rows > ref.rows || window.cols > ref.cols)
        throw ConfigError("window does not fit the scene");

    HeightMap map;
    map.stride = stride;
    map.window = window;
    map.rows = (ref.rows - window.rows) / stride + 1;
    map.cols = (ref.cols - window.cols) / stride + 1;
    const auto cells = static_cast<std::size_t>(map.rows * map.cols);
    map.height.assign(cells, std::numeric_limits<double>::quiet_NaN());
    map.valid.assign(cells, 0);
    map.flatness.assign(cells, 0.0);
    map.rejection.assign(cells, Rejection::all_invalid);

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        MaternCache cache(cfg.params);
        for (std::size_t i = next++; i < cells; i = next++) {
            const long r = static_cast<long>(i) / map.cols;
            const long c = static_cast<long>(i) % map.cols;
            const Window w{{r * stride, c * stride}, window};
            const LikelihoodProfile prof = search(scene, w, grid, cfg, &cache);
            map.flatness[i] = prof.flatness;
            map.rejection[i] = prof.rejection;
            if (prof.valid) {
                map.valid[i] = 1;
                map.height[i] = prof.candidates[*prof.best].h;
            }
        }
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(cells)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned t = 0; t < workers; ++t)
            pool.emplace_back(worker);
    }
    return map;
}

}  // namespace cloudheight
