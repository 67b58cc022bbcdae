#include "cloudheight/simstudy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include "cloudheight/errors.hpp"
#include "cloudheight/likelihood.hpp"

namespace cloudheight {

void validate(const SimConfig& cfg)
{
    validate(cfg.gen);
    validate(cfg.params);
    if (cfg.fine_rows < 3 || cfg.cols < 1 || cfg.subsample != 3)
        throw ConfigError("strip needs at least 3 fine rows and three interleaved images");
    if (cfg.patch_rows < 1 || cfg.patch_cols < 1 || cfg.patch_cols > cfg.cols || cfg.patch_rows * cfg.patch_cols <= 3)
        throw ConfigError("patch must hold more than 3 pixels and fit across the strip");
    if (!(cfg.d_step > 0.0) || !(cfg.d_min <= cfg.d_max))
        throw ConfigError("d grid must have positive spacing and d_min <= d_max");
    if (!(cfg.wrong_nu > 0.0))
        throw ConfigError("wrong_nu must be positive");
    const long anchor = anchor_fine_row(cfg);
    if (anchor < 0 || anchor + (cfg.patch_rows - 1) * cfg.subsample >= cfg.fine_rows)
        throw ConfigError("patch anchor lies outside the strip");
}

double fine_dy(const SimConfig& cfg) { return cfg.strip_length / static_cast<double>(cfg.fine_rows - 1); }

long anchor_fine_row(const SimConfig& cfg)
{
    return std::lround(cfg.patch_anchor / fine_dy(cfg));
}

std::array<long, 3> image_phases(const SimConfig& cfg)
{
    const long third = anchor_fine_row(cfg) % 3;
    return {(third + 1) % 3, (third + 2) % 3, third};
}

StripSimulator::StripSimulator(const SimConfig& cfg) : cfg_(cfg)
{
    validate(cfg);
    const double dx = cfg.cols > 1 ? cfg.strip_width / static_cast<double>(cfg.cols - 1) : 0.0;
    for (long r = 0; r < cfg.fine_rows; ++r)
        for (long c = 0; c < cfg.cols; ++c)
            coords_.push_back({static_cast<double>(r) * cfg.strip_length / static_cast<double>(cfg.fine_rows - 1),
                               static_cast<double>(c) * dx});

    for (std::size_t i = 0; i < coords_.size(); ++i) {
        const bool at_anchor = std::any_of(cfg.gen.anchors.begin(), cfg.gen.anchors.end(), [&](const Point2& u) {
            return u.row == coords_[i].row && u.col == coords_[i].col;
        });
        (at_anchor ? pinned_ : free_).push_back(i);
    }
    std::vector<Point2> free_coords;
    free_coords.reserve(free_.size());
    for (const auto i : free_)
        free_coords.push_back(coords_[i]);
    sampler_.emplace(sim_cov_matrix(free_coords, cfg.gen));
}

Raster StripSimulator::draw(std::uint64_t seed) const
{
    const Eigen::VectorXd z = sampler_->draw(seed);
    Raster field(cfg_.fine_rows, cfg_.cols, fine_dy(cfg_));
    for (std::size_t k = 0; k < free_.size(); ++k)
        field.values[free_[k]] = z(static_cast<Eigen::Index>(k));
    for (const auto i : pinned_)
        field.values[i] = 0.0;
    return field;
}

Raster simulate_strip(const SimConfig& cfg, std::uint64_t seed) { return StripSimulator(cfg).draw(seed); }

namespace {

Raster subsample_rows(const Raster& field, long phase, long step, double gain)
{
    const long rows = (field.rows - 1 - phase) / step + 1;
    Raster out(rows, field.cols, field.pitch * static_cast<double>(step));
    for (long i = 0; i < rows; ++i)
        for (long c = 0; c < field.cols; ++c)
            out(i, c) = gain * field(phase + i * step, c);
    return out;
}

}  // namespace

SimImages extract_three_images(const Raster& field, const SimConfig& cfg)
{
    if (field.rows < 3)
        throw DomainError("strip needs at least 3 fine rows");
    SimImages out;
    out.phases = image_phases(cfg);
    out.image1 = subsample_rows(field, out.phases[0], cfg.subsample, 1.0);
    out.image2 = subsample_rows(field, out.phases[1], cfg.subsample, cfg.strip2_gain);

    const long first = (anchor_fine_row(cfg) - out.phases[2]) / cfg.subsample;
    out.patch_raster = Raster(cfg.patch_rows, cfg.patch_cols, field.pitch * static_cast<double>(cfg.subsample));
    for (long a = 0; a < cfg.patch_rows; ++a)
        for (long b = 0; b < cfg.patch_cols; ++b)
            out.patch_raster(a, b) = cfg.patch_gain * field(out.phases[2] + (first + a) * cfg.subsample, b);
    out.patch = extract_patch(out.patch_raster, {0, 0}, {cfg.patch_rows, cfg.patch_cols}, PixelShift{});
    return out;
}

std::string_view to_string(Method m)
{
    switch (m) {
    case Method::full: return "full";
    case Method::pairwise: return "pairwise";
    case Method::no_newton: return "no_newton";
    case Method::baseline: return "baseline";
    case Method::wrong_nu: return "wrong_nu";
    }
    return "?";
}

Method parse_method(std::string_view text)
{
    for (const auto m : kAllMethods)
        if (to_string(m) == text)
            return m;
    throw ConfigError("unknown method '" + std::string(text) + "'");
}

double patch_position(const SimConfig& cfg, const SimImages& images, int which, double d)
{
    const double y = which == 0 ? d : (1.0 + cfg.kappa) * cfg.patch_anchor - cfg.kappa * d;
    const double fine = y / fine_dy(cfg);
    return (fine - static_cast<double>(images.phases[static_cast<std::size_t>(which)])) / static_cast<double>(cfg.subsample);
}

std::vector<double> d_grid(const SimConfig& cfg)
{
    std::vector<double> out;
    const auto count = static_cast<long>(std::floor((cfg.d_max - cfg.d_min) / cfg.d_step + 1e-9));
    out.reserve(static_cast<std::size_t>(count + 1));
    for (long k = 0; k <= count; ++k)
        out.push_back(cfg.d_min + static_cast<double>(k) * cfg.d_step);
    return out;
}

namespace {

struct Evaluator {
    const SimConfig& cfg;
    const SimImages& images;
    MaternCache model;
    MaternCache wrong;

    Evaluator(const SimConfig& c, const SimImages& i)
        : cfg(c), images(i), model(c.params), wrong(MaternParams{c.params.sigma, c.params.rho, c.wrong_nu})
    {
    }

    // Scores of every requested method at one d; NaN marks a skipped candidate.
    void score(double d, std::span<const Method> methods, std::span<double> out)
    {
        std::fill(out.begin(), out.end(), std::numeric_limits<double>::quiet_NaN());
        const WindowSize size{cfg.patch_rows, cfg.patch_cols};
        const PixelShift s1 = make_shift(patch_position(cfg, images, 0, d), 0.0);
        const PixelShift s2 = make_shift(patch_position(cfg, images, 1, d), 0.0);
        if (!window_fits(images.image1, {0, 0}, size, s1) || !window_fits(images.image2, {0, 0}, size, s2))
            return;
        const std::array<Patch, 3> patches{images.patch, extract_patch(images.image1, {0, 0}, size, s1),
                                           extract_patch(images.image2, {0, 0}, size, s2)};

        std::optional<LowCloudWorkspace> full;
        LowCloudOptions opts;
        opts.nugget = cfg.nugget;
        for (std::size_t i = 0; i < methods.size(); ++i) {
            try {
                switch (methods[i]) {
                case Method::full:
                case Method::no_newton:
                    if (!full)
                        full = build_low_workspace(interlace(patches), model, opts);
                    out[i] = low_cloud_loglik(*full, methods[i] == Method::full);
                    break;
                case Method::pairwise: {
                    const std::array<Patch, 2> a{patches[0], patches[1]};
                    const std::array<Patch, 2> b{patches[0], patches[2]};
                    out[i] = low_cloud_loglik(build_low_workspace(interlace(a), model, opts)) +
                             low_cloud_loglik(build_low_workspace(interlace(b), model, opts));
                    break;
                }
                case Method::wrong_nu:
                    out[i] = low_cloud_loglik(build_low_workspace(interlace(patches), wrong, opts));
                    break;
                case Method::baseline: {
                    PixelShift n1 = s1;
                    PixelShift n2 = s2;
                    n1.frac_along = n2.frac_along = 0.0;
                    out[i] = correlation_metric(patches[0], extract_patch(images.image1, {0, 0}, size, n1)) +
                             correlation_metric(patches[0], extract_patch(images.image2, {0, 0}, size, n2));
                    break;
                }
                }
            } catch (const DegenerateError&) {
                out[i] = std::numeric_limits<double>::quiet_NaN();
            }
        }
    }
};

}  // namespace

DProfile d_profile(const SimImages& images, Method method, const SimConfig& cfg)
{
    Evaluator ev(cfg, images);
    DProfile prof;
    prof.d = d_grid(cfg);
    prof.score.resize(prof.d.size());
    const std::array<Method, 1> one{method};
    for (std::size_t k = 0; k < prof.d.size(); ++k)
        ev.score(prof.d[k], one, std::span<double>(&prof.score[k], 1));
    return prof;
}

std::vector<double> estimate_d(const SimImages& images, std::span<const Method> methods, const SimConfig& cfg)
{
    Evaluator ev(cfg, images);
    const auto grid = d_grid(cfg);
    std::vector<double> best(methods.size(), -std::numeric_limits<double>::infinity());
    std::vector<double> arg(methods.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<double> scores(methods.size());
    for (const double d : grid) {
        ev.score(d, methods, scores);
        for (std::size_t i = 0; i < methods.size(); ++i) {
            if (std::isfinite(scores[i]) && scores[i] > best[i]) {
                best[i] = scores[i];
                arg[i] = d;
            }
        }
    }
    return arg;
}

double estimate_d(const SimImages& images, Method method, const SimConfig& cfg)
{
    const std::array<Method, 1> one{method};
    return estimate_d(images, one, cfg).front();
}

std::uint64_t rep_seed(std::uint64_t master_seed, std::uint64_t rep)
{
    std::uint64_t z = master_seed + (rep + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<MethodResult> run_table1(const SimConfig& cfg, std::span<const Method> methods, std::size_t reps,
                                     std::uint64_t master_seed, unsigned workers)
{
    if (reps == 0)
        throw ConfigError("reps must be at least 1");
    if (methods.empty())
        throw ConfigError("no methods requested");
    const StripSimulator sim(cfg);

    std::vector<std::vector<double>> per_rep(reps);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t r = next++; r < reps; r = next++) {
            const SimImages images = extract_three_images(sim.draw(rep_seed(master_seed, r)), cfg);
            per_rep[r] = estimate_d(images, methods, cfg);
        }
    };
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(reps)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < workers; ++t)
            pool.emplace_back(worker);
    }

    std::vector<MethodResult> results;
    for (std::size_t i = 0; i < methods.size(); ++i) {
        MethodResult res;
        res.method = methods[i];
        double sum = 0.0;
        double sq = 0.0;
        for (std::size_t r = 0; r < reps; ++r) {
            const double e = per_rep[r][i];
            res.estimates.push_back(e);
            sum += e;
            sq += (e - cfg.patch_anchor) * (e - cfg.patch_anchor);
        }
        res.mean = sum / static_cast<double>(reps);
        res.rmse = std::sqrt(sq / static_cast<double>(reps));
        results.push_back(std::move(res));
    }
    return results;
}

std::string table1_csv(std::span<const MethodResult> results, std::size_t reps, std::uint64_t master_seed)
{
    std::string out = "method,mean,rmse,reps,master_seed\n";
    char line[256];
    for (const auto& r : results) {
        std::snprintf(line, sizeof line, "%s,%.8f,%.6e,%zu,%llu\n", std::string(to_string(r.method)).c_str(), r.mean,
                      r.rmse, reps, static_cast<unsigned long long>(master_seed));
        out += line;
    }
    return out;
}

}  // namespace cloudheight
