#include "cloudheight/scene.hpp"

#include <map>
#include <random>
#include <utility>

#include "cloudheight/errors.hpp"

namespace cloudheight {

void validate(const SceneConfig& cfg)
{
    if (cfg.cameras.empty())
        throw ConfigError("scene needs at least one camera");
    for (const auto& c : cfg.cameras)
        validate(c);
    if (cfg.rows < 1 || cfg.cols < 1)
        throw ConfigError("scene rasters must be nonempty");
    if (!(cfg.pitch > 0.0))
        throw ConfigError("pixel pitch must be positive");
    validate(cfg.params);
    if (!(cfg.nugget >= 0.0))
        throw ConfigError("nugget must be nonnegative");
    if (!cfg.gains.empty() && cfg.gains.size() != cfg.cameras.size())
        throw ConfigError("scene gains must be empty or one per camera");
}

SceneSimulator::SceneSimulator(SceneConfig cfg) : cfg_(std::move(cfg))
{
    validate(cfg_);
    std::map<std::pair<double, double>, std::size_t> index;
    std::vector<Point2> sites;
    const CameraSpec& ref = cfg_.cameras.front();
    for (const auto& cam : cfg_.cameras) {
        const PixelShift s = shift_for_camera(cfg_.truth, cam, ref, cfg_.pitch);
        for (long r = 0; r < cfg_.rows; ++r) {
            for (long c = 0; c < cfg_.cols; ++c) {
                const Point2 p{static_cast<double>(r) - s.along, static_cast<double>(c) - s.across};
                const auto [it, fresh] = index.try_emplace({p.row, p.col}, sites.size());
                if (fresh)
                    sites.push_back(p);
                site_of_pixel_.push_back(it->second);
            }
        }
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(cov_matrix(sites, cfg_.params, cfg_.nugget));
    if (llt.info() != Eigen::Success)
        throw DegenerateError("scene covariance is not positive definite");
    factor_ = llt.matrixL();
}

std::vector<Raster> SceneSimulator::draw(std::uint64_t seed) const
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(factor_.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i)
        z(i) = normal(rng);
    const Eigen::VectorXd field = factor_.triangularView<Eigen::Lower>() * z;

    std::vector<Raster> out;
    const auto per_camera = static_cast<std::size_t>(cfg_.rows * cfg_.cols);
    for (std::size_t k = 0; k < cfg_.cameras.size(); ++k) {
        Raster img(cfg_.rows, cfg_.cols, cfg_.pitch);
        const Gain g = cfg_.gains.empty() ? Gain{} : cfg_.gains[k];
        for (std::size_t i = 0; i < per_camera; ++i)
            img.values[i] = g.gain * field(static_cast<Eigen::Index>(site_of_pixel_[k * per_camera + i])) + g.offset;
        out.push_back(std::move(img));
    }
    return out;
}

std::vector<Raster> simulate_scene(const SceneConfig& cfg, std::uint64_t seed) { return SceneSimulator(cfg).draw(seed); }

}  // namespace cloudheight
