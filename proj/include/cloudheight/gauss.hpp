#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <unordered_map>

#include <Eigen/Dense>

#include "cloudheight/raster.hpp"

namespace cloudheight {

// Matern covariance parameters. K(0) = sigma.
struct MaternParams {
    double sigma = 1.0;
    double rho = 4.0;  // range, pixel units
    double nu = 4.0 / 3.0;
};

void validate(const MaternParams& p);

// Diagonal inflation applied to every covariance assembly, in units of sigma.
inline constexpr double kDefaultNugget = 1e-8;

/// Modified Bessel function of the second kind, K_nu(x), for real nu and x > 0.
///
/// Temme's series for x < 2 and Steed's continued fraction (CF2) otherwise,
/// both evaluated at the reduced order |mu| <= 1/2 and carried to nu by
/// forward recurrence. Throws DomainError for x <= 0.
double bessel_k(double nu, double x);

// sigma / (2^(nu-1) Gamma(nu)) z^nu K_nu(z), z = 2 sqrt(nu) r / rho.
double matern(double r, const MaternParams& p);

// Memoizes matern() by squared distance. Not thread-safe; keep one per worker.
class MaternCache {
public:
    explicit MaternCache(const MaternParams& p);

    double operator()(double squared_distance);
    [[nodiscard]] const MaternParams& params() const { return params_; }

    static constexpr std::size_t kMaxEntries = std::size_t{1} << 20;

private:
    MaternParams params_;
    std::unordered_map<double, double> table_;
};

// Sigma_ij = K(|x_i - x_j|) + nugget * sigma * [i == j].
Eigen::MatrixXd cov_matrix(std::span<const Point2> coords, const MaternParams& p, double nugget = kDefaultNugget);
Eigen::MatrixXd cov_matrix(std::span<const Point2> coords, MaternCache& cache, double nugget = kDefaultNugget);

// Power-law generalized covariance sigma^2 |scale (s - t)|^exponent, pinned to
// zero at three anchor points so that it becomes an ordinary PSD covariance.
struct GenCovParams {
    double sigma = 15.0;
    double exponent = 8.0 / 3.0;
    double space_scale = 10.0;
    // (row, col) = (y, x): corners (0,0), (0, 6/500) and (1, 0) of the strip.
    std::array<Point2, 3> anchors{Point2{0.0, 0.0}, Point2{0.0, 6.0 / 500.0}, Point2{1.0, 0.0}};
};

void validate(const GenCovParams& g);

double power_law(double r, const GenCovParams& g);

// Degree-1 Lagrange basis of the anchors evaluated at s.
std::array<double, 3> anchor_lagrange(const Point2& s, const GenCovParams& g);

Eigen::MatrixXd sim_cov_matrix(std::span<const Point2> coords, const GenCovParams& g);

// Eigen-factored sampler: factor once, draw many. Eigenvalues down to
// -kPsdTolerance * max are clamped to zero; anything lower throws.
class GaussianSampler {
public:
    explicit GaussianSampler(const Eigen::MatrixXd& cov);

    [[nodiscard]] Eigen::VectorXd draw(std::uint64_t seed) const;
    [[nodiscard]] Eigen::Index size() const { return factor_.rows(); }

    static constexpr double kPsdTolerance = 1e-8;

private:
    Eigen::MatrixXd factor_;  // V diag(sqrt(lambda))
};

Eigen::VectorXd sample_gaussian(const Eigen::MatrixXd& cov, std::uint64_t seed);

}  // namespace cloudheight
