#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cloudheight/gauss.hpp"
#include "cloudheight/raster.hpp"

namespace cloudheight {

// Divisor of the per-patch scale estimate sigma_hat^2 = Q / divisor.
enum class SigmaDivisor { m, m_minus_3 };

// Square-root factor S of the inverse filtered covariance (S^T S = inverse).
// R_tilde only depends on S^T S, so both choices give the same likelihood.
enum class RootChoice { cholesky, symmetric };

struct LowCloudOptions {
    double nugget = kDefaultNugget;
    SigmaDivisor divisor = SigmaDivisor::m;
    RootChoice root = RootChoice::cholesky;
    bool newton = true;  // false: plug in the per-patch estimates directly
};

struct SigmaEstimate {
    double value = 0.0;
    bool flat = false;  // the annihilated signal vanished
};

SigmaEstimate sigma_hat(const Patch& patch, const MaternParams& p, const LowCloudOptions& opts = {});

struct NewtonStep {
    Eigen::VectorXd sigma;
    bool accepted = false;  // false: some updated inverse scale was nonpositive
};

// One Newton step on R s - (m - 3) / s = 0 in the inverse scales s, started
// from 1 / sigma_hat. Falls back to sigma_hat when the step leaves the
// positive orthant.
NewtonStep newton_sigma(const Eigen::MatrixXd& inner, const Eigen::VectorXd& sigma_hat, std::size_t m);

struct LowCloudWorkspace {
    std::size_t cameras = 0;      // n
    std::size_t block_size = 0;   // m
    Eigen::MatrixXd filtered_cov;  // L Sigma L^T
    double log_det = 0.0;
    std::vector<Eigen::VectorXd> filtered;  // L_k y_k
    std::vector<Eigen::VectorXd> whitened;  // R_k L_k y_k
    Eigen::MatrixXd inner;                  // <R_i L_i y_i, R_j L_j y_j>
    Eigen::VectorXd sigma_hat;
    NewtonStep newton;
    bool flat = false;
};

// Throws DegenerateError for undersized blocks, unequal block sizes, degenerate
// locations or a filtered covariance that is not positive definite.
LowCloudWorkspace build_low_workspace(const SuperImage& si, const MaternParams& p, const LowCloudOptions& opts = {});
LowCloudWorkspace build_low_workspace(const SuperImage& si, MaternCache& cache, const LowCloudOptions& opts = {});

// -1/2 log|L Sigma L^T| - (m-3) sum log sigma_k - 1/2 sigma^-T R sigma^-1.
double low_cloud_loglik(const LowCloudWorkspace& ws, const Eigen::VectorXd& sigma);

// Evaluated at the Newton (or plug-in) scales. Flat blocks throw DegenerateError.
double low_cloud_loglik(const LowCloudWorkspace& ws, bool newton = true);
double low_cloud_loglik(const SuperImage& si, const MaternParams& p, const LowCloudOptions& opts = {});

struct HighCloudWorkspace {
    std::size_t size = 0;  // nm
    Eigen::MatrixXd filtered_cov;  // H Sigma H^T
    double log_det = 0.0;
    double quad_form = 0.0;  // y^T H^T (H Sigma H^T)^-1 H y
};

HighCloudWorkspace build_high_workspace(const SuperImage& si, const MaternParams& p, double nugget = kDefaultNugget);
HighCloudWorkspace build_high_workspace(const SuperImage& si, MaternCache& cache, double nugget = kDefaultNugget);

// Scale marginalized under a flat prior: -1/2 log|.| - (nm-4)/2 log Q.
double high_cloud_loglik(const HighCloudWorkspace& ws);
double high_cloud_loglik(const SuperImage& si, const MaternParams& p, double nugget = kDefaultNugget);

// Scale profiled out: -1/2 log|.| - (nm-3)/2 log Q.
double high_cloud_profile_loglik(const HighCloudWorkspace& ws);
double high_cloud_profile_loglik(const SuperImage& si, const MaternParams& p, double nugget = kDefaultNugget);

struct ColumnRange {
    long begin = 0;
    long end = 0;  // exclusive
};

struct Gain {
    double gain = 1.0;
    double offset = 0.0;
};

// Per-camera affine brightness map gain * y + offset; the reference camera is (1, 0).
struct StabilizationMap {
    std::vector<Gain> cameras;
    std::size_t reference = 0;
};

// Moment matching of each image to the reference over a column range.
StabilizationMap stabilize(std::span<const Raster> images, ColumnRange region, std::size_t reference);

Raster apply_gain(const Gain& g, const Raster& image);
std::vector<Raster> apply_stabilization(const StabilizationMap& map, std::span<const Raster> images);

struct ColumnProfile {
    std::vector<double> mean;
    std::vector<double> variance;
};

ColumnProfile column_profile(const Raster& image);

// Mean-removed normalized cross-correlation; throws DegenerateError for a flat patch.
double correlation_metric(const Patch& a, const Patch& b);

}  // namespace cloudheight
