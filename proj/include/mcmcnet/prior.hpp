#pragma once

#include "mcmcnet/fem.hpp"
#include "mcmcnet/mesh.hpp"

#include <Eigen/Dense>

#include <random>
#include <span>
#include <vector>

namespace mcmcnet {

using Rng = std::mt19937_64;

struct MaternParams {
    double nu = 3.0;
    double ell = 0.4;
};

/// Matern correlation k(d) = 2^{1-nu}/Gamma(nu) (d sqrt(2 nu)/ell)^nu K_nu(d sqrt(2 nu)/ell),
/// with k(0) = 1.
double matern(double d, const MaternParams& p);

/// Zero-mean Gaussian prior on R^n given by its covariance and a lower
/// Cholesky factor of cov + jitter * I.
struct GPPrior {
    Eigen::MatrixXd cov;
    Eigen::MatrixXd chol;
    double jitter = 0.0;

    Eigen::Index dim() const { return cov.rows(); }
};

/// Jitter values tried, in order, after the requested one fails.
inline constexpr double kJitterLadder[] = {1e-10, 1e-8, 1e-6};

/// Dense Matern covariance over `points`. The factorization retries with the
/// jitter ladder and throws SolverError once it is exhausted.
GPPrior build_prior(std::span<const Point> points, const MaternParams& p, double jitter = 0.0);

/// Independent components with the given variances.
GPPrior diagonal_prior(std::span<const double> variances);

/// Factor an arbitrary symmetric covariance with the same jitter ladder.
GPPrior factor_prior(Eigen::MatrixXd cov, double jitter = 0.0);

Eigen::VectorXd sample_gp(const GPPrior& prior, Rng& rng);

struct LevelSetSpec {
    std::vector<double> thresholds{-1e9, 0.0, 1e9};
    std::vector<double> values{1.0, 2.0};
};

/// Throws InvalidArgument for non-increasing thresholds, non-positive values
/// or a size mismatch.
void validate(const LevelSetSpec& spec);

/// Band lookup: values[i] where thresholds[i] <= w < thresholds[i+1];
/// clamped to the first/last value outside [c_0, c_M).
std::vector<double> level_set_map(std::span<const double> w, const LevelSetSpec& spec);

/// Radial function psi(t) = a0 + sum_k a_k cos(k t) + b_k sin(k t).
struct FourierSeries {
    double a0 = 0.0;
    std::vector<double> a;
    std::vector<double> b;

    int order() const { return static_cast<int>(a.size()); }
    double operator()(double theta) const;
};

struct StarInclusion {
    Point center;
    FourierSeries psi;
    double kappa = 1.0;
};

/// Inclusions are tested in order; the first one containing a centroid wins.
struct StarShapeSpec {
    std::vector<StarInclusion> inclusions;
    double background = 0.05;
};

/// Membership test r <= exp(psi(theta)) in polar coordinates about the center.
bool inside_star(const StarInclusion& inc, const Point& p);

ParamField star_shape_map(const TriMesh& mesh, const StarShapeSpec& spec);

/// a_k, b_k ~ N(0, k^{-2 decay}), a0 ~ N(0, const_variance).
FourierSeries sample_star_prior(int K, double decay, Rng& rng, double const_variance = 1.0);

/// Prior variances in the order used by `FourierSeries` packing: a0, a_1..a_K, b_1..b_K.
std::vector<double> star_prior_variances(int K, double decay, double const_variance = 1.0);

/// Pack/unpack a series as [a0, a_1..a_K, b_1..b_K].
std::vector<double> pack(const FourierSeries& s);
FourierSeries unpack(std::span<const double> coeffs, int K);

} // namespace mcmcnet
