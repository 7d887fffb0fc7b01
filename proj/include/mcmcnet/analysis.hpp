#pragma once

#include "mcmcnet/fem.hpp"
#include "mcmcnet/mcmc.hpp"
#include "mcmcnet/problem.hpp"
#include "mcmcnet/surrogate.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mcmcnet {

/// Linear interpolation between order statistics (type 7). Sorts `v`.
double quantile(std::vector<double> v, double p);

struct CredibleBounds {
    std::vector<double> lower;
    std::vector<double> upper;
};

using FieldMap = std::function<std::vector<double>(std::span<const double>)>;

/// Per element, the `level` and `1 - level` quantiles of map(sample) over the
/// stored samples.
CredibleBounds credible_bounds(const Chain& chain, const FieldMap& map, double level = 0.2);
/// Same, from already mapped samples (one vector per sample).
CredibleBounds credible_bounds(const std::vector<std::vector<double>>& mapped, double level = 0.2);

struct ErrorReport {
    double mae = 0.0;
    double mse = 0.0;
    double linf = 0.0;
    double inv_time_seconds = 0.0;
};

ErrorReport error_metrics(std::span<const double> recon, std::span<const double> truth);
/// Rejects fields from different meshes.
ErrorReport error_metrics(const ParamField& recon, const ParamField& truth);

/// Mean absolute error over the elements where `mask` is true.
double masked_mae(std::span<const double> recon, std::span<const double> truth, const std::vector<bool>& mask);

using Potential = std::function<double(const Eigen::VectorXd&)>;

/// Self-normalized Monte Carlo estimate of the Hellinger distance between
/// the posteriors exp(-phi) and exp(-phi_theta) relative to the prior, over
/// `n_samples` shared prior draws.
double hellinger_estimate(const GPPrior& prior, const Potential& phi, const Potential& phi_theta,
                          std::size_t n_samples, Rng& rng);
/// The same estimator from potential values at shared draws.
double hellinger_from_potentials(std::span<const double> phi, std::span<const double> phi_theta);

/// sqrt(mean over prior draws of ||G(w) - G_theta(w)||_F^2).
double surrogate_l2mu_error(const ForwardBackend& fem, const ForwardBackend& net, const GPPrior& prior,
                            std::size_t n_samples, Rng& rng);
/// The same over a fixed list of draws.
double surrogate_l2mu_error(const ForwardBackend& fem, const ForwardBackend& net,
                            const std::vector<Eigen::VectorXd>& draws);

/// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> x, std::span<const double> y);

struct ScalingRow {
    int refinement = 0;
    std::size_t dim = 0;
    std::size_t triangles = 0;
    int iterations = 0;
    double fem_seconds = 0.0;
    double net_seconds = 0.0;
};

struct ScalingConfig {
    std::vector<int> refinements{2, 3, 4};
    int iterations = 200;
    NetArchitecture arch{};
    double noise_level = 0.01;
    std::uint64_t seed = 1;
};

/// For every refinement, runs a fixed-iteration chain with each backend on a
/// single-circle phantom. Times are the seconds spent in forward
/// evaluations; the network is He-initialized since only its cost matters.
std::vector<ScalingRow> scaling_study(const ProblemConfig& base, const ScalingConfig& cfg);

/// `element_id,x_centroid,y_centroid,value`.
void write_field_csv(std::ostream& out, const TriMesh& mesh, std::span<const double> values);
/// Header `label,mae,mse,linf,inv_time_seconds` when `header` is set, then one row.
void write_metrics_csv(std::ostream& out, const std::string& label, const ErrorReport& r, bool header);
/// `dim,fem_seconds,net_seconds`.
void write_scaling_csv(std::ostream& out, const std::vector<ScalingRow>& rows);

} // namespace mcmcnet
