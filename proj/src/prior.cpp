#include "mcmcnet/prior.hpp"

#include "mcmcnet/error.hpp"
#include "mcmcnet/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace mcmcnet {

double matern(double d, const MaternParams& p) {
    const double x = d * std::sqrt(2.0 * p.nu) / p.ell;
    if (x < 1e-12) return 1.0;
    const double k = std::cyl_bessel_k(p.nu, x);
    if (k == 0.0) return 0.0;
    return std::exp((1.0 - p.nu) * std::log(2.0) - std::lgamma(p.nu) + p.nu * std::log(x) + std::log(k));
}

GPPrior factor_prior(Eigen::MatrixXd cov, double jitter) {
    if (cov.rows() < 1 || cov.rows() != cov.cols()) throw InvalidArgument("covariance must be square and nonempty");
    if (!(jitter >= 0.0)) throw InvalidArgument("jitter must be nonnegative");
    std::vector<double> attempts{jitter};
    for (double j : kJitterLadder) {
        if (j > jitter) attempts.push_back(j);
    }
    for (double j : attempts) {
        Eigen::MatrixXd shifted = cov;
        shifted.diagonal().array() += j;
        Eigen::LLT<Eigen::MatrixXd> llt(shifted);
        if (llt.info() != Eigen::Success) continue;
        Eigen::MatrixXd l = llt.matrixL();
        if (!(l.diagonal().minCoeff() > 0.0)) continue;
        GPPrior prior;
        prior.cov = std::move(cov);
        prior.chol = std::move(l);
        prior.jitter = j;
        return prior;
    }
    throw SolverError("covariance factorization failed after jitter " + std::to_string(attempts.back()));
}

GPPrior build_prior(std::span<const Point> points, const MaternParams& p, double jitter) {
    if (points.empty()) throw InvalidArgument("prior needs at least one point");
    if (!(p.nu > 0.0 && p.ell > 0.0)) throw InvalidArgument("Matern parameters must be positive");
    return factor_prior(kernels::parallel::matern_covariance(points, p), jitter);
}

GPPrior diagonal_prior(std::span<const double> variances) {
    if (variances.empty()) throw InvalidArgument("prior needs at least one component");
    GPPrior prior;
    const Eigen::Index n = static_cast<Eigen::Index>(variances.size());
    prior.cov = Eigen::MatrixXd::Zero(n, n);
    prior.chol = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(variances[i] > 0.0)) throw InvalidArgument("prior variances must be positive");
        prior.cov(i, i) = variances[i];
        prior.chol(i, i) = std::sqrt(variances[i]);
    }
    return prior;
}

Eigen::VectorXd sample_gp(const GPPrior& prior, Rng& rng) {
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(prior.dim());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    return prior.chol.triangularView<Eigen::Lower>() * z;
}

void validate(const LevelSetSpec& spec) {
    if (spec.values.empty()) throw InvalidArgument("level set needs at least one band");
    if (spec.thresholds.size() != spec.values.size() + 1) {
        throw InvalidArgument("level set needs one more threshold than values");
    }
    for (std::size_t i = 1; i < spec.thresholds.size(); ++i) {
        if (!(spec.thresholds[i] > spec.thresholds[i - 1])) {
            throw InvalidArgument("level-set thresholds must be strictly increasing");
        }
    }
    for (double v : spec.values) {
        if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("level-set values must be positive");
    }
}

std::vector<double> level_set_map(std::span<const double> w, const LevelSetSpec& spec) {
    validate(spec);
    const auto& c = spec.thresholds;
    std::vector<double> out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (std::isnan(w[i])) throw InvalidArgument("level-set function is NaN");
        // number of interior thresholds c_1..c_{M-1} that are <= w
        const auto band = std::upper_bound(c.begin() + 1, c.end() - 1, w[i]) - (c.begin() + 1);
        out[i] = spec.values[static_cast<std::size_t>(band)];
    }
    return out;
}

double FourierSeries::operator()(double theta) const {
    double v = a0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double m = static_cast<double>(k + 1);
        v += a[k] * std::cos(m * theta) + b[k] * std::sin(m * theta);
    }
    return v;
}

bool inside_star(const StarInclusion& inc, const Point& p) {
    const double dx = p.x - inc.center.x;
    const double dy = p.y - inc.center.y;
    const double r = std::hypot(dx, dy);
    if (r == 0.0) return true;
    return r <= std::exp(inc.psi(std::atan2(dy, dx)));
}

ParamField star_shape_map(const TriMesh& mesh, const StarShapeSpec& spec) {
    ParamField field{FieldKind::qpat_absorption, std::vector<double>(mesh.tri_count(), spec.background), mesh.id};
    const auto cents = centroids(mesh);
    for (std::size_t t = 0; t < cents.size(); ++t) {
        for (const auto& inc : spec.inclusions) {
            if (inside_star(inc, cents[t])) {
                field.values[t] = inc.kappa;
                break;
            }
        }
    }
    return field;
}

std::vector<double> star_prior_variances(int K, double decay, double const_variance) {
    if (K < 0) throw InvalidArgument("Fourier order must be nonnegative");
    if (!(decay > 0.5)) throw InvalidArgument("coefficient decay must exceed 1/2");
    std::vector<double> var{const_variance};
    for (int pass = 0; pass < 2; ++pass) {
        for (int k = 1; k <= K; ++k) var.push_back(std::pow(static_cast<double>(k), -2.0 * decay));
    }
    return var;
}

FourierSeries sample_star_prior(int K, double decay, Rng& rng, double const_variance) {
    const auto var = star_prior_variances(K, decay, const_variance);
    std::normal_distribution<double> normal;
    std::vector<double> coeffs(var.size());
    for (std::size_t i = 0; i < var.size(); ++i) coeffs[i] = std::sqrt(var[i]) * normal(rng);
    return unpack(coeffs, K);
}

std::vector<double> pack(const FourierSeries& s) {
    std::vector<double> out{s.a0};
    out.insert(out.end(), s.a.begin(), s.a.end());
    out.insert(out.end(), s.b.begin(), s.b.end());
    return out;
}

FourierSeries unpack(std::span<const double> coeffs, int K) {
    if (coeffs.size() != static_cast<std::size_t>(2 * K + 1)) throw InvalidArgument("coefficient count must be 2K+1");
    FourierSeries s;
    s.a0 = coeffs[0];
    s.a.assign(coeffs.begin() + 1, coeffs.begin() + 1 + K);
    s.b.assign(coeffs.begin() + 1 + K, coeffs.end());
    return s;
}

} // namespace mcmcnet
