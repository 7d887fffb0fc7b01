#include "mcmcnet/analysis.hpp"

#include "mcmcnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

namespace mcmcnet {

double quantile(std::vector<double> v, double p) {
    if (v.empty()) throw InvalidArgument("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto k = static_cast<std::size_t>(std::floor(h));
    if (k + 1 >= v.size()) return v.back();
    return v[k] + (h - static_cast<double>(k)) * (v[k + 1] - v[k]);
}

CredibleBounds credible_bounds(const std::vector<std::vector<double>>& mapped, double level) {
    if (mapped.empty()) throw InvalidArgument("credible bounds need at least one sample");
    if (!(level > 0.0 && level < 0.5)) throw InvalidArgument("credible level must lie in (0, 1/2)");
    const std::size_t n = mapped.front().size();
    for (const auto& m : mapped) {
        if (m.size() != n) throw InvalidArgument("mapped samples differ in length");
    }
    CredibleBounds out{std::vector<double>(n), std::vector<double>(n)};
    std::vector<double> column(mapped.size());
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t s = 0; s < mapped.size(); ++s) column[s] = mapped[s][t];
        std::sort(column.begin(), column.end());
        out.lower[t] = quantile(column, level);
        out.upper[t] = quantile(column, 1.0 - level);
    }
    return out;
}

CredibleBounds credible_bounds(const Chain& chain, const FieldMap& map, double level) {
    if (chain.samples.empty()) throw InvalidArgument("chain has no stored samples");
    std::vector<std::vector<double>> mapped;
    mapped.reserve(chain.samples.size());
    for (const auto& s : chain.samples) mapped.push_back(map({s.data(), static_cast<std::size_t>(s.size())}));
    return credible_bounds(mapped, level);
}

ErrorReport error_metrics(std::span<const double> recon, std::span<const double> truth) {
    if (recon.size() != truth.size() || recon.empty()) throw InvalidArgument("fields differ in support");
    ErrorReport r;
    for (std::size_t i = 0; i < recon.size(); ++i) {
        const double e = std::abs(recon[i] - truth[i]);
        r.mae += e;
        r.mse += e * e;
        r.linf = std::max(r.linf, e);
    }
    r.mae /= static_cast<double>(recon.size());
    r.mse /= static_cast<double>(recon.size());
    return r;
}

ErrorReport error_metrics(const ParamField& recon, const ParamField& truth) {
    if (recon.mesh_id != truth.mesh_id) throw InvalidArgument("fields live on different meshes");
    return error_metrics(recon.values, truth.values);
}

double masked_mae(std::span<const double> recon, std::span<const double> truth, const std::vector<bool>& mask) {
    if (recon.size() != truth.size() || mask.size() != truth.size()) throw InvalidArgument("support mismatch");
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        s += std::abs(recon[i] - truth[i]);
        ++n;
    }
    if (n == 0) throw InvalidArgument("empty mask");
    return s / static_cast<double>(n);
}

double hellinger_from_potentials(std::span<const double> phi, std::span<const double> phi_theta) {
    if (phi.size() != phi_theta.size() || phi.empty()) throw InvalidArgument("potential samples differ in count");
    const std::size_t n = phi.size();
    // Shift by the smallest potential so the largest weight is exp(0).
    const double m = *std::min_element(phi.begin(), phi.end());
    const double m_theta = *std::min_element(phi_theta.begin(), phi_theta.end());
    if (!std::isfinite(m) || !std::isfinite(m_theta)) throw InvalidArgument("potentials must be finite");
    std::vector<double> a(n), b(n);
    double za = 0.0, zb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = std::exp(-(phi[i] - m));
        b[i] = std::exp(-(phi_theta[i] - m_theta));
        za += a[i];
        zb += b[i];
    }
    za /= static_cast<double>(n);
    zb /= static_cast<double>(n);
    if (!(za > 0.0) || !(zb > 0.0)) throw SolverError("Hellinger normalizer underflowed; rescale the data");
    double h2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::sqrt(a[i] / za) - std::sqrt(b[i] / zb);
        h2 += d * d;
    }
    h2 = 0.5 * h2 / static_cast<double>(n);
    return std::sqrt(h2);
}

double hellinger_estimate(const GPPrior& prior, const Potential& phi, const Potential& phi_theta,
                          std::size_t n_samples, Rng& rng) {
    if (n_samples < 100) throw InvalidArgument("Hellinger estimate needs at least 100 samples");
    std::vector<double> p(n_samples), pt(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const Eigen::VectorXd w = sample_gp(prior, rng);
        p[i] = phi(w);
        pt[i] = phi_theta(w);
    }
    return hellinger_from_potentials(p, pt);
}

double surrogate_l2mu_error(const ForwardBackend& fem, const ForwardBackend& net,
                            const std::vector<Eigen::VectorXd>& draws) {
    if (draws.empty()) throw InvalidArgument("need at least one draw");
    double s = 0.0;
    for (const auto& w : draws) {
        const std::span<const double> q(w.data(), static_cast<std::size_t>(w.size()));
        const Eigen::MatrixXd a = fem.evaluate(q);
        const Eigen::MatrixXd b = net.evaluate(q);
        if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("backend output shapes differ");
        s += (a - b).squaredNorm();
    }
    return std::sqrt(s / static_cast<double>(draws.size()));
}

double surrogate_l2mu_error(const ForwardBackend& fem, const ForwardBackend& net, const GPPrior& prior,
                            std::size_t n_samples, Rng& rng) {
    std::vector<Eigen::VectorXd> draws;
    draws.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) draws.push_back(sample_gp(prior, rng));
    return surrogate_l2mu_error(fem, net, draws);
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

} // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("spearman needs two equal-length samples");
    const auto rx = ranks(x), ry = ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

std::vector<ScalingRow> scaling_study(const ProblemConfig& base, const ScalingConfig& cfg) {
    if (cfg.refinements.size() < 3) throw InvalidArgument("scaling study needs at least 3 refinement levels");
    if (cfg.iterations < 1) throw InvalidArgument("scaling study needs at least one iteration");
    std::vector<ScalingRow> rows;
    for (int ref : cfg.refinements) {
        ProblemConfig pc = base;
        pc.refinement = ref;
        const InverseProblem problem(pc);
        const auto [lo, hi] = problem.bounds();
        const ParamField truth = problem.circle_phantom({{{0.3, 0.2}, 0.25, hi > problem.background() ? hi : lo}});
        Rng rng(cfg.seed);
        const Measurement y = add_noise(problem.measure(truth), cfg.noise_level, rng);
        const double sigma = y.noise_sigma > 0.0 ? y.noise_sigma : 1.0;

        NetArchitecture arch = cfg.arch;
        arch.input_dim = problem.input_dim();
        const FemBackend fem(problem);
        const SurrogateBackend net(problem, SurrogateNet::he_init(arch, cfg.seed));
        const TimedBackend timed_fem(fem), timed_net(net);

        PcnConfig pcn;
        pcn.burn_in = cfg.iterations;
        pcn.samples = 0;
        pcn.noise_sigma = sigma;
        pcn.seed = cfg.seed;
        const Eigen::VectorXd q0 = Eigen::VectorXd::Zero(problem.prior().dim());
        run_chain(pcn, problem.prior(), timed_fem, y.data, q0);
        run_chain(pcn, problem.prior(), timed_net, y.data, q0);

        rows.push_back({ref, problem.latent_dim(), problem.mesh().tri_count(), cfg.iterations, timed_fem.seconds(),
                        timed_net.seconds()});
    }
    return rows;
}

void write_field_csv(std::ostream& out, const TriMesh& mesh, std::span<const double> values) {
    if (values.size() != mesh.tri_count()) throw InvalidArgument("field must hold one value per triangle");
    const auto cents = centroids(mesh);
    out << "element_id,x_centroid,y_centroid,value\n" << std::setprecision(17);
    for (std::size_t t = 0; t < values.size(); ++t) {
        out << t << ',' << cents[t].x << ',' << cents[t].y << ',' << values[t] << '\n';
    }
}

void write_metrics_csv(std::ostream& out, const std::string& label, const ErrorReport& r, bool header) {
    if (header) out << "label,mae,mse,linf,inv_time_seconds\n";
    out << std::setprecision(17) << label << ',' << r.mae << ',' << r.mse << ',' << r.linf << ','
        << r.inv_time_seconds << '\n';
}

void write_scaling_csv(std::ostream& out, const std::vector<ScalingRow>& rows) {
    out << "dim,fem_seconds,net_seconds\n" << std::setprecision(17);
    for (const auto& r : rows) out << r.dim << ',' << r.fem_seconds << ',' << r.net_seconds << '\n';
}

} // namespace mcmcnet
