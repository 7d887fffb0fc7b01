#include "mcmcnet/mcmc.hpp"

#include "mcmcnet/binary_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace mcmcnet {

std::string to_string(BackendKind kind) { return kind == BackendKind::fem ? "fem" : "net"; }

BackendKind backend_kind_from_string(const std::string& s) {
    if (s == "fem") return BackendKind::fem;
    if (s == "net" || s == "surrogate") return BackendKind::surrogate;
    throw InvalidArgument("unknown backend '" + s + "' (expected fem or net)");
}

Eigen::MatrixXd ForwardBackend::evaluate(std::span<const double> latent) const {
    count_.fetch_add(1, std::memory_order_relaxed);
    return do_evaluate(latent);
}

FemBackend::FemBackend(const InverseProblem& problem) : ForwardBackend(BackendKind::fem), problem_(problem) {}

Eigen::MatrixXd FemBackend::do_evaluate(std::span<const double> latent) const {
    return problem_.forward(problem_.physical_field(latent));
}

SurrogateBackend::SurrogateBackend(const InverseProblem& problem, SurrogateNet net)
    : ForwardBackend(BackendKind::surrogate), problem_(problem), net_(std::move(net)) {
    if (net_.architecture().input_dim != problem_.input_dim()) {
        throw InvalidArgument("network input_dim " + std::to_string(net_.architecture().input_dim) +
                              " does not match the problem (" + std::to_string(problem_.input_dim()) + ")");
    }
}

Eigen::MatrixXd SurrogateBackend::do_evaluate(std::span<const double> latent) const {
    const auto grid = net_.forward(problem_.net_input(problem_.physical_field(latent)));
    return from_grid(grid, problem_.output_rows(), problem_.output_cols());
}

LinearBackend::LinearBackend(Eigen::MatrixXd a, BackendKind kind) : ForwardBackend(kind), a_(std::move(a)) {}

Eigen::MatrixXd LinearBackend::do_evaluate(std::span<const double> latent) const {
    if (latent.size() != static_cast<std::size_t>(a_.cols())) throw InvalidArgument("latent dimension mismatch");
    return a_ * Eigen::Map<const Eigen::VectorXd>(latent.data(), a_.cols());
}

FunctionBackend::FunctionBackend(BackendKind kind, Fn fn) : ForwardBackend(kind), fn_(std::move(fn)) {
    if (!fn_) throw InvalidArgument("function backend needs a callable");
}

Eigen::MatrixXd FunctionBackend::do_evaluate(std::span<const double> latent) const { return fn_(latent); }

TimedBackend::TimedBackend(const ForwardBackend& inner) : ForwardBackend(inner.kind()), inner_(inner) {}

double TimedBackend::seconds() const { return static_cast<double>(nanos_.load()) * 1e-9; }

Eigen::MatrixXd TimedBackend::do_evaluate(std::span<const double> latent) const {
    const auto t0 = std::chrono::steady_clock::now();
    auto out = inner_.evaluate(latent);
    const auto t1 = std::chrono::steady_clock::now();
    nanos_.fetch_add(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
    return out;
}

double log_likelihood(const Eigen::MatrixXd& y_obs, const ForwardBackend& backend, std::span<const double> q,
                      double sigma) {
    if (!(sigma > 0.0)) throw InvalidArgument("noise sigma must be positive");
    const Eigen::MatrixXd g = backend.evaluate(q);
    if (g.rows() != y_obs.rows() || g.cols() != y_obs.cols()) {
        throw InvalidArgument("backend output is " + std::to_string(g.rows()) + "x" + std::to_string(g.cols()) +
                              ", data is " + std::to_string(y_obs.rows()) + "x" + std::to_string(y_obs.cols()));
    }
    return -(y_obs - g).squaredNorm() / (2.0 * sigma * sigma);
}

void validate(const PcnConfig& cfg) {
    if (!(cfg.delta > 0.0 && cfg.delta < 0.5)) throw InvalidArgument("delta must lie in (0, 1/2)");
    if (!(cfg.target_accept > 0.0 && cfg.target_accept < 1.0)) throw InvalidArgument("target_accept must lie in (0, 1)");
    if (cfg.adapt_window < 1) throw InvalidArgument("adapt_window must be positive");
    if (cfg.burn_in < 0 || cfg.samples < 0) throw InvalidArgument("burn_in and samples must be nonnegative");
    if (cfg.thin < 1) throw InvalidArgument("thin must be positive");
    if (!(cfg.noise_sigma > 0.0)) throw InvalidArgument("noise_sigma must be positive");
}

double Chain::acceptance_rate(std::size_t begin, std::size_t end) const {
    end = std::min(end, accepted.size());
    if (begin >= end) return 0.0;
    std::size_t n = 0;
    for (std::size_t i = begin; i < end; ++i) n += accepted[i] ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(end - begin);
}

double Chain::post_burn_in_acceptance() const {
    return acceptance_rate(static_cast<std::size_t>(burn_in), accepted.size());
}

PcnStep pcn_step(const Eigen::VectorXd& q, double loglik_q, const GPPrior& prior, const ForwardBackend& backend,
                 const Eigen::MatrixXd& y_obs, double sigma, double delta, Rng& rng) {
    if (!(delta > 0.0 && delta < 0.5)) throw InvalidArgument("delta must lie in (0, 1/2)");
    const Eigen::VectorXd xi = sample_gp(prior, rng);
    const Eigen::VectorXd proposal = std::sqrt(1.0 - 2.0 * delta) * q + std::sqrt(2.0 * delta) * xi;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double u = uniform(rng);
    const double l_prop = log_likelihood(y_obs, backend, {proposal.data(), static_cast<std::size_t>(proposal.size())},
                                         sigma);
    const double alpha = std::exp(std::min(0.0, l_prop - loglik_q));
    if (u < alpha) return {proposal, true, l_prop};
    return {q, false, loglik_q};
}

double adapt_delta(double delta, double rate, double target) {
    return std::clamp(delta * std::exp(rate - target), 1e-6, 0.5 - 1e-6);
}

namespace {

void flush_partial(const std::string& dir, const Chain& chain) {
    if (dir.empty()) return;
    try {
        write_chain(dir, chain);
    } catch (const std::exception&) {
        // the original failure is the one worth reporting
    }
}

} // namespace

Chain run_chain(const PcnConfig& cfg, const GPPrior& prior, const ForwardBackend& backend,
                const Eigen::MatrixXd& y_obs, const Eigen::VectorXd& q0) {
    validate(cfg);
    if (q0.size() != prior.dim()) throw InvalidArgument("q0 dimension does not match the prior");
    const auto t0 = std::chrono::steady_clock::now();
    Chain chain;
    chain.dim = static_cast<std::size_t>(q0.size());
    chain.burn_in = cfg.burn_in;
    const std::size_t total = static_cast<std::size_t>(cfg.burn_in) + static_cast<std::size_t>(cfg.samples);
    chain.loglik.reserve(total);
    chain.accepted.reserve(total);
    chain.deltas.reserve(total);
    chain.samples.reserve(static_cast<std::size_t>(cfg.samples / cfg.thin + 1));

    const auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    Rng rng(cfg.seed);
    double delta = cfg.delta;
    chain.delta_history.push_back({0, delta});
    Eigen::VectorXd q = q0;
    double ll = 0.0;
    try {
        ll = log_likelihood(y_obs, backend, {q.data(), static_cast<std::size_t>(q.size())}, cfg.noise_sigma);
    } catch (const std::exception& e) {
        chain.wall_time = elapsed();
        flush_partial(cfg.abort_dir, chain);
        throw ChainAborted(std::string("initial state evaluation failed: ") + e.what(), std::move(chain));
    }

    for (std::size_t it = 0; it < total; ++it) {
        PcnStep step;
        try {
            step = pcn_step(q, ll, prior, backend, y_obs, cfg.noise_sigma, delta, rng);
        } catch (const std::exception& e) {
            chain.wall_time = elapsed();
            flush_partial(cfg.abort_dir, chain);
            throw ChainAborted("backend failed at iteration " + std::to_string(it) + ": " + e.what(),
                               std::move(chain));
        }
        q = std::move(step.q);
        ll = step.loglik;
        chain.loglik.push_back(ll);
        chain.accepted.push_back(step.accepted ? 1 : 0);
        chain.deltas.push_back(delta);

        const std::size_t done = it + 1;
        if (done <= static_cast<std::size_t>(cfg.burn_in)) {
            if (done % static_cast<std::size_t>(cfg.adapt_window) == 0) {
                const double rate = chain.acceptance_rate(done - cfg.adapt_window, done);
                delta = adapt_delta(delta, rate, cfg.target_accept);
                chain.delta_history.push_back({static_cast<int>(done), delta});
            }
        } else if ((done - cfg.burn_in) % static_cast<std::size_t>(cfg.thin) == 0) {
            chain.samples.push_back(q);
        }
    }
    chain.wall_time = elapsed();
    return chain;
}

Eigen::VectorXd posterior_mean(const Chain& chain) {
    if (chain.samples.empty()) throw InvalidArgument("chain has no stored samples");
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(chain.samples.front().size());
    for (const auto& s : chain.samples) mean += s;
    return mean / static_cast<double>(chain.samples.size());
}

void write_chain_trace(std::ostream& out, const Chain& chain) {
    out << "iter,loglik,accepted,delta\n" << std::setprecision(17);
    for (std::size_t i = 0; i < chain.iterations(); ++i) {
        out << i + 1 << ',' << chain.loglik[i] << ',' << (chain.accepted[i] ? 1 : 0) << ',' << chain.deltas[i] << '\n';
    }
}

void write_samples(std::ostream& out, const Chain& chain) {
    binary::write<std::uint64_t>(out, chain.dim);
    binary::write<std::uint64_t>(out, chain.samples.size());
    for (const auto& s : chain.samples) {
        for (Eigen::Index i = 0; i < s.size(); ++i) binary::write<double>(out, s(i));
    }
    if (!out) throw Error("failed writing samples");
}

std::vector<Eigen::VectorXd> read_samples(std::istream& in) {
    const auto dim = binary::read<std::uint64_t>(in, "sample dimension");
    const auto count = binary::read<std::uint64_t>(in, "sample count");
    if (dim > (1u << 26) || count > (1u << 26)) throw FormatError("implausible sample store header");
    std::vector<Eigen::VectorXd> out;
    out.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
        Eigen::VectorXd s(static_cast<Eigen::Index>(dim));
        for (std::uint64_t i = 0; i < dim; ++i) s(static_cast<Eigen::Index>(i)) = binary::read<double>(in, "samples");
        out.push_back(std::move(s));
    }
    return out;
}

void write_chain(const std::string& dir, const Chain& chain) {
    std::filesystem::create_directories(dir);
    std::ofstream trace(std::filesystem::path(dir) / "trace.csv");
    if (!trace) throw Error("cannot write chain trace in " + dir);
    write_chain_trace(trace, chain);
    std::ofstream samples(std::filesystem::path(dir) / "samples.bin", std::ios::binary);
    if (!samples) throw Error("cannot write sample store in " + dir);
    write_samples(samples, chain);
}

} // namespace mcmcnet
