#pragma once

#include "mcmcnet/error.hpp"
#include "mcmcnet/prior.hpp"
#include "mcmcnet/problem.hpp"
#include "mcmcnet/surrogate.hpp"

#include <Eigen/Dense>

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mcmcnet {

enum class BackendKind { fem, surrogate };

std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string& s);

/// Latent vector to predicted measurement. `evaluate` counts its calls and is
/// safe to call concurrently.
class ForwardBackend {
public:
    explicit ForwardBackend(BackendKind kind) : kind_(kind) {}
    virtual ~ForwardBackend() = default;
    ForwardBackend(const ForwardBackend&) = delete;
    ForwardBackend& operator=(const ForwardBackend&) = delete;

    Eigen::MatrixXd evaluate(std::span<const double> latent) const;

    BackendKind kind() const { return kind_; }
    std::uint64_t eval_count() const { return count_.load(); }
    void reset_count() { count_.store(0); }

private:
    virtual Eigen::MatrixXd do_evaluate(std::span<const double> latent) const = 0;

    BackendKind kind_;
    mutable std::atomic<std::uint64_t> count_{0};
};

/// Latent -> physical field -> finite element solve.
class FemBackend : public ForwardBackend {
public:
    explicit FemBackend(const InverseProblem& problem);

private:
    Eigen::MatrixXd do_evaluate(std::span<const double> latent) const override;
    const InverseProblem& problem_;
};

/// Latent -> physical field -> network, output cropped to the measurement shape.
class SurrogateBackend : public ForwardBackend {
public:
    SurrogateBackend(const InverseProblem& problem, SurrogateNet net);

    const SurrogateNet& net() const { return net_; }

private:
    Eigen::MatrixXd do_evaluate(std::span<const double> latent) const override;
    const InverseProblem& problem_;
    SurrogateNet net_;
};

/// G(q) = A q as a column.
class LinearBackend : public ForwardBackend {
public:
    explicit LinearBackend(Eigen::MatrixXd a, BackendKind kind = BackendKind::fem);

    const Eigen::MatrixXd& matrix() const { return a_; }

private:
    Eigen::MatrixXd do_evaluate(std::span<const double> latent) const override;
    Eigen::MatrixXd a_;
};

/// Wraps an arbitrary callable.
class FunctionBackend : public ForwardBackend {
public:
    using Fn = std::function<Eigen::MatrixXd(std::span<const double>)>;
    FunctionBackend(BackendKind kind, Fn fn);

private:
    Eigen::MatrixXd do_evaluate(std::span<const double> latent) const override;
    Fn fn_;
};

/// Accumulates the wall time spent inside another backend.
class TimedBackend : public ForwardBackend {
public:
    explicit TimedBackend(const ForwardBackend& inner);

    double seconds() const;

private:
    Eigen::MatrixXd do_evaluate(std::span<const double> latent) const override;
    const ForwardBackend& inner_;
    mutable std::atomic<std::int64_t> nanos_{0};
};

/// -||y - G(q)||_F^2 / (2 sigma^2).
double log_likelihood(const Eigen::MatrixXd& y_obs, const ForwardBackend& backend, std::span<const double> q,
                      double sigma);

struct PcnConfig {
    double delta = 0.05;
    double target_accept = 0.25;
    int adapt_window = 100;
    int burn_in = 5000;
    int samples = 5000;
    /// Keep every thin-th post-burn-in state.
    int thin = 1;
    double noise_sigma = 1.0;
    std::uint64_t seed = 1;
    /// When set, an aborted chain writes its partial trace and samples here.
    std::string abort_dir;
};

void validate(const PcnConfig& cfg);

struct DeltaRecord {
    int iteration = 0;
    double delta = 0.0;
};

struct Chain {
    std::size_t dim = 0;
    std::vector<Eigen::VectorXd> samples;
    std::vector<double> loglik;
    std::vector<char> accepted;
    /// Step size in force at each iteration.
    std::vector<double> deltas;
    /// Initial value and every adaptation.
    std::vector<DeltaRecord> delta_history;
    int burn_in = 0;
    double wall_time = 0.0;

    std::size_t iterations() const { return accepted.size(); }
    /// Fraction accepted over iterations [begin, end).
    double acceptance_rate(std::size_t begin, std::size_t end) const;
    double post_burn_in_acceptance() const;
};

/// Backend failure inside `run_chain`; carries the chain up to that point.
class ChainAborted : public Error {
public:
    ChainAborted(const std::string& what, Chain partial)
        : Error(what), partial_(std::move(partial)) {}
    const Chain& partial() const { return partial_; }

private:
    Chain partial_;
};

struct PcnStep {
    Eigen::VectorXd q;
    bool accepted = false;
    double loglik = 0.0;
};

/// Proposal sqrt(1 - 2 delta) q + sqrt(2 delta) xi with xi from the prior,
/// accepted when u < min(1, exp(L(q*) - L(q))). The uniform u is always drawn.
PcnStep pcn_step(const Eigen::VectorXd& q, double loglik_q, const GPPrior& prior, const ForwardBackend& backend,
                 const Eigen::MatrixXd& y_obs, double sigma, double delta, Rng& rng);

/// clamp(delta * exp(rate - target), 1e-6, 1/2 - 1e-6).
double adapt_delta(double delta, double rate, double target);

Chain run_chain(const PcnConfig& cfg, const GPPrior& prior, const ForwardBackend& backend,
                const Eigen::MatrixXd& y_obs, const Eigen::VectorXd& q0);

Eigen::VectorXd posterior_mean(const Chain& chain);

/// `iter,loglik,accepted,delta`, one row per iteration.
void write_chain_trace(std::ostream& out, const Chain& chain);
/// Little-endian u64 dim, u64 count, then count * dim doubles.
void write_samples(std::ostream& out, const Chain& chain);
std::vector<Eigen::VectorXd> read_samples(std::istream& in);
/// trace.csv and samples.bin inside `dir` (created if missing).
void write_chain(const std::string& dir, const Chain& chain);

} // namespace mcmcnet
