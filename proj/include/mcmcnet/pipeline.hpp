#pragma once

// Subcommands behind the CLI. Each writes its artifacts under
// `paths.output` together with manifest.txt, which is itself a valid config.

#include "mcmcnet/analysis.hpp"
#include "mcmcnet/config.hpp"
#include "mcmcnet/datagen.hpp"
#include "mcmcnet/mcmc.hpp"
#include "mcmcnet/problem.hpp"

#include <string>
#include <vector>

namespace mcmcnet {

/// Dataset and model paths are taken relative to the output directory
/// unless absolute.
std::string resolve_path(const RunConfig& cfg, const std::string& path);

ParamField phantom_field(const InverseProblem& problem, const PhantomSpec& spec);

/// Noisy synthetic data from the exact forward model.
Measurement observe(const InverseProblem& problem, const ParamField& truth, double noise_level, std::uint64_t seed);

struct InversionResult {
    BackendKind backend = BackendKind::fem;
    ParamField reconstruction;
    CredibleBounds bounds;
    ErrorReport report;
    /// MAE over the elements where the truth differs from the background,
    /// for the reconstruction and for the constant background.
    double anomaly_mae = 0.0;
    double baseline_anomaly_mae = 0.0;
    double acceptance = 0.0;
    Chain chain;
};

/// Runs pCN from the zero latent and summarizes the chain. The field is the
/// posterior mean latent pushed through the parametrization.
InversionResult invert(const InverseProblem& problem, const ForwardBackend& backend, const Measurement& y,
                       const ParamField& truth, PcnConfig pcn);

/// Trains a He-initialized network on `train`; `after_epoch` sees each epoch.
SurrogateNet train_surrogate(const RunConfig& cfg, const DataSet& train, TrainResult* result = nullptr,
                             const std::function<void(int, const SurrogateNet&)>& after_epoch = {});

void cmd_mesh(const RunConfig& cfg);
DataSet cmd_datagen(const RunConfig& cfg);
TrainResult cmd_train(const RunConfig& cfg);
InversionResult cmd_invert(const RunConfig& cfg, BackendKind backend);
std::vector<InversionResult> cmd_compare(const RunConfig& cfg);
std::vector<ScalingRow> cmd_bench(const RunConfig& cfg);

struct HellingerRow {
    int epoch = 0;
    double l2mu_error = 0.0;
    double hellinger = 0.0;
};

/// Trains on the dataset and, at every checkpoint epoch, measures the
/// surrogate L2(mu) error and the Hellinger distance between the exact and
/// surrogate posteriors over the same prior draws.
std::vector<HellingerRow> cmd_hellinger(const RunConfig& cfg);

} // namespace mcmcnet
