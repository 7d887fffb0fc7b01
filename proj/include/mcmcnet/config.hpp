#pragma once

#include "mcmcnet/analysis.hpp"
#include "mcmcnet/datagen.hpp"
#include "mcmcnet/mcmc.hpp"
#include "mcmcnet/problem.hpp"
#include "mcmcnet/surrogate.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mcmcnet {

/// Inversion target: circles over the background, or for QPAT with no
/// circles, the two-inclusion star phantom rotated by the given angles.
struct PhantomSpec {
    std::vector<Circle> circles;
    double rotation0 = 0.0;
    double rotation1 = 0.0;
};

struct HellingerConfig {
    std::size_t samples = 1000;
    /// Relative noise of the synthetic data defining both potentials. Prior
    /// draws only cover the posterior when this is not too small.
    double noise_level = 0.2;
    /// Training epochs at which the surrogate is evaluated.
    std::vector<int> checkpoints{2, 5, 20, 60};
};

struct PathConfig {
    std::string dataset = "dataset.bin";
    std::string model = "model.bin";
    std::string output = "out";
};

struct RunConfig {
    ProblemConfig problem;
    double noise_level = 0.01;
    PcnConfig mcmc;
    TrainConfig train;
    NetArchitecture arch;
    double holdout = 0.1;
    std::size_t datagen_count = 800;
    PhantomMix mix;
    PhantomSpec phantom;
    ScalingConfig bench;
    HellingerConfig hellinger;
    PathConfig paths;
    std::uint64_t seed = 1;
};

/// Desk-scale defaults for a problem kind.
RunConfig default_config(ProblemKind kind);

/// Long-run dataset sizes, chain lengths and training schedules.
void apply_full_scale(RunConfig& cfg);

/// INI with sections run, mesh, prior, noise, mcmc, train, datagen, phantom,
/// bench, hellinger, paths. `[run] problem` selects the defaults the other
/// keys override. Unknown keys and invalid values throw ConfigError naming
/// the `section.key` path. A `[manifest]` section is ignored so run
/// manifests can be fed back in.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

/// Every key in INI form; parse_config(write_config(c)) reproduces c.
void write_config(std::ostream& out, const RunConfig& cfg);

/// Cross-field checks; throws ConfigError.
void validate(const RunConfig& cfg);

} // namespace mcmcnet
