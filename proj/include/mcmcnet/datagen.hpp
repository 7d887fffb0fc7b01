#pragma once

#include "mcmcnet/problem.hpp"
#include "mcmcnet/surrogate.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace mcmcnet {

/// Fractions of each input family. `rotated` (two-inclusion phantoms with
/// random rotations) applies to QPAT only.
struct PhantomMix {
    double circles = 0.5;
    double prior = 0.5;
    double rotated = 0.0;
};

PhantomMix default_mix(ProblemKind kind);
void validate(const PhantomMix& mix, ProblemKind kind);

/// Inputs are network inputs (the physical field on nodes); outputs are
/// noiseless measurements, row-major output_rows x output_cols.
struct DataSet {
    ProblemKind problem = ProblemKind::eit;
    int input_dim = 0;
    int output_rows = 0;
    int output_cols = 0;
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> outputs;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;

    std::size_t size() const { return inputs.size(); }
};

/// Hash of everything that determines the generated pairs except the seed.
std::uint64_t provenance_hash(const ProblemConfig& cfg, const PhantomMix& mix);

/// Physical field for draw `index`, attempt `attempt`, from its own substream.
ParamField draw_field(const InverseProblem& problem, const PhantomMix& mix, std::uint64_t seed, std::uint64_t index,
                      std::uint64_t attempt = 0);

struct GeneratedPair {
    std::vector<double> input;
    std::vector<double> output;
    std::uint64_t attempts = 1;
};

/// Draws and solves pair `index`, resampling when the solver fails.
GeneratedPair generate_pair(const InverseProblem& problem, const PhantomMix& mix, std::uint64_t seed,
                            std::uint64_t index);

struct DatagenStats {
    std::uint64_t retries = 0;
};

/// Pairs are generated in parallel, each from its own substream, so the
/// result does not depend on the thread count. Aborts when retries exceed 5%.
DataSet generate_dataset(const InverseProblem& problem, std::size_t n, const PhantomMix& mix, std::uint64_t seed,
                         DatagenStats* stats = nullptr);

/// Seeded permutation split; the validation side gets round(n * fraction).
std::pair<DataSet, DataSet> split(const DataSet& ds, double holdout_fraction, std::uint64_t seed);

/// Outputs zero-padded into the 16x16 network grid.
TrainingSet to_training_set(const DataSet& ds);

void write_dataset(std::ostream& out, const DataSet& ds);
DataSet read_dataset(std::istream& in);
void write_dataset(const std::string& path, const DataSet& ds);
DataSet read_dataset(const std::string& path);

} // namespace mcmcnet
