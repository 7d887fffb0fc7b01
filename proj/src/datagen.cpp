#include "mcmcnet/datagen.hpp"

#include "mcmcnet/binary_io.hpp"
#include "mcmcnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace mcmcnet {

namespace {

constexpr char kDataMagic[9] = "MCNETDAT";
constexpr std::uint32_t kDataVersion = 1;
constexpr std::uint64_t kMaxAttempts = 20;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

Rng substream(std::uint64_t seed, std::uint64_t index, std::uint64_t attempt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(attempt)};
    return Rng(seq);
}

std::uint32_t problem_tag(ProblemKind k) { return static_cast<std::uint32_t>(k); }

std::vector<double> flatten(const Eigen::MatrixXd& m) {
    std::vector<double> v(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) v[i * m.cols() + j] = m(i, j);
    }
    return v;
}

} // namespace

PhantomMix default_mix(ProblemKind kind) {
    if (kind == ProblemKind::qpat) return {0.4, 0.3, 0.3};
    return {0.5, 0.5, 0.0};
}

void validate(const PhantomMix& mix, ProblemKind kind) {
    if (mix.circles < 0.0 || mix.prior < 0.0 || mix.rotated < 0.0) throw InvalidArgument("mix fractions must be nonnegative");
    if (std::abs(mix.circles + mix.prior + mix.rotated - 1.0) > 1e-9) throw InvalidArgument("mix fractions must sum to 1");
    if (kind != ProblemKind::qpat && mix.rotated > 0.0) {
        throw InvalidArgument("rotated two-inclusion phantoms exist only for qpat");
    }
}

std::uint64_t provenance_hash(const ProblemConfig& c, const PhantomMix& mix) {
    std::ostringstream s;
    s.precision(17);
    s << to_string(c.kind) << ' ' << c.refinement << ' ' << c.electrodes << ' ' << c.coverage << ' '
      << c.contact_impedance << ' ' << c.matern.nu << ' ' << c.matern.ell << ' ' << c.jitter << '|';
    for (double t : c.level_set.thresholds) s << t << ' ';
    for (double v : c.level_set.values) s << v << ' ';
    s << '|' << c.dot_rho << ' ' << c.dot_background << ' ' << c.dot_log_scale << ' ' << c.dot_lower << ' '
      << c.dot_upper << '|' << c.qpat_rho << ' ' << c.qpat_band.lower << ' ' << c.qpat_band.upper << ' '
      << c.star_order << ' ' << c.star_decay << ' ' << c.star_const_variance << ' ' << c.star_amplitude << ' '
      << c.star_base_log_radius << ' ' << c.star_background << '|';
    for (const auto& p : c.star_centers) s << p.x << ' ' << p.y << ' ';
    for (double k : c.star_kappas) s << k << ' ';
    s << '|' << mix.circles << ' ' << mix.prior << ' ' << mix.rotated;
    return fnv1a(s.str());
}

ParamField draw_field(const InverseProblem& problem, const PhantomMix& mix, std::uint64_t seed, std::uint64_t index,
                      std::uint64_t attempt) {
    validate(mix, problem.kind());
    Rng rng = substream(seed, index, attempt);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double pick = unit(rng);
    const auto& cfg = problem.config();

    if (pick < mix.circles) {
        const int count = unit(rng) < 0.5 ? 1 : 2;
        std::vector<Circle> circles;
        for (int k = 0; k < count; ++k) {
            // uniform in the disk of radius 0.6
            const double r = 0.6 * std::sqrt(unit(rng));
            const double a = 2.0 * std::numbers::pi * unit(rng);
            Circle c;
            c.center = {r * std::cos(a), r * std::sin(a)};
            c.radius = 0.1 + 0.3 * unit(rng);
            switch (problem.kind()) {
            case ProblemKind::eit: c.value = cfg.level_set.values.back(); break;
            case ProblemKind::dot: c.value = cfg.dot_background * (1.5 + 1.5 * unit(rng)); break;
            case ProblemKind::qpat:
                c.value = cfg.star_kappas[static_cast<std::size_t>(unit(rng) * cfg.star_kappas.size()) %
                                          cfg.star_kappas.size()];
                break;
            }
            circles.push_back(c);
        }
        return problem.circle_phantom(circles);
    }
    if (pick < mix.circles + mix.prior) {
        const Eigen::VectorXd w = sample_gp(problem.prior(), rng);
        return problem.physical_field({w.data(), static_cast<std::size_t>(w.size())});
    }
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    const double r0 = angle(rng);
    const double r1 = angle(rng);
    return star_shape_map(problem.mesh(), problem.qpat_truth_spec(r0, r1));
}

GeneratedPair generate_pair(const InverseProblem& problem, const PhantomMix& mix, std::uint64_t seed,
                            std::uint64_t index) {
    std::string last_error;
    for (std::uint64_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
        try {
            const ParamField field = draw_field(problem, mix, seed, index, attempt);
            const Eigen::MatrixXd m = problem.forward(field);
            if (!m.allFinite()) throw SolverError("non-finite measurement");
            return {problem.net_input(field), flatten(m), attempt + 1};
        } catch (const InvalidArgument&) {
            throw;
        } catch (const std::exception& e) {
            last_error = e.what();
        }
    }
    throw SolverError("pair " + std::to_string(index) + " failed " + std::to_string(kMaxAttempts) +
                      " times: " + last_error);
}

DataSet generate_dataset(const InverseProblem& problem, std::size_t n, const PhantomMix& mix, std::uint64_t seed,
                         DatagenStats* stats) {
    if (n < 1) throw InvalidArgument("dataset size must be at least 1");
    validate(mix, problem.kind());
    DataSet ds;
    ds.problem = problem.kind();
    ds.input_dim = problem.input_dim();
    ds.output_rows = problem.output_rows();
    ds.output_cols = problem.output_cols();
    ds.config_hash = provenance_hash(problem.config(), mix);
    ds.seed = seed;
    ds.inputs.resize(n);
    ds.outputs.resize(n);
    std::vector<std::uint64_t> attempts(n, 0);
    std::vector<std::exception_ptr> errors(n);

#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        try {
            auto pair = generate_pair(problem, mix, seed, static_cast<std::uint64_t>(i));
            ds.inputs[i] = std::move(pair.input);
            ds.outputs[i] = std::move(pair.output);
            attempts[i] = pair.attempts;
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::uint64_t retries = 0;
    for (auto a : attempts) retries += a - 1;
    if (stats) stats->retries = retries;
    if (static_cast<double>(retries) > 0.05 * static_cast<double>(n)) {
        throw SolverError("datagen aborted: " + std::to_string(retries) + " solver retries for " + std::to_string(n) +
                          " pairs exceeds 5%");
    }
    return ds;
}

std::pair<DataSet, DataSet> split(const DataSet& ds, double holdout_fraction, std::uint64_t seed) {
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) throw InvalidArgument("holdout fraction must lie in (0, 1)");
    const std::size_t n = ds.size();
    const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * holdout_fraction));
    if (n_val == 0 || n_val >= n) throw InvalidArgument("split leaves one side empty");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n - n_val));
    std::sort(order.begin() + static_cast<std::ptrdiff_t>(n - n_val), order.end());

    auto take = [&](std::size_t from, std::size_t to) {
        DataSet out = ds;
        out.inputs.clear();
        out.outputs.clear();
        for (std::size_t k = from; k < to; ++k) {
            out.inputs.push_back(ds.inputs[order[k]]);
            out.outputs.push_back(ds.outputs[order[k]]);
        }
        return out;
    };
    return {take(0, n - n_val), take(n - n_val, n)};
}

TrainingSet to_training_set(const DataSet& ds) {
    TrainingSet t;
    t.inputs = ds.inputs;
    t.targets.reserve(ds.size());
    for (const auto& o : ds.outputs) {
        Eigen::MatrixXd m(ds.output_rows, ds.output_cols);
        for (int i = 0; i < ds.output_rows; ++i) {
            for (int j = 0; j < ds.output_cols; ++j) m(i, j) = o[i * ds.output_cols + j];
        }
        t.targets.push_back(to_grid(m));
    }
    return t;
}

void write_dataset(std::ostream& out, const DataSet& ds) {
    if (ds.size() == 0 || ds.outputs.size() != ds.size()) throw InvalidArgument("dataset is empty or inconsistent");
    binary::write_magic(out, kDataMagic);
    binary::write<std::uint32_t>(out, kDataVersion);
    binary::write<std::uint32_t>(out, problem_tag(ds.problem));
    binary::write<std::int32_t>(out, ds.input_dim);
    binary::write<std::int32_t>(out, ds.output_rows);
    binary::write<std::int32_t>(out, ds.output_cols);
    binary::write<std::uint64_t>(out, ds.size());
    binary::write<std::uint64_t>(out, ds.config_hash);
    binary::write<std::uint64_t>(out, ds.seed);
    const std::size_t out_size = static_cast<std::size_t>(ds.output_rows) * ds.output_cols;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.inputs[i].size() != static_cast<std::size_t>(ds.input_dim) || ds.outputs[i].size() != out_size) {
            throw InvalidArgument("pair " + std::to_string(i) + " does not match the declared shapes");
        }
        for (double x : ds.inputs[i]) binary::write<double>(out, x);
        for (double x : ds.outputs[i]) binary::write<double>(out, x);
    }
    if (!out) throw Error("failed writing dataset");
}

DataSet read_dataset(std::istream& in) {
    binary::expect_magic(in, kDataMagic);
    const auto version = binary::read<std::uint32_t>(in, "version");
    if (version != kDataVersion) throw FormatError("unsupported dataset format version " + std::to_string(version));
    const auto tag = binary::read<std::uint32_t>(in, "problem tag");
    if (tag > 2) throw FormatError("unknown problem tag " + std::to_string(tag));
    DataSet ds;
    ds.problem = static_cast<ProblemKind>(tag);
    ds.input_dim = binary::read<std::int32_t>(in, "input_dim");
    ds.output_rows = binary::read<std::int32_t>(in, "output_rows");
    ds.output_cols = binary::read<std::int32_t>(in, "output_cols");
    const auto count = binary::read<std::uint64_t>(in, "count");
    ds.config_hash = binary::read<std::uint64_t>(in, "config hash");
    ds.seed = binary::read<std::uint64_t>(in, "seed");
    if (ds.input_dim < 1 || ds.output_rows < 1 || ds.output_cols < 1 || count < 1 || count > (1u << 24)) {
        throw FormatError("dataset header declares invalid shapes or count");
    }
    const std::size_t out_size = static_cast<std::size_t>(ds.output_rows) * ds.output_cols;
    ds.inputs.resize(count, std::vector<double>(ds.input_dim));
    ds.outputs.resize(count, std::vector<double>(out_size));
    for (std::uint64_t i = 0; i < count; ++i) {
        for (double& x : ds.inputs[i]) x = binary::read<double>(in, "pairs");
        for (double& x : ds.outputs[i]) x = binary::read<double>(in, "pairs");
    }
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after the declared pairs");
    return ds;
}

void write_dataset(const std::string& path, const DataSet& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    write_dataset(out, ds);
}

DataSet read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return read_dataset(in);
}

} // namespace mcmcnet
