#include "mcmcnet/pipeline.hpp"

#include "mcmcnet/error.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

namespace mcmcnet {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "missing";
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return hex(fnv1a(bytes));
}

std::ofstream open_out(const fs::path& p, bool binary = false) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, binary ? std::ios::binary : std::ios::out);
    if (!out) throw Error("cannot write " + p.string());
    return out;
}

void write_manifest(const RunConfig& cfg, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& inputs) {
    std::ostringstream body;
    write_config(body, cfg);
    auto out = open_out(fs::path(cfg.paths.output) / "manifest.txt");
    out << "[manifest]\ncommand = " << command << "\nversion = " << kVersion << "\nconfig_hash = "
        << hex(fnv1a(body.str())) << "\nseed = " << cfg.seed << '\n';
    for (const auto& [name, path] : inputs) out << "input_" << name << " = " << file_hash(path) << '\n';
    out << '\n' << body.str();
}

void require_file(const std::string& path, const std::string& what) {
    if (!fs::exists(path)) throw Error(what + " not found at " + path + "; run the producing subcommand first");
}

void write_inversion(const RunConfig& cfg, const InverseProblem& problem, const InversionResult& r,
                     const ParamField& truth) {
    const fs::path out(cfg.paths.output);
    const std::string tag = to_string(r.backend);
    {
        auto f = open_out(out / "fields" / (tag + "_mean.csv"));
        write_field_csv(f, problem.mesh(), r.reconstruction.values);
    }
    {
        auto f = open_out(out / "fields" / (tag + "_lower.csv"));
        write_field_csv(f, problem.mesh(), r.bounds.lower);
    }
    {
        auto f = open_out(out / "fields" / (tag + "_upper.csv"));
        write_field_csv(f, problem.mesh(), r.bounds.upper);
    }
    {
        auto f = open_out(out / "fields" / "truth.csv");
        write_field_csv(f, problem.mesh(), truth.values);
    }
    write_chain((out / "chain" / tag).string(), r.chain);
}

} // namespace

std::string resolve_path(const RunConfig& cfg, const std::string& path) {
    const fs::path p(path);
    if (p.is_absolute()) return p.string();
    return (fs::path(cfg.paths.output) / p).string();
}

ParamField phantom_field(const InverseProblem& problem, const PhantomSpec& spec) {
    if (problem.kind() == ProblemKind::qpat && spec.circles.empty()) {
        return star_shape_map(problem.mesh(), problem.qpat_truth_spec(spec.rotation0, spec.rotation1));
    }
    return problem.circle_phantom(spec.circles);
}

Measurement observe(const InverseProblem& problem, const ParamField& truth, double noise_level, std::uint64_t seed) {
    Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
    return add_noise(problem.measure(truth), noise_level, rng);
}

InversionResult invert(const InverseProblem& problem, const ForwardBackend& backend, const Measurement& y,
                       const ParamField& truth, PcnConfig pcn) {
    if (!(y.noise_sigma > 0.0)) throw InvalidArgument("inversion needs data with a positive noise level");
    pcn.noise_sigma = y.noise_sigma;
    const Eigen::VectorXd q0 = Eigen::VectorXd::Zero(problem.prior().dim());
    InversionResult r;
    r.backend = backend.kind();
    r.chain = run_chain(pcn, problem.prior(), backend, y.data, q0);
    const Eigen::VectorXd mean = posterior_mean(r.chain);
    r.reconstruction = problem.physical_field({mean.data(), static_cast<std::size_t>(mean.size())});
    r.bounds = credible_bounds(
        r.chain, [&](std::span<const double> q) { return problem.physical_field(q).values; }, 0.2);
    r.report = error_metrics(r.reconstruction, truth);
    r.report.inv_time_seconds = r.chain.wall_time;
    r.acceptance = r.chain.post_burn_in_acceptance();

    std::vector<bool> mask(truth.values.size());
    bool any = false;
    for (std::size_t t = 0; t < mask.size(); ++t) {
        mask[t] = truth.values[t] != problem.background();
        any = any || mask[t];
    }
    if (any) {
        const std::vector<double> background(truth.values.size(), problem.background());
        r.anomaly_mae = masked_mae(r.reconstruction.values, truth.values, mask);
        r.baseline_anomaly_mae = masked_mae(background, truth.values, mask);
    }
    return r;
}

SurrogateNet train_surrogate(const RunConfig& cfg, const DataSet& train, TrainResult* result,
                             const std::function<void(int, const SurrogateNet&)>& after_epoch) {
    NetArchitecture arch = cfg.arch;
    arch.input_dim = train.input_dim;
    SurrogateNet net = SurrogateNet::he_init(arch, cfg.seed);
    const TrainingSet ts = to_training_set(train);
    net.set_normalization(fit_normalization(ts));
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    TrainResult tr = mcmcnet::train(net, ts, tc, after_epoch);
    if (result) *result = std::move(tr);
    return net;
}

void cmd_mesh(const RunConfig& cfg) {
    const TriMesh mesh = build_disk_mesh(cfg.problem.refinement);
    auto out = open_out(fs::path(cfg.paths.output) / "mesh.txt");
    write_mesh(out, mesh);
    write_manifest(cfg, "mesh", {});
}

DataSet cmd_datagen(const RunConfig& cfg) {
    const InverseProblem problem(cfg.problem);
    DatagenStats stats;
    DataSet ds = generate_dataset(problem, cfg.datagen_count, cfg.mix, cfg.seed, &stats);
    const std::string path = resolve_path(cfg, cfg.paths.dataset);
    fs::create_directories(fs::path(path).parent_path());
    write_dataset(path, ds);
    write_manifest(cfg, "datagen", {});
    return ds;
}

TrainResult cmd_train(const RunConfig& cfg) {
    const std::string data_path = resolve_path(cfg, cfg.paths.dataset);
    require_file(data_path, "dataset");
    const DataSet ds = read_dataset(data_path);
    if (ds.problem != cfg.problem.kind) throw Error("dataset was generated for " + to_string(ds.problem));
    const auto [train_set, val_set] = split(ds, cfg.holdout, cfg.seed);
    TrainResult result;
    const SurrogateNet net = train_surrogate(cfg, train_set, &result);
    const std::string model_path = resolve_path(cfg, cfg.paths.model);
    fs::create_directories(fs::path(model_path).parent_path());
    save_model(net, model_path);
    {
        auto out = open_out(fs::path(cfg.paths.output) / "loss.csv");
        write_loss_csv(out, result);
    }
    {
        auto out = open_out(fs::path(cfg.paths.output) / "train_metrics.csv");
        out << "train_mse,validation_mse\n" << std::setprecision(17) << dataset_mse(net, to_training_set(train_set))
            << ',' << dataset_mse(net, to_training_set(val_set)) << '\n';
    }
    write_manifest(cfg, "train", {{"dataset", data_path}});
    return result;
}

namespace {

InversionResult run_inversion(const RunConfig& cfg, const InverseProblem& problem, const ParamField& truth,
                              const Measurement& y, BackendKind kind) {
    if (kind == BackendKind::fem) {
        const FemBackend fem(problem);
        return invert(problem, fem, y, truth, cfg.mcmc);
    }
    const std::string model_path = resolve_path(cfg, cfg.paths.model);
    require_file(model_path, "model");
    const SurrogateBackend net(problem, load_model(model_path));
    return invert(problem, net, y, truth, cfg.mcmc);
}

PcnConfig seeded(const RunConfig& cfg) {
    PcnConfig p = cfg.mcmc;
    p.seed = cfg.seed;
    return p;
}

} // namespace

InversionResult cmd_invert(const RunConfig& cfg_in, BackendKind backend) {
    RunConfig cfg = cfg_in;
    cfg.mcmc = seeded(cfg);
    cfg.mcmc.abort_dir = (fs::path(cfg.paths.output) / "chain" / (to_string(backend) + "_aborted")).string();
    const InverseProblem problem(cfg.problem);
    const ParamField truth = phantom_field(problem, cfg.phantom);
    const Measurement y = observe(problem, truth, cfg.noise_level, cfg.seed);
    {
        auto out = open_out(fs::path(cfg.paths.output) / "measurement.csv");
        write_measurement_csv(out, y);
    }
    InversionResult r = run_inversion(cfg, problem, truth, y, backend);
    write_inversion(cfg, problem, r, truth);
    {
        auto out = open_out(fs::path(cfg.paths.output) / "metrics.csv");
        write_metrics_csv(out, to_string(backend), r.report, true);
    }
    std::vector<std::pair<std::string, std::string>> inputs;
    if (backend == BackendKind::surrogate) inputs.push_back({"model", resolve_path(cfg, cfg.paths.model)});
    write_manifest(cfg, "invert " + to_string(backend), inputs);
    return r;
}

std::vector<InversionResult> cmd_compare(const RunConfig& cfg_in) {
    RunConfig cfg = cfg_in;
    cfg.mcmc = seeded(cfg);
    const InverseProblem problem(cfg.problem);
    const ParamField truth = phantom_field(problem, cfg.phantom);
    const Measurement y = observe(problem, truth, cfg.noise_level, cfg.seed);
    {
        auto out = open_out(fs::path(cfg.paths.output) / "measurement.csv");
        write_measurement_csv(out, y);
    }
    std::vector<InversionResult> results;
    auto metrics = open_out(fs::path(cfg.paths.output) / "metrics.csv");
    bool header = true;
    for (BackendKind kind : {BackendKind::fem, BackendKind::surrogate}) {
        results.push_back(run_inversion(cfg, problem, truth, y, kind));
        write_inversion(cfg, problem, results.back(), truth);
        write_metrics_csv(metrics, to_string(kind), results.back().report, header);
        header = false;
    }
    write_manifest(cfg, "compare", {{"model", resolve_path(cfg, cfg.paths.model)}});
    return results;
}

std::vector<ScalingRow> cmd_bench(const RunConfig& cfg) {
    ScalingConfig sc = cfg.bench;
    sc.arch = cfg.arch;
    sc.noise_level = cfg.noise_level;
    sc.seed = cfg.seed;
    const auto rows = scaling_study(cfg.problem, sc);
    auto out = open_out(fs::path(cfg.paths.output) / "scaling.csv");
    write_scaling_csv(out, rows);
    write_manifest(cfg, "bench", {});
    return rows;
}

std::vector<HellingerRow> cmd_hellinger(const RunConfig& cfg) {
    const std::string data_path = resolve_path(cfg, cfg.paths.dataset);
    require_file(data_path, "dataset");
    const DataSet ds = read_dataset(data_path);
    if (ds.problem != cfg.problem.kind) throw Error("dataset was generated for " + to_string(ds.problem));
    const InverseProblem problem(cfg.problem);
    if (ds.input_dim != problem.input_dim()) throw Error("dataset does not match the configured mesh");
    const ParamField truth = phantom_field(problem, cfg.phantom);
    const Measurement y = observe(problem, truth, cfg.hellinger.noise_level, cfg.seed);
    const double two_s2 = 2.0 * y.noise_sigma * y.noise_sigma;

    Rng rng(cfg.seed + 1);
    std::vector<Eigen::VectorXd> draws;
    for (std::size_t i = 0; i < cfg.hellinger.samples; ++i) draws.push_back(sample_gp(problem.prior(), rng));
    const FemBackend fem(problem);
    std::vector<Eigen::MatrixXd> exact;
    std::vector<double> phi;
    for (const auto& w : draws) {
        exact.push_back(fem.evaluate({w.data(), static_cast<std::size_t>(w.size())}));
        phi.push_back((y.data - exact.back()).squaredNorm() / two_s2);
    }

    std::vector<HellingerRow> rows;
    const auto& cps = cfg.hellinger.checkpoints;
    RunConfig tcfg = cfg;
    tcfg.train.epochs = cps.back();
    train_surrogate(tcfg, ds, nullptr, [&](int epoch, const SurrogateNet& net) {
        if (std::find(cps.begin(), cps.end(), epoch) == cps.end()) return;
        const SurrogateBackend sb(problem, net);
        double se = 0.0;
        std::vector<double> phi_theta;
        for (std::size_t i = 0; i < draws.size(); ++i) {
            const Eigen::MatrixXd g = sb.evaluate({draws[i].data(), static_cast<std::size_t>(draws[i].size())});
            se += (g - exact[i]).squaredNorm();
            phi_theta.push_back((y.data - g).squaredNorm() / two_s2);
        }
        rows.push_back({epoch, std::sqrt(se / static_cast<double>(draws.size())),
                        hellinger_from_potentials(phi, phi_theta)});
    });
    auto out = open_out(fs::path(cfg.paths.output) / "hellinger.csv");
    out << "epoch,l2mu_error,hellinger\n" << std::setprecision(17);
    for (const auto& r : rows) out << r.epoch << ',' << r.l2mu_error << ',' << r.hellinger << '\n';
    write_manifest(cfg, "hellinger", {{"dataset", data_path}});
    return rows;
}

} // namespace mcmcnet
