#include "mcmcnet/error.hpp"
#include "mcmcnet/pipeline.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>
#include <optional>

using namespace mcmcnet;

namespace {

struct Options {
    std::string config;
    std::string problem = "eit";
    std::string backend = "fem";
    std::optional<std::uint64_t> seed;
    std::string out;
    bool full_scale = false;
};

RunConfig resolve(const Options& o) {
    RunConfig cfg = o.config.empty() ? default_config(problem_kind_from_string(o.problem)) : load_config(o.config);
    if (o.full_scale) apply_full_scale(cfg);
    if (o.seed) cfg.seed = *o.seed;
    if (!o.out.empty()) cfg.paths.output = o.out;
    validate(cfg);
    return cfg;
}

void print_report(const InversionResult& r) {
    std::cout << std::setprecision(6) << to_string(r.backend) << ": mae " << r.report.mae << " mse " << r.report.mse
              << " linf " << r.report.linf << " time " << r.report.inv_time_seconds << "s acceptance "
              << r.acceptance << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian inversion with FEM and network surrogate forward models"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "INI run config")->check(CLI::ExistingFile);
        sub->add_option("--problem", o.problem, "defaults when no config is given")
            ->check(CLI::IsMember({"eit", "dot", "qpat"}));
        sub->add_option("--seed", o.seed, "override run.seed");
        sub->add_option("--out", o.out, "override paths.output");
        sub->add_flag("--full-scale", o.full_scale, "large dataset, chain and training sizes");
    };
    auto* mesh = app.add_subcommand("mesh", "write the mesh");
    auto* datagen = app.add_subcommand("datagen", "generate the training dataset");
    auto* train = app.add_subcommand("train", "train the surrogate");
    auto* invert = app.add_subcommand("invert", "pCN inversion with one backend");
    auto* compare = app.add_subcommand("compare", "invert with both backends on the same data");
    auto* bench = app.add_subcommand("bench", "inversion time against mesh refinement");
    auto* hellinger = app.add_subcommand("hellinger", "posterior distance against surrogate error during training");
    for (auto* s : {mesh, datagen, train, invert, compare, bench, hellinger}) common(s);
    invert->add_option("--backend", o.backend, "forward model")->check(CLI::IsMember({"fem", "net"}));

    CLI11_PARSE(app, argc, argv);

    try {
        const RunConfig cfg = resolve(o);
        if (*mesh) {
            cmd_mesh(cfg);
        } else if (*datagen) {
            const DataSet ds = cmd_datagen(cfg);
            std::cout << "wrote " << ds.size() << " pairs to " << resolve_path(cfg, cfg.paths.dataset) << '\n';
        } else if (*train) {
            const TrainResult r = cmd_train(cfg);
            if (!r.history.empty()) std::cout << "final loss " << r.history.back().loss << '\n';
        } else if (*invert) {
            print_report(cmd_invert(cfg, backend_kind_from_string(o.backend)));
        } else if (*compare) {
            for (const auto& r : cmd_compare(cfg)) print_report(r);
        } else if (*bench) {
            for (const auto& r : cmd_bench(cfg))
                std::cout << "refinement " << r.refinement << " dim " << r.dim << ": fem " << r.fem_seconds
                          << "s net " << r.net_seconds << "s\n";
        } else if (*hellinger) {
            for (const auto& r : cmd_hellinger(cfg))
                std::cout << "epoch " << r.epoch << ": l2mu " << r.l2mu_error << " hellinger " << r.hellinger << '\n';
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
