#include "mcmcnet/config.hpp"

#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace mcmcnet;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string err;
};

Run cli(const std::string& args, const fs::path& dir) {
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = std::string(MCMCNET_CLI) + " " + args + " > /dev/null 2> " + err.string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(err);
    std::stringstream s;
    s << in.rdbuf();
    r.err = s.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Workspace {
    fs::path dir;
    fs::path ini;

    explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / name), ini(dir / "run.ini") {
        fs::remove_all(dir);
        fs::create_directories(dir);
        RunConfig c = default_config(ProblemKind::eit);
        c.problem.refinement = 2;
        c.datagen_count = 24;
        c.train.epochs = 2;
        c.train.minibatch = 8;
        c.arch.channels = 4;
        c.arch.conv_layers = 2;
        c.mcmc.burn_in = 60;
        c.mcmc.samples = 40;
        c.mcmc.adapt_window = 20;
        c.bench.refinements = {2, 3, 4};
        c.bench.iterations = 2;
        c.hellinger.samples = 100;
        c.hellinger.checkpoints = {1, 2};
        c.paths.output = (dir / "out").string();
        c.paths.dataset = (dir / "dataset.bin").string();
        c.paths.model = (dir / "model.bin").string();
        std::ofstream out(ini);
        write_config(out, c);
    }
    ~Workspace() { fs::remove_all(dir); }

    std::string cfg() const { return "--config " + ini.string(); }
};

} // namespace

TEST_SUITE("cli") {

TEST_CASE("invalid key exits nonzero and names the key") {
    Workspace w("mcmcnet_cli_badkey");
    {
        std::string text = slurp(w.ini);
        text.replace(text.find("[mcmc]\n"), 7, "[mcmc]\nwarmup = 5\n");
        std::ofstream out(w.ini);
        out << text;
    }
    const Run r = cli("mesh " + w.cfg(), w.dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("mcmc.warmup") != std::string::npos);
}

TEST_CASE("unknown subcommand or problem is rejected") {
    Workspace w("mcmcnet_cli_usage");
    CHECK(cli("frobnicate", w.dir).code != 0);
    CHECK(cli("mesh --problem xray", w.dir).code != 0);
}

TEST_CASE("pipeline end to end with one metrics row per backend") {
    Workspace w("mcmcnet_cli_pipeline");
    REQUIRE(cli("mesh " + w.cfg(), w.dir).code == 0);
    CHECK(fs::exists(w.dir / "out" / "mesh.txt"));
    CHECK(fs::exists(w.dir / "out" / "manifest.txt"));

    REQUIRE(cli("datagen " + w.cfg(), w.dir).code == 0);
    const std::string first = slurp(w.dir / "dataset.bin");
    REQUIRE(cli("datagen " + w.cfg(), w.dir).code == 0);
    CHECK(slurp(w.dir / "dataset.bin") == first);

    REQUIRE(cli("train " + w.cfg(), w.dir).code == 0);
    CHECK(fs::exists(w.dir / "model.bin"));
    CHECK(fs::exists(w.dir / "out" / "loss.csv"));

    const Run compare = cli("compare " + w.cfg(), w.dir);
    REQUIRE(compare.code == 0);
    std::ifstream metrics(w.dir / "out" / "metrics.csv");
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(metrics, line)) rows.push_back(line);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == "label,mae,mse,linf,inv_time_seconds");
    CHECK(rows[1].rfind("fem,", 0) == 0);
    CHECK(rows[2].rfind("net,", 0) == 0);
    CHECK(fs::exists(w.dir / "out" / "fields" / "fem_mean.csv"));
    CHECK(fs::exists(w.dir / "out" / "fields" / "net_mean.csv"));
}

TEST_CASE("invert is idempotent and the manifest replays it") {
    Workspace w("mcmcnet_cli_replay");
    REQUIRE(cli("invert --backend fem " + w.cfg(), w.dir).code == 0);
    const fs::path mean = w.dir / "out" / "fields" / "fem_mean.csv";
    const std::string first = slurp(mean);
    REQUIRE(!first.empty());
    REQUIRE(cli("invert --backend fem " + w.cfg(), w.dir).code == 0);
    CHECK(slurp(mean) == first);

    const fs::path manifest = w.dir / "manifest_copy.ini";
    fs::copy_file(w.dir / "out" / "manifest.txt", manifest);
    fs::remove_all(w.dir / "out");
    REQUIRE(cli("invert --backend fem --config " + manifest.string(), w.dir).code == 0);
    CHECK(slurp(mean) == first);
}

TEST_CASE("seed override changes the chain") {
    Workspace w("mcmcnet_cli_seed");
    REQUIRE(cli("invert --backend fem " + w.cfg(), w.dir).code == 0);
    const std::string a = slurp(w.dir / "out" / "fields" / "fem_mean.csv");
    REQUIRE(cli("invert --backend fem --seed 99 " + w.cfg(), w.dir).code == 0);
    CHECK(slurp(w.dir / "out" / "fields" / "fem_mean.csv") != a);
}

TEST_CASE("missing model is a runtime error") {
    Workspace w("mcmcnet_cli_nomodel");
    const Run r = cli("invert --backend net " + w.cfg(), w.dir);
    CHECK(r.code == 1);
    CHECK(!r.err.empty());
}

TEST_CASE("bench and hellinger write their tables") {
    Workspace w("mcmcnet_cli_tables");
    REQUIRE(cli("bench " + w.cfg(), w.dir).code == 0);
    CHECK(slurp(w.dir / "out" / "scaling.csv").rfind("dim,fem_seconds,net_seconds\n", 0) == 0);
    REQUIRE(cli("datagen " + w.cfg(), w.dir).code == 0);
    REQUIRE(cli("hellinger " + w.cfg(), w.dir).code == 0);
    CHECK(slurp(w.dir / "out" / "hellinger.csv").rfind("epoch,l2mu_error,hellinger\n", 0) == 0);
}

}
