#include "mcmcnet/config.hpp"

#include "mcmcnet/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace mcmcnet {

RunConfig default_config(ProblemKind kind) {
    RunConfig c;
    c.problem.kind = kind;
    c.mix = default_mix(kind);
    switch (kind) {
    case ProblemKind::eit:
        // 150 epochs on 800 pairs need a faster start and a decay to match
        // what a constant 1e-3 reaches over 2000 epochs.
        c.train.epochs = 150;
        c.train.minibatch = 32;
        c.train.lr = 3e-3;
        c.train.lr_drop_factor = 0.3;
        c.train.lr_drop_period = 40;
        c.datagen_count = 800;
        c.phantom.circles = {{{0.3, 0.2}, 0.25, c.problem.level_set.values.back()}};
        break;
    case ProblemKind::dot:
        c.problem.matern.ell = 0.2;
        c.train.epochs = 100;
        c.train.minibatch = 8;
        c.train.lr_drop_factor = 0.1;
        c.train.lr_drop_period = 50;
        c.datagen_count = 800;
        c.phantom.circles = {{{0.3, 0.2}, 0.25, 2.0 * c.problem.dot_background}};
        break;
    case ProblemKind::qpat:
        c.train.epochs = 100;
        c.train.minibatch = 8;
        c.train.lr_drop_factor = 0.1;
        c.train.lr_drop_period = 20;
        c.datagen_count = 600;
        break;
    }
    return c;
}

void apply_full_scale(RunConfig& cfg) {
    cfg.mcmc.burn_in = 50000;
    cfg.mcmc.samples = 50000;
    switch (cfg.problem.kind) {
    case ProblemKind::eit:
        cfg.datagen_count = 7200;
        cfg.train.epochs = 2000;
        cfg.train.minibatch = 128;
        cfg.train.lr = 1e-3;
        cfg.train.lr_drop_factor = 1.0;
        break;
    case ProblemKind::dot: cfg.datagen_count = 6400; break;
    case ProblemKind::qpat: cfg.datagen_count = 4800; break;
    }
}

namespace {

struct Entry {
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

double parse_double(const std::string& v) {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (v.find_first_not_of(" \t", pos) != std::string::npos) throw std::invalid_argument("trailing characters");
    return d;
}

long long parse_int(const std::string& v) {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (v.find_first_not_of(" \t", pos) != std::string::npos) throw std::invalid_argument("trailing characters");
    return i;
}

std::vector<double> parse_list(const std::string& v) {
    std::istringstream s(v);
    std::vector<double> out;
    std::string tok;
    while (s >> tok) out.push_back(parse_double(tok));
    return out;
}

std::string fmt_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
    return s;
}

// Groups separated by ';', numbers inside a group by whitespace.
std::vector<std::vector<double>> parse_groups(const std::string& v) {
    std::vector<std::vector<double>> out;
    std::istringstream s(v);
    std::string group;
    while (std::getline(s, group, ';')) {
        if (group.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(parse_list(group));
    }
    return out;
}

template <class Get>
Entry real(Get ref) {
    return {[ref](const RunConfig& c) { return fmt(ref(const_cast<RunConfig&>(c))); },
            [ref](RunConfig& c, const std::string& v) { ref(c) = parse_double(v); }};
}

template <class T, class Get>
Entry integer(Get ref) {
    return {[ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); },
            [ref](RunConfig& c, const std::string& v) {
                const long long i = parse_int(v);
                if (std::is_unsigned_v<T> && i < 0) throw std::invalid_argument("negative");
                ref(c) = static_cast<T>(i);
            }};
}

template <class Get>
Entry text(Get ref) {
    return {[ref](const RunConfig& c) { return ref(const_cast<RunConfig&>(c)); },
            [ref](RunConfig& c, const std::string& v) { ref(c) = v; }};
}

template <class Get>
Entry boolean(Get ref) {
    return {[ref](const RunConfig& c) { return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false"); },
            [ref](RunConfig& c, const std::string& v) {
                if (v == "true" || v == "1") ref(c) = true;
                else if (v == "false" || v == "0") ref(c) = false;
                else throw std::invalid_argument("expected true or false");
            }};
}

template <class Get>
Entry real_list(Get ref) {
    return {[ref](const RunConfig& c) { return fmt_list(ref(const_cast<RunConfig&>(c))); },
            [ref](RunConfig& c, const std::string& v) { ref(c) = parse_list(v); }};
}

template <class Get>
Entry int_list(Get ref) {
    return {[ref](const RunConfig& c) {
                std::string s;
                for (int x : ref(const_cast<RunConfig&>(c))) s += (s.empty() ? "" : " ") + std::to_string(x);
                return s;
            },
            [ref](RunConfig& c, const std::string& v) {
                std::vector<int> out;
                for (double d : parse_list(v)) {
                    if (d != std::floor(d)) throw std::invalid_argument("expected integers");
                    out.push_back(static_cast<int>(d));
                }
                ref(c) = out;
            }};
}

#define FIELD(expr) [](RunConfig & c) -> auto& { return expr; }

const std::map<std::string, Entry>& registry() {
    static const std::map<std::string, Entry> reg = [] {
        std::map<std::string, Entry> r;
        r["run.seed"] = integer<std::uint64_t>(FIELD(c.seed));
        r["mesh.refinement"] = integer<int>(FIELD(c.problem.refinement));
        r["mesh.electrodes"] = integer<int>(FIELD(c.problem.electrodes));
        r["mesh.coverage"] = real(FIELD(c.problem.coverage));
        r["mesh.contact_impedance"] = real(FIELD(c.problem.contact_impedance));
        r["prior.nu"] = real(FIELD(c.problem.matern.nu));
        r["prior.ell"] = real(FIELD(c.problem.matern.ell));
        r["prior.jitter"] = real(FIELD(c.problem.jitter));
        r["prior.thresholds"] = real_list(FIELD(c.problem.level_set.thresholds));
        r["prior.values"] = real_list(FIELD(c.problem.level_set.values));
        r["prior.dot_rho"] = real(FIELD(c.problem.dot_rho));
        r["prior.dot_background"] = real(FIELD(c.problem.dot_background));
        r["prior.dot_log_scale"] = real(FIELD(c.problem.dot_log_scale));
        r["prior.dot_lower"] = real(FIELD(c.problem.dot_lower));
        r["prior.dot_upper"] = real(FIELD(c.problem.dot_upper));
        r["prior.qpat_rho"] = real(FIELD(c.problem.qpat_rho));
        r["prior.qpat_lower"] = real(FIELD(c.problem.qpat_band.lower));
        r["prior.qpat_upper"] = real(FIELD(c.problem.qpat_band.upper));
        r["prior.star_order"] = integer<int>(FIELD(c.problem.star_order));
        r["prior.star_decay"] = real(FIELD(c.problem.star_decay));
        r["prior.star_const_variance"] = real(FIELD(c.problem.star_const_variance));
        r["prior.star_amplitude"] = real(FIELD(c.problem.star_amplitude));
        r["prior.star_base_log_radius"] = real(FIELD(c.problem.star_base_log_radius));
        r["prior.star_kappas"] = real_list(FIELD(c.problem.star_kappas));
        r["prior.star_background"] = real(FIELD(c.problem.star_background));
        r["prior.star_centers"] = {
            [](const RunConfig& c) {
                std::string s;
                for (const auto& p : c.problem.star_centers) s += (s.empty() ? "" : "; ") + fmt(p.x) + " " + fmt(p.y);
                return s;
            },
            [](RunConfig& c, const std::string& v) {
                c.problem.star_centers.clear();
                for (const auto& g : parse_groups(v)) {
                    if (g.size() != 2) throw std::invalid_argument("each center needs 'x y'");
                    c.problem.star_centers.push_back({g[0], g[1]});
                }
            }};
        r["noise.level"] = real(FIELD(c.noise_level));
        r["mcmc.delta"] = real(FIELD(c.mcmc.delta));
        r["mcmc.target_accept"] = real(FIELD(c.mcmc.target_accept));
        r["mcmc.adapt_window"] = integer<int>(FIELD(c.mcmc.adapt_window));
        r["mcmc.burn_in"] = integer<int>(FIELD(c.mcmc.burn_in));
        r["mcmc.samples"] = integer<int>(FIELD(c.mcmc.samples));
        r["mcmc.thin"] = integer<int>(FIELD(c.mcmc.thin));
        r["train.epochs"] = integer<int>(FIELD(c.train.epochs));
        r["train.minibatch"] = integer<int>(FIELD(c.train.minibatch));
        r["train.lr"] = real(FIELD(c.train.lr));
        r["train.lr_drop_factor"] = real(FIELD(c.train.lr_drop_factor));
        r["train.lr_drop_period"] = integer<int>(FIELD(c.train.lr_drop_period));
        r["train.channels"] = integer<int>(FIELD(c.arch.channels));
        r["train.conv_layers"] = integer<int>(FIELD(c.arch.conv_layers));
        r["train.final_relu"] = boolean(FIELD(c.arch.final_relu));
        r["train.holdout"] = real(FIELD(c.holdout));
        r["datagen.count"] = integer<std::size_t>(FIELD(c.datagen_count));
        r["datagen.mix_circles"] = real(FIELD(c.mix.circles));
        r["datagen.mix_prior"] = real(FIELD(c.mix.prior));
        r["datagen.mix_rotated"] = real(FIELD(c.mix.rotated));
        r["phantom.rotation0"] = real(FIELD(c.phantom.rotation0));
        r["phantom.rotation1"] = real(FIELD(c.phantom.rotation1));
        r["phantom.circles"] = {
            [](const RunConfig& c) {
                std::string s;
                for (const auto& k : c.phantom.circles) {
                    s += (s.empty() ? "" : "; ") + fmt(k.center.x) + " " + fmt(k.center.y) + " " + fmt(k.radius) +
                         " " + fmt(k.value);
                }
                return s;
            },
            [](RunConfig& c, const std::string& v) {
                c.phantom.circles.clear();
                for (const auto& g : parse_groups(v)) {
                    if (g.size() != 4) throw std::invalid_argument("each circle needs 'x y radius value'");
                    c.phantom.circles.push_back({{g[0], g[1]}, g[2], g[3]});
                }
            }};
        r["bench.refinements"] = int_list(FIELD(c.bench.refinements));
        r["bench.iterations"] = integer<int>(FIELD(c.bench.iterations));
        r["hellinger.samples"] = integer<std::size_t>(FIELD(c.hellinger.samples));
        r["hellinger.noise_level"] = real(FIELD(c.hellinger.noise_level));
        r["hellinger.checkpoints"] = int_list(FIELD(c.hellinger.checkpoints));
        r["paths.dataset"] = text(FIELD(c.paths.dataset));
        r["paths.model"] = text(FIELD(c.paths.model));
        r["paths.output"] = text(FIELD(c.paths.output));
        return r;
    }();
    return reg;
}

#undef FIELD

template <class F>
void checked(const std::string& key, F&& f) {
    try {
        f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(key, e.what());
    }
}

} // namespace

void validate(const RunConfig& c) {
    checked("mesh/prior", [&] { validate(c.problem); });
    const PcnConfig& m = c.mcmc;
    if (!(m.delta > 0.0 && m.delta < 0.5)) throw ConfigError("mcmc.delta", "must lie in (0, 1/2)");
    if (!(m.target_accept > 0.0 && m.target_accept < 1.0)) throw ConfigError("mcmc.target_accept", "must lie in (0, 1)");
    if (m.adapt_window < 1) throw ConfigError("mcmc.adapt_window", "must be positive");
    if (m.burn_in < 0) throw ConfigError("mcmc.burn_in", "must be nonnegative");
    if (m.samples < 0) throw ConfigError("mcmc.samples", "must be nonnegative");
    if (m.thin < 1) throw ConfigError("mcmc.thin", "must be positive");
    const TrainConfig& t = c.train;
    if (t.epochs < 1) throw ConfigError("train.epochs", "must be positive");
    if (t.minibatch < 1) throw ConfigError("train.minibatch", "must be positive");
    if (!(t.lr > 0.0)) throw ConfigError("train.lr", "must be positive");
    if (!(t.lr_drop_factor > 0.0 && t.lr_drop_factor <= 1.0)) throw ConfigError("train.lr_drop_factor", "must lie in (0, 1]");
    if (t.lr_drop_period < 1) throw ConfigError("train.lr_drop_period", "must be positive");
    if (c.arch.channels < 1) throw ConfigError("train.channels", "must be positive");
    if (c.arch.conv_layers < 1) throw ConfigError("train.conv_layers", "must be positive");
    if (!(c.holdout > 0.0 && c.holdout < 1.0)) throw ConfigError("train.holdout", "must lie in (0, 1)");
    if (!(c.noise_level >= 0.0)) throw ConfigError("noise.level", "must be nonnegative");
    if (c.datagen_count < 1) throw ConfigError("datagen.count", "must be positive");
    checked("datagen", [&] { validate(c.mix, c.problem.kind); });
    if (c.bench.refinements.size() < 3) throw ConfigError("bench.refinements", "need at least 3 levels");
    for (int r : c.bench.refinements) {
        if (r < 2 || r > kMaxRefinement) throw ConfigError("bench.refinements", "levels must lie in [2, 8]");
    }
    if (c.bench.iterations < 1) throw ConfigError("bench.iterations", "must be positive");
    if (c.hellinger.samples < 100) throw ConfigError("hellinger.samples", "must be at least 100");
    if (!(c.hellinger.noise_level > 0.0)) throw ConfigError("hellinger.noise_level", "must be positive");
    if (c.hellinger.checkpoints.empty()) throw ConfigError("hellinger.checkpoints", "must not be empty");
    for (std::size_t i = 0; i < c.hellinger.checkpoints.size(); ++i) {
        if (c.hellinger.checkpoints[i] < 1 || (i > 0 && c.hellinger.checkpoints[i] <= c.hellinger.checkpoints[i - 1])) {
            throw ConfigError("hellinger.checkpoints", "must be positive and strictly increasing");
        }
    }
    for (const auto& k : c.phantom.circles) {
        if (!(k.radius > 0.0)) throw ConfigError("phantom.circles", "radius must be positive");
    }
    if (c.paths.output.empty()) throw ConfigError("paths.output", "must not be empty");
}

RunConfig parse_config(std::istream& in) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("line " + std::to_string(e.line()), e.message());
    }
    ProblemKind kind = ProblemKind::eit;
    if (auto run = tree.get_child_optional("run")) {
        if (auto p = run->get_optional<std::string>("problem")) {
            checked("run.problem", [&] { kind = problem_kind_from_string(*p); });
        }
    }
    RunConfig cfg = default_config(kind);
    bool full_scale = false;
    for (const auto& [section, body] : tree) {
        if (section == "manifest") continue;
        if (!body.data().empty()) throw ConfigError(section, "keys must live inside a [section]");
        for (const auto& [key, value] : body) {
            const std::string path = section + "." + key;
            const std::string v = value.get_value<std::string>();
            if (path == "run.problem") continue;
            if (path == "run.full_scale") {
                checked(path, [&] {
                    if (v != "true" && v != "false") throw std::invalid_argument("expected true or false");
                    full_scale = v == "true";
                });
                continue;
            }
            const auto it = registry().find(path);
            if (it == registry().end()) throw ConfigError(path, "unknown key");
            checked(path, [&] { it->second.set(cfg, v); });
        }
    }
    if (full_scale) apply_full_scale(cfg);
    validate(cfg);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open " + path);
    return parse_config(in);
}

void write_config(std::ostream& out, const RunConfig& cfg) {
    out << "[run]\nproblem = " << to_string(cfg.problem.kind) << "\nseed = " << cfg.seed << '\n';
    std::string section = "run";
    for (const auto& [path, entry] : registry()) {
        if (path == "run.seed") continue;
        const auto dot = path.find('.');
        const std::string sec = path.substr(0, dot);
        if (sec != section) {
            out << "\n[" << sec << "]\n";
            section = sec;
        }
        out << path.substr(dot + 1) << " = " << entry.get(cfg) << '\n';
    }
}

} // namespace mcmcnet
