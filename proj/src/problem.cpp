#include "mcmcnet/problem.hpp"

#include "mcmcnet/error.hpp"
#include "mcmcnet/surrogate.hpp"

#include <algorithm>
#include <cmath>

namespace mcmcnet {

std::string to_string(ProblemKind kind) {
    switch (kind) {
    case ProblemKind::eit: return "eit";
    case ProblemKind::dot: return "dot";
    case ProblemKind::qpat: return "qpat";
    }
    return "unknown";
}

ProblemKind problem_kind_from_string(const std::string& s) {
    if (s == "eit") return ProblemKind::eit;
    if (s == "dot") return ProblemKind::dot;
    if (s == "qpat") return ProblemKind::qpat;
    throw InvalidArgument("unknown problem kind '" + s + "' (expected eit, dot or qpat)");
}

void validate(const ProblemConfig& cfg) {
    if (cfg.refinement < 0 || cfg.refinement > kMaxRefinement) throw InvalidArgument("refinement out of range");
    if (cfg.electrodes < 2) throw InvalidArgument("electrodes must be at least 2");
    if (cfg.electrodes > kRasterSize) throw InvalidArgument("electrodes must not exceed 16 (network output width)");
    if (!(cfg.coverage > 0.0 && cfg.coverage < 1.0)) throw InvalidArgument("coverage must be in (0, 1)");
    if (!(cfg.contact_impedance > 0.0)) throw InvalidArgument("contact_impedance must be positive");
    if (!(cfg.matern.nu > 0.0 && cfg.matern.ell > 0.0)) throw InvalidArgument("Matern nu and ell must be positive");
    if (!(cfg.jitter >= 0.0)) throw InvalidArgument("jitter must be nonnegative");
    validate(cfg.level_set);
    if (!(cfg.dot_rho > 0.0)) throw InvalidArgument("dot_rho must be positive");
    if (!(cfg.dot_lower > 0.0 && cfg.dot_lower <= cfg.dot_background && cfg.dot_background <= cfg.dot_upper)) {
        throw InvalidArgument("DOT bounds must satisfy 0 < lower <= background <= upper");
    }
    if (!(cfg.dot_log_scale > 0.0)) throw InvalidArgument("dot_log_scale must be positive");
    if (!(cfg.qpat_rho > 0.0)) throw InvalidArgument("qpat_rho must be positive");
    if (!(cfg.qpat_band.lower > 0.0 && cfg.qpat_band.lower <= cfg.qpat_band.upper)) {
        throw InvalidArgument("QPAT band must satisfy 0 < lower <= upper");
    }
    if (cfg.star_order < 1) throw InvalidArgument("star_order must be at least 1");
    if (!(cfg.star_decay > 0.5)) throw InvalidArgument("star_decay must exceed 1/2");
    if (!(cfg.star_const_variance > 0.0)) throw InvalidArgument("star_const_variance must be positive");
    if (!(cfg.star_amplitude > 0.0)) throw InvalidArgument("star_amplitude must be positive");
    if (cfg.star_centers.empty() || cfg.star_centers.size() != cfg.star_kappas.size()) {
        throw InvalidArgument("star centers and kappas must be nonempty and of equal length");
    }
    for (const auto& c : cfg.star_centers) {
        if (!(std::hypot(c.x, c.y) < 1.0)) throw InvalidArgument("star centers must lie inside the disk");
    }
    const auto in_band = [&](double v) { return v >= cfg.qpat_band.lower && v <= cfg.qpat_band.upper; };
    for (double k : cfg.star_kappas) {
        if (!in_band(k)) throw InvalidArgument("star kappas must lie in the QPAT band");
    }
    if (!in_band(cfg.star_background)) throw InvalidArgument("star background must lie in the QPAT band");
}

std::vector<double> nodal_to_centroid(const TriMesh& mesh, std::span<const double> nodal) {
    if (nodal.size() != mesh.node_count()) throw InvalidArgument("nodal field has the wrong length");
    std::vector<double> out(mesh.tri_count());
    for (std::size_t t = 0; t < out.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        out[t] = (nodal[tri[0]] + nodal[tri[1]] + nodal[tri[2]]) / 3.0;
    }
    return out;
}

FourierSeries rotated(const FourierSeries& s, double alpha) {
    FourierSeries r = s;
    for (int k = 0; k < s.order(); ++k) {
        const double c = std::cos((k + 1) * alpha);
        const double sn = std::sin((k + 1) * alpha);
        r.a[k] = s.a[k] * c - s.b[k] * sn;
        r.b[k] = s.a[k] * sn + s.b[k] * c;
    }
    return r;
}

std::vector<double> to_grid(const Eigen::MatrixXd& m) {
    if (m.rows() > kGridSide || m.cols() > kGridSide) throw InvalidArgument("measurement exceeds the 16x16 grid");
    std::vector<double> g(kGridSize, 0.0);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) g[i * kGridSide + j] = m(i, j);
    }
    return g;
}

Eigen::MatrixXd from_grid(std::span<const double> grid, int rows, int cols) {
    if (grid.size() != static_cast<std::size_t>(kGridSize)) throw InvalidArgument("grid must have 256 entries");
    if (rows < 1 || cols < 1 || rows > kGridSide || cols > kGridSide) throw InvalidArgument("bad crop shape");
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) m(i, j) = grid[i * kGridSide + j];
    }
    return m;
}

InverseProblem::InverseProblem(const ProblemConfig& cfg) : cfg_(cfg) {
    validate(cfg_);
    mesh_ = build_disk_mesh(cfg_.refinement);
    node_tris_.resize(mesh_.node_count());
    for (std::size_t t = 0; t < mesh_.tri_count(); ++t) {
        for (int v : mesh_.triangles[t]) node_tris_[v].push_back(static_cast<int>(t));
    }

    switch (cfg_.kind) {
    case ProblemKind::eit:
        layout_ = assign_electrodes(mesh_, cfg_.electrodes, cfg_.coverage, cfg_.contact_impedance);
        patterns_ = trigonometric_patterns(layout_.angles, cfg_.electrodes - 1);
        prior_ = build_prior(mesh_.nodes, cfg_.matern, cfg_.jitter);
        cem_ = std::make_unique<CemSolver>(mesh_, layout_);
        break;
    case ProblemKind::dot:
        layout_ = assign_electrodes(mesh_, cfg_.electrodes, cfg_.coverage, cfg_.contact_impedance);
        patterns_ = source_patterns(layout_.angles, cfg_.electrodes);
        prior_ = build_prior(mesh_.nodes, cfg_.matern, cfg_.jitter);
        dot_ = std::make_unique<DotSolver>(mesh_, layout_, cfg_.dot_rho);
        break;
    case ProblemKind::qpat: {
        std::vector<double> var;
        for (std::size_t i = 0; i < cfg_.star_centers.size(); ++i) {
            const auto v = star_prior_variances(cfg_.star_order, cfg_.star_decay, cfg_.star_const_variance);
            var.insert(var.end(), v.begin(), v.end());
        }
        prior_ = diagonal_prior(var);
        qpat_ = std::make_unique<QpatSolver>(mesh_, cfg_.qpat_rho, cfg_.qpat_band);
        break;
    }
    }
}

StarShapeSpec InverseProblem::star_spec(std::span<const double> latent) const {
    if (latent.size() != latent_dim()) throw InvalidArgument("latent vector has the wrong dimension");
    const int K = cfg_.star_order;
    const std::size_t per = static_cast<std::size_t>(2 * K + 1);
    StarShapeSpec spec;
    spec.background = cfg_.star_background;
    for (std::size_t i = 0; i < cfg_.star_centers.size(); ++i) {
        std::vector<double> c(latent.begin() + i * per, latent.begin() + (i + 1) * per);
        for (double& x : c) x *= cfg_.star_amplitude;
        c[0] += cfg_.star_base_log_radius;
        spec.inclusions.push_back({cfg_.star_centers[i], unpack(c, K), cfg_.star_kappas[i]});
    }
    return spec;
}

StarShapeSpec InverseProblem::qpat_truth_spec(double rotation0, double rotation1) const {
    StarShapeSpec spec;
    spec.background = cfg_.star_background;
    const int K = cfg_.star_order;
    for (std::size_t i = 0; i < cfg_.star_centers.size(); ++i) {
        FourierSeries s;
        s.a.assign(K, 0.0);
        s.b.assign(K, 0.0);
        if (i % 2 == 0) {
            s.a0 = std::log(0.3);
            if (K >= 2) s.a[1] = 0.2;
        } else {
            s.a0 = std::log(0.22);
            s.b[0] = 0.1;
            if (K >= 3) s.b[2] = 0.12;
        }
        const double rot = i == 0 ? rotation0 : (i == 1 ? rotation1 : 0.0);
        spec.inclusions.push_back({cfg_.star_centers[i], rotated(s, rot), cfg_.star_kappas[i]});
    }
    return spec;
}

ParamField InverseProblem::physical_field(std::span<const double> latent) const {
    if (latent.size() != latent_dim()) {
        throw InvalidArgument("latent vector has " + std::to_string(latent.size()) + " entries, expected " +
                              std::to_string(latent_dim()));
    }
    switch (cfg_.kind) {
    case ProblemKind::eit: {
        const auto w = nodal_to_centroid(mesh_, latent);
        return {FieldKind::conductivity, level_set_map(w, cfg_.level_set), mesh_.id};
    }
    case ProblemKind::dot: {
        auto w = nodal_to_centroid(mesh_, latent);
        for (double& x : w) {
            x = std::clamp(cfg_.dot_background * std::exp(cfg_.dot_log_scale * x), cfg_.dot_lower, cfg_.dot_upper);
        }
        return {FieldKind::absorption, std::move(w), mesh_.id};
    }
    case ProblemKind::qpat:
        return star_shape_map(mesh_, star_spec(latent));
    }
    throw InvalidArgument("unknown problem kind");
}

std::vector<double> InverseProblem::net_input(const ParamField& field) const {
    if (field.values.size() != mesh_.tri_count()) throw InvalidArgument("field must hold one value per triangle");
    std::vector<double> out(mesh_.node_count());
    for (std::size_t v = 0; v < out.size(); ++v) {
        double s = 0.0;
        for (int t : node_tris_[v]) s += field.values[t];
        out[v] = s / static_cast<double>(node_tris_[v].size());
    }
    return out;
}

Eigen::MatrixXd InverseProblem::forward(const ParamField& field) const {
    switch (cfg_.kind) {
    case ProblemKind::eit: return cem_->voltages(field, patterns_);
    case ProblemKind::dot: return dot_->readings(field, patterns_);
    case ProblemKind::qpat: return qpat_->raster(field, [](const Point&) { return 1.0; });
    }
    throw InvalidArgument("unknown problem kind");
}

Measurement InverseProblem::measure(const ParamField& field) const {
    return {measurement_kind(), forward(field), 0.0};
}

int InverseProblem::output_rows() const {
    return cfg_.kind == ProblemKind::qpat ? kRasterSize : patterns_.J();
}

int InverseProblem::output_cols() const {
    return cfg_.kind == ProblemKind::qpat ? kRasterSize : patterns_.L();
}

MeasurementKind InverseProblem::measurement_kind() const {
    switch (cfg_.kind) {
    case ProblemKind::eit: return MeasurementKind::eit;
    case ProblemKind::dot: return MeasurementKind::dot;
    case ProblemKind::qpat: return MeasurementKind::qpat;
    }
    return MeasurementKind::eit;
}

double InverseProblem::background() const {
    switch (cfg_.kind) {
    case ProblemKind::eit: return cfg_.level_set.values.front();
    case ProblemKind::dot: return cfg_.dot_background;
    case ProblemKind::qpat: return cfg_.star_background;
    }
    return 1.0;
}

std::pair<double, double> InverseProblem::bounds() const {
    switch (cfg_.kind) {
    case ProblemKind::eit: {
        const auto [lo, hi] = std::minmax_element(cfg_.level_set.values.begin(), cfg_.level_set.values.end());
        return {*lo, *hi};
    }
    case ProblemKind::dot: return {cfg_.dot_lower, cfg_.dot_upper};
    case ProblemKind::qpat: return {cfg_.qpat_band.lower, cfg_.qpat_band.upper};
    }
    return {0.0, 0.0};
}

ParamField InverseProblem::circle_phantom(const std::vector<Circle>& circles) const {
    const FieldKind kind = cfg_.kind == ProblemKind::eit   ? FieldKind::conductivity
                           : cfg_.kind == ProblemKind::dot ? FieldKind::absorption
                                                           : FieldKind::qpat_absorption;
    ParamField field{kind, std::vector<double>(mesh_.tri_count(), background()), mesh_.id};
    const auto [lo, hi] = bounds();
    const auto cents = centroids(mesh_);
    for (const auto& c : circles) {
        if (!(c.radius > 0.0)) throw InvalidArgument("circle radius must be positive");
        if (!(c.value >= lo && c.value <= hi)) throw InvalidArgument("circle value outside the admissible range");
        for (std::size_t t = 0; t < cents.size(); ++t) {
            if (std::hypot(cents[t].x - c.center.x, cents[t].y - c.center.y) <= c.radius) field.values[t] = c.value;
        }
    }
    return field;
}

} // namespace mcmcnet
