#pragma once

// A forward problem bundles mesh, electrodes, prior and solver, and maps a
// latent vector to the physical coefficient field and on to measurements.

#include "mcmcnet/fem.hpp"
#include "mcmcnet/mesh.hpp"
#include "mcmcnet/prior.hpp"

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mcmcnet {

enum class ProblemKind { eit, dot, qpat };

std::string to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& s);

struct ProblemConfig {
    ProblemKind kind = ProblemKind::eit;
    int refinement = 3;
    int electrodes = 16;
    double coverage = 0.5;
    double contact_impedance = 0.01;
    /// EIT and DOT latent fields live on mesh nodes.
    MaternParams matern{3.0, 0.4};
    double jitter = 1e-10;

    /// EIT: sigma = level_set(w).
    LevelSetSpec level_set{{-1e9, 1.0, 1e9}, {1.0, 2.0}};

    /// DOT: mu = clamp(dot_background * exp(dot_log_scale * w)).
    double dot_rho = 0.1;
    double dot_background = 0.5;
    double dot_log_scale = 0.5;
    double dot_lower = 0.05;
    double dot_upper = 5.0;

    /// QPAT: star-shaped inclusions with fixed centers. The latent vector
    /// holds the packed Fourier coefficients of every inclusion;
    /// psi = star_base_log_radius + star_amplitude * coefficients.
    double qpat_rho = 0.02;
    QpatBand qpat_band{0.01, 100.0};
    int star_order = 3;
    double star_decay = 2.0;
    double star_const_variance = 1.0;
    double star_amplitude = 0.2;
    double star_base_log_radius = -1.3;
    std::vector<Point> star_centers{{-0.4, 0.1}, {0.35, -0.25}};
    std::vector<double> star_kappas{0.2, 0.15};
    double star_background = 0.05;
};

/// Throws InvalidArgument naming the first offending field.
void validate(const ProblemConfig& cfg);

/// Circular anomaly for phantoms and training data.
struct Circle {
    Point center;
    double radius = 0.2;
    double value = 2.0;
};

class InverseProblem {
public:
    explicit InverseProblem(const ProblemConfig& cfg);

    const ProblemConfig& config() const { return cfg_; }
    ProblemKind kind() const { return cfg_.kind; }
    const TriMesh& mesh() const { return mesh_; }
    const ElectrodeLayout& layout() const { return layout_; }
    const CurrentPatterns& patterns() const { return patterns_; }
    const GPPrior& prior() const { return prior_; }
    std::size_t latent_dim() const { return static_cast<std::size_t>(prior_.dim()); }

    /// Physical coefficient per triangle.
    ParamField physical_field(std::span<const double> latent) const;
    /// Network input: the physical field averaged onto mesh nodes.
    std::vector<double> net_input(const ParamField& field) const;
    int input_dim() const { return static_cast<int>(mesh_.node_count()); }

    /// Noiseless measurement of shape output_rows() x output_cols().
    Eigen::MatrixXd forward(const ParamField& field) const;
    Measurement measure(const ParamField& field) const;
    int output_rows() const;
    int output_cols() const;
    MeasurementKind measurement_kind() const;

    /// Background value of the physical field.
    double background() const;
    /// Admissible range of the physical field.
    std::pair<double, double> bounds() const;

    /// Background with circular anomalies; later circles overwrite earlier ones.
    ParamField circle_phantom(const std::vector<Circle>& circles) const;
    /// QPAT ground truth: the configured inclusions with hand-picked shapes,
    /// each rotated about its center.
    StarShapeSpec qpat_truth_spec(double rotation0 = 0.0, double rotation1 = 0.0) const;
    /// Star spec described by a latent vector.
    StarShapeSpec star_spec(std::span<const double> latent) const;

private:
    ProblemConfig cfg_;
    TriMesh mesh_;
    ElectrodeLayout layout_;
    CurrentPatterns patterns_;
    GPPrior prior_;
    std::vector<std::vector<int>> node_tris_;
    std::unique_ptr<CemSolver> cem_;
    std::unique_ptr<DotSolver> dot_;
    std::unique_ptr<QpatSolver> qpat_;
};

/// Average of nodal values over the vertices of each triangle.
std::vector<double> nodal_to_centroid(const TriMesh& mesh, std::span<const double> nodal);

/// psi(theta - alpha): the series rotated by alpha.
FourierSeries rotated(const FourierSeries& s, double alpha);

/// Zero-pad a measurement into the 16x16 network output grid (row-major).
std::vector<double> to_grid(const Eigen::MatrixXd& m);
/// Top-left rows x cols block of a 16x16 grid.
Eigen::MatrixXd from_grid(std::span<const double> grid, int rows, int cols);

} // namespace mcmcnet
