#pragma once

#include "mcmcnet/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace mcmcnet {

enum class FieldKind { conductivity, absorption, qpat_absorption, latent };

std::string to_string(FieldKind kind);

/// Coefficient field. Physical kinds hold one value per triangle; latent
/// fields may live on nodes or triangles.
struct ParamField {
    FieldKind kind = FieldKind::conductivity;
    std::vector<double> values;
    std::uint64_t mesh_id = 0;
};

/// Throws InvalidArgument unless every value lies in [lower, upper] and
/// the field has one value per triangle of `mesh`.
void check_physical(const ParamField& field, const TriMesh& mesh, double lower, double upper);

/// J x L matrix of injected currents (EIT) or boundary source amplitudes (DOT).
struct CurrentPatterns {
    Eigen::MatrixXd amplitudes;

    int J() const { return static_cast<int>(amplitudes.rows()); }
    int L() const { return static_cast<int>(amplitudes.cols()); }
};

/// Zero-sum trigonometric patterns cos(k t_l), sin(k t_l), k = 1, 2, ...,
/// interleaved, first J of them. J <= L - 1 for equally spaced angles.
CurrentPatterns trigonometric_patterns(const std::vector<double>& angles, int J);
/// e_l - e_{l+1}, l = 0 .. L-2.
CurrentPatterns adjacent_patterns(int L);
/// Constant pattern followed by the trigonometric ones; need not sum to zero.
CurrentPatterns source_patterns(const std::vector<double>& angles, int J);

/// Zero-sum rows (to 1e-12) and full row rank.
bool patterns_valid(const CurrentPatterns& p, std::string* why = nullptr);

enum class MeasurementKind { eit, dot, qpat };

std::string to_string(MeasurementKind kind);
MeasurementKind measurement_kind_from_string(const std::string& s);

struct Measurement {
    MeasurementKind kind = MeasurementKind::eit;
    Eigen::MatrixXd data;
    double noise_sigma = 0.0;
};

constexpr int kRasterSize = 16;

/// Geometry of piecewise-linear elements on a mesh (owned copy).
class P1Assembler {
public:
    explicit P1Assembler(const TriMesh& mesh);

    const TriMesh& mesh() const { return mesh_; }
    const std::vector<double>& areas() const { return areas_; }

    /// Local stiffness entries for unit coefficient, 9 per triangle, row-major.
    const std::vector<std::array<double, 9>>& local_stiffness() const { return local_; }

private:
    TriMesh mesh_;
    std::vector<double> areas_;
    std::vector<std::array<double, 9>> local_;
};

/// The solvers below keep a fixed sparsity pattern so assembly only refills
/// the value array. Every solve runs its own factorization, so a const
/// instance can be shared between threads.

/// Complete electrode model. Unknowns are nodal potentials followed by
/// L-1 coordinates of the grounded electrode voltages (sum_l U_l = 0).
class CemSolver {
public:
    CemSolver(const TriMesh& mesh, const ElectrodeLayout& layout);

    /// Rows are patterns: result(j, l) = U^{(j)}_l.
    Eigen::MatrixXd voltages(const ParamField& sigma, const CurrentPatterns& patterns) const;
    /// R with U = R I for every zero-sum I.
    Eigen::MatrixXd resistivity(const ParamField& sigma) const;

    int electrode_count() const { return L_; }

private:
    Eigen::MatrixXd solve_grounded(const ParamField& sigma, const Eigen::MatrixXd& currents) const;

    ElectrodeLayout layout_;
    int L_;
    P1Assembler p1_;
    Eigen::SparseMatrix<double> pattern_;
    std::vector<double> base_values_;
    std::vector<std::array<int, 9>> slots_;
};

/// Diffusion with absorption and Robin boundary u + 2 rho du/dn = f.
/// Sources are supported on the electrode arcs; readings are arc averages.
class DotSolver {
public:
    DotSolver(const TriMesh& mesh, const ElectrodeLayout& layout, double rho);

    Eigen::MatrixXd readings(const ParamField& mu, const CurrentPatterns& sources) const;

private:
    ElectrodeLayout layout_;
    double rho_;
    P1Assembler p1_;
    Eigen::SparseMatrix<double> pattern_;
    std::vector<double> base_values_;
    std::vector<std::array<int, 9>> slots_;
    std::vector<int> diag_slot_;
    Eigen::MatrixXd arc_weights_; // L x N, row l integrates phi_i over e_l / |e_l|
    Eigen::MatrixXd arc_load_;    // N x L, column l is (1/2) int_{e_l} phi_i
};

struct QpatBand {
    double lower = 0.01;
    double upper = 100.0;
};

/// Diffusion with absorption and Dirichlet data g. Observation is the
/// absorbed energy H = gamma * u, rasterized onto a 16x16 grid over [-1,1]^2.
class QpatSolver {
public:
    QpatSolver(const TriMesh& mesh, double rho, QpatBand band = {});

    /// Nodal solution u.
    Eigen::VectorXd potential(const ParamField& gamma, const std::function<double(const Point&)>& g) const;
    Eigen::MatrixXd raster(const ParamField& gamma, const std::function<double(const Point&)>& g) const;

    /// Triangle sampled by each raster cell (row-major), -1 outside the disk.
    const std::vector<int>& cell_triangles() const { return cell_tri_; }
    static Point cell_center(int row, int col);

private:
    double rho_;
    QpatBand band_;
    P1Assembler p1_;
    std::vector<int> interior_index_; // -1 for boundary nodes
    std::vector<int> boundary_nodes_;
    Eigen::SparseMatrix<double> pattern_;
    std::vector<std::array<int, 9>> slots_; // -1 where either node is on the boundary
    std::vector<int> cell_tri_;
};

Measurement solve_cem(const TriMesh& mesh, const ElectrodeLayout& layout, const ParamField& sigma,
                      const CurrentPatterns& patterns);
Eigen::MatrixXd resistivity_matrix(const TriMesh& mesh, const ElectrodeLayout& layout,
                                   const ParamField& sigma);
Measurement solve_dot(const TriMesh& mesh, const ElectrodeLayout& layout, const ParamField& mu,
                      double rho, const CurrentPatterns& sources);
Measurement solve_qpat(const TriMesh& mesh, const ParamField& gamma, double rho,
                       const std::function<double(const Point&)>& g, QpatBand band = {});

/// Adds N(0, (level * rms)^2) noise entrywise; records the noise sigma.
Measurement add_noise(const Measurement& m, double level, std::mt19937_64& rng);

double rms(const Eigen::MatrixXd& m);

/// First line `kind,rows,cols,noise_sigma`, then one CSV line per row.
void write_measurement_csv(std::ostream& out, const Measurement& m);
Measurement read_measurement_csv(std::istream& in);

} // namespace mcmcnet
