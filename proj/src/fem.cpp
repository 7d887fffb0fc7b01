#include "mcmcnet/fem.hpp"

#include "mcmcnet/error.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace mcmcnet {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

// Above this many unknowns the solvers switch to conjugate gradients.
constexpr Eigen::Index kDirectSolveLimit = 60000;

SpMat zero_pattern(Eigen::Index n, const std::vector<Eigen::Triplet<double>>& entries) {
    SpMat m(n, n);
    m.setFromTriplets(entries.begin(), entries.end());
    m.makeCompressed();
    std::fill(m.valuePtr(), m.valuePtr() + m.nonZeros(), 0.0);
    return m;
}

int slot_of(const SpMat& m, int row, int col) {
    const int* inner = m.innerIndexPtr();
    const int begin = m.outerIndexPtr()[col];
    const int end = m.outerIndexPtr()[col + 1];
    const int* it = std::lower_bound(inner + begin, inner + end, row);
    if (it == inner + end || *it != row) throw Error("sparsity pattern is missing an entry");
    return static_cast<int>(it - inner);
}

Eigen::MatrixXd solve_spd(const SpMat& a, const Eigen::MatrixXd& rhs) {
    if (a.rows() <= kDirectSolveLimit) {
        Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt;
        ldlt.compute(a);
        if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
            throw SolverError("sparse factorization failed: system is singular or indefinite");
        }
        return ldlt.solve(rhs);
    }
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-10);
    cg.compute(a);
    Eigen::MatrixXd x(rhs.rows(), rhs.cols());
    for (Eigen::Index j = 0; j < rhs.cols(); ++j) {
        x.col(j) = cg.solve(rhs.col(j));
        if (cg.info() != Eigen::Success) throw SolverError("conjugate gradient did not converge");
    }
    return x;
}

void check_positive(const ParamField& field, std::size_t tri_count, const char* name) {
    if (field.values.size() != tri_count) {
        throw InvalidArgument(std::string(name) + " has " + std::to_string(field.values.size()) +
                              " values, mesh has " + std::to_string(tri_count) + " triangles");
    }
    for (std::size_t t = 0; t < tri_count; ++t) {
        const double v = field.values[t];
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw InvalidArgument(std::string("non-positive ") + name + " at element " + std::to_string(t));
        }
    }
}

void check_mesh(const ParamField& field, const TriMesh& mesh) {
    if (field.mesh_id != 0 && field.mesh_id != mesh.id) {
        throw InvalidArgument("field belongs to a different mesh");
    }
}

// Trigonometric basis value: index 0 -> cos(t), 1 -> sin(t), 2 -> cos(2t), ...
double trig(int index, double angle) {
    const int k = index / 2 + 1;
    return index % 2 == 0 ? std::cos(k * angle) : std::sin(k * angle);
}

} // namespace

std::string to_string(FieldKind kind) {
    switch (kind) {
    case FieldKind::conductivity: return "conductivity";
    case FieldKind::absorption: return "absorption";
    case FieldKind::qpat_absorption: return "qpat_absorption";
    case FieldKind::latent: return "latent";
    }
    return "unknown";
}

std::string to_string(MeasurementKind kind) {
    switch (kind) {
    case MeasurementKind::eit: return "eit";
    case MeasurementKind::dot: return "dot";
    case MeasurementKind::qpat: return "qpat";
    }
    return "unknown";
}

MeasurementKind measurement_kind_from_string(const std::string& s) {
    if (s == "eit") return MeasurementKind::eit;
    if (s == "dot") return MeasurementKind::dot;
    if (s == "qpat") return MeasurementKind::qpat;
    throw FormatError("unknown measurement kind '" + s + "'");
}

void check_physical(const ParamField& field, const TriMesh& mesh, double lower, double upper) {
    if (field.values.size() != mesh.tri_count()) {
        throw InvalidArgument("field size does not match triangle count");
    }
    for (std::size_t t = 0; t < field.values.size(); ++t) {
        const double v = field.values[t];
        if (!(v >= lower && v <= upper)) {
            std::ostringstream msg;
            msg << to_string(field.kind) << " value " << v << " at element " << t << " outside ["
                << lower << ", " << upper << "]";
            throw InvalidArgument(msg.str());
        }
    }
}

CurrentPatterns trigonometric_patterns(const std::vector<double>& angles, int J) {
    const int L = static_cast<int>(angles.size());
    if (J < 1 || J > L - 1) throw InvalidArgument("trigonometric patterns need 1 <= J <= L-1");
    CurrentPatterns p{Eigen::MatrixXd(J, L)};
    for (int j = 0; j < J; ++j) {
        for (int l = 0; l < L; ++l) p.amplitudes(j, l) = trig(j, angles[l]);
    }
    return p;
}

CurrentPatterns adjacent_patterns(int L) {
    if (L < 2) throw InvalidArgument("adjacent patterns need at least two electrodes");
    CurrentPatterns p{Eigen::MatrixXd::Zero(L - 1, L)};
    for (int l = 0; l + 1 < L; ++l) {
        p.amplitudes(l, l) = 1.0;
        p.amplitudes(l, l + 1) = -1.0;
    }
    return p;
}

CurrentPatterns source_patterns(const std::vector<double>& angles, int J) {
    const int L = static_cast<int>(angles.size());
    if (J < 1 || J > L) throw InvalidArgument("source patterns need 1 <= J <= L");
    CurrentPatterns p{Eigen::MatrixXd(J, L)};
    for (int l = 0; l < L; ++l) p.amplitudes(0, l) = 1.0;
    for (int j = 1; j < J; ++j) {
        for (int l = 0; l < L; ++l) p.amplitudes(j, l) = trig(j - 1, angles[l]);
    }
    return p;
}

bool patterns_valid(const CurrentPatterns& p, std::string* why) {
    for (int j = 0; j < p.J(); ++j) {
        if (std::abs(p.amplitudes.row(j).sum()) > 1e-12) {
            if (why) *why = "pattern " + std::to_string(j) + " does not sum to zero";
            return false;
        }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(p.amplitudes);
    lu.setThreshold(1e-10);
    if (lu.rank() != p.J()) {
        if (why) *why = "patterns are linearly dependent";
        return false;
    }
    return true;
}

P1Assembler::P1Assembler(const TriMesh& mesh) : mesh_(mesh) {
    areas_.reserve(mesh.tri_count());
    local_.reserve(mesh.tri_count());
    for (std::size_t t = 0; t < mesh.tri_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        const double area = signed_area(mesh, t);
        if (!(area > 0.0)) throw InvalidArgument("mesh has a degenerate or inverted triangle");
        // grad phi_i = (y_j - y_k, x_k - x_j) / (2A), (i, j, k) cyclic
        double gx[3], gy[3];
        for (int i = 0; i < 3; ++i) {
            const Point& pj = mesh.nodes[tri[(i + 1) % 3]];
            const Point& pk = mesh.nodes[tri[(i + 2) % 3]];
            gx[i] = (pj.y - pk.y) / (2.0 * area);
            gy[i] = (pk.x - pj.x) / (2.0 * area);
        }
        std::array<double, 9> k{};
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) k[3 * a + b] = area * (gx[a] * gx[b] + gy[a] * gy[b]);
        }
        areas_.push_back(area);
        local_.push_back(k);
    }
}

// ---------------------------------------------------------------- CEM

CemSolver::CemSolver(const TriMesh& mesh, const ElectrodeLayout& layout)
    : layout_(layout), L_(layout.count()), p1_(mesh) {
    if (layout.mesh_id != 0 && layout.mesh_id != mesh.id) {
        throw InvalidArgument("electrode layout was built for a different mesh");
    }
    if (L_ < 2) throw InvalidArgument("CEM needs at least two electrodes");
    const int n = static_cast<int>(mesh.node_count());
    const int dim = n + L_ - 1;

    // Electrode blocks before the change of basis U = C beta with
    // C = [e_0 - e_{k+1}]: node-node, node-electrode and electrode diagonal.
    std::vector<Eigen::Triplet<double>> fixed;
    std::vector<std::vector<std::pair<int, double>>> coupling(L_); // (node, -int phi / z)
    std::vector<double> electrode_diag(L_, 0.0);
    for (int l = 0; l < L_; ++l) {
        const double inv_z = 1.0 / layout.contact_impedances[l];
        for (int e : layout.electrode_edges[l]) {
            const auto& edge = mesh.boundary_edges[e];
            const double h = edge_length(mesh, edge);
            const int a = edge[0];
            const int b = edge[1];
            fixed.emplace_back(a, a, inv_z * h / 3.0);
            fixed.emplace_back(b, b, inv_z * h / 3.0);
            fixed.emplace_back(a, b, inv_z * h / 6.0);
            fixed.emplace_back(b, a, inv_z * h / 6.0);
            coupling[l].emplace_back(a, -inv_z * h / 2.0);
            coupling[l].emplace_back(b, -inv_z * h / 2.0);
            electrode_diag[l] += inv_z * h;
        }
    }
    for (int k = 0; k < L_ - 1; ++k) {
        const int col = n + k;
        for (auto [node, w] : coupling[0]) {
            fixed.emplace_back(node, col, w);
            fixed.emplace_back(col, node, w);
        }
        for (auto [node, w] : coupling[k + 1]) {
            fixed.emplace_back(node, col, -w);
            fixed.emplace_back(col, node, -w);
        }
        for (int m = 0; m < L_ - 1; ++m) {
            fixed.emplace_back(col, n + m, electrode_diag[0] + (k == m ? electrode_diag[k + 1] : 0.0));
        }
    }

    std::vector<Eigen::Triplet<double>> entries = fixed;
    for (const auto& tri : mesh.triangles) {
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) entries.emplace_back(tri[a], tri[b], 0.0);
        }
    }
    pattern_ = zero_pattern(dim, entries);

    SpMat base(dim, dim);
    base.setFromTriplets(fixed.begin(), fixed.end());
    base_values_.assign(pattern_.nonZeros(), 0.0);
    for (int col = 0; col < base.outerSize(); ++col) {
        for (SpMat::InnerIterator it(base, col); it; ++it) {
            base_values_[slot_of(pattern_, static_cast<int>(it.row()), col)] += it.value();
        }
    }

    slots_.reserve(mesh.tri_count());
    for (const auto& tri : mesh.triangles) {
        std::array<int, 9> s{};
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) s[3 * a + b] = slot_of(pattern_, tri[a], tri[b]);
        }
        slots_.push_back(s);
    }
}

Eigen::MatrixXd CemSolver::solve_grounded(const ParamField& sigma, const Eigen::MatrixXd& currents) const {
    const TriMesh& mesh = p1_.mesh();
    check_mesh(sigma, mesh);
    check_positive(sigma, mesh.tri_count(), "conductivity");
    if (currents.rows() != L_) throw InvalidArgument("current vectors must have one entry per electrode");

    SpMat a = pattern_;
    double* values = a.valuePtr();
    std::copy(base_values_.begin(), base_values_.end(), values);
    const auto& local = p1_.local_stiffness();
    for (std::size_t t = 0; t < mesh.tri_count(); ++t) {
        const double s = sigma.values[t];
        for (int k = 0; k < 9; ++k) values[slots_[t][k]] += s * local[t][k];
    }

    const int n = static_cast<int>(mesh.node_count());
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + L_ - 1, currents.cols());
    for (Eigen::Index j = 0; j < currents.cols(); ++j) {
        for (int k = 0; k < L_ - 1; ++k) rhs(n + k, j) = currents(0, j) - currents(k + 1, j);
    }
    const Eigen::MatrixXd x = solve_spd(a, rhs);

    Eigen::MatrixXd u(L_, currents.cols());
    for (Eigen::Index j = 0; j < currents.cols(); ++j) {
        const auto beta = x.col(j).tail(L_ - 1);
        u(0, j) = beta.sum();
        for (int k = 0; k < L_ - 1; ++k) u(k + 1, j) = -beta(k);
    }
    return u;
}

Eigen::MatrixXd CemSolver::voltages(const ParamField& sigma, const CurrentPatterns& patterns) const {
    if (patterns.L() != L_) throw InvalidArgument("pattern length does not match electrode count");
    std::string why;
    if (!patterns_valid(patterns, &why)) throw InvalidArgument("invalid current patterns: " + why);
    return solve_grounded(sigma, patterns.amplitudes.transpose()).transpose();
}

Eigen::MatrixXd CemSolver::resistivity(const ParamField& sigma) const {
    return solve_grounded(sigma, Eigen::MatrixXd::Identity(L_, L_));
}

// ---------------------------------------------------------------- DOT

DotSolver::DotSolver(const TriMesh& mesh, const ElectrodeLayout& layout, double rho)
    : layout_(layout), rho_(rho), p1_(mesh) {
    if (!(rho > 0.0)) throw InvalidArgument("diffusion coefficient must be positive");
    if (layout.mesh_id != 0 && layout.mesh_id != mesh.id) {
        throw InvalidArgument("electrode layout was built for a different mesh");
    }
    const int n = static_cast<int>(mesh.node_count());
    const int L = layout.count();

    // Robin term (1/2) int_{dOmega} u v over the whole boundary.
    std::vector<Eigen::Triplet<double>> fixed;
    for (const auto& edge : mesh.boundary_edges) {
        const double h = edge_length(mesh, edge);
        fixed.emplace_back(edge[0], edge[0], 0.5 * h / 3.0);
        fixed.emplace_back(edge[1], edge[1], 0.5 * h / 3.0);
        fixed.emplace_back(edge[0], edge[1], 0.5 * h / 6.0);
        fixed.emplace_back(edge[1], edge[0], 0.5 * h / 6.0);
    }
    std::vector<Eigen::Triplet<double>> entries = fixed;
    for (const auto& tri : mesh.triangles) {
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) entries.emplace_back(tri[a], tri[b], 0.0);
        }
    }
    pattern_ = zero_pattern(n, entries);
    SpMat base(n, n);
    base.setFromTriplets(fixed.begin(), fixed.end());
    base_values_.assign(pattern_.nonZeros(), 0.0);
    for (int col = 0; col < base.outerSize(); ++col) {
        for (SpMat::InnerIterator it(base, col); it; ++it) {
            base_values_[slot_of(pattern_, static_cast<int>(it.row()), col)] += it.value();
        }
    }
    for (const auto& tri : mesh.triangles) {
        std::array<int, 9> s{};
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) s[3 * a + b] = slot_of(pattern_, tri[a], tri[b]);
        }
        slots_.push_back(s);
    }
    diag_slot_.resize(n);
    for (int i = 0; i < n; ++i) diag_slot_[i] = slot_of(pattern_, i, i);

    arc_weights_ = Eigen::MatrixXd::Zero(L, n);
    arc_load_ = Eigen::MatrixXd::Zero(n, L);
    for (int l = 0; l < L; ++l) {
        const double len = electrode_length(mesh, layout, l);
        for (int e : layout.electrode_edges[l]) {
            const auto& edge = mesh.boundary_edges[e];
            const double h = edge_length(mesh, edge);
            for (int v : edge) {
                arc_weights_(l, v) += 0.5 * h / len;
                arc_load_(v, l) += 0.5 * 0.5 * h;
            }
        }
    }
}

Eigen::MatrixXd DotSolver::readings(const ParamField& mu, const CurrentPatterns& sources) const {
    const TriMesh& mesh = p1_.mesh();
    check_mesh(mu, mesh);
    check_positive(mu, mesh.tri_count(), "absorption");
    if (sources.L() != layout_.count()) throw InvalidArgument("source length does not match electrode count");

    SpMat a = pattern_;
    double* values = a.valuePtr();
    std::copy(base_values_.begin(), base_values_.end(), values);
    const auto& local = p1_.local_stiffness();
    const auto& areas = p1_.areas();
    for (std::size_t t = 0; t < mesh.tri_count(); ++t) {
        for (int k = 0; k < 9; ++k) values[slots_[t][k]] += rho_ * local[t][k];
        // lumped mass
        const double m = mu.values[t] * areas[t] / 3.0;
        for (int v : mesh.triangles[t]) values[diag_slot_[v]] += m;
    }
    const Eigen::MatrixXd rhs = arc_load_ * sources.amplitudes.transpose();
    const Eigen::MatrixXd u = solve_spd(a, rhs);
    return (arc_weights_ * u).transpose();
}

// ---------------------------------------------------------------- QPAT

namespace {

bool inside_triangle(const TriMesh& mesh, const std::array<int, 3>& t, const Point& p) {
    const double eps = -1e-12;
    for (int k = 0; k < 3; ++k) {
        const Point& a = mesh.nodes[t[k]];
        const Point& b = mesh.nodes[t[(k + 1) % 3]];
        if ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) < eps) return false;
    }
    return true;
}

} // namespace

Point QpatSolver::cell_center(int row, int col) {
    const double h = 2.0 / kRasterSize;
    return {-1.0 + (col + 0.5) * h, -1.0 + (row + 0.5) * h};
}

QpatSolver::QpatSolver(const TriMesh& mesh, double rho, QpatBand band) : rho_(rho), band_(band), p1_(mesh) {
    if (!(rho > 0.0)) throw InvalidArgument("diffusion coefficient must be positive");
    if (!(band.lower > 0.0 && band.lower <= band.upper)) throw InvalidArgument("invalid admissible band");
    const int n = static_cast<int>(mesh.node_count());
    std::vector<bool> on_boundary(n, false);
    for (const auto& e : mesh.boundary_edges) on_boundary[e[0]] = on_boundary[e[1]] = true;
    interior_index_.assign(n, -1);
    int m = 0;
    for (int i = 0; i < n; ++i) {
        if (on_boundary[i]) boundary_nodes_.push_back(i);
        else interior_index_[i] = m++;
    }
    std::vector<Eigen::Triplet<double>> entries;
    for (const auto& tri : mesh.triangles) {
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                const int ia = interior_index_[tri[a]];
                const int ib = interior_index_[tri[b]];
                if (ia >= 0 && ib >= 0) entries.emplace_back(ia, ib, 0.0);
            }
        }
    }
    pattern_ = zero_pattern(m, entries);
    for (const auto& tri : mesh.triangles) {
        std::array<int, 9> s{};
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                const int ia = interior_index_[tri[a]];
                const int ib = interior_index_[tri[b]];
                s[3 * a + b] = (ia >= 0 && ib >= 0) ? slot_of(pattern_, ia, ib) : -1;
            }
        }
        slots_.push_back(s);
    }

    const auto cents = centroids(mesh);
    cell_tri_.assign(kRasterSize * kRasterSize, -1);
    for (int r = 0; r < kRasterSize; ++r) {
        for (int c = 0; c < kRasterSize; ++c) {
            const Point p = cell_center(r, c);
            if (std::hypot(p.x, p.y) > 1.0) continue;
            int found = -1;
            for (std::size_t t = 0; t < mesh.tri_count() && found < 0; ++t) {
                if (inside_triangle(mesh, mesh.triangles[t], p)) found = static_cast<int>(t);
            }
            if (found < 0) {
                // Between the polygonal boundary and the circle: nearest centroid.
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t t = 0; t < cents.size(); ++t) {
                    const double d = std::hypot(cents[t].x - p.x, cents[t].y - p.y);
                    if (d < best) {
                        best = d;
                        found = static_cast<int>(t);
                    }
                }
            }
            cell_tri_[r * kRasterSize + c] = found;
        }
    }
}

Eigen::VectorXd QpatSolver::potential(const ParamField& gamma,
                                      const std::function<double(const Point&)>& g) const {
    const TriMesh& mesh = p1_.mesh();
    check_mesh(gamma, mesh);
    check_physical(gamma, mesh, band_.lower, band_.upper);

    const int n = static_cast<int>(mesh.node_count());
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    for (int b : boundary_nodes_) u(b) = g(mesh.nodes[b]);

    SpMat a = pattern_;
    double* values = a.valuePtr();
    std::fill(values, values + a.nonZeros(), 0.0);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(a.rows());
    const auto& local = p1_.local_stiffness();
    const auto& areas = p1_.areas();
    for (std::size_t t = 0; t < mesh.tri_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        const double m = gamma.values[t] * areas[t] / 3.0;
        for (int ai = 0; ai < 3; ++ai) {
            const int ia = interior_index_[tri[ai]];
            if (ia < 0) continue;
            for (int bi = 0; bi < 3; ++bi) {
                double v = rho_ * local[t][3 * ai + bi];
                if (ai == bi) v += m;
                const int slot = slots_[t][3 * ai + bi];
                if (slot >= 0) values[slot] += v;
                else rhs(ia) -= v * u(tri[bi]);
            }
        }
    }
    if (a.rows() > 0) {
        const Eigen::VectorXd x = solve_spd(a, rhs);
        for (int i = 0; i < n; ++i) {
            if (interior_index_[i] >= 0) u(i) = x(interior_index_[i]);
        }
    }
    return u;
}

Eigen::MatrixXd QpatSolver::raster(const ParamField& gamma, const std::function<double(const Point&)>& g) const {
    const TriMesh& mesh = p1_.mesh();
    const Eigen::VectorXd u = potential(gamma, g);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(kRasterSize, kRasterSize);
    for (int r = 0; r < kRasterSize; ++r) {
        for (int c = 0; c < kRasterSize; ++c) {
            const int t = cell_tri_[r * kRasterSize + c];
            if (t < 0) continue;
            const auto& tri = mesh.triangles[t];
            out(r, c) = gamma.values[t] * (u(tri[0]) + u(tri[1]) + u(tri[2])) / 3.0;
        }
    }
    return out;
}

// ---------------------------------------------------------------- free functions

Measurement solve_cem(const TriMesh& mesh, const ElectrodeLayout& layout, const ParamField& sigma,
                      const CurrentPatterns& patterns) {
    return {MeasurementKind::eit, CemSolver(mesh, layout).voltages(sigma, patterns), 0.0};
}

Eigen::MatrixXd resistivity_matrix(const TriMesh& mesh, const ElectrodeLayout& layout, const ParamField& sigma) {
    return CemSolver(mesh, layout).resistivity(sigma);
}

Measurement solve_dot(const TriMesh& mesh, const ElectrodeLayout& layout, const ParamField& mu, double rho,
                      const CurrentPatterns& sources) {
    return {MeasurementKind::dot, DotSolver(mesh, layout, rho).readings(mu, sources), 0.0};
}

Measurement solve_qpat(const TriMesh& mesh, const ParamField& gamma, double rho,
                       const std::function<double(const Point&)>& g, QpatBand band) {
    return {MeasurementKind::qpat, QpatSolver(mesh, rho, band).raster(gamma, g), 0.0};
}

double rms(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    return std::sqrt(m.squaredNorm() / static_cast<double>(m.size()));
}

Measurement add_noise(const Measurement& m, double level, std::mt19937_64& rng) {
    if (!(level >= 0.0)) throw InvalidArgument("noise level must be nonnegative");
    Measurement out = m;
    out.noise_sigma = level * rms(m.data);
    if (out.noise_sigma == 0.0) return out;
    std::normal_distribution<double> normal(0.0, out.noise_sigma);
    for (Eigen::Index j = 0; j < out.data.cols(); ++j) {
        for (Eigen::Index i = 0; i < out.data.rows(); ++i) out.data(i, j) += normal(rng);
    }
    return out;
}

void write_measurement_csv(std::ostream& out, const Measurement& m) {
    out << std::setprecision(17);
    out << to_string(m.kind) << ',' << m.data.rows() << ',' << m.data.cols() << ',' << m.noise_sigma << '\n';
    for (Eigen::Index i = 0; i < m.data.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.data.cols(); ++j) {
            if (j) out << ',';
            out << m.data(i, j);
        }
        out << '\n';
    }
}

Measurement read_measurement_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty measurement file");
    std::istringstream head(line);
    std::string kind, rows, cols, sigma;
    if (!std::getline(head, kind, ',') || !std::getline(head, rows, ',') || !std::getline(head, cols, ',') ||
        !std::getline(head, sigma)) {
        throw FormatError("measurement header must be kind,rows,cols,noise_sigma");
    }
    Measurement m;
    m.kind = measurement_kind_from_string(kind);
    long r = 0, c = 0;
    try {
        r = std::stol(rows);
        c = std::stol(cols);
        m.noise_sigma = std::stod(sigma);
    } catch (const std::exception&) {
        throw FormatError("malformed measurement header");
    }
    if (r <= 0 || c <= 0) throw FormatError("measurement shape must be positive");
    m.data.resize(r, c);
    for (long i = 0; i < r; ++i) {
        if (!std::getline(in, line)) throw FormatError("truncated measurement file");
        std::istringstream row(line);
        std::string cell;
        for (long j = 0; j < c; ++j) {
            if (!std::getline(row, cell, ',')) throw FormatError("short measurement row");
            try {
                m.data(i, j) = std::stod(cell);
            } catch (const std::exception&) {
                throw FormatError("non-numeric measurement entry");
            }
        }
    }
    return m;
}

} // namespace mcmcnet
