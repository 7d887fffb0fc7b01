#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mcmcnet {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Triangulation of the unit disk. Triangles are counterclockwise, boundary
/// edges are oriented counterclockwise around the domain and sorted by the
/// polar angle of their midpoint, starting at angle 0.
struct TriMesh {
    std::vector<Point> nodes;
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::array<int, 2>> boundary_edges;
    int refinement = 0;
    std::uint64_t id = 0;

    std::size_t node_count() const { return nodes.size(); }
    std::size_t tri_count() const { return triangles.size(); }
};

/// Boundary electrodes. Each electrode is a contiguous run of indices into
/// `TriMesh::boundary_edges`.
struct ElectrodeLayout {
    std::vector<std::vector<int>> electrode_edges;
    std::vector<double> contact_impedances;
    /// Polar angle of each electrode center.
    std::vector<double> angles;
    std::uint64_t mesh_id = 0;

    int count() const { return static_cast<int>(electrode_edges.size()); }
};

constexpr int kMaxRefinement = 8;

TriMesh build_disk_mesh(int refinement);
TriMesh refine_uniform(const TriMesh& mesh);

/// Electrodes are centred at angles 2*pi*l/L. `offset` rotates all of them
/// by a whole number of boundary edges.
ElectrodeLayout assign_electrodes(const TriMesh& mesh, int L, double coverage,
                                  double contact_impedance = 0.01, int offset = 0);

std::vector<Point> centroids(const TriMesh& mesh);

double signed_area(const TriMesh& mesh, std::size_t tri);
double total_area(const TriMesh& mesh);
double edge_length(const TriMesh& mesh, const std::array<int, 2>& edge);
double electrode_length(const TriMesh& mesh, const ElectrodeLayout& layout, int electrode);

/// Structural checks: orientation, duplicate nodes, node radius, boundary
/// edge consistency. Returns one message per problem; empty means valid.
std::vector<std::string> validate_mesh(const TriMesh& mesh);

/// Content hash of nodes and triangles; stored in `TriMesh::id`.
std::uint64_t fingerprint(const TriMesh& mesh);

/// Plain text: `nodes N tris T edges E`, N rows `x y`, T rows `a b c`,
/// E rows `a b`. Indices are 0-based.
void write_mesh(std::ostream& out, const TriMesh& mesh);
TriMesh read_mesh(std::istream& in);

} // namespace mcmcnet
