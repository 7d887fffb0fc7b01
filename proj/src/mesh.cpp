#include "mcmcnet/mesh.hpp"

#include "mcmcnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace mcmcnet {

namespace {

constexpr int kInnerRing = 8;
constexpr int kOuterRing = 16;

double cross(const Point& a, const Point& b, const Point& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

double polar_angle(double x, double y) {
    double a = std::atan2(y, x);
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    return a;
}

std::array<int, 2> edge_key(int a, int b) { return a < b ? std::array{a, b} : std::array{b, a}; }

// Edges used by exactly one triangle, oriented as in that triangle and
// sorted by the angle of their midpoint.
std::vector<std::array<int, 2>> extract_boundary(const std::vector<Point>& nodes,
                                                 const std::vector<std::array<int, 3>>& tris) {
    std::map<std::array<int, 2>, std::pair<int, std::array<int, 2>>> uses;
    for (const auto& t : tris) {
        for (int k = 0; k < 3; ++k) {
            const int a = t[k];
            const int b = t[(k + 1) % 3];
            auto& entry = uses[edge_key(a, b)];
            ++entry.first;
            entry.second = {a, b};
        }
    }
    std::vector<std::array<int, 2>> boundary;
    for (const auto& [key, use] : uses) {
        if (use.first == 1) boundary.push_back(use.second);
    }
    auto angle_of = [&](const std::array<int, 2>& e) {
        const Point& p = nodes[e[0]];
        const Point& q = nodes[e[1]];
        return polar_angle(0.5 * (p.x + q.x), 0.5 * (p.y + q.y));
    };
    std::sort(boundary.begin(), boundary.end(),
              [&](const auto& a, const auto& b) { return angle_of(a) < angle_of(b); });
    return boundary;
}

TriMesh finish(std::vector<Point> nodes, std::vector<std::array<int, 3>> tris, int refinement) {
    TriMesh mesh;
    mesh.boundary_edges = extract_boundary(nodes, tris);
    mesh.nodes = std::move(nodes);
    mesh.triangles = std::move(tris);
    mesh.refinement = refinement;
    mesh.id = fingerprint(mesh);
    return mesh;
}

// Center node, a ring of 8 nodes at radius 1/2 and a ring of 16 on the
// unit circle; 32 triangles.
TriMesh base_mesh() {
    std::vector<Point> nodes;
    nodes.push_back({0.0, 0.0});
    for (int i = 0; i < kInnerRing; ++i) {
        const double a = 2.0 * std::numbers::pi * i / kInnerRing;
        nodes.push_back({0.5 * std::cos(a), 0.5 * std::sin(a)});
    }
    for (int i = 0; i < kOuterRing; ++i) {
        const double a = 2.0 * std::numbers::pi * i / kOuterRing;
        nodes.push_back({std::cos(a), std::sin(a)});
    }
    auto inner = [](int i) { return 1 + (i % kInnerRing); };
    auto outer = [](int i) { return 1 + kInnerRing + (i % kOuterRing); };

    std::vector<std::array<int, 3>> tris;
    for (int i = 0; i < kInnerRing; ++i) tris.push_back({0, inner(i), inner(i + 1)});
    for (int i = 0; i < kInnerRing; ++i) {
        tris.push_back({inner(i), outer(2 * i), outer(2 * i + 1)});
        tris.push_back({inner(i), outer(2 * i + 1), inner(i + 1)});
        tris.push_back({inner(i + 1), outer(2 * i + 1), outer(2 * i + 2)});
    }
    return finish(std::move(nodes), std::move(tris), 0);
}

} // namespace

TriMesh build_disk_mesh(int refinement) {
    if (refinement < 0 || refinement > kMaxRefinement) {
        throw InvalidArgument("refinement must be in [0, " + std::to_string(kMaxRefinement) +
                              "], got " + std::to_string(refinement));
    }
    TriMesh mesh = base_mesh();
    for (int r = 0; r < refinement; ++r) mesh = refine_uniform(mesh);
    return mesh;
}

TriMesh refine_uniform(const TriMesh& mesh) {
    std::vector<Point> nodes = mesh.nodes;
    std::map<std::array<int, 2>, bool> on_boundary;
    for (const auto& e : mesh.boundary_edges) on_boundary[edge_key(e[0], e[1])] = true;

    std::map<std::array<int, 2>, int> midpoint;
    auto mid = [&](int a, int b) {
        const auto key = edge_key(a, b);
        if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
        Point m{0.5 * (nodes[a].x + nodes[b].x), 0.5 * (nodes[a].y + nodes[b].y)};
        if (on_boundary.contains(key)) {
            const double r = std::hypot(m.x, m.y);
            m = {m.x / r, m.y / r};
        }
        nodes.push_back(m);
        const int idx = static_cast<int>(nodes.size()) - 1;
        midpoint.emplace(key, idx);
        return idx;
    };

    std::vector<std::array<int, 3>> tris;
    tris.reserve(4 * mesh.tri_count());
    for (const auto& t : mesh.triangles) {
        const int ab = mid(t[0], t[1]);
        const int bc = mid(t[1], t[2]);
        const int ca = mid(t[2], t[0]);
        tris.push_back({t[0], ab, ca});
        tris.push_back({ab, t[1], bc});
        tris.push_back({ca, bc, t[2]});
        tris.push_back({ab, bc, ca});
    }
    return finish(std::move(nodes), std::move(tris), mesh.refinement + 1);
}

ElectrodeLayout assign_electrodes(const TriMesh& mesh, int L, double coverage,
                                  double contact_impedance, int offset) {
    if (L < 1) throw InvalidArgument("electrode count must be positive");
    if (!(coverage > 0.0 && coverage < 1.0)) throw InvalidArgument("coverage must be in (0, 1)");
    if (!(contact_impedance > 0.0)) throw InvalidArgument("contact impedance must be positive");
    const int nb = static_cast<int>(mesh.boundary_edges.size());
    if (nb < 4 * L) {
        throw InvalidArgument("mesh has " + std::to_string(nb) + " boundary edges, need at least " +
                              std::to_string(4 * L) + " for " + std::to_string(L) + " electrodes");
    }
    const double per = static_cast<double>(nb) / L;
    const int max_edges = static_cast<int>(std::floor(per)) - 1;
    const int n_edges = std::clamp(static_cast<int>(std::lround(coverage * per)), 1, max_edges);

    ElectrodeLayout layout;
    layout.mesh_id = mesh.id;
    for (int l = 0; l < L; ++l) {
        const int start = static_cast<int>(std::floor(l * per - 0.5 * n_edges + 0.5)) + offset;
        std::vector<int> edges;
        for (int k = 0; k < n_edges; ++k) edges.push_back(((start + k) % nb + nb) % nb);
        layout.electrode_edges.push_back(std::move(edges));
        layout.contact_impedances.push_back(contact_impedance);
        layout.angles.push_back(2.0 * std::numbers::pi * l / L);
    }
    return layout;
}

std::vector<Point> centroids(const TriMesh& mesh) {
    std::vector<Point> out;
    out.reserve(mesh.tri_count());
    for (const auto& t : mesh.triangles) {
        const Point& a = mesh.nodes[t[0]];
        const Point& b = mesh.nodes[t[1]];
        const Point& c = mesh.nodes[t[2]];
        out.push_back({(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0});
    }
    return out;
}

double signed_area(const TriMesh& mesh, std::size_t tri) {
    const auto& t = mesh.triangles[tri];
    return 0.5 * cross(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]);
}

double total_area(const TriMesh& mesh) {
    double sum = 0.0;
    for (std::size_t t = 0; t < mesh.tri_count(); ++t) sum += signed_area(mesh, t);
    return sum;
}

double edge_length(const TriMesh& mesh, const std::array<int, 2>& edge) {
    const Point& a = mesh.nodes[edge[0]];
    const Point& b = mesh.nodes[edge[1]];
    return std::hypot(b.x - a.x, b.y - a.y);
}

double electrode_length(const TriMesh& mesh, const ElectrodeLayout& layout, int electrode) {
    double len = 0.0;
    for (int e : layout.electrode_edges.at(electrode)) len += edge_length(mesh, mesh.boundary_edges[e]);
    return len;
}

std::vector<std::string> validate_mesh(const TriMesh& mesh) {
    std::vector<std::string> problems;
    const int n = static_cast<int>(mesh.node_count());
    for (std::size_t t = 0; t < mesh.tri_count(); ++t) {
        for (int v : mesh.triangles[t]) {
            if (v < 0 || v >= n) {
                problems.push_back("triangle " + std::to_string(t) + " has out-of-range node");
                return problems;
            }
        }
        if (!(signed_area(mesh, t) > 0.0)) {
            problems.push_back("triangle " + std::to_string(t) + " is not counterclockwise");
        }
    }
    for (int i = 0; i < n; ++i) {
        if (std::hypot(mesh.nodes[i].x, mesh.nodes[i].y) > 1.0 + 1e-9) {
            problems.push_back("node " + std::to_string(i) + " lies outside the unit disk");
        }
    }
    std::vector<std::size_t> order(mesh.node_count());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& p = mesh.nodes[a];
        const auto& q = mesh.nodes[b];
        return p.x != q.x ? p.x < q.x : p.y < q.y;
    });
    for (std::size_t i = 1; i < order.size(); ++i) {
        const auto& p = mesh.nodes[order[i - 1]];
        const auto& q = mesh.nodes[order[i]];
        if (std::hypot(p.x - q.x, p.y - q.y) < 1e-12) {
            problems.push_back("duplicate nodes " + std::to_string(order[i - 1]) + " and " +
                               std::to_string(order[i]));
        }
    }

    std::map<std::array<int, 2>, int> uses;
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) ++uses[edge_key(t[k], t[(k + 1) % 3])];
    }
    std::size_t single = 0;
    for (const auto& [key, count] : uses) {
        if (count > 2) problems.push_back("edge shared by more than two triangles");
        if (count == 1) ++single;
    }
    if (single != mesh.boundary_edges.size()) {
        problems.push_back("boundary edge list does not match the dangling edges of the triangulation");
    }
    for (const auto& e : mesh.boundary_edges) {
        auto it = uses.find(edge_key(e[0], e[1]));
        if (it == uses.end() || it->second != 1) {
            problems.push_back("boundary edge " + std::to_string(e[0]) + "-" + std::to_string(e[1]) +
                               " does not belong to exactly one triangle");
        }
    }
    return problems;
}

std::uint64_t fingerprint(const TriMesh& mesh) {
    // FNV-1a over the raw bytes of coordinates and connectivity.
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto& p : mesh.nodes) {
        mix(&p.x, sizeof(double));
        mix(&p.y, sizeof(double));
    }
    for (const auto& t : mesh.triangles) mix(t.data(), sizeof(int) * 3);
    return h;
}

void write_mesh(std::ostream& out, const TriMesh& mesh) {
    out << "nodes " << mesh.node_count() << " tris " << mesh.tri_count() << " edges "
        << mesh.boundary_edges.size() << '\n';
    out << std::setprecision(17);
    for (const auto& p : mesh.nodes) out << p.x << ' ' << p.y << '\n';
    for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    for (const auto& e : mesh.boundary_edges) out << e[0] << ' ' << e[1] << '\n';
}

TriMesh read_mesh(std::istream& in) {
    std::string w1, w2, w3;
    long long n = -1, t = -1, e = -1;
    if (!(in >> w1 >> n >> w2 >> t >> w3 >> e) || w1 != "nodes" || w2 != "tris" || w3 != "edges" ||
        n < 0 || t < 0 || e < 0) {
        throw FormatError("mesh header must be 'nodes N tris T edges E'");
    }
    TriMesh mesh;
    mesh.nodes.resize(n);
    mesh.triangles.resize(t);
    mesh.boundary_edges.resize(e);
    for (auto& p : mesh.nodes) {
        if (!(in >> p.x >> p.y)) throw FormatError("truncated node block");
    }
    for (auto& tri : mesh.triangles) {
        if (!(in >> tri[0] >> tri[1] >> tri[2])) throw FormatError("truncated triangle block");
    }
    for (auto& edge : mesh.boundary_edges) {
        if (!(in >> edge[0] >> edge[1])) throw FormatError("truncated edge block");
    }
    for (const auto& tri : mesh.triangles) {
        for (int v : tri) {
            if (v < 0 || v >= n) throw FormatError("triangle references node out of range");
        }
    }
    for (const auto& edge : mesh.boundary_edges) {
        for (int v : edge) {
            if (v < 0 || v >= n) throw FormatError("edge references node out of range");
        }
    }
    // Base mesh has 32 triangles and each refinement multiplies by 4.
    int level = 0;
    for (std::size_t count = 32; count < mesh.tri_count() && level <= kMaxRefinement; count *= 4) ++level;
    mesh.refinement = level;
    mesh.id = fingerprint(mesh);
    return mesh;
}

} // namespace mcmcnet
