#include "porogas/mesh.hpp"

#include "porogas/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <utility>

namespace porogas {

namespace {

double signed_area(Point a, Point b, Point c) {
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double distance(Point a, Point b) { return std::hypot(b.x - a.x, b.y - a.y); }

}  // namespace

Mesh::Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> cells)
    : vertices_(std::move(vertices)), cells_(std::move(cells)) {
    const int nv = static_cast<int>(vertices_.size());
    const int nc = static_cast<int>(cells_.size());
    if (nc == 0) {
        throw InvalidParameter("mesh has no cells");
    }
    area_.resize(nc);
    centroid_.resize(nc);
    diameter_.resize(nc);
    cell_edges_.resize(nc);

    for (int k = 0; k < nc; ++k) {
        auto& t = cells_[k];
        for (int v : t) {
            if (v < 0 || v >= nv) {
                throw InvalidParameter("cell " + std::to_string(k) + " references missing vertex");
            }
        }
        double a = signed_area(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
        if (a < 0.0) {
            std::swap(t[1], t[2]);
            a = -a;
        }
        if (!(a > 0.0)) {
            throw InvalidParameter("degenerate cell " + std::to_string(k));
        }
        area_[k] = a;
        centroid_[k] = (1.0 / 3.0) * (vertices_[t[0]] + vertices_[t[1]] + vertices_[t[2]]);
        diameter_[k] = std::max({distance(vertices_[t[0]], vertices_[t[1]]),
                                 distance(vertices_[t[1]], vertices_[t[2]]),
                                 distance(vertices_[t[2]], vertices_[t[0]])});
    }

    std::map<std::pair<int, int>, int> lookup;
    for (int k = 0; k < nc; ++k) {
        const auto& t = cells_[k];
        for (int a = 0; a < 3; ++a) {
            const int v0 = t[(a + 1) % 3];
            const int v1 = t[(a + 2) % 3];
            const auto key = std::minmax(v0, v1);
            auto it = lookup.find(key);
            if (it == lookup.end()) {
                Edge e;
                e.v = {v0, v1};
                e.cell_i = k;
                const Point p0 = vertices_[v0];
                const Point p1 = vertices_[v1];
                e.length = distance(p0, p1);
                // counter-clockwise cell: (dy, -dx) is the outward normal
                e.normal = {(p1.y - p0.y) / e.length, -(p1.x - p0.x) / e.length};
                lookup.emplace(key, static_cast<int>(edges_.size()));
                cell_edges_[k][a] = static_cast<int>(edges_.size());
                edges_.push_back(e);
            } else {
                Edge& e = edges_[it->second];
                if (e.cell_j >= 0) {
                    throw TopologyError("edge shared by more than two cells");
                }
                e.cell_j = k;
                cell_edges_[k][a] = it->second;
            }
        }
    }
    for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
        (edges_[e].is_boundary() ? boundary_ : interior_).push_back(e);
    }
}

double Mesh::total_area() const {
    double s = 0.0;
    for (double a : area_) {
        s += a;
    }
    return s;
}

int Mesh::locate(Point p) const {
    if (structured_) {
        const auto& s = *structured_;
        const double dx = s.Lx / s.nx;
        const double dy = s.Ly / s.ny;
        if (p.x < 0.0 || p.y < 0.0 || p.x > s.Lx || p.y > s.Ly) {
            return -1;
        }
        const int i = std::min(static_cast<int>(p.x / dx), s.nx - 1);
        const int j = std::min(static_cast<int>(p.y / dy), s.ny - 1);
        const double xl = (p.x - i * dx) / dx;
        const double yl = (p.y - j * dy) / dy;
        return 2 * (j * s.nx + i) + (yl > xl ? 1 : 0);
    }
    constexpr double tol = -1e-12;
    for (int k = 0; k < static_cast<int>(cells_.size()); ++k) {
        const auto& t = cells_[k];
        const Point a = vertices_[t[0]];
        const Point b = vertices_[t[1]];
        const Point c = vertices_[t[2]];
        const double s = area_[k];
        if (signed_area(p, b, c) / s >= tol && signed_area(a, p, c) / s >= tol &&
            signed_area(a, b, p) / s >= tol) {
            return k;
        }
    }
    return -1;
}

Mesh generate_structured(int nx, int ny, double Lx, double Ly) {
    if (nx < 1 || ny < 1) {
        throw InvalidParameter("generate_structured: nx and ny must be >= 1");
    }
    if (!(Lx > 0.0) || !(Ly > 0.0)) {
        throw InvalidParameter("generate_structured: Lx and Ly must be positive");
    }
    std::vector<Point> verts;
    verts.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            verts.push_back({Lx * i / nx, Ly * j / ny});
        }
    }
    std::vector<std::array<int, 3>> cells;
    cells.reserve(2 * static_cast<std::size_t>(nx) * ny);
    auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
            cells.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
        }
    }
    Mesh mesh(std::move(verts), std::move(cells));
    mesh.structured_ = Mesh::Structured{nx, ny, Lx, Ly};
    return mesh;
}

int jump_sign(const Edge& edge, int cell) {
    if (cell == edge.cell_i) {
        return 1;
    }
    if (cell >= 0 && cell == edge.cell_j) {
        return -1;
    }
    throw TopologyError("cell " + std::to_string(cell) + " is not incident to edge");
}

MeshStats mesh_statistics(const Mesh& mesh) {
    MeshStats st;
    st.h_min = std::numeric_limits<double>::infinity();
    double inscribed_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < static_cast<int>(mesh.num_cells()); ++k) {
        st.h_min = std::min(st.h_min, mesh.diameter(k));
        st.h_max = std::max(st.h_max, mesh.diameter(k));
        double perimeter = 0.0;
        for (int e : mesh.cell_edges(k)) {
            perimeter += mesh.edge(e).length;
        }
        inscribed_min = std::min(inscribed_min, 4.0 * mesh.area(k) / perimeter);
    }
    st.quality = st.h_max / inscribed_min;
    return st;
}

Mesh read_mesh(std::istream& in) {
    long nv = 0;
    long nc = 0;
    if (!(in >> nv >> nc) || nv < 3 || nc < 1) {
        throw InvalidParameter("mesh import: bad header, expected \"NV NC\"");
    }
    std::vector<Point> verts(nv);
    for (auto& p : verts) {
        if (!(in >> p.x >> p.y)) {
            throw InvalidParameter("mesh import: truncated vertex list");
        }
    }
    std::vector<std::array<int, 3>> cells(nc);
    for (auto& t : cells) {
        if (!(in >> t[0] >> t[1] >> t[2])) {
            throw InvalidParameter("mesh import: truncated cell list");
        }
    }
    return Mesh(std::move(verts), std::move(cells));
}

Mesh read_mesh_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidParameter("cannot open mesh file " + path);
    }
    return read_mesh(in);
}

}  // namespace porogas
