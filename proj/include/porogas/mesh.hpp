#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace porogas {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }

/// An edge of the triangulation. Interior edges have two cells and the unit
/// normal points from `cell_i` into `cell_j`; boundary edges have
/// `cell_j == -1` and an outward normal.
struct Edge {
    std::array<int, 2> v{};
    int cell_i = -1;
    int cell_j = -1;
    Point normal;
    double length = 0.0;

    bool is_boundary() const { return cell_j < 0; }
    int neighbor(int cell) const { return cell == cell_i ? cell_j : cell_i; }
};

struct MeshStats {
    double h_min = 0.0;
    double h_max = 0.0;
    double quality = 0.0;  ///< h_max / min inscribed diameter, >= 1
};

/// Conforming 2D triangulation, immutable once built. Cells are stored
/// counter-clockwise; local edge a of a cell is the one opposite local vertex a.
class Mesh {
public:
    /// Builds topology from a vertex list and triangles (0-based vertex ids).
    Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> cells);

    std::size_t num_vertices() const { return vertices_.size(); }
    std::size_t num_cells() const { return cells_.size(); }
    std::size_t num_edges() const { return edges_.size(); }

    const std::vector<Point>& vertices() const { return vertices_; }
    const std::array<int, 3>& cell(int k) const { return cells_[k]; }
    const std::vector<std::array<int, 3>>& cells() const { return cells_; }
    Point vertex(int v) const { return vertices_[v]; }
    Point cell_vertex(int k, int a) const { return vertices_[cells_[k][a]]; }

    const Edge& edge(int e) const { return edges_[e]; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<int>& interior_edges() const { return interior_; }
    const std::vector<int>& boundary_edges() const { return boundary_; }

    /// Edge ids of a cell; entry a is the edge opposite local vertex a.
    const std::array<int, 3>& cell_edges(int k) const { return cell_edges_[k]; }

    double area(int k) const { return area_[k]; }
    const std::vector<double>& areas() const { return area_; }
    Point centroid(int k) const { return centroid_[k]; }
    double diameter(int k) const { return diameter_[k]; }

    /// Edge length scale used by the interior-penalty terms (the edge length in 2D).
    double h_e(int e) const { return edges_[e].length; }

    double total_area() const;

    /// Index of the cell containing `p`, or -1. Exact O(1) lookup for
    /// meshes built by generate_structured, brute force otherwise.
    int locate(Point p) const;

    struct Structured {
        int nx = 0;
        int ny = 0;
        double Lx = 0.0;
        double Ly = 0.0;
    };
    const std::optional<Structured>& structured() const { return structured_; }

private:
    friend Mesh generate_structured(int nx, int ny, double Lx, double Ly);

    std::vector<Point> vertices_;
    std::vector<std::array<int, 3>> cells_;
    std::vector<Edge> edges_;
    std::vector<int> interior_;
    std::vector<int> boundary_;
    std::vector<std::array<int, 3>> cell_edges_;
    std::vector<double> area_;
    std::vector<Point> centroid_;
    std::vector<double> diameter_;
    std::optional<Structured> structured_;
};

/// Triangulation of [0,Lx]x[0,Ly] with nx*ny squares, each cut along the
/// (0,0)-(1,1) diagonal, giving 2*nx*ny cells. Uniform refinement nests.
Mesh generate_structured(int nx, int ny, double Lx, double Ly);

/// +1 if `cell` is the edge's first cell (normal points out of it), -1 if it
/// is the second. Jumps are [psi] = psi|cell_i - psi|cell_j.
int jump_sign(const Edge& edge, int cell);

MeshStats mesh_statistics(const Mesh& mesh);

/// Reads "NV NC", NV lines "x y", NC lines "i j k" (0-based).
Mesh read_mesh(std::istream& in);
Mesh read_mesh_file(const std::string& path);

}  // namespace porogas
