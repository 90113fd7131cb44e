#pragma once

#include "porogas/eos.hpp"
#include "porogas/linalg.hpp"
#include "porogas/mesh.hpp"

#include <array>
#include <span>
#include <vector>

namespace porogas {

/// One value per cell (c, phi, p, mu, ...).
using ScalarCellField = std::vector<double>;

/// Lowest-order Raviart-Thomas field stored by its normal fluxes
/// int_e u . n_e, one per edge. Boundary entries are always zero.
struct FaceFluxField {
    std::vector<double> flux;

    FaceFluxField() = default;
    explicit FaceFluxField(std::size_t num_edges) : flux(num_edges, 0.0) {}
};

/// Discontinuous piecewise-linear vector field: per cell, the two components
/// at each of the three vertices. dof(k, a, d) = 6k + 2a + d.
struct CellLinearVectorField {
    std::vector<double> dofs;

    CellLinearVectorField() = default;
    explicit CellLinearVectorField(std::size_t num_cells) : dofs(6 * num_cells, 0.0) {}

    static int dof(int cell, int local_vertex, int comp) { return 6 * cell + 2 * local_vertex + comp; }
    double at(int cell, int a, int d) const { return dofs[dof(cell, a, d)]; }
    double& at(int cell, int a, int d) { return dofs[dof(cell, a, d)]; }
    std::size_t num_cells() const { return dofs.size() / 6; }
};

struct SparseSystem {
    CsrMatrix matrix;
    std::vector<double> rhs;
};

/// Cells next to a prescribed-density boundary. Each listed boundary edge
/// couples its cell to a ghost state of density `value` through the penalty
/// term only; the normal flux stays zero.
struct DirichletData {
    std::vector<int> edges;
    double value = 0.0;
};

/// Gradients of the barycentric coordinates of cell k (constant per cell).
std::array<Point, 3> basis_gradients(const Mesh& mesh, int k);

/// Evaluates a CellLinearVectorField inside cell k at point x.
Point evaluate(const Mesh& mesh, const CellLinearVectorField& u, int k, Point x);

/// Divergence of the cellwise-linear field on cell k.
double divergence(const Mesh& mesh, const CellLinearVectorField& u, int k);

// ---------------------------------------------------------------- transport

/// Upwind edge value of c for the given interior edge: c on cell_i when the
/// flux along n_e is >= 0, c on cell_j otherwise. Throws TopologyError on a
/// boundary edge.
double upwind_trace(const Mesh& mesh, std::span<const double> c, const FaceFluxField& u_f, int edge);

/// Upwind traces for every edge (boundary entries are 0).
std::vector<double> upwind_traces(const Mesh& mesh, std::span<const double> c, const FaceFluxField& u_f);

/// Everything the linearized mass balance needs at one Picard iterate.
struct TransportInputs {
    std::span<const double> c_n;       ///< density at the old time level
    std::span<const double> phi_n;     ///< porosity at the old time level
    std::span<const double> phi_iter;  ///< porosity at the current iterate
    const FaceFluxField* u_f = nullptr;  ///< lagged velocity
    std::span<const double> c_star;    ///< upwind traces per edge
    std::span<const double> mu_n;      ///< mu(c_n) per cell
    double theta = 1.0;
    double tau = 0.0;
    double sigma1 = 0.0;
    const FluidEos* eos = nullptr;
    const DirichletData* dirichlet = nullptr;
};

/// Linear system for the new density: per cell
///   (phi_iter c - phi_n c_n)|K|/tau + sum_e s c* F_e
///     + sum_e s (sigma1/h_e)|e| ([mu(c_n)] + theta RT [zeta]) = 0
/// with zeta = (c - c_n) / (c_n (1 - beta c_n)^2).
SparseSystem assemble_transport(const Mesh& mesh, const TransportInputs& in);

/// Per-cell balance residual of a candidate density, evaluated term by term
/// (independent of the matrix assembly). Second component: magnitude scale
/// of the terms entering each cell's balance.
struct CellBalance {
    std::vector<double> residual;
    std::vector<double> scale;
};
CellBalance transport_balance(const Mesh& mesh, const TransportInputs& in, std::span<const double> c);

/// Stabilized chemical potential mu(c_n) + theta RT (c - c_n)/(c_n (1 - beta c_n)^2).
ScalarCellField stabilized_mu(const FluidEos& eos, std::span<const double> c_n,
                              std::span<const double> mu_n, std::span<const double> c,
                              double theta);

// ----------------------------------------------------------------- velocity

/// Weighted RT0 mass matrix over interior edges:
///   M_ef = sum_K int_K lambda_K^{-1} psi_e . psi_f.
/// Row/column i corresponds to mesh.interior_edges()[i].
CsrMatrix velocity_mass_matrix(const Mesh& mesh, std::span<const double> mobility);

/// Factorized velocity system for one time step (mobility frozen at phi_n).
class VelocitySolver {
public:
    VelocitySolver() = default;
    VelocitySolver(const Mesh& mesh, std::span<const double> mobility);

    /// Solves (lambda^{-1} u, w) = sum_e <[mu], c* w . n>_e.
    FaceFluxField solve(std::span<const double> mu, std::span<const double> c_star) const;

private:
    const Mesh* mesh_ = nullptr;
    DirectSolver solver_;
};

/// Per-cell mobility lambda(phi_K) with cell-local reference permeability.
std::vector<double> cell_mobility(const RockProps& rock, std::span<const double> phi,
                                  std::span<const double> kappa0);

/// One-shot velocity solve.
FaceFluxField assemble_velocity(const Mesh& mesh, std::span<const double> mobility,
                                std::span<const double> mu, std::span<const double> c_star);

// ----------------------------------------------------------------- pressure

/// Linearized pressure from the old density and the new iterate:
///   p = RT c/(1 - beta c_n)
///     + b c_n/(2 sqrt2 beta) [ (1-sqrt2) beta c/(1+(1-sqrt2) beta c_n)
///                              - (1+sqrt2) beta c_n/(1+(1+sqrt2) beta c_n) ].
/// Equals pressure_peng(c_n) when c == c_n.
ScalarCellField pressure_update(const FluidEos& eos, std::span<const double> c_n,
                                std::span<const double> c_new);

// --------------------------------------------------------------- elasticity

/// Symmetric interior-penalty elasticity matrix (no constraints), acting on
/// CellLinearVectorField dofs.
CsrMatrix elasticity_matrix(const Mesh& mesh, const RockProps& rock, double sigma2);

/// Right-hand side from the Biot coupling alpha (p, div v) - alpha <{p} n_e, [v]>.
std::vector<double> elasticity_rhs(const Mesh& mesh, std::span<const double> p, double alpha);

/// The three dofs pinned to remove rigid-body motions: both components at one
/// vertex and the y component at the vertex farthest away in x.
std::array<int, 3> rigid_constraint_dofs(const Mesh& mesh);

/// Constrained system (pinned dofs replaced by identity rows, zero rhs).
SparseSystem assemble_elasticity(const Mesh& mesh, std::span<const double> p,
                                 const RockProps& rock, double sigma2);

/// Factorizes the constrained elasticity operator once; it does not depend on
/// the pressure.
class ElasticitySolver {
public:
    ElasticitySolver() = default;
    ElasticitySolver(const Mesh& mesh, const RockProps& rock, double sigma2);

    CellLinearVectorField solve(std::span<const double> p) const;
    const CsrMatrix& unconstrained() const { return matrix_; }

private:
    const Mesh* mesh_ = nullptr;
    double alpha_ = 0.0;
    CsrMatrix matrix_;
    std::array<int, 3> pinned_{};
    DirectSolver solver_;
};

/// Elastic strain energy with DG edge terms:
///   sum_K int 1/2 sigma_e(u):eps(u) + sum_e penalty/(2 h_e) <[u],[u]> - sum_e <{sigma_e(u) n_e},[u]>.
double elastic_energy(const Mesh& mesh, const CellLinearVectorField& u, const RockProps& rock,
                      double penalty);

// ----------------------------------------------------------------- porosity

/// phi = phi_n + (p - p_n)/N + alpha avg_K div(du) - alpha/|K| sum_e 1/2 n_e . int_e [du].
ScalarCellField porosity_update(const Mesh& mesh, std::span<const double> phi_n,
                                std::span<const double> p_n, std::span<const double> p_new,
                                const CellLinearVectorField& u_n,
                                const CellLinearVectorField& u_new, const RockProps& rock);

}  // namespace porogas
