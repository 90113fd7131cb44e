#include "porogas/fem.hpp"

#include "porogas/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace porogas {

namespace {

bool on_edge(const Edge& e, int global_vertex) {
    return e.v[0] == global_vertex || e.v[1] == global_vertex;
}

void require_size(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw InvalidParameter(std::string(what) + ": expected " + std::to_string(want) +
                               " entries, got " + std::to_string(got));
    }
}

// sigma_e(phi_b e_f) n for the basis function with gradient g.
Point traction(Point g, int f, Point n, const RockProps& rock) {
    const double eta = rock.lame_mu;
    const double gam = rock.lame_lambda;
    const double gn = dot(g, n);
    const double gf = f == 0 ? g.x : g.y;
    const double nf = f == 0 ? n.x : n.y;
    Point t{eta * g.x * nf + gam * gf * n.x, eta * g.y * nf + gam * gf * n.y};
    if (f == 0) {
        t.x += eta * gn;
    } else {
        t.y += eta * gn;
    }
    return t;
}

double comp(Point p, int d) { return d == 0 ? p.x : p.y; }

}  // namespace

std::array<Point, 3> basis_gradients(const Mesh& mesh, int k) {
    const double two_area = 2.0 * mesh.area(k);
    std::array<Point, 3> g;
    for (int a = 0; a < 3; ++a) {
        const Point p1 = mesh.cell_vertex(k, (a + 1) % 3);
        const Point p2 = mesh.cell_vertex(k, (a + 2) % 3);
        g[a] = {(p1.y - p2.y) / two_area, (p2.x - p1.x) / two_area};
    }
    return g;
}

Point evaluate(const Mesh& mesh, const CellLinearVectorField& u, int k, Point x) {
    const auto g = basis_gradients(mesh, k);
    Point r{};
    for (int a = 0; a < 3; ++a) {
        // lambda_a vanishes on the opposite edge, which contains vertex a+1
        const double lam = dot(g[a], x - mesh.cell_vertex(k, (a + 1) % 3));
        r = r + lam * Point{u.at(k, a, 0), u.at(k, a, 1)};
    }
    return r;
}

double divergence(const Mesh& mesh, const CellLinearVectorField& u, int k) {
    const auto g = basis_gradients(mesh, k);
    double div = 0.0;
    for (int a = 0; a < 3; ++a) div += g[a].x * u.at(k, a, 0) + g[a].y * u.at(k, a, 1);
    return div;
}

// ---------------------------------------------------------------- transport

double upwind_trace(const Mesh& mesh, std::span<const double> c, const FaceFluxField& u_f, int edge) {
    const Edge& e = mesh.edge(edge);
    if (e.is_boundary()) throw TopologyError("upwind_trace: boundary edge " + std::to_string(edge));
    return u_f.flux[edge] >= 0.0 ? c[e.cell_i] : c[e.cell_j];
}

std::vector<double> upwind_traces(const Mesh& mesh, std::span<const double> c, const FaceFluxField& u_f) {
    require_size(c.size(), mesh.num_cells(), "upwind_traces c");
    require_size(u_f.flux.size(), mesh.num_edges(), "upwind_traces flux");
    std::vector<double> out(mesh.num_edges(), 0.0);
    for (int e : mesh.interior_edges()) out[e] = upwind_trace(mesh, c, u_f, e);
    return out;
}

namespace {

void check_transport_inputs(const Mesh& mesh, const TransportInputs& in) {
    const std::size_t nc = mesh.num_cells();
    require_size(in.c_n.size(), nc, "transport c_n");
    require_size(in.phi_n.size(), nc, "transport phi_n");
    require_size(in.phi_iter.size(), nc, "transport phi_iter");
    require_size(in.mu_n.size(), nc, "transport mu_n");
    require_size(in.c_star.size(), mesh.num_edges(), "transport c_star");
    if (in.u_f == nullptr || in.eos == nullptr) throw InvalidParameter("transport: missing velocity or eos");
    require_size(in.u_f->flux.size(), mesh.num_edges(), "transport flux");
    if (!(in.tau > 0.0)) throw InvalidParameter("transport: tau must be positive");
    if (!(in.sigma1 >= 0.0)) throw InvalidParameter("transport: sigma1 must be non-negative");
}

struct Linearization {
    std::vector<double> w;  // 1/(c_n (1-beta c_n)^2)
    std::vector<double> a;  // 1/(1-beta c_n)^2
};

Linearization linearize(const FluidEos& eos, std::span<const double> c_n) {
    Linearization lin;
    lin.w.resize(c_n.size());
    lin.a.resize(c_n.size());
    for (std::size_t k = 0; k < c_n.size(); ++k) {
        const double s = 1.0 - eos.beta * c_n[k];
        if (!(c_n[k] > 0.0) || !(s > 0.0)) {
            throw DomainError("transport: c_n out of (0, 1/beta) at cell " + std::to_string(k));
        }
        lin.a[k] = 1.0 / (s * s);
        lin.w[k] = lin.a[k] / c_n[k];
    }
    return lin;
}

}  // namespace

SparseSystem assemble_transport(const Mesh& mesh, const TransportInputs& in) {
    check_transport_inputs(mesh, in);
    const int nc = static_cast<int>(mesh.num_cells());
    const FluidEos& eos = *in.eos;
    const double trt = in.theta * eos.RT();
    const Linearization lin = linearize(eos, in.c_n);

    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(nc) + 4 * mesh.interior_edges().size());
    std::vector<double> rhs(nc, 0.0);

    for (int k = 0; k < nc; ++k) {
        const double m = mesh.area(k) / in.tau;
        trip.push_back({k, k, in.phi_iter[k] * m});
        rhs[k] += in.phi_n[k] * in.c_n[k] * m;
    }
    for (int e : mesh.interior_edges()) {
        const Edge& ed = mesh.edge(e);
        const int i = ed.cell_i;
        const int j = ed.cell_j;
        const double g = in.sigma1 * ed.length / mesh.h_e(e);
        const double adv = in.c_star[e] * in.u_f->flux[e];
        const double dmu = in.mu_n[i] - in.mu_n[j];
        const double da = lin.a[i] - lin.a[j];
        trip.push_back({i, i, g * trt * lin.w[i]});
        trip.push_back({i, j, -g * trt * lin.w[j]});
        trip.push_back({j, j, g * trt * lin.w[j]});
        trip.push_back({j, i, -g * trt * lin.w[i]});
        const double r = -adv - g * dmu + g * trt * da;
        rhs[i] += r;
        rhs[j] -= r;
    }
    if (in.dirichlet != nullptr) {
        const double mu_d = chemical_potential(eos, in.dirichlet->value);
        for (int e : in.dirichlet->edges) {
            const Edge& ed = mesh.edge(e);
            if (!ed.is_boundary()) throw TopologyError("dirichlet edge " + std::to_string(e) + " is interior");
            const int k = ed.cell_i;
            const double g = in.sigma1 * ed.length / mesh.h_e(e);
            trip.push_back({k, k, g * trt * lin.w[k]});
            rhs[k] += -g * (in.mu_n[k] - mu_d) + g * trt * lin.a[k];
        }
    }
    return {CsrMatrix::from_triplets(nc, nc, trip), std::move(rhs)};
}

ScalarCellField stabilized_mu(const FluidEos& eos, std::span<const double> c_n,
                              std::span<const double> mu_n, std::span<const double> c, double theta) {
    require_size(mu_n.size(), c_n.size(), "stabilized_mu mu_n");
    require_size(c.size(), c_n.size(), "stabilized_mu c");
    const Linearization lin = linearize(eos, c_n);
    ScalarCellField mu(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
        mu[k] = mu_n[k] + theta * eos.RT() * lin.w[k] * (c[k] - c_n[k]);
    }
    return mu;
}

CellBalance transport_balance(const Mesh& mesh, const TransportInputs& in, std::span<const double> c) {
    check_transport_inputs(mesh, in);
    require_size(c.size(), mesh.num_cells(), "transport_balance c");
    const FluidEos& eos = *in.eos;
    const ScalarCellField mu = stabilized_mu(eos, in.c_n, in.mu_n, c, in.theta);
    const std::size_t nc = mesh.num_cells();
    CellBalance out{std::vector<double>(nc, 0.0), std::vector<double>(nc, 0.0)};
    auto add = [&](int k, double term) {
        out.residual[k] += term;
        out.scale[k] += std::abs(term);
    };
    for (std::size_t k = 0; k < nc; ++k) {
        const double m = mesh.area(static_cast<int>(k)) / in.tau;
        add(static_cast<int>(k), in.phi_iter[k] * c[k] * m);
        add(static_cast<int>(k), -in.phi_n[k] * in.c_n[k] * m);
    }
    for (int e : mesh.interior_edges()) {
        const Edge& ed = mesh.edge(e);
        const double adv = in.c_star[e] * in.u_f->flux[e];
        const double pen = in.sigma1 * ed.length / mesh.h_e(e) * (mu[ed.cell_i] - mu[ed.cell_j]);
        for (int k : {ed.cell_i, ed.cell_j}) {
            const double s = jump_sign(ed, k);
            add(k, s * adv);
            add(k, s * pen);
        }
    }
    if (in.dirichlet != nullptr) {
        const double mu_d = chemical_potential(eos, in.dirichlet->value);
        for (int e : in.dirichlet->edges) {
            const Edge& ed = mesh.edge(e);
            add(ed.cell_i, in.sigma1 * ed.length / mesh.h_e(e) * (mu[ed.cell_i] - mu_d));
        }
    }
    return out;
}

// ----------------------------------------------------------------- velocity

std::vector<double> cell_mobility(const RockProps& rock, std::span<const double> phi,
                                  std::span<const double> kappa0) {
    require_size(kappa0.size(), phi.size(), "cell_mobility kappa0");
    std::vector<double> lam(phi.size());
    for (std::size_t k = 0; k < phi.size(); ++k) lam[k] = mobility(rock, phi[k], kappa0[k]);
    return lam;
}

namespace {

std::vector<int> interior_dof_map(const Mesh& mesh) {
    std::vector<int> dof(mesh.num_edges(), -1);
    const auto& ie = mesh.interior_edges();
    for (std::size_t i = 0; i < ie.size(); ++i) dof[ie[i]] = static_cast<int>(i);
    return dof;
}

}  // namespace

CsrMatrix velocity_mass_matrix(const Mesh& mesh, std::span<const double> mobility) {
    require_size(mobility.size(), mesh.num_cells(), "velocity mobility");
    const std::vector<int> dof = interior_dof_map(mesh);
    const int n = static_cast<int>(mesh.interior_edges().size());
    std::vector<Triplet> trip;
    trip.reserve(9 * mesh.num_cells());
    for (int k = 0; k < static_cast<int>(mesh.num_cells()); ++k) {
        if (!(mobility[k] > 0.0)) throw DomainError("velocity: non-positive mobility at cell " + std::to_string(k));
        const double area = mesh.area(k);
        std::array<Point, 3> x;
        for (int a = 0; a < 3; ++a) x[a] = mesh.cell_vertex(k, a);
        const std::array<Point, 3> mid{0.5 * (x[1] + x[2]), 0.5 * (x[2] + x[0]), 0.5 * (x[0] + x[1])};
        const auto& ce = mesh.cell_edges(k);
        for (int a = 0; a < 3; ++a) {
            const int ra = dof[ce[a]];
            if (ra < 0) continue;
            const double sa = jump_sign(mesh.edge(ce[a]), k);
            for (int b = 0; b < 3; ++b) {
                const int rb = dof[ce[b]];
                if (rb < 0) continue;
                const double sb = jump_sign(mesh.edge(ce[b]), k);
                double q = 0.0;
                for (const Point& m : mid) q += dot(m - x[a], m - x[b]);
                const double v = sa * sb * q / (12.0 * area * mobility[k]);
                trip.push_back({ra, rb, v});
            }
        }
    }
    return CsrMatrix::from_triplets(n, n, trip);
}

VelocitySolver::VelocitySolver(const Mesh& mesh, std::span<const double> mobility)
    : mesh_(&mesh), solver_(velocity_mass_matrix(mesh, mobility), Factorization::LDLT) {}

FaceFluxField VelocitySolver::solve(std::span<const double> mu, std::span<const double> c_star) const {
    if (mesh_ == nullptr) throw SolverError("VelocitySolver used before construction");
    require_size(mu.size(), mesh_->num_cells(), "velocity mu");
    require_size(c_star.size(), mesh_->num_edges(), "velocity c_star");
    const auto& ie = mesh_->interior_edges();
    std::vector<double> rhs(ie.size());
    for (std::size_t i = 0; i < ie.size(); ++i) {
        const Edge& e = mesh_->edge(ie[i]);
        rhs[i] = (mu[e.cell_i] - mu[e.cell_j]) * c_star[ie[i]];
    }
    FaceFluxField u(mesh_->num_edges());
    if (ie.empty()) return u;
    const std::vector<double> x = solver_.solve(rhs);
    for (std::size_t i = 0; i < ie.size(); ++i) u.flux[ie[i]] = x[i];
    return u;
}

FaceFluxField assemble_velocity(const Mesh& mesh, std::span<const double> mobility,
                                std::span<const double> mu, std::span<const double> c_star) {
    if (mesh.interior_edges().empty()) return FaceFluxField(mesh.num_edges());
    return VelocitySolver(mesh, mobility).solve(mu, c_star);
}

// ----------------------------------------------------------------- pressure

ScalarCellField pressure_update(const FluidEos& eos, std::span<const double> c_n,
                                std::span<const double> c_new) {
    require_size(c_new.size(), c_n.size(), "pressure_update");
    const double r2 = std::numbers::sqrt2;
    const double beta = eos.beta;
    ScalarCellField p(c_n.size());
    for (std::size_t k = 0; k < c_n.size(); ++k) {
        const double cn = c_n[k];
        const double bc = beta * cn;
        if (!(cn > 0.0) || !(bc < 1.0)) throw DomainError("pressure_update: c_n out of range");
        const double d1 = 1.0 + (1.0 - r2) * bc;
        const double d2 = 1.0 + (1.0 + r2) * bc;
        p[k] = eos.RT() * c_new[k] / (1.0 - bc) +
               eos.b * cn / (2.0 * r2 * beta) *
                   ((1.0 - r2) * beta * c_new[k] / d1 - (1.0 + r2) * bc / d2);
    }
    return p;
}

// --------------------------------------------------------------- elasticity

CsrMatrix elasticity_matrix(const Mesh& mesh, const RockProps& rock, double sigma2) {
    if (!(sigma2 > 0.0)) throw InvalidParameter("elasticity: sigma2 must be positive");
    const int nc = static_cast<int>(mesh.num_cells());
    const int n = 6 * nc;
    const double eta = rock.lame_mu;
    const double gam = rock.lame_lambda;
    std::vector<Triplet> trip;
    trip.reserve(36 * static_cast<std::size_t>(nc) + 144 * mesh.interior_edges().size());

    std::vector<std::array<Point, 3>> grads(nc);
    for (int k = 0; k < nc; ++k) grads[k] = basis_gradients(mesh, k);

    for (int k = 0; k < nc; ++k) {
        const auto& g = grads[k];
        const double area = mesh.area(k);
        for (int a = 0; a < 3; ++a) {
            for (int d = 0; d < 2; ++d) {
                for (int b = 0; b < 3; ++b) {
                    for (int f = 0; f < 2; ++f) {
                        const double v = area * (eta * ((d == f ? dot(g[a], g[b]) : 0.0) +
                                                        comp(g[a], f) * comp(g[b], d)) +
                                                 gam * comp(g[a], d) * comp(g[b], f));
                        trip.push_back({CellLinearVectorField::dof(k, a, d), CellLinearVectorField::dof(k, b, f), v});
                    }
                }
            }
        }
    }

    for (int e : mesh.interior_edges()) {
        const Edge& ed = mesh.edge(e);
        const std::array<int, 2> cells{ed.cell_i, ed.cell_j};
        const std::array<double, 2> sgn{1.0, -1.0};
        const double len = ed.length;
        const double pen = sigma2 / mesh.h_e(e);
        for (int sr = 0; sr < 2; ++sr) {
            const int kr = cells[sr];
            for (int a = 0; a < 3; ++a) {
                const int va = mesh.cell(kr)[a];
                if (!on_edge(ed, va)) continue;
                for (int sq = 0; sq < 2; ++sq) {
                    const int kq = cells[sq];
                    for (int b = 0; b < 3; ++b) {
                        const int vb = mesh.cell(kq)[b];
                        for (int f = 0; f < 2; ++f) {
                            const Point t = traction(grads[kq][b], f, ed.normal, rock);
                            for (int d = 0; d < 2; ++d) {
                                const int r = CellLinearVectorField::dof(kr, a, d);
                                const int q = CellLinearVectorField::dof(kq, b, f);
                                const double cons = -0.5 * sgn[sr] * 0.5 * len * comp(t, d);
                                trip.push_back({r, q, cons});
                                trip.push_back({q, r, cons});
                                if (d == f && on_edge(ed, vb)) {
                                    const double m1 = va == vb ? len / 3.0 : len / 6.0;
                                    trip.push_back({r, q, pen * sgn[sr] * sgn[sq] * m1});
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    return CsrMatrix::from_triplets(n, n, trip);
}

std::vector<double> elasticity_rhs(const Mesh& mesh, std::span<const double> p, double alpha) {
    require_size(p.size(), mesh.num_cells(), "elasticity_rhs p");
    const int nc = static_cast<int>(mesh.num_cells());
    std::vector<double> rhs(6 * static_cast<std::size_t>(nc), 0.0);
    for (int k = 0; k < nc; ++k) {
        const auto g = basis_gradients(mesh, k);
        for (int a = 0; a < 3; ++a) {
            for (int d = 0; d < 2; ++d) rhs[CellLinearVectorField::dof(k, a, d)] += alpha * p[k] * mesh.area(k) * comp(g[a], d);
        }
    }
    for (int e : mesh.interior_edges()) {
        const Edge& ed = mesh.edge(e);
        const double pavg = 0.5 * (p[ed.cell_i] + p[ed.cell_j]);
        for (int k : {ed.cell_i, ed.cell_j}) {
            const double s = jump_sign(ed, k);
            for (int a = 0; a < 3; ++a) {
                if (!on_edge(ed, mesh.cell(k)[a])) continue;
                for (int d = 0; d < 2; ++d) {
                    rhs[CellLinearVectorField::dof(k, a, d)] -= alpha * pavg * s * comp(ed.normal, d) * 0.5 * ed.length;
                }
            }
        }
    }
    return rhs;
}

std::array<int, 3> rigid_constraint_dofs(const Mesh& mesh) {
    if (mesh.num_cells() == 0) throw TopologyError("rigid_constraint_dofs: empty mesh");
    const Point x0 = mesh.cell_vertex(0, 0);
    int best_x = 0;
    int best_y = 0;
    double dx = 0.0;
    double dy = 0.0;
    for (int k = 0; k < static_cast<int>(mesh.num_cells()); ++k) {
        for (int a = 0; a < 3; ++a) {
            const Point q = mesh.cell_vertex(k, a) - x0;
            if (std::abs(q.x) > dx) {
                dx = std::abs(q.x);
                best_x = CellLinearVectorField::dof(k, a, 1);
            }
            if (std::abs(q.y) > dy) {
                dy = std::abs(q.y);
                best_y = CellLinearVectorField::dof(k, a, 0);
            }
        }
    }
    const int third = dx >= dy ? best_x : best_y;
    return {CellLinearVectorField::dof(0, 0, 0), CellLinearVectorField::dof(0, 0, 1), third};
}

SparseSystem assemble_elasticity(const Mesh& mesh, std::span<const double> p, const RockProps& rock,
                                 double sigma2) {
    SparseSystem sys{elasticity_matrix(mesh, rock, sigma2), elasticity_rhs(mesh, p, rock.alpha)};
    for (int d : rigid_constraint_dofs(mesh)) {
        sys.matrix.pin_dof(d);
        sys.rhs[d] = 0.0;
    }
    return sys;
}

ElasticitySolver::ElasticitySolver(const Mesh& mesh, const RockProps& rock, double sigma2)
    : mesh_(&mesh), alpha_(rock.alpha), matrix_(elasticity_matrix(mesh, rock, sigma2)),
      pinned_(rigid_constraint_dofs(mesh)) {
    CsrMatrix constrained = matrix_;
    for (int d : pinned_) constrained.pin_dof(d);
    solver_.factorize(constrained, Factorization::LDLT);
}

CellLinearVectorField ElasticitySolver::solve(std::span<const double> p) const {
    if (mesh_ == nullptr) throw SolverError("ElasticitySolver used before construction");
    std::vector<double> rhs = elasticity_rhs(*mesh_, p, alpha_);
    for (int d : pinned_) rhs[d] = 0.0;
    CellLinearVectorField u;
    u.dofs = solver_.solve(rhs);
    return u;
}

double elastic_energy(const Mesh& mesh, const CellLinearVectorField& u, const RockProps& rock, double penalty) {
    require_size(u.dofs.size(), 6 * mesh.num_cells(), "elastic_energy u");
    const int nc = static_cast<int>(mesh.num_cells());
    const double eta = rock.lame_mu;
    const double gam = rock.lame_lambda;
    // constant strain and traction per cell
    std::vector<std::array<double, 3>> eps(nc);  // xx, yy, xy
    for (int k = 0; k < nc; ++k) {
        const auto g = basis_gradients(mesh, k);
        double exx = 0.0, eyy = 0.0, exy = 0.0;
        for (int a = 0; a < 3; ++a) {
            exx += g[a].x * u.at(k, a, 0);
            eyy += g[a].y * u.at(k, a, 1);
            exy += 0.5 * (g[a].y * u.at(k, a, 0) + g[a].x * u.at(k, a, 1));
        }
        eps[k] = {exx, eyy, exy};
    }
    auto stress_n = [&](int k, Point n) {
        const auto& e = eps[k];
        const double tr = e[0] + e[1];
        const double sxx = 2.0 * eta * e[0] + gam * tr;
        const double syy = 2.0 * eta * e[1] + gam * tr;
        const double sxy = 2.0 * eta * e[2];
        return Point{sxx * n.x + sxy * n.y, sxy * n.x + syy * n.y};
    };

    double energy = 0.0;
    for (int k = 0; k < nc; ++k) {
        const auto& e = eps[k];
        const double tr = e[0] + e[1];
        energy += mesh.area(k) * (eta * (e[0] * e[0] + e[1] * e[1] + 2.0 * e[2] * e[2]) + 0.5 * gam * tr * tr);
    }
    for (int ei : mesh.interior_edges()) {
        const Edge& ed = mesh.edge(ei);
        std::array<Point, 2> jump{};
        for (int node = 0; node < 2; ++node) {
            const int v = ed.v[node];
            Point ui{}, uj{};
            for (int a = 0; a < 3; ++a) {
                if (mesh.cell(ed.cell_i)[a] == v) ui = {u.at(ed.cell_i, a, 0), u.at(ed.cell_i, a, 1)};
                if (mesh.cell(ed.cell_j)[a] == v) uj = {u.at(ed.cell_j, a, 0), u.at(ed.cell_j, a, 1)};
            }
            jump[node] = ui - uj;
        }
        const double len = ed.length;
        const double jj = len / 3.0 * (dot(jump[0], jump[0]) + dot(jump[1], jump[1]) + dot(jump[0], jump[1]));
        const Point avg = 0.5 * (stress_n(ed.cell_i, ed.normal) + stress_n(ed.cell_j, ed.normal));
        const Point int_jump = 0.5 * len * (jump[0] + jump[1]);
        energy += 0.5 * penalty / mesh.h_e(ei) * jj - dot(avg, int_jump);
    }
    return energy;
}

// ----------------------------------------------------------------- porosity

ScalarCellField porosity_update(const Mesh& mesh, std::span<const double> phi_n,
                                std::span<const double> p_n, std::span<const double> p_new,
                                const CellLinearVectorField& u_n, const CellLinearVectorField& u_new,
                                const RockProps& rock) {
    const std::size_t nc = mesh.num_cells();
    require_size(phi_n.size(), nc, "porosity phi_n");
    require_size(p_n.size(), nc, "porosity p_n");
    require_size(p_new.size(), nc, "porosity p_new");
    require_size(u_n.dofs.size(), 6 * nc, "porosity u_n");
    require_size(u_new.dofs.size(), 6 * nc, "porosity u_new");
    CellLinearVectorField du(nc);
    for (std::size_t i = 0; i < du.dofs.size(); ++i) du.dofs[i] = u_new.dofs[i] - u_n.dofs[i];

    ScalarCellField phi(nc);
    for (std::size_t k = 0; k < nc; ++k) {
        phi[k] = phi_n[k] + (p_new[k] - p_n[k]) / rock.N + rock.alpha * divergence(mesh, du, static_cast<int>(k));
    }
    for (int ei : mesh.interior_edges()) {
        const Edge& ed = mesh.edge(ei);
        Point sum{};
        for (int v : ed.v) {
            for (int a = 0; a < 3; ++a) {
                if (mesh.cell(ed.cell_i)[a] == v) sum = sum + Point{du.at(ed.cell_i, a, 0), du.at(ed.cell_i, a, 1)};
                if (mesh.cell(ed.cell_j)[a] == v) sum = sum - Point{du.at(ed.cell_j, a, 0), du.at(ed.cell_j, a, 1)};
            }
        }
        const double flux = dot(ed.normal, 0.5 * ed.length * sum);  // n_e . int_e [du]
        for (int k : {ed.cell_i, ed.cell_j}) {
            phi[k] -= rock.alpha * 0.5 * flux / mesh.area(k);
        }
    }
    return phi;
}

}  // namespace porogas
