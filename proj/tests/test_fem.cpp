#include <doctest.h>

#include "porogas/errors.hpp"
#include "porogas/fem.hpp"

#include <cmath>
#include <numeric>
#include <random>

using namespace porogas;

namespace {

FluidEos methane() { return eos_from_critical(190.56, 45.99e5, 0.011, 330.0); }

RockProps rock() {
    RockProps r;
    r.alpha = 0.4;
    r.N = 1e11;
    r.lame_mu = 1e8;
    r.lame_lambda = 1e11;
    return r;
}

std::vector<double> random_vec(std::size_t n, double lo, double hi, unsigned seed) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> U(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = U(g);
    return v;
}

struct TransportFixture {
    Mesh mesh;
    FluidEos eos = methane();
    std::vector<double> c_n, phi_n, phi_l, mu_n, c_star;
    FaceFluxField u;
    TransportInputs in;

    explicit TransportFixture(Mesh m, unsigned seed) : mesh(std::move(m)) {
        const std::size_t nc = mesh.num_cells();
        c_n = random_vec(nc, 100.0, 300.0, seed);
        phi_n = random_vec(nc, 0.1, 0.3, seed + 1);
        phi_l = random_vec(nc, 0.1, 0.3, seed + 2);
        mu_n.resize(nc);
        for (std::size_t k = 0; k < nc; ++k) mu_n[k] = chemical_potential(eos, c_n[k]);
        u = FaceFluxField(mesh.num_edges());
        const auto f = random_vec(mesh.num_edges(), -1e-3, 1e-3, seed + 3);
        for (int e : mesh.interior_edges()) u.flux[e] = f[e];
        c_star = upwind_traces(mesh, c_n, u);
        in.c_n = c_n;
        in.phi_n = phi_n;
        in.phi_iter = phi_l;
        in.u_f = &u;
        in.c_star = c_star;
        in.mu_n = mu_n;
        in.theta = 1.1;
        in.tau = 0.5;
        in.sigma1 = 1e-7;
        in.eos = &eos;
    }
};

}  // namespace

TEST_CASE("upwind trace follows the flux sign") {
    const Mesh m = generate_structured(1, 1, 1.0, 1.0);
    const int e = m.interior_edges().front();
    FaceFluxField u(m.num_edges());
    const std::vector<double> c{1.0, 2.0};
    const Edge& ed = m.edge(e);
    u.flux[e] = 1.0;
    CHECK(upwind_trace(m, c, u, e) == c[ed.cell_i]);
    u.flux[e] = -1.0;
    CHECK(upwind_trace(m, c, u, e) == c[ed.cell_j]);
    CHECK_THROWS_AS(upwind_trace(m, c, u, m.boundary_edges().front()), TopologyError);
}

TEST_CASE("two-cell transport matrix by hand") {
    TransportFixture fx(generate_structured(1, 1, 2.0, 3.0), 11);
    const Mesh& m = fx.mesh;
    const auto sys = assemble_transport(m, fx.in);
    const int e = m.interior_edges().front();
    const Edge& ed = m.edge(e);
    const int i = ed.cell_i, j = ed.cell_j;
    const double RT = fx.eos.RT(), beta = fx.eos.beta;
    const double th = fx.in.theta, tau = fx.in.tau;
    const double G = fx.in.sigma1 * ed.length / ed.length;
    auto w = [&](int k) { return 1.0 / (fx.c_n[k] * std::pow(1.0 - beta * fx.c_n[k], 2)); };
    auto a = [&](int k) { return 1.0 / std::pow(1.0 - beta * fx.c_n[k], 2); };
    const double F = fx.u.flux[e] * fx.c_star[e];

    CHECK(sys.matrix.at(i, i) == doctest::Approx(fx.phi_l[i] * m.area(i) / tau + G * th * RT * w(i)).epsilon(1e-13));
    CHECK(sys.matrix.at(i, j) == doctest::Approx(-G * th * RT * w(j)).epsilon(1e-13));
    CHECK(sys.matrix.at(j, i) == doctest::Approx(-G * th * RT * w(i)).epsilon(1e-13));
    CHECK(sys.matrix.at(j, j) == doctest::Approx(fx.phi_l[j] * m.area(j) / tau + G * th * RT * w(j)).epsilon(1e-13));
    const double ri = fx.phi_n[i] * fx.c_n[i] * m.area(i) / tau - F - G * (fx.mu_n[i] - fx.mu_n[j]) + G * th * RT * (a(i) - a(j));
    const double rj = fx.phi_n[j] * fx.c_n[j] * m.area(j) / tau + F + G * (fx.mu_n[i] - fx.mu_n[j]) - G * th * RT * (a(i) - a(j));
    CHECK(sys.rhs[i] == doctest::Approx(ri).epsilon(1e-12));
    CHECK(sys.rhs[j] == doctest::Approx(rj).epsilon(1e-12));
}

TEST_CASE("transport solution balances every cell and conserves mass") {
    TransportFixture fx(generate_structured(6, 5, 1.0, 1.0), 21);
    const auto sys = assemble_transport(fx.mesh, fx.in);
    const auto c = solve_direct(sys.matrix, sys.rhs);
    const CellBalance bal = transport_balance(fx.mesh, fx.in, c);
    for (std::size_t k = 0; k < c.size(); ++k) CHECK(std::abs(bal.residual[k]) <= 1e-10 * bal.scale[k]);
    double before = 0.0, after = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
        before += fx.phi_n[k] * fx.c_n[k] * fx.mesh.area(static_cast<int>(k));
        after += fx.phi_l[k] * c[k] * fx.mesh.area(static_cast<int>(k));
    }
    CHECK(after == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("uniform state is a fixed point of transport") {
    TransportFixture fx(generate_structured(3, 3, 1.0, 1.0), 5);
    std::fill(fx.c_n.begin(), fx.c_n.end(), 250.0);
    std::fill(fx.mu_n.begin(), fx.mu_n.end(), chemical_potential(fx.eos, 250.0));
    fx.phi_l = fx.phi_n;
    fx.in.phi_iter = fx.phi_l;
    std::fill(fx.u.flux.begin(), fx.u.flux.end(), 0.0);
    const auto sys = assemble_transport(fx.mesh, fx.in);
    const auto c = solve_direct(sys.matrix, sys.rhs);
    for (double v : c) CHECK(v == doctest::Approx(250.0).epsilon(1e-13));
}

TEST_CASE("dirichlet ghost edges") {
    TransportFixture fx(generate_structured(4, 2, 1.0, 1.0), 9);
    DirichletData dd;
    for (int e : fx.mesh.boundary_edges()) {
        if (std::abs(fx.mesh.vertex(fx.mesh.edge(e).v[0]).x) < 1e-12 &&
            std::abs(fx.mesh.vertex(fx.mesh.edge(e).v[1]).x) < 1e-12) {
            dd.edges.push_back(e);
        }
    }
    REQUIRE(dd.edges.size() == 2);
    dd.value = 1000.0;
    fx.in.dirichlet = &dd;
    const auto sys = assemble_transport(fx.mesh, fx.in);
    const auto c = solve_direct(sys.matrix, sys.rhs);
    const CellBalance bal = transport_balance(fx.mesh, fx.in, c);
    for (std::size_t k = 0; k < c.size(); ++k) CHECK(std::abs(bal.residual[k]) <= 1e-10 * bal.scale[k]);
    DirichletData bad{{fx.mesh.interior_edges().front()}, 1.0};
    fx.in.dirichlet = &bad;
    CHECK_THROWS_AS(assemble_transport(fx.mesh, fx.in), TopologyError);
}

TEST_CASE("RT0 mass matrix against an independent quadrature") {
    const Mesh m(std::vector<Point>{{0, 0}, {2, 0.3}, {0.4, 1.5}, {2.5, 2.0}},
                 std::vector<std::array<int, 3>>{{0, 1, 2}, {1, 3, 2}});
    const std::vector<double> lam{2.0, 0.5};
    const CsrMatrix M = velocity_mass_matrix(m, lam);
    REQUIRE(M.rows() == 1);
    // psi on each cell: s (x - x_opp)/(2|K|), with x_opp the vertex opposite the shared edge
    const int e = m.interior_edges().front();
    double ref = 0.0;
    for (int k = 0; k < 2; ++k) {
        int opp = -1;
        for (int a = 0; a < 3; ++a) {
            if (m.cell_edges(k)[a] == e) opp = a;
        }
        const Point xo = m.cell_vertex(k, opp);
        const Point p0 = m.cell_vertex(k, 0), p1 = m.cell_vertex(k, 1), p2 = m.cell_vertex(k, 2);
        // degree-2 rule with interior points
        const double bary[3][3] = {{2.0 / 3, 1.0 / 6, 1.0 / 6}, {1.0 / 6, 2.0 / 3, 1.0 / 6}, {1.0 / 6, 1.0 / 6, 2.0 / 3}};
        for (const auto& b : bary) {
            const Point x = b[0] * p0 + b[1] * p1 + b[2] * p2;
            const Point psi = (1.0 / (2.0 * m.area(k))) * (x - xo);
            ref += m.area(k) / 3.0 * dot(psi, psi) / lam[k];
        }
    }
    CHECK(M.at(0, 0) == doctest::Approx(ref).epsilon(1e-13));
}

TEST_CASE("velocity system is symmetric and solved consistently") {
    const Mesh m = generate_structured(6, 6, 1.0, 1.0);
    const auto lam = random_vec(m.num_cells(), 1e-3, 5e-3, 3);
    const CsrMatrix M = velocity_mass_matrix(m, lam);
    CHECK(M.asymmetry() <= 1e-14 * M.norm());
    const auto mu = random_vec(m.num_cells(), -1.0, 1.0, 4);
    const auto c = random_vec(m.num_cells(), 100.0, 200.0, 5);
    FaceFluxField up(m.num_edges());
    const auto cs = upwind_traces(m, c, up);
    const FaceFluxField u = assemble_velocity(m, lam, mu, cs);
    std::vector<double> rhs, x;
    for (int e : m.interior_edges()) {
        rhs.push_back((mu[m.edge(e).cell_i] - mu[m.edge(e).cell_j]) * cs[e]);
        x.push_back(u.flux[e]);
    }
    const CgResult cg = solve_cg(M, rhs, 1e-13, 10000);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(cg.x[i] == doctest::Approx(x[i]).epsilon(1e-8).scale(1e-12));
    for (int e : m.boundary_edges()) CHECK(u.flux[e] == 0.0);
}

TEST_CASE("pressure update is consistent with the equation of state") {
    const FluidEos e = methane();
    const std::vector<double> cn{50.0, 300.0, 2000.0};
    const auto p = pressure_update(e, cn, cn);
    for (std::size_t k = 0; k < cn.size(); ++k) CHECK(p[k] == doctest::Approx(pressure_peng(e, cn[k])).epsilon(1e-12));
    // affine in the new density
    const std::vector<double> c1{60.0, 310.0, 2100.0}, c2{70.0, 320.0, 2200.0};
    const auto p1 = pressure_update(e, cn, c1), p2 = pressure_update(e, cn, c2);
    for (std::size_t k = 0; k < cn.size(); ++k) CHECK(p2[k] - p1[k] == doctest::Approx(p1[k] - p[k]).epsilon(1e-9));
}

TEST_CASE("elasticity operator: symmetry and rigid modes") {
    const Mesh m = generate_structured(4, 3, 2.0, 1.0);
    const RockProps r = rock();
    const CsrMatrix A = elasticity_matrix(m, r, 10.0 * (2 * r.lame_mu + 2 * r.lame_lambda));
    CHECK(A.asymmetry() <= 1e-12 * A.norm());
    CellLinearVectorField tx(m.num_cells()), rot(m.num_cells());
    for (int k = 0; k < static_cast<int>(m.num_cells()); ++k) {
        for (int a = 0; a < 3; ++a) {
            const Point x = m.cell_vertex(k, a);
            tx.at(k, a, 0) = 1.0;
            rot.at(k, a, 0) = -x.y;
            rot.at(k, a, 1) = x.x;
        }
    }
    for (const auto* v : {&tx, &rot}) {
        const auto y = A.multiply(v->dofs);
        CHECK(norm2(y) <= 1e-12 * A.norm() * norm2(v->dofs));
    }
}

TEST_CASE("elastic energy equals half the quadratic form") {
    const Mesh m = generate_structured(3, 3, 1.0, 1.0);
    const RockProps r = rock();
    const double s2 = 3e12;
    const CsrMatrix A = elasticity_matrix(m, r, s2);
    CellLinearVectorField u(m.num_cells());
    u.dofs = random_vec(u.dofs.size(), -1e-3, 1e-3, 77);
    const auto Au = A.multiply(u.dofs);
    const double quad = 0.5 * std::inner_product(Au.begin(), Au.end(), u.dofs.begin(), 0.0);
    CHECK(elastic_energy(m, u, r, s2) == doctest::Approx(quad).epsilon(1e-10));
}

TEST_CASE("uniform pressure gives uniform expansion") {
    const Mesh m = generate_structured(5, 4, 1.0, 1.0);
    const RockProps r = rock();
    const double p0 = 3e6;
    const ElasticitySolver solver(m, r, 10.0 * (2 * r.lame_mu + 2 * r.lame_lambda));
    const CellLinearVectorField u = solver.solve(std::vector<double>(m.num_cells(), p0));
    const double s = r.alpha * p0 / (2.0 * (r.lame_mu + r.lame_lambda));
    for (int k = 0; k < static_cast<int>(m.num_cells()); ++k) {
        const auto g = basis_gradients(m, k);
        double exx = 0, eyy = 0, exy = 0;
        for (int a = 0; a < 3; ++a) {
            exx += g[a].x * u.at(k, a, 0);
            eyy += g[a].y * u.at(k, a, 1);
            exy += 0.5 * (g[a].y * u.at(k, a, 0) + g[a].x * u.at(k, a, 1));
        }
        CHECK(exx == doctest::Approx(s).epsilon(1e-8));
        CHECK(eyy == doctest::Approx(s).epsilon(1e-8));
        CHECK(std::abs(exy) <= 1e-8 * s);
    }
    const auto sys = assemble_elasticity(m, std::vector<double>(m.num_cells(), p0), r, 10.0 * (2 * r.lame_mu + 2 * r.lame_lambda));
    const auto x = solve_direct(sys.matrix, sys.rhs);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(x[i] - u.dofs[i]) <= 1e-8 * s);
}

TEST_CASE("porosity update for a linear displacement") {
    const Mesh m = generate_structured(3, 3, 1.0, 1.0);
    const RockProps r = rock();
    CellLinearVectorField u0(m.num_cells()), u1(m.num_cells());
    const double s = 1e-4;
    for (int k = 0; k < static_cast<int>(m.num_cells()); ++k) {
        for (int a = 0; a < 3; ++a) {
            u1.at(k, a, 0) = s * m.cell_vertex(k, a).x;
            u1.at(k, a, 1) = s * m.cell_vertex(k, a).y;
        }
    }
    const std::vector<double> phi(m.num_cells(), 0.2), p0(m.num_cells(), 1e6), p1(m.num_cells(), 2e6);
    const auto out = porosity_update(m, phi, p0, p1, u0, u1, r);
    for (double v : out) CHECK(v == doctest::Approx(0.2 + 1e6 / r.N + r.alpha * 2.0 * s).epsilon(1e-12));
    // a jump on one interior edge is shared with opposite signs
    CellLinearVectorField uj(m.num_cells());
    const Edge& e = m.edge(m.interior_edges()[3]);
    for (int a = 0; a < 3; ++a) uj.at(e.cell_i, a, 0) = 1e-3;
    const auto pj = porosity_update(m, phi, p0, p0, u0, uj, r);
    double net = 0.0;
    for (int k = 0; k < static_cast<int>(m.num_cells()); ++k) net += (pj[k] - 0.2) * m.area(k);
    CHECK(std::abs(net) < 1e-15);
}

TEST_CASE("two-cell velocity follows the chemical potential drop") {
    const Mesh m = generate_structured(1, 1, 1.0, 1.0);
    const int e = m.interior_edges()[0];
    const Edge& ed = m.edge(e);
    std::vector<double> mu(2), lam{2e-3, 2e-3}, cs(m.num_edges(), 150.0);
    mu[ed.cell_i] = 5.0;
    mu[ed.cell_j] = 1.0;
    const double q = assemble_velocity(m, lam, mu, cs).flux[e];
    CHECK(q > 0.0);
    // one unknown: M q = [mu] c*, with M from the scalar formula
    const CsrMatrix M = velocity_mass_matrix(m, lam);
    CHECK(q == doctest::Approx(4.0 * 150.0 / M.at(0, 0)).epsilon(1e-13));
    std::swap(mu[0], mu[1]);
    CHECK(assemble_velocity(m, lam, mu, cs).flux[e] == doctest::Approx(-q).epsilon(1e-13));
}

TEST_CASE("velocity is linear in mobility and vanishes for uniform potential") {
    const Mesh m = generate_structured(4, 4, 1.0, 1.0);
    const auto lam = random_vec(m.num_cells(), 1e-3, 5e-3, 21);
    std::vector<double> lam2(lam);
    for (double& v : lam2) v *= 2.0;
    const auto mu = random_vec(m.num_cells(), -1.0, 1.0, 22);
    const auto cs = random_vec(m.num_edges(), 100.0, 200.0, 23);
    const auto u1 = assemble_velocity(m, lam, mu, cs), u2 = assemble_velocity(m, lam2, mu, cs);
    for (int e : m.interior_edges()) CHECK(u2.flux[e] == doctest::Approx(2.0 * u1.flux[e]).epsilon(1e-9).scale(1e-14));
    const auto u0 = assemble_velocity(m, lam, std::vector<double>(m.num_cells(), 3.0), cs);
    for (double f : u0.flux) CHECK(f == 0.0);
}

TEST_CASE("transport matrix has the M-matrix sign pattern") {
    TransportFixture fx(generate_structured(4, 4, 1.0, 1.0), 31);
    const SparseSystem sys = assemble_transport(fx.mesh, fx.in);
    for (int i = 0; i < static_cast<int>(fx.mesh.num_cells()); ++i) {
        double off = 0.0;
        for (int j = 0; j < static_cast<int>(fx.mesh.num_cells()); ++j) {
            if (i == j) continue;
            CHECK(sys.matrix.at(i, j) <= 0.0);
            off += std::abs(sys.matrix.at(j, i));
        }
        // column diagonal dominance
        CHECK(sys.matrix.at(i, i) > off);
    }
}

TEST_CASE("pressure update: zero attraction and a direct evaluation") {
    FluidEos e = methane();
    const auto p = pressure_update(e, std::vector<double>{100.0}, std::vector<double>{110.0});
    const double r2 = std::sqrt(2.0), bc = e.beta * 100.0;
    const double slope = e.RT() / (1.0 - bc) + e.b * 100.0 * (1.0 - r2) / (2.0 * r2 * (1.0 + (1.0 - r2) * bc));
    CHECK(p[0] == doctest::Approx(pressure_peng(e, 100.0) + 10.0 * slope).epsilon(1e-12));
    e.b = 0.0;
    const auto p0 = pressure_update(e, std::vector<double>{100.0}, std::vector<double>{110.0});
    CHECK(p0[0] == doctest::Approx(e.RT() * 110.0 / (1.0 - bc)).epsilon(1e-14));
}

TEST_CASE("zero pressure gives zero displacement") {
    const Mesh m = generate_structured(3, 3, 1.0, 1.0);
    const RockProps r = rock();
    const ElasticitySolver solver(m, r, 10.0 * (2 * r.lame_mu + 2 * r.lame_lambda));
    const CellLinearVectorField u = solver.solve(std::vector<double>(m.num_cells(), 0.0));
    for (double v : u.dofs) CHECK(v == 0.0);
}

TEST_CASE("porosity update: unchanged inputs and a two-cell jump") {
    const Mesh m = generate_structured(1, 1, 1.0, 1.0);
    const RockProps r = rock();
    const std::vector<double> phi{0.2, 0.25}, p{1e6, 2e6};
    CellLinearVectorField u0(2), u1(2);
    u0.dofs = random_vec(12, -1e-3, 1e-3, 41);
    const auto same = porosity_update(m, phi, p, p, u0, u0, r);
    CHECK(same[0] == phi[0]);
    CHECK(same[1] == phi[1]);
    // constant increment d on cell_i only: no volume divergence, half the edge flux on each side
    const Edge& ed = m.edge(m.interior_edges()[0]);
    const double d = 1e-3;
    u1 = u0;
    for (int a = 0; a < 3; ++a) u1.at(ed.cell_i, a, 0) += d;
    const Point ci = m.centroid(ed.cell_i), cj = m.centroid(ed.cell_j);
    const double nx = (cj.x > ci.x ? 1.0 : -1.0) / std::sqrt(2.0);
    const double jump_flux = d * nx * std::sqrt(2.0);
    const auto out = porosity_update(m, phi, p, p, u0, u1, r);
    for (int k = 0; k < 2; ++k) CHECK(out[k] == doctest::Approx(phi[k] - r.alpha * 0.5 * jump_flux / 0.5).epsilon(1e-13));
}
