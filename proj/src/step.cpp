#include "porogas/step.hpp"

#include "porogas/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace porogas {

void validate(const SolverConfig& cfg) {
    validate(cfg.eos);
    validate(cfg.rock);
    auto unit_open = [](double v) { return v > 0.0 && v < 1.0; };
    if (!unit_open(cfg.delta1) || !unit_open(cfg.delta2)) throw InvalidParameter("delta1, delta2 must lie in (0, 1)");
    if (!(cfg.tau_max > 0.0)) throw InvalidParameter("tau_max must be positive");
    if (!(cfg.eps_guard > 0.0)) throw InvalidParameter("eps_guard must be positive");
    if (!(cfg.picard_tol > 0.0)) throw InvalidParameter("picard_tol must be positive");
    if (cfg.picard_max < 1) throw InvalidParameter("picard_max must be at least 1");
    if (cfg.max_retries < 0) throw InvalidParameter("max_retries must be non-negative");
    if (!(cfg.sigma1 >= 0.0) || !(cfg.sigma2 > 0.0)) throw InvalidParameter("sigma1 >= 0 and sigma2 > 0 required");
}

double compute_theta(const FluidEos& eos, std::span<const double> c_n, double delta1, double delta2) {
    double theta = 1.0;
    for (std::size_t k = 0; k < c_n.size(); ++k) {
        const double bc = eos.beta * c_n[k];
        if (!(c_n[k] > 0.0) || !(bc < 1.0)) throw DomainError("compute_theta: c out of (0, 1/beta)");
        const double s2 = (1.0 - bc) * (1.0 - bc);
        const double chi1 = 1.0 - delta1 * s2;
        const double chi2 = 1.0 + delta2 * s2;
        if (!(chi2 * bc < 1.0)) {
            throw DomainError("compute_theta: delta2 too large, upper bound reaches 1/beta at cell " + std::to_string(k));
        }
        const double t1 = s2 / (chi1 * (1.0 - chi1 * bc) * (1.0 - chi1 * bc));
        const double t2 = s2 / (chi2 * (1.0 - chi2 * bc) * (1.0 - chi2 * bc));
        theta = std::max({theta, t1, t2});
    }
    return theta;
}

TauCandidates tau_candidates(const Mesh& mesh, const TauInputs& in, const SolverConfig& cfg) {
    const std::size_t nc = mesh.num_cells();
    if (in.c_n.size() != nc || in.phi_n.size() != nc || in.phi_iter.size() != nc || in.mu_n.size() != nc ||
        in.c_star.size() != mesh.num_edges() || in.u_f == nullptr || in.u_f->flux.size() != mesh.num_edges()) {
        throw InvalidParameter("tau_candidates: field sizes do not match the mesh");
    }
    // Active denominators: out = outflow + positive mu jumps, inn = inflow + negative mu jumps.
    std::vector<double> out(nc, 0.0), inn(nc, 0.0);
    for (int e : mesh.interior_edges()) {
        const Edge& ed = mesh.edge(e);
        const double g = cfg.sigma1 * ed.length / mesh.h_e(e);
        for (int k : {ed.cell_i, ed.cell_j}) {
            const double s = jump_sign(ed, k);
            const double f = s * in.u_f->flux[e];
            if (f > 0.0) out[k] += in.c_star[e] * f;
            if (f < 0.0) inn[k] -= in.c_star[e] * f;
            const double dmu = s * (in.mu_n[ed.cell_i] - in.mu_n[ed.cell_j]);
            if (dmu > 0.0) out[k] += g * dmu;
            if (dmu < 0.0) inn[k] -= g * dmu;
        }
    }
    if (in.dirichlet != nullptr) {
        const double mu_d = chemical_potential(cfg.eos, in.dirichlet->value);
        for (int e : in.dirichlet->edges) {
            const Edge& ed = mesh.edge(e);
            const int k = ed.cell_i;
            const double dmu = in.mu_n[k] - mu_d;
            const double g = cfg.sigma1 * ed.length / mesh.h_e(e);
            if (dmu > 0.0) out[k] += g * dmu;
            if (dmu < 0.0) inn[k] -= g * dmu;
        }
    }

    TauCandidates tc{std::vector<double>(nc), std::vector<double>(nc)};
    const double beta = cfg.eos.beta;
    for (std::size_t k = 0; k < nc; ++k) {
        const double c = in.c_n[k];
        const double s2 = (1.0 - beta * c) * (1.0 - beta * c);
        const double area = mesh.area(static_cast<int>(k));
        const double dphi = in.phi_iter[k] - in.phi_n[k];
        const double num1 = (in.phi_iter[k] * c * s2 * cfg.delta1 - dphi * c) * area;
        const double num2 = (in.phi_iter[k] * c * s2 * cfg.delta2 + dphi * c) * area;
        auto candidate = [&](double num, double active, const char* which) {
            if (num > 0.0) return num / (active + cfg.eps_guard);
            if (active > 0.0) {
                throw StepFailure(std::string("tau: nonpositive ") + which + " numerator at cell " + std::to_string(k) +
                                  "; reduce delta or the step");
            }
            return cfg.tau_max;
        };
        tc.tau1[k] = candidate(num1, out[k], "lower-bound");
        tc.tau2[k] = candidate(num2, inn[k], "upper-bound");
    }
    return tc;
}

double compute_tau(const Mesh& mesh, const TauInputs& in, const SolverConfig& cfg) {
    const TauCandidates tc = tau_candidates(mesh, in, cfg);
    double tau = cfg.tau_max;
    for (std::size_t k = 0; k < tc.tau1.size(); ++k) tau = std::min({tau, tc.tau1[k], tc.tau2[k]});
    return tau;
}

BoundsReport check_bounds(std::span<const double> c_n, std::span<const double> c, double delta1, double delta2,
                          double beta) {
    if (c_n.size() != c.size()) throw InvalidParameter("check_bounds: size mismatch");
    BoundsReport r;
    r.lower_margin = std::numeric_limits<double>::infinity();
    r.upper_margin = std::numeric_limits<double>::infinity();
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c.size(); ++k) {
        const double s2 = (1.0 - beta * c_n[k]) * (1.0 - beta * c_n[k]);
        const double lo = (1.0 - delta1 * s2) * c_n[k];
        const double hi = (1.0 + delta2 * s2) * c_n[k];
        const double ml = (c[k] - lo) / c_n[k];
        const double mu = (hi - c[k]) / c_n[k];
        r.lower_margin = std::min(r.lower_margin, ml);
        r.upper_margin = std::min(r.upper_margin, mu);
        const bool in_range = c[k] > 0.0 && beta * c[k] < 1.0;
        const double m = in_range ? std::min(ml, mu) : -std::numeric_limits<double>::infinity();
        if (m < worst) {
            worst = m;
            r.worst_cell = static_cast<int>(k);
        }
        if (!(c[k] >= lo) || !(c[k] <= hi) || !in_range) r.ok = false;
    }
    return r;
}

double total_moles(const Mesh& mesh, const DiscreteState& s) {
    double n = 0.0;
    for (std::size_t k = 0; k < s.c.size(); ++k) n += s.phi[k] * s.c[k] * mesh.area(static_cast<int>(k));
    return n;
}

double energy_discrete(const Mesh& mesh, const DiscreteState& s, const SolverConfig& cfg) {
    double e = 0.0;
    for (std::size_t k = 0; k < s.c.size(); ++k) {
        const double area = mesh.area(static_cast<int>(k));
        e += area * (s.phi[k] * helmholtz_f(cfg.eos, s.c[k]) + s.p[k] * s.p[k] / (2.0 * cfg.rock.N));
    }
    const double pen = cfg.energy_penalty_uses_sigma1 ? cfg.sigma1 : cfg.sigma2;
    return e + elastic_energy(mesh, s.u_s, cfg.rock, pen);
}

void fill_diagnostics(const Mesh& mesh, const DiscreteState& s, const SolverConfig& cfg, StepDiagnostics& d) {
    d.energy = energy_discrete(mesh, s, cfg);
    d.total_moles = total_moles(mesh, s);
    const auto [lo, hi] = std::minmax_element(s.c.begin(), s.c.end());
    d.c_min = *lo;
    d.c_max = *hi;
}

// ------------------------------------------------------------------ Stepper

Stepper::Stepper(const Mesh& mesh, SolverConfig cfg, std::vector<double> kappa0, std::optional<DirichletData> dirichlet)
    : mesh_(&mesh), cfg_(std::move(cfg)), kappa0_(std::move(kappa0)), dirichlet_(std::move(dirichlet)) {
    validate(cfg_);
    if (kappa0_.empty()) kappa0_.assign(mesh.num_cells(), cfg_.rock.kappa0);
    if (kappa0_.size() != mesh.num_cells()) throw InvalidParameter("kappa0 field size does not match the mesh");
    for (double k : kappa0_) {
        if (!(k > 0.0)) throw InvalidParameter("kappa0 field must be positive");
    }
    if (dirichlet_) {
        for (int e : dirichlet_->edges) {
            if (e < 0 || e >= static_cast<int>(mesh.num_edges()) || !mesh.edge(e).is_boundary()) {
                throw TopologyError("dirichlet edge " + std::to_string(e) + " is not a boundary edge");
            }
        }
        if (!(dirichlet_->value > 0.0) || !(cfg_.eos.beta * dirichlet_->value < 1.0)) {
            throw DomainError("dirichlet value outside (0, 1/beta)");
        }
    }
    elasticity_ = ElasticitySolver(mesh, cfg_.rock, cfg_.sigma2);
}

DiscreteState Stepper::initial_state(ScalarCellField c0, ScalarCellField phi0) const {
    const std::size_t nc = mesh_->num_cells();
    if (c0.size() != nc || phi0.size() != nc) throw InvalidParameter("initial fields do not match the mesh");
    DiscreteState s;
    s.c = std::move(c0);
    s.phi = std::move(phi0);
    s.p.resize(nc);
    for (std::size_t k = 0; k < nc; ++k) {
        if (!(s.phi[k] > 0.0 && s.phi[k] < 1.0)) throw DomainError("initial porosity outside (0, 1)");
        s.p[k] = pressure_peng(cfg_.eos, s.c[k]);
    }
    s.u_f = FaceFluxField(mesh_->num_edges());
    s.u_s = elasticity_.solve(s.p);
    return s;
}

namespace {

double weighted_norm(const Mesh& mesh, std::span<const double> v) {
    double s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) s += mesh.area(static_cast<int>(k)) * v[k] * v[k];
    return std::sqrt(s);
}

}  // namespace

std::pair<DiscreteState, StepDiagnostics> Stepper::attempt(const DiscreteState& s, double tau_cap) const {
    const Mesh& mesh = *mesh_;
    const std::size_t nc = mesh.num_cells();
    const FluidEos& eos = cfg_.eos;

    StepDiagnostics d;
    d.theta = compute_theta(eos, s.c, cfg_.delta1, cfg_.delta2);
    std::vector<double> mu_n(nc);
    for (std::size_t k = 0; k < nc; ++k) mu_n[k] = chemical_potential(eos, s.c[k]);
    const VelocitySolver velocity(mesh, cell_mobility(cfg_.rock, s.phi, kappa0_));

    SolverConfig local = cfg_;
    local.tau_max = std::min(cfg_.tau_max, tau_cap);
    double tau = local.tau_max;

    DiscreteState it = s;  // iterate l, starting from phi^n, u_f^n
    std::vector<double> diff(nc);
    // Upwind side per edge (+1: cell_i, -1: cell_j). An edge whose side has
    // flipped twice within the step keeps its current side from then on.
    const std::size_t ne = mesh.num_edges();
    std::vector<signed char> side(ne, 0), flips(ne, 0);
    std::vector<double> c_star(ne, 0.0);
    bool converged = false;
    for (int l = 0; l < cfg_.picard_max; ++l) {
        for (int e : mesh.interior_edges()) {
            const Edge& ed = mesh.edge(e);
            if (it.u_f.flux[e] == 0.0 && side[e] == 0) {
                c_star[e] = s.c[ed.cell_i];
                continue;
            }
            const signed char want = it.u_f.flux[e] >= 0.0 ? 1 : -1;
            if (side[e] != 0 && want != side[e] && flips[e] < 2) {
                ++flips[e];
                if (flips[e] == 2) ++d.frozen_edges;
            }
            if (side[e] == 0 || flips[e] < 2) side[e] = want;
            c_star[e] = side[e] > 0 ? s.c[ed.cell_i] : s.c[ed.cell_j];
        }
        TauInputs ti{s.c, s.phi, it.phi, &it.u_f, c_star, mu_n, dirichlet()};
        tau = std::min(tau, compute_tau(mesh, ti, local));

        TransportInputs tr;
        tr.c_n = s.c;
        tr.phi_n = s.phi;
        tr.phi_iter = it.phi;
        tr.u_f = &it.u_f;
        tr.c_star = c_star;
        tr.mu_n = mu_n;
        tr.theta = d.theta;
        tr.tau = tau;
        tr.sigma1 = cfg_.sigma1;
        tr.eos = &eos;
        tr.dirichlet = dirichlet();
        const SparseSystem sys = assemble_transport(mesh, tr);
        std::vector<double> c_new = solve_direct(sys.matrix, sys.rhs);

        const BoundsReport br = check_bounds(s.c, c_new, cfg_.delta1, cfg_.delta2, eos.beta);
        if (!br.ok) {
            throw StepFailure("density bound violated at cell " + std::to_string(br.worst_cell) +
                              " (lower margin " + std::to_string(br.lower_margin) + ", upper margin " +
                              std::to_string(br.upper_margin) + ")");
        }

        const ScalarCellField mu = stabilized_mu(eos, s.c, mu_n, c_new, d.theta);
        FaceFluxField u_f = velocity.solve(mu, c_star);
        ScalarCellField p = pressure_update(eos, s.c, c_new);
        CellLinearVectorField u_s = elasticity_.solve(p);
        ScalarCellField phi = porosity_update(mesh, s.phi, s.p, p, s.u_s, u_s, cfg_.rock);
        for (std::size_t k = 0; k < nc; ++k) {
            if (!(phi[k] > 0.0 && phi[k] < 1.0)) {
                throw StepFailure("porosity left (0, 1) at cell " + std::to_string(k));
            }
        }

        for (std::size_t k = 0; k < nc; ++k) diff[k] = c_new[k] - it.c[k];
        const double rel = weighted_norm(mesh, diff) / weighted_norm(mesh, c_new);
        d.iterate_diffs.push_back(rel);
        if (d.iterate_diffs.size() >= 2) {
            const double prev = d.iterate_diffs[d.iterate_diffs.size() - 2];
            if (prev > 0.0) d.contraction_ratio = std::max(d.contraction_ratio, rel / prev);
        }

        it.c = std::move(c_new);
        it.p = std::move(p);
        it.u_f = std::move(u_f);
        it.u_s = std::move(u_s);
        it.phi = std::move(phi);
        d.iterations = l + 1;
        if (rel < cfg_.picard_tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "Picard iteration did not converge in " << cfg_.picard_max << " iterations; last differences";
        const std::size_t n = d.iterate_diffs.size();
        for (std::size_t i = n > 4 ? n - 4 : 0; i < n; ++i) msg << ' ' << d.iterate_diffs[i];
        throw StepFailure(msg.str());
    }
    it.t = s.t + tau;
    d.tau = tau;
    fill_diagnostics(mesh, it, cfg_, d);
    return {std::move(it), std::move(d)};
}

std::pair<DiscreteState, StepDiagnostics> Stepper::advance(const DiscreteState& s, double tau_cap) const {
    if (!(tau_cap > 0.0)) throw InvalidParameter("advance: tau cap must be positive");
    double cap = std::min(tau_cap, cfg_.tau_max);
    for (int attempt_no = 0;; ++attempt_no) {
        try {
            auto result = attempt(s, cap);
            result.second.retries = attempt_no;
            return result;
        } catch (const StepFailure& err) {
            if (attempt_no >= cfg_.max_retries) {
                throw StepFailure(std::string(err.what()) + " [after " + std::to_string(attempt_no) + " retries, t = " +
                                  std::to_string(s.t) + "]");
            }
            cap *= 0.5;
        }
    }
}

std::pair<DiscreteState, StepDiagnostics> Stepper::advance(const DiscreteState& s) const {
    return advance(s, cfg_.tau_max);
}

std::pair<DiscreteState, StepDiagnostics> picard_advance(const Stepper& stepper, const DiscreteState& s) {
    return stepper.advance(s);
}

}  // namespace porogas
