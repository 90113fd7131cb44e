#pragma once

#include "porogas/eos.hpp"
#include "porogas/fem.hpp"
#include "porogas/mesh.hpp"

#include <optional>
#include <span>
#include <vector>

namespace porogas {

struct DiscreteState {
    double t = 0.0;
    ScalarCellField c;
    ScalarCellField phi;
    ScalarCellField p;
    FaceFluxField u_f;
    CellLinearVectorField u_s;
};

struct SolverConfig {
    double delta1 = 0.2;
    double delta2 = 0.2;
    double sigma1 = 0.0;
    double sigma2 = 0.0;
    double tau_max = 1.0;
    double eps_guard = 1e-12;
    /// Relative tolerance on ||c^{l+1} - c^l|| / ||c^{l+1}|| (area-weighted L2).
    double picard_tol = 1e-11;
    int picard_max = 50;
    int max_retries = 5;
    bool energy_penalty_uses_sigma1 = false;
    FluidEos eos;
    RockProps rock;
};

void validate(const SolverConfig& cfg);

struct StepDiagnostics {
    double tau = 0.0;
    double theta = 1.0;
    double energy = 0.0;
    double total_moles = 0.0;
    double c_min = 0.0;
    double c_max = 0.0;
    int iterations = 0;
    /// Largest ratio of successive iterate differences (0 if fewer than two).
    double contraction_ratio = 0.0;
    /// Relative iterate differences, one per Picard iteration.
    std::vector<double> iterate_diffs;
    int retries = 0;
    /// Edges whose upwind side was frozen after oscillating between iterates.
    int frozen_edges = 0;
};

/// Stabilization multiplier, at least 1. Throws DomainError if the upper
/// bound (1 + delta2 (1 - beta c)^2) c would reach 1/beta.
double compute_theta(const FluidEos& eos, std::span<const double> c_n, double delta1, double delta2);

/// Per-cell step limits from the lower (tau1) and upper (tau2) bounds.
struct TauCandidates {
    std::vector<double> tau1;
    std::vector<double> tau2;
};

/// Inputs shared by the time-step limit and the transport solve.
struct TauInputs {
    std::span<const double> c_n;
    std::span<const double> phi_n;
    std::span<const double> phi_iter;
    const FaceFluxField* u_f = nullptr;
    std::span<const double> c_star;
    std::span<const double> mu_n;
    const DirichletData* dirichlet = nullptr;
};

/// Throws StepFailure when a numerator is nonpositive while its denominator
/// has active contributions.
TauCandidates tau_candidates(const Mesh& mesh, const TauInputs& in, const SolverConfig& cfg);

/// min over cells of min(tau1, tau2, tau_max).
double compute_tau(const Mesh& mesh, const TauInputs& in, const SolverConfig& cfg);

struct BoundsReport {
    bool ok = true;
    int worst_cell = -1;
    double lower_margin = 0.0;  ///< min_K (c_K - chi1 c_n,K) / c_n,K
    double upper_margin = 0.0;  ///< min_K (chi2 c_n,K - c_K) / c_n,K
};

/// Checks chi1 c_n <= c <= chi2 c_n and 0 < c < 1/beta cellwise.
BoundsReport check_bounds(std::span<const double> c_n, std::span<const double> c, double delta1,
                          double delta2, double beta);

/// Discrete total free energy: fluid free energy, p^2/(2N) storage and the
/// DG elastic energy.
double energy_discrete(const Mesh& mesh, const DiscreteState& s, const SolverConfig& cfg);

/// sum_K phi_K c_K |K|.
double total_moles(const Mesh& mesh, const DiscreteState& s);

/// Fills the state-dependent diagnostic fields (energy, moles, extrema).
void fill_diagnostics(const Mesh& mesh, const DiscreteState& s, const SolverConfig& cfg,
                      StepDiagnostics& d);

/// Time stepper bound to one mesh and parameter set. Holds the factorized
/// elasticity operator, which does not change between steps.
class Stepper {
public:
    /// `kappa0` is the per-cell reference permeability (empty: rock.kappa0 everywhere).
    Stepper(const Mesh& mesh, SolverConfig cfg, std::vector<double> kappa0 = {},
            std::optional<DirichletData> dirichlet = std::nullopt);

    const Mesh& mesh() const { return *mesh_; }
    const SolverConfig& config() const { return cfg_; }
    const std::vector<double>& kappa0() const { return kappa0_; }
    const DirichletData* dirichlet() const { return dirichlet_ ? &*dirichlet_ : nullptr; }

    /// p = p(c), u_s from the elasticity solve, u_f = 0, t = 0.
    DiscreteState initial_state(ScalarCellField c0, ScalarCellField phi0) const;

    /// One accepted time step with step size at most min(tau_max, tau_cap).
    /// Retries with a halved cap on StepFailure, up to cfg.max_retries times.
    std::pair<DiscreteState, StepDiagnostics> advance(const DiscreteState& s, double tau_cap) const;
    std::pair<DiscreteState, StepDiagnostics> advance(const DiscreteState& s) const;

private:
    std::pair<DiscreteState, StepDiagnostics> attempt(const DiscreteState& s, double tau_cap) const;

    const Mesh* mesh_;
    SolverConfig cfg_;
    std::vector<double> kappa0_;
    std::optional<DirichletData> dirichlet_;
    ElasticitySolver elasticity_;
};

/// Convenience wrapper for Stepper::advance.
std::pair<DiscreteState, StepDiagnostics> picard_advance(const Stepper& stepper, const DiscreteState& s);

}  // namespace porogas
