// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include "porogas/app.hpp"
#include "porogas/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

using namespace porogas;
namespace fs = std::filesystem;

namespace {

// Tolerances for the acceptance criteria.
constexpr double kIdentityTol = 1e-10;
constexpr double kFdTol = 1e-6;
constexpr double kEnergySlack = 1e-8;
constexpr double kMassDriftTol = 1e-8;
constexpr double kOracleTol = 1e-12;
constexpr double kTemporalSlopeLo = 0.9, kTemporalSlopeHi = 2.0;
constexpr double kSpatialSlopeLo = 0.8, kSpatialSlopeHi = 1.3;
constexpr int kIterationCap = 10;
constexpr int kIterationSpread = 2;
constexpr int kPresetSteps = 100;

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
    std::printf("criterion %2d %s: %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// ------------------------------------------------------------------ 1

void eos_identities() {
    const auto t0 = std::chrono::steady_clock::now();
    const FluidEos e = build_preset("example2").solver.eos;
    std::mt19937_64 g(2024);
    std::uniform_real_distribution<double> U(1e-6, 0.9);
    double worst_id = 0.0, worst_fd = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double c = U(g) / e.beta;
        worst_id = std::max(worst_id, rel(pressure_peng(e, c), c * chemical_potential(e, c) - helmholtz_f(e, c)));
        const double h = 1e-4 * c;
        const double fd = (helmholtz_f(e, c + h) - helmholtz_f(e, c - h)) / (2.0 * h);
        worst_fd = std::max(worst_fd, rel(fd, chemical_potential(e, c)));
    }
    const double dt = seconds_since(t0);
    report(1, worst_id <= kIdentityTol && worst_fd <= kFdTol && dt < 1.0,
           fmt("1000 samples, max rel |p - (c mu - f)| = %.3g, max rel |mu - FD| = %.3g, %.3f s", worst_id,
               worst_fd, dt));
}

// ------------------------------------------------------------------ 2, 3, 4

struct PresetRun {
    std::string name;
    int steps = 0;
    bool bounds_ok = true;
    double worst_lower = 1e300, worst_upper = 1e300;
    double worst_energy_rise = -1e300;  // max (E_{n+1} - E_n) / |E_n|
    double worst_raw_energy_rise = -1e300;
    double mass_drift = 0.0;
    bool closed = true;
    double seconds = 0.0;
    std::string error;
};

PresetRun run_preset(const std::string& name, int steps) {
    PresetRun r;
    r.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const RunConfig cfg = build_preset(name);
        Simulation sim = build_simulation(cfg);
        const Mesh& mesh = *sim.mesh;
        const SolverConfig& sc = sim.stepper->config();
        r.closed = !cfg.dirichlet_left.has_value();
        // open boundary: dissipation of the free energy relative to the reservoir
        const double mu_res = r.closed ? 0.0 : chemical_potential(sc.eos, *cfg.dirichlet_left);
        auto functional = [&](double energy, double moles) { return energy - mu_res * moles; };
        StepDiagnostics prev;
        fill_diagnostics(mesh, sim.state, sc, prev);
        const double moles0 = prev.total_moles;
        for (int n = 0; n < steps; ++n) {
            auto [next, d] = sim.stepper->advance(sim.state);
            const BoundsReport b = check_bounds(sim.state.c, next.c, sc.delta1, sc.delta2, sc.eos.beta);
            r.bounds_ok = r.bounds_ok && b.ok;
            r.worst_lower = std::min(r.worst_lower, b.lower_margin);
            r.worst_upper = std::min(r.worst_upper, b.upper_margin);
            const double f0 = functional(prev.energy, prev.total_moles), f1 = functional(d.energy, d.total_moles);
            r.worst_energy_rise = std::max(r.worst_energy_rise, (f1 - f0) / std::abs(f0));
            r.worst_raw_energy_rise = std::max(r.worst_raw_energy_rise, (d.energy - prev.energy) / std::abs(prev.energy));
            r.mass_drift = std::max(r.mass_drift, std::abs(d.total_moles - moles0) / moles0);
            sim.state = std::move(next);
            prev = d;
            ++r.steps;
        }
    } catch (const std::exception& ex) {
        r.error = ex.what();
    }
    r.seconds = seconds_since(t0);
    std::printf("  %s: %d steps in %.1f s%s%s\n", name.c_str(), r.steps, r.seconds, r.error.empty() ? "" : ", error: ",
                r.error.c_str());
    return r;
}

void presets() {
    std::vector<PresetRun> runs;
    for (const char* name : {"example2", "example3", "example4_2d"}) runs.push_back(run_preset(name, kPresetSteps));
    const RunConfig e1 = build_preset("example1");
    runs.push_back(run_preset("example1", e1.max_steps));

    bool ok2 = true;
    std::string d2;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& r = runs[i];
        ok2 = ok2 && r.error.empty() && r.steps >= kPresetSteps && r.bounds_ok;
        d2 += fmt("%s %d steps, min margins %.3g/%.3g; ", r.name.c_str(), r.steps, r.worst_lower, r.worst_upper);
    }
    report(2, ok2, d2 + "two-sided bound and 0 < c < 1/beta at every step");

    bool ok3 = true;
    std::string d3;
    for (const auto& r : runs) {
        ok3 = ok3 && r.error.empty() && r.worst_energy_rise <= kEnergySlack;
        if (r.closed)
            d3 += fmt("%s max rel dE %.3g; ", r.name.c_str(), r.worst_energy_rise);
        else
            d3 += fmt("%s (open boundary) max rel d(E - mu_b N) %.3g, raw E rises by inflow up to %.3g; ",
                      r.name.c_str(), r.worst_energy_rise, r.worst_raw_energy_rise);
    }
    report(3, ok3, d3 + fmt("100-step example2 on 20000 cells took %.1f s", runs[0].seconds));

    bool ok4 = true;
    std::string d4;
    for (const auto& r : runs) {
        if (!r.closed) continue;
        ok4 = ok4 && r.error.empty() && r.mass_drift <= kMassDriftTol;
        d4 += fmt("%s drift %.3g; ", r.name.c_str(), r.mass_drift);
    }
    report(4, ok4, d4 + "closed presets");
}

// ------------------------------------------------------------------ 5, 6

bool monotone(const StudyResult& r) {
    for (std::size_t i = 1; i < r.rows.size(); ++i)
        if (!(r.rows[i].error < r.rows[i - 1].error)) return false;
    return true;
}

std::string errors_of(const StudyResult& r) {
    std::string s;
    for (const auto& row : r.rows) s += fmt("%.3g ", row.error);
    return s;
}

void convergence() {
    const RunConfig cfg = build_preset("example1");
    std::ostringstream log;
    try {
        const auto t0 = std::chrono::steady_clock::now();
        const StudyResult t = temporal_study(cfg, log);
        const bool ok = monotone(t) && t.fitted_slope >= kTemporalSlopeLo && t.fitted_slope <= kTemporalSlopeHi;
        report(5, ok, fmt("errors %sslope %.3f, %.0f s", errors_of(t).c_str(), t.fitted_slope, seconds_since(t0)));
    } catch (const std::exception& ex) {
        report(5, false, ex.what());
    }
    try {
        const auto t0 = std::chrono::steady_clock::now();
        const StudyResult s = spatial_study(cfg, log);
        const bool ok = monotone(s) && s.fitted_slope >= kSpatialSlopeLo && s.fitted_slope <= kSpatialSlopeHi;
        report(6, ok, fmt("errors %sslope %.3f, %.0f s", errors_of(s).c_str(), s.fitted_slope, seconds_since(t0)));
    } catch (const std::exception& ex) {
        report(6, false, ex.what());
    }
}

// ------------------------------------------------------------------ 7

void iteration_counts() {
    int lo = 1 << 30, hi = 0, worst = 0;
    std::string d;
    try {
        for (double tau : {1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4}) {
            RunConfig cfg = build_preset("example2");
            cfg.solver.tau_max = tau;
            Simulation sim = build_simulation(cfg);
            int most = 0;
            for (int n = 0; n < 5; ++n) {
                auto [s, diag] = sim.stepper->advance(sim.state);
                most = std::max(most, diag.iterations);
                sim.state = std::move(s);
            }
            lo = std::min(lo, most);
            hi = std::max(hi, most);
            worst = std::max(worst, most);
            d += fmt("tau %.4g: %d; ", tau, most);
        }
    } catch (const std::exception& ex) {
        report(7, false, ex.what());
        return;
    }
    report(7, worst <= kIterationCap && hi - lo <= kIterationSpread,
           d + fmt("max iterations per step over 5 steps, spread %d", hi - lo));
}

// ------------------------------------------------------------------ 8

struct ContractionResult {
    bool ok = true;
    int ratios = 0;
    double worst = 0.0;
};

ContractionResult contraction_on(RunConfig cfg, int steps) {
    ContractionResult r;
    Simulation sim = build_simulation(cfg);
    for (int n = 0; n < steps; ++n) {
        auto [s, d] = sim.stepper->advance(sim.state);
        for (std::size_t l = 2; l < d.iterate_diffs.size(); ++l) {
            if (d.iterate_diffs[l - 1] == 0.0) continue;
            const double q = d.iterate_diffs[l] / d.iterate_diffs[l - 1];
            r.worst = std::max(r.worst, q);
            r.ok = r.ok && q < 1.0;
            ++r.ratios;
        }
        r.ok = r.ok && d.contraction_ratio < 1.0;
        sim.state = std::move(s);
    }
    return r;
}

void contraction() {
    try {
        RunConfig two = build_preset("example1");
        two.nx = two.ny = 1;
        two.c0 = {RandomFieldSpec::Kind::uniform_random, 100.0, 300.0};
        RunConfig ten = build_preset("example4_2d");
        ten.nx = ten.ny = 10;
        ten.Lx = ten.Ly = 10.0;
        ten.solver.tau_max = 10.0;
        const ContractionResult a = contraction_on(two, 10), b = contraction_on(ten, 10);
        report(8, a.ok && b.ok && a.ratios > 0 && b.ratios > 0,
               fmt("2-cell: %d ratios, max %.3g; 10x10: %d ratios, max %.3g", a.ratios, a.worst, b.ratios, b.worst));
    } catch (const std::exception& ex) {
        report(8, false, ex.what());
    }
}

// ------------------------------------------------------------------ 9

void oracles() {
    const SolverConfig sc = [] {
        SolverConfig c = build_preset("example4_2d").solver;
        c.sigma1 = 3e-3;
        c.sigma2 = default_sigma2(c.rock);
        c.tau_max = 1e3;
        return c;
    }();
    const FluidEos& eos = sc.eos;
    const Mesh m = generate_structured(1, 1, 2.0, 3.0);
    const int e = m.interior_edges().front();
    const Edge& ed = m.edge(e);
    const int i = ed.cell_i, j = ed.cell_j;
    std::vector<double> c_n(2), phi_n{0.2, 0.25}, phi_l{0.205, 0.245}, mu(2);
    c_n[i] = 260.0;
    c_n[j] = 140.0;
    for (int k = 0; k < 2; ++k) mu[k] = chemical_potential(eos, c_n[k]);
    FaceFluxField u(m.num_edges());
    u.flux[e] = 1.5e-6;
    const std::vector<double> cs = upwind_traces(m, c_n, u);
    double worst = 0.0;

    // transport matrix and right-hand side
    TransportInputs in;
    in.c_n = c_n;
    in.phi_n = phi_n;
    in.phi_iter = phi_l;
    in.u_f = &u;
    in.c_star = cs;
    in.mu_n = mu;
    in.theta = 1.07;
    in.tau = 40.0;
    in.sigma1 = sc.sigma1;
    in.eos = &eos;
    const SparseSystem sys = assemble_transport(m, in);
    const double RT = eos.RT(), beta = eos.beta;
    const double G = sc.sigma1 * ed.length / ed.length;
    auto w = [&](int k) { return 1.0 / (c_n[k] * (1.0 - beta * c_n[k]) * (1.0 - beta * c_n[k])); };
    auto a = [&](int k) { return 1.0 / ((1.0 - beta * c_n[k]) * (1.0 - beta * c_n[k])); };
    const double F = u.flux[e] * c_n[i];
    const double th = in.theta, tau = in.tau;
    worst = std::max(worst, rel(sys.matrix.at(i, i), phi_l[i] * m.area(i) / tau + G * th * RT * w(i)));
    worst = std::max(worst, rel(sys.matrix.at(j, j), phi_l[j] * m.area(j) / tau + G * th * RT * w(j)));
    worst = std::max(worst, rel(sys.matrix.at(i, j), -G * th * RT * w(j)));
    worst = std::max(worst, rel(sys.matrix.at(j, i), -G * th * RT * w(i)));
    const double jump = -G * (mu[i] - mu[j]) + G * th * RT * (a(i) - a(j));
    worst = std::max(worst, rel(sys.rhs[i], phi_n[i] * c_n[i] * m.area(i) / tau - F + jump));
    worst = std::max(worst, rel(sys.rhs[j], phi_n[j] * c_n[j] * m.area(j) / tau + F - jump));

    // time-step candidates: i loses mass through the flux and the mu jump, j gains
    const TauInputs ti{c_n, phi_n, phi_l, &u, cs, mu, nullptr};
    const TauCandidates tc = tau_candidates(m, ti, sc);
    auto s2 = [&](int k) { return (1.0 - beta * c_n[k]) * (1.0 - beta * c_n[k]); };
    const double out = c_n[i] * u.flux[e] + G * (mu[i] - mu[j]) + sc.eps_guard;
    const double tau1_i = (phi_l[i] * c_n[i] * s2(i) * sc.delta1 - (phi_l[i] - phi_n[i]) * c_n[i]) * m.area(i) / out;
    const double tau2_j = (phi_l[j] * c_n[j] * s2(j) * sc.delta2 + (phi_l[j] - phi_n[j]) * c_n[j]) * m.area(j) / out;
    worst = std::max(worst, rel(tc.tau1[i], tau1_i));
    worst = std::max(worst, rel(tc.tau2[j], tau2_j));

    // porosity update with pressure change and a displacement jump
    CellLinearVectorField u0(2), u1(2);
    const double dx = 2e-4, dy = -1e-4;
    for (int k = 0; k < 2; ++k)
        for (int v = 0; v < 3; ++v) u1.at(k, v, 0) = 1e-5 * m.cell_vertex(k, v).x;
    for (int v = 0; v < 3; ++v) {
        u1.at(i, v, 0) += dx;
        u1.at(i, v, 1) += dy;
    }
    const std::vector<double> p0{1e6, 2e6}, p1{1.3e6, 2.1e6};
    const auto phi = porosity_update(m, phi_n, p0, p1, u0, u1, sc.rock);
    // unit normal of the diagonal pointing from i to j
    const Point d = m.centroid(j) - m.centroid(i);
    const Point t = m.vertex(ed.v[1]) - m.vertex(ed.v[0]);
    Point n{t.y, -t.x};
    if (dot(n, d) < 0.0) n = -1.0 * n;
    n = (1.0 / std::sqrt(dot(n, n))) * n;
    const double jump_flux = (dx * n.x + dy * n.y) * ed.length;
    for (int k = 0; k < 2; ++k) {
        const double want = phi_n[k] + (p1[k] - p0[k]) / sc.rock.N + sc.rock.alpha * 1e-5 -
                            sc.rock.alpha * 0.5 * jump_flux / m.area(k);
        worst = std::max(worst, rel(phi[k], want));
    }
    report(9, worst <= kOracleTol,
           fmt("2-cell transport system, tau1/tau2 candidates, porosity update: max rel deviation %.3g", worst));
}

// ------------------------------------------------------------------ 10

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void determinism() {
    try {
        RunConfig cfg = build_preset("example2");
        cfg.nx = cfg.ny = 20;
        cfg.Lx = cfg.Ly = 20.0;
        cfg.max_steps = 10;
        cfg.snapshot_every = 5;
        std::ostringstream log;
        std::string csv[2];
        for (int r = 0; r < 2; ++r) {
            const fs::path dir = fs::temp_directory_path() / ("porogas_acceptance_" + std::to_string(r));
            fs::remove_all(dir);
            cfg.out_dir = dir.string();
            run(cfg, log);
            csv[r] = slurp(dir / "diagnostics.csv");
            fs::remove_all(dir);
        }
        report(10, !csv[0].empty() && csv[0] == csv[1],
               fmt("two runs of a 20x20 example2 variant: diagnostics.csv %zu bytes, identical = %s", csv[0].size(),
                   csv[0] == csv[1] ? "yes" : "no"));
    } catch (const std::exception& ex) {
        report(10, false, ex.what());
    }
}

}  // namespace

int main() {
    eos_identities();
    presets();
    convergence();
    iteration_counts();
    contraction();
    oracles();
    determinism();
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
