#pragma once

#include "porogas/mesh.hpp"
#include "porogas/step.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace porogas {

inline constexpr double kBar = 1.0e5;                 // Pa
inline constexpr double kMillidarcy = 9.869233e-16;   // m^2

/// Initial or material field description.
struct RandomFieldSpec {
    enum class Kind {
        constant,        ///< `low` everywhere
        uniform_random,  ///< independent per-cell draws in [low, high]
        value_noise,     ///< smooth lattice noise rescaled to span [low, high]
        gaussian_bump,   ///< low + (high - low) exp(-r^2 / (2 width^2)) around the domain centre
    };
    Kind kind = Kind::constant;
    double low = 0.0;
    double high = 0.0;
    int lattice = 8;       ///< value_noise lattice cells per side
    double width = 0.1;    ///< gaussian_bump width (m)
};

void validate(const RandomFieldSpec& spec);

/// Convergence-study ladders (used by the example1 preset).
struct RefinementPlan {
    std::vector<double> taus;
    double tau_ref = 0.0;
    std::vector<int> meshes;
    int mesh_ref = 0;
    double spatial_tau = 0.0;
    double spatial_t_end = 0.0;
    double spatial_kappa0 = 0.0;
};

struct RunConfig {
    std::string name = "custom";
    int nx = 10;
    int ny = 10;
    double Lx = 1.0;
    double Ly = 1.0;
    SolverConfig solver;
    RandomFieldSpec c0;
    RandomFieldSpec phi0;
    RandomFieldSpec kappa0;  ///< per-cell reference permeability (m^2)
    std::optional<double> dirichlet_left;  ///< prescribed density on x = 0
    std::uint64_t seed = 1;
    double t_end = 1.0;
    int max_steps = 100;
    std::string out_dir = "out";
    int snapshot_every = 10;
    std::optional<RefinementPlan> plan;
};

void validate(const RunConfig& cfg);

/// example1, example2, example3 or example4_2d. Throws InvalidParameter otherwise.
RunConfig build_preset(const std::string& name);

/// Flat `key = value` text with `#` comments. A `preset = NAME` line, if
/// present, must come first and seeds all other values.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

/// Parses "45.99 bar", "10 md", "3e6 Pa" or a bare SI number.
double parse_quantity(const std::string& text);

/// Uniform double in [0, 1) from the top 53 bits of one generator output.
double uniform01(std::mt19937_64& rng);

/// Generator for one named stream of a run: seeded from (seed, stream).
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream);

/// Evaluates a field spec at the cell centroids.
std::vector<double> generate_field(const Mesh& mesh, const RandomFieldSpec& spec, std::uint64_t seed,
                                   std::uint64_t stream);

/// Mesh, stepper and initial state for a run.
struct Simulation {
    std::unique_ptr<Mesh> mesh;
    std::unique_ptr<Stepper> stepper;
    DiscreteState state;
};

/// Builds the mesh and fields; fills sigma1/sigma2 defaults when they are <= 0.
/// The sigma1 reference density is the mean initial density, raised to the
/// boundary density when one is prescribed.
Simulation build_simulation(const RunConfig& cfg);

/// Default penalties: sigma1 = 10 max_K lambda_K c_ref^2 over the initial
/// cell mobilities, sigma2 = 10 (2 lame_mu + 2 lame_lambda).
double default_sigma1(double peak_mobility, double c_ref);
double default_sigma2(const RockProps& rock);

// ----------------------------------------------------------------- output

void write_diagnostics_header(std::ostream& out);
void write_diagnostics_row(std::ostream& out, int step, double t, const StepDiagnostics& d);

void write_vtk(std::ostream& out, const Mesh& mesh, const DiscreteState& s);
void write_vtk_file(const std::string& path, const Mesh& mesh, const DiscreteState& s);

struct VtkData {
    std::vector<Point> points;
    std::vector<std::array<int, 3>> cells;
    std::map<std::string, std::vector<double>> scalars;
    std::map<std::string, std::vector<Point>> vectors;
};
VtkData read_vtk(std::istream& in);

// ------------------------------------------------------------------- runs

struct RunSummary {
    int steps = 0;
    double t = 0.0;
    std::vector<StepDiagnostics> diagnostics;  ///< entry 0 describes the initial state
};

/// Time loop to t_end or max_steps. Writes diagnostics.csv and snapshots into
/// out_dir when `write_files` is set.
RunSummary run(const RunConfig& cfg, std::ostream& log, bool write_files = true);

/// Advances a simulation with a fixed step and returns the final density.
/// Throws StepFailure if the adaptive limit would cut any step below `tau`.
std::vector<double> run_fixed_steps(Simulation& sim, double tau, int steps);

struct StudyRow {
    double size = 0.0;   ///< tau or h
    double error = 0.0;  ///< area-weighted L2 error against the reference
    double rate = 0.0;   ///< log2 ratio to the next row (0 for the last)
};

struct StudyResult {
    std::vector<StudyRow> rows;
    double fitted_slope = 0.0;
};

/// Least-squares slope of log(error) against log(size).
double fitted_slope(const std::vector<StudyRow>& rows);

StudyResult temporal_study(const RunConfig& cfg, std::ostream& log);
StudyResult spatial_study(const RunConfig& cfg, std::ostream& log);

void write_study(std::ostream& out, const StudyResult& r, const std::string& size_label);

}  // namespace porogas
