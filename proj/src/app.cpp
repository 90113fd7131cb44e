#include "porogas/app.hpp"

#include "porogas/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace porogas {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string t; in >> t;) out.push_back(t);
    return out;
}

double unit_factor(const std::string& u) {
    if (u == "bar") return kBar;
    if (u == "md") return kMillidarcy;
    if (u == "Pa" || u == "m2" || u == "s" || u == "m") return 1.0;
    return 0.0;
}

double to_number(const std::string& t) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &pos);
    } catch (const std::exception&) {
        throw InvalidParameter("not a number: '" + t + "'");
    }
    if (pos != t.size()) {
        const double f = unit_factor(t.substr(pos));
        if (f == 0.0) throw InvalidParameter("unknown unit in '" + t + "'");
        v *= f;
    }
    return v;
}

// Reads numbers with optional separate unit tokens.
std::vector<double> parse_quantities(const std::vector<std::string>& tok, std::size_t first) {
    std::vector<double> out;
    for (std::size_t i = first; i < tok.size(); ++i) {
        double v = to_number(tok[i]);
        if (i + 1 < tok.size()) {
            const double f = unit_factor(tok[i + 1]);
            if (f != 0.0) {
                v *= f;
                ++i;
            }
        }
        out.push_back(v);
    }
    return out;
}

RandomFieldSpec parse_field(const std::string& text) {
    const auto tok = split_ws(text);
    if (tok.empty()) throw InvalidParameter("empty field specification");
    const auto q = parse_quantities(tok, 1);
    RandomFieldSpec f;
    auto need = [&](std::size_t lo, std::size_t hi) {
        if (q.size() < lo || q.size() > hi) throw InvalidParameter("wrong number of values in field '" + text + "'");
    };
    if (tok[0] == "constant") {
        need(1, 1);
        f.kind = RandomFieldSpec::Kind::constant;
        f.low = f.high = q[0];
    } else if (tok[0] == "uniform_random") {
        need(2, 2);
        f.kind = RandomFieldSpec::Kind::uniform_random;
        f.low = q[0];
        f.high = q[1];
    } else if (tok[0] == "value_noise") {
        need(2, 3);
        f.kind = RandomFieldSpec::Kind::value_noise;
        f.low = q[0];
        f.high = q[1];
        if (q.size() == 3) f.lattice = static_cast<int>(q[2]);
    } else if (tok[0] == "gaussian_bump") {
        need(3, 3);
        f.kind = RandomFieldSpec::Kind::gaussian_bump;
        f.low = q[0];
        f.high = q[1];
        f.width = q[2];
    } else {
        throw InvalidParameter("unknown field kind '" + tok[0] + "'");
    }
    validate(f);
    return f;
}

FluidEos methane() { return eos_from_critical(190.56, 45.99 * kBar, 0.011, 330.0); }

RockProps base_rock() {
    RockProps r;
    r.alpha = 0.4;
    r.N = 1e11;
    r.lame_mu = 1e8;
    r.lame_lambda = 1e11;
    r.phi_ref = 0.2;
    r.kappa0 = 1.0 * kMillidarcy;
    r.visc = 1e-5;
    return r;
}

RunConfig field_scale_preset(const std::string& name) {
    RunConfig c;
    c.name = name;
    c.nx = c.ny = 100;
    c.Lx = c.Ly = 100.0;
    c.solver.eos = methane();
    c.solver.rock = base_rock();
    c.solver.tau_max = 1000.0;
    c.c0 = {RandomFieldSpec::Kind::uniform_random, 100.0, 300.0};
    c.phi0 = {RandomFieldSpec::Kind::constant, 0.2, 0.2};
    c.kappa0 = {RandomFieldSpec::Kind::uniform_random, 0.5 * kMillidarcy, 10.0 * kMillidarcy};
    c.t_end = 1e7;
    c.max_steps = 100;
    c.snapshot_every = 10;
    c.out_dir = "out_" + name;
    return c;
}

}  // namespace

double parse_quantity(const std::string& text) {
    const auto tok = split_ws(text);
    const auto q = parse_quantities(tok, 0);
    if (q.size() != 1) throw InvalidParameter("expected one quantity, got '" + text + "'");
    return q[0];
}

void validate(const RandomFieldSpec& spec) {
    if (!std::isfinite(spec.low) || !std::isfinite(spec.high)) throw InvalidParameter("field bounds must be finite");
    if (spec.kind != RandomFieldSpec::Kind::constant && !(spec.low < spec.high)) {
        throw InvalidParameter("field bounds require low < high");
    }
    if (spec.kind == RandomFieldSpec::Kind::value_noise && spec.lattice < 1) throw InvalidParameter("lattice must be >= 1");
    if (spec.kind == RandomFieldSpec::Kind::gaussian_bump && !(spec.width > 0.0)) throw InvalidParameter("width must be > 0");
}

void validate(const RunConfig& cfg) {
    if (cfg.nx < 1 || cfg.ny < 1) throw InvalidParameter("nx and ny must be >= 1");
    if (!(cfg.Lx > 0.0) || !(cfg.Ly > 0.0)) throw InvalidParameter("Lx and Ly must be positive");
    if (cfg.snapshot_every < 1) throw InvalidParameter("snapshot_every must be >= 1");
    if (cfg.max_steps < 0) throw InvalidParameter("max_steps must be >= 0");
    if (!(cfg.t_end >= 0.0)) throw InvalidParameter("t_end must be >= 0");
    validate(cfg.c0);
    validate(cfg.phi0);
    validate(cfg.kappa0);
}

RunConfig build_preset(const std::string& name) {
    if (name == "example1") {
        RunConfig c;
        c.name = name;
        c.nx = c.ny = 50;
        c.Lx = c.Ly = 1.0;
        c.solver.eos = methane();
        c.solver.rock = base_rock();
        c.solver.delta1 = c.solver.delta2 = 0.5;
        c.solver.tau_max = 9.75e-5;
        c.c0 = {RandomFieldSpec::Kind::gaussian_bump, 150.0, 250.0, 8, 0.15};
        c.phi0 = {RandomFieldSpec::Kind::constant, 0.2, 0.2};
        c.kappa0 = {RandomFieldSpec::Kind::constant, 1e-11, 1e-11};
        c.t_end = 9.75e-4;
        c.max_steps = 10;
        c.snapshot_every = 1;
        c.out_dir = "out_example1";
        RefinementPlan p;
        p.taus = {9.75e-5, 4.875e-5, 2.4375e-5, 1.21875e-5, 6.09375e-6};
        p.tau_ref = 9.75e-5 / 64.0;
        p.meshes = {10, 20, 40, 80};
        p.mesh_ref = 160;
        p.spatial_tau = 1e-2;
        p.spatial_t_end = 1e-1;
        p.spatial_kappa0 = 3e-14;
        c.plan = p;
        return c;
    }
    if (name == "example2") {
        RunConfig c = field_scale_preset(name);
        c.solver.delta1 = c.solver.delta2 = 0.2;
        c.kappa0 = {RandomFieldSpec::Kind::value_noise, 0.5 * kMillidarcy, 10.0 * kMillidarcy, 8};
        return c;
    }
    if (name == "example3") {
        RunConfig c = field_scale_preset(name);
        c.solver.delta1 = c.solver.delta2 = 0.8;
        c.c0 = {RandomFieldSpec::Kind::constant, 100.0, 100.0};
        c.phi0 = {RandomFieldSpec::Kind::uniform_random, 0.1, 0.3};
        c.dirichlet_left = 1000.0;
        return c;
    }
    if (name == "example4_2d") {
        RunConfig c = field_scale_preset(name);
        c.solver.delta1 = c.solver.delta2 = 0.5;
        return c;
    }
    throw InvalidParameter("unknown preset '" + name + "'");
}

RunConfig parse_config(std::istream& in) {
    RunConfig c;
    bool have_content = false;
    int lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InvalidParameter("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        auto num = [&] { return parse_quantity(val); };
        auto integer = [&] {
            const double v = num();
            if (v != std::floor(v)) throw InvalidParameter("line " + std::to_string(lineno) + ": expected an integer");
            return static_cast<int>(v);
        };
        try {
            SolverConfig& s = c.solver;
            if (key == "preset") {
                if (have_content) throw InvalidParameter("preset must be the first entry");
                c = build_preset(val);
            } else if (key == "nx") c.nx = integer();
            else if (key == "ny") c.ny = integer();
            else if (key == "Lx") c.Lx = num();
            else if (key == "Ly") c.Ly = num();
            else if (key == "delta") s.delta1 = s.delta2 = num();
            else if (key == "delta1") s.delta1 = num();
            else if (key == "delta2") s.delta2 = num();
            else if (key == "sigma1") s.sigma1 = num();
            else if (key == "sigma2") s.sigma2 = num();
            else if (key == "tau_max") s.tau_max = num();
            else if (key == "eps_guard") s.eps_guard = num();
            else if (key == "picard_tol") s.picard_tol = num();
            else if (key == "picard_max") s.picard_max = integer();
            else if (key == "max_retries") s.max_retries = integer();
            else if (key == "energy_penalty_uses_sigma1") s.energy_penalty_uses_sigma1 = integer() != 0;
            else if (key == "Tc") s.eos = eos_from_critical(num(), s.eos.Pc, s.eos.omega, s.eos.T);
            else if (key == "Pc") s.eos = eos_from_critical(s.eos.Tc, num(), s.eos.omega, s.eos.T);
            else if (key == "omega") s.eos = eos_from_critical(s.eos.Tc, s.eos.Pc, num(), s.eos.T);
            else if (key == "T") s.eos = eos_from_critical(s.eos.Tc, s.eos.Pc, s.eos.omega, num());
            else if (key == "alpha") s.rock.alpha = num();
            else if (key == "N") s.rock.N = num();
            else if (key == "lame_mu") s.rock.lame_mu = num();
            else if (key == "lame_lambda") s.rock.lame_lambda = num();
            else if (key == "phi_ref") s.rock.phi_ref = num();
            else if (key == "visc") s.rock.visc = num();
            else if (key == "c0") c.c0 = parse_field(val);
            else if (key == "phi0") c.phi0 = parse_field(val);
            else if (key == "kappa0") c.kappa0 = parse_field(val);
            else if (key == "dirichlet_left") c.dirichlet_left = num();
            else if (key == "seed") c.seed = std::stoull(val);
            else if (key == "t_end") c.t_end = num();
            else if (key == "max_steps") c.max_steps = integer();
            else if (key == "snapshot_every") c.snapshot_every = integer();
            else if (key == "out_dir") c.out_dir = val;
            else if (key == "name") c.name = val;
            else throw InvalidParameter("unknown key '" + key + "'");
        } catch (const InvalidParameter& e) {
            throw InvalidParameter("line " + std::to_string(lineno) + ": " + e.what());
        }
        have_content = true;
    }
    if (!have_content) throw InvalidParameter("empty configuration");
    if (c.solver.eos.T == 0.0) c.solver.eos = methane();
    validate(c);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParameter("cannot open config '" + path + "'");
    return parse_config(in);
}

// ----------------------------------------------------------------- fields

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

std::vector<double> generate_field(const Mesh& mesh, const RandomFieldSpec& spec, std::uint64_t seed,
                                   std::uint64_t stream) {
    validate(spec);
    const int nc = static_cast<int>(mesh.num_cells());
    std::vector<double> v(nc, spec.low);
    Point lo{1e300, 1e300}, hi{-1e300, -1e300};
    for (const Point& p : mesh.vertices()) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    switch (spec.kind) {
    case RandomFieldSpec::Kind::constant:
        break;
    case RandomFieldSpec::Kind::uniform_random: {
        auto rng = make_rng(seed, stream);
        for (double& x : v) x = spec.low + uniform01(rng) * (spec.high - spec.low);
        break;
    }
    case RandomFieldSpec::Kind::value_noise: {
        auto rng = make_rng(seed, stream);
        const int L = spec.lattice;
        std::vector<double> node((L + 1) * (L + 1));
        for (double& x : node) x = uniform01(rng);
        auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };
        for (int k = 0; k < nc; ++k) {
            const Point c = mesh.centroid(k);
            const double u = (c.x - lo.x) / (hi.x - lo.x) * L;
            const double w = (c.y - lo.y) / (hi.y - lo.y) * L;
            const int i = std::min(static_cast<int>(u), L - 1);
            const int j = std::min(static_cast<int>(w), L - 1);
            const double s = smooth(u - i), t = smooth(w - j);
            auto n = [&](int a, int b) { return node[b * (L + 1) + a]; };
            v[k] = (1 - s) * (1 - t) * n(i, j) + s * (1 - t) * n(i + 1, j) + (1 - s) * t * n(i, j + 1) +
                   s * t * n(i + 1, j + 1);
        }
        const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
        const double a = *mn, b = *mx;
        for (double& x : v) x = b > a ? spec.low + (x - a) / (b - a) * (spec.high - spec.low) : spec.low;
        break;
    }
    case RandomFieldSpec::Kind::gaussian_bump: {
        const Point ctr = 0.5 * (lo + hi);
        for (int k = 0; k < nc; ++k) {
            const Point d = mesh.centroid(k) - ctr;
            v[k] = spec.low + (spec.high - spec.low) * std::exp(-dot(d, d) / (2.0 * spec.width * spec.width));
        }
        break;
    }
    }
    return v;
}

double default_sigma1(double peak_mobility, double c_ref) { return 10.0 * peak_mobility * c_ref * c_ref; }

double default_sigma2(const RockProps& rock) { return 10.0 * (2.0 * rock.lame_mu + 2.0 * rock.lame_lambda); }

Simulation build_simulation(const RunConfig& cfg) {
    validate(cfg);
    Simulation sim;
    sim.mesh = std::make_unique<Mesh>(generate_structured(cfg.nx, cfg.ny, cfg.Lx, cfg.Ly));
    const Mesh& mesh = *sim.mesh;
    std::vector<double> c0 = generate_field(mesh, cfg.c0, cfg.seed, 1);
    std::vector<double> phi0 = generate_field(mesh, cfg.phi0, cfg.seed, 2);
    std::vector<double> kappa = generate_field(mesh, cfg.kappa0, cfg.seed, 3);

    SolverConfig sc = cfg.solver;
    const double area = mesh.total_area();
    double c_ref = 0.0;
    for (int k = 0; k < static_cast<int>(mesh.num_cells()); ++k) c_ref += c0[k] * mesh.area(k) / area;
    if (cfg.dirichlet_left) c_ref = std::max(c_ref, *cfg.dirichlet_left);
    sc.rock.kappa0 = std::accumulate(kappa.begin(), kappa.end(), 0.0) / static_cast<double>(kappa.size());
    if (!(sc.sigma1 > 0.0)) {
        double peak = 0.0;
        for (std::size_t k = 0; k < kappa.size(); ++k) peak = std::max(peak, mobility(sc.rock, phi0[k], kappa[k]));
        sc.sigma1 = default_sigma1(peak, c_ref);
    }
    if (!(sc.sigma2 > 0.0)) sc.sigma2 = default_sigma2(sc.rock);

    std::optional<DirichletData> dd;
    if (cfg.dirichlet_left) {
        DirichletData d;
        d.value = *cfg.dirichlet_left;
        const double tol = 1e-12 * cfg.Lx;
        for (int e : mesh.boundary_edges()) {
            const Edge& ed = mesh.edge(e);
            if (std::abs(mesh.vertex(ed.v[0]).x) < tol && std::abs(mesh.vertex(ed.v[1]).x) < tol) d.edges.push_back(e);
        }
        dd = std::move(d);
    }
    sim.stepper = std::make_unique<Stepper>(mesh, sc, std::move(kappa), std::move(dd));
    sim.state = sim.stepper->initial_state(std::move(c0), std::move(phi0));
    return sim;
}

// ----------------------------------------------------------------- output

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_diagnostics_header(std::ostream& out) {
    out << "step,t,tau,theta,iterations,energy,total_moles,c_min,c_max,contraction_ratio\n";
}

void write_diagnostics_row(std::ostream& out, int step, double t, const StepDiagnostics& d) {
    out << step << ',' << fmt(t) << ',' << fmt(d.tau) << ',' << fmt(d.theta) << ',' << d.iterations << ','
        << fmt(d.energy) << ',' << fmt(d.total_moles) << ',' << fmt(d.c_min) << ',' << fmt(d.c_max) << ','
        << fmt(d.contraction_ratio) << '\n';
}

void write_vtk(std::ostream& out, const Mesh& mesh, const DiscreteState& s) {
    const std::size_t nc = mesh.num_cells();
    out << "# vtk DataFile Version 3.0\nporogas t=" << fmt(s.t) << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.num_vertices() << " double\n";
    for (const Point& p : mesh.vertices()) out << fmt(p.x) << ' ' << fmt(p.y) << " 0\n";
    out << "CELLS " << nc << ' ' << 4 * nc << '\n';
    for (const auto& c : mesh.cells()) out << "3 " << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
    out << "CELL_TYPES " << nc << '\n';
    for (std::size_t k = 0; k < nc; ++k) out << "5\n";
    out << "CELL_DATA " << nc << '\n';
    const std::pair<const char*, const ScalarCellField*> arrays[] = {{"c", &s.c}, {"phi", &s.phi}, {"p", &s.p}};
    for (const auto& [name, field] : arrays) {
        out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (double v : *field) out << fmt(v) << '\n';
    }
    out << "VECTORS u_s double\n";
    for (std::size_t k = 0; k < nc; ++k) {
        const Point u = evaluate(mesh, s.u_s, static_cast<int>(k), mesh.centroid(static_cast<int>(k)));
        out << fmt(u.x) << ' ' << fmt(u.y) << " 0\n";
    }
}

void write_vtk_file(const std::string& path, const Mesh& mesh, const DiscreteState& s) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    write_vtk(out, mesh, s);
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

VtkData read_vtk(std::istream& in) {
    VtkData d;
    std::string line;
    for (int i = 0; i < 4; ++i) {
        if (!std::getline(in, line)) throw InvalidParameter("vtk: truncated header");
    }
    std::string tok;
    std::size_t ncell = 0;
    while (in >> tok) {
        if (tok == "POINTS") {
            std::size_t n;
            in >> n >> tok;
            d.points.resize(n);
            double z;
            for (auto& p : d.points) in >> p.x >> p.y >> z;
        } else if (tok == "CELLS") {
            std::size_t n, total;
            in >> n >> total;
            d.cells.resize(n);
            int three;
            for (auto& c : d.cells) in >> three >> c[0] >> c[1] >> c[2];
        } else if (tok == "CELL_TYPES") {
            std::size_t n;
            in >> n;
            int t;
            for (std::size_t i = 0; i < n; ++i) in >> t;
        } else if (tok == "CELL_DATA") {
            in >> ncell;
        } else if (tok == "SCALARS") {
            std::string name, type, lut, def;
            int ncomp;
            in >> name >> type >> ncomp >> lut >> def;
            auto& v = d.scalars[name];
            v.resize(ncell);
            for (double& x : v) in >> x;
        } else if (tok == "VECTORS") {
            std::string name, type;
            in >> name >> type;
            auto& v = d.vectors[name];
            v.resize(ncell);
            double z;
            for (auto& p : v) in >> p.x >> p.y >> z;
        } else {
            throw InvalidParameter("vtk: unexpected token '" + tok + "'");
        }
        if (!in) throw InvalidParameter("vtk: malformed section " + tok);
    }
    return d;
}

// ------------------------------------------------------------------- runs

RunSummary run(const RunConfig& cfg, std::ostream& log, bool write_files) {
    Simulation sim = build_simulation(cfg);
    const Mesh& mesh = *sim.mesh;
    const Stepper& stepper = *sim.stepper;
    namespace fs = std::filesystem;

    std::ofstream csv;
    auto snapshot = [&](int step) {
        if (!write_files) return;
        char name[32];
        std::snprintf(name, sizeof name, "snap_%06d.vtk", step);
        write_vtk_file((fs::path(cfg.out_dir) / name).string(), mesh, sim.state);
    };
    if (write_files) {
        fs::create_directories(cfg.out_dir);
        csv.open(fs::path(cfg.out_dir) / "diagnostics.csv");
        if (!csv) throw std::runtime_error("cannot write diagnostics in '" + cfg.out_dir + "'");
        write_diagnostics_header(csv);
    }

    RunSummary summary;
    StepDiagnostics d0;
    d0.theta = compute_theta(stepper.config().eos, sim.state.c, stepper.config().delta1, stepper.config().delta2);
    fill_diagnostics(mesh, sim.state, stepper.config(), d0);
    summary.diagnostics.push_back(d0);
    if (write_files) write_diagnostics_row(csv, 0, sim.state.t, d0);
    snapshot(0);
    log << "mesh " << cfg.nx << "x" << cfg.ny << " (" << mesh.num_cells() << " cells), sigma1 = "
        << stepper.config().sigma1 << ", sigma2 = " << stepper.config().sigma2 << '\n';

    int step = 0;
    while (step < cfg.max_steps && sim.state.t < cfg.t_end * (1.0 - 1e-12)) {
        auto [next, d] = stepper.advance(sim.state, cfg.t_end - sim.state.t);
        sim.state = std::move(next);
        ++step;
        if (write_files) {
            write_diagnostics_row(csv, step, sim.state.t, d);
            csv.flush();
        }
        if (step % cfg.snapshot_every == 0) snapshot(step);
        log << "step " << step << " t = " << sim.state.t << " tau = " << d.tau << " iters = " << d.iterations
            << " E = " << fmt(d.energy) << '\n';
        summary.diagnostics.push_back(std::move(d));
    }
    if (step % cfg.snapshot_every != 0) snapshot(step);
    summary.steps = step;
    summary.t = sim.state.t;
    return summary;
}

std::vector<double> run_fixed_steps(Simulation& sim, double tau, int steps) {
    for (int n = 0; n < steps; ++n) {
        auto [next, d] = sim.stepper->advance(sim.state, tau);
        if (d.tau != tau) {
            throw StepFailure("fixed-step run: step " + std::to_string(n) + " limited to tau = " + fmt(d.tau) +
                              " below the requested " + fmt(tau));
        }
        sim.state = std::move(next);
    }
    return sim.state.c;
}

double fitted_slope(const std::vector<StudyRow>& rows) {
    if (rows.size() < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(rows.size());
    for (const auto& r : rows) {
        const double x = std::log(r.size), y = std::log(r.error);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

int step_count(double t_end, double tau) {
    const double n = t_end / tau;
    const double r = std::round(n);
    if (std::abs(n - r) > 1e-9 * r || r < 1) throw InvalidParameter("t_end is not a whole number of steps of " + fmt(tau));
    return static_cast<int>(r);
}

void fill_rates(StudyResult& r) {
    for (std::size_t i = 0; i + 1 < r.rows.size(); ++i) {
        r.rows[i].rate = std::log2(r.rows[i].error / r.rows[i + 1].error) / std::log2(r.rows[i].size / r.rows[i + 1].size);
    }
    r.fitted_slope = fitted_slope(r.rows);
}

}  // namespace

StudyResult temporal_study(const RunConfig& cfg, std::ostream& log) {
    if (!cfg.plan || cfg.plan->taus.empty()) throw InvalidParameter("configuration has no temporal refinement plan");
    const RefinementPlan& plan = *cfg.plan;
    const Mesh mesh = generate_structured(cfg.nx, cfg.ny, cfg.Lx, cfg.Ly);
    auto solve = [&](double tau) {
        RunConfig c = cfg;
        c.solver.tau_max = tau;
        Simulation sim = build_simulation(c);
        const int n = step_count(cfg.t_end, tau);
        log << "temporal: tau = " << tau << " (" << n << " steps)\n";
        return run_fixed_steps(sim, tau, n);
    };
    const std::vector<double> ref = solve(plan.tau_ref);
    StudyResult r;
    for (double tau : plan.taus) {
        const std::vector<double> c = solve(tau);
        double e = 0.0;
        for (int k = 0; k < static_cast<int>(mesh.num_cells()); ++k) e += mesh.area(k) * (c[k] - ref[k]) * (c[k] - ref[k]);
        r.rows.push_back({tau, std::sqrt(e), 0.0});
    }
    fill_rates(r);
    return r;
}

StudyResult spatial_study(const RunConfig& cfg, std::ostream& log) {
    if (!cfg.plan || cfg.plan->meshes.empty()) throw InvalidParameter("configuration has no spatial refinement plan");
    const RefinementPlan& plan = *cfg.plan;
    RunConfig base = cfg;
    base.solver.tau_max = plan.spatial_tau;
    base.t_end = plan.spatial_t_end;
    base.kappa0 = {RandomFieldSpec::Kind::constant, plan.spatial_kappa0, plan.spatial_kappa0};
    const int n = step_count(base.t_end, plan.spatial_tau);
    auto solve = [&](int cells) {
        RunConfig c = base;
        c.nx = c.ny = cells;
        log << "spatial: " << cells << "x" << cells << " (" << n << " steps)\n";
        Simulation sim = build_simulation(c);
        run_fixed_steps(sim, plan.spatial_tau, n);
        return sim;
    };
    const Simulation ref = solve(plan.mesh_ref);
    const Mesh& fine = *ref.mesh;
    StudyResult r;
    for (int cells : plan.meshes) {
        const Simulation s = solve(cells);
        double e = 0.0;
        for (int k = 0; k < static_cast<int>(fine.num_cells()); ++k) {
            const int parent = s.mesh->locate(fine.centroid(k));
            if (parent < 0) throw TopologyError("spatial study: reference cell outside the coarse mesh");
            const double d = s.state.c[parent] - ref.state.c[k];
            e += fine.area(k) * d * d;
        }
        r.rows.push_back({cfg.Lx / cells, std::sqrt(e), 0.0});
    }
    fill_rates(r);
    return r;
}

void write_study(std::ostream& out, const StudyResult& r, const std::string& size_label) {
    out << size_label << ",l2_error,rate\n";
    for (const auto& row : r.rows) out << fmt(row.size) << ',' << fmt(row.error) << ',' << fmt(row.rate) << '\n';
    out << "# fitted_slope," << fmt(r.fitted_slope) << '\n';
}

}  // namespace porogas
