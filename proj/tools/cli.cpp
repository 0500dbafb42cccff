#include "cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "msim/bench.hpp"
#include "msim/lattice.hpp"
#include "msim/modal.hpp"
#include "msim/scene_io.hpp"
#include "msim/simulate.hpp"
#include "msim/steer/server.hpp"
#include "msim/validation.hpp"

namespace msim::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public Error {
  using Error::Error;
};

const CLI::Validator kPositive(
    [](std::string& value) {
      double x = 0;
      if (!CLI::detail::lexical_cast(value, x) || !(x > 0)) return std::string("must be > 0, got ") + value;
      return std::string();
    },
    "> 0");

const std::vector<std::string> kIntegrators{"euler", "verlet", "rk4"};
const std::vector<std::string> kModes{"serial", "parallel", "parallel-det"};

void add_integrator(CLI::App& app, std::string& value) {
  app.add_option("--integrator", value, "euler, verlet or rk4")->check(CLI::IsMember(kIntegrators));
}

void add_exec(CLI::App& app, std::string& value) {
  app.add_option("--exec", value, "serial, parallel or parallel-det")->check(CLI::IsMember(kModes));
}

struct EngineFlags {
  std::string integrator = "verlet";
  std::string mode = "serial";
  int threads = 0;

  void add(CLI::App& app) {
    add_integrator(app, integrator);
    add_exec(app, mode);
    app.add_option("--threads", threads, "worker threads (default: $MSIM_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
  }

  EngineOptions options() const { return {*parse_integrator(integrator), *parse_exec_mode(mode), threads}; }
};

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void close_output(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

// generate ------------------------------------------------------------------

struct GenerateArgs {
  fs::path mesh, out;
  std::string mode = "voxel";
  std::optional<double> dim, cutoff, radius, node_mass, total_mass, density;
  std::uint64_t seed = 0;
  int candidates = 100;
  int nearest = 3;
  std::optional<std::size_t> target;
  double k0 = Material{}.base_stiffness;
  double l_ref = Material{}.reference_length;
  double dt = Scene{}.dt;
  double damping = 0;
  std::optional<double> gravity;
};

int generate(const GenerateArgs& a, std::ostream& out) {
  LatticeSpec spec;
  spec.mode = a.mode == "voxel" ? LatticeMode::Voxel : LatticeMode::BestCandidate;
  if (spec.mode == LatticeMode::Voxel) {
    if (!a.dim) throw UsageError("voxel mode needs --dim");
    spec.dim = *a.dim;
  } else {
    if (!a.cutoff) throw UsageError("random mode needs --cutoff");
    spec.cutoff = *a.cutoff;
  }
  spec.seed = a.seed;
  spec.candidates = a.candidates;
  spec.nearest = a.nearest;
  spec.connection_radius = a.radius;
  spec.target_count = a.target;
  try {
    check_lattice_spec(spec);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  Material material;
  material.base_stiffness = a.k0;
  material.reference_length = a.l_ref;
  if (a.node_mass || a.total_mass || a.density) {
    material.node_mass = a.node_mass;
    material.total_mass = a.total_mass;
    material.density = a.density;
  }

  Scene scene = build_lattice(load_obj(a.mesh), spec, material);
  scene.dt = a.dt;
  scene.damping = a.damping;
  if (a.gravity) scene.gravity = Vec3d(0, -*a.gravity, 0);
  validate_scene(scene);
  save_scene(a.out, scene);

  double shortest = std::numeric_limits<double>::infinity(), longest = 0;
  for (const auto& s : scene.springs) {
    shortest = std::min(shortest, s.rest_length);
    longest = std::max(longest, s.rest_length);
  }
  out << scene.masses.size() << " masses, " << scene.springs.size() << " springs";
  if (!scene.springs.empty()) out << ", spring length min " << shortest << " max " << longest;
  out << '\n';
  return kOk;
}

// simulate ------------------------------------------------------------------

struct SimulateArgs {
  fs::path scene, out;
  double duration = 0;
  std::optional<double> dt;
  std::vector<Index> traces;
  std::uint64_t sample_every = 1;
  EngineFlags engine;
};

int simulate_cmd(const SimulateArgs& a, std::ostream& out) {
  Scene scene = load_scene(a.scene);
  if (a.dt) scene.dt = *a.dt;
  validate_scene(scene);
  SimulateOptions options;
  options.duration = a.duration;
  options.engine = a.engine.options();
  options.traces = a.traces;
  options.sample_every = a.sample_every;
  for (Index id : a.traces)
    if (id >= scene.masses.size())
      throw UsageError("--trace " + std::to_string(id) + " is out of range (" + std::to_string(scene.masses.size()) +
                       " masses)");
  const auto result = simulate(scene, options);
  if (a.out.empty()) {
    write_trace_csv(out, result.traces);
  } else {
    std::ofstream file = open_output(a.out);
    write_trace_csv(file, result.traces);
    close_output(file, a.out);
  }
  return kOk;
}

// validate ------------------------------------------------------------------

struct ValidateArgs {
  std::string suite;
  std::vector<std::string> vary;
  fs::path out = ".";
  std::optional<double> duration;
  std::optional<double> dim;
  EngineFlags engine;
};

BeamExperimentOptions experiment_for(const ValidateArgs& a, BeamExperimentOptions o) {
  o.engine = a.engine.options();
  if (a.duration) o.trace_time = *a.duration;
  return o;
}

int validate_cmd(const ValidateArgs& a, std::ostream& out) {
  std::error_code ec;
  fs::create_directories(a.out, ec);
  bool passed = true;
  out << std::setprecision(6);

  if (a.suite == "energy") {
    EnergyValidationOptions o;
    if (a.dim) o.beam.dim = *a.dim;
    o.experiment = experiment_for(a, o.experiment);
    o.experiment.record_energies = true;
    const EnergyReport r = validate_energy(o);
    const fs::path path = a.out / "energy.csv";
    std::ofstream file = open_output(path);
    write_energy_csv(file, r, 10);
    close_output(file, path);
    out << "energy drift after release " << r.drift << " (bound " << r.tolerance << "), KE/PE correlation "
        << r.correlation << '\n';
    passed = r.passed;
    if (!passed) out << "FAIL energy: drift " << r.drift << ", correlation " << r.correlation << '\n';
  } else if (a.suite == "natfreq") {
    NatFreqValidationOptions o;
    if (a.dim) o.beam.dim = *a.dim;
    o.experiment = experiment_for(a, o.experiment);
    const auto rows = validate_natfreq(o);
    const fs::path path = a.out / "natfreq.csv";
    std::ofstream file = open_output(path);
    write_natfreq_csv(file, rows);
    close_output(file, path);
    write_natfreq_csv(out, rows);
    for (const auto& r : rows) {
      if (r.passed) continue;
      passed = false;
      out << "FAIL " << r.name << ": predicted " << r.predicted << " Hz, measured " << r.measured << " Hz, error "
          << r.error << " > " << r.tolerance << '\n';
    }
  } else {
    std::vector<SweepAxis> axes;
    const std::vector<std::string> names = a.vary.empty() ? std::vector<std::string>{"length", "height", "width"} : a.vary;
    for (const auto& n : names)
      axes.push_back(n == "length" ? SweepAxis::Length : n == "height" ? SweepAxis::Height : SweepAxis::Width);
    for (SweepAxis axis : axes) {
      BeamValidationOptions o = beam_validation_defaults(axis);
      if (a.dim) o.base.dim = *a.dim;
      o.experiment = experiment_for(a, o.experiment);
      const BeamValidation v = validate_beam(axis, o);
      const fs::path path = a.out / ("beam_" + to_string(axis) + ".csv");
      std::ofstream file = open_output(path);
      write_sweep_csv(file, v.rows);
      close_output(file, path);
      write_sweep_csv(out, v.rows);
      for (const auto& r : v.rows) {
        if (r.error < v.tolerance) continue;
        passed = false;
        out << "FAIL " << to_string(axis) << " scale " << r.scale << ": predicted " << r.predicted_normalized
            << ", measured " << r.measured_normalized << ", error " << r.error << " >= " << v.tolerance << '\n';
      }
    }
  }
  out << (passed ? "PASS" : "FAIL") << ' ' << a.suite << '\n';
  return passed ? kOk : kTolerance;
}

// natfreq -------------------------------------------------------------------

struct NatFreqArgs {
  fs::path scene, out;
  std::size_t count = 2;
};

int natfreq_cmd(const NatFreqArgs& a, std::ostream& out) {
  const Scene scene = load_scene(a.scene);
  const ModalSystem system = assemble_modal_system(scene);
  const ModalResult modes = solve_modes(system, std::min<std::size_t>(a.count, std::size_t(system.size())));
  std::ofstream file;
  if (!a.out.empty()) {
    file = open_output(a.out);
    file << std::setprecision(17) << "mode,frequency_hz,eigenvalue\n";
  }
  out << std::setprecision(8);
  for (std::size_t k = 0; k < modes.frequencies.size(); ++k) {
    out << "mode " << k + 1 << ": " << modes.frequencies[k] << " Hz\n";
    if (file.is_open()) file << k + 1 << ',' << modes.frequencies[k] << ',' << modes.eigenvalues[k] << '\n';
  }
  if (!system.null_dofs.empty()) out << system.null_dofs.size() << " degrees of freedom carry no stiffness\n";
  if (file.is_open()) close_output(file, a.out);
  return kOk;
}

// bench ---------------------------------------------------------------------

struct BenchArgs {
  std::vector<double> springs{1e6};
  std::vector<int> threads{0};
  std::uint64_t steps = 100;
  std::uint64_t warmup = 10;
  std::string integrator = "euler";
  std::string mode = "parallel";
  fs::path out;
};

int bench_cmd(const BenchArgs& a, std::ostream& out) {
  if (a.steps < 100) throw UsageError("--steps must be >= 100");
  std::ofstream file;
  if (!a.out.empty()) {
    file = open_output(a.out);
    file << "device,springs,masses,steps,wall_s,springs_per_s,threads,integrator,exec\n";
  }
  for (double requested : a.springs) {
    const Scene scene = make_bench_block(static_cast<std::size_t>(requested));
    for (int threads : a.threads) {
      BenchOptions o;
      o.springs = scene.springs.size();
      o.steps = a.steps;
      o.warmup = a.warmup;
      o.threads = threads;
      o.integrator = *parse_integrator(a.integrator);
      o.mode = *parse_exec_mode(a.mode);
      const BenchReport r = run_bench(scene, o);
      out << r.device << ": " << r.springs << " springs, " << r.steps << " steps in " << r.wall_time << " s, "
          << r.throughput << " springs/s, " << r.threads << " threads, " << to_string(r.integrator) << ", "
          << to_string(r.mode) << '\n';
      if (file.is_open())
        file << '"' << r.device << "\"," << r.springs << ',' << r.masses << ',' << r.steps << ',' << r.wall_time
             << ',' << r.throughput << ',' << r.threads << ',' << to_string(r.integrator) << ','
             << to_string(r.mode) << '\n';
    }
  }
  if (file.is_open()) close_output(file, a.out);
  return kOk;
}

// serve ---------------------------------------------------------------------

std::atomic<bool> interrupted{false};

extern "C" void on_signal(int) { interrupted = true; }

struct ServeArgs {
  fs::path scene;
  unsigned short port = 8765;
  double rate = 30;
  std::size_t decimate = 1;
  bool paused = false;
  EngineFlags engine;
};

int serve_cmd(const ServeArgs& a, std::ostream& out) {
  steer::ServerOptions o;
  o.port = a.port;
  o.rate = a.rate;
  o.decimate = a.decimate;
  o.start_paused = a.paused;
  o.engine = a.engine.options();
  steer::Server server(load_scene(a.scene), o);
  interrupted = false;
  auto previous_int = std::signal(SIGINT, on_signal);
  auto previous_term = std::signal(SIGTERM, on_signal);
  server.start();
  out << "listening on " << o.address << ':' << server.port() << std::endl;
  while (!interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();
  std::signal(SIGINT, previous_int);
  std::signal(SIGTERM, previous_term);
  out << "stopped after " << server.steps() << " steps\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mass-spring lattice simulation"};
  app.name("msim");
  app.require_subcommand(1);
  std::function<int()> action;

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "build a lattice from an OBJ mesh");
  g->add_option("--mesh", gen.mesh, "closed triangle mesh (.obj)")->required();
  g->add_option("--out", gen.out, "scene file to write")->required();
  g->add_option("--mode", gen.mode, "voxel or random")->check(CLI::IsMember({"voxel", "random"}));
  g->add_option("--dim", gen.dim, "voxel edge length (m)")->check(kPositive);
  g->add_option("--cutoff", gen.cutoff, "minimum spacing for random mode (m)")->check(kPositive);
  g->add_option("--radius", gen.radius, "spring radius for random mode (default 1.75 * cutoff)")
      ->check(kPositive);
  g->add_option("--seed", gen.seed, "random mode seed");
  g->add_option("--candidates", gen.candidates, "candidates per placement")->check(kPositive);
  g->add_option("--nearest", gen.nearest, "neighbours in the candidate score")->check(kPositive);
  g->add_option("--target", gen.target, "stop after this many masses");
  auto* node_mass = g->add_option("--node-mass", gen.node_mass, "mass per node (kg)")->check(kPositive);
  auto* total_mass = g->add_option("--total-mass", gen.total_mass, "structure mass (kg)")->check(kPositive);
  auto* density = g->add_option("--density", gen.density, "density (kg/m^3)")->check(kPositive);
  node_mass->excludes(total_mass)->excludes(density);
  total_mass->excludes(density);
  g->add_option("--k0", gen.k0, "stiffness at the reference length (N/m)")->check(kPositive);
  g->add_option("--l-ref", gen.l_ref, "reference length for k0 (m)")->check(kPositive);
  g->add_option("--dt", gen.dt, "time step stored in the scene (s)")->check(kPositive);
  g->add_option("--damping", gen.damping, "damping stored in the scene")->check(CLI::Range(0.0, 0.999999));
  g->add_option("--gravity", gen.gravity, "gravity magnitude along -y (m/s^2)");
  g->callback([&] { action = [&] { return generate(gen, out); }; });

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "run a scene and write a trace CSV");
  s->add_option("--scene", sim.scene)->required();
  s->add_option("--duration", sim.duration, "simulated seconds")->required()->check(CLI::NonNegativeNumber);
  s->add_option("--dt", sim.dt, "override the scene time step")->check(kPositive);
  s->add_option("--trace", sim.traces, "mass ids to record")->delimiter(',');
  s->add_option("--sample-every", sim.sample_every, "steps between samples")->check(kPositive);
  s->add_option("--out", sim.out, "CSV path (default stdout)");
  sim.engine.add(*s);
  s->callback([&] { action = [&] { return simulate_cmd(sim, out); }; });

  ValidateArgs val;
  auto* v = app.add_subcommand("validate", "run a validation suite");
  v->add_option("suite", val.suite, "beam, energy or natfreq")->required()->check(CLI::IsMember({"beam", "energy", "natfreq"}));
  v->add_option("--vary", val.vary, "beam sweep axes")->delimiter(',')->check(CLI::IsMember({"length", "height", "width"}));
  v->add_option("--out", val.out, "report directory");
  v->add_option("--duration", val.duration, "trace window after release (s)")->check(kPositive);
  v->add_option("--dim", val.dim, "voxel edge (m)")->check(kPositive);
  val.engine.add(*v);
  v->callback([&] { action = [&] { return validate_cmd(val, out); }; });

  NatFreqArgs nf;
  auto* n = app.add_subcommand("natfreq", "natural frequencies of a scene about its stored state");
  n->add_option("--scene", nf.scene)->required();
  n->add_option("--count", nf.count, "number of modes")->check(kPositive);
  n->add_option("--out", nf.out, "CSV path");
  n->callback([&] { action = [&] { return natfreq_cmd(nf, out); }; });

  BenchArgs bn;
  auto* b = app.add_subcommand("bench", "spring throughput on a cubic block");
  b->add_option("--springs", bn.springs, "requested spring counts")->delimiter(',')->check(kPositive);
  b->add_option("--steps", bn.steps, "timed steps (>= 100)");
  b->add_option("--warmup", bn.warmup, "untimed steps first");
  b->add_option("--threads", bn.threads, "thread counts to compare")->delimiter(',')->check(CLI::NonNegativeNumber);
  add_integrator(*b, bn.integrator);
  add_exec(*b, bn.mode);
  b->add_option("--out", bn.out, "CSV path");
  b->callback([&] { action = [&] { return bench_cmd(bn, out); }; });

  ServeArgs sv;
  auto* w = app.add_subcommand("serve", "serve a live simulation to steering clients");
  w->add_option("--scene", sv.scene)->required();
  w->add_option("--port", sv.port, "TCP port (0 picks one)");
  w->add_option("--rate", sv.rate, "snapshots per second")->check(kPositive);
  w->add_option("--decimate", sv.decimate, "send every Dth mass")->check(kPositive);
  w->add_flag("--paused", sv.paused, "start paused");
  sv.engine.add(*w);
  w->callback([&] { action = [&] { return serve_cmd(sv, out); }; });

  std::vector<const char*> argv{"msim"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    err << "msim: " << e.what() << '\n';
    return kUsage;
  } catch (const DivergenceError& e) {
    err << "msim: " << e.what() << '\n';
    return kDivergence;
  } catch (const IoError& e) {
    err << "msim: " << e.what() << '\n';
    return kIo;
  } catch (const SceneParseError& e) {
    err << "msim: " << e.what() << '\n';
    return kIo;
  } catch (const std::invalid_argument& e) {
    err << "msim: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "msim: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace msim::cli
