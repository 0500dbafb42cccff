#pragma once

#include <cmath>
#include <iomanip>
#include <ostream>

#include "msim/energy.hpp"

namespace msim {

struct SimulateOptions {
  double duration = 0;  ///< simulated seconds; ceil(duration / dt) steps
  EngineOptions engine;
  std::vector<Index> traces;      ///< mass ids recorded every sample
  std::uint64_t sample_every = 1; ///< steps between samples
};

/// Samples taken at t = 0, every `sample_every` steps, and at the last step.
template <typename Scalar>
struct TraceSet {
  std::vector<Index> ids;
  std::vector<Scalar> times;
  std::vector<std::vector<Vec3<Scalar>>> positions;  ///< [sample][trace]
  std::vector<Energies<Scalar>> energies;

  std::size_t size() const { return times.size(); }

  /// One coordinate of one traced mass over time.
  std::vector<Scalar> coordinate(std::size_t trace, int axis) const {
    std::vector<Scalar> out;
    out.reserve(positions.size());
    for (const auto& row : positions) out.push_back(row[trace][axis]);
    return out;
  }
};

template <typename Scalar>
struct SimulationResult {
  TraceSet<Scalar> traces;
  EngineState<Scalar> final_state;
};

inline std::uint64_t step_count(double duration, double dt) {
  if (!(duration > 0)) return 0;
  // tolerate duration/dt landing a hair above an integer
  return static_cast<std::uint64_t>(std::ceil(duration / dt - 1e-9));
}

/// Records one sample of the engine's current state into `out`.
template <typename Scalar>
void record_sample(const BasicEngine<Scalar>& engine, Scalar datum, TraceSet<Scalar>& out) {
  const auto& s = engine.state();
  out.times.push_back(s.time());
  std::vector<Vec3<Scalar>> row;
  row.reserve(out.ids.size());
  for (Index id : out.ids) row.push_back(s.positions[id]);
  out.positions.push_back(std::move(row));
  out.energies.push_back(energies(engine, std::optional<Scalar>(datum)));
}

/// Runs `engine` for `steps`, sampling into `out`. Commands from `channel`
/// are drained between steps; a pause blocks until a resume arrives.
template <typename Scalar>
void drive(BasicEngine<Scalar>& engine, std::uint64_t steps, std::uint64_t sample_every, TraceSet<Scalar>& out,
           CommandChannel* channel = nullptr) {
  const Scalar datum = gpe_datum(engine.scene());
  bool paused = false;
  auto handle = [&](std::vector<Command> commands) {
    for (auto& c : commands) {
      if (std::holds_alternative<cmd::Pause>(c))
        paused = true;
      else if (std::holds_alternative<cmd::Resume>(c))
        paused = false;
      else
        engine.apply(c);
    }
  };
  const std::uint64_t every = std::max<std::uint64_t>(1, sample_every);
  for (std::uint64_t k = 0; k < steps; ++k) {
    if (channel) {
      handle(channel->drain());
      while (paused) handle(channel->wait_and_drain());
    }
    engine.step();
    if ((k + 1) % every == 0 || k + 1 == steps) record_sample(engine, datum, out);
  }
}

template <typename Scalar>
SimulationResult<Scalar> simulate(const BasicScene<Scalar>& scene, const SimulateOptions& options,
                                  CommandChannel* channel = nullptr) {
  for (Index id : options.traces)
    if (id >= scene.masses.size()) throw std::invalid_argument("trace id " + std::to_string(id) + " out of range");
  BasicEngine<Scalar> engine(scene, options.engine);
  SimulationResult<Scalar> result;
  result.traces.ids = options.traces;
  record_sample(engine, gpe_datum(engine.scene()), result.traces);
  drive(engine, step_count(options.duration, scene.dt), options.sample_every, result.traces, channel);
  result.final_state = engine.state();
  return result;
}

/// Header `t,<id>.x,<id>.y,<id>.z,...,epe,gpe,ke,total`, 17 significant digits.
template <typename Scalar>
void write_trace_csv(std::ostream& os, const TraceSet<Scalar>& traces) {
  os << "t";
  for (Index id : traces.ids) os << ',' << id << ".x," << id << ".y," << id << ".z";
  os << ",epe,gpe,ke,total\n";
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << std::setprecision(17);
  for (std::size_t k = 0; k < traces.size(); ++k) {
    os << traces.times[k];
    for (const auto& p : traces.positions[k]) os << ',' << p.x() << ',' << p.y() << ',' << p.z();
    const auto& e = traces.energies[k];
    os << ',' << e.elastic << ',' << e.gravitational << ',' << e.kinetic << ',' << e.total << '\n';
  }
  os.flags(flags);
  os.precision(precision);
}

}  // namespace msim
