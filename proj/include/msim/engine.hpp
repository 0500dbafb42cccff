#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <type_traits>
#include <vector>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include "msim/commands.hpp"
#include "msim/execution.hpp"
#include "msim/slab.hpp"

namespace msim {

class InvalidScene : public Error {
 public:
  explicit InvalidScene(std::vector<Violation> violations)
      : Error(describe(violations)), violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  static std::string describe(const std::vector<Violation>& v) {
    std::string text = "invalid scene";
    for (const auto& item : v) text += "\n  " + item.field + ": " + item.message;
    return text;
  }
  std::vector<Violation> violations_;
};

struct EngineOptions {
  Integrator integrator = Integrator::Verlet;
  ExecMode mode = ExecMode::Serial;
  int threads = 0;  ///< 0 picks default_thread_count()
};

/// Dynamic state. Time is always step * dt. `previous_positions` is only
/// populated while Verlet is active and has taken its bootstrap step.
template <typename Scalar>
struct EngineState {
  std::vector<Vec3<Scalar>> positions;
  std::vector<Vec3<Scalar>> velocities;
  std::vector<Vec3<Scalar>> previous_positions;
  /// Positions at the instant the reported velocities belong to. Verlet's
  /// central-difference velocity is one step behind `positions`; this holds
  /// x_n for it and stays empty whenever velocities match `positions`.
  std::vector<Vec3<Scalar>> velocity_positions;
  std::uint64_t step = 0;
  Scalar dt = 0;
  Integrator integrator = Integrator::Verlet;
  ExecMode mode = ExecMode::Serial;

  Scalar time() const { return static_cast<Scalar>(step) * dt; }
};

/// Explicit mass-spring stepper. Forces follow gravity + external + Hooke
/// springs + contact planes; the per-step velocity damping is applied after
/// the integrator update. In the parallel modes each step runs a spring
/// phase (slot reservation into a ForceSlab), a barrier, then a mass phase
/// that sums slots and integrates.
///
/// Not safe to step from two threads at once.
template <typename Scalar>
class BasicEngine {
 public:
  using Vec = Vec3<Scalar>;
  using Positions = std::vector<Vec>;

  explicit BasicEngine(BasicScene<Scalar> scene, EngineOptions options = {})
      : scene_(std::move(scene)), initial_(scene_) {
    if (auto violations = validate_scene(scene_); !violations.empty()) throw InvalidScene(std::move(violations));
    topology_ = Topology::build(scene_);
    rest_ = RestLengths<Scalar>(scene_);
    slab_ = std::make_unique<ForceSlab<Scalar>>(topology_);
    spring_forces_.resize(scene_.springs.size());
    set_threads(options.threads);
    state_.dt = scene_.dt;
    state_.integrator = options.integrator;
    state_.mode = options.mode;
    load_initial_state();
  }

  const BasicScene<Scalar>& scene() const noexcept { return scene_; }
  const EngineState<Scalar>& state() const noexcept { return state_; }
  const Topology& topology() const noexcept { return topology_; }
  int threads() const noexcept { return threads_; }
  std::uint64_t degenerate_spring_events() const noexcept { return degenerate_.load(); }
  Scalar time() const { return state_.time(); }

  void step() {
    switch (state_.integrator) {
      case Integrator::Euler: step_euler(); break;
      case Integrator::Verlet: step_verlet(); break;
      case Integrator::Rk4: step_rk4(); break;
    }
  }

  void run(std::uint64_t steps) {
    for (std::uint64_t s = 0; s < steps; ++s) step();
  }

  void set_mode(ExecMode mode) { state_.mode = mode; }

  void set_threads(int threads) {
    threads_ = threads > 0 ? threads : default_thread_count();
    arena_ = std::make_unique<tbb::task_arena>(threads_);
  }

  void set_integrator(Integrator integrator) {
    if (integrator == state_.integrator) return;
    state_.integrator = integrator;
    state_.previous_positions.clear();
    state_.velocity_positions.clear();
  }

  void set_damping(Scalar damping) {
    if (!(damping >= 0 && damping < 1)) throw std::invalid_argument("damping must satisfy 0 <= damping < 1");
    scene_.damping = damping;
  }

  void set_gravity(const Vec& gravity) { scene_.gravity = gravity; }

  /// Adds `force` to the external force of each listed mass.
  void apply_force(const std::vector<Index>& ids, const Vec& force) {
    for (Index id : ids)
      if (id >= scene_.masses.size()) throw std::invalid_argument("mass id " + std::to_string(id) + " out of range");
    for (Index id : ids) scene_.masses[id].external_force += force;
  }

  void clear_forces() {
    for (auto& m : scene_.masses) m.external_force.setZero();
  }

  void set_actuation(const std::string& group, Scalar amplitude, Scalar frequency) {
    const int g = scene_.group_index(group);
    if (g < 0) throw std::invalid_argument("unknown actuation group '" + group + "'");
    if (!(std::abs(amplitude) < 1)) throw std::invalid_argument("actuation amplitude must satisfy |A| < 1");
    if (!(frequency >= 0)) throw std::invalid_argument("actuation frequency must be >= 0");
    scene_.actuation_groups[g].amplitude = amplitude;
    scene_.actuation_groups[g].frequency = frequency;
  }

  /// Back to the scene as constructed, including parameters changed since.
  void reset() {
    scene_ = initial_;
    load_initial_state();
  }

  /// Physics commands; pause/resume belong to whoever drives the loop and
  /// are ignored here.
  void apply(const Command& command) {
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, cmd::Reset>) reset();
          else if constexpr (std::is_same_v<T, cmd::SetDamping>) set_damping(static_cast<Scalar>(c.value));
          else if constexpr (std::is_same_v<T, cmd::ApplyForce>) apply_force(c.ids, c.force.template cast<Scalar>());
          else if constexpr (std::is_same_v<T, cmd::ClearForces>) clear_forces();
          else if constexpr (std::is_same_v<T, cmd::SetActuation>)
            set_actuation(c.group, static_cast<Scalar>(c.amplitude), static_cast<Scalar>(c.frequency));
          else if constexpr (std::is_same_v<T, cmd::SetIntegrator>) set_integrator(c.integrator);
        },
        command);
  }

  /// Force on every mass at the current state, computed through the active
  /// execution mode.
  Positions forces() {
    Positions out(scene_.masses.size());
    accumulate(state_.positions, state_.velocities, time(), [&](Index i, const Vec& f) { out[i] = f; });
    return out;
  }

  /// Spring phase only: fills the slab and leaves it occupied for
  /// inspection. The slab is reset by the next step.
  ForceSlab<Scalar>& fill_slab() {
    for (Index m = 0; m < slab_->size(); ++m) slab_->reset(m);
    spring_phase_slab(state_.positions, time());
    return *slab_;
  }

 private:
  void load_initial_state() {
    const std::size_t n = scene_.masses.size();
    state_.positions.resize(n);
    state_.velocities.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      state_.positions[i] = scene_.masses[i].position;
      state_.velocities[i] = scene_.masses[i].velocity;
    }
    state_.previous_positions.clear();
    state_.velocity_positions.clear();
    state_.step = 0;
    state_.dt = scene_.dt;
    for (Index m = 0; m < slab_->size(); ++m) slab_->reset(m);
  }

  bool parallel() const { return state_.mode != ExecMode::Serial; }

  template <typename Body>
  void parallel_for(std::size_t count, std::size_t grain, Body&& body) {
    arena_->execute([&] {
      tbb::parallel_for(tbb::blocked_range<std::size_t>(0, count, grain),
                        [&](const tbb::blocked_range<std::size_t>& r) {
                          for (std::size_t k = r.begin(); k != r.end(); ++k) body(k);
                        });
    });
  }

  void spring_phase_slab(const Positions& x, Scalar t) {
    parallel_for(scene_.springs.size(), 2048, [&](std::size_t k) {
      const auto& s = scene_.springs[k];
      const auto r = spring_force(x[s.i], x[s.j], s.stiffness, rest_.at(s, scene_.actuation_groups, t));
      if (r.degenerate) degenerate_.fetch_add(1, std::memory_order_relaxed);
      slab_->append(s.i, r.on_i, s.id);
      slab_->append(s.j, -r.on_i, s.id);
    });
  }

  /// Computes the force on every mass at (x, v, t) and hands it to
  /// per_mass(i, f). per_mass may only touch data owned by mass i.
  template <typename PerMass>
  void accumulate(const Positions& x, const Positions& v, Scalar t, PerMass&& per_mass) {
    const std::size_t n = scene_.masses.size();
    if (!parallel()) {
      for (std::size_t k = 0; k < scene_.springs.size(); ++k) {
        const auto& s = scene_.springs[k];
        const auto r = spring_force(x[s.i], x[s.j], s.stiffness, rest_.at(s, scene_.actuation_groups, t));
        if (r.degenerate) degenerate_.fetch_add(1, std::memory_order_relaxed);
        spring_forces_[k] = r.on_i;
      }
      for (Index i = 0; i < n; ++i) {
        Vec sum = Vec::Zero();
        for (Index e = topology_.offsets[i]; e < topology_.offsets[i + 1]; ++e) {
          const Vec& f = spring_forces_[topology_.springs[e]];
          if (topology_.sign[e] > 0)
            sum += f;
          else
            sum += -f;
        }
        per_mass(i, finish_force(scene_, i, sum, x[i], v[i]));
      }
      return;
    }

    spring_phase_slab(x, t);
    const bool sorted = state_.mode == ExecMode::ParallelDeterministic;
    parallel_for(n, 512, [&](std::size_t k) {
      const Index i = static_cast<Index>(k);
      auto slots = slab_->occupied(i);
      if (sorted) {
        // insertion sort: at most a few dozen entries
        for (std::size_t a = 1; a < slots.size(); ++a) {
          auto item = slots[a];
          std::size_t b = a;
          for (; b > 0 && slots[b - 1].spring > item.spring; --b) slots[b] = slots[b - 1];
          slots[b] = item;
        }
      }
      Vec sum = Vec::Zero();
      for (const auto& slot : slots) sum += slot.force;
      slab_->reset(i);
      per_mass(i, finish_force(scene_, i, sum, x[i], v[i]));
    });
  }

  void flag_if_nonfinite(Index i) {
    if (detail::finite3(state_.positions[i]) && detail::finite3(state_.velocities[i])) return;
    Index current = first_bad_.load();
    while (i < current && !first_bad_.compare_exchange_weak(current, i)) {
    }
  }

  void finish_step() {
    ++state_.step;
    const Index bad = first_bad_.exchange(kNone);
    if (bad != kNone) throw DivergenceError(bad, state_.step);
  }

  void step_euler() {
    const Scalar dt = scene_.dt;
    const Scalar keep = 1 - scene_.damping;
    auto& x = state_.positions;
    auto& v = state_.velocities;
    accumulate(x, v, time(), [&](Index i, const Vec& f) {
      const auto& m = scene_.masses[i];
      if (m.fixed) return;
      x[i] += dt * v[i];
      v[i] += (dt / m.mass) * f;
      if (keep != 1) v[i] *= keep;
      flag_if_nonfinite(i);
    });
    finish_step();
  }

  void step_verlet() {
    const Scalar dt = scene_.dt;
    const Scalar damping = scene_.damping;
    const Scalar keep = 1 - damping;
    auto& x = state_.positions;
    auto& v = state_.velocities;
    auto& prev = state_.previous_positions;
    const bool bootstrap = prev.empty();
    if (bootstrap) prev.resize(x.size());
    auto& lagged = state_.velocity_positions;
    if (bootstrap) lagged.clear();
    else lagged.resize(x.size());

    accumulate(x, v, time(), [&](Index i, const Vec& f) {
      const auto& m = scene_.masses[i];
      if (m.fixed) {
        if (bootstrap) prev[i] = x[i];
        else lagged[i] = x[i];
        return;
      }
      const Vec old = x[i];
      if (!bootstrap) lagged[i] = old;
      Vec next;
      if (bootstrap) {
        next = old + dt * v[i] + (dt * dt / (2 * m.mass)) * f;
        v[i] += (dt / m.mass) * f;
      } else {
        next = 2 * old - prev[i] + (dt * dt / m.mass) * f;
        v[i] = (next - prev[i]) / (2 * dt);
      }
      x[i] = next;
      if (damping == 0) {
        prev[i] = old;
      } else {
        // shrink the implied velocity (x_{n+1} - x_n)/dt for the next step
        prev[i] = next - keep * (next - old);
        v[i] *= keep;
      }
      flag_if_nonfinite(i);
    });
    finish_step();
  }

  void step_rk4() {
    const Scalar dt = scene_.dt;
    const Scalar half = dt / 2;
    const Scalar t = time();
    const Scalar keep = 1 - scene_.damping;
    const std::size_t n = scene_.masses.size();
    auto& x = state_.positions;
    auto& v = state_.velocities;
    for (auto* buffer : {&stage_x_, &stage_v_, &acc1_, &acc2_, &acc3_, &vel2_, &vel3_}) buffer->resize(n);

    // stage 1 at (x, v); stage inputs for the next stage are written per mass
    accumulate(x, v, t, [&](Index i, const Vec& f) {
      const auto& m = scene_.masses[i];
      acc1_[i] = m.fixed ? Vec::Zero() : Vec(f / m.mass);
      const Vec vel = m.fixed ? Vec::Zero() : v[i];
      stage_x_[i] = x[i] + half * vel;
      stage_v_[i] = v[i] + half * acc1_[i];
    });
    accumulate(stage_x_, stage_v_, t + half, [&](Index i, const Vec& f) {
      const auto& m = scene_.masses[i];
      vel2_[i] = m.fixed ? Vec::Zero() : stage_v_[i];
      acc2_[i] = m.fixed ? Vec::Zero() : Vec(f / m.mass);
    });
    for (std::size_t i = 0; i < n; ++i) {
      stage_x_[i] = x[i] + half * vel2_[i];
      stage_v_[i] = v[i] + half * acc2_[i];
    }
    accumulate(stage_x_, stage_v_, t + half, [&](Index i, const Vec& f) {
      const auto& m = scene_.masses[i];
      vel3_[i] = m.fixed ? Vec::Zero() : stage_v_[i];
      acc3_[i] = m.fixed ? Vec::Zero() : Vec(f / m.mass);
    });
    for (std::size_t i = 0; i < n; ++i) {
      stage_x_[i] = x[i] + dt * vel3_[i];
      stage_v_[i] = v[i] + dt * acc3_[i];
    }
    accumulate(stage_x_, stage_v_, t + dt, [&](Index i, const Vec& f) {
      const auto& m = scene_.masses[i];
      if (m.fixed) return;
      const Vec acc4 = f / m.mass;
      const Vec vel4 = stage_v_[i];
      x[i] += (dt / 6) * (v[i] + 2 * vel2_[i] + 2 * vel3_[i] + vel4);
      v[i] += (dt / 6) * (acc1_[i] + 2 * acc2_[i] + 2 * acc3_[i] + acc4);
      if (keep != 1) v[i] *= keep;
      flag_if_nonfinite(i);
    });
    finish_step();
  }

  static constexpr Index kNone = std::numeric_limits<Index>::max();

  BasicScene<Scalar> scene_;
  BasicScene<Scalar> initial_;
  Topology topology_;
  RestLengths<Scalar> rest_;
  std::unique_ptr<ForceSlab<Scalar>> slab_;
  std::unique_ptr<tbb::task_arena> arena_;
  int threads_ = 1;
  EngineState<Scalar> state_;
  Positions spring_forces_;
  Positions stage_x_, stage_v_, acc1_, acc2_, acc3_, vel2_, vel3_;
  std::atomic<std::uint64_t> degenerate_{0};
  std::atomic<Index> first_bad_{kNone};
};

using Engine = BasicEngine<double>;

}  // namespace msim
