#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

#include "msim/execution.hpp"
#include "msim/types.hpp"

namespace msim {

namespace cmd {
struct Pause {};
struct Resume {};
struct Reset {};
struct SetDamping {
  double value = 0;
};
struct ApplyForce {
  std::vector<Index> ids;
  Vec3d force = Vec3d::Zero();
};
struct ClearForces {};
struct SetActuation {
  std::string group;
  double amplitude = 0;
  double frequency = 0;
};
struct SetIntegrator {
  Integrator integrator = Integrator::Verlet;
};
}  // namespace cmd

using Command = std::variant<cmd::Pause, cmd::Resume, cmd::Reset, cmd::SetDamping, cmd::ApplyForce,
                             cmd::ClearForces, cmd::SetActuation, cmd::SetIntegrator>;

/// Queue of steering commands. Producers push from any thread; the stepping
/// thread drains between steps only.
class CommandChannel {
 public:
  void push(Command command) {
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(std::move(command));
    }
    ready_.notify_all();
  }

  std::vector<Command> drain() {
    std::lock_guard lock(mutex_);
    std::vector<Command> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
    queue_.clear();
    return out;
  }

  /// Blocks until at least one command is queued, then drains.
  std::vector<Command> wait_and_drain() {
    std::unique_lock lock(mutex_);
    ready_.wait(lock, [&] { return !queue_.empty(); });
    std::vector<Command> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
    queue_.clear();
    return out;
  }

  /// Waits up to `timeout` for a command, then drains whatever is queued.
  template <typename Rep, typename Period>
  std::vector<Command> wait_for_and_drain(std::chrono::duration<Rep, Period> timeout) {
    std::unique_lock lock(mutex_);
    ready_.wait_for(lock, timeout, [&] { return !queue_.empty(); });
    std::vector<Command> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
    queue_.clear();
    return out;
  }

 private:
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<Command> queue_;
};

}  // namespace msim
