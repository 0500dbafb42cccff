#pragma once

#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

namespace msim {

enum class Integrator { Euler, Verlet, Rk4 };

/// parallel: slots summed in arrival order.
/// parallel-det: slots sorted by spring id first, bitwise equal to serial.
enum class ExecMode { Serial, Parallel, ParallelDeterministic };

inline std::string_view to_string(Integrator integrator) {
  switch (integrator) {
    case Integrator::Euler: return "euler";
    case Integrator::Verlet: return "verlet";
    case Integrator::Rk4: return "rk4";
  }
  return "?";
}

inline std::string_view to_string(ExecMode mode) {
  switch (mode) {
    case ExecMode::Serial: return "serial";
    case ExecMode::Parallel: return "parallel";
    case ExecMode::ParallelDeterministic: return "parallel-det";
  }
  return "?";
}

inline std::optional<Integrator> parse_integrator(std::string_view name) {
  if (name == "euler") return Integrator::Euler;
  if (name == "verlet") return Integrator::Verlet;
  if (name == "rk4") return Integrator::Rk4;
  return std::nullopt;
}

inline std::optional<ExecMode> parse_exec_mode(std::string_view name) {
  if (name == "serial") return ExecMode::Serial;
  if (name == "parallel") return ExecMode::Parallel;
  if (name == "parallel-det") return ExecMode::ParallelDeterministic;
  return std::nullopt;
}

inline constexpr const char* kThreadsEnv = "MSIM_THREADS";

/// MSIM_THREADS when set to a positive integer, otherwise the hardware count.
inline int default_thread_count() {
  if (const char* env = std::getenv(kThreadsEnv)) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace msim
