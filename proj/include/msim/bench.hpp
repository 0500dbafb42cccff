#pragma once

#include <cstdint>
#include <string>

#include "msim/engine.hpp"

namespace msim {

struct BenchOptions {
  std::size_t springs = 1000000;  ///< requested; the block closest to this is used
  std::uint64_t steps = 100;
  std::uint64_t warmup = 10;
  int threads = 0;
  Integrator integrator = Integrator::Euler;
  ExecMode mode = ExecMode::Parallel;
};

struct BenchReport {
  std::string device;
  std::size_t springs = 0;
  std::size_t masses = 0;
  std::uint64_t steps = 0;
  double wall_time = 0;   ///< s, timed steps only
  double throughput = 0;  ///< springs * steps / wall_time
  int threads = 0;
  Integrator integrator = Integrator::Euler;
  ExecMode mode = ExecMode::Parallel;
};

/// Springs in an a x b x c voxel block with 26-neighbour connectivity.
std::size_t block_spring_count(std::size_t a, std::size_t b, std::size_t c);

/// Voxels per side of the cubic block whose spring count is closest to `springs`.
std::size_t block_side_for(std::size_t springs);

/// Cubic block lattice with the default material and gravity off.
Scene make_bench_block(std::size_t springs);

/// CPU model and logical core count.
std::string device_description();

/// Times `steps` steps after `warmup` untimed ones. Throws
/// std::invalid_argument for fewer than 100 steps and msim::Error when the
/// lattice cannot be allocated.
BenchReport run_bench(const BenchOptions& options);

/// Same, on a prebuilt scene (reused across thread counts and integrators).
BenchReport run_bench(const Scene& scene, const BenchOptions& options);

}  // namespace msim
