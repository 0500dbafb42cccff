#include "msim/bench.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <new>
#include <thread>

#include "msim/lattice.hpp"

namespace msim {

std::size_t block_spring_count(std::size_t a, std::size_t b, std::size_t c) {
  const std::size_t edges = a * (b + 1) * (c + 1) + (a + 1) * b * (c + 1) + (a + 1) * (b + 1) * c;
  const std::size_t faces = 2 * (a * b * (c + 1) + a * (b + 1) * c + (a + 1) * b * c);
  return edges + faces + 4 * a * b * c;
}

std::size_t block_side_for(std::size_t springs) {
  std::size_t best = 1;
  auto gap = [&](std::size_t n) {
    const auto count = block_spring_count(n, n, n);
    return count > springs ? count - springs : springs - count;
  };
  for (std::size_t n = 1; block_spring_count(n, n, n) <= 2 * springs + 28; ++n)
    if (gap(n) < gap(best)) best = n;
  return best;
}

Scene make_bench_block(std::size_t springs) {
  if (springs == 0) throw std::invalid_argument("spring count must be > 0");
  const std::size_t n = block_side_for(springs);
  try {
    LatticeSpec spec;
    spec.dim = 0.01;
    const double side = 0.01 * double(n);
    Scene scene = build_voxel_lattice(make_box_mesh(Vec3d::Zero(), Vec3d::Constant(side)), spec, Material{});
    scene.gravity.setZero();
    return scene;
  } catch (const std::bad_alloc&) {
    throw Error("out of memory building a " + std::to_string(n) + "^3 voxel block (" +
                std::to_string(block_spring_count(n, n, n)) + " springs)");
  }
}

std::string device_description() {
  std::string model = "unknown CPU";
  std::ifstream info("/proc/cpuinfo");
  for (std::string line; std::getline(info, line);)
    if (line.rfind("model name", 0) == 0) {
      model = line.substr(line.find(':') + 2);
      break;
    }
  return model + ", " + std::to_string(std::thread::hardware_concurrency()) + " logical cores";
}

BenchReport run_bench(const Scene& scene, const BenchOptions& options) {
  if (options.steps < 100) throw std::invalid_argument("bench needs at least 100 timed steps");
  BenchReport report;
  report.device = device_description();
  report.springs = scene.springs.size();
  report.masses = scene.masses.size();
  report.steps = options.steps;
  report.integrator = options.integrator;
  report.mode = options.mode;
  try {
    Engine engine(scene, EngineOptions{options.integrator, options.mode, options.threads});
    report.threads = engine.threads();
    engine.run(options.warmup);
    const auto start = std::chrono::steady_clock::now();
    engine.run(options.steps);
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  } catch (const std::bad_alloc&) {
    throw Error("out of memory simulating " + std::to_string(report.springs) + " springs");
  }
  report.throughput = double(report.springs) * double(report.steps) / report.wall_time;
  return report;
}

BenchReport run_bench(const BenchOptions& options) {
  if (options.steps < 100) throw std::invalid_argument("bench needs at least 100 timed steps");
  return run_bench(make_bench_block(options.springs), options);
}

}  // namespace msim
