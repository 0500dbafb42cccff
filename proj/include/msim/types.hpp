#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace msim {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

using Vec3d = Vec3<double>;
using Index = std::uint32_t;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A non-finite coordinate showed up while stepping.
class DivergenceError : public Error {
 public:
  DivergenceError(Index mass, std::uint64_t step, const std::string& hint = {})
      : Error("simulation diverged: mass " + std::to_string(mass) + " became non-finite at step " +
              std::to_string(step) + (hint.empty() ? "" : "; " + hint)),
        mass_(mass),
        step_(step) {}

  Index mass() const noexcept { return mass_; }
  std::uint64_t step() const noexcept { return step_; }

 private:
  Index mass_;
  std::uint64_t step_;
};

}  // namespace msim
