#pragma once

#include <vector>

#include "msim/types.hpp"

namespace msim {

/// Uniformly sampled scalar signal.
class TraceSeries {
 public:
  /// Throws std::invalid_argument unless there are >= 2 samples with
  /// strictly increasing, uniformly spaced times.
  TraceSeries(std::vector<double> times, std::vector<double> values);

  static TraceSeries uniform(double start, double spacing, std::vector<double> values);

  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double spacing() const noexcept { return spacing_; }
  double duration() const noexcept { return times_.back() - times_.front(); }

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  double spacing_ = 0;
};

/// Linear interpolation of an irregular, strictly increasing series onto a
/// uniform grid of the given spacing starting at times.front().
TraceSeries resample_linear(const std::vector<double>& times, const std::vector<double>& values, double spacing);

/// Sign changes of (value - reference) between consecutive samples. Samples
/// equal to the reference are skipped, so touching zero between two
/// opposite signs counts once and touching it without a sign change does not
/// count at all.
std::size_t count_crossings(const TraceSeries& trace, double reference);

/// crossings / (2 * duration); a constant trace gives 0 Hz.
double zero_cross_frequency(const TraceSeries& trace, double reference);

/// Dominant frequency of the mean-removed, Hann-windowed signal, refined by a
/// parabola through the log magnitudes of the peak bin and its neighbours.
/// Throws msim::Error for a constant signal or fewer than 16 samples.
double fft_dominant_frequency(const TraceSeries& trace);

/// Width of one FFT bin for this trace, in Hz.
double fft_bin_width(const TraceSeries& trace);

}  // namespace msim
