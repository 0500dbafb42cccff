#include "msim/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include <unsupported/Eigen/FFT>

namespace msim {

TraceSeries::TraceSeries(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.size() != values_.size()) throw std::invalid_argument("trace times and values differ in length");
  if (times_.size() < 2) throw std::invalid_argument("trace needs at least 2 samples");
  spacing_ = (times_.back() - times_.front()) / double(times_.size() - 1);
  if (!(spacing_ > 0)) throw std::invalid_argument("trace times must be strictly increasing");
  for (std::size_t k = 1; k < times_.size(); ++k) {
    const double step = times_[k] - times_[k - 1];
    if (!(step > 0)) throw std::invalid_argument("trace times must be strictly increasing");
    if (std::abs(step - spacing_) > 1e-6 * spacing_) throw std::invalid_argument("trace times must be uniformly spaced");
  }
}

TraceSeries TraceSeries::uniform(double start, double spacing, std::vector<double> values) {
  std::vector<double> times(values.size());
  for (std::size_t k = 0; k < times.size(); ++k) times[k] = start + spacing * double(k);
  return TraceSeries(std::move(times), std::move(values));
}

TraceSeries resample_linear(const std::vector<double>& times, const std::vector<double>& values, double spacing) {
  if (times.size() != values.size() || times.size() < 2) throw std::invalid_argument("resample needs >= 2 samples");
  if (!(spacing > 0)) throw std::invalid_argument("resample spacing must be > 0");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw std::invalid_argument("trace times must be strictly increasing");
  const auto n = static_cast<std::size_t>(std::floor((times.back() - times.front()) / spacing)) + 1;
  std::vector<double> out(n);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = times.front() + double(k) * spacing;
    while (seg + 2 < times.size() && times[seg + 1] < t) ++seg;
    const double w = std::clamp((t - times[seg]) / (times[seg + 1] - times[seg]), 0.0, 1.0);
    out[k] = (1 - w) * values[seg] + w * values[seg + 1];
  }
  return TraceSeries::uniform(times.front(), spacing, std::move(out));
}

std::size_t count_crossings(const TraceSeries& trace, double reference) {
  std::size_t crossings = 0;
  int last = 0;
  for (double value : trace.values()) {
    const double d = value - reference;
    const int sign = (d > 0) - (d < 0);
    if (sign == 0) continue;
    if (last != 0 && sign != last) ++crossings;
    last = sign;
  }
  return crossings;
}

double zero_cross_frequency(const TraceSeries& trace, double reference) {
  return double(count_crossings(trace, reference)) / (2 * trace.duration());
}

double fft_bin_width(const TraceSeries& trace) { return 1.0 / (double(trace.size()) * trace.spacing()); }

double fft_dominant_frequency(const TraceSeries& trace) {
  const std::size_t n = trace.size();
  if (n < 16) throw Error("fft_dominant_frequency needs at least 16 samples");
  const auto& raw = trace.values();
  const double mean = std::accumulate(raw.begin(), raw.end(), 0.0) / double(n);

  std::vector<double> signal(n);
  double largest = 0, scale = std::abs(mean);
  for (std::size_t k = 0; k < n; ++k) {
    signal[k] = raw[k] - mean;
    largest = std::max(largest, std::abs(signal[k]));
    scale = std::max(scale, std::abs(raw[k]));
  }
  if (!(largest > 1e-12 * scale) || largest == 0) throw Error("no dominant frequency: signal is constant");

  for (std::size_t k = 0; k < n; ++k)
    signal[k] *= 0.5 - 0.5 * std::cos(2 * std::numbers::pi * double(k) / double(n - 1));

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, signal);

  const std::size_t half = n / 2;
  std::vector<double> magnitude(half + 1);
  for (std::size_t k = 0; k <= half; ++k) magnitude[k] = std::abs(spectrum[k]);
  const std::size_t peak = static_cast<std::size_t>(
      std::max_element(magnitude.begin() + 1, magnitude.end()) - magnitude.begin());

  double offset = 0;
  if (peak > 1 && peak < half) {
    const double a = std::log(magnitude[peak - 1]);
    const double b = std::log(magnitude[peak]);
    const double c = std::log(magnitude[peak + 1]);
    const double denom = a - 2 * b + c;
    if (std::isfinite(denom) && denom < 0) offset = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
  }
  return (double(peak) + offset) * fft_bin_width(trace);
}

}  // namespace msim
