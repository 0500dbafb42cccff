#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "msim/signal.hpp"

using namespace msim;

namespace {

TraceSeries tone(double rate, double seconds, auto&& f) {
  const auto n = static_cast<std::size_t>(std::llround(rate * seconds)) + 1;
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = f(double(k) / rate);
  return TraceSeries::uniform(0.0, 1.0 / rate, std::move(v));
}

constexpr double kTwoPi = 2 * std::numbers::pi;

}  // namespace

TEST_CASE("trace series invariants") {
  CHECK_THROWS_AS(TraceSeries({0.0}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(TraceSeries({0.0, 0.0}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(TraceSeries({0.0, 1.0, 1.5}, {1.0, 2.0, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(TraceSeries({0.0, 1.0}, {1.0}), std::invalid_argument);
  const TraceSeries ok({0.0, 0.5, 1.0}, {1.0, 2.0, 3.0});
  CHECK(ok.spacing() == doctest::Approx(0.5));
  CHECK(ok.duration() == doctest::Approx(1.0));
}

TEST_CASE("zero cross frequency") {
  SUBCASE("constant signal is 0 Hz") {
    CHECK(zero_cross_frequency(tone(1000, 1, [](double) { return 2.0; }), 2.0) == 0.0);
  }
  SUBCASE("5 Hz sine at 1 kHz for 1 s") {
    const auto t = tone(1000, 1, [](double x) { return std::sin(kTwoPi * 5 * x); });
    CHECK(std::abs(zero_cross_frequency(t, 0.0) - 5.0) <= 0.5);
  }
  SUBCASE("offset 12 Hz sine over 2 s") {
    const auto t = tone(1000, 2, [](double x) { return std::sin(kTwoPi * 12 * x) + 0.3; });
    CHECK(std::abs(zero_cross_frequency(t, 0.3) - 12.0) <= 0.25);
  }
  SUBCASE("a sample on the reference counts once") {
    const TraceSeries t = TraceSeries::uniform(0, 1, {1.0, 0.0, -1.0, 0.0, 1.0});
    CHECK(count_crossings(t, 0.0) == 2);
    const TraceSeries touch = TraceSeries::uniform(0, 1, {1.0, 0.0, 1.0});
    CHECK(count_crossings(touch, 0.0) == 0);
  }
}

TEST_CASE("fft dominant frequency") {
  SUBCASE("5 Hz sine over 2 s") {
    const auto t = tone(1000, 2, [](double x) { return std::sin(kTwoPi * 5 * x); });
    CHECK(std::abs(fft_dominant_frequency(t) - 5.0) < 0.05);
  }
  SUBCASE("two tones") {
    const auto t =
        tone(1000, 2, [](double x) { return std::sin(kTwoPi * 5 * x) + 0.2 * std::sin(kTwoPi * 20 * x); });
    CHECK(std::abs(fft_dominant_frequency(t) - 5.0) < 0.05);
  }
  SUBCASE("dc only") {
    CHECK_THROWS_AS(fft_dominant_frequency(tone(1000, 1, [](double) { return 3.0; })), Error);
  }
  SUBCASE("too short") {
    CHECK_THROWS_AS(fft_dominant_frequency(TraceSeries::uniform(0, 1, std::vector<double>(8, 1.0))), Error);
  }
}

TEST_CASE("zero cross and fft agree within one bin on single tones") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> freq(2, 60), phase(0, kTwoPi), amp(0.1, 10), offset(-5, 5);
  for (int trial = 0; trial < 200; ++trial) {
    const double f = freq(rng), p = phase(rng), a = amp(rng), c = offset(rng);
    const auto t = tone(1000, 2, [&](double x) { return c + a * std::sin(kTwoPi * f * x + p); });
    const double bin = fft_bin_width(t);
    const double zc = zero_cross_frequency(t, c);
    const double ft = fft_dominant_frequency(t);
    INFO("f=" << f << " zc=" << zc << " fft=" << ft);
    CHECK(std::abs(zc - ft) <= bin);
  }
}

TEST_CASE("linear resampling") {
  const auto r = resample_linear({0.0, 0.1, 0.35, 1.0}, {0.0, 1.0, 3.5, 10.0}, 0.25);
  REQUIRE(r.size() == 5);
  for (std::size_t k = 0; k < r.size(); ++k) CHECK(r.values()[k] == doctest::Approx(10.0 * r.times()[k]));
  CHECK_THROWS_AS(resample_linear({0.0, 0.0}, {1.0, 2.0}, 0.1), std::invalid_argument);

  std::vector<double> t, y;
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> jitter(0.5e-3, 1.5e-3);
  for (double s = 0; s < 2.0; s += jitter(rng)) {
    t.push_back(s);
    y.push_back(std::sin(2 * std::numbers::pi * 7.0 * s));
  }
  CHECK(zero_cross_frequency(resample_linear(t, y, 5e-4), 0.0) == doctest::Approx(7.0).epsilon(0.04));
}
