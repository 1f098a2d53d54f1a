#pragma once

// Frequency grids, complex transmission spectra and dB arithmetic.
// Every component model in this library produces a ComplexSpectrum on a
// shared FrequencyGrid; cascades are element-wise products.

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace ppcs {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPlanck = 6.62607015e-34;     // J*s
inline constexpr double kDbFloor = -200.0;

class DomainError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline double wavelength_to_frequency(double lambda_m) {
  if (!(lambda_m > 0.0)) throw DomainError("wavelength must be positive");
  return kSpeedOfLight / lambda_m;
}

inline double frequency_to_wavelength(double f_hz) {
  if (!(f_hz > 0.0)) throw DomainError("frequency must be positive");
  return kSpeedOfLight / f_hz;
}

inline double db_from_linear_power(double p) {
  if (p <= 0.0) return kDbFloor;
  return std::max(10.0 * std::log10(p), kDbFloor);
}

inline double db_from_amplitude(double a) {
  if (a <= 0.0) return kDbFloor;
  return std::max(20.0 * std::log10(a), kDbFloor);
}

inline double linear_power_from_db(double db) { return std::pow(10.0, db / 10.0); }
inline double amplitude_from_db(double db) { return std::pow(10.0, db / 20.0); }

// Uniform in frequency. Wavelength axes are produced only at output time.
struct FrequencyGrid {
  double start_hz = 0.0;
  double stop_hz = 0.0;
  std::size_t n_points = 0;

  FrequencyGrid() = default;
  FrequencyGrid(double start, double stop, std::size_t n)
      : start_hz(start), stop_hz(stop), n_points(n) {
    if (!(start_hz < stop_hz)) throw DomainError("grid start must be below stop");
    if (n_points < 1) throw DomainError("grid needs at least 1 point");
  }

  static FrequencyGrid from_wavelength_span(double lambda_lo_m, double lambda_hi_m,
                                            std::size_t n) {
    if (!(lambda_lo_m > 0.0 && lambda_hi_m > lambda_lo_m))
      throw DomainError("bad wavelength span");
    return FrequencyGrid(wavelength_to_frequency(lambda_hi_m),
                         wavelength_to_frequency(lambda_lo_m), n);
  }

  double spacing_hz() const {
    if (n_points < 2) return 0.0;
    return (stop_hz - start_hz) / static_cast<double>(n_points - 1);
  }

  double at(std::size_t i) const {
    return start_hz + spacing_hz() * static_cast<double>(i);
  }

  bool contains(double f_hz) const { return f_hz >= start_hz && f_hz <= stop_hz; }

  // Index of the grid point closest to f_hz.
  std::size_t index_near(double f_hz) const {
    if (n_points < 2) return 0;
    double x = (f_hz - start_hz) / spacing_hz();
    auto i = static_cast<long long>(std::llround(x));
    i = std::clamp<long long>(i, 0, static_cast<long long>(n_points) - 1);
    return static_cast<std::size_t>(i);
  }

  bool operator==(const FrequencyGrid&) const = default;
};

struct PowerSpectrumDb {
  FrequencyGrid grid;
  std::vector<double> values_db;
};

class ComplexSpectrum {
public:
  ComplexSpectrum() = default;
  ComplexSpectrum(FrequencyGrid grid, std::vector<std::complex<double>> values)
      : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.n_points)
      throw ShapeError("value count does not match grid");
  }

  static ComplexSpectrum ones(const FrequencyGrid& grid) {
    return ComplexSpectrum(grid,
                           std::vector<std::complex<double>>(grid.n_points, {1.0, 0.0}));
  }

  static ComplexSpectrum uniform(const FrequencyGrid& grid, std::complex<double> v) {
    return ComplexSpectrum(grid, std::vector<std::complex<double>>(grid.n_points, v));
  }

  const FrequencyGrid& grid() const { return grid_; }
  const std::vector<std::complex<double>>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  std::complex<double> operator[](std::size_t i) const { return values_[i]; }

  std::complex<double> at_frequency(double f_hz) const {
    return values_[grid_.index_near(f_hz)];
  }

  double power_at(double f_hz) const { return std::norm(at_frequency(f_hz)); }

  double max_abs() const {
    double m = 0.0;
    for (const auto& v : values_) m = std::max(m, std::abs(v));
    return m;
  }

private:
  FrequencyGrid grid_;
  std::vector<std::complex<double>> values_;
};

inline ComplexSpectrum multiply(const ComplexSpectrum& a, const ComplexSpectrum& b) {
  if (!(a.grid() == b.grid())) throw ShapeError("grid mismatch in spectrum product");
  std::vector<std::complex<double>> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return ComplexSpectrum(a.grid(), std::move(out));
}

inline PowerSpectrumDb power_db(const ComplexSpectrum& s, double floor_db = kDbFloor) {
  PowerSpectrumDb out;
  out.grid = s.grid();
  out.values_db.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    double a = std::abs(s[i]);
    out.values_db[i] = (a <= 0.0) ? floor_db : std::max(20.0 * std::log10(a), floor_db);
  }
  return out;
}

}  // namespace ppcs
