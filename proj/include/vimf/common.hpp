#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vimf {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad input data, arguments or config (CLI exit code 1).
struct ValidationError : Error {
  using Error::Error;
};

/// Malformed input file; carries the 1-based line number.
struct ParseError : ValidationError {
  ParseError(const std::string& what, std::size_t line_no)
      : ValidationError("line " + std::to_string(line_no) + ": " + what),
        line(line_no) {}
  std::size_t line;
};

/// Numeric failure at runtime: divergence, overflow (CLI exit code 2).
struct NumericError : Error {
  using Error::Error;
};

inline constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2*pi)

inline double softplus(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}

/// Inverse of softplus; defined for y > 0.
inline double softplus_inverse(double y) {
  return y > 30.0 ? y : std::log(std::expm1(y));
}

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

/// log N(x; mean, precision^-1)
inline double gaussian_log_density_prec(double x, double mean, double precision) {
  const double r = x - mean;
  return 0.5 * (std::log(precision) - kLog2Pi) - 0.5 * precision * r * r;
}

/// log N(x; mean, sd^2)
inline double gaussian_log_density_sd(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -std::log(sd) - 0.5 * kLog2Pi - 0.5 * z * z;
}

// Locale-independent number formatting. format_double emits the shortest
// decimal that parses back to the same bits; both directions go through
// <charconv> so output files are byte-stable across locales and reruns.
std::string format_double(double v);
std::string format_double_fixed(double v, int decimals);
double parse_double(std::string_view s);
std::int64_t parse_int(std::string_view s);

}  // namespace vimf
