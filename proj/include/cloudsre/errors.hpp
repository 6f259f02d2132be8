#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cloudsre {

/// Invalid arguments or violated preconditions (maps to CLI exit code 2).
class domain_error : public std::invalid_argument {
 public:
  explicit domain_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Numeric anomalies: non-summable series, quadrature that cannot reach the
/// requested tolerance, too many exact-zero coefficient draws (CLI exit 3).
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

/// The |X| > threshold trajectory guard tripped (CLI exit 3).
class divergence_error : public numeric_error {
 public:
  divergence_error(const std::string& what, std::size_t step)
      : numeric_error(what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace cloudsre
