#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <random>
#include <stdexcept>
#include <string>

namespace strb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// A solver/iteration failed (singular factorization, non-convergence, ...).
// The CLI maps this to exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad run configuration or malformed input file.  CLI exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parameter point mu = (mu1, mu2, mu3).
struct Mu {
  std::array<double, 3> v{0.0, 0.0, 0.0};

  Mu() = default;
  Mu(double m1, double m2, double m3) : v{m1, m2, m3} {}

  double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return v[static_cast<std::size_t>(i)]; }

  bool operator==(const Mu& o) const { return v == o.v; }
};

// Axis-aligned parameter domain.
struct ParameterBox {
  std::array<double, 3> lo{0.0, 0.0, 0.0};
  std::array<double, 3> hi{1.0, 1.0, 1.0};

  void validate() const {
    for (int i = 0; i < 3; ++i)
      if (!(lo[static_cast<std::size_t>(i)] < hi[static_cast<std::size_t>(i)]))
        throw ConfigError("parameter box has empty extent in direction " + std::to_string(i + 1));
  }

  bool contains(const Mu& mu) const {
    for (int i = 0; i < 3; ++i) {
      auto k = static_cast<std::size_t>(i);
      if (mu[i] < lo[k] || mu[i] > hi[k]) return false;
    }
    return true;
  }

  Mu midpoint() const {
    return Mu(0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2]));
  }

  Mu sample(std::mt19937_64& rng) const {
    Mu mu;
    for (std::size_t i = 0; i < 3; ++i) {
      std::uniform_real_distribution<double> d(lo[i], hi[i]);
      mu[static_cast<int>(i)] = d(rng);
    }
    return mu;
  }
};

}  // namespace strb
