#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/random/sobol.hpp>

namespace blie {

using Box = std::vector<std::pair<double, double>>;

/// Deterministic low-discrepancy points in a box: a Sobol sequence with a
/// seeded random shift (modulo 1) so different seeds give different sets.
inline std::vector<Eigen::VectorXd> sobol_points(const Box& box, int count, std::uint64_t seed) {
  const auto dim = static_cast<std::size_t>(box.size());
  std::vector<Eigen::VectorXd> out;
  if (dim == 0 || count <= 0) return out;
  boost::random::sobol engine(dim);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> shift(dim);
  for (auto& s : shift) s = u(rng);
  out.reserve(static_cast<std::size_t>(count));
  for (int n = 0; n < count; ++n) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
      double t = std::ldexp(static_cast<double>(engine()), -64) + shift[i];
      t -= std::floor(t);
      x(static_cast<Eigen::Index>(i)) = box[i].first + t * (box[i].second - box[i].first);
    }
    out.push_back(std::move(x));
  }
  return out;
}

/// Uniform pseudo-random point in a box.
inline Eigen::VectorXd uniform_point(const Box& box, std::mt19937_64& rng) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(box.size()));
  for (std::size_t i = 0; i < box.size(); ++i)
    x(static_cast<Eigen::Index>(i)) = std::uniform_real_distribution<double>(box[i].first, box[i].second)(rng);
  return x;
}

}  // namespace blie
