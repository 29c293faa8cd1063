#include "pdcp/rng.hpp"

#include <cmath>

namespace pdcp {

double Rng::normal() {
  // One pair per call; the cosine half only, so the counter advance per
  // draw is fixed at 2.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  return r * std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::vector<double> Rng::uniform_vec(std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = uniform();
  return v;
}

std::vector<double> Rng::normal_vec(std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = normal();
  return v;
}

}  // namespace pdcp
