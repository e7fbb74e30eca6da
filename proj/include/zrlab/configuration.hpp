#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

namespace zrlab {

using Occupancy = std::int32_t;

/// Occupation numbers on a ring of size() sites.
struct Configuration {
  std::vector<Occupancy> eta;

  Configuration() = default;
  explicit Configuration(std::vector<Occupancy> values) : eta(std::move(values)) {}

  static Configuration empty(std::size_t sites) { return Configuration(std::vector<Occupancy>(sites, 0)); }
  /// N particles spread as evenly as possible: site x holds floor((x+1)N/L) - floor(xN/L).
  static Configuration flat(std::size_t sites, std::int64_t particles);

  std::size_t size() const noexcept { return eta.size(); }
  Occupancy operator[](std::size_t x) const { return eta[x]; }
  Occupancy& operator[](std::size_t x) { return eta[x]; }
  std::int64_t total() const noexcept { return std::accumulate(eta.begin(), eta.end(), std::int64_t{0}); }
  Occupancy max() const noexcept;

  friend bool operator==(const Configuration&, const Configuration&) = default;
};

inline Configuration Configuration::flat(std::size_t sites, std::int64_t particles) {
  Configuration c = empty(sites);
  const auto L = static_cast<std::int64_t>(sites);
  for (std::int64_t x = 0; x < L; ++x) {
    c.eta[static_cast<std::size_t>(x)] = static_cast<Occupancy>((x + 1) * particles / L - x * particles / L);
  }
  return c;
}

inline Occupancy Configuration::max() const noexcept {
  Occupancy m = 0;
  for (auto v : eta) m = v > m ? v : m;
  return m;
}

}  // namespace zrlab
