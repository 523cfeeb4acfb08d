#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "fapre/linalg.hpp"

namespace fapre {

/// Unit-average-energy, zero-mean symbol alphabet.
struct Constellation {
  std::string name;
  std::vector<Complex> points;

  std::size_t size() const { return points.size(); }
  unsigned bits_per_symbol() const {
    unsigned b = 0;
    while ((std::size_t{1} << b) < points.size()) ++b;
    return b;
  }
};

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Gray mapping of two bits onto {-3,-1,+1,+3}.
inline double gray_pam4(unsigned bits) {
  static constexpr double levels[4] = {-3.0, -1.0, 3.0, 1.0};
  return levels[bits & 3u];
}

}  // namespace detail

/// BPSK, QPSK or 16-QAM (Gray ordered). Names are case-insensitive;
/// "16qam" is accepted as an alias of "qam16".
inline Constellation make_constellation(std::string_view name) {
  const std::string key = detail::lower(name);
  if (key == "bpsk") return {"BPSK", {Complex(1.0, 0.0), Complex(-1.0, 0.0)}};
  if (key == "qpsk") {
    const double a = 1.0 / std::sqrt(2.0);
    return {"QPSK", {Complex(a, a), Complex(-a, a), Complex(a, -a), Complex(-a, -a)}};
  }
  if (key == "qam16" || key == "16qam") {
    const double scale = 1.0 / std::sqrt(10.0);
    Constellation c{"QAM16", {}};
    c.points.reserve(16);
    for (unsigned idx = 0; idx < 16; ++idx)
      c.points.emplace_back(scale * detail::gray_pam4(idx >> 2), scale * detail::gray_pam4(idx));
    return c;
  }
  throw Error(ErrorKind::UnknownConstellation, std::string(name));
}

}  // namespace fapre
