#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "fapre/linalg.hpp"
#include "fapre/neural.hpp"

namespace fapre {

namespace detail {

inline std::string strip(std::string_view s) {
  std::string out;
  for (char c : s)
    if (c != ' ' && c != '\t') out.push_back(c);
  return out;
}

}  // namespace detail

/// Parses "1", "-2.5", "3i", "-i", "1+2i", "1e-3-4.5i".
inline Complex parse_complex(std::string_view text) {
  const std::string s = detail::strip(text);
  if (s.empty()) throw Error(ErrorKind::Parse, "empty matrix entry");
  if (s.back() != 'i') return {parse_double(s), 0.0};

  const std::string body = s.substr(0, s.size() - 1);
  std::size_t split = std::string::npos;
  for (std::size_t k = body.size(); k-- > 1;) {
    if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  const std::string re = split == std::string::npos ? "" : body.substr(0, split);
  std::string im = split == std::string::npos ? body : body.substr(split);
  if (im.empty() || im == "+") im = "1";
  if (im == "-") im = "-1";
  return {re.empty() ? 0.0 : parse_double(re), parse_double(im)};
}

/// Row-major literal, rows separated by ';' and entries by ','.
inline ComplexMatrix parse_matrix(std::string_view text) {
  std::vector<std::vector<Complex>> rows;
  std::string_view rest = text;
  while (true) {
    const auto semi = rest.find(';');
    std::string_view row = rest.substr(0, semi);
    std::vector<Complex> entries;
    while (true) {
      const auto comma = row.find(',');
      entries.push_back(parse_complex(row.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      row.remove_prefix(comma + 1);
    }
    if (!rows.empty() && entries.size() != rows.front().size())
      throw Error(ErrorKind::Parse, "ragged matrix literal");
    rows.push_back(std::move(entries));
    if (semi == std::string_view::npos) break;
    rest.remove_prefix(semi + 1);
  }
  ComplexMatrix a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  if (!all_finite(a)) throw Error(ErrorKind::Parse, "non-finite matrix entry");
  return a;
}

/// "start:step:stop" (inclusive) or a comma list.
inline std::vector<double> parse_grid(std::string_view text) {
  const std::string s = detail::strip(text);
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::size_t pos = 0;
    while (true) {
      const auto colon = s.find(':', pos);
      parts.push_back(parse_double(s.substr(pos, colon - pos)));
      if (colon == std::string::npos) break;
      pos = colon + 1;
    }
    if (parts.size() != 3 || !(parts[1] > 0.0) || parts[2] < parts[0])
      throw Error(ErrorKind::Parse, "grid must be start:step:stop with step > 0");
    const auto n = static_cast<long>(std::floor((parts[2] - parts[0]) / parts[1] + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(parts[0] + static_cast<double>(i) * parts[1]);
  } else {
    std::size_t pos = 0;
    while (true) {
      const auto comma = s.find(',', pos);
      out.push_back(parse_double(s.substr(pos, comma - pos)));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  return out;
}

}  // namespace fapre
