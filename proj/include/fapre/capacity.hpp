#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "fapre/constellation.hpp"
#include "fapre/mimo.hpp"
#include "fapre/random.hpp"

namespace fapre {

/// Largest |S|^M the exact symbol enumeration will accept.
inline constexpr std::uint64_t kMaxSymbolVectors = std::uint64_t{1} << 16;
inline constexpr std::size_t kDefaultNoiseSamples = 500;

struct MiEstimate {
  double bits = 0.0;
  double std_error = 0.0;
  std::size_t noise_samples = 0;
};

struct MmseMatrix {
  ComplexMatrix matrix;
  /// Largest per-entry Monte-Carlo standard error.
  double std_error = 0.0;
};

/// All |S|^M symbol vectors as the columns of an M x |S|^M matrix. Stream 0
/// is the fastest-varying digit.
inline ComplexMatrix symbol_vectors(const Constellation& s, Eigen::Index m) {
  const std::uint64_t q = s.size();
  std::uint64_t count = 1;
  for (Eigen::Index i = 0; i < m; ++i) {
    count *= q;
    if (count > kMaxSymbolVectors)
      throw Error(ErrorKind::AlphabetTooLarge, "|S|^M exceeds 2^16");
  }
  ComplexMatrix x(m, static_cast<Eigen::Index>(count));
  for (std::uint64_t k = 0; k < count; ++k) {
    std::uint64_t rest = k;
    for (Eigen::Index i = 0; i < m; ++i) {
      x(i, static_cast<Eigen::Index>(k)) = s.points[rest % q];
      rest /= q;
    }
  }
  return x;
}

namespace detail {

struct Accumulated {
  MiEstimate mi;
  MmseMatrix mmse;
};

// Shared Monte-Carlo kernel. For every noise column n and transmitted vector
// x_m the metric t_k = -||HG(x_m - x_k) + n||^2 + ||n||^2 is formed for all k;
// the MI sample is -log mean_k exp(t_k) and the posterior weights are
// softmax(t). Sums run sequentially over noise columns, then symbols.
template <bool kWithMmse>
Accumulated accumulate(const ChannelMatrix& h, const Precoder& g, const Constellation& s,
                       const ComplexMatrix& noise) {
  if (h.tx() != g.size()) throw Error(ErrorKind::DimensionMismatch, "H and G");
  if (noise.cols() < 1) throw Error(ErrorKind::ZeroSampleCount, "T_n must be >= 1");
  if (noise.rows() != h.rx()) throw Error(ErrorKind::DimensionMismatch, "noise rows != N");

  const Eigen::Index m_tx = h.tx();
  const Eigen::Index n_rx = h.rx();
  const ComplexMatrix x = symbol_vectors(s, m_tx);
  const Eigen::Index k_count = x.cols();
  const ComplexMatrix r = h.matrix() * g.matrix() * x;
  const Eigen::Index t_count = noise.cols();

  std::vector<double> metric(static_cast<std::size_t>(k_count));
  std::vector<double> weight(static_cast<std::size_t>(k_count));
  ComplexVector y(n_rx);
  ComplexVector err(m_tx);
  ComplexMatrix e_draw(m_tx, m_tx);
  ComplexMatrix e_sum = ComplexMatrix::Zero(m_tx, m_tx);
  RealMatrix e_sq = RealMatrix::Zero(m_tx, m_tx);

  const double log_k = std::log(static_cast<double>(k_count));
  double sum = 0.0;
  double sum_sq = 0.0;

  for (Eigen::Index t = 0; t < t_count; ++t) {
    const Complex* nz = noise.col(t).data();
    double noise_sq = 0.0;
    for (Eigen::Index i = 0; i < n_rx; ++i) noise_sq += std::norm(nz[i]);
    double draw = 0.0;
    if constexpr (kWithMmse) e_draw.setZero();

    for (Eigen::Index m = 0; m < k_count; ++m) {
      const Complex* rm = r.col(m).data();
      for (Eigen::Index i = 0; i < n_rx; ++i) y(i) = rm[i] + nz[i];
      double peak = -std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < k_count; ++k) {
        const Complex* rk = r.col(k).data();
        double d = 0.0;
        for (Eigen::Index i = 0; i < n_rx; ++i) d += std::norm(y(i) - rk[i]);
        const double v = noise_sq - d;
        metric[k] = v;
        peak = std::max(peak, v);
      }
      double z = 0.0;
      for (Eigen::Index k = 0; k < k_count; ++k) {
        const double w = std::exp(metric[k] - peak);
        if constexpr (kWithMmse) weight[k] = w;
        z += w;
      }
      // log of mean_k exp(metric_k), stabilized by the peak.
      draw -= peak + std::log(z) - log_k;

      if constexpr (kWithMmse) {
        err = x.col(m);
        for (Eigen::Index k = 0; k < k_count; ++k) err.noalias() -= (weight[k] / z) * x.col(k);
        e_draw.noalias() += err * err.adjoint();
      }
    }
    draw /= static_cast<double>(k_count);
    sum += draw;
    sum_sq += draw * draw;
    if constexpr (kWithMmse) {
      e_draw /= static_cast<double>(k_count);
      e_sum += e_draw;
      e_sq += e_draw.cwiseAbs2();
    }
  }

  const double tn = static_cast<double>(t_count);
  const double mean = sum / tn;
  const double var = t_count > 1 ? std::max(0.0, (sum_sq - tn * mean * mean) / (tn - 1.0)) : 0.0;
  const double cap = static_cast<double>(m_tx) * std::log2(static_cast<double>(s.size()));

  Accumulated out;
  out.mi.bits = std::clamp(mean / std::numbers::ln2, 0.0, cap);
  out.mi.std_error = std::sqrt(var / tn) / std::numbers::ln2;
  out.mi.noise_samples = static_cast<std::size_t>(t_count);

  if constexpr (kWithMmse) {
    ComplexMatrix e = e_sum / tn;
    out.mmse.matrix = 0.5 * (e + e.adjoint());
    double worst = 0.0;
    if (t_count > 1) {
      for (Eigen::Index j = 0; j < m_tx; ++j)
        for (Eigen::Index i = 0; i < m_tx; ++i) {
          const double v = std::max(0.0, (e_sq(i, j) - tn * std::norm(e(i, j))) / (tn - 1.0));
          worst = std::max(worst, std::sqrt(v / tn));
        }
    }
    out.mmse.std_error = worst;
  }
  return out;
}

}  // namespace detail

/// Constellation-constrained MI with the noise expectation replaced by the
/// average over the columns of `noise` (N x T_n). The same noise columns are
/// reused for every transmitted symbol vector.
inline MiEstimate mi_finite_alphabet(const ChannelMatrix& h, const Precoder& g,
                                     const Constellation& s, const ComplexMatrix& noise) {
  return detail::accumulate<false>(h, g, s, noise).mi;
}

inline MiEstimate mi_finite_alphabet(const ChannelMatrix& h, const Precoder& g,
                                     const Constellation& s, std::size_t noise_samples,
                                     NoiseSampler& sampler) {
  if (noise_samples == 0) throw Error(ErrorKind::ZeroSampleCount, "T_n must be >= 1");
  return mi_finite_alphabet(h, g, s, sampler.draw(h.rx(), static_cast<Eigen::Index>(noise_samples)));
}

/// MMSE matrix E{(x - E{x|y})(x - E{x|y})^H}, Hermitian-symmetrized.
inline MmseMatrix mmse_matrix(const ChannelMatrix& h, const Precoder& g, const Constellation& s,
                              const ComplexMatrix& noise) {
  return detail::accumulate<true>(h, g, s, noise).mmse;
}

inline MmseMatrix mmse_matrix(const ChannelMatrix& h, const Precoder& g, const Constellation& s,
                              std::size_t noise_samples, NoiseSampler& sampler) {
  if (noise_samples == 0) throw Error(ErrorKind::ZeroSampleCount, "T_n must be >= 1");
  return mmse_matrix(h, g, s, sampler.draw(h.rx(), static_cast<Eigen::Index>(noise_samples)));
}

struct MiAndMmse {
  MiEstimate mi;
  MmseMatrix mmse;
};

/// MI and MMSE matrix from one pass over the same noise block.
inline MiAndMmse mi_and_mmse(const ChannelMatrix& h, const Precoder& g, const Constellation& s,
                             const ComplexMatrix& noise) {
  auto acc = detail::accumulate<true>(h, g, s, noise);
  return {acc.mi, std::move(acc.mmse)};
}

/// H^H H G E: gradient of MI (nats) with respect to conj(G). The real
/// directional derivative along dG is 2 Re tr(D^H dG), see
/// directional_derivative().
inline ComplexMatrix mi_gradient(const ChannelMatrix& h, const Precoder& g, const MmseMatrix& e) {
  if (h.tx() != g.size() || e.matrix.rows() != g.size() || e.matrix.cols() != g.size())
    throw Error(ErrorKind::DimensionMismatch, "gradient operands");
  return h.matrix().adjoint() * h.matrix() * g.matrix() * e.matrix;
}

inline double directional_derivative(const ComplexMatrix& gradient, const ComplexMatrix& direction) {
  return 2.0 * real_inner(gradient, direction);
}

/// Nodes and weights of the n-point Gauss-Hermite rule for weight exp(-x^2).
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussHermite gauss_hermite(std::size_t n) {
  if (n == 0) throw Error(ErrorKind::InvalidConfig, "quadrature needs nodes");
  // Golub-Welsch for starting points, then Newton on the orthonormal recurrence.
  RealMatrix jacobi = RealMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 1; k < n; ++k) {
    const double b = std::sqrt(static_cast<double>(k) / 2.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<RealMatrix> eig(jacobi);
  GaussHermite rule;
  const double pi_quarter = std::pow(std::numbers::pi, -0.25);
  for (std::size_t i = 0; i < n; ++i) {
    double z = eig.eigenvalues()(static_cast<Eigen::Index>(i));
    double deriv = 0.0;
    for (int iter = 0; iter < 10; ++iter) {
      double p1 = pi_quarter;
      double p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double jd = static_cast<double>(j);
        p1 = z * std::sqrt(2.0 / jd) * p2 - std::sqrt((jd - 1.0) / jd) * p3;
      }
      deriv = std::sqrt(2.0 * static_cast<double>(n)) * p2;
      const double step = p1 / deriv;
      z -= step;
      if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    rule.nodes.push_back(z);
    rule.weights.push_back(2.0 / (deriv * deriv));
  }
  return rule;
}

/// Scalar (M = N = 1) MI in bits by tensor-product Gauss-Hermite quadrature
/// over the real and imaginary noise parts. Deterministic test oracle.
inline double mi_scalar_quadrature(Complex h, Complex g, const Constellation& s, std::size_t nodes) {
  if (nodes < 8) throw Error(ErrorKind::InvalidConfig, "need at least 8 nodes");
  const Complex a = h * g;
  if (a == Complex(0.0, 0.0)) return 0.0;
  const GaussHermite rule = gauss_hermite(nodes);
  const std::size_t q = s.size();
  const double log_q = std::log(static_cast<double>(q));
  std::vector<double> metric(q);
  double total = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t j = 0; j < nodes; ++j) {
      const Complex n(rule.nodes[i], rule.nodes[j]);
      const double w = rule.weights[i] * rule.weights[j] / std::numbers::pi;
      double inner = 0.0;
      for (std::size_t m = 0; m < q; ++m) {
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < q; ++k) {
          metric[k] = std::norm(n) - std::norm(a * (s.points[m] - s.points[k]) + n);
          peak = std::max(peak, metric[k]);
        }
        double z = 0.0;
        for (std::size_t k = 0; k < q; ++k) z += std::exp(metric[k] - peak);
        inner += peak + std::log(z) - log_q;
      }
      total += w * inner / static_cast<double>(q);
    }
  }
  return std::max(0.0, -total) / std::numbers::ln2;
}

}  // namespace fapre
