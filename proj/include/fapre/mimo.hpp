#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "fapre/linalg.hpp"

namespace fapre {

inline constexpr double kPowerTolerance = 1e-9;

/// N x M channel H together with its linear SNR.
class ChannelMatrix {
 public:
  ChannelMatrix(ComplexMatrix h, double snr = 0.0) : h_(std::move(h)), snr_(snr) {
    if (h_.rows() < 1 || h_.cols() < 1) throw Error(ErrorKind::DimensionMismatch, "empty channel");
    if (!all_finite(h_) || !std::isfinite(snr_)) throw Error(ErrorKind::NonFiniteInput, "channel");
    if (snr_ < 0.0) throw Error(ErrorKind::InvalidConfig, "negative snr");
  }

  const ComplexMatrix& matrix() const { return h_; }
  double snr() const { return snr_; }
  Eigen::Index rx() const { return h_.rows(); }
  Eigen::Index tx() const { return h_.cols(); }

 private:
  ComplexMatrix h_;
  double snr_;
};

/// Square M x M precoder with tr(G^H G) <= M.
class Precoder {
 public:
  explicit Precoder(ComplexMatrix g) : g_(std::move(g)) {
    if (g_.rows() != g_.cols() || g_.rows() < 1)
      throw Error(ErrorKind::DimensionMismatch, "precoder must be square");
    if (!all_finite(g_)) throw Error(ErrorKind::NonFiniteInput, "precoder");
    const double m = static_cast<double>(g_.rows());
    if (power(g_) > m * (1.0 + kPowerTolerance))
      throw Error(ErrorKind::InfeasiblePrecoder, "tr(G^H G) exceeds M");
  }

  const ComplexMatrix& matrix() const { return g_; }
  Eigen::Index size() const { return g_.rows(); }

 private:
  ComplexMatrix g_;
};

/// Scales G to tr(G^H G) = M.
inline Precoder normalize_power(const ComplexMatrix& g) {
  if (!all_finite(g)) throw Error(ErrorKind::NonFiniteInput, "precoder");
  const double p = power(g);
  if (p == 0.0) throw Error(ErrorKind::ZeroPrecoder, "cannot normalize");
  const double target = static_cast<double>(g.rows());
  if (p == target) return Precoder(g);
  return Precoder(g * std::sqrt(target / p));
}

inline Precoder normalize_power(const Precoder& g) { return normalize_power(g.matrix()); }

/// Capacity water-filling over channel gains (squared singular values):
/// p_m = (1/nu - 1/g_m)^+ with sum p_m = budget. Zero gains get zero power.
inline std::vector<double> water_fill(std::span<const double> gains, double budget) {
  if (!(budget > 0.0)) throw Error(ErrorKind::InvalidConfig, "budget must be positive");
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < gains.size(); ++i) {
    if (!std::isfinite(gains[i]) || gains[i] < 0.0) throw Error(ErrorKind::InvalidConfig, "bad gain");
    if (gains[i] > 0.0) order.push_back(i);
  }
  if (order.empty()) throw Error(ErrorKind::NoChannel, "all channel gains are zero");
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return gains[a] > gains[b]; });

  // Shrink the active set until the weakest active stream has positive power.
  std::size_t active = order.size();
  double level = 0.0;
  for (; active > 0; --active) {
    double inv_sum = 0.0;
    for (std::size_t k = 0; k < active; ++k) inv_sum += 1.0 / gains[order[k]];
    level = (budget + inv_sum) / static_cast<double>(active);
    if (level - 1.0 / gains[order[active - 1]] > 0.0) break;
  }

  std::vector<double> powers(gains.size(), 0.0);
  for (std::size_t k = 0; k < active; ++k) powers[order[k]] = level - 1.0 / gains[order[k]];
  return powers;
}

/// G_WF = V_H S_G; streams beyond min(M, N) get zero power.
inline Precoder wf_precoder(const ChannelMatrix& h) {
  const Eigen::Index m = h.tx();
  const Svd s = svd(h.matrix());
  std::vector<double> gains(static_cast<std::size_t>(m), 0.0);
  for (Eigen::Index i = 0; i < s.sigma.size(); ++i) gains[i] = s.sigma(i) * s.sigma(i);
  const std::vector<double> p = water_fill(gains, static_cast<double>(m));

  ComplexMatrix g = s.v;
  for (Eigen::Index j = 0; j < m; ++j) g.col(j) *= std::sqrt(p[j]);
  // Rounding in the water level can leave tr slightly off M.
  return normalize_power(g);
}

/// log2 det(I_N + H G G^H H^H), the Gaussian-input rate in bits.
inline double gaussian_mi(const ChannelMatrix& h, const Precoder& g) {
  if (h.tx() != g.size()) throw Error(ErrorKind::DimensionMismatch, "H and G");
  const ComplexMatrix hg = h.matrix() * g.matrix();
  const ComplexMatrix a = ComplexMatrix::Identity(h.rx(), h.rx()) + hg * hg.adjoint();
  Eigen::LLT<ComplexMatrix> llt(a);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i).real());
  return log_det / std::numbers::ln2;
}

/// H scaled so that tr(H H^H) / N = snr.
inline ChannelMatrix scale_to_snr(const ComplexMatrix& h, double snr) {
  const double p = power(h);
  if (p == 0.0) throw Error(ErrorKind::NoChannel, "cannot scale a zero channel");
  return ChannelMatrix(h * std::sqrt(snr * static_cast<double>(h.rows()) / p), snr);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace fapre
