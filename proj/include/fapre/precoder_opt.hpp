#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "fapre/capacity.hpp"

namespace fapre {

struct OptimConfig {
  std::size_t max_outer_iters = 60;        // T_OL
  std::size_t max_line_search_iters = 20;  // T_BLS
  double shrink = 0.5;
  double sufficient_increase = 1e-4;
  double initial_step = 1.0;
  double tolerance_bits = 1e-3;
  std::size_t noise_samples = kDefaultNoiseSamples;
  std::uint64_t seed = 1;

  void validate() const {
    if (max_outer_iters < 1 || max_line_search_iters < 1 || noise_samples < 1)
      throw Error(ErrorKind::InvalidConfig, "iteration and sample counts must be >= 1");
    if (!(shrink > 0.0 && shrink < 1.0)) throw Error(ErrorKind::InvalidConfig, "shrink not in (0,1)");
    if (!(sufficient_increase > 0.0 && sufficient_increase < 1.0))
      throw Error(ErrorKind::InvalidConfig, "sufficient increase not in (0,1)");
    if (!(initial_step > 0.0)) throw Error(ErrorKind::InvalidConfig, "initial step must be > 0");
    if (!(tolerance_bits >= 0.0)) throw Error(ErrorKind::InvalidConfig, "negative tolerance");
  }
};

struct OptimStep {
  double mi_bits;
  double step;           // accepted step, 0 for the starting point
  double gradient_norm;  // Frobenius norm of H^H H G E at the iterate
  double power;          // tr(G^H G) of the iterate
};

struct OptimTrace {
  std::vector<OptimStep> steps;
  bool line_search_exhausted = false;
  bool converged = false;
};

struct OptimResult {
  Precoder precoder;
  OptimTrace trace;
  MiEstimate initial;  // MI of the water-filling start
  MiEstimate final;
};

inline Precoder identity_precoder(Eigen::Index m) {
  if (m < 1) throw Error(ErrorKind::InvalidConfig, "M must be >= 1");
  return Precoder(ComplexMatrix::Identity(m, m));
}

/// Unitary rotated DFT, Q_jk = exp(-2 pi i j k / M) exp(i pi k / M) / sqrt(M).
/// For M = 2 each row carries x_1 +- i x_2, a QPSK-like superposition.
inline ComplexMatrix spreading_matrix(Eigen::Index m) {
  ComplexMatrix q(m, m);
  const double md = static_cast<double>(m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index k = 0; k < m; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(j * k) / md +
                           std::numbers::pi * static_cast<double>(k) / md;
      q(j, k) = std::polar(1.0 / std::sqrt(md), angle);
    }
  return q;
}

namespace detail {

struct AscentRun {
  Precoder precoder;
  OptimTrace trace;
  MiEstimate final;
};

// Projected gradient ascent from `start` on a fixed noise block.
inline AscentRun ascend(const ChannelMatrix& h, const Constellation& s, const OptimConfig& cfg,
                        const ComplexMatrix& noise, const Precoder& start) {
  Precoder g = start;
  MiAndMmse current = mi_and_mmse(h, g, s, noise);
  OptimTrace trace;
  ComplexMatrix direction = mi_gradient(h, g, current.mmse);
  trace.steps.push_back({current.mi.bits, 0.0, direction.norm(), power(g.matrix())});

  for (std::size_t iter = 0; iter < cfg.max_outer_iters; ++iter) {
    if (!all_finite(direction)) throw Error(ErrorKind::NonFiniteInput, "gradient");
    const double slope = directional_derivative(direction, direction);
    if (slope == 0.0) {
      trace.converged = true;
      break;
    }
    double step = cfg.initial_step;
    bool accepted = false;
    Precoder candidate = g;
    MiEstimate candidate_mi;
    for (std::size_t ls = 0; ls < cfg.max_line_search_iters; ++ls, step *= cfg.shrink) {
      const ComplexMatrix trial = g.matrix() + step * direction;
      if (power(trial) == 0.0) continue;
      candidate = normalize_power(trial);
      candidate_mi = mi_finite_alphabet(h, candidate, s, noise);
      const double gain_nats = (candidate_mi.bits - current.mi.bits) * std::numbers::ln2;
      if (gain_nats >= cfg.sufficient_increase * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      trace.line_search_exhausted = true;
      break;
    }
    const double improvement = candidate_mi.bits - current.mi.bits;
    g = candidate;
    current = mi_and_mmse(h, g, s, noise);
    direction = mi_gradient(h, g, current.mmse);
    trace.steps.push_back({current.mi.bits, step, direction.norm(), power(g.matrix())});
    if (improvement < cfg.tolerance_bits) {
      trace.converged = true;
      break;
    }
  }
  return {g, std::move(trace), current.mi};
}

}  // namespace detail

/// Finite-alphabet MI maximization by projected gradient ascent.
///
/// Each outer iteration takes the MMSE-based ascent direction D = H^H H G E
/// and backtracks t <- shrink * t until normalize_power(G + t D) raises MI by
/// at least c * t * <D, D>. Every MI value is computed on one noise block
/// drawn once from cfg.seed, so each accepted sequence never decreases.
///
/// Precoders of the form V_H diag(.) are stationary for stream mixing (E stays
/// diagonal), so G_WF alone cannot leave that family. The ascent is run from
/// G_WF, G_WF Q and sqrt(M / r) V_H Q (Q = spreading_matrix) and the best end
/// point wins; ties go to the G_WF run. The result never falls below G_WF.
inline OptimResult optimize_precoder(const ChannelMatrix& h, const Constellation& s,
                                     const OptimConfig& cfg) {
  cfg.validate();
  symbol_vectors(s, h.tx());  // alphabet guard before any work

  NoiseSampler sampler(cfg.seed);
  const ComplexMatrix noise = sampler.draw(h.rx(), static_cast<Eigen::Index>(cfg.noise_samples));

  const Eigen::Index m = h.tx();
  const Precoder wf = wf_precoder(h);
  const MiEstimate initial = mi_finite_alphabet(h, wf, s, noise);

  std::vector<Precoder> starts{wf};
  if (m > 1) {
    const ComplexMatrix q = spreading_matrix(m);
    starts.push_back(normalize_power(wf.matrix() * q));
    const Svd dec = svd(h.matrix());
    ComplexMatrix equal = dec.v;
    for (Eigen::Index j = dec.sigma.size(); j < m; ++j) equal.col(j).setZero();
    for (Eigen::Index j = 0; j < dec.sigma.size(); ++j)
      if (dec.sigma(j) == 0.0) equal.col(j).setZero();
    if (power(equal) > 0.0) starts.push_back(normalize_power(equal * q));
  }

  std::optional<detail::AscentRun> best;
  for (const Precoder& start : starts) {
    detail::AscentRun run = detail::ascend(h, s, cfg, noise, start);
    if (!best || run.final.bits > best->final.bits) best = std::move(run);
  }
  return {best->precoder, std::move(best->trace), initial, best->final};
}

}  // namespace fapre
