#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fapre/mimo.hpp"
#include "fapre/random.hpp"

namespace fapre {

enum class Activation { Tanh };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

/// Layer widths L_0..L_{P+1}; activation of layer p is activations[p - 1].
struct LayerSpec {
  std::vector<std::size_t> sizes;
  std::vector<Activation> activations;

  std::size_t layers() const { return sizes.size() - 1; }

  void validate() const {
    if (sizes.size() < 3) throw Error(ErrorKind::InvalidConfig, "need at least one hidden layer");
    for (auto s : sizes)
      if (s == 0) throw Error(ErrorKind::InvalidConfig, "layer width must be > 0");
    if (activations.size() != layers())
      throw Error(ErrorKind::InvalidConfig, "one activation per weight layer");
  }
};

/// 2M^2 -> 4M^2 x hidden -> 2M^2, tanh everywhere.
inline LayerSpec precoder_layer_spec(std::size_t m, std::size_t hidden_layers = 2) {
  const std::size_t io = 2 * m * m;
  LayerSpec spec;
  spec.sizes.push_back(io);
  for (std::size_t p = 0; p < hidden_layers; ++p) spec.sizes.push_back(2 * io);
  spec.sizes.push_back(io);
  spec.activations.assign(spec.layers(), Activation::Tanh);
  spec.validate();
  return spec;
}

/// Fully-connected network; weights[p] is L_p x L_{p+1} and the layer
/// computes tanh(W^T a + b).
struct MlpModel {
  LayerSpec spec;
  std::vector<RealMatrix> weights;
  std::vector<RealVector> biases;
};

inline MlpModel zero_model(const LayerSpec& spec) {
  spec.validate();
  MlpModel model{spec, {}, {}};
  for (std::size_t p = 0; p < spec.layers(); ++p) {
    const auto rows = static_cast<Eigen::Index>(spec.sizes[p]);
    const auto cols = static_cast<Eigen::Index>(spec.sizes[p + 1]);
    model.weights.push_back(RealMatrix::Zero(rows, cols));
    model.biases.push_back(RealVector::Zero(cols));
  }
  return model;
}

/// Xavier/Glorot uniform weights on +-sqrt(6 / (fan_in + fan_out)), zero biases.
inline MlpModel init_xavier(const LayerSpec& spec, std::uint64_t seed) {
  MlpModel model = zero_model(spec);
  Rng rng(seed);
  for (std::size_t p = 0; p < spec.layers(); ++p) {
    const double bound = std::sqrt(6.0 / static_cast<double>(spec.sizes[p] + spec.sizes[p + 1]));
    RealMatrix& w = model.weights[p];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-bound, bound);
  }
  return model;
}

namespace detail {

inline RealVector activate(Activation a, RealVector z) {
  switch (a) {
    case Activation::Tanh: return z.array().tanh().matrix();
  }
  return z;
}

// d activation / dz expressed through the activation output.
inline RealVector activation_slope(Activation a, const RealVector& out) {
  switch (a) {
    case Activation::Tanh: return (1.0 - out.array().square()).matrix();
  }
  return RealVector::Ones(out.size());
}

inline void check_input(const MlpModel& model, const RealVector& input) {
  if (static_cast<std::size_t>(input.size()) != model.spec.sizes.front())
    throw Error(ErrorKind::DimensionMismatch, "input length != L_0");
}

}  // namespace detail

/// All layer outputs a_0..a_{P+1}.
inline std::vector<RealVector> forward_all(const MlpModel& model, const RealVector& input) {
  detail::check_input(model, input);
  std::vector<RealVector> a;
  a.reserve(model.weights.size() + 1);
  a.push_back(input);
  for (std::size_t p = 0; p < model.weights.size(); ++p) {
    RealVector z = model.weights[p].transpose() * a.back() + model.biases[p];
    a.push_back(detail::activate(model.spec.activations[p], std::move(z)));
  }
  return a;
}

inline RealVector forward(const MlpModel& model, const RealVector& input) {
  return std::move(forward_all(model, input).back());
}

struct Gradients {
  std::vector<RealMatrix> weights;
  std::vector<RealVector> biases;
};

inline Gradients zero_gradients(const MlpModel& model) {
  Gradients g;
  for (std::size_t p = 0; p < model.weights.size(); ++p) {
    g.weights.push_back(RealMatrix::Zero(model.weights[p].rows(), model.weights[p].cols()));
    g.biases.push_back(RealVector::Zero(model.biases[p].size()));
  }
  return g;
}

/// Loss ||o - target||^2 for one sample; its gradient is added into `acc`.
inline double backprop(const MlpModel& model, const RealVector& input, const RealVector& target,
                       Gradients& acc) {
  const std::vector<RealVector> a = forward_all(model, input);
  if (target.size() != a.back().size()) throw Error(ErrorKind::DimensionMismatch, "target length");
  const RealVector residual = a.back() - target;
  RealVector upstream = 2.0 * residual;
  for (std::size_t p = model.weights.size(); p-- > 0;) {
    const RealVector delta =
        upstream.cwiseProduct(detail::activation_slope(model.spec.activations[p], a[p + 1]));
    acc.weights[p].noalias() += a[p] * delta.transpose();
    acc.biases[p] += delta;
    if (p > 0) upstream = model.weights[p] * delta;
  }
  return residual.squaredNorm();
}

struct TrainConfig {
  std::size_t epochs = 1000;
  std::size_t batch_size = 10;
  double learning_rate = 0.005;
  double train_fraction = 0.7;
  std::uint64_t seed = 1;

  void validate() const {
    if (epochs < 1 || batch_size < 1) throw Error(ErrorKind::InvalidConfig, "counts must be >= 1");
    if (!(learning_rate > 0.0)) throw Error(ErrorKind::InvalidConfig, "learning rate must be > 0");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
      throw Error(ErrorKind::InvalidConfig, "train fraction not in (0,1)");
  }
};

struct Sample {
  RealVector input;
  RealVector target;
};

struct TrainResult {
  MlpModel model;
  /// Mean per-sample loss of each epoch, accumulated during the epoch.
  std::vector<double> loss_history;
};

/// Mean of ||forward(input) - target||^2 over the samples.
inline double mean_loss(const MlpModel& model, const std::vector<Sample>& data) {
  if (data.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : data) total += (forward(model, s.input) - s.target).squaredNorm();
  return total / static_cast<double>(data.size());
}

/// Plain mini-batch SGD from a Xavier start. Batch gradient is the batch mean;
/// the last short batch is kept. Single-threaded and deterministic in seed.
inline TrainResult train_sgd(const LayerSpec& spec, const std::vector<Sample>& data,
                             const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw Error(ErrorKind::EmptyDataset, "nothing to train on");
  for (const auto& s : data)
    if (static_cast<std::size_t>(s.input.size()) != spec.sizes.front() ||
        static_cast<std::size_t>(s.target.size()) != spec.sizes.back())
      throw Error(ErrorKind::DimensionMismatch, "sample length vs layer spec");

  TrainResult result{init_xavier(spec, cfg.seed), {}};
  MlpModel& model = result.model;
  Rng shuffler(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  Gradients grad = zero_gradients(model);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffler.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      for (std::size_t p = 0; p < grad.weights.size(); ++p) {
        grad.weights[p].setZero();
        grad.biases[p].setZero();
      }
      for (std::size_t i = start; i < stop; ++i)
        epoch_loss += backprop(model, data[order[i]].input, data[order[i]].target, grad);
      const double scale = cfg.learning_rate / static_cast<double>(stop - start);
      for (std::size_t p = 0; p < grad.weights.size(); ++p) {
        model.weights[p] -= scale * grad.weights[p];
        model.biases[p] -= scale * grad.biases[p];
      }
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  return result;
}

// --- precoder <-> feature vector -------------------------------------------

/// [vec(Re G); vec(Im G)] with column-major vec.
inline RealVector vectorize_precoder(const ComplexMatrix& g) {
  const Eigen::Index n = g.size();
  RealVector out(2 * n);
  for (Eigen::Index j = 0, idx = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i, ++idx) {
      out(idx) = g(i, j).real();
      out(n + idx) = g(i, j).imag();
    }
  return out;
}

inline RealVector vectorize_precoder(const Precoder& g) { return vectorize_precoder(g.matrix()); }

/// Inverse of vectorize_precoder. Returns the raw matrix; no power check.
inline ComplexMatrix devectorize_matrix(const RealVector& o, Eigen::Index m) {
  if (m < 1 || o.size() != 2 * m * m) throw Error(ErrorKind::BadLength, "expected 2M^2 entries");
  ComplexMatrix g(m, m);
  const Eigen::Index n = m * m;
  for (Eigen::Index j = 0, idx = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < m; ++i, ++idx) g(i, j) = Complex(o(idx), o(n + idx));
  return g;
}

inline Precoder devectorize_precoder(const RealVector& o, Eigen::Index m) {
  return Precoder(devectorize_matrix(o, m));
}

/// Targets are divided by this before training so tanh can reach them.
inline double target_scale(Eigen::Index m) { return 1.0 / std::sqrt(static_cast<double>(m)); }

/// WF precoder -> network -> reshape -> rescale to full power.
inline Precoder infer_precoder(const MlpModel& model, const ChannelMatrix& h) {
  const Eigen::Index m = h.tx();
  if (model.spec.sizes.front() != static_cast<std::size_t>(2 * m * m) ||
      model.spec.sizes.back() != static_cast<std::size_t>(2 * m * m))
    throw Error(ErrorKind::DimensionMismatch, "model does not match M");
  const RealVector out = forward(model, vectorize_precoder(wf_precoder(h)));
  return normalize_power(devectorize_matrix(out / target_scale(m), m));
}

// --- model file --------------------------------------------------------------

inline constexpr const char* kModelMagic = "FAPRE-MLP v1";

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& token) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = first + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw Error(ErrorKind::Parse, "bad number '" + token + "'");
  return v;
}

inline void save_model(const MlpModel& model, std::ostream& out) {
  out << kModelMagic << '\n';
  for (std::size_t i = 0; i < model.spec.sizes.size(); ++i)
    out << (i ? " " : "") << model.spec.sizes[i];
  out << '\n' << to_string(model.spec.activations.front()) << '\n';
  for (std::size_t p = 0; p < model.weights.size(); ++p) {
    const RealMatrix& w = model.weights[p];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) out << (j ? " " : "") << format_double(w(i, j));
      out << '\n';
    }
    const RealVector& b = model.biases[p];
    for (Eigen::Index j = 0; j < b.size(); ++j) out << (j ? " " : "") << format_double(b(j));
    out << '\n';
  }
}

inline MlpModel load_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kModelMagic)
    throw Error(ErrorKind::Parse, "missing model header");
  if (!std::getline(in, line)) throw Error(ErrorKind::Parse, "missing layer sizes");
  LayerSpec spec;
  {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) spec.sizes.push_back(static_cast<std::size_t>(parse_double(tok)));
  }
  if (!std::getline(in, line)) throw Error(ErrorKind::Parse, "missing activation");
  if (line != "tanh") throw Error(ErrorKind::Parse, "unknown activation '" + line + "'");
  if (spec.sizes.size() < 3) throw Error(ErrorKind::Parse, "too few layers");
  spec.activations.assign(spec.sizes.size() - 1, Activation::Tanh);
  spec.validate();

  MlpModel model = zero_model(spec);
  auto read_row = [&](Eigen::Index expected) {
    if (!std::getline(in, line)) throw Error(ErrorKind::Parse, "truncated model");
    std::istringstream ss(line);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) row.push_back(parse_double(tok));
    if (static_cast<Eigen::Index>(row.size()) != expected)
      throw Error(ErrorKind::Parse, "row length mismatch");
    return row;
  };
  for (std::size_t p = 0; p < spec.layers(); ++p) {
    RealMatrix& w = model.weights[p];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      const auto row = read_row(w.cols());
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = row[static_cast<std::size_t>(j)];
    }
    const auto row = read_row(model.biases[p].size());
    for (Eigen::Index j = 0; j < model.biases[p].size(); ++j)
      model.biases[p](j) = row[static_cast<std::size_t>(j)];
  }
  return model;
}

}  // namespace fapre
