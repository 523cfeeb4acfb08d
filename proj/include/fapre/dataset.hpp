#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "fapre/neural.hpp"
#include "fapre/precoder_opt.hpp"

namespace fapre {

/// N x M channel with i.i.d. CN(0, snr / M) entries, so E{tr H H^H} = snr * N.
inline ChannelMatrix gen_rayleigh_channel(Eigen::Index m, Eigen::Index n, double snr,
                                          std::uint64_t seed) {
  if (!(snr > 0.0)) throw Error(ErrorKind::InvalidConfig, "snr must be > 0");
  if (m < 1 || n < 1) throw Error(ErrorKind::InvalidConfig, "antenna counts must be >= 1");
  Rng rng(seed);
  const double scale = std::sqrt(snr / static_cast<double>(m));
  ComplexMatrix h(n, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i) h(i, j) = scale * rng.complex_normal();
  return ChannelMatrix(std::move(h), snr);
}

/// Default SNR grid: -10 dB to 20 dB in 2.5 dB steps.
inline std::vector<double> default_snr_grid_db() {
  std::vector<double> grid;
  for (int i = 0; i <= 12; ++i) grid.push_back(-10.0 + 2.5 * i);
  return grid;
}

struct DatasetHeader {
  Eigen::Index m = 2;
  Eigen::Index n = 2;
  std::string constellation = "BPSK";
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::vector<double> snr_grid_db;
};

struct ChannelSample {
  std::size_t index = 0;
  double snr_db = 0.0;
  ComplexMatrix h;
  ComplexMatrix g_wf;
  ComplexMatrix g_opt;
  double mi_wf = 0.0;
  double mi_opt = 0.0;
  double std_error = 0.0;  // of mi_wf on the labeling noise block; not persisted
  bool failed = false;
};

struct Dataset {
  DatasetHeader header;
  std::vector<ChannelSample> samples;
};

inline std::uint64_t sample_seed(std::uint64_t master, std::size_t index) {
  return derive_seed(master, index);
}

/// Regenerates record `index` of a dataset described by `header`.
inline ChannelSample label_sample(const DatasetHeader& header, std::size_t index,
                                  const OptimConfig& base) {
  if (header.snr_grid_db.empty()) throw Error(ErrorKind::InvalidConfig, "empty snr grid");
  const std::uint64_t seed = sample_seed(header.seed, index);
  Rng pick(derive_seed(seed, 0));
  const double snr_db = header.snr_grid_db[pick.index(header.snr_grid_db.size())];

  ChannelSample out;
  out.index = index;
  out.snr_db = snr_db;
  const ChannelMatrix h = gen_rayleigh_channel(header.m, header.n, db_to_linear(snr_db),
                                               derive_seed(seed, 1));
  out.h = h.matrix();
  const Precoder wf = wf_precoder(h);
  out.g_wf = wf.matrix();

  OptimConfig cfg = base;
  cfg.seed = derive_seed(seed, 2);
  const Constellation s = make_constellation(header.constellation);
  try {
    const OptimResult r = optimize_precoder(h, s, cfg);
    out.g_opt = r.precoder.matrix();
    out.mi_wf = r.initial.bits;
    out.mi_opt = r.final.bits;
    out.std_error = r.initial.std_error;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NonFiniteInput) throw;
    NoiseSampler sampler(cfg.seed);
    const MiEstimate mi = mi_finite_alphabet(h, wf, s, cfg.noise_samples, sampler);
    out.g_opt = out.g_wf;
    out.mi_wf = out.mi_opt = mi.bits;
    out.std_error = mi.std_error;
    out.failed = true;
  }
  return out;
}

// --- file format ------------------------------------------------------------

inline constexpr const char* kDatasetMagic = "FAPRE-DS v1";

namespace detail {

inline void write_entries(std::ostream& out, const ComplexMatrix& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) out << ' ' << format_double(a(i, j).real());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) out << ' ' << format_double(a(i, j).imag());
}

inline ComplexMatrix read_entries(const std::vector<std::string>& tok, std::size_t& pos,
                                  Eigen::Index rows, Eigen::Index cols) {
  ComplexMatrix a(rows, cols);
  const std::size_t n = static_cast<std::size_t>(rows * cols);
  for (std::size_t k = 0; k < n; ++k) {
    const auto i = static_cast<Eigen::Index>(k) % rows;
    const auto j = static_cast<Eigen::Index>(k) / rows;
    a(i, j) = Complex(parse_double(tok[pos + k]), parse_double(tok[pos + n + k]));
  }
  pos += 2 * n;
  return a;
}

inline std::string header_value(const std::string& field, const std::string& key) {
  if (field.rfind(key + "=", 0) != 0) throw Error(ErrorKind::Parse, "expected field " + key);
  return field.substr(key.size() + 1);
}

}  // namespace detail

inline void write_header(std::ostream& out, const DatasetHeader& h) {
  out << kDatasetMagic << " M=" << h.m << " N=" << h.n << " S=" << h.constellation
      << " count=" << h.count << " seed=" << h.seed << " grid=";
  for (std::size_t i = 0; i < h.snr_grid_db.size(); ++i)
    out << (i ? "," : "") << format_double(h.snr_grid_db[i]);
  out << '\n';
}

inline void write_record(std::ostream& out, const ChannelSample& s) {
  out << s.index << ' ' << format_double(s.snr_db);
  detail::write_entries(out, s.h);
  detail::write_entries(out, s.g_wf);
  detail::write_entries(out, s.g_opt);
  out << ' ' << format_double(s.mi_wf) << ' ' << format_double(s.mi_opt) << ' '
      << (s.failed ? 1 : 0) << '\n';
}

inline Dataset read_dataset(std::istream& in) {
  Dataset ds;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Parse, "empty dataset file");
  {
    std::istringstream ss(line);
    std::string magic, version, f_m, f_n, f_s, f_count, f_seed, f_grid;
    ss >> magic >> version >> f_m >> f_n >> f_s >> f_count >> f_seed >> f_grid;
    if (magic + " " + version != kDatasetMagic) throw Error(ErrorKind::Parse, "bad dataset magic");
    DatasetHeader& h = ds.header;
    h.m = static_cast<Eigen::Index>(std::stoll(detail::header_value(f_m, "M")));
    h.n = static_cast<Eigen::Index>(std::stoll(detail::header_value(f_n, "N")));
    h.constellation = detail::header_value(f_s, "S");
    h.count = static_cast<std::size_t>(std::stoull(detail::header_value(f_count, "count")));
    h.seed = std::stoull(detail::header_value(f_seed, "seed"));
    std::istringstream grid(detail::header_value(f_grid, "grid"));
    std::string tok;
    while (std::getline(grid, tok, ',')) h.snr_grid_db.push_back(parse_double(tok));
    if (h.m < 1 || h.n < 1) throw Error(ErrorKind::Parse, "bad dimensions");
  }
  const Eigen::Index m = ds.header.m;
  const Eigen::Index n = ds.header.n;
  const std::size_t expected = static_cast<std::size_t>(2 + 2 * n * m + 4 * m * m + 3);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    std::string t;
    while (ss >> t) tok.push_back(t);
    if (tok.size() != expected) throw Error(ErrorKind::Parse, "record has wrong column count");
    ChannelSample s;
    s.index = static_cast<std::size_t>(std::stoull(tok[0]));
    s.snr_db = parse_double(tok[1]);
    std::size_t pos = 2;
    s.h = detail::read_entries(tok, pos, n, m);
    s.g_wf = detail::read_entries(tok, pos, m, m);
    s.g_opt = detail::read_entries(tok, pos, m, m);
    s.mi_wf = parse_double(tok[pos++]);
    s.mi_opt = parse_double(tok[pos++]);
    s.failed = tok[pos] == "1";
    // Feasibility check on reload.
    Precoder(s.g_wf);
    Precoder(s.g_opt);
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.size() != ds.header.count)
    throw Error(ErrorKind::Parse, "record count does not match header");
  return ds;
}

inline Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  return read_dataset(in);
}

/// Labels `header.count` samples (in parallel when threads > 1) and returns
/// them in index order.
inline std::vector<ChannelSample> label_samples(const DatasetHeader& header, const OptimConfig& cfg,
                                                unsigned threads = 0) {
  if (header.count < 1) throw Error(ErrorKind::InvalidConfig, "count must be >= 1");
  cfg.validate();
  make_constellation(header.constellation);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, header.count));

  std::vector<ChannelSample> samples(header.count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto worker = [&] {
    for (std::size_t i = next++; i < header.count; i = next++) {
      try {
        samples[i] = label_sample(header, i, cfg);
      } catch (...) {
        std::lock_guard lock(failure_lock);
        if (!failure) failure = std::current_exception();
        next = header.count;
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
  return samples;
}

/// Labels and writes a dataset file; records appear in index order.
inline DatasetHeader build_dataset(const DatasetHeader& header, const OptimConfig& cfg,
                                   const std::string& out_path, unsigned threads = 0) {
  const auto samples = label_samples(header, cfg, threads);
  std::ofstream out(out_path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + out_path);
  DatasetHeader written = header;
  written.constellation = make_constellation(header.constellation).name;
  write_header(out, written);
  for (const auto& s : samples) write_record(out, s);
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write failed for " + out_path);
  return written;
}

/// Seeded permutation, then the first round(fraction * n) items go to train.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_train_test(const std::vector<T>& items,
                                                           double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw Error(ErrorKind::InvalidConfig, "fraction not in (0,1)");
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(items.size())));
  std::pair<std::vector<T>, std::vector<T>> out;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < n_train ? out.first : out.second).push_back(items[order[i]]);
  return out;
}

/// (vec G_WF, vec G_opt / sqrt(M)) pairs; failed records are skipped.
inline std::vector<Sample> training_samples(const std::vector<ChannelSample>& records) {
  std::vector<Sample> out;
  for (const auto& r : records) {
    if (r.failed) continue;
    const Eigen::Index m = r.g_wf.rows();
    out.push_back({vectorize_precoder(r.g_wf), vectorize_precoder(r.g_opt) * target_scale(m)});
  }
  return out;
}

}  // namespace fapre
