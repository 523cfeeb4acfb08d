// fapre: dataset generation, training, sweeps and timing for finite-alphabet
// MIMO precoding. Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fapre/fapre.hpp"

namespace {

using namespace fapre;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("FAPRE_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError("FAPRE_SEED is not an unsigned integer");
    }
  }
  return 1;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// Writes to --out, or stdout for "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw Error(ErrorKind::Io, "cannot write " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

ComplexMatrix matrix_flag(const std::string& text) {
  try {
    return parse_matrix(text);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

std::vector<double> grid_flag(const std::string& text) {
  try {
    return parse_grid(text);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

MlpModel read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open model " + path);
  return load_model(in);
}

Constellation constellation_flag(const std::string& name) {
  try {
    return make_constellation(name);
  } catch (const Error&) {
    throw UsageError("unknown modulation '" + name + "'");
  }
}

// --- gen-data ---------------------------------------------------------------

struct GenDataArgs {
  long m = 2;
  long n = 2;
  std::string mod = "bpsk";
  std::size_t count = 100;
  std::string grid = "-10:2.5:20";
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t tn = kDefaultNoiseSamples;
  unsigned threads = 0;
};

int cmd_gen_data(const GenDataArgs& a) {
  DatasetHeader header;
  header.m = a.m;
  header.n = a.n;
  header.constellation = constellation_flag(a.mod).name;
  header.count = a.count;
  header.seed = resolve_seed(a.seed);
  header.snr_grid_db = grid_flag(a.grid);
  OptimConfig cfg;
  cfg.noise_samples = a.tn;
  build_dataset(header, cfg, a.out, a.threads);
  std::cerr << "wrote " << header.count << " records to " << a.out << '\n';
  return 0;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  TrainConfig cfg;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_train(TrainArgs a) {
  a.cfg.seed = resolve_seed(a.seed);
  a.cfg.validate();
  const Dataset ds = read_dataset(a.data);
  auto [train_records, test_records] = split_train_test(ds.samples, a.cfg.train_fraction, a.cfg.seed);
  const auto train = training_samples(train_records);
  const auto test = training_samples(test_records);
  const LayerSpec spec = precoder_layer_spec(static_cast<std::size_t>(ds.header.m));
  const TrainResult result = train_sgd(spec, train, a.cfg);

  std::ofstream out(a.out);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + a.out);
  save_model(result.model, out);
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write failed for " + a.out);
  std::cout << "train_samples=" << train.size() << " test_samples=" << test.size()
            << " train_mse=" << fmt(mean_loss(result.model, train))
            << " test_mse=" << fmt(mean_loss(result.model, test)) << '\n';
  return 0;
}

// --- sweep ------------------------------------------------------------------

struct SweepArgs {
  std::string h = "2,1;1,1";
  std::string mod = "bpsk";
  std::string snr = "-10:2.5:20";
  std::string methods = "wf,opt,identity";
  std::string model;
  std::size_t tn = kDefaultNoiseSamples;
  std::optional<std::uint64_t> seed;
  std::string out = "-";
};

int cmd_sweep(const SweepArgs& a) {
  const ComplexMatrix base = matrix_flag(a.h);
  const Constellation s = constellation_flag(a.mod);
  const std::vector<double> grid = grid_flag(a.snr);
  const std::vector<std::string> methods = split_list(a.methods);
  for (const auto& m : methods)
    if (m != "wf" && m != "opt" && m != "dl" && m != "identity")
      throw UsageError("unknown method '" + m + "'");
  std::optional<MlpModel> model;
  for (const auto& m : methods)
    if (m == "dl") {
      if (a.model.empty()) throw Error(ErrorKind::Io, "method dl needs --model");
      model = read_model(a.model);
    }
  const std::uint64_t seed = resolve_seed(a.seed);

  Output out(a.out);
  std::ostream& os = out.stream();
  os << "snr_db,method,mi_bits,std_error\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const ChannelMatrix h = scale_to_snr(base, db_to_linear(grid[i]));
    NoiseSampler eval_sampler(derive_seed(seed, 2 * i));
    const ComplexMatrix noise = eval_sampler.draw(h.rx(), static_cast<Eigen::Index>(a.tn));
    for (const auto& m : methods) {
      std::optional<Precoder> g;
      if (m == "wf") g = wf_precoder(h);
      if (m == "identity") g = identity_precoder(h.tx());
      if (m == "dl") g = infer_precoder(*model, h);
      if (m == "opt") {
        OptimConfig cfg;
        cfg.noise_samples = a.tn;
        cfg.seed = derive_seed(seed, 2 * i + 1);
        g = optimize_precoder(h, s, cfg).precoder;
      }
      const MiEstimate mi = mi_finite_alphabet(h, *g, s, noise);
      os << fmt(grid[i]) << ',' << m << ',' << fmt(mi.bits) << ',' << fmt(mi.std_error) << '\n';
    }
  }
  return 0;
}

// --- bench ------------------------------------------------------------------

struct BenchArgs {
  std::size_t count = 50;
  long m = 2;
  long n = 2;
  std::string mod = "bpsk";
  std::string model;
  std::size_t tn = kDefaultNoiseSamples;
  std::optional<std::uint64_t> seed;
  std::string out = "-";
};

int cmd_bench(const BenchArgs& a) {
  if (a.count < 1) throw UsageError("--count must be >= 1");
  const Constellation s = constellation_flag(a.mod);
  const std::uint64_t seed = resolve_seed(a.seed);
  // Without a trained model the timing uses a Xavier-initialized network of
  // the same shape; inference cost does not depend on the weight values.
  const MlpModel model = a.model.empty()
                             ? init_xavier(precoder_layer_spec(static_cast<std::size_t>(a.m)), seed)
                             : read_model(a.model);
  const auto grid = default_snr_grid_db();
  std::vector<ChannelMatrix> channels;
  for (std::size_t i = 0; i < a.count; ++i) {
    Rng pick(derive_seed(seed, 3 * i));
    const double snr = db_to_linear(grid[pick.index(grid.size())]);
    channels.push_back(gen_rayleigh_channel(a.m, a.n, snr, derive_seed(seed, 3 * i + 1)));
  }

  using Clock = std::chrono::steady_clock;
  double checksum = 0.0;
  auto time_it = [&](auto&& fn) {
    const auto start = Clock::now();
    for (std::size_t i = 0; i < channels.size(); ++i) checksum += power(fn(i).matrix());
    return std::chrono::duration<double>(Clock::now() - start).count();
  };
  OptimConfig cfg;
  cfg.noise_samples = a.tn;
  const double t_opt = time_it([&](std::size_t i) {
    OptimConfig c = cfg;
    c.seed = derive_seed(seed, 3 * i + 2);
    return optimize_precoder(channels[i], s, c).precoder;
  });
  const double t_wf = time_it([&](std::size_t i) { return wf_precoder(channels[i]); });
  const double t_dl = time_it([&](std::size_t i) { return infer_precoder(model, channels[i]); });
  if (!std::isfinite(checksum)) throw Error(ErrorKind::NonFiniteInput, "benchmark output");

  Output out(a.out);
  std::ostream& os = out.stream();
  const double count = static_cast<double>(a.count);
  os << "method,channels,total_seconds,per_channel_seconds\n";
  for (auto [name, t] : {std::pair{"opt", t_opt}, std::pair{"wf", t_wf}, std::pair{"dl", t_dl}})
    os << name << ',' << a.count << ',' << fmt(t) << ',' << fmt(t / count) << '\n';
  return 0;
}

// --- eval-mi ----------------------------------------------------------------

struct EvalArgs {
  std::string h;
  std::string g = "identity";
  std::string mod = "bpsk";
  std::size_t tn = kDefaultNoiseSamples;
  std::optional<std::uint64_t> seed;
};

int cmd_eval_mi(const EvalArgs& a) {
  const ChannelMatrix h(matrix_flag(a.h));
  const Eigen::Index m = h.tx();
  std::optional<Precoder> g;
  if (a.g == "identity") {
    g = identity_precoder(m);
  } else if (a.g == "wf") {
    g = wf_precoder(h);
  } else {
    ComplexMatrix gm = matrix_flag(a.g);
    if (gm.size() == 1 && m > 1) gm = gm(0, 0) * ComplexMatrix::Identity(m, m);
    if (gm.rows() != m || gm.cols() != m) throw UsageError("--g must be M x M");
    try {
      g = Precoder(gm);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }

  if (detail::lower(a.mod) == "gaussian") {
    std::cout << "mi_bits=" << fmt(gaussian_mi(h, *g)) << " std_error=0 noise_samples=0\n";
    return 0;
  }
  const Constellation s = constellation_flag(a.mod);
  if (a.tn < 1) throw UsageError("--tn must be >= 1");
  NoiseSampler sampler(resolve_seed(a.seed));
  const MiEstimate mi = mi_finite_alphabet(h, *g, s, a.tn, sampler);
  std::cout << "mi_bits=" << fmt(mi.bits) << " std_error=" << fmt(mi.std_error)
            << " noise_samples=" << mi.noise_samples << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-alphabet MIMO precoding toolkit"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Label random Rayleigh channels into a dataset file");
  gen_cmd->add_option("--m", gen.m, "Transmit antennas")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--n", gen.n, "Receive antennas")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--mod", gen.mod, "bpsk | qpsk | qam16")
      ->check(CLI::IsMember({"bpsk", "qpsk", "qam16", "16qam"}, CLI::ignore_case));
  gen_cmd->add_option("--count", gen.count, "Number of records")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--snr-grid", gen.grid, "SNR grid in dB, start:step:stop or a,b,c");
  gen_cmd->add_option("--seed", gen.seed, "Master seed (falls back to FAPRE_SEED)");
  gen_cmd->add_option("--out", gen.out, "Output file")->required();
  gen_cmd->add_option("--tn", gen.tn, "Noise draws per MI evaluation")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--threads", gen.threads, "Labeling threads (0 = all cores)");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train the WF-to-optimal precoder network");
  train_cmd->add_option("--data", train.data, "Dataset file")->required();
  train_cmd->add_option("--epochs", train.cfg.epochs)->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", train.cfg.batch_size)->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", train.cfg.learning_rate)->check(CLI::PositiveNumber);
  train_cmd->add_option("--split", train.cfg.train_fraction, "Training fraction")
      ->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--seed", train.seed);
  train_cmd->add_option("--out", train.out, "Model file")->required();

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "MI versus SNR on a fixed channel, CSV");
  sweep_cmd->add_option("--h", sweep.h, "Channel literal, e.g. \"2,1;1,1\"");
  sweep_cmd->add_option("--mod", sweep.mod);
  sweep_cmd->add_option("--snr-db", sweep.snr, "start:step:stop or list, dB");
  sweep_cmd->add_option("--methods", sweep.methods, "Comma list of wf,opt,dl,identity");
  sweep_cmd->add_option("--model", sweep.model, "Model file (required for dl)");
  sweep_cmd->add_option("--tn", sweep.tn)->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--seed", sweep.seed);
  sweep_cmd->add_option("--out", sweep.out, "CSV file, - for stdout");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Wall-clock of iterative vs network precoding, CSV");
  bench_cmd->add_option("--count", bench.count)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--m", bench.m)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--n", bench.n)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--mod", bench.mod);
  bench_cmd->add_option("--model", bench.model);
  bench_cmd->add_option("--tn", bench.tn)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed);
  bench_cmd->add_option("--out", bench.out);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval-mi", "Evaluate MI of one channel/precoder pair");
  eval_cmd->add_option("--h", eval.h, "Channel literal")->required();
  eval_cmd->add_option("--g", eval.g, "Precoder literal, scalar, 'identity' or 'wf'");
  eval_cmd->add_option("--mod", eval.mod, "bpsk | qpsk | qam16 | gaussian");
  eval_cmd->add_option("--tn", eval.tn);
  eval_cmd->add_option("--seed", eval.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen);
    if (*train_cmd) return cmd_train(train);
    if (*sweep_cmd) return cmd_sweep(sweep);
    if (*bench_cmd) return cmd_bench(bench);
    if (*eval_cmd) return cmd_eval_mi(eval);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
