// Command-line front end: training, threshold scans, decoding-time benchmarks,
// and effective-error-rate curves. Exit codes: 0 success, 2 usage error,
// 3 runtime or data error.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include "toric/experiments.hpp"
#include "toric/version.hpp"

using namespace toric;

namespace {

std::string resolve_out(const std::string& path) {
  const char* dir = std::getenv("TORICDEC_OUT_DIR");
  if (dir && *dir && !std::filesystem::path(path).is_absolute())
    return (std::filesystem::path(dir) / path).string();
  return path;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

std::uint64_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file for checksum: " + path);
  std::uint64_t h = 14695981039346656037ull;  // FNV-1a
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    for (std::streamsize i = 0; i < in.gcount(); ++i)
      h = (h ^ (unsigned char)buf[i]) * 1099511628211ull;
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)v);
  return buf;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%g", v[i]);
    s += (i ? "," : "") + std::string(buf);
  }
  return s;
}

// expands --p-range min:max:step into the p grid
void expand_p_range(const std::string& range, std::vector<double>& ps) {
  if (range.empty()) return;
  double lo, hi, step;
  if (std::sscanf(range.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0)
    throw std::invalid_argument("--p-range expects min:max:step with step > 0");
  for (double p = lo; p <= hi + 1e-12; p += step) ps.push_back(p);
}

Metadata base_metadata(std::uint64_t seed, int workers) {
  Metadata meta;
  meta.add("tool", std::string(kToolName) + "/" + kToolVersion);
  meta.add("seed", std::to_string(seed));
  meta.add("workers", std::to_string(workers));
  return meta;
}

DecoderKind parse_decoder(const std::string& name) {
  if (name == "uf") return DecoderKind::Uf;
  if (name == "ml+uf") return DecoderKind::MlUf;
  throw std::invalid_argument("unknown decoder: " + name);
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  MlpConfig config;
  TrainSpec spec;
  std::string out = "model.json";
  std::string loss_out;
  int workers = 0;
};

int cmd_train(const TrainArgs& args) {
  if (args.workers > 0) omp_set_num_threads(args.workers);
  TrainSpec spec = args.spec;
  spec.l_input = args.config.l_input;

  std::fprintf(stderr, "[train] %dx%d mask, %d layers x %d nodes, %ld epochs, p_train %g\n",
               args.config.l_input, args.config.l_input, args.config.hidden_layers,
               args.config.hidden_nodes, spec.epochs, spec.p_train);

  const long report = std::max(1L, spec.epochs / 100);
  TrainResult res = train(spec, args.config, [&](long epoch, double loss) {
    if ((epoch + 1) % report == 0 || epoch + 1 == spec.epochs)
      std::fprintf(stderr, "[train] epoch %ld/%ld loss %.4f\n", epoch + 1, spec.epochs, loss);
  });

  const std::string model_path = resolve_out(args.out);
  save_model(res.model, model_path);

  const std::string loss_path =
      resolve_out(args.loss_out.empty() ? args.out + ".loss.csv" : args.loss_out);
  std::ofstream out = open_out(loss_path);
  out << "# format=toricdec-loss/1\n";
  out << "# tool=" << kToolName << "/" << kToolVersion << "\n";
  out << "# l_input=" << args.config.l_input << "\n";
  out << "# hidden_layers=" << args.config.hidden_layers << "\n";
  out << "# hidden_nodes=" << args.config.hidden_nodes << "\n";
  out << "# batch_size=" << spec.batch_size << "\n";
  out << "# epochs=" << spec.epochs << "\n";
  out << "# learning_rate=" << spec.learning_rate << "\n";
  out << "# optimizer=adam\n";
  out << "# loss=categorical-cross-entropy\n";
  out << "# l_train=" << spec.l_train << "\n";
  out << "# p_train=" << spec.p_train << "\n";
  out << "# seed=" << spec.seed << "\n";
  out << "# mask_convention=" << kMaskConvention << "\n";
  out << "epoch,loss\n";
  const long stride = std::max(1L, spec.epochs / 10000);
  for (std::size_t i = 0; i < res.losses.size(); ++i)
    if (i % stride == 0 || i + 1 == res.losses.size())
      out << i << ',' << res.losses[i] << '\n';

  std::fprintf(stderr, "[train] model -> %s (checksum %s)\n", model_path.c_str(),
               hex64(file_checksum(model_path)).c_str());
  std::fprintf(stderr, "[train] losses -> %s\n", loss_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct ThresholdArgs {
  std::string decoder = "uf";
  std::vector<int> sizes;
  std::vector<double> ps;
  std::string p_range;
  long trials = 10000;
  std::uint64_t seed = 0;
  std::string model_path;
  std::string out = "threshold.csv";
  std::string collapse_out;
  int bootstrap = 100;
  int workers = 0;
};

int cmd_threshold(const ThresholdArgs& args) {
  ThresholdArgs a = args;
  expand_p_range(a.p_range, a.ps);
  const DecoderKind kind = parse_decoder(a.decoder);
  if (kind == DecoderKind::MlUf && a.model_path.empty())
    throw std::invalid_argument("--decoder ml+uf requires --model");

  MlpModel model;
  if (kind == DecoderKind::MlUf) model = load_model(a.model_path);

  ScanConfig cfg;
  cfg.sizes = a.sizes;
  cfg.ps = a.ps;
  cfg.trials = a.trials;
  cfg.seed = a.seed;
  cfg.workers = a.workers;

  const auto table =
      run_threshold_scan(kind, kind == DecoderKind::MlUf ? &model : nullptr, cfg);

  Metadata meta = base_metadata(a.seed, a.workers);
  meta.add("decoder", a.decoder);
  meta.add("sizes", join_ints(a.sizes));
  meta.add("ps", join_doubles(a.ps));
  meta.add("trials", std::to_string(a.trials));
  if (!a.model_path.empty())
    meta.add("model_checksum", hex64(file_checksum(a.model_path)));

  const std::string out_path = resolve_out(a.out);
  {
    std::ofstream out = open_out(out_path);
    write_threshold_csv(out, table, meta);
  }
  std::fprintf(stderr, "[threshold] table -> %s\n", out_path.c_str());

  std::set<int> distinct_sizes(a.sizes.begin(), a.sizes.end());
  std::set<double> distinct_ps(a.ps.begin(), a.ps.end());
  if (distinct_sizes.size() >= 3 && distinct_ps.size() >= 5) {
    const CollapseFit fit = fit_collapse(table, a.bootstrap, a.seed + 1);
    const std::string cpath =
        resolve_out(a.collapse_out.empty() ? a.out + ".collapse.json" : a.collapse_out);
    std::ofstream out = open_out(cpath);
    write_collapse_json(out, fit, meta);
    std::printf("p_th = %.4f +- %.4f, nu = %.2f +- %.2f (quality %.2f)\n", fit.p_th,
                fit.p_th_err, fit.nu, fit.nu_err, fit.quality);
    std::fprintf(stderr, "[threshold] collapse -> %s\n", cpath.c_str());
  } else {
    std::fprintf(stderr,
                 "[threshold] collapse fit skipped (needs >= 3 sizes and >= 5 error rates)\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::vector<std::string> decoders = {"uf"};
  std::vector<int> sizes;
  std::vector<double> ps;
  std::string p_range;
  long instances = 1000;
  int warmup = 10;
  std::uint64_t seed = 0;
  std::string model_path;
  std::string out = "timing.csv";
  std::string crossing_out;
  int workers = 1;  // timing defaults to one worker to reduce jitter
};

int cmd_bench(const BenchArgs& args) {
  BenchArgs a = args;
  expand_p_range(a.p_range, a.ps);

  std::vector<DecoderKind> kinds;
  for (const auto& name : a.decoders) kinds.push_back(parse_decoder(name));
  const bool needs_model =
      std::any_of(kinds.begin(), kinds.end(), [](DecoderKind k) { return k == DecoderKind::MlUf; });
  if (needs_model && a.model_path.empty())
    throw std::invalid_argument("ml+uf benchmarking requires --model");

  MlpModel model;
  if (needs_model) model = load_model(a.model_path);

  std::vector<TimingPoint> all, uf_table, ml_table;
  for (const DecoderKind kind : kinds) {
    const auto table =
        run_timing_scan(kind, kind == DecoderKind::MlUf ? &model : nullptr, a.sizes, a.ps,
                        a.instances, a.seed, a.warmup, a.workers);
    all.insert(all.end(), table.begin(), table.end());
    (kind == DecoderKind::Uf ? uf_table : ml_table) = table;
  }

  Metadata meta = base_metadata(a.seed, a.workers);
  meta.add("decoders", [&] {
    std::string s;
    for (std::size_t i = 0; i < a.decoders.size(); ++i) s += (i ? "," : "") + a.decoders[i];
    return s;
  }());
  meta.add("sizes", join_ints(a.sizes));
  meta.add("ps", join_doubles(a.ps));
  meta.add("instances", std::to_string(a.instances));
  meta.add("warmup", std::to_string(a.warmup));
  meta.add("timing", "decode-only; instance generation and syndrome computation excluded");
  if (!a.model_path.empty())
    meta.add("model_checksum", hex64(file_checksum(a.model_path)));

  const std::string out_path = resolve_out(a.out);
  {
    std::ofstream out = open_out(out_path);
    write_timing_csv(out, all, meta);
  }
  std::fprintf(stderr, "[bench] timings -> %s\n", out_path.c_str());

  if (!uf_table.empty() && !ml_table.empty()) {
    nlohmann::json j;
    j["format"] = "toricdec-crossing/1";
    j["crossings"] = nlohmann::json::array();
    for (const double p : a.ps) {
      const auto cross = find_crossing(uf_table, ml_table, p);
      nlohmann::json row;
      row["p"] = p;
      if (cross)
        row["crossing_L"] = *cross;
      else
        row["crossing_L"] = nullptr;
      j["crossings"].push_back(row);
    }
    const std::string cpath =
        resolve_out(a.crossing_out.empty() ? a.out + ".crossing.json" : a.crossing_out);
    std::ofstream out = open_out(cpath);
    out << j.dump(2) << '\n';
    std::fprintf(stderr, "[bench] crossings -> %s\n", cpath.c_str());
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct EffectiveRateArgs {
  int size = 31;
  std::vector<double> ps;
  std::string p_range;
  long trials = 10000;
  std::uint64_t seed = 0;
  std::string model_path;
  std::string out = "effective_rate.csv";
  int workers = 0;
};

int cmd_effective_rate(const EffectiveRateArgs& args) {
  EffectiveRateArgs a = args;
  expand_p_range(a.p_range, a.ps);
  if (a.ps.empty()) throw std::invalid_argument("effective-rate needs at least one --p");
  if (a.workers > 0) omp_set_num_threads(a.workers);

  const MlpModel model = load_model(a.model_path);
  const ToricLattice lat(a.size);

  Metadata meta = base_metadata(a.seed, a.workers);
  meta.add("size", std::to_string(a.size));
  meta.add("ps", join_doubles(a.ps));
  meta.add("trials", std::to_string(a.trials));
  meta.add("model_checksum", hex64(file_checksum(a.model_path)));

  const std::string out_path = resolve_out(a.out);
  std::ofstream out = open_out(out_path);
  out << "# format=toricdec-effective-rate/1\n";
  for (const auto& [k, v] : meta.entries) out << "# " << k << "=" << v << "\n";
  out << "p_err,trials,p_eff,ratio\n";
  for (const double p : a.ps) {
    const EffectiveRatePoint pt = measure_effective_rate(p, model, lat, a.trials, a.seed);
    char buf[128];
    if (pt.ratio)
      std::snprintf(buf, sizeof buf, "%.6f,%ld,%.8f,%.4f\n", pt.p_err, a.trials, pt.p_eff,
                    *pt.ratio);
    else
      std::snprintf(buf, sizeof buf, "%.6f,%ld,%.8f,\n", pt.p_err, a.trials, pt.p_eff);
    out << buf;
    std::printf("p_err %.4f -> p_eff %.6f%s\n", pt.p_err, pt.p_eff,
                pt.ratio ? (" (ratio " + std::to_string(*pt.ratio) + ")").c_str() : "");
  }
  std::fprintf(stderr, "[effective-rate] table -> %s\n", out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"toric-code decoding workbench: neural preprocessing + union-find"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a mask classifier");
  train_cmd->add_option("--l-input", train_args.config.l_input, "mask side length (odd)");
  train_cmd->add_option("--hidden-layers", train_args.config.hidden_layers, "hidden layers");
  train_cmd->add_option("--hidden-nodes", train_args.config.hidden_nodes, "nodes per layer");
  train_cmd->add_option("--epochs", train_args.spec.epochs, "training batches");
  train_cmd->add_option("--batch-size", train_args.spec.batch_size, "pairs per batch");
  train_cmd->add_option("--learning-rate", train_args.spec.learning_rate, "Adam step size");
  train_cmd->add_option("--p-train", train_args.spec.p_train, "training error rate");
  train_cmd->add_option("--l-train", train_args.spec.l_train, "training lattice size");
  train_cmd->add_option("--seed", train_args.spec.seed, "RNG seed");
  train_cmd->add_option("--out", train_args.out, "model output path");
  train_cmd->add_option("--loss-out", train_args.loss_out, "loss trajectory CSV path");
  train_cmd->add_option("--workers", train_args.workers, "worker threads");

  ThresholdArgs th_args;
  auto* th_cmd = app.add_subcommand("threshold", "failure-rate scan and collapse fit");
  th_cmd->add_option("--decoder", th_args.decoder, "uf or ml+uf")
      ->check(CLI::IsMember({"uf", "ml+uf"}));
  th_cmd->add_option("--size", th_args.sizes, "lattice sizes")->required();
  th_cmd->add_option("--p", th_args.ps, "error rates");
  th_cmd->add_option("--p-range", th_args.p_range, "error rate grid min:max:step");
  th_cmd->add_option("--trials", th_args.trials, "instances per (L, p) point");
  th_cmd->add_option("--seed", th_args.seed, "RNG seed");
  th_cmd->add_option("--model", th_args.model_path, "model file for ml+uf");
  th_cmd->add_option("--out", th_args.out, "CSV output path");
  th_cmd->add_option("--collapse-out", th_args.collapse_out, "collapse JSON path");
  th_cmd->add_option("--bootstrap", th_args.bootstrap, "bootstrap resamples");
  th_cmd->add_option("--workers", th_args.workers, "worker threads");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "decoding-time scan");
  bench_cmd->add_option("--decoders", bench_args.decoders, "decoders to time (uf, ml+uf)")
      ->delimiter(',');
  bench_cmd->add_option("--size", bench_args.sizes, "lattice sizes")->required();
  bench_cmd->add_option("--p", bench_args.ps, "error rates");
  bench_cmd->add_option("--p-range", bench_args.p_range, "error rate grid min:max:step");
  bench_cmd->add_option("--instances", bench_args.instances, "timed instances per point");
  bench_cmd->add_option("--warmup", bench_args.warmup, "untimed warmup instances (>= 10)");
  bench_cmd->add_option("--seed", bench_args.seed, "RNG seed");
  bench_cmd->add_option("--model", bench_args.model_path, "model file for ml+uf");
  bench_cmd->add_option("--out", bench_args.out, "CSV output path");
  bench_cmd->add_option("--crossing-out", bench_args.crossing_out, "crossing JSON path");
  bench_cmd->add_option("--workers", bench_args.workers, "worker threads (default 1)");

  EffectiveRateArgs er_args;
  auto* er_cmd = app.add_subcommand("effective-rate", "error reduction of the ML stage");
  er_cmd->add_option("--model", er_args.model_path, "model file")->required();
  er_cmd->add_option("--size", er_args.size, "lattice size");
  er_cmd->add_option("--p", er_args.ps, "error rates");
  er_cmd->add_option("--p-range", er_args.p_range, "error rate grid min:max:step");
  er_cmd->add_option("--trials", er_args.trials, "instances per rate");
  er_cmd->add_option("--seed", er_args.seed, "RNG seed");
  er_cmd->add_option("--out", er_args.out, "CSV output path");
  er_cmd->add_option("--workers", er_args.workers, "worker threads");

  try {
    app.parse(argc, argv);
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (th_cmd->parsed()) return cmd_threshold(th_args);
    if (bench_cmd->parsed()) return cmd_bench(bench_args);
    if (er_cmd->parsed()) return cmd_effective_rate(er_args);
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "%s: %s\n", kToolName, e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s: %s\n", kToolName, e.what());
    return 3;
  }
}
