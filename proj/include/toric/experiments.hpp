#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "toric/neural.hpp"
#include "toric/pipeline.hpp"

namespace toric {

enum class DecoderKind { Uf, MlUf };

inline const char* decoder_name(DecoderKind k) { return k == DecoderKind::Uf ? "uf" : "ml+uf"; }

struct ThresholdPoint {
  DecoderKind decoder = DecoderKind::Uf;
  int L = 0;
  double p = 0.0;
  long trials = 0;
  long failures = 0;
  double failure_rate = 0.0;
  double std_error = 0.0;  // binomial: sqrt(f(1-f)/trials)
};

struct TimingPoint {
  DecoderKind decoder = DecoderKind::Uf;
  int L = 0;
  double p = 0.0;
  long instances = 0;
  double mean_us = 0.0;
  double var_us = 0.0;
};

struct CollapseFit {
  double p_th = 0.0, p_th_err = 0.0;
  double nu = 0.0, nu_err = 0.0;
  double quality = 0.0;  // chi^2 per degree of freedom of the master-curve fit
};

// Decodes trials [t0, t1) of the depolarizing stream (seed, trial index) and
// counts logical failures. The serial variant is the reference
// implementation; the parallel variant must agree bit for bit.
long count_failures_serial(DecoderKind kind, const MlpModel* model, const ToricLattice& lat,
                           double p, std::uint64_t seed, long t0, long t1);
long count_failures_parallel(DecoderKind kind, const MlpModel* model, const ToricLattice& lat,
                             double p, std::uint64_t seed, long t0, long t1, int workers);

// Per-trial failure flags for paired decoder comparisons on a shared stream.
std::vector<std::uint8_t> failure_flags(DecoderKind kind, const MlpModel* model,
                                        const ToricLattice& lat, double p, std::uint64_t seed,
                                        long trials, int workers);

struct ScanConfig {
  std::vector<int> sizes;
  std::vector<double> ps;
  long trials = 0;
  std::uint64_t seed = 0;
  int workers = 0;  // 0 = hardware default
};

// Failure-rate table over (L, p); deterministic in (seed, grids, decoder,
// model) regardless of worker count.
std::vector<ThresholdPoint> run_threshold_scan(DecoderKind kind, const MlpModel* model,
                                               const ScanConfig& config);

// Finite-size collapse: minimizes the weighted scatter of failure_rate
// against a quadratic master curve in x = (p - p_th) * L^(1/nu). Errors come
// from refits of binomial-resampled tables. Requires >= 3 sizes with >= 5
// p-points each.
CollapseFit fit_collapse(const std::vector<ThresholdPoint>& table, int bootstrap_resamples = 100,
                         std::uint64_t seed = 1);

// Decode-only wall-clock times (instance generation and syndrome computation
// excluded). The first `warmup` instances per point never enter the means.
std::vector<TimingPoint> run_timing_scan(DecoderKind kind, const MlpModel* model,
                                         const std::vector<int>& sizes,
                                         const std::vector<double>& ps, long instances,
                                         std::uint64_t seed, int warmup = 10, int workers = 1);

// Smallest shared grid size where the ML+UF mean decode time drops below the
// bare UF time at error rate p; nullopt when no crossing exists.
std::optional<int> find_crossing(const std::vector<TimingPoint>& uf_table,
                                 const std::vector<TimingPoint>& ml_table, double p);

// Output metadata block echoed at the top of every results file.
struct Metadata {
  std::vector<std::pair<std::string, std::string>> entries;
  void add(const std::string& key, const std::string& value) { entries.emplace_back(key, value); }
};

void write_threshold_csv(std::ostream& out, const std::vector<ThresholdPoint>& table,
                         const Metadata& meta);
void write_timing_csv(std::ostream& out, const std::vector<TimingPoint>& table,
                      const Metadata& meta);
void write_collapse_json(std::ostream& out, const CollapseFit& fit, const Metadata& meta);

}  // namespace toric
