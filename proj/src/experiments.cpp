#include "toric/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include <json.hpp>
#include <omp.h>

#include "toric/noise.hpp"

namespace toric {

namespace {

bool trial_fails(DecoderKind kind, const MlpModel* model, const ToricLattice& lat, double p,
                 std::uint64_t seed, long trial, UfDecoder& dec) {
  const PauliFrame frame = sample_depolarizing({p, seed}, lat, (std::uint64_t)trial);
  const Syndrome syn = compute_syndrome(frame, lat);
  PauliFrame correction;
  if (kind == DecoderKind::Uf)
    correction = dec.decode(syn);
  else
    correction = decode_two_stage(syn, *model, lat, &dec).correction;
  return !decode_succeeded(frame, correction, lat);
}

void check_kind(DecoderKind kind, const MlpModel* model) {
  if (kind == DecoderKind::MlUf && model == nullptr)
    throw std::invalid_argument("ml+uf decoding requires a model");
}

}  // namespace

long count_failures_serial(DecoderKind kind, const MlpModel* model, const ToricLattice& lat,
                           double p, std::uint64_t seed, long t0, long t1) {
  check_kind(kind, model);
  UfDecoder dec(lat);
  long failures = 0;
  for (long t = t0; t < t1; ++t)
    if (trial_fails(kind, model, lat, p, seed, t, dec)) ++failures;
  return failures;
}

long count_failures_parallel(DecoderKind kind, const MlpModel* model, const ToricLattice& lat,
                             double p, std::uint64_t seed, long t0, long t1, int workers) {
  check_kind(kind, model);
  long failures = 0;
  const int nthreads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel num_threads(nthreads) reduction(+ : failures)
  {
    UfDecoder dec(lat);
#pragma omp for schedule(dynamic, 64)
    for (long t = t0; t < t1; ++t)
      if (trial_fails(kind, model, lat, p, seed, t, dec)) ++failures;
  }
  return failures;
}

std::vector<std::uint8_t> failure_flags(DecoderKind kind, const MlpModel* model,
                                        const ToricLattice& lat, double p, std::uint64_t seed,
                                        long trials, int workers) {
  check_kind(kind, model);
  std::vector<std::uint8_t> flags(trials, 0);
  const int nthreads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel num_threads(nthreads)
  {
    UfDecoder dec(lat);
#pragma omp for schedule(dynamic, 64)
    for (long t = 0; t < trials; ++t)
      flags[t] = trial_fails(kind, model, lat, p, seed, t, dec) ? 1 : 0;
  }
  return flags;
}

std::vector<ThresholdPoint> run_threshold_scan(DecoderKind kind, const MlpModel* model,
                                               const ScanConfig& config) {
  check_kind(kind, model);
  if (config.sizes.empty() || config.ps.empty())
    throw std::invalid_argument("threshold scan needs nonempty grids");
  if (config.trials < 1) throw std::invalid_argument("trials must be >= 1");

  std::vector<ThresholdPoint> table;
  for (const int L : config.sizes) {
    const ToricLattice lat(L);
    for (const double p : config.ps) {
      ThresholdPoint pt;
      pt.decoder = kind;
      pt.L = L;
      pt.p = p;
      pt.trials = config.trials;
      pt.failures = count_failures_parallel(kind, model, lat, p, config.seed, 0, config.trials,
                                            config.workers);
      pt.failure_rate = (double)pt.failures / (double)pt.trials;
      pt.std_error = std::sqrt(pt.failure_rate * (1.0 - pt.failure_rate) / (double)pt.trials);
      table.push_back(pt);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// finite-size collapse fit

namespace {

struct FitPoint {
  double p, f, w;
  int L;
};

// Weighted least-squares quadratic in x = (p - pth) * L^(1/nu); returns the
// chi^2 of the master-curve fit, or +inf for a singular design.
double collapse_chi2(const std::vector<FitPoint>& pts, double pth, double nu) {
  if (nu < 0.05 || nu > 20.0) return HUGE_VAL;
  double S[5] = {0, 0, 0, 0, 0};
  double T[3] = {0, 0, 0};
  std::vector<double> xs(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& q = pts[i];
    const double x = (q.p - pth) * std::pow((double)q.L, 1.0 / nu);
    xs[i] = x;
    double xk = q.w;
    for (int k = 0; k < 5; ++k) {
      S[k] += xk;
      if (k < 3) T[k] += xk * q.f;
      xk *= x;
    }
  }
  double A[3][4] = {{S[0], S[1], S[2], T[0]}, {S[1], S[2], S[3], T[1]}, {S[2], S[3], S[4], T[2]}};
  // Gaussian elimination with partial pivoting
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    if (std::abs(A[piv][col]) < 1e-30) return HUGE_VAL;
    std::swap(A[piv], A[col]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double m = A[r][col] / A[col][col];
      for (int cc = col; cc < 4; ++cc) A[r][cc] -= m * A[col][cc];
    }
  }
  const double c0 = A[0][3] / A[0][0], c1 = A[1][3] / A[1][1], c2 = A[2][3] / A[2][2];
  double chi2 = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double resid = pts[i].f - (c0 + c1 * xs[i] + c2 * xs[i] * xs[i]);
    chi2 += pts[i].w * resid * resid;
  }
  return chi2;
}

// Compact Nelder-Mead on (pth, nu).
std::pair<double, double> nelder_mead(const std::vector<FitPoint>& pts, double pth0, double nu0) {
  struct Vertex {
    double x[2], f;
  };
  const auto eval = [&](const double* v) { return collapse_chi2(pts, v[0], v[1]); };
  Vertex simplex[3] = {{{pth0, nu0}, 0}, {{pth0 + 0.002, nu0}, 0}, {{pth0, nu0 + 0.1}, 0}};
  for (auto& v : simplex) v.f = eval(v.x);
  for (int iter = 0; iter < 300; ++iter) {
    std::sort(std::begin(simplex), std::end(simplex),
              [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    if (std::abs(simplex[2].f - simplex[0].f) <
        1e-12 * (1.0 + std::abs(simplex[0].f)))
      break;
    double centroid[2] = {(simplex[0].x[0] + simplex[1].x[0]) / 2,
                          (simplex[0].x[1] + simplex[1].x[1]) / 2};
    const auto blend = [&](double t, double* out) {
      out[0] = centroid[0] + t * (centroid[0] - simplex[2].x[0]);
      out[1] = centroid[1] + t * (centroid[1] - simplex[2].x[1]);
    };
    double refl[2];
    blend(1.0, refl);
    const double fr = eval(refl);
    if (fr < simplex[0].f) {
      double exp2[2];
      blend(2.0, exp2);
      const double fe = eval(exp2);
      if (fe < fr) {
        std::copy(exp2, exp2 + 2, simplex[2].x);
        simplex[2].f = fe;
      } else {
        std::copy(refl, refl + 2, simplex[2].x);
        simplex[2].f = fr;
      }
    } else if (fr < simplex[1].f) {
      std::copy(refl, refl + 2, simplex[2].x);
      simplex[2].f = fr;
    } else {
      double con[2];
      blend(-0.5, con);
      const double fc = eval(con);
      if (fc < simplex[2].f) {
        std::copy(con, con + 2, simplex[2].x);
        simplex[2].f = fc;
      } else {
        for (int k = 1; k < 3; ++k) {
          for (int d = 0; d < 2; ++d)
            simplex[k].x[d] = simplex[0].x[d] + 0.5 * (simplex[k].x[d] - simplex[0].x[d]);
          simplex[k].f = eval(simplex[k].x);
        }
      }
    }
  }
  std::sort(std::begin(simplex), std::end(simplex),
            [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
  return {simplex[0].x[0], simplex[0].x[1]};
}

std::pair<double, double> fit_once(const std::vector<FitPoint>& pts, double pmin, double pmax,
                                   int grid_p, int grid_nu) {
  double best_pth = (pmin + pmax) / 2, best_nu = 1.5, best = HUGE_VAL;
  for (int i = 0; i < grid_p; ++i) {
    const double pth = pmin + (pmax - pmin) * i / (grid_p - 1);
    for (int k = 0; k < grid_nu; ++k) {
      const double nu = 0.6 + (3.0 - 0.6) * k / (grid_nu - 1);
      const double v = collapse_chi2(pts, pth, nu);
      if (v < best) {
        best = v;
        best_pth = pth;
        best_nu = nu;
      }
    }
  }
  return nelder_mead(pts, best_pth, best_nu);
}

long binomial_sample(Philox& rng, long n, double prob) {
  if (prob <= 0.0) return 0;
  if (prob >= 1.0) return n;
  const double var = (double)n * prob * (1.0 - prob);
  if (var > 25.0) {
    // Box-Muller normal approximation
    const double u1 = std::max(rng.next_double(), 1e-300);
    const double u2 = rng.next_double();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    const double draw = (double)n * prob + std::sqrt(var) * z;
    return std::clamp((long)std::llround(draw), 0L, n);
  }
  long k = 0;
  for (long i = 0; i < n; ++i)
    if (rng.next_double() < prob) ++k;
  return k;
}

}  // namespace

CollapseFit fit_collapse(const std::vector<ThresholdPoint>& table, int bootstrap_resamples,
                         std::uint64_t seed) {
  std::set<int> sizes;
  std::map<int, std::set<double>> ps_per_size;
  for (const auto& pt : table) {
    sizes.insert(pt.L);
    ps_per_size[pt.L].insert(pt.p);
  }
  if (sizes.size() < 3)
    throw std::invalid_argument("collapse fit needs at least 3 lattice sizes");
  for (const auto& [L, ps] : ps_per_size)
    if (ps.size() < 5)
      throw std::invalid_argument("collapse fit needs at least 5 error rates per size");

  std::vector<FitPoint> pts;
  double pmin = HUGE_VAL, pmax = -HUGE_VAL;
  for (const auto& pt : table) {
    FitPoint q;
    q.p = pt.p;
    q.f = pt.failure_rate;
    q.L = pt.L;
    const double var = std::max(pt.failure_rate * (1.0 - pt.failure_rate), 0.5 / pt.trials);
    q.w = (double)pt.trials / var;
    pts.push_back(q);
    pmin = std::min(pmin, pt.p);
    pmax = std::max(pmax, pt.p);
  }

  CollapseFit fit;
  const auto [pth, nu] = fit_once(pts, pmin, pmax, 41, 49);
  fit.p_th = pth;
  fit.nu = nu;
  const double dof = std::max(1.0, (double)pts.size() - 5.0);
  fit.quality = collapse_chi2(pts, pth, nu) / dof;

  if (bootstrap_resamples > 0) {
    double sum_p = 0, sum_p2 = 0, sum_n = 0, sum_n2 = 0;
    for (int b = 0; b < bootstrap_resamples; ++b) {
      Philox rng(seed, (std::uint64_t)b);
      std::vector<FitPoint> resampled = pts;
      for (std::size_t i = 0; i < table.size(); ++i) {
        const long k = binomial_sample(rng, table[i].trials, table[i].failure_rate);
        resampled[i].f = (double)k / (double)table[i].trials;
      }
      const auto [bp, bn] = fit_once(resampled, pmin, pmax, 21, 25);
      sum_p += bp;
      sum_p2 += bp * bp;
      sum_n += bn;
      sum_n2 += bn * bn;
    }
    const double B = bootstrap_resamples;
    fit.p_th_err = std::sqrt(std::max(0.0, sum_p2 / B - (sum_p / B) * (sum_p / B)));
    fit.nu_err = std::sqrt(std::max(0.0, sum_n2 / B - (sum_n / B) * (sum_n / B)));
  }
  return fit;
}

// ---------------------------------------------------------------------------
// timing

std::vector<TimingPoint> run_timing_scan(DecoderKind kind, const MlpModel* model,
                                         const std::vector<int>& sizes,
                                         const std::vector<double>& ps, long instances,
                                         std::uint64_t seed, int warmup, int workers) {
  check_kind(kind, model);
  if (sizes.empty() || ps.empty()) throw std::invalid_argument("timing scan needs nonempty grids");
  if (instances < 1) throw std::invalid_argument("instances must be >= 1");
  if (warmup < 10) throw std::invalid_argument("warmup must be >= 10");

  using Clock = std::chrono::steady_clock;
  std::vector<TimingPoint> table;
  for (const int L : sizes) {
    const ToricLattice lat(L);
    for (const double p : ps) {
      std::vector<double> times(instances, 0.0);
      const long total = instances + warmup;
      const int nthreads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel num_threads(nthreads)
      {
        UfDecoder dec(lat);
#pragma omp for schedule(static)
        for (long i = 0; i < total; ++i) {
          const PauliFrame frame = sample_depolarizing({p, seed}, lat, (std::uint64_t)i);
          const Syndrome syn = compute_syndrome(frame, lat);
          double us;
          if (kind == DecoderKind::Uf) {
            const auto t0 = Clock::now();
            const PauliFrame corr = dec.decode(syn);
            const auto t1 = Clock::now();
            us = std::chrono::duration<double, std::micro>(t1 - t0).count();
            (void)corr;
          } else {
            us = decode_two_stage(syn, *model, lat, &dec).total_us;
          }
          if (i >= warmup) times[i - warmup] = us;
        }
      }
      double sum = 0, sum2 = 0;
      for (double t : times) {
        sum += t;
        sum2 += t * t;
      }
      TimingPoint pt;
      pt.decoder = kind;
      pt.L = L;
      pt.p = p;
      pt.instances = instances;
      pt.mean_us = sum / instances;
      pt.var_us = std::max(0.0, sum2 / instances - pt.mean_us * pt.mean_us);
      table.push_back(pt);
    }
  }
  return table;
}

std::optional<int> find_crossing(const std::vector<TimingPoint>& uf_table,
                                 const std::vector<TimingPoint>& ml_table, double p) {
  std::map<int, double> uf_mean, ml_mean;
  for (const auto& pt : uf_table)
    if (pt.p == p) uf_mean[pt.L] = pt.mean_us;
  for (const auto& pt : ml_table)
    if (pt.p == p) ml_mean[pt.L] = pt.mean_us;

  std::vector<int> shared;
  for (const auto& [L, m] : uf_mean) {
    (void)m;
    if (ml_mean.count(L)) shared.push_back(L);
  }
  if (shared.empty()) throw std::invalid_argument("timing tables share no lattice sizes at p");
  for (const int L : shared)
    if (ml_mean[L] < uf_mean[L]) return L;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// output files

namespace {

void write_metadata(std::ostream& out, const char* format_tag, const Metadata& meta) {
  out << "# format=" << format_tag << "\n";
  for (const auto& [k, v] : meta.entries) out << "# " << k << "=" << v << "\n";
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

void write_threshold_csv(std::ostream& out, const std::vector<ThresholdPoint>& table,
                         const Metadata& meta) {
  write_metadata(out, "toricdec-threshold/1", meta);
  out << "decoder,L,p,trials,failures,failure_rate,stderr\n";
  for (const auto& pt : table) {
    out << decoder_name(pt.decoder) << ',' << pt.L << ',' << fmt("%.6f", pt.p) << ','
        << pt.trials << ',' << pt.failures << ',' << fmt("%.8f", pt.failure_rate) << ','
        << fmt("%.8f", pt.std_error) << '\n';
  }
}

void write_timing_csv(std::ostream& out, const std::vector<TimingPoint>& table,
                      const Metadata& meta) {
  write_metadata(out, "toricdec-timing/1", meta);
  out << "decoder,L,p,instances,mean_us,var_us\n";
  for (const auto& pt : table) {
    out << decoder_name(pt.decoder) << ',' << pt.L << ',' << fmt("%.6f", pt.p) << ','
        << pt.instances << ',' << fmt("%.3f", pt.mean_us) << ',' << fmt("%.3f", pt.var_us)
        << '\n';
  }
}

void write_collapse_json(std::ostream& out, const CollapseFit& fit, const Metadata& meta) {
  nlohmann::json j;
  j["format"] = "toricdec-collapse/1";
  j["p_th"] = fit.p_th;
  j["p_th_err"] = fit.p_th_err;
  j["nu"] = fit.nu;
  j["nu_err"] = fit.nu_err;
  j["quality"] = fit.quality;
  nlohmann::json m = nlohmann::json::object();
  for (const auto& [k, v] : meta.entries) m[k] = v;
  j["meta"] = m;
  out << j.dump(2) << '\n';
}

}  // namespace toric
