// Micro-benchmark comparing the serial reference implementations against the
// OpenMP kernels: batched network inference, decoding-trial fan-out, and the
// effective-rate sweep. Verifies agreement before reporting speedups.

#include <chrono>
#include <cstdio>

#include <CLI11.hpp>
#include <omp.h>

#include "toric/experiments.hpp"
#include "toric/noise.hpp"
#include "toric/version.hpp"

using namespace toric;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(const char* name, double serial_s, double parallel_s, bool equal) {
  std::printf("%-28s %10.3fs %10.3fs %8.2fx   %s\n", name, serial_s, parallel_s,
              serial_s / parallel_s, equal ? "outputs match" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial-vs-OpenMP kernel benchmark"};
  int size = 15;
  double p = 0.1;
  long batch = 4096;
  long trials = 20000;
  int reps = 8;
  app.add_option("--size", size, "lattice size");
  app.add_option("--p", p, "error rate");
  app.add_option("--batch", batch, "masks per inference batch");
  app.add_option("--trials", trials, "decoding trials");
  app.add_option("--reps", reps, "inference batch repetitions");
  CLI11_PARSE(app, argc, argv);

  const int threads = omp_get_max_threads();
  std::printf("%s %s kernel benchmark: %d thread(s), L=%d, p=%g\n", kToolName, kToolVersion,
              threads, size, p);
  std::printf("%-28s %11s %11s %9s\n", "kernel", "serial", "parallel", "speedup");

  const ToricLattice lat(size);
  const MlpModel model = init_model({5, 3, 128}, 1);

  // batched inference vs per-item forward
  {
    std::vector<MaskInput> masks;
    Philox rng(3, 0);
    for (long i = 0; i < batch; ++i) {
      std::vector<std::int8_t> v(model.config.input_dim());
      for (auto& x : v) x = rng.next_u32() & 1 ? 1 : -1;
      MaskInput m;
      m.l_input = model.config.l_input;
      m.values = std::move(v);
      masks.push_back(std::move(m));
    }
    std::vector<std::array<double, 4>> serial_out(masks.size());
    auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r)
      for (std::size_t i = 0; i < masks.size(); ++i) serial_out[i] = forward(model, masks[i]);
    const double serial_s = seconds_since(t0);

    std::vector<std::array<double, 4>> parallel_out;
    t0 = Clock::now();
    for (int r = 0; r < reps; ++r) parallel_out = forward_batch(model, masks);
    const double parallel_s = seconds_since(t0);

    bool equal = true;
    for (std::size_t i = 0; i < masks.size(); ++i)
      for (int c = 0; c < 4; ++c)
        equal &= std::abs(serial_out[i][c] - parallel_out[i][c]) < 1e-12;
    report("forward_batch", serial_s, parallel_s, equal);
  }

  // decoding-trial fan-out
  {
    auto t0 = Clock::now();
    const long serial_fail =
        count_failures_serial(DecoderKind::Uf, nullptr, lat, p, 9, 0, trials);
    const double serial_s = seconds_since(t0);

    t0 = Clock::now();
    const long parallel_fail =
        count_failures_parallel(DecoderKind::Uf, nullptr, lat, p, 9, 0, trials, threads);
    const double parallel_s = seconds_since(t0);
    report("uf trial fan-out", serial_s, parallel_s, serial_fail == parallel_fail);
  }

  // effective-rate sweep (forward_batch inside each instance)
  {
    auto run = [&](int workers) {
      omp_set_num_threads(workers);
      auto t0 = Clock::now();
      const EffectiveRatePoint pt =
          measure_effective_rate(p, model, lat, std::max(200L, trials / 40), 5);
      const double s = seconds_since(t0);
      omp_set_num_threads(threads);
      return std::pair<double, double>(s, pt.p_eff);
    };
    const auto [serial_s, serial_v] = run(1);
    const auto [parallel_s, parallel_v] = run(threads);
    report("effective-rate sweep", serial_s, parallel_s, serial_v == parallel_v);
  }

  return 0;
}
