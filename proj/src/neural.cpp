#include "toric/neural.hpp"

#include <atomic>
#include <cassert>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "toric/noise.hpp"
#include "toric/pipeline.hpp"

namespace toric {

namespace {

// Stream reserved for weight initialization; training batches use
// (batch_index << 20) + instance so the spaces cannot collide.
constexpr std::uint64_t kWeightInitStream = ~std::uint64_t(0);
constexpr int kInstanceStreamBits = 20;
constexpr int kGradChunks = 16;

void affine(const MlpModel::Layer& ly, const double* x, double* y) {
  for (int o = 0; o < ly.rows; ++o) {
    const double* w = ly.w.data() + static_cast<std::size_t>(o) * ly.cols;
    double acc = ly.b[o];
    for (int i = 0; i < ly.cols; ++i) acc += w[i] * x[i];
    y[o] = acc;
  }
}

void relu(double* x, int n) {
  for (int i = 0; i < n; ++i)
    if (x[i] < 0.0) x[i] = 0.0;
}

// log(sum exp(logits)) with the max factored out
double log_sum_exp(const double* logits, int n) {
  double m = logits[0];
  for (int i = 1; i < n; ++i) m = std::max(m, logits[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(logits[i] - m);
  return m + std::log(s);
}

std::vector<MlpModel::Layer> layer_shapes(const MlpConfig& config) {
  std::vector<MlpModel::Layer> layers(config.hidden_layers + 1);
  int in = config.input_dim();
  for (int k = 0; k < config.hidden_layers; ++k) {
    layers[k].rows = config.hidden_nodes;
    layers[k].cols = in;
    in = config.hidden_nodes;
  }
  layers.back().rows = MlpConfig::output_dim;
  layers.back().cols = in;
  for (auto& ly : layers) {
    ly.w.assign(static_cast<std::size_t>(ly.rows) * ly.cols, 0.0);
    ly.b.assign(ly.rows, 0.0);
  }
  return layers;
}

void check_input(const MlpModel& model, const MaskInput& input) {
  if ((int)input.values.size() != model.config.input_dim())
    throw std::invalid_argument("mask length does not match model input dimension");
}

}  // namespace

std::int64_t count_parameters(const MlpConfig& config) {
  config.validate();
  const std::int64_t d = config.input_dim();
  const std::int64_t h = config.hidden_nodes;
  const std::int64_t k = config.hidden_layers;
  return d * h + h + (k - 1) * (h * h + h) + h * 4 + 4;
}

MaskInput extract_mask(const Syndrome& syn, const ToricLattice& lat, int qubit, int l_input) {
  if (l_input < 1 || l_input % 2 == 0)
    throw std::invalid_argument("l_input must be odd and positive");
  if (l_input > lat.L) throw std::invalid_argument("l_input exceeds lattice size");
  if (qubit < 0 || qubit >= lat.n_qubits())
    throw std::invalid_argument("qubit index out of range");

  const int l = l_input, half = l / 2;
  const bool transpose = lat.edge_orientation(qubit) == 1;
  const int er = lat.edge_row(qubit), ec = lat.edge_col(qubit);

  MaskInput m;
  m.l_input = l;
  m.values.resize(2 * l * l);
  for (int i = 0; i < l; ++i) {
    for (int j = 0; j < l; ++j) {
      int dr = i - half, dc = j - half;
      if (transpose) std::swap(dr, dc);
      const int cell = lat.vertex(er + dr, ec + dc);
      m.values[i * l + j] = syn.vertex_defects.get(cell) ? -1 : +1;
      m.values[l * l + i * l + j] = syn.plaquette_defects.get(cell) ? -1 : +1;
    }
  }
  return m;
}

MlpModel init_model(const MlpConfig& config, std::uint64_t seed) {
  config.validate();
  MlpModel model;
  model.config = config;
  model.meta.seed = seed;
  model.layers = layer_shapes(config);
  Philox rng(seed, kWeightInitStream);
  for (auto& ly : model.layers) {
    const double limit = std::sqrt(1.0 / ly.cols);  // fan-in scaled
    for (auto& w : ly.w) w = (2.0 * rng.next_double() - 1.0) * limit;
  }
  return model;
}

MlpModel make_uniform_model(const MlpConfig& config) {
  config.validate();
  MlpModel model;
  model.config = config;
  model.layers = layer_shapes(config);
  return model;
}

void forward_into(const MlpModel& model, const MaskInput& input, double* probs4,
                  MlpWorkspace& ws) {
  check_input(model, input);
  const std::size_t maxdim =
      std::max<std::size_t>(model.config.input_dim(), model.config.hidden_nodes);
  ws.buf_a.resize(maxdim);
  ws.buf_b.resize(maxdim);

  double* cur = ws.buf_a.data();
  double* nxt = ws.buf_b.data();
  for (std::size_t i = 0; i < input.values.size(); ++i) cur[i] = input.values[i];

  const int n_layers = (int)model.layers.size();
  double logits[MlpConfig::output_dim];
  for (int k = 0; k < n_layers; ++k) {
    const auto& ly = model.layers[k];
    if (k + 1 == n_layers) {
      affine(ly, cur, logits);
    } else {
      affine(ly, cur, nxt);
      relu(nxt, ly.rows);
      std::swap(cur, nxt);
    }
  }

  const double lse = log_sum_exp(logits, MlpConfig::output_dim);
  double sum = 0.0;
  for (int i = 0; i < MlpConfig::output_dim; ++i) {
    probs4[i] = std::exp(logits[i] - lse);
    sum += probs4[i];
  }
  assert(std::abs(sum - 1.0) < 1e-6);
  (void)sum;
}

std::array<double, 4> forward(const MlpModel& model, const MaskInput& input) {
  MlpWorkspace ws;
  std::array<double, 4> out;
  forward_into(model, input, out.data(), ws);
  return out;
}

std::vector<std::array<double, 4>> forward_batch(const MlpModel& model,
                                                 const std::vector<MaskInput>& inputs) {
  for (const auto& in : inputs) check_input(model, in);
  std::vector<std::array<double, 4>> out(inputs.size());
#pragma omp parallel
  {
    MlpWorkspace ws;
#pragma omp for schedule(static)
    for (long i = 0; i < (long)inputs.size(); ++i)
      forward_into(model, inputs[i], out[i].data(), ws);
  }
  return out;
}

TrainingBatch generate_training_batch(const TrainSpec& spec, const ToricLattice& lat,
                                      long batch_index) {
  if (lat.L != spec.l_train)
    throw std::invalid_argument("training lattice size must equal l_train");
  if (spec.p_train <= 0.0)
    throw std::invalid_argument("p_train must be positive to fill a batch");
  if (batch_index < 0) throw std::invalid_argument("batch_index must be >= 0");

  NoiseSpec noise{spec.p_train, spec.seed};
  TrainingBatch batch;
  batch.inputs.reserve(spec.batch_size);
  batch.labels.reserve(spec.batch_size);

  const std::uint64_t base_stream = static_cast<std::uint64_t>(batch_index)
                                    << kInstanceStreamBits;
  for (std::uint64_t k = 0; (int)batch.inputs.size() < spec.batch_size; ++k) {
    if (k >= (std::uint64_t(1) << kInstanceStreamBits))
      throw std::runtime_error("could not fill training batch");
    const PauliFrame frame = sample_depolarizing(noise, lat, base_stream + k);
    const Syndrome syn = compute_syndrome(frame, lat);
    for (const int q : candidate_qubits(syn, lat)) {
      batch.inputs.push_back(extract_mask(syn, lat, q, spec.l_input));
      batch.labels.push_back(static_cast<std::uint8_t>(frame.pauli(q)));
      if ((int)batch.inputs.size() == spec.batch_size) break;
    }
  }
  return batch;
}

MlpGrad make_grad(const MlpConfig& config) {
  MlpGrad g;
  g.layers = layer_shapes(config);
  return g;
}

namespace {

struct BackpropScratch {
  std::vector<std::vector<double>> acts;  // acts[k] = input to layer k
  std::vector<double> delta, delta_prev;
};

// Forward + backward for one item, accumulating raw (unscaled) gradients.
double item_gradient(const MlpModel& model, const MaskInput& input, int label,
                     MlpGrad& grad, BackpropScratch& s) {
  const int n_layers = (int)model.layers.size();
  s.acts.resize(n_layers);
  s.acts[0].assign(input.values.begin(), input.values.end());
  for (int k = 0; k + 1 < n_layers; ++k) {
    const auto& ly = model.layers[k];
    s.acts[k + 1].resize(ly.rows);
    affine(ly, s.acts[k].data(), s.acts[k + 1].data());
    relu(s.acts[k + 1].data(), ly.rows);
  }

  double logits[MlpConfig::output_dim];
  affine(model.layers.back(), s.acts[n_layers - 1].data(), logits);
  const double lse = log_sum_exp(logits, MlpConfig::output_dim);
  const double loss = lse - logits[label];

  s.delta.resize(MlpConfig::output_dim);
  for (int i = 0; i < MlpConfig::output_dim; ++i)
    s.delta[i] = std::exp(logits[i] - lse) - (i == label ? 1.0 : 0.0);

  for (int k = n_layers - 1; k >= 0; --k) {
    const auto& ly = model.layers[k];
    auto& gly = grad.layers[k];
    const double* a = s.acts[k].data();
    for (int o = 0; o < ly.rows; ++o) {
      const double d = s.delta[o];
      gly.b[o] += d;
      double* gw = gly.w.data() + static_cast<std::size_t>(o) * ly.cols;
      for (int i = 0; i < ly.cols; ++i) gw[i] += d * a[i];
    }
    if (k == 0) break;
    s.delta_prev.assign(ly.cols, 0.0);
    for (int o = 0; o < ly.rows; ++o) {
      const double d = s.delta[o];
      const double* w = ly.w.data() + static_cast<std::size_t>(o) * ly.cols;
      for (int i = 0; i < ly.cols; ++i) s.delta_prev[i] += d * w[i];
    }
    // ReLU gate: the stored activation is already rectified
    for (int i = 0; i < ly.cols; ++i)
      if (s.acts[k][i] <= 0.0) s.delta_prev[i] = 0.0;
    std::swap(s.delta, s.delta_prev);
  }
  return loss;
}

void zero_grad(MlpGrad& g) {
  for (auto& ly : g.layers) {
    std::fill(ly.w.begin(), ly.w.end(), 0.0);
    std::fill(ly.b.begin(), ly.b.end(), 0.0);
  }
}

void scale_grad(MlpGrad& g, double s) {
  for (auto& ly : g.layers) {
    for (auto& w : ly.w) w *= s;
    for (auto& b : ly.b) b *= s;
  }
}

void add_grad(MlpGrad& dst, const MlpGrad& src) {
  for (std::size_t k = 0; k < dst.layers.size(); ++k) {
    auto& d = dst.layers[k];
    const auto& s = src.layers[k];
    for (std::size_t i = 0; i < d.w.size(); ++i) d.w[i] += s.w[i];
    for (std::size_t i = 0; i < d.b.size(); ++i) d.b[i] += s.b[i];
  }
}

}  // namespace

double batch_loss(const MlpModel& model, const TrainingBatch& batch) {
  if (batch.inputs.empty()) throw std::invalid_argument("empty batch");
  // fixed chunking keeps the summation order independent of thread count
  const int n = (int)batch.inputs.size();
  const int chunks = std::min(kGradChunks, n);
  std::vector<double> chunk_loss(chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < chunks; ++c) {
    MlpWorkspace ws;
    double probs[4];
    const int lo = (int)((long)n * c / chunks), hi = (int)((long)n * (c + 1) / chunks);
    for (int i = lo; i < hi; ++i) {
      forward_into(model, batch.inputs[i], probs, ws);
      chunk_loss[c] -= std::log(std::max(probs[batch.labels[i]], 1e-300));
    }
  }
  double total = 0.0;
  for (double v : chunk_loss) total += v;
  return total / n;
}

double batch_loss_and_gradient(const MlpModel& model, const TrainingBatch& batch,
                               MlpGrad& grad) {
  if (batch.inputs.empty()) throw std::invalid_argument("empty batch");
  const int n = (int)batch.inputs.size();
  const int chunks = std::min(kGradChunks, n);

  std::vector<MlpGrad> chunk_grad(chunks);
  std::vector<double> chunk_loss(chunks, 0.0);
  for (auto& g : chunk_grad) g = make_grad(model.config);

#pragma omp parallel for schedule(static)
  for (int c = 0; c < chunks; ++c) {
    BackpropScratch scratch;
    const int lo = (int)((long)n * c / chunks), hi = (int)((long)n * (c + 1) / chunks);
    for (int i = lo; i < hi; ++i)
      chunk_loss[c] += item_gradient(model, batch.inputs[i], batch.labels[i],
                                     chunk_grad[c], scratch);
  }

  zero_grad(grad);
  double total = 0.0;
  for (int c = 0; c < chunks; ++c) {
    total += chunk_loss[c];
    add_grad(grad, chunk_grad[c]);
  }
  scale_grad(grad, 1.0 / n);
  return total / n;
}

AdamOptimizer::AdamOptimizer(const MlpConfig& config, double learning_rate, double beta1,
                             double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
  m_ = layer_shapes(config);
  v_ = layer_shapes(config);
}

void AdamOptimizer::step(MlpModel& model, const MlpGrad& grad) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, (double)t_);
  const double bc2 = 1.0 - std::pow(beta2_, (double)t_);
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    auto& ly = model.layers[k];
    const auto& g = grad.layers[k];
    auto& m = m_[k];
    auto& v = v_[k];
    const auto update = [&](double& p, double& mi, double& vi, double gi) {
      mi = beta1_ * mi + (1.0 - beta1_) * gi;
      vi = beta2_ * vi + (1.0 - beta2_) * gi * gi;
      p -= lr_ * (mi / bc1) / (std::sqrt(vi / bc2) + eps_);
    };
    for (std::size_t i = 0; i < ly.w.size(); ++i) update(ly.w[i], m.w[i], v.w[i], g.w[i]);
    for (std::size_t i = 0; i < ly.b.size(); ++i) update(ly.b[i], m.b[i], v.b[i], g.b[i]);
  }
}

namespace {

// single-producer single-consumer bounded batch queue
class BatchQueue {
 public:
  explicit BatchQueue(std::size_t capacity) : cap_(capacity) {}

  bool push(TrainingBatch&& b) {
    std::unique_lock lock(m_);
    cv_push_.wait(lock, [&] { return q_.size() < cap_ || stopped_; });
    if (stopped_) return false;
    q_.push_back(std::move(b));
    cv_pop_.notify_one();
    return true;
  }

  bool pop(TrainingBatch& out) {
    std::unique_lock lock(m_);
    cv_pop_.wait(lock, [&] { return !q_.empty() || stopped_; });
    if (q_.empty()) return false;
    out = std::move(q_.front());
    q_.pop_front();
    cv_push_.notify_one();
    return true;
  }

  void stop() {
    std::scoped_lock lock(m_);
    stopped_ = true;
    cv_push_.notify_all();
    cv_pop_.notify_all();
  }

 private:
  std::size_t cap_;
  std::deque<TrainingBatch> q_;
  std::mutex m_;
  std::condition_variable cv_push_, cv_pop_;
  bool stopped_ = false;
};

}  // namespace

TrainResult train(const TrainSpec& spec, const MlpConfig& config,
                  const std::function<void(long, double)>& progress) {
  config.validate();
  if (spec.l_input != config.l_input)
    throw std::invalid_argument("spec.l_input and config.l_input disagree");
  if (spec.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (spec.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");

  const ToricLattice lat(spec.l_train);

  TrainResult result;
  result.model = init_model(config, spec.seed);
  result.model.meta.p_train = spec.p_train;
  result.model.meta.l_train = spec.l_train;
  result.model.meta.epochs = spec.epochs;
  result.losses.reserve(std::min<long>(spec.epochs, 1 << 24));

  BatchQueue queue(4);
  std::exception_ptr producer_error;
  std::thread producer([&] {
    try {
      for (long bi = 0; bi < spec.epochs; ++bi) {
        TrainingBatch b = generate_training_batch(spec, lat, bi);
        if (!queue.push(std::move(b))) return;
      }
    } catch (...) {
      producer_error = std::current_exception();
      queue.stop();
    }
  });

  AdamOptimizer adam(config, spec.learning_rate, spec.beta1, spec.beta2, spec.epsilon);
  MlpGrad grad = make_grad(config);
  try {
    for (long epoch = 0; epoch < spec.epochs; ++epoch) {
      TrainingBatch batch;
      if (!queue.pop(batch)) break;  // producer failed
      const double loss = batch_loss_and_gradient(result.model, batch, grad);
      if (!std::isfinite(loss))
        throw std::runtime_error("training aborted: non-finite loss at epoch " +
                                 std::to_string(epoch));
      result.losses.push_back(loss);
      adam.step(result.model, grad);
      if (progress) progress(epoch, loss);
    }
  } catch (...) {
    queue.stop();
    producer.join();
    throw;
  }
  queue.stop();
  producer.join();
  if (producer_error) std::rethrow_exception(producer_error);
  return result;
}

TrainResult train(const TrainSpec& spec, const MlpConfig& config) {
  return train(spec, config, nullptr);
}

void save_model(const MlpModel& model, const std::string& path) {
  nlohmann::json j;
  j["format"] = "toric-mlp/1";
  j["mask_convention"] = model.mask_convention;
  j["config"] = {{"l_input", model.config.l_input},
                 {"hidden_layers", model.config.hidden_layers},
                 {"hidden_nodes", model.config.hidden_nodes}};
  j["meta"] = {{"seed", model.meta.seed},
               {"p_train", model.meta.p_train},
               {"l_train", model.meta.l_train},
               {"epochs", model.meta.epochs}};
  j["layers"] = nlohmann::json::array();
  for (const auto& ly : model.layers) {
    j["layers"].push_back({{"rows", ly.rows}, {"cols", ly.cols}, {"w", ly.w}, {"b", ly.b}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open model file for writing: " + path);
  out << j.dump();
  out << '\n';
  if (!out) throw std::runtime_error("failed writing model file: " + path);
}

MlpModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed model file " + path + ": " + e.what());
  }

  try {
    if (j.at("format").get<std::string>() != "toric-mlp/1")
      throw std::runtime_error("unsupported model format version");
    MlpModel model;
    model.mask_convention = j.at("mask_convention").get<std::string>();
    if (model.mask_convention != kMaskConvention)
      throw std::runtime_error("unknown mask convention: " + model.mask_convention);
    const auto& jc = j.at("config");
    model.config.l_input = jc.at("l_input").get<int>();
    model.config.hidden_layers = jc.at("hidden_layers").get<int>();
    model.config.hidden_nodes = jc.at("hidden_nodes").get<int>();
    model.config.validate();
    if (j.contains("meta")) {
      const auto& jm = j.at("meta");
      model.meta.seed = jm.value("seed", std::uint64_t(0));
      model.meta.p_train = jm.value("p_train", 0.0);
      model.meta.l_train = jm.value("l_train", 0);
      model.meta.epochs = jm.value("epochs", 0L);
    }

    const auto expected = layer_shapes(model.config);
    const auto& jlayers = j.at("layers");
    if (jlayers.size() != expected.size())
      throw std::runtime_error("layer count does not match configuration");
    for (std::size_t k = 0; k < expected.size(); ++k) {
      MlpModel::Layer ly;
      ly.rows = jlayers[k].at("rows").get<int>();
      ly.cols = jlayers[k].at("cols").get<int>();
      if (ly.rows != expected[k].rows || ly.cols != expected[k].cols)
        throw std::runtime_error("layer " + std::to_string(k) +
                                 " dimensions do not match configuration");
      ly.w = jlayers[k].at("w").get<std::vector<double>>();
      ly.b = jlayers[k].at("b").get<std::vector<double>>();
      if (ly.w.size() != static_cast<std::size_t>(ly.rows) * ly.cols ||
          ly.b.size() != static_cast<std::size_t>(ly.rows))
        throw std::runtime_error("layer " + std::to_string(k) + " parameter arrays truncated");
      for (double x : ly.w)
        if (!std::isfinite(x)) throw std::runtime_error("non-finite weight in model file");
      for (double x : ly.b)
        if (!std::isfinite(x)) throw std::runtime_error("non-finite bias in model file");
      model.layers.push_back(std::move(ly));
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed model file " + path + ": " + e.what());
  }
}

}  // namespace toric
