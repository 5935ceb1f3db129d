#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "toric/lattice.hpp"

namespace toric {

// Frozen tag for the mask-offset convention baked into trained models. Both
// syndrome channels sample the l x l cell block whose centered offsets are
// anchored at the edge's (row, col); vertical edges sample with row/column
// swapped so that one network serves both edge orientations.
inline constexpr const char* kMaskConvention = "anchor-centered-transpose/1";

struct MlpConfig {
  int l_input = 5;       // mask side length, odd
  int hidden_layers = 3;
  int hidden_nodes = 128;

  int input_dim() const { return 2 * l_input * l_input; }
  static constexpr int output_dim = 4;  // classes I, X, Y, Z

  void validate() const {
    if (l_input < 1 || l_input % 2 == 0)
      throw std::invalid_argument("l_input must be odd and positive");
    if (hidden_layers < 1) throw std::invalid_argument("hidden_layers must be >= 1");
    if (hidden_nodes < 1) throw std::invalid_argument("hidden_nodes must be >= 1");
  }

  bool operator==(const MlpConfig&) const = default;
};

std::int64_t count_parameters(const MlpConfig& config);

// Signed syndrome window: vertex channel (l^2 entries, row-major) followed by
// the plaquette channel. +1 = stabilizer satisfied, -1 = defect; 0 is
// reserved for stabilizers absent from the window and never occurs on a torus.
struct MaskInput {
  int l_input = 0;
  std::vector<std::int8_t> values;

  bool operator==(const MaskInput&) const = default;
};

MaskInput extract_mask(const Syndrome& syn, const ToricLattice& lat, int qubit, int l_input);

struct ModelMeta {
  std::uint64_t seed = 0;
  double p_train = 0.0;
  int l_train = 0;
  long epochs = 0;
};

// Dense feed-forward classifier: ReLU hidden layers, softmax output.
struct MlpModel {
  struct Layer {
    int rows = 0, cols = 0;          // rows = outputs, cols = inputs
    std::vector<double> w;           // row-major, rows x cols
    std::vector<double> b;           // rows
  };

  MlpConfig config;
  std::string mask_convention = kMaskConvention;
  ModelMeta meta;
  std::vector<Layer> layers;         // hidden_layers + 1 entries
};

// Fresh model with fan-in-scaled uniform weights, zero biases; deterministic
// in the seed.
MlpModel init_model(const MlpConfig& config, std::uint64_t seed);

// All-zero parameters: every forward call returns the uniform distribution,
// so the argmax decision is always I. Used as the identity preprocessing stub.
MlpModel make_uniform_model(const MlpConfig& config);

struct MlpWorkspace {
  std::vector<double> buf_a, buf_b;
};

// Class distribution (I, X, Y, Z) for one mask.
std::array<double, 4> forward(const MlpModel& model, const MaskInput& input);
void forward_into(const MlpModel& model, const MaskInput& input, double* probs4,
                  MlpWorkspace& ws);

// Elementwise identical to forward; evaluates items independently in parallel.
std::vector<std::array<double, 4>> forward_batch(const MlpModel& model,
                                                 const std::vector<MaskInput>& inputs);

// Training hyperparameters; the defaults are the production training setup.
struct TrainSpec {
  int batch_size = 512;
  long epochs = 1000000;
  double learning_rate = 0.001;
  int l_train = 7;
  int l_input = 5;
  double p_train = 0.15;
  std::uint64_t seed = 0;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
};

struct TrainingBatch {
  std::vector<MaskInput> inputs;
  std::vector<std::uint8_t> labels;  // Pauli class of the examination qubit
};

// Labeled pairs harvested from fresh depolarizing instances on the training
// lattice: every emitted qubit touches at least one defect of its instance.
// Deterministic in (spec.seed, batch_index).
TrainingBatch generate_training_batch(const TrainSpec& spec, const ToricLattice& lat,
                                      long batch_index);

// Gradient buffers mirroring the model parameters.
struct MlpGrad {
  std::vector<MlpModel::Layer> layers;
};
MlpGrad make_grad(const MlpConfig& config);

// Mean categorical cross-entropy of the batch; the gradient variant also
// fills `grad` with the mean-loss gradient. Results are independent of the
// number of worker threads.
double batch_loss(const MlpModel& model, const TrainingBatch& batch);
double batch_loss_and_gradient(const MlpModel& model, const TrainingBatch& batch,
                               MlpGrad& grad);

class AdamOptimizer {
 public:
  AdamOptimizer(const MlpConfig& config, double learning_rate, double beta1, double beta2,
                double epsilon);
  void step(MlpModel& model, const MlpGrad& grad);
  long steps_taken() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<MlpModel::Layer> m_, v_;
};

struct TrainResult {
  MlpModel model;
  std::vector<double> losses;  // one entry per epoch, pre-update batch loss
};

// Supervised training: one generated batch and one Adam step per epoch. Batch
// generation runs on a producer thread feeding a bounded queue. Aborts with a
// diagnostic if the loss turns non-finite.
TrainResult train(const TrainSpec& spec, const MlpConfig& config);
TrainResult train(const TrainSpec& spec, const MlpConfig& config,
                  const std::function<void(long, double)>& progress);

// Versioned JSON container; load(save(m)) reproduces every parameter exactly.
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace toric
