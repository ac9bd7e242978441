#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "warmstart/game.hpp"
#include "warmstart/rng.hpp"

namespace warmstart {

// Two 3x3 conv layers (32 channels), a shared dense layer with dropout, a
// softmax policy head over the game's action space and a tanh value head.
struct NetArch {
  int channels = 32;
  int hidden = 256;
  int action_size = 0;

  int conv_cells() const { return channels * kCells; }
  bool operator==(const NetArch&) const = default;
};

struct Model {
  NetArch arch;
  std::vector<float> conv1_w, conv1_b;  // [C][1][3][3], [C]
  std::vector<float> conv2_w, conv2_b;  // [C][C][3][3], [C]
  std::vector<float> fc_w, fc_b;        // [H][C*36], [H]
  std::vector<float> pol_w, pol_b;      // [A][H], [A]
  std::vector<float> val_w, val_b;      // [H], [1]

  // Tensors in a fixed order, for optimizers / serialization / checks.
  std::vector<std::vector<float>*> tensors();
  std::vector<const std::vector<float>*> tensors() const;
  static const std::vector<std::string>& tensor_names();
  size_t parameter_count() const;
};

Model init_params(GameId game, uint64_t seed);

// Per-tensor gradient buffers in Model::tensors() order, double precision.
struct Gradients {
  std::vector<std::vector<double>> tensors;
  static Gradients zeros_for(const Model& m);
};

struct TrainingExample {
  std::array<float, kCells> x{};
  std::vector<float> pi;
  float z = 0.f;
};

struct Prediction {
  std::vector<float> policy;  // masked to legal moves, renormalized
  float value = 0.f;
  bool uniform_fallback = false;  // all-zero masked policy fell back to uniform
};

// Inference (no dropout). `legal` has action_space entries, nonzero = legal.
Prediction predict(const Model& m, const std::array<float, kCells>& x,
                   const std::vector<uint8_t>& legal);

struct TrainConfig {
  int epochs = 10;
  int batch_size = 64;
  float learning_rate = 0.005f;
  float dropout = 0.3f;
  bool use_adam = false;
  uint64_t seed = 0;
};

struct TrainReport {
  std::vector<double> epoch_loss;
};

// One pass of `epochs` shuffled-minibatch epochs over the examples,
// minimizing (z - v)^2 - pi . log p (batch mean). Returns updated params;
// the input model is untouched.
Model train(const Model& m, const std::vector<const TrainingExample*>& examples,
            const TrainConfig& cfg, TrainReport* report = nullptr);

// Loss and full analytic gradient for one example, dropout off.
double example_loss(const Model& m, const TrainingExample& ex);
Gradients example_gradient(const Model& m, const TrainingExample& ex);

struct GradCheckOptions {
  int samples = 120;
  double step = 1e-4;
  // Scaling the analytic value-head gradient away from 1 is the negative
  // test's corruption knob.
  double value_head_scale = 1.0;
};

// Max relative error between analytic gradient and central finite
// differences over randomly sampled parameters.
double gradient_check(const Model& m, const TrainingExample& ex,
                      const GradCheckOptions& opt, Rng& rng);

// JSON checkpoint: architecture, iteration, base64 little-endian f32 arrays.
struct Checkpoint {
  GameId game = GameId::connect_four;
  int iteration = 0;
  Model model;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace warmstart
