#include "warmstart/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace warmstart {

// Parameters are stored as float32 (the checkpoint format), all arithmetic
// runs in double so finite-difference gradient checks are clean.

namespace {

void conv3x3_forward(const double* in, int in_ch, const float* w, const float* b,
                     int out_ch, double* out) {
  for (int oc = 0; oc < out_ch; ++oc) {
    double* o = out + oc * kCells;
    for (int i = 0; i < kCells; ++i) o[i] = b[oc];
    for (int ic = 0; ic < in_ch; ++ic) {
      const double* x = in + ic * kCells;
      const float* k = w + (oc * in_ch + ic) * 9;
      for (int r = 0; r < kBoardSide; ++r) {
        for (int c = 0; c < kBoardSide; ++c) {
          double acc = 0.0;
          for (int dr = -1; dr <= 1; ++dr) {
            int rr = r + dr;
            if (rr < 0 || rr >= kBoardSide) continue;
            for (int dc = -1; dc <= 1; ++dc) {
              int cc = c + dc;
              if (cc < 0 || cc >= kBoardSide) continue;
              acc += k[(dr + 1) * 3 + (dc + 1)] * x[rr * kBoardSide + cc];
            }
          }
          o[r * kBoardSide + c] += acc;
        }
      }
    }
  }
}

// Accumulates weight/bias gradients and (optionally) the input gradient.
void conv3x3_backward(const double* in, int in_ch, const float* w, int out_ch,
                      const double* dout, double* dw, double* db, double* din) {
  for (int oc = 0; oc < out_ch; ++oc) {
    const double* go = dout + oc * kCells;
    for (int i = 0; i < kCells; ++i) db[oc] += go[i];
    for (int ic = 0; ic < in_ch; ++ic) {
      const double* x = in + ic * kCells;
      double* gk = dw + (oc * in_ch + ic) * 9;
      const float* k = w + (oc * in_ch + ic) * 9;
      for (int r = 0; r < kBoardSide; ++r) {
        for (int c = 0; c < kBoardSide; ++c) {
          double g = go[r * kBoardSide + c];
          for (int dr = -1; dr <= 1; ++dr) {
            int rr = r + dr;
            if (rr < 0 || rr >= kBoardSide) continue;
            for (int dc = -1; dc <= 1; ++dc) {
              int cc = c + dc;
              if (cc < 0 || cc >= kBoardSide) continue;
              gk[(dr + 1) * 3 + (dc + 1)] += g * x[rr * kBoardSide + cc];
              if (din) din[ic * kCells + rr * kBoardSide + cc] +=
                  g * k[(dr + 1) * 3 + (dc + 1)];
            }
          }
        }
      }
    }
  }
}

struct ForwardCache {
  std::vector<double> x, z1, a1, z2, a2, z3, a3;
  std::vector<double> drop_mask;  // inverted-dropout scale per hidden unit
  std::vector<double> logits, probs;
  double value_pre = 0.0, value = 0.0;
};

void forward(const Model& m, const std::array<float, kCells>& input, ForwardCache& fc,
             bool training, float dropout, Rng* rng) {
  const NetArch& a = m.arch;
  fc.x.assign(input.begin(), input.end());
  fc.z1.assign(a.conv_cells(), 0.0);
  conv3x3_forward(fc.x.data(), 1, m.conv1_w.data(), m.conv1_b.data(), a.channels,
                  fc.z1.data());
  fc.a1 = fc.z1;
  for (double& v : fc.a1) v = std::max(v, 0.0);

  fc.z2.assign(a.conv_cells(), 0.0);
  conv3x3_forward(fc.a1.data(), a.channels, m.conv2_w.data(), m.conv2_b.data(),
                  a.channels, fc.z2.data());
  fc.a2 = fc.z2;
  for (double& v : fc.a2) v = std::max(v, 0.0);

  fc.z3.assign(a.hidden, 0.0);
  const int n_in = a.conv_cells();
  for (int h = 0; h < a.hidden; ++h) {
    const float* w = m.fc_w.data() + h * n_in;
    double acc = m.fc_b[h];
    for (int i = 0; i < n_in; ++i) acc += w[i] * fc.a2[i];
    fc.z3[h] = acc;
  }
  fc.a3 = fc.z3;
  for (double& v : fc.a3) v = std::max(v, 0.0);

  if (training && dropout > 0.f) {
    fc.drop_mask.assign(a.hidden, 0.0);
    double keep = 1.0 - dropout;
    for (int h = 0; h < a.hidden; ++h)
      fc.drop_mask[h] = uniform_real(*rng) < keep ? 1.0 / keep : 0.0;
    for (int h = 0; h < a.hidden; ++h) fc.a3[h] *= fc.drop_mask[h];
  } else {
    fc.drop_mask.clear();
  }

  fc.logits.assign(a.action_size, 0.0);
  for (int i = 0; i < a.action_size; ++i) {
    const float* w = m.pol_w.data() + i * a.hidden;
    double acc = m.pol_b[i];
    for (int h = 0; h < a.hidden; ++h) acc += w[h] * fc.a3[h];
    fc.logits[i] = acc;
  }
  double mx = *std::max_element(fc.logits.begin(), fc.logits.end());
  fc.probs.assign(a.action_size, 0.0);
  double sum = 0.0;
  for (int i = 0; i < a.action_size; ++i) {
    fc.probs[i] = std::exp(fc.logits[i] - mx);
    sum += fc.probs[i];
  }
  for (double& p : fc.probs) p /= sum;

  double u = m.val_b[0];
  for (int h = 0; h < a.hidden; ++h) u += m.val_w[h] * fc.a3[h];
  fc.value_pre = u;
  fc.value = std::tanh(u);
}

// Accumulates the gradient of (z - v)^2 - pi . log p into `g`.
void backward(const Model& m, const ForwardCache& fc, const TrainingExample& ex,
              Gradients& g) {
  const NetArch& a = m.arch;
  double dvalue_pre = -2.0 * (ex.z - fc.value) * (1.0 - fc.value * fc.value);
  std::vector<double> dlogits(a.action_size);
  for (int i = 0; i < a.action_size; ++i) dlogits[i] = fc.probs[i] - ex.pi[i];

  auto& g_conv1_w = g.tensors[0];
  auto& g_conv1_b = g.tensors[1];
  auto& g_conv2_w = g.tensors[2];
  auto& g_conv2_b = g.tensors[3];
  auto& g_fc_w = g.tensors[4];
  auto& g_fc_b = g.tensors[5];
  auto& g_pol_w = g.tensors[6];
  auto& g_pol_b = g.tensors[7];
  auto& g_val_w = g.tensors[8];
  auto& g_val_b = g.tensors[9];

  std::vector<double> da3(a.hidden, 0.0);
  for (int i = 0; i < a.action_size; ++i) {
    const float* w = m.pol_w.data() + i * a.hidden;
    double* gw = g_pol_w.data() + i * a.hidden;
    double d = dlogits[i];
    g_pol_b[i] += d;
    for (int h = 0; h < a.hidden; ++h) {
      gw[h] += d * fc.a3[h];
      da3[h] += d * w[h];
    }
  }
  g_val_b[0] += dvalue_pre;
  for (int h = 0; h < a.hidden; ++h) {
    g_val_w[h] += dvalue_pre * fc.a3[h];
    da3[h] += dvalue_pre * m.val_w[h];
  }

  if (!fc.drop_mask.empty())
    for (int h = 0; h < a.hidden; ++h) da3[h] *= fc.drop_mask[h];

  std::vector<double> dz3(a.hidden);
  for (int h = 0; h < a.hidden; ++h) dz3[h] = fc.z3[h] > 0.0 ? da3[h] : 0.0;

  const int n_in = a.conv_cells();
  std::vector<double> da2(n_in, 0.0);
  for (int h = 0; h < a.hidden; ++h) {
    const float* w = m.fc_w.data() + h * n_in;
    double* gw = g_fc_w.data() + h * n_in;
    double d = dz3[h];
    g_fc_b[h] += d;
    for (int i = 0; i < n_in; ++i) {
      gw[i] += d * fc.a2[i];
      da2[i] += d * w[i];
    }
  }

  std::vector<double> dz2(n_in);
  for (int i = 0; i < n_in; ++i) dz2[i] = fc.z2[i] > 0.0 ? da2[i] : 0.0;

  std::vector<double> da1(n_in, 0.0);
  conv3x3_backward(fc.a1.data(), a.channels, m.conv2_w.data(), a.channels,
                   dz2.data(), g_conv2_w.data(), g_conv2_b.data(), da1.data());

  std::vector<double> dz1(n_in);
  for (int i = 0; i < n_in; ++i) dz1[i] = fc.z1[i] > 0.0 ? da1[i] : 0.0;
  conv3x3_backward(fc.x.data(), 1, m.conv1_w.data(), a.channels, dz1.data(),
                   g_conv1_w.data(), g_conv1_b.data(), nullptr);
}

double loss_of(const ForwardCache& fc, const TrainingExample& ex) {
  double l = (ex.z - fc.value) * (ex.z - fc.value);
  for (size_t i = 0; i < ex.pi.size(); ++i)
    if (ex.pi[i] > 0.f)
      l -= ex.pi[i] * std::log(std::max(fc.probs[i], 1e-300));
  return l;
}

const char* kBase64Chars =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string b64_encode(const std::vector<float>& data) {
  const unsigned char* bytes = reinterpret_cast<const unsigned char*>(data.data());
  size_t n = data.size() * sizeof(float);
  std::string out;
  out.reserve((n + 2) / 3 * 4);
  for (size_t i = 0; i < n; i += 3) {
    unsigned v = bytes[i] << 16;
    if (i + 1 < n) v |= bytes[i + 1] << 8;
    if (i + 2 < n) v |= bytes[i + 2];
    out += kBase64Chars[(v >> 18) & 63];
    out += kBase64Chars[(v >> 12) & 63];
    out += i + 1 < n ? kBase64Chars[(v >> 6) & 63] : '=';
    out += i + 2 < n ? kBase64Chars[v & 63] : '=';
  }
  return out;
}

std::vector<float> b64_decode(const std::string& text) {
  static int lut[256];
  static bool init = [] {
    std::fill(std::begin(lut), std::end(lut), -1);
    for (int i = 0; i < 64; ++i) lut[(unsigned char)kBase64Chars[i]] = i;
    return true;
  }();
  (void)init;
  std::vector<unsigned char> bytes;
  bytes.reserve(text.size() / 4 * 3);
  unsigned acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' || c == '\n') continue;
    int v = lut[(unsigned char)c];
    if (v < 0) throw std::invalid_argument("bad base64 payload");
    acc = (acc << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      bytes.push_back((acc >> bits) & 0xff);
    }
  }
  if (bytes.size() % sizeof(float) != 0)
    throw std::invalid_argument("base64 payload is not a float32 array");
  std::vector<float> out(bytes.size() / sizeof(float));
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

}  // namespace

std::vector<std::vector<float>*> Model::tensors() {
  return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_w,
          &fc_b,    &pol_w,   &pol_b,   &val_w,   &val_b};
}

std::vector<const std::vector<float>*> Model::tensors() const {
  return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_w,
          &fc_b,    &pol_w,   &pol_b,   &val_w,   &val_b};
}

const std::vector<std::string>& Model::tensor_names() {
  static const std::vector<std::string> names = {
      "conv1_w", "conv1_b", "conv2_w", "conv2_b", "fc_w",
      "fc_b",    "pol_w",   "pol_b",   "val_w",   "val_b"};
  return names;
}

size_t Model::parameter_count() const {
  size_t n = 0;
  for (auto* t : tensors()) n += t->size();
  return n;
}

Gradients Gradients::zeros_for(const Model& m) {
  Gradients g;
  for (auto* t : m.tensors()) g.tensors.emplace_back(t->size(), 0.0);
  return g;
}

Model init_params(GameId game, uint64_t seed) {
  Model m;
  m.arch.action_size = action_space(game);
  const NetArch& a = m.arch;
  m.conv1_w.resize(a.channels * 9);
  m.conv1_b.assign(a.channels, 0.f);
  m.conv2_w.resize(a.channels * a.channels * 9);
  m.conv2_b.assign(a.channels, 0.f);
  m.fc_w.resize(a.hidden * a.conv_cells());
  m.fc_b.assign(a.hidden, 0.f);
  m.pol_w.resize(a.action_size * a.hidden);
  m.pol_b.assign(a.action_size, 0.f);
  m.val_w.resize(a.hidden);
  m.val_b.assign(1, 0.f);

  Rng rng(seed);
  auto fill = [&rng](std::vector<float>& w, int fan_in) {
    float s = 1.f / std::sqrt(static_cast<float>(fan_in));
    for (float& v : w) v = static_cast<float>(2.0 * uniform_real(rng) - 1.0) * s;
  };
  fill(m.conv1_w, 9);
  fill(m.conv2_w, a.channels * 9);
  fill(m.fc_w, a.conv_cells());
  fill(m.pol_w, a.hidden);
  fill(m.val_w, a.hidden);
  return m;
}

Prediction predict(const Model& m, const std::array<float, kCells>& x,
                   const std::vector<uint8_t>& legal) {
  ForwardCache fc;
  forward(m, x, fc, false, 0.f, nullptr);
  Prediction out;
  out.value = static_cast<float>(fc.value);
  out.policy.assign(m.arch.action_size, 0.f);
  double sum = 0.0;
  for (int i = 0; i < m.arch.action_size; ++i) {
    if (legal[i]) {
      out.policy[i] = static_cast<float>(fc.probs[i]);
      sum += fc.probs[i];
    }
  }
  if (sum <= 0.0) {
    out.uniform_fallback = true;
    int n_legal = 0;
    for (uint8_t l : legal) n_legal += l ? 1 : 0;
    for (int i = 0; i < m.arch.action_size; ++i)
      out.policy[i] = legal[i] ? 1.f / n_legal : 0.f;
  } else {
    for (float& p : out.policy) p = static_cast<float>(p / sum);
  }
  return out;
}

Model train(const Model& m, const std::vector<const TrainingExample*>& examples,
            const TrainConfig& cfg, TrainReport* report) {
  if (examples.empty()) throw std::invalid_argument("train: empty example set");
  Model cur = m;
  Rng rng(cfg.seed);
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);

  // Adam state, live for this call only.
  Gradients adam_m = Gradients::zeros_for(m), adam_v = Gradients::zeros_for(m);
  int adam_t = 0;

  ForwardCache fc;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[uniform_index(rng, static_cast<int>(i))]);
    double epoch_loss = 0.0;
    size_t batches = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      size_t end = std::min(order.size(), start + cfg.batch_size);
      Gradients grad = Gradients::zeros_for(cur);
      double batch_loss = 0.0;
      for (size_t j = start; j < end; ++j) {
        const TrainingExample& ex = *examples[order[j]];
        forward(cur, ex.x, fc, true, cfg.dropout, &rng);
        batch_loss += loss_of(fc, ex);
        backward(cur, fc, ex, grad);
      }
      double inv = 1.0 / static_cast<double>(end - start);
      batch_loss *= inv;
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("train: non-finite loss");
      auto cur_t = cur.tensors();
      if (cfg.use_adam) {
        ++adam_t;
        const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        double bc1 = 1.0 - std::pow(b1, adam_t);
        double bc2 = 1.0 - std::pow(b2, adam_t);
        for (size_t t = 0; t < cur_t.size(); ++t) {
          for (size_t k = 0; k < cur_t[t]->size(); ++k) {
            double g = grad.tensors[t][k] * inv;
            double& mm = adam_m.tensors[t][k];
            double& vv = adam_v.tensors[t][k];
            mm = b1 * mm + (1.0 - b1) * g;
            vv = b2 * vv + (1.0 - b2) * g * g;
            (*cur_t[t])[k] = static_cast<float>(
                (*cur_t[t])[k] -
                cfg.learning_rate * (mm / bc1) / (std::sqrt(vv / bc2) + eps));
          }
        }
      } else {
        for (size_t t = 0; t < cur_t.size(); ++t)
          for (size_t k = 0; k < cur_t[t]->size(); ++k)
            (*cur_t[t])[k] = static_cast<float>(
                (*cur_t[t])[k] - cfg.learning_rate * grad.tensors[t][k] * inv);
      }
      epoch_loss += batch_loss;
      ++batches;
    }
    if (report) report->epoch_loss.push_back(epoch_loss / batches);
  }
  return cur;
}

double example_loss(const Model& m, const TrainingExample& ex) {
  ForwardCache fc;
  forward(m, ex.x, fc, false, 0.f, nullptr);
  return loss_of(fc, ex);
}

namespace {

// ReLU sign pattern of all pre-activations; a finite-difference probe is
// only meaningful if both perturbed points share the unperturbed pattern.
std::vector<uint8_t> relu_pattern(const ForwardCache& fc) {
  std::vector<uint8_t> p;
  p.reserve(fc.z1.size() + fc.z2.size() + fc.z3.size());
  for (double v : fc.z1) p.push_back(v > 0.0);
  for (double v : fc.z2) p.push_back(v > 0.0);
  for (double v : fc.z3) p.push_back(v > 0.0);
  return p;
}

double loss_and_pattern(const Model& m, const TrainingExample& ex,
                        std::vector<uint8_t>& pattern) {
  ForwardCache fc;
  forward(m, ex.x, fc, false, 0.f, nullptr);
  pattern = relu_pattern(fc);
  return loss_of(fc, ex);
}

}  // namespace

Gradients example_gradient(const Model& m, const TrainingExample& ex) {
  ForwardCache fc;
  forward(m, ex.x, fc, false, 0.f, nullptr);
  Gradients g = Gradients::zeros_for(m);
  backward(m, fc, ex, g);
  return g;
}

double gradient_check(const Model& m, const TrainingExample& ex,
                      const GradCheckOptions& opt, Rng& rng) {
  Gradients analytic = example_gradient(m, ex);
  // Tensor slots 8/9 are the value head.
  for (double& v : analytic.tensors[8]) v *= opt.value_head_scale;
  for (double& v : analytic.tensors[9]) v *= opt.value_head_scale;

  Model probe = m;
  auto probe_t = probe.tensors();
  ForwardCache base_fc;
  forward(probe, ex.x, base_fc, false, 0.f, nullptr);
  const std::vector<uint8_t> base_pattern = relu_pattern(base_fc);
  double max_rel = 0.0;
  for (int s = 0; s < opt.samples; ++s) {
    int ti = uniform_index(rng, static_cast<int>(probe_t.size()));
    if (probe_t[ti]->empty()) { --s; continue; }
    int k = uniform_index(rng, static_cast<int>(probe_t[ti]->size()));
    float saved = (*probe_t[ti])[k];
    float plus = static_cast<float>(saved + opt.step);
    float minus = static_cast<float>(saved - opt.step);
    std::vector<uint8_t> pat_p, pat_m;
    (*probe_t[ti])[k] = plus;
    double lp = loss_and_pattern(probe, ex, pat_p);
    (*probe_t[ti])[k] = minus;
    double lm = loss_and_pattern(probe, ex, pat_m);
    (*probe_t[ti])[k] = saved;
    // The loss is only differentiable where the ReLU pattern is locally
    // constant; skip probes whose step crosses a kink.
    if (pat_p != base_pattern || pat_m != base_pattern) { --s; continue; }
    // Use the realized float32 perturbation, not the nominal step.
    double numeric = (lp - lm) / (static_cast<double>(plus) - minus);
    double ga = analytic.tensors[ti][k];
    double rel = std::abs(ga - numeric) / std::max(1.0, std::abs(ga) + std::abs(numeric));
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::json j;
  j["format"] = "wz-checkpoint-1";
  j["game"] = game_name(ckpt.game);
  j["iteration"] = ckpt.iteration;
  j["arch"] = {{"channels", ckpt.model.arch.channels},
               {"hidden", ckpt.model.arch.hidden},
               {"action_size", ckpt.model.arch.action_size}};
  nlohmann::json tensors;
  auto ts = ckpt.model.tensors();
  for (size_t i = 0; i < ts.size(); ++i)
    tensors[Model::tensor_names()[i]] = b64_encode(*ts[i]);
  j["tensors"] = std::move(tensors);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump();
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception&) {
    throw std::runtime_error("corrupt checkpoint file: " + path);
  }
  if (j.value("format", "") != "wz-checkpoint-1")
    throw std::runtime_error("not a checkpoint file: " + path);
  Checkpoint ckpt;
  auto game = parse_game(j.at("game").get<std::string>());
  if (!game) throw std::runtime_error("checkpoint names unknown game");
  ckpt.game = *game;
  ckpt.iteration = j.at("iteration").get<int>();
  ckpt.model.arch.channels = j.at("arch").at("channels").get<int>();
  ckpt.model.arch.hidden = j.at("arch").at("hidden").get<int>();
  ckpt.model.arch.action_size = j.at("arch").at("action_size").get<int>();
  auto ts = ckpt.model.tensors();
  for (size_t i = 0; i < ts.size(); ++i)
    *ts[i] = b64_decode(j.at("tensors").at(Model::tensor_names()[i]).get<std::string>());
  return ckpt;
}

}  // namespace warmstart
