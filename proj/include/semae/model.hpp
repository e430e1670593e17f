#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "semae/common.hpp"

namespace semae {

class Rng;

enum class Kernel { dot_softmax, neg_sqdist_softmax };
enum class L1Mode { post_softmax, pre_softmax_abs };

std::string to_string(Kernel k);
std::string to_string(L1Mode m);
Kernel parse_kernel(std::string_view s);
L1Mode parse_l1_mode(std::string_view s);

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kLogFloor = 1e-12;

// Shared projection of every head slice back to the full width d, followed
// by layer norm with learnable gain and bias.
struct HeadTransform {
  int heads = 1;
  int dim = 1;
  Matrix W;        // dim x (dim / heads)
  Vector b;        // dim
  Vector ln_gain;  // dim
  Vector ln_bias;  // dim

  int head_dim() const { return dim / heads; }
  void validate() const;

  // W ~ Gaussian(0, 1/sqrt(d/H)), b = 0, gain = 1, bias = 0.
  static HeadTransform initialize(int dim, int heads, Rng& rng);
};

struct Dictionary {
  Matrix elements;  // K x d

  int size() const { return static_cast<int>(elements.rows()); }
  int dim() const { return static_cast<int>(elements.cols()); }
  void validate() const;
};

// H x K; every row a distribution over dictionary elements.
struct LatentRep {
  Matrix alpha;

  int heads() const { return static_cast<int>(alpha.rows()); }
  int size() const { return static_cast<int>(alpha.cols()); }
};

struct TrainConfig {
  int heads = 4;
  int dict_size = 32;
  double lambda1 = 1e4;
  double lambda2 = 5e-4;
  double learning_rate = 1e-3;
  double weight_decay = 0.9;
  int epochs = 10;
  int batch_size = 32;
  std::uint64_t rng_seed = 0;
  Kernel attention_kernel = Kernel::dot_softmax;
  L1Mode l1_mode = L1Mode::post_softmax;
  int kmeans_max_iter = 100;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct SemaeModel {
  HeadTransform transform;
  Dictionary dictionary;
  TrainConfig config;

  int heads() const { return transform.heads; }
  int dim() const { return transform.dim; }
  int dict_size() const { return dictionary.size(); }
};

std::vector<Vector> split_heads(const Vector& sentence, int heads);

// Population-variance layer norm: (x - mean) / (std + 1e-5) * gain + bias.
Vector layer_norm(const Vector& x, const Vector& gain, const Vector& bias);

Vector head_transform(const Vector& head_slice, const HeadTransform& params, int head);

// All H head vectors of a sentence embedding, one per row (H x d).
Matrix head_vectors(const Vector& sentence, const HeadTransform& params);

Vector softmax(const Vector& logits);

// H x K attention logits of head vectors against the dictionary.
Matrix attention_logits(const Matrix& heads, const Dictionary& dict, Kernel kernel);

LatentRep encode(const Vector& sentence, const HeadTransform& params, const Dictionary& dict,
                 Kernel kernel);

// z_h = alpha_h D for every head (H x d).
Matrix reconstruct(const LatentRep& rep, const Dictionary& dict);

double entropy(const Eigen::Ref<const Vector>& row);

struct LossParts {
  double total = 0.0;
  double recon = 0.0;
  double l1 = 0.0;   // includes lambda1
  double ent = 0.0;  // includes lambda2
};

// Batch mean of sum_h ||z_h - s_h||^2 + lambda1 L1(alpha_h) + lambda2 H(alpha_h).
LossParts loss(const std::vector<Vector>& batch, const HeadTransform& params, const Dictionary& dict,
               const TrainConfig& cfg);

}  // namespace semae
