#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semae/corpus.hpp"
#include "semae/model.hpp"

namespace semae {

struct KMeansResult {
  Matrix centers;               // k x d
  std::vector<int> assignment;  // point index -> center index
  double inertia = 0.0;
  int iterations_run = 0;
};

// Lloyd's algorithm with k-means++ seeding. Stops when no center moves by
// `tol` or more, or after max_iter rounds. An empty cluster takes over the
// point farthest from its current center. With restarts > 1 the lowest
// inertia run wins (earliest on ties); restarts share one random stream.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t rng_seed, int max_iter = 100,
                    double tol = 1e-8, int restarts = 1);

inline constexpr int kInitRestarts = 10;

// k-means (kInitRestarts restarts) over the pooled head vectors of every
// sentence; centers become the dictionary rows.
Dictionary init_dictionary(const std::vector<Vector>& sentences, const HeadTransform& params, int K,
                           std::uint64_t rng_seed, int max_iter = 100);
Dictionary init_dictionary(const EmbeddingSet& embeddings, const HeadTransform& params, int K,
                           std::uint64_t rng_seed, int max_iter = 100);

// Which loss terms contribute to a gradient or a finite-difference probe.
struct LossTerms {
  bool recon = true;
  bool l1 = true;
  bool ent = true;
};

struct Gradients {
  Matrix W;
  Vector b;
  Vector ln_gain;
  Vector ln_bias;
  Matrix D;

  static Gradients zeros_like(const SemaeModel& model);
  double max_abs() const;
};

// Parameter tensors in checkpoint order (W, b, ln_gain, ln_bias, D).
std::vector<std::string> parameter_names();
std::vector<std::span<double>> parameter_views(SemaeModel& model);
std::vector<std::span<double>> gradient_views(Gradients& grads);

// Closed-form backprop through softmax, matmul and layer norm. Returns the
// batch loss; `grads` is overwritten with its gradient restricted to `terms`.
LossParts loss_and_gradients(const std::vector<Vector>& batch, const SemaeModel& model, Gradients& grads,
                             LossTerms terms = {});

// Max relative error between analytic and central-difference gradients
// over every parameter, relative to max(|analytic|, |numeric|, 1e-8).
double grad_check(const SemaeModel& model, const std::vector<Vector>& batch, double epsilon,
                  LossTerms terms = {});

struct EpochLoss {
  int epoch = 0;  // 0 is the initial model
  LossParts parts;
};

struct TrainReport {
  std::vector<EpochLoss> epochs;
  std::uint64_t rng_seed = 0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  SemaeModel model;
  TrainReport report;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

// Head transform from the "init" substream, dictionary from k-means on the
// "kmeans" substream of cfg.rng_seed.
SemaeModel initialize_model(const std::vector<Vector>& sentences, const TrainConfig& cfg);

// Adam with decoupled weight decay on W and D. Batches are reshuffled every
// epoch from the "train" substream.
TrainResult train_model(SemaeModel model, const std::vector<Vector>& sentences, const TrainConfig& cfg);

TrainResult train(const Corpus& corpus, const EmbeddingSet& embeddings, const TrainConfig& cfg);

// Sentence embeddings of `corpus` in record order.
std::vector<Vector> training_rows(const Corpus& corpus, const EmbeddingSet& embeddings);

}  // namespace semae

namespace semae {

// Small model with every parameter randomized (not just initialized), for
// gradient checks. Dictionary entries are Gaussian(0, dict_scale^2).
SemaeModel make_random_model(int dim, int heads, int dict_size, Kernel kernel, L1Mode l1_mode, std::uint64_t seed,
                             double dict_scale = 0.5);
std::vector<Vector> make_random_batch(int dim, std::size_t count, std::uint64_t seed);

}  // namespace semae
