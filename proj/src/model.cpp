#include "semae/model.hpp"

#include <cmath>

#include "semae/rng.hpp"

namespace semae {

std::string to_string(Kernel k) {
  return k == Kernel::dot_softmax ? "dot_softmax" : "neg_sqdist_softmax";
}

std::string to_string(L1Mode m) {
  return m == L1Mode::post_softmax ? "post_softmax" : "pre_softmax_abs";
}

Kernel parse_kernel(std::string_view s) {
  if (s == "dot_softmax") return Kernel::dot_softmax;
  if (s == "neg_sqdist_softmax") return Kernel::neg_sqdist_softmax;
  throw ConfigError("unknown kernel '" + std::string(s) + "'");
}

L1Mode parse_l1_mode(std::string_view s) {
  if (s == "post_softmax") return L1Mode::post_softmax;
  if (s == "pre_softmax_abs") return L1Mode::pre_softmax_abs;
  throw ConfigError("unknown l1 mode '" + std::string(s) + "'");
}

void HeadTransform::validate() const {
  if (heads < 1 || dim < 1 || dim % heads != 0) {
    throw DimensionError("head transform: d=" + std::to_string(dim) + " is not divisible by H=" +
                         std::to_string(heads));
  }
  if (W.rows() != dim || W.cols() != head_dim() || b.size() != dim || ln_gain.size() != dim ||
      ln_bias.size() != dim) {
    throw DimensionError("head transform: parameter shapes do not match d and H");
  }
  if (!W.allFinite() || !b.allFinite() || !ln_gain.allFinite() || !ln_bias.allFinite()) {
    throw NumericalError("head transform: non-finite parameter");
  }
}

HeadTransform HeadTransform::initialize(int dim, int heads, Rng& rng) {
  if (heads < 1 || dim < 1 || dim % heads != 0) {
    throw DimensionError("d=" + std::to_string(dim) + " is not divisible by H=" + std::to_string(heads));
  }
  HeadTransform t;
  t.heads = heads;
  t.dim = dim;
  t.W.resize(dim, dim / heads);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(dim / heads));
  for (Eigen::Index i = 0; i < t.W.size(); ++i) t.W.data()[i] = stddev * rng.normal();
  t.b = Vector::Zero(dim);
  t.ln_gain = Vector::Ones(dim);
  t.ln_bias = Vector::Zero(dim);
  return t;
}

void Dictionary::validate() const {
  if (elements.rows() < 2) throw DimensionError("dictionary needs K >= 2 elements");
  if (!elements.allFinite()) throw NumericalError("dictionary has non-finite entries");
}

void TrainConfig::validate() const {
  auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (heads < 1) throw ConfigError("heads must be >= 1");
  if (dict_size < 2) throw ConfigError("dictionary size must be >= 2");
  if (!finite_nonneg(lambda1)) throw ConfigError("lambda1 must be finite and >= 0");
  if (!finite_nonneg(lambda2)) throw ConfigError("lambda2 must be finite and >= 0");
  if (!finite_nonneg(learning_rate)) throw ConfigError("learning rate must be finite and >= 0");
  if (!finite_nonneg(weight_decay)) throw ConfigError("weight decay must be finite and >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (kmeans_max_iter < 1) throw ConfigError("k-means iterations must be >= 1");
}

std::vector<Vector> split_heads(const Vector& sentence, int heads) {
  const auto d = sentence.size();
  if (heads < 1 || d % heads != 0) {
    throw DimensionError("cannot split d=" + std::to_string(d) + " into " + std::to_string(heads) +
                         " heads");
  }
  const auto width = d / heads;
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) out.emplace_back(sentence.segment(h * width, width));
  return out;
}

Vector layer_norm(const Vector& x, const Vector& gain, const Vector& bias) {
  const double n = static_cast<double>(x.size());
  const double mean = x.sum() / n;
  Vector centered = x.array() - mean;
  const double sd = std::sqrt(centered.squaredNorm() / n);
  return (centered / (sd + kLayerNormEps)).cwiseProduct(gain) + bias;
}

Vector head_transform(const Vector& head_slice, const HeadTransform& params, int head) {
  if (head < 0 || head >= params.heads || head_slice.size() != params.head_dim()) {
    throw DimensionError("head_transform: slice width or head index does not match parameters");
  }
  Vector pre = params.W * head_slice + params.b;
  return layer_norm(pre, params.ln_gain, params.ln_bias);
}

Matrix head_vectors(const Vector& sentence, const HeadTransform& params) {
  if (sentence.size() != params.dim) {
    throw DimensionError("sentence has dimension " + std::to_string(sentence.size()) + ", model expects " +
                         std::to_string(params.dim));
  }
  auto slices = split_heads(sentence, params.heads);
  Matrix out(params.heads, params.dim);
  for (int h = 0; h < params.heads; ++h) out.row(h) = head_transform(slices[h], params, h).transpose();
  return out;
}

Vector softmax(const Vector& logits) {
  Vector e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

Matrix attention_logits(const Matrix& heads, const Dictionary& dict, Kernel kernel) {
  if (heads.cols() != dict.elements.cols()) throw DimensionError("head width differs from dictionary width");
  Matrix logits = heads * dict.elements.transpose();
  if (kernel == Kernel::neg_sqdist_softmax) {
    for (Eigen::Index h = 0; h < logits.rows(); ++h) {
      for (Eigen::Index k = 0; k < logits.cols(); ++k) {
        logits(h, k) = -(heads.row(h) - dict.elements.row(k)).squaredNorm();
      }
    }
  }
  return logits;
}

LatentRep encode(const Vector& sentence, const HeadTransform& params, const Dictionary& dict, Kernel kernel) {
  Matrix logits = attention_logits(head_vectors(sentence, params), dict, kernel);
  LatentRep rep;
  rep.alpha.resize(logits.rows(), logits.cols());
  for (Eigen::Index h = 0; h < logits.rows(); ++h) rep.alpha.row(h) = softmax(logits.row(h).transpose()).transpose();
  return rep;
}

Matrix reconstruct(const LatentRep& rep, const Dictionary& dict) {
  if (rep.size() != dict.size()) throw DimensionError("latent rep K differs from dictionary K");
  return rep.alpha * dict.elements;
}

double entropy(const Eigen::Ref<const Vector>& row) {
  double h = 0.0;
  for (Eigen::Index k = 0; k < row.size(); ++k) h -= row[k] * std::log(row[k] + kLogFloor);
  return h;
}

LossParts loss(const std::vector<Vector>& batch, const HeadTransform& params, const Dictionary& dict,
               const TrainConfig& cfg) {
  if (batch.empty()) throw ArgumentError("loss: empty batch");
  LossParts parts;
  for (const auto& s : batch) {
    Matrix heads = head_vectors(s, params);
    Matrix logits = attention_logits(heads, dict, cfg.attention_kernel);
    for (Eigen::Index h = 0; h < heads.rows(); ++h) {
      Vector alpha = softmax(logits.row(h).transpose());
      Vector z = dict.elements.transpose() * alpha;
      parts.recon += (z - heads.row(h).transpose()).squaredNorm();
      double l1 = cfg.l1_mode == L1Mode::post_softmax ? alpha.cwiseAbs().sum() : logits.row(h).cwiseAbs().sum();
      parts.l1 += cfg.lambda1 * l1;
      parts.ent += cfg.lambda2 * entropy(alpha);
    }
  }
  const double n = static_cast<double>(batch.size());
  parts.recon /= n;
  parts.l1 /= n;
  parts.ent /= n;
  parts.total = parts.recon + parts.l1 + parts.ent;
  return parts;
}

}  // namespace semae
