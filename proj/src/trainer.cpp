#include "semae/trainer.hpp"

#include <chrono>
#include <cmath>

#include "semae/rng.hpp"

namespace semae {

Gradients Gradients::zeros_like(const SemaeModel& model) {
  const auto& t = model.transform;
  return {Matrix::Zero(t.W.rows(), t.W.cols()), Vector::Zero(t.dim), Vector::Zero(t.dim), Vector::Zero(t.dim),
          Matrix::Zero(model.dictionary.elements.rows(), model.dictionary.elements.cols())};
}

double Gradients::max_abs() const {
  double m = 0.0;
  for (auto* p : {&W, &D}) m = std::max(m, p->cwiseAbs().maxCoeff());
  for (auto* p : {&b, &ln_gain, &ln_bias}) m = std::max(m, p->cwiseAbs().maxCoeff());
  return m;
}

std::vector<std::string> parameter_names() { return {"W", "b", "ln_gain", "ln_bias", "D"}; }

namespace {

template <typename M>
std::span<double> view(M& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace

std::vector<std::span<double>> parameter_views(SemaeModel& model) {
  auto& t = model.transform;
  return {view(t.W), view(t.b), view(t.ln_gain), view(t.ln_bias), view(model.dictionary.elements)};
}

std::vector<std::span<double>> gradient_views(Gradients& g) {
  return {view(g.W), view(g.b), view(g.ln_gain), view(g.ln_bias), view(g.D)};
}

LossParts loss_and_gradients(const std::vector<Vector>& batch, const SemaeModel& model, Gradients& grads,
                             LossTerms terms) {
  if (batch.empty()) throw ArgumentError("loss_and_gradients: empty batch");
  const auto& t = model.transform;
  const auto& D = model.dictionary.elements;
  const auto& cfg = model.config;
  const int H = t.heads;
  const int width = t.head_dim();
  const double n = static_cast<double>(t.dim);
  const Eigen::Index K = D.rows();
  const bool sqdist = cfg.attention_kernel == Kernel::neg_sqdist_softmax;

  grads = Gradients::zeros_like(model);
  LossParts parts;

  for (const auto& s : batch) {
    if (s.size() != t.dim) throw DimensionError("loss_and_gradients: sentence width differs from model");
    for (int h = 0; h < H; ++h) {
      const Vector x = s.segment(h * width, width);
      const Vector pre = t.W * x + t.b;
      const double mean = pre.sum() / n;
      const Vector c = pre.array() - mean;
      const double sd = std::sqrt(c.squaredNorm() / n);
      const double den = sd + kLayerNormEps;
      const Vector xhat = c / den;
      const Vector sh = xhat.cwiseProduct(t.ln_gain) + t.ln_bias;

      Vector logits(K);
      for (Eigen::Index k = 0; k < K; ++k) {
        logits[k] = sqdist ? -(sh - D.row(k).transpose()).squaredNorm() : D.row(k).dot(sh);
      }
      const Vector alpha = softmax(logits);
      const Vector z = D.transpose() * alpha;
      const Vector r = z - sh;

      parts.recon += r.squaredNorm();
      parts.l1 += cfg.lambda1 * (cfg.l1_mode == L1Mode::post_softmax ? alpha.cwiseAbs().sum() : logits.cwiseAbs().sum());
      parts.ent += cfg.lambda2 * entropy(alpha);

      Vector g_s = Vector::Zero(t.dim);
      Vector g_alpha = Vector::Zero(K);
      Vector g_logit = Vector::Zero(K);
      if (terms.recon) {
        const Vector g_z = 2.0 * r;
        g_s -= g_z;
        grads.D.noalias() += alpha * g_z.transpose();
        g_alpha += D * g_z;
      }
      if (terms.ent && cfg.lambda2 != 0.0) {
        for (Eigen::Index k = 0; k < K; ++k) {
          const double a = alpha[k];
          g_alpha[k] += cfg.lambda2 * (-std::log(a + kLogFloor) - a / (a + kLogFloor));
        }
      }
      // The post-softmax L1 term is sum(alpha) == 1 and contributes nothing.
      if (terms.l1 && cfg.l1_mode == L1Mode::pre_softmax_abs && cfg.lambda1 != 0.0) {
        for (Eigen::Index k = 0; k < K; ++k) {
          g_logit[k] += cfg.lambda1 * static_cast<double>((logits[k] > 0.0) - (logits[k] < 0.0));
        }
      }
      g_logit += alpha.cwiseProduct((g_alpha.array() - alpha.dot(g_alpha)).matrix());

      if (sqdist) {
        for (Eigen::Index k = 0; k < K; ++k) {
          const Vector diff = sh - D.row(k).transpose();
          g_s -= 2.0 * g_logit[k] * diff;
          grads.D.row(k) += 2.0 * g_logit[k] * diff.transpose();
        }
      } else {
        g_s += D.transpose() * g_logit;
        grads.D.noalias() += g_logit * sh.transpose();
      }

      grads.ln_gain += g_s.cwiseProduct(xhat);
      grads.ln_bias += g_s;
      const Vector g_xhat = g_s.cwiseProduct(t.ln_gain);
      Vector g_pre = (g_xhat.array() - g_xhat.mean()).matrix() / den;
      if (sd > 0.0) g_pre -= (g_xhat.dot(c) / (n * sd * den * den)) * c;
      grads.W.noalias() += g_pre * x.transpose();
      grads.b += g_pre;
    }
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto g : gradient_views(grads)) {
    for (double& v : g) v *= inv;
  }
  parts.recon *= inv;
  parts.l1 *= inv;
  parts.ent *= inv;
  parts.total = parts.recon + parts.l1 + parts.ent;
  return parts;
}

namespace {

double masked_loss(const std::vector<Vector>& batch, const SemaeModel& m, LossTerms terms) {
  LossParts p = loss(batch, m.transform, m.dictionary, m.config);
  return (terms.recon ? p.recon : 0.0) + (terms.l1 ? p.l1 : 0.0) + (terms.ent ? p.ent : 0.0);
}

}  // namespace

double grad_check(const SemaeModel& model, const std::vector<Vector>& batch, double epsilon, LossTerms terms) {
  if (batch.empty()) throw ArgumentError("grad_check: empty batch");
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) throw ArgumentError("grad_check: epsilon must lie in [1e-7, 1e-3]");
  Gradients analytic = Gradients::zeros_like(model);
  loss_and_gradients(batch, model, analytic, terms);

  SemaeModel probe = model;
  auto params = parameter_views(probe);
  auto grads = gradient_views(analytic);
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double orig = params[p][i];
      params[p][i] = orig + epsilon;
      const double up = masked_loss(batch, probe, terms);
      params[p][i] = orig - epsilon;
      const double down = masked_loss(batch, probe, terms);
      params[p][i] = orig;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = grads[p][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

std::vector<Vector> training_rows(const Corpus& corpus, const EmbeddingSet& embeddings) {
  std::vector<Vector> rows;
  rows.reserve(corpus.records.size());
  for (const auto& r : corpus.records) {
    auto it = embeddings.rows.find(r.key());
    if (it == embeddings.rows.end()) throw ArgumentError("no embedding for " + r.key().str());
    rows.push_back(it->second);
  }
  return rows;
}

SemaeModel initialize_model(const std::vector<Vector>& sentences, const TrainConfig& cfg) {
  cfg.validate();
  if (sentences.empty()) throw ArgumentError("cannot initialize a model without sentences");
  const int d = static_cast<int>(sentences.front().size());
  Rng init = Rng::substream(cfg.rng_seed, "init");
  SemaeModel model;
  model.config = cfg;
  model.transform = HeadTransform::initialize(d, cfg.heads, init);
  Rng km = Rng::substream(cfg.rng_seed, "kmeans");
  model.dictionary = init_dictionary(sentences, model.transform, cfg.dict_size, km.next(), cfg.kmeans_max_iter);
  return model;
}

TrainResult train_model(SemaeModel model, const std::vector<Vector>& sentences, const TrainConfig& cfg) {
  cfg.validate();
  if (sentences.empty()) throw ArgumentError("train: no sentences");
  const auto start = std::chrono::steady_clock::now();
  model.config = cfg;
  model.transform.validate();

  TrainResult result;
  result.report.rng_seed = cfg.rng_seed;
  result.report.epochs.push_back({0, loss(sentences, model.transform, model.dictionary, cfg)});

  auto params = parameter_views(model);
  std::vector<std::vector<double>> m1, m2;
  for (auto p : params) {
    m1.emplace_back(p.size(), 0.0);
    m2.emplace_back(p.size(), 0.0);
  }
  // Weight decay applies to the matrices W (index 0) and D (index 4).
  const std::vector<bool> decayed = {true, false, false, false, true};

  Rng shuffler = Rng::substream(cfg.rng_seed, "train");
  std::vector<std::size_t> order(sentences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  Gradients grads = Gradients::zeros_like(model);
  long step = 0;
  std::vector<Vector> batch;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffler.shuffle(order);
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t first = 0, b = 0; first < order.size(); first += bs, ++b) {
      batch.clear();
      for (std::size_t i = first; i < std::min(order.size(), first + bs); ++i) batch.push_back(sentences[order[i]]);
      LossParts lp = loss_and_gradients(batch, model, grads, {});
      if (!std::isfinite(lp.total)) {
        throw NumericalError("training diverged: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(b));
      }
      ++step;
      const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
      auto gv = gradient_views(grads);
      for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t i = 0; i < params[p].size(); ++i) {
          const double g = gv[p][i];
          m1[p][i] = kAdamBeta1 * m1[p][i] + (1.0 - kAdamBeta1) * g;
          m2[p][i] = kAdamBeta2 * m2[p][i] + (1.0 - kAdamBeta2) * g * g;
          double update = (m1[p][i] / c1) / (std::sqrt(m2[p][i] / c2) + kAdamEps);
          if (decayed[p]) update += cfg.weight_decay * params[p][i];
          params[p][i] -= cfg.learning_rate * update;
        }
      }
    }
    LossParts epoch_loss = loss(sentences, model.transform, model.dictionary, cfg);
    if (!std::isfinite(epoch_loss.total)) {
      throw NumericalError("training diverged: non-finite loss after epoch " + std::to_string(epoch));
    }
    result.report.epochs.push_back({epoch, epoch_loss});
  }

  result.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.model = std::move(model);
  return result;
}

TrainResult train(const Corpus& corpus, const EmbeddingSet& embeddings, const TrainConfig& cfg) {
  auto rows = training_rows(corpus, embeddings);
  SemaeModel init = initialize_model(rows, cfg);
  return train_model(std::move(init), rows, cfg);
}

}  // namespace semae

namespace semae {

SemaeModel make_random_model(int dim, int heads, int dict_size, Kernel kernel, L1Mode l1_mode, std::uint64_t seed,
                             double dict_scale) {
  Rng rng = Rng::substream(seed, "random-model");
  SemaeModel m;
  m.transform = HeadTransform::initialize(dim, heads, rng);
  for (auto* v : {&m.transform.b, &m.transform.ln_bias}) {
    for (auto& x : *v) x = 0.3 * rng.normal();
  }
  for (auto& x : m.transform.ln_gain) x = 1.0 + 0.3 * rng.normal();
  m.dictionary.elements.resize(dict_size, dim);
  for (Eigen::Index i = 0; i < m.dictionary.elements.size(); ++i) m.dictionary.elements.data()[i] = dict_scale * rng.normal();
  m.config.heads = heads;
  m.config.dict_size = dict_size;
  m.config.attention_kernel = kernel;
  m.config.l1_mode = l1_mode;
  m.config.lambda1 = 0.5;
  m.config.lambda2 = 0.3;
  m.config.rng_seed = seed;
  return m;
}

std::vector<Vector> make_random_batch(int dim, std::size_t count, std::uint64_t seed) {
  Rng rng = Rng::substream(seed, "random-batch");
  std::vector<Vector> batch;
  for (std::size_t i = 0; i < count; ++i) {
    Vector v(dim);
    for (auto& x : v) x = rng.normal();
    batch.push_back(std::move(v));
  }
  return batch;
}

}  // namespace semae
