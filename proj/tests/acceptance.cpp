// Acceptance runner: one PASS/FAIL line per criterion. With no arguments
// every criterion runs; otherwise only the listed numbers.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "oracles.hpp"
#include "semae/corpus.hpp"
#include "semae/eval.hpp"
#include "semae/ot.hpp"
#include "semae/rng.hpp"
#include "semae/selection.hpp"
#include "semae/trainer.hpp"

using namespace semae;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---- 1 ---------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::set<std::pair<int, int>> combos;
  for (int i = 0; i < 20; ++i) {
    const Kernel kernel = i % 2 ? Kernel::neg_sqdist_softmax : Kernel::dot_softmax;
    const L1Mode l1 = (i / 2) % 2 ? L1Mode::pre_softmax_abs : L1Mode::post_softmax;
    combos.insert({i % 2, (i / 2) % 2});
    const int heads = 1 + i % 3;
    const int dim = heads * (2 + i % 2);
    const int K = 2 + i % 4;
    SemaeModel m = make_random_model(dim, heads, K, kernel, l1, 1000 + static_cast<std::uint64_t>(i));
    auto batch = make_random_batch(dim, 3, 2000 + static_cast<std::uint64_t>(i));
    worst = std::max(worst, grad_check(m, batch, 1e-5));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 30.0 && combos.size() == 4,
          "max relative error " + fmt("%.3g", worst) + " over 20 models, " + fmt("%.2f", secs) + " s"};
}

// ---- 2 ---------------------------------------------------------------------

Outcome literal_l1_nullity() {
  double max_analytic = 0.0, max_fd = 0.0;
  for (int i = 0; i < 10; ++i) {
    SemaeModel m = make_random_model(6, 2, 4, i % 2 ? Kernel::neg_sqdist_softmax : Kernel::dot_softmax,
                                     L1Mode::post_softmax, 300 + static_cast<std::uint64_t>(i));
    auto batch = make_random_batch(6, 4, 400 + static_cast<std::uint64_t>(i));
    Gradients g = Gradients::zeros_like(m);
    loss_and_gradients(batch, m, g, LossTerms{false, true, false});
    max_analytic = std::max(max_analytic, g.max_abs());
    // Central differences of the L1 part alone.
    SemaeModel probe = m;
    for (auto& view : parameter_views(probe)) {
      for (double& x : view) {
        const double keep = x;
        x = keep + 1e-5;
        const double up = loss(batch, probe.transform, probe.dictionary, probe.config).l1;
        x = keep - 1e-5;
        const double down = loss(batch, probe.transform, probe.dictionary, probe.config).l1;
        x = keep;
        max_fd = std::max(max_fd, std::abs(up - down) / 2e-5);
      }
    }
  }
  return {max_analytic == 0.0 && max_fd < 1e-6,
          "analytic max |g| " + fmt("%.3g", max_analytic) + ", finite-difference max " + fmt("%.3g", max_fd)};
}

// ---- 3 ---------------------------------------------------------------------

std::vector<oracle::Item> planted_items(std::mt19937_64& g, std::size_t count, int k, std::size_t H, std::size_t K) {
  std::vector<oracle::Item> items = oracle::random_items(g, count, H, K);
  std::uniform_int_distribution<int> pick(0, k - 1);
  for (std::size_t i = 0; i < items.size(); ++i) {
    // First k items cover every cluster; the rest are random members.
    const int c = i < static_cast<std::size_t>(k) ? static_cast<int>(i) : pick(g);
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t j = 0; j < K; ++j) {
        const double proto = j == static_cast<std::size_t>(c) % K ? 1.0 : 0.0;
        items[i].alpha[h][j] = 0.98 * proto + 0.02 * items[i].alpha[h][j];
      }
    }
  }
  return items;
}

Outcome selection_oracles() {
  const auto t0 = Clock::now();
  std::mt19937_64 g(20240);
  int agree[4] = {0, 0, 0, 0};
  for (int inst = 0; inst < 50; ++inst) {
    std::uniform_int_distribution<int> count_d(3, 8), hk(1, 3), n_d(1, 8);
    const auto count = static_cast<std::size_t>(count_d(g));
    const auto H = static_cast<std::size_t>(hk(g));
    const auto K = static_cast<std::size_t>(hk(g) + 1);
    SelectionConfig cfg;
    cfg.n = n_d(g);
    cfg.token_budget = std::uniform_int_distribution<int>(10, 80)(g);
    cfg.gamma = std::uniform_real_distribution<double>(0.0, 1.0)(g);
    cfg.divergence = inst % 3 == 2 ? Divergence::cosine : Divergence::kl;

    auto items = oracle::random_items(g, count, H, K);
    EntityReps reps = oracle::to_reps(items);
    agree[0] += oracle::keys(select_redundancy(reps, cfg)) ==
                oracle::redundancy(items, cfg.gamma, cfg.n, cfg.token_budget, cfg.divergence);
    agree[1] += oracle::keys(select_herding(reps, cfg)) ==
                oracle::herding(items, cfg.n, cfg.token_budget, cfg.divergence);

    const int k = std::uniform_int_distribution<int>(1, std::min<int>(3, static_cast<int>(K)))(g);
    auto planted = planted_items(g, count, k, H, K);
    SelectionConfig ccfg = cfg;
    ccfg.cluster_k = k;
    ccfg.cluster_gamma = 0.005;
    ccfg.seed = static_cast<std::uint64_t>(inst);
    agree[2] += oracle::keys(select_clustering(oracle::to_reps(planted), ccfg)) ==
                oracle::clustering(planted, k, ccfg.cluster_gamma, ccfg.n, ccfg.token_budget);

    Dictionary dict;
    dict.elements = Matrix::Zero(static_cast<Eigen::Index>(K), 3);
    std::normal_distribution<double> nd;
    for (Eigen::Index r = 0; r < dict.elements.rows(); ++r)
      for (Eigen::Index c = 0; c < 3; ++c) dict.elements(r, c) = nd(g);
    const GroundCost cost = ground_cost(dict);
    SinkhornParams sp = default_sinkhorn_params(cost);
    sp.epsilon *= 4.0;  // keeps the plain-domain oracle finite
    sp.max_iter = 100000;
    sp.tol = 1e-12;
    Summary ot = select_ot(reps, dict, cfg, sp);
    agree[3] += ot.converged &&
                oracle::keys(ot) == oracle::ot(items, oracle::to_grid(cost.C), sp.epsilon, cfg.n, cfg.token_budget);
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "redundancy " << agree[0] << "/50, herding " << agree[1] << "/50, clustering " << agree[2]
    << "/50, ot " << agree[3] << "/50, " << fmt("%.2f", secs) << " s";
  return {agree[0] == 50 && agree[1] == 50 && agree[2] == 50 && agree[3] == 50 && secs < 60.0, d.str()};
}

// ---- 4 ---------------------------------------------------------------------

Outcome reduction_identities() {
  std::mt19937_64 g(777);
  int ok[3] = {0, 0, 0};
  for (int inst = 0; inst < 100; ++inst) {
    std::uniform_int_distribution<int> count_d(1, 10), hk(1, 4), n_d(1, 10);
    const auto count = static_cast<std::size_t>(count_d(g));
    auto items = oracle::random_items(g, count, static_cast<std::size_t>(hk(g)), static_cast<std::size_t>(hk(g) + 1));
    EntityReps reps = oracle::to_reps(items);
    SelectionConfig cfg;
    cfg.n = n_d(g);
    cfg.token_budget = 200;
    cfg.divergence = inst % 2 ? Divergence::cosine : Divergence::kl;

    SelectionConfig zero_gamma = cfg;
    zero_gamma.gamma = 0.0;
    ok[0] += oracle::keys(select_redundancy(reps, zero_gamma)) == oracle::keys(select_plain(reps, cfg));

    // beta = 0: aspect scoring is relevance against the aspect-set mean.
    std::vector<Candidate> aspect_sentences;
    for (std::size_t i = 0; i < reps.candidates.size(); i += 2) aspect_sentences.push_back(reps.candidates[i]);
    SelectionConfig zero_beta = cfg;
    zero_beta.beta = 0.0;
    std::vector<double> score;
    std::vector<oracle::Item> aspect_items;
    std::vector<oracle::Grid> grids;
    for (const auto& c : aspect_sentences) grids.push_back(oracle::to_grid(c.alpha));
    const oracle::Grid aspect_mean = oracle::mean_of(grids);
    for (std::size_t i = 0; i < aspect_sentences.size(); ++i) {
      aspect_items.push_back({aspect_sentences[i].key, grids[i], aspect_sentences[i].tokens.size()});
      score.push_back(oracle::delta(aspect_mean, grids[i], cfg.divergence));
    }
    ok[1] += oracle::keys(select_aspect_summary(reps, aspect_sentences, zero_beta)) ==
             oracle::cut(oracle::sorted_by(aspect_items, score), cfg.n, cfg.token_budget);

    SelectionConfig zero_bp = cfg;
    zero_bp.beta_prime = 0.0;
    const Matrix background = oracle::to_matrix(oracle::random_alpha(g, static_cast<std::size_t>(reps.mean.rows()),
                                                                     static_cast<std::size_t>(reps.mean.cols())));
    ok[2] += oracle::keys(select_informative_general(reps, background, zero_bp)) == oracle::keys(select_plain(reps, cfg));
  }
  std::ostringstream d;
  d << "gamma=0 " << ok[0] << "/100, beta=0 " << ok[1] << "/100, beta'=0 " << ok[2] << "/100";
  return {ok[0] == 100 && ok[1] == 100 && ok[2] == 100, d.str()};
}

// ---- 5 ---------------------------------------------------------------------

Outcome ot_numerics() {
  std::mt19937_64 g(55);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_rel = 0.0;
  int unconverged = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const double a1 = u(g), b1 = u(g), c = 0.5 + 1.5 * u(g);
    GroundCost C;
    C.C = Matrix{{0.0, c}, {c, 0.0}};
    Vector a{{a1, 1.0 - a1}}, b{{b1, 1.0 - b1}};
    // Near-equal marginals need on the order of a1 * c / (eps * |a1 - b1|)
    // sweeps at this epsilon.
    SinkhornParams p{1e-3, 5'000'000, 1e-10};
    SinkhornResult r = sinkhorn(a, b, C, p);
    unconverged += !r.converged;
    const double exact = std::abs(a1 - b1) * c;
    worst_rel = std::max(worst_rel, std::abs(r.distance - exact) / exact);
  }

  // Three bins on a line with squared cost; grid search over the simplex of
  // the exact barycenter objective, using the monotone coupling for 1-D OT.
  GroundCost line;
  line.C = Matrix{{0.0, 1.0, 4.0}, {1.0, 0.0, 1.0}, {4.0, 1.0, 0.0}};
  auto sq = [](double x) { return x * x; };
  double worst_l1 = 0.0;
  const std::vector<std::vector<Vector>> cases = {
      {Vector{{1.0, 0.0, 0.0}}, Vector{{0.0, 0.0, 1.0}}},
      {Vector{{1.0, 0.0, 0.0}}, Vector{{1.0, 0.0, 0.0}}, Vector{{0.0, 0.0, 1.0}}},
      {Vector{{0.0, 1.0, 0.0}}, Vector{{0.0, 0.0, 1.0}}, Vector{{0.0, 0.0, 1.0}}},
  };
  for (const auto& inputs : cases) {
    BarycenterResult bc = barycenter(inputs, line, SinkhornParams{0.02, 100000, 1e-12});
    double best = std::numeric_limits<double>::infinity();
    oracle::Row arg;
    for (int i = 0; i <= 100; ++i) {
      for (int j = 0; i + j <= 100; ++j) {
        const oracle::Row mu{i / 100.0, j / 100.0, (100 - i - j) / 100.0};
        double obj = 0.0;
        for (const auto& in : inputs) obj += oracle::ot_line(mu, {in[0], in[1], in[2]}, sq);
        if (obj < best - 1e-12) {
          best = obj;
          arg = mu;
        }
      }
    }
    double l1 = 0.0;
    for (int k = 0; k < 3; ++k) l1 += std::abs(bc.distribution[k] - arg[static_cast<std::size_t>(k)]);
    worst_l1 = std::max(worst_l1, l1);
  }
  return {worst_rel < 0.01 && worst_l1 < 0.05,
          "2-bin worst relative error " + fmt("%.3g", worst_rel) + " (" + std::to_string(unconverged) +
              " unconverged), 3-bin barycenter worst L1 " + fmt("%.3g", worst_l1)};
}

// ---- 6 ---------------------------------------------------------------------

Outcome metric_oracles() {
  std::mt19937_64 g(66);
  const std::vector<std::string> vocab{"a", "b", "c", "d", "e"};
  auto words = [&](int lo, int hi) {
    std::vector<std::string> w(static_cast<std::size_t>(std::uniform_int_distribution<int>(lo, hi)(g)));
    for (auto& x : w) x = vocab[std::uniform_int_distribution<std::size_t>(0, vocab.size() - 1)(g)];
    return w;
  };
  int exact = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const auto cand = words(0, 12);
    std::vector<Tokens> refs;
    const int nrefs = std::uniform_int_distribution<int>(1, 3)(g);
    for (int r = 0; r < nrefs; ++r) refs.push_back(words(1, 12));
    bool same = true;
    for (int n = 1; n <= 2; ++n) {
      const auto a = rouge_n(cand, refs, n);
      const auto o = oracle::rouge_n(cand, refs, n);
      same = same && a.precision == o.p && a.recall == o.r && a.f1 == o.f;
    }
    const auto l = rouge_l(cand, refs);
    const auto ol = oracle::rouge_l(cand, refs);
    same = same && l.precision == ol.p && l.recall == ol.r && l.f1 == ol.f;
    exact += same;
  }

  AspectLexicon lex;
  lex.aspects = {"food", "staff", "location"};
  lex.entries["breakfast"] = {{"food", 0.9}};
  lex.entries["staff"] = {{"staff", 0.8}};
  lex.entries["beach"] = {{"location", 0.7}};
  const bool fixtures =
      std::abs(distinct_n({{"a", "b", "a", "b"}}, 2) - 2.0 / 3.0) < 1e-12 &&
      distinct_n({{"a", "b", "c", "d"}}, 2) == 1.0 && distinct_n({{"a"}}, 2) == 0.0 &&
      distinct_n({{"a", "b"}, {"b", "a"}}, 2) == 1.0 && aspect_coverage({}, lex) == 0 &&
      aspect_coverage({{"breakfast", "was", "great"}, {"near", "the", "beach"}}, lex) == 2 &&
      aspect_coverage({{"breakfast"}, {"breakfast", "again"}, {"nothing"}}, lex) == 1 &&
      aspect_coverage({{"staff", "breakfast"}, {"beach"}, {"staff"}}, lex) == 3;
  return {exact == 100 && fixtures,
          "rouge exact on " + std::to_string(exact) + "/100, fixtures " + (fixtures ? "ok" : "mismatch")};
}

// ---- 7, 8, 9 ---------------------------------------------------------------

SynthSpec desk_spec(std::uint64_t seed) {
  SynthSpec s;
  s.n_entities = 40;
  s.reviews_per_entity = 10;
  s.sentences_per_review = 5;
  s.n_topics = 8;
  s.dim = 32;
  s.noise_sigma = 0.1;
  s.rng_seed = seed;
  return s;
}

TrainConfig desk_train(std::uint64_t seed, double lambda2) {
  TrainConfig c;
  c.heads = 4;
  c.dict_size = 8;
  c.lambda2 = lambda2;
  c.rng_seed = seed;
  return c;
}

Outcome semantic_recovery() {
  double min_ari = 1.0, min_top1 = 1.0, max_secs = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto t0 = Clock::now();
    SynthData data = synth_generate(desk_spec(seed));
    TrainResult tr = train(data.corpus, data.embeddings, desk_train(seed, 5e-4));
    std::vector<int> predicted, planted;
    for (const auto& [key, v] : data.embeddings.rows) {
      const Matrix alpha = encode(v, tr.model.transform, tr.model.dictionary, tr.model.config.attention_kernel).alpha;
      Eigen::Index arg = 0;
      alpha.colwise().sum().maxCoeff(&arg);
      predicted.push_back(static_cast<int>(arg));
      planted.push_back(data.topic.at(key));
    }
    const double ari = adjusted_rand(predicted, planted);
    int hits = 0;
    auto entities = encode_entities(data.corpus, data.embeddings, tr.model);
    for (const auto& e : entities) {
      hits += data.topic.at(rank_general(e, SelectionConfig{}).front().key) == data.majority_topic.at(e.entity_id);
    }
    min_ari = std::min(min_ari, ari);
    min_top1 = std::min(min_top1, hits / static_cast<double>(entities.size()));
    max_secs = std::max(max_secs, seconds_since(t0));
  }
  return {min_ari >= 0.9 && min_top1 >= 0.9 && max_secs < 300.0,
          "over 5 seeds: min ARI " + fmt("%.4f", min_ari) + ", min top-1 majority match " + fmt("%.3f", min_top1) +
              ", slowest run " + fmt("%.2f", max_secs) + " s"};
}

Tokens joined(const std::vector<const Tokens*>& parts) {
  Tokens t;
  for (const auto* p : parts) t.insert(t.end(), p->begin(), p->end());
  return t;
}

Outcome summarization_quality() {
  double plain_sum = 0.0, random_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthData data = synth_generate(desk_spec(seed));
    TrainResult tr = train(data.corpus, data.embeddings, desk_train(seed, 5e-4));
    const auto gold = synth_gold(data);
    std::mt19937_64 g(9000 + seed);
    double plain = 0.0, random = 0.0;
    auto entities = encode_entities(data.corpus, data.embeddings, tr.model);
    for (const auto& e : entities) {
      std::vector<const Tokens*> gold_parts;
      for (const auto& k : gold.at(e.entity_id)) gold_parts.push_back(&data.corpus.find(k)->tokens);
      const std::vector<Tokens> refs{joined(gold_parts)};
      SelectionConfig cfg;
      cfg.n = static_cast<int>(gold_parts.size());
      std::vector<const Tokens*> picked;
      for (const auto& item : select_plain(e, cfg).items) picked.push_back(&e.find(item.key)->tokens);
      plain += rouge_n(joined(picked), refs, 1).f1;
      // Random baseline: averaged over 10 uniform draws of the same size.
      double r = 0.0;
      for (int draw = 0; draw < 10; ++draw) {
        std::vector<std::size_t> idx(e.candidates.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::shuffle(idx.begin(), idx.end(), g);
        std::vector<const Tokens*> parts;
        for (int i = 0; i < cfg.n; ++i) parts.push_back(&e.candidates[idx[static_cast<std::size_t>(i)]].tokens);
        r += rouge_n(joined(parts), refs, 1).f1 / 10.0;
      }
      random += r;
    }
    plain_sum += 100.0 * plain / static_cast<double>(entities.size());
    random_sum += 100.0 * random / static_cast<double>(entities.size());
  }
  const double plain = plain_sum / 5.0, random = random_sum / 5.0;
  return {plain - random >= 10.0, "ROUGE-1 F plain " + fmt("%.2f", plain) + " vs random " + fmt("%.2f", random) +
                                      " (gap " + fmt("%.2f", plain - random) + " points, 5 seeds)"};
}

double mean_entropy(const SynthData& data, const SemaeModel& m) {
  double total = 0.0;
  std::size_t rows = 0;
  for (const auto& [key, v] : data.embeddings.rows) {
    const Matrix alpha = encode(v, m.transform, m.dictionary, m.config.attention_kernel).alpha;
    for (Eigen::Index h = 0; h < alpha.rows(); ++h) {
      total += entropy(alpha.row(h).transpose());
      ++rows;
    }
  }
  return total / static_cast<double>(rows);
}

Outcome sparsity_direction() {
  int lower = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthData data = synth_generate(desk_spec(seed));
    const double h0 = mean_entropy(data, train(data.corpus, data.embeddings, desk_train(seed, 0.0)).model);
    const double h1 = mean_entropy(data, train(data.corpus, data.embeddings, desk_train(seed, 5e-4)).model);
    lower += h1 < h0;
    detail += (detail.empty() ? "" : ", ") + fmt("%.6g", h0) + " -> " + fmt("%.6g", h1);
  }
  return {lower == 5, "mean alpha entropy lambda2 0 -> 5e-4 per seed: " + detail};
}

// ---- 10 --------------------------------------------------------------------

std::uint64_t file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a(ss.str());
}

int sh(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

// Runs every CLI command into `dir`; returns the failing command or "".
std::string run_pipeline(const fs::path& dir) {
  const std::string cli = SEMAE_CLI;
  const std::string d = dir.string();
  const std::string data = d + "/data";
  const std::string lex = " --lexicon " + data + "/lexicon.tsv --aspects " + data + "/aspects.txt";
  const std::string in = " --corpus " + data + "/corpus.jsonl --embeddings " + data + "/embeddings.tsv";
  const std::string model = " --checkpoint " + d + "/model.ckpt";
  {
    std::ofstream seeds(d + "/seeds.tsv");
    seeds << "e000\tr000\t0\ne000\tr001\t1\ne001\tr000\t2\n";
  }
  std::vector<std::string> cmds = {
      cli + " synth --seed 7 --entities 12 --reviews 4 --out " + data,
      cli + " train --seed 7 --epochs 3 --dict-size 8" + in + model,
      cli + " train --seed 7 --epochs 2 --corpus " + data + "/corpus.jsonl --checkpoint " + d + "/featurized.ckpt",
  };
  for (const char* s : {"plain", "redundancy", "aspect", "aspect_redundancy", "herding", "clustering", "ot"}) {
    cmds.push_back(cli + " summarize --seed 7 --n 3 --strategy " + s + in + model + lex + " --out " + d + "/sum_" + s +
                   ".jsonl");
  }
  cmds.push_back(cli + " summarize --seed 7 --beta-prime 0.1" + in + model + " --out " + d + "/sum_background.jsonl");
  cmds.push_back(cli + " summarize --seed 7 --corpus " + data + "/corpus.jsonl --checkpoint " + d +
                 "/featurized.ckpt --out " + d + "/sum_featurized.jsonl");
  cmds.push_back(cli + " aspect --seed 7 --aspect topic0" + in + model + lex + " --out " + d + "/aspect.jsonl");
  cmds.push_back(cli + " seeded --seed 7 --seeds " + d + "/seeds.tsv" + in + model + " --out " + d + "/seeded.jsonl");
  cmds.push_back(cli + " seeded --seed 7 --multi-aspect topic0,topic1" + in + model + lex + " --out " + d +
                 "/multi.jsonl");
  cmds.push_back(cli + " eval --summaries " + d + "/sum_plain.jsonl --gold " + data + "/gold.jsonl" + lex +
                 " --out " + d + "/eval.csv");
  cmds.push_back(cli + " inspect --seed 7 --clusters 4" + in + model + " --out " + d + "/inspect.json");
  cmds.push_back(cli + " gradcheck --seed 7 --out " + d + "/gradcheck.json");
  for (const auto& c : cmds) {
    if (sh(c) != 0) return c;
  }
  return "";
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("semae-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(root);
  const fs::path a = root / "a", b = root / "b";
  fs::create_directories(a);
  fs::create_directories(b);
  for (const auto& dir : {a, b}) {
    const std::string failed = run_pipeline(dir);
    if (!failed.empty()) {
      fs::remove_all(root);
      return {false, "command failed: " + failed};
    }
  }
  int files = 0, differ = 0;
  std::set<std::string> commands;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    ++files;
    if (!fs::exists(b / rel) || file_hash(entry.path()) != file_hash(b / rel)) ++differ;
  }
  fs::remove_all(root);
  return {differ == 0 && files >= 20, std::to_string(files) + " output files from all 8 commands, " +
                                           std::to_string(differ) + " hash mismatches"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradient_correctness},
      {"literal L1 nullity", literal_l1_nullity},
      {"selection oracle equivalence", selection_oracles},
      {"reduction identities", reduction_identities},
      {"OT numerics", ot_numerics},
      {"metric oracles", metric_oracles},
      {"desk-scale semantic recovery", semantic_recovery},
      {"directional summarization quality", summarization_quality},
      {"sparsity direction", sparsity_direction},
      {"determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!only.empty() && !only.contains(number)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << number << " " << (o.pass ? "PASS" : "FAIL") << " [" << criteria[i].first
              << "]: " << o.detail << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
