#include "semae/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "semae/checkpoint.hpp"
#include "semae/corpus.hpp"
#include "semae/eval.hpp"
#include "semae/ot.hpp"
#include "semae/rng.hpp"
#include "semae/trainer.hpp"

namespace semae::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string to_string(Command c) {
  switch (c) {
    case Command::synth: return "synth";
    case Command::train: return "train";
    case Command::summarize: return "summarize";
    case Command::aspect: return "aspect";
    case Command::seeded: return "seeded";
    case Command::eval: return "eval";
    case Command::inspect: return "inspect";
    case Command::gradcheck: return "gradcheck";
  }
  return "summarize";
}

namespace {

Command parse_command(const std::string& s) {
  for (Command c : {Command::synth, Command::train, Command::summarize, Command::aspect, Command::seeded,
                    Command::eval, Command::inspect, Command::gradcheck}) {
    if (to_string(c) == s) return c;
  }
  throw CLI::ValidationError("command", "unknown command '" + s + "'");
}

struct Profile {
  int heads;
  int dict_size;
  int dim;
  double lambda1;
};

Profile profile_for(const std::string& name) {
  if (name == "desk-space") return {4, 32, 32, 1e4};
  if (name == "desk-amazon") return {4, 32, 32, 1e3};
  if (name == "space") return {8, 1024, 320, 1e4};
  if (name == "amazon") return {8, 1024, 320, 1e3};
  throw CLI::ValidationError("--profile", "unknown profile '" + name + "'");
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// `key = value` lines become `--key=value`.
std::vector<std::string> config_file_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open config file " + path);
  std::vector<std::string> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw CLI::ValidationError("--config", path + ":" + std::to_string(no) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    out.push_back("--" + key + "=" + value);
  }
  return out;
}

struct SplitArgs {
  std::vector<std::string> from_file;
  std::vector<std::string> given;
};

// Pulls `--config <file>` out of args.
SplitArgs expand_config(const std::vector<std::string>& args) {
  SplitArgs out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config", 1, 0);
      out.from_file = config_file_args(args[++i]);
    } else if (args[i].rfind("--config=", 0) == 0) {
      out.from_file = config_file_args(args[i].substr(9));
    } else {
      out.given.push_back(args[i]);
    }
  }
  return out;
}

std::string find_flag(const std::vector<std::string>& args, const std::string& flag, std::string fallback) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == flag && i + 1 < args.size()) fallback = args[i + 1];
    if (args[i].rfind(flag + "=", 0) == 0) fallback = args[i].substr(flag.size() + 1);
  }
  return fallback;
}

std::uint64_t stream_seed(std::uint64_t seed, const char* name) { return Rng::substream(seed, name).next(); }

void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& writer) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ArgumentError("cannot write " + tmp.string());
    writer(out);
    out.flush();
    if (!out) throw ArgumentError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string num(double v, const char* format = "%.10g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

void require(const std::string& value, const char* flag, Command c) {
  if (value.empty()) {
    throw CLI::RequiredError(std::string(flag) + " (required by " + to_string(c) + ")");
  }
}

struct Inputs {
  Corpus corpus;
  EmbeddingSet embeddings;
};

Inputs load_inputs(const std::string& corpus_path, const std::string& embeddings_path, int dim, std::uint64_t seed) {
  Inputs in;
  in.corpus = load_corpus(corpus_path);
  if (!embeddings_path.empty()) {
    in.embeddings = load_embeddings(embeddings_path, in.corpus);
  } else {
    in.embeddings = featurize(in.corpus, static_cast<std::size_t>(dim), stream_seed(seed, "featurize"));
  }
  return in;
}

AspectLexicon load_lexicon_from(const RunConfig& cfg, bool required) {
  if (cfg.paths.lexicon.empty() || cfg.paths.aspects.empty()) {
    if (required) throw ConfigError("--lexicon and --aspects are required for " + to_string(cfg.command));
    return {};
  }
  return load_lexicon(cfg.paths.lexicon, cfg.paths.aspects);
}

void emit_summary(std::ostream& out, const std::string& strategy, const EntityReps& reps, const Summary& s,
                  const Corpus& corpus) {
  if (s.items.empty()) {
    ojson j;
    j["entity_id"] = reps.entity_id;
    j["strategy"] = strategy;
    j["status"] = s.status == SummaryStatus::empty ? "empty" : "ok";
    j["note"] = s.note;
    j["converged"] = s.converged;
    out << j.dump() << '\n';
    return;
  }
  int rank = 0;
  for (const auto& item : s.items) {
    const SentenceRecord* rec = corpus.find(item.key);
    ojson j;
    j["entity_id"] = item.key.entity_id;
    j["strategy"] = strategy;
    j["rank"] = rank++;
    j["review_id"] = item.key.review_id;
    j["sentence_idx"] = item.key.sentence_idx;
    j["score"] = item.score;
    j["aspects"] = item.aspects;
    j["text"] = rec ? rec->text : "";
    j["converged"] = s.converged;
    out << j.dump() << '\n';
  }
}

// Index of the corpus for O(log n) key lookups during output.
Corpus indexed(Corpus c) {
  std::sort(c.records.begin(), c.records.end(),
            [](const SentenceRecord& a, const SentenceRecord& b) { return a.key() < b.key(); });
  return c;
}

const SentenceRecord* lookup(const Corpus& sorted, const SentenceKey& key) {
  auto it = std::lower_bound(sorted.records.begin(), sorted.records.end(), key,
                             [](const SentenceRecord& r, const SentenceKey& k) { return r.key() < k; });
  return it != sorted.records.end() && it->key() == key ? &*it : nullptr;
}

void emit(std::ostream& out, const std::string& strategy, const EntityReps& reps, const Summary& s,
          const Corpus& sorted) {
  Corpus view;
  for (const auto& item : s.items) {
    if (const auto* r = lookup(sorted, item.key)) view.records.push_back(*r);
  }
  emit_summary(out, strategy, reps, s, view);
}

Summary run_strategy(const RunConfig& cfg, const EntityReps& reps, const SemaeModel& model,
                     const AspectLexicon& lexicon, const Matrix* background) {
  const auto& sc = cfg.select;
  try {
    switch (sc.strategy) {
      case Strategy::plain:
        return sc.beta_prime > 0.0 && background ? select_informative_general(reps, *background, sc)
                                                 : select_plain(reps, sc);
      case Strategy::redundancy: return select_redundancy(reps, sc);
      case Strategy::aspect:
      case Strategy::aspect_redundancy: return select_aspect_aware(reps, lexicon, sc);
      case Strategy::herding: return select_herding(reps, sc);
      case Strategy::clustering: {
        SelectionConfig local = sc;
        local.seed = stream_seed(cfg.seed, "kmeans");
        return select_clustering(reps, local);
      }
      case Strategy::ot: return select_ot(reps, model.dictionary, sc);
    }
  } catch (const ArgumentError& e) {
    Summary s;
    s.status = SummaryStatus::empty;
    s.note = e.what();
    return s;
  }
  return {};
}

// ---- commands -------------------------------------------------------------

std::vector<std::string> cmd_synth(const RunConfig& cfg) {
  require(cfg.paths.out, "--out", cfg.command);
  SynthSpec spec;
  spec.n_entities = cfg.synth.entities;
  spec.reviews_per_entity = cfg.synth.reviews;
  spec.sentences_per_review = cfg.synth.sentences;
  spec.n_topics = cfg.synth.topics;
  spec.dim = static_cast<std::size_t>(cfg.dim);
  spec.topic_separation = cfg.synth.separation;
  spec.noise_sigma = cfg.synth.noise;
  spec.rng_seed = cfg.seed;
  SynthData data = synth_generate(spec);
  const fs::path dir = cfg.paths.out;
  fs::create_directories(dir);
  std::vector<std::string> outputs;
  auto put = [&](const char* name, const std::function<void(std::ostream&)>& w) {
    write_atomic(dir / name, w);
    outputs.push_back((dir / name).string());
  };
  put("corpus.jsonl", [&](std::ostream& o) { write_corpus(data.corpus, o); });
  put("embeddings.tsv", [&](std::ostream& o) { write_embeddings(data.embeddings, o); });
  put("truth.tsv", [&](std::ostream& o) {
    for (const auto& [k, t] : data.topic) o << k.entity_id << '\t' << k.review_id << '\t' << k.sentence_idx << '\t' << t << '\n';
  });
  put("gold.jsonl", [&](std::ostream& o) {
    for (const auto& [entity, keys] : synth_gold(data)) {
      ojson j;
      j["entity_id"] = entity;
      std::string text;
      for (const auto& k : keys) text += (text.empty() ? "" : " ") + data.corpus.find(k)->text;
      j["summaries"] = {text};
      o << j.dump() << '\n';
    }
  });
  std::ostringstream lex, order;
  write_lexicon(data.lexicon, lex, order);
  put("lexicon.tsv", [&](std::ostream& o) { o << lex.str(); });
  put("aspects.txt", [&](std::ostream& o) { o << order.str(); });
  return outputs;
}

std::vector<std::string> cmd_train(const RunConfig& cfg) {
  require(cfg.paths.corpus, "--corpus", cfg.command);
  require(cfg.paths.checkpoint, "--checkpoint", cfg.command);
  Inputs in = load_inputs(cfg.paths.corpus, cfg.paths.embeddings, cfg.dim, cfg.seed);
  TrainConfig tc = cfg.train;
  tc.rng_seed = cfg.seed;
  TrainResult result = train(in.corpus, in.embeddings, tc);
  std::ostringstream ckpt;
  write_checkpoint(result.model, ckpt);
  write_atomic(cfg.paths.checkpoint, [&](std::ostream& o) { o << ckpt.str(); });
  const std::string metrics = cfg.paths.out.empty() ? cfg.paths.checkpoint + ".metrics.csv" : cfg.paths.out;
  write_atomic(metrics, [&](std::ostream& o) {
    o << "epoch,total,recon,l1,ent\n";
    for (const auto& e : result.report.epochs) {
      o << e.epoch << ',' << num(e.parts.total) << ',' << num(e.parts.recon) << ',' << num(e.parts.l1) << ','
        << num(e.parts.ent) << '\n';
    }
  });
  return {cfg.paths.checkpoint, metrics};
}

struct Encoded {
  SemaeModel model;
  Inputs inputs;
  std::vector<EntityReps> entities;
  Corpus sorted;
};

Encoded encode_run(const RunConfig& cfg) {
  require(cfg.paths.corpus, "--corpus", cfg.command);
  require(cfg.paths.checkpoint, "--checkpoint", cfg.command);
  Encoded e;
  e.model = load_checkpoint(cfg.paths.checkpoint);
  e.inputs = load_inputs(cfg.paths.corpus, cfg.paths.embeddings, e.model.dim(), cfg.seed);
  if (e.inputs.embeddings.dim != static_cast<std::size_t>(e.model.dim())) {
    throw DimensionError("embeddings have dimension " + std::to_string(e.inputs.embeddings.dim) +
                         ", checkpoint expects " + std::to_string(e.model.dim()));
  }
  e.entities = encode_entities(e.inputs.corpus, e.inputs.embeddings, e.model);
  e.sorted = indexed(e.inputs.corpus);
  return e;
}

std::vector<std::string> cmd_summarize(const RunConfig& cfg) {
  require(cfg.paths.out, "--out", cfg.command);
  const bool aspectual = cfg.select.strategy == Strategy::aspect || cfg.select.strategy == Strategy::aspect_redundancy;
  AspectLexicon lexicon = load_lexicon_from(cfg, aspectual);
  Encoded e = encode_run(cfg);
  Matrix background;
  if (cfg.select.beta_prime > 0.0 && cfg.select.strategy == Strategy::plain) background = background_rep(e.entities);
  write_atomic(cfg.paths.out, [&](std::ostream& o) {
    for (const auto& reps : e.entities) {
      Summary s = run_strategy(cfg, reps, e.model, lexicon, background.size() ? &background : nullptr);
      emit(o, to_string(cfg.select.strategy), reps, s, e.sorted);
    }
  });
  return {cfg.paths.out};
}

std::vector<std::string> cmd_aspect(const RunConfig& cfg) {
  require(cfg.paths.out, "--out", cfg.command);
  require(cfg.aspect, "--aspect", cfg.command);
  AspectLexicon lexicon = load_lexicon_from(cfg, true);
  if (std::find(lexicon.aspects.begin(), lexicon.aspects.end(), cfg.aspect) == lexicon.aspects.end()) {
    throw ConfigError("aspect '" + cfg.aspect + "' is not declared in the aspect file");
  }
  Encoded e = encode_run(cfg);
  std::map<std::string, EntityReps> dev;
  if (!cfg.paths.dev_corpus.empty()) {
    Inputs din = load_inputs(cfg.paths.dev_corpus, cfg.paths.dev_embeddings, e.model.dim(), cfg.seed);
    for (auto& r : encode_entities(din.corpus, din.embeddings, e.model)) dev[r.entity_id] = std::move(r);
  }
  write_atomic(cfg.paths.out, [&](std::ostream& o) {
    for (const auto& reps : e.entities) {
      auto it = dev.find(reps.entity_id);
      const EntityReps& source = it != dev.end() ? it->second : reps;
      Summary s = select_aspect_summary(reps, aspect_set(source, cfg.aspect, lexicon), cfg.select);
      for (auto& item : s.items) item.aspects = {cfg.aspect};
      emit(o, "aspect:" + cfg.aspect, reps, s, e.sorted);
    }
  });
  return {cfg.paths.out};
}

std::map<std::string, std::vector<SentenceKey>> read_seed_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open seed file " + path);
  std::map<std::string, std::vector<SentenceKey>> seeds;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    SentenceKey k;
    if (!std::getline(ls, k.entity_id, '\t') || !std::getline(ls, k.review_id, '\t') || !(ls >> k.sentence_idx)) {
      throw ParseError("seed file line " + std::to_string(no) + ": expected entity\\treview\\tindex");
    }
    seeds[k.entity_id].push_back(k);
  }
  return seeds;
}

std::vector<std::string> cmd_seeded(const RunConfig& cfg) {
  require(cfg.paths.out, "--out", cfg.command);
  if (cfg.paths.seeds.empty() == cfg.multi_aspect.empty()) {
    throw ConfigError("seeded needs exactly one of --seeds or --multi-aspect");
  }
  AspectLexicon lexicon = load_lexicon_from(cfg, !cfg.multi_aspect.empty());
  auto seeds = cfg.paths.seeds.empty() ? std::map<std::string, std::vector<SentenceKey>>{} : read_seed_file(cfg.paths.seeds);
  Encoded e = encode_run(cfg);
  write_atomic(cfg.paths.out, [&](std::ostream& o) {
    for (const auto& reps : e.entities) {
      if (!cfg.multi_aspect.empty()) {
        emit(o, "multi_aspect", reps, select_multi_aspect(reps, cfg.multi_aspect, lexicon, cfg.select), e.sorted);
        continue;
      }
      auto it = seeds.find(reps.entity_id);
      if (it == seeds.end()) continue;
      emit(o, "seeded", reps, select_seeded(reps, it->second, cfg.select), e.sorted);
    }
  });
  return {cfg.paths.out};
}

std::vector<std::string> cmd_eval(const RunConfig& cfg) {
  require(cfg.paths.summaries, "--summaries", cfg.command);
  require(cfg.paths.gold, "--gold", cfg.command);
  require(cfg.paths.out, "--out", cfg.command);
  AspectLexicon lexicon = load_lexicon_from(cfg, false);

  std::map<std::string, std::vector<Tokens>> gold;
  {
    std::ifstream in(cfg.paths.gold);
    if (!in) throw ArgumentError("cannot open gold file " + cfg.paths.gold);
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
      ++no;
      if (trim(line).empty()) continue;
      try {
        auto j = nlohmann::json::parse(line);
        auto& refs = gold[j.at("entity_id").get<std::string>()];
        for (const auto& s : j.at("summaries")) refs.push_back(tokenize(s.get<std::string>()));
      } catch (const nlohmann::json::exception& ex) {
        throw ParseError("gold line " + std::to_string(no) + ": " + ex.what());
      }
    }
  }

  // (strategy, entity) -> sentence token lists, in file order.
  std::map<std::pair<std::string, std::string>, std::vector<Tokens>> summaries;
  {
    std::ifstream in(cfg.paths.summaries);
    if (!in) throw ArgumentError("cannot open summary file " + cfg.paths.summaries);
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
      ++no;
      if (trim(line).empty()) continue;
      try {
        auto j = nlohmann::json::parse(line);
        auto& sents = summaries[{j.at("strategy").get<std::string>(), j.at("entity_id").get<std::string>()}];
        if (j.contains("text")) sents.push_back(tokenize(j["text"].get<std::string>()));
      } catch (const nlohmann::json::exception& ex) {
        throw ParseError("summary line " + std::to_string(no) + ": " + ex.what());
      }
    }
  }

  write_atomic(cfg.paths.out, [&](std::ostream& o) {
    o << "entity_id,strategy,R1,R2,RL,distinct2,n_asp\n";
    std::map<std::string, std::array<double, 6>> totals;
    for (const auto& [key, sents] : summaries) {
      const auto& [strategy, entity] = key;
      auto g = gold.find(entity);
      if (g == gold.end()) continue;
      Tokens cand;
      for (const auto& s : sents) cand.insert(cand.end(), s.begin(), s.end());
      const double r1 = rouge_n(cand, g->second, 1).f1;
      const double r2 = rouge_n(cand, g->second, 2).f1;
      const double rl = rouge_l(cand, g->second).f1;
      const double d2 = distinct_n(sents, 2);
      const int nasp = lexicon.empty() ? 0 : aspect_coverage(sents, lexicon);
      o << entity << ',' << strategy << ',' << num(r1, "%.6f") << ',' << num(r2, "%.6f") << ',' << num(rl, "%.6f")
        << ',' << num(d2, "%.6f") << ',' << nasp << '\n';
      auto& t = totals[strategy];
      t[0] += r1;
      t[1] += r2;
      t[2] += rl;
      t[3] += d2;
      t[4] += nasp;
      t[5] += 1;
    }
    for (const auto& [strategy, t] : totals) {
      o << "ALL," << strategy;
      for (int i = 0; i < 5; ++i) o << ',' << num(t[static_cast<std::size_t>(i)] / t[5], "%.6f");
      o << '\n';
    }
  });
  return {cfg.paths.out};
}

std::vector<std::string> cmd_inspect(const RunConfig& cfg) {
  require(cfg.paths.out, "--out", cfg.command);
  Encoded e = encode_run(cfg);
  ClusterReport report = dictionary_cluster_report(e.model, e.inputs.corpus, e.inputs.embeddings, cfg.clusters,
                                                   stream_seed(cfg.seed, "kmeans"));
  ojson j;
  j["clusters"] = report.clusters;
  j["element_cluster"] = report.element_cluster;
  j["top"] = ojson::array();
  for (std::size_t h = 0; h < report.top.size(); ++h) {
    for (std::size_t c = 0; c < report.top[h].size(); ++c) {
      ojson entry;
      entry["head"] = h;
      entry["cluster"] = c;
      entry["sentences"] = ojson::array();
      for (const auto& s : report.top[h][c]) {
        const auto* rec = lookup(e.sorted, s.key);
        entry["sentences"].push_back({{"entity_id", s.key.entity_id},
                                      {"review_id", s.key.review_id},
                                      {"sentence_idx", s.key.sentence_idx},
                                      {"similarity", s.similarity},
                                      {"text", rec ? rec->text : ""}});
      }
      j["top"].push_back(std::move(entry));
    }
  }
  write_atomic(cfg.paths.out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  return {cfg.paths.out};
}

std::vector<std::string> cmd_gradcheck(const RunConfig& cfg, double& max_error) {
  SemaeModel model;
  std::vector<Vector> batch;
  if (!cfg.paths.checkpoint.empty()) {
    require(cfg.paths.corpus, "--corpus", cfg.command);
    model = load_checkpoint(cfg.paths.checkpoint);
    Inputs in = load_inputs(cfg.paths.corpus, cfg.paths.embeddings, model.dim(), cfg.seed);
    auto rows = training_rows(in.corpus, in.embeddings);
    rows.resize(std::min(rows.size(), static_cast<std::size_t>(cfg.train.batch_size)));
    batch = std::move(rows);
    model.config.lambda1 = cfg.train.lambda1;
    model.config.lambda2 = cfg.train.lambda2;
    model.config.l1_mode = cfg.train.l1_mode;
  } else {
    model = make_random_model(cfg.dim, cfg.train.heads, cfg.train.dict_size, cfg.train.attention_kernel,
                              cfg.train.l1_mode, cfg.seed);
    model.config.lambda1 = cfg.train.lambda1;
    model.config.lambda2 = cfg.train.lambda2;
    batch = make_random_batch(cfg.dim, 3, cfg.seed);
  }
  if (batch.empty()) throw ArgumentError("gradcheck: no sentences");
  max_error = grad_check(model, batch, cfg.grad_epsilon);
  if (!cfg.paths.out.empty()) {
    write_atomic(cfg.paths.out, [&](std::ostream& o) {
      ojson j;
      j["max_relative_error"] = max_error;
      j["epsilon"] = cfg.grad_epsilon;
      j["kernel"] = to_string(model.config.attention_kernel);
      j["l1_mode"] = to_string(model.config.l1_mode);
      o << j.dump() << '\n';
    });
    return {cfg.paths.out};
  }
  return {};
}

}  // namespace

namespace {

struct CommandHelp : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace

RunConfig parse_args(const std::vector<std::string>& raw) {
  if (raw.empty()) throw CLI::CallForHelp();
  if (raw.front() == "-h" || raw.front() == "--help") throw CLI::CallForHelp();
  RunConfig cfg;
  cfg.command = parse_command(raw.front());
  const SplitArgs split = expand_config({raw.begin() + 1, raw.end()});
  std::vector<std::string> args = split.from_file;
  args.insert(args.end(), split.given.begin(), split.given.end());

  cfg.profile = find_flag(args, "--profile", cfg.profile);
  const Profile prof = profile_for(cfg.profile);
  cfg.dim = prof.dim;
  cfg.train.heads = prof.heads;
  cfg.train.dict_size = prof.dict_size;
  cfg.train.lambda1 = prof.lambda1;
  cfg.select.beta_prime = 0.0;
  if (cfg.command == Command::gradcheck) {
    cfg.dim = 4;
    cfg.train.heads = 2;
    cfg.train.dict_size = 3;
    cfg.train.lambda1 = 0.5;
    cfg.train.lambda2 = 0.3;
  }

  CLI::App app{"semae " + to_string(cfg.command), "semae " + to_string(cfg.command)};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--seed", cfg.seed, "master seed; split into named substreams");
  app.add_option("--profile", cfg.profile, "desk-space | desk-amazon | space | amazon");
  app.add_option("--out", cfg.paths.out, "output path (directory for synth)");

  const Command c = cfg.command;
  const bool uses_model = c == Command::summarize || c == Command::aspect || c == Command::seeded ||
                          c == Command::inspect || c == Command::gradcheck;
  if (c == Command::train || uses_model) {
    app.add_option("--corpus", cfg.paths.corpus, "review corpus (JSON lines)");
    app.add_option("--embeddings", cfg.paths.embeddings, "sentence embeddings; featurized when absent");
    app.add_option("--checkpoint", cfg.paths.checkpoint, "model checkpoint");
  }
  if (c == Command::train || c == Command::synth || c == Command::gradcheck) {
    app.add_option("--dim", cfg.dim, "embedding width for featurization / synthesis")->check(CLI::PositiveNumber);
  }
  if (c == Command::train || c == Command::gradcheck) {
    app.add_option("--lambda1", cfg.train.lambda1)->check(CLI::NonNegativeNumber);
    app.add_option("--lambda2", cfg.train.lambda2)->check(CLI::NonNegativeNumber);
    app.add_option("--heads", cfg.train.heads)->check(CLI::PositiveNumber);
    app.add_option("--dict-size", cfg.train.dict_size)->check(CLI::Range(2, 1 << 20));
    app.add_option("--batch-size", cfg.train.batch_size)->check(CLI::PositiveNumber);
    app.add_option("--kernel", cfg.train.attention_kernel, "dot_softmax | neg_sqdist_softmax")
        ->transform(CLI::CheckedTransformer(std::map<std::string, Kernel>{
            {"dot_softmax", Kernel::dot_softmax}, {"neg_sqdist_softmax", Kernel::neg_sqdist_softmax}}));
    app.add_option("--l1-mode", cfg.train.l1_mode, "post_softmax | pre_softmax_abs")
        ->transform(CLI::CheckedTransformer(std::map<std::string, L1Mode>{
            {"post_softmax", L1Mode::post_softmax}, {"pre_softmax_abs", L1Mode::pre_softmax_abs}}));
  }
  if (c == Command::train) {
    app.add_option("--epochs", cfg.train.epochs)->check(CLI::Range(1, 1000000));
    app.add_option("--lr", cfg.train.learning_rate)->check(CLI::NonNegativeNumber);
    app.add_option("--weight-decay", cfg.train.weight_decay)->check(CLI::NonNegativeNumber);
  }
  if (c == Command::gradcheck) app.add_option("--epsilon", cfg.grad_epsilon)->check(CLI::Range(1e-7, 1e-3));
  int m_flag = 0;
  if (c == Command::summarize || c == Command::aspect || c == Command::seeded) {
    app.add_option("--n", cfg.select.n)->check(CLI::PositiveNumber);
    app.add_option("--token-budget", cfg.select.token_budget)->check(CLI::PositiveNumber);
    app.add_option("--gamma", cfg.select.gamma)->check(CLI::NonNegativeNumber);
    app.add_option("--beta", cfg.select.beta)->check(CLI::NonNegativeNumber);
    app.add_option("--beta-prime", cfg.select.beta_prime, "background informativeness for plain (0 = off)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--m", m_flag, "sentences per aspect bucket")->check(CLI::PositiveNumber);
    app.add_option("--cluster-k", cfg.select.cluster_k)->check(CLI::PositiveNumber);
    app.add_option("--cluster-gamma", cfg.select.cluster_gamma)->check(CLI::NonNegativeNumber);
    app.add_option("--divergence", cfg.select.divergence, "kl | cosine")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, Divergence>{{"kl", Divergence::kl}, {"cosine", Divergence::cosine}}));
  }
  if (c == Command::summarize) {
    std::map<std::string, Strategy> strategies;
    for (Strategy s : {Strategy::plain, Strategy::redundancy, Strategy::aspect, Strategy::aspect_redundancy,
                       Strategy::herding, Strategy::clustering, Strategy::ot}) {
      strategies[to_string(s)] = s;
    }
    app.add_option("--strategy", cfg.select.strategy)->transform(CLI::CheckedTransformer(strategies));
  }
  if (c == Command::summarize || c == Command::aspect || c == Command::seeded || c == Command::eval) {
    app.add_option("--lexicon", cfg.paths.lexicon, "aspect keyword lexicon");
    app.add_option("--aspects", cfg.paths.aspects, "declared aspect order");
  }
  if (c == Command::aspect) {
    app.add_option("--aspect", cfg.aspect, "aspect to summarize");
    app.add_option("--dev-corpus", cfg.paths.dev_corpus, "held-out corpus for aspect sentence sets");
    app.add_option("--dev-embeddings", cfg.paths.dev_embeddings);
    app.add_flag("--widen", cfg.select.widen_aspect_pool, "rank all entity sentences, not just the aspect set");
  }
  if (c == Command::seeded) {
    app.add_option("--seeds", cfg.paths.seeds, "seed sentence keys, entity\\treview\\tindex per line");
    app.add_option("--multi-aspect", cfg.multi_aspect, "aspects for multi-aspect summaries")->delimiter(',');
  }
  if (c == Command::eval) {
    app.add_option("--summaries", cfg.paths.summaries, "summary records (JSON lines) to score");
    app.add_option("--gold", cfg.paths.gold, "reference summaries, {\"entity_id\", \"summaries\": [...]} per line");
  }
  if (c == Command::inspect) app.add_option("--clusters", cfg.clusters)->check(CLI::PositiveNumber);
  if (c == Command::synth) {
    app.add_option("--entities", cfg.synth.entities)->check(CLI::PositiveNumber);
    app.add_option("--reviews", cfg.synth.reviews)->check(CLI::PositiveNumber);
    app.add_option("--sentences", cfg.synth.sentences)->check(CLI::PositiveNumber);
    app.add_option("--topics", cfg.synth.topics)->check(CLI::PositiveNumber);
    app.add_option("--separation", cfg.synth.separation)->check(CLI::PositiveNumber);
    app.add_option("--noise", cfg.synth.noise)->check(CLI::NonNegativeNumber);
  }

  // A shared config file may carry keys meant for other commands.
  args.clear();
  for (const auto& token : split.from_file) {
    if (app.get_option_no_throw(token.substr(0, token.find('='))) == nullptr) continue;
    args.push_back(token);
  }
  args.insert(args.end(), split.given.begin(), split.given.end());
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw CommandHelp(app.help());
  }
  if (!reversed.empty()) throw CLI::ExtrasError({reversed.rbegin(), reversed.rend()});
  if (m_flag > 0) cfg.select.m = m_flag;
  cfg.train.validate();
  cfg.select.validate();
  return cfg;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  RunConfig cfg;
  try {
    cfg = parse_args(args);
  } catch (const CLI::CallForHelp&) {
    out << "usage: semae <synth|train|summarize|aspect|seeded|eval|inspect|gradcheck> [flags]\n"
           "       semae <command> --help for the flags of one command\n";
    return kOk;
  } catch (const CommandHelp& h) {
    out << h.what();
    return kOk;
  } catch (const CLI::Error& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  std::vector<std::string> outputs;
  double grad_error = 0.0;
  try {
    switch (cfg.command) {
      case Command::synth: outputs = cmd_synth(cfg); break;
      case Command::train: outputs = cmd_train(cfg); break;
      case Command::summarize: outputs = cmd_summarize(cfg); break;
      case Command::aspect: outputs = cmd_aspect(cfg); break;
      case Command::seeded: outputs = cmd_seeded(cfg); break;
      case Command::eval: outputs = cmd_eval(cfg); break;
      case Command::inspect: outputs = cmd_inspect(cfg); break;
      case Command::gradcheck: outputs = cmd_gradcheck(cfg, grad_error); break;
    }
  } catch (const CLI::Error& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  }

  ojson record;
  record["command"] = to_string(cfg.command);
  int code = kOk;
  if (cfg.command == Command::gradcheck) {
    record["max_relative_error"] = grad_error;
    if (!(grad_error < 1e-4)) code = kNumerical;
  }
  record["status"] = code == kOk ? "ok" : "failed";
  record["elapsed_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  record["outputs"] = outputs;
  out << record.dump() << '\n';
  return code;
}

}  // namespace semae::cli
