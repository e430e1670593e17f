#include "semae/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "semae/rng.hpp"

namespace semae {

namespace {

// Decodes one UTF-8 sequence starting at text[i]; returns the code point
// and advances i. Invalid bytes decode as themselves.
char32_t next_code_point(std::string_view text, std::size_t& i) {
  auto byte = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
  unsigned char c = byte(i);
  std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
  if (len == 0 || i + len > text.size()) {
    ++i;
    return c;
  }
  char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
  for (std::size_t k = 1; k < len; ++k) {
    if ((byte(i + k) & 0xC0) != 0x80) {
      ++i;
      return c;
    }
    cp = (cp << 6) | (byte(i + k) & 0x3F);
  }
  i += len;
  return cp;
}

bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' ||
         cp == 0x00A0 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 ||
         cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

bool is_punct(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  switch (cp) {
    case 0x00A1: case 0x00A7: case 0x00AB: case 0x00B6: case 0x00B7: case 0x00BB:
    case 0x00BF: case 0x037E: case 0x0387: case 0xFF3F:
      return true;
    default:
      break;
  }
  return (cp >= 0x2010 && cp <= 0x2027) || (cp >= 0x2030 && cp <= 0x205E) ||
         (cp >= 0x2E00 && cp <= 0x2E4F) || (cp >= 0x3001 && cp <= 0x3003) ||
         (cp >= 0x3008 && cp <= 0x3011) || (cp >= 0x3014 && cp <= 0x301F) ||
         (cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
         (cp >= 0xFF3B && cp <= 0xFF3D) || (cp >= 0xFF5B && cp <= 0xFF65);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

double parse_number(const std::string& s, std::size_t line_no, const char* what) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": invalid " + what + " '" + s + "'");
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t start = i;
    char32_t cp = next_code_point(text, i);
    if (is_space(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else if (is_punct(cp)) {
      continue;
    } else if (cp < 0x80) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(cp))));
    } else {
      current.append(text.substr(start, i - start));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::map<std::string, std::vector<std::size_t>> Corpus::by_entity() const {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) groups[records[i].entity_id].push_back(i);
  return groups;
}

const SentenceRecord* Corpus::find(const SentenceKey& key) const {
  for (const auto& r : records) {
    if (r.entity_id == key.entity_id && r.review_id == key.review_id &&
        r.sentence_idx == key.sentence_idx)
      return &r;
  }
  return nullptr;
}

Corpus parse_corpus(std::istream& in) {
  Corpus corpus;
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    auto fail = [&](const std::string& what) {
      throw ParseError("line " + std::to_string(line_no) + ": " + what);
    };
    if (!j.is_object()) fail("record is not an object");
    if (!j.contains("entity_id") || !j["entity_id"].is_string()) fail("missing string field entity_id");
    if (!j.contains("review_id") || !j["review_id"].is_string()) fail("missing string field review_id");
    if (!j.contains("sentences") || !j["sentences"].is_array()) fail("missing array field sentences");
    std::string entity = j["entity_id"].get<std::string>();
    std::string review = j["review_id"].get<std::string>();
    if (!seen.emplace(entity, review).second) {
      throw DuplicateKeyError("line " + std::to_string(line_no) + ": duplicate review (" + entity +
                              ", " + review + ")");
    }
    std::size_t idx = 0;
    for (const auto& s : j["sentences"]) {
      if (!s.is_string()) fail("sentence is not a string");
      SentenceRecord r;
      r.entity_id = entity;
      r.review_id = review;
      r.sentence_idx = idx++;
      r.text = s.get<std::string>();
      r.tokens = tokenize(r.text);
      corpus.records.push_back(std::move(r));
    }
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open corpus file " + path.string());
  return parse_corpus(in);
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  std::size_t i = 0;
  const auto& recs = corpus.records;
  while (i < recs.size()) {
    nlohmann::ordered_json j;
    j["entity_id"] = recs[i].entity_id;
    j["review_id"] = recs[i].review_id;
    j["sentences"] = nlohmann::ordered_json::array();
    std::size_t k = i;
    while (k < recs.size() && recs[k].entity_id == recs[i].entity_id &&
           recs[k].review_id == recs[i].review_id) {
      j["sentences"].push_back(recs[k].text);
      ++k;
    }
    out << j.dump() << '\n';
    i = k;
  }
}

bool EmbeddingSet::operator==(const EmbeddingSet& other) const {
  if (dim != other.dim || rows.size() != other.rows.size()) return false;
  auto it = other.rows.begin();
  for (const auto& [key, v] : rows) {
    if (key != it->first || v.size() != it->second.size() || v != it->second) return false;
    ++it;
  }
  return true;
}

Matrix EmbeddingSet::matrix_for(const std::vector<SentenceRecord>& records) const {
  Matrix m(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto it = rows.find(records[i].key());
    if (it == rows.end()) throw ArgumentError("no embedding for " + records[i].key().str());
    m.row(static_cast<Eigen::Index>(i)) = it->second.transpose();
  }
  return m;
}

EmbeddingSet parse_embeddings(std::istream& in, const Corpus& corpus) {
  std::set<SentenceKey> known;
  for (const auto& r : corpus.records) known.insert(r.key());

  EmbeddingSet set;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    if (!have_header) {
      if (line.rfind("dim=", 0) != 0) throw ParseError("line 1: expected header 'dim=<d>'");
      double d = parse_number(line.substr(4), line_no, "dimension");
      if (d < 1 || d != std::floor(d)) throw ParseError("line 1: dimension must be a positive integer");
      set.dim = static_cast<std::size_t>(d);
      have_header = true;
      continue;
    }
    auto fields = split_tabs(line);
    if (fields.size() != 4) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 4 tab-separated fields");
    }
    double idx = parse_number(fields[2], line_no, "sentence index");
    if (idx < 0 || idx != std::floor(idx)) {
      throw ParseError("line " + std::to_string(line_no) + ": invalid sentence index");
    }
    SentenceKey key{fields[0], fields[1], static_cast<std::size_t>(idx)};
    if (!known.contains(key)) {
      throw ParseError("line " + std::to_string(line_no) + ": unknown sentence " + key.str());
    }
    std::istringstream values(fields[3]);
    std::vector<double> v;
    std::string tok;
    while (values >> tok) v.push_back(parse_number(tok, line_no, "value"));
    if (v.size() != set.dim) {
      throw DimensionError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(set.dim) + " values, got " + std::to_string(v.size()));
    }
    for (double x : v) {
      if (!std::isfinite(x)) throw ParseError("line " + std::to_string(line_no) + ": non-finite value");
    }
    Vector row = Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    if (!set.rows.emplace(key, std::move(row)).second) {
      throw DuplicateKeyError("line " + std::to_string(line_no) + ": duplicate embedding " + key.str());
    }
  }
  if (!have_header) throw ParseError("line 1: missing header 'dim=<d>'");
  return set;
}

EmbeddingSet load_embeddings(const std::filesystem::path& path, const Corpus& corpus) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open embedding file " + path.string());
  return parse_embeddings(in, corpus);
}

void write_embeddings(const EmbeddingSet& embeddings, std::ostream& out) {
  out << "dim=" << embeddings.dim << '\n';
  for (const auto& [key, v] : embeddings.rows) {
    out << key.entity_id << '\t' << key.review_id << '\t' << key.sentence_idx << '\t';
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      if (j) out << ' ';
      out << format_double(v[j]);
    }
    out << '\n';
  }
}

EmbeddingSet featurize(const Corpus& corpus, std::size_t dim, std::uint64_t rng_seed) {
  if (dim < 1) throw ArgumentError("featurize: dim must be >= 1");
  const std::uint64_t stream_tag = fnv1a("featurize");
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));

  // Projection column of a bucket, generated on demand from (seed, bucket)
  // so the 2^16 x dim matrix is never materialized.
  std::unordered_map<std::size_t, Vector> columns;
  auto column = [&](std::size_t bucket) -> const Vector& {
    auto it = columns.find(bucket);
    if (it != columns.end()) return it->second;
    Rng rng(rng_seed ^ (stream_tag + 0x9e3779b97f4a7c15ULL * (bucket + 1)));
    Vector c(static_cast<Eigen::Index>(dim));
    for (auto& x : c) x = rng.normal() * scale;
    return columns.emplace(bucket, std::move(c)).first->second;
  };

  EmbeddingSet set;
  set.dim = dim;
  for (const auto& r : corpus.records) {
    std::map<std::size_t, double> counts;
    for (const auto& tok : r.tokens) counts[fnv1a(tok) % kFeatureBuckets] += 1.0;
    Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
    for (const auto& [bucket, count] : counts) v += count * column(bucket);
    double norm = v.norm();
    if (norm > 0.0) v /= norm;
    set.rows[r.key()] = std::move(v);
  }
  return set;
}

void AspectLexicon::validate() const {
  std::set<std::string> declared(aspects.begin(), aspects.end());
  for (const auto& [keyword, scores] : entries) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (!declared.contains(scores[i].aspect)) {
        throw ArgumentError("keyword '" + keyword + "' maps to undeclared aspect '" + scores[i].aspect + "'");
      }
      if (scores[i].confidence < 0.0 || scores[i].confidence > 1.0) {
        throw ArgumentError("keyword '" + keyword + "' has confidence outside [0,1]");
      }
      if (i > 0 && !(scores[i].confidence < scores[i - 1].confidence)) {
        throw ArgumentError("keyword '" + keyword + "' has non-descending confidences");
      }
    }
  }
}

std::set<std::string> AspectLexicon::aspects_mentioned(const std::vector<std::string>& tokens) const {
  std::set<std::string> out;
  for (const auto& tok : tokens) {
    auto it = entries.find(tok);
    if (it == entries.end()) continue;
    for (const auto& s : it->second) out.insert(s.aspect);
  }
  return out;
}

AspectLexicon parse_lexicon(std::istream& lexicon, std::istream& aspect_order) {
  AspectLexicon lex;
  std::string line;
  std::set<std::string> declared;
  while (std::getline(aspect_order, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    if (!declared.insert(line).second) throw ParseError("aspect '" + line + "' declared twice");
    lex.aspects.push_back(line);
  }
  std::size_t line_no = 0;
  while (std::getline(lexicon, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError("lexicon line " + std::to_string(line_no) + ": expected 3 tab-separated fields");
    }
    auto kw = tokenize(fields[0]);
    if (kw.size() != 1) {
      throw ParseError("lexicon line " + std::to_string(line_no) +
                       ": keyword must be a single token, got '" + fields[0] + "'");
    }
    double conf = parse_number(fields[2], line_no, "confidence");
    auto& list = lex.entries[kw.front()];
    for (const auto& existing : list) {
      if (existing.aspect == fields[1]) {
        throw DuplicateKeyError("lexicon line " + std::to_string(line_no) + ": duplicate entry for '" +
                                kw.front() + "' -> " + fields[1]);
      }
    }
    list.push_back({fields[1], conf});
  }
  for (auto& [kw, list] : lex.entries) {
    std::stable_sort(list.begin(), list.end(),
                     [](const AspectScore& a, const AspectScore& b) { return a.confidence > b.confidence; });
  }
  lex.validate();
  return lex;
}

AspectLexicon load_lexicon(const std::filesystem::path& lexicon_path,
                           const std::filesystem::path& aspects_path) {
  std::ifstream lex(lexicon_path);
  if (!lex) throw ArgumentError("cannot open lexicon file " + lexicon_path.string());
  std::ifstream order(aspects_path);
  if (!order) throw ArgumentError("cannot open aspect order file " + aspects_path.string());
  return parse_lexicon(lex, order);
}

void write_lexicon(const AspectLexicon& lexicon, std::ostream& lexicon_out,
                   std::ostream& aspects_out) {
  for (const auto& a : lexicon.aspects) aspects_out << a << '\n';
  for (const auto& [kw, list] : lexicon.entries) {
    for (const auto& s : list) lexicon_out << kw << '\t' << s.aspect << '\t' << format_double(s.confidence) << '\n';
  }
}

std::optional<std::string> assign_aspect(const SentenceRecord& record, const AspectLexicon& lexicon) {
  const AspectScore* best = nullptr;
  for (const auto& tok : record.tokens) {
    auto it = lexicon.entries.find(tok);
    if (it == lexicon.entries.end() || it->second.empty()) continue;
    const AspectScore& top = it->second.front();
    if (best == nullptr || top.confidence > best->confidence) best = &top;
  }
  if (best == nullptr) return std::nullopt;
  return best->aspect;
}

}  // namespace semae
