#include "semae/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace semae {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_tensor(std::ostream& out, const std::string& name, const double* data, Eigen::Index rows,
                  Eigen::Index cols) {
  out << "tensor " << name << ' ' << rows << ' ' << cols << '\n';
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (c) out << ' ';
      out << fmt(data[r * cols + c]);
    }
    out << '\n';
  }
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::istringstream line() {
    std::string l;
    if (!std::getline(in_, l)) throw ParseError("checkpoint: unexpected end of file at line " + std::to_string(no_ + 1));
    ++no_;
    return std::istringstream(l);
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("checkpoint line " + std::to_string(no_) + ": " + what);
  }

  template <typename T>
  T field(const std::string& expected) {
    auto ls = line();
    std::string key;
    T v{};
    if (!(ls >> key >> v) || key != expected) fail("expected '" + expected + "'");
    return v;
  }

  Matrix tensor(const std::string& expected, Eigen::Index rows, Eigen::Index cols) {
    auto ls = line();
    std::string tag, name;
    Eigen::Index r = 0, c = 0;
    if (!(ls >> tag >> name >> r >> c) || tag != "tensor" || name != expected) fail("expected tensor " + expected);
    if (r != rows || c != cols) fail("tensor " + expected + " has wrong shape");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      auto row = line();
      for (Eigen::Index j = 0; j < cols; ++j) {
        std::string tok;
        if (!(row >> tok)) fail("tensor " + expected + " row is short");
        try {
          m(i, j) = std::stod(tok);
        } catch (const std::exception&) {
          fail("invalid number '" + tok + "'");
        }
      }
    }
    return m;
  }

 private:
  std::istream& in_;
  std::size_t no_ = 0;
};

}  // namespace

void write_checkpoint(const SemaeModel& model, std::ostream& out) {
  const auto& t = model.transform;
  const auto& c = model.config;
  out << "semae-checkpoint 1\n";
  out << "H " << t.heads << '\n';
  out << "K " << model.dictionary.size() << '\n';
  out << "d " << t.dim << '\n';
  out << "kernel " << to_string(c.attention_kernel) << '\n';
  out << "config lambda1 " << fmt(c.lambda1) << '\n';
  out << "config lambda2 " << fmt(c.lambda2) << '\n';
  out << "config learning_rate " << fmt(c.learning_rate) << '\n';
  out << "config weight_decay " << fmt(c.weight_decay) << '\n';
  out << "config epochs " << c.epochs << '\n';
  out << "config batch_size " << c.batch_size << '\n';
  out << "config rng_seed " << c.rng_seed << '\n';
  out << "config l1_mode " << to_string(c.l1_mode) << '\n';
  out << "config kmeans_max_iter " << c.kmeans_max_iter << '\n';
  write_tensor(out, "W", t.W.data(), t.W.rows(), t.W.cols());
  write_tensor(out, "b", t.b.data(), 1, t.b.size());
  write_tensor(out, "ln_gain", t.ln_gain.data(), 1, t.ln_gain.size());
  write_tensor(out, "ln_bias", t.ln_bias.data(), 1, t.ln_bias.size());
  const auto& D = model.dictionary.elements;
  write_tensor(out, "D", D.data(), D.rows(), D.cols());
  out << "end\n";
}

SemaeModel read_checkpoint(std::istream& in) {
  Reader rd(in);
  if (rd.field<int>("semae-checkpoint") != 1) rd.fail("unsupported checkpoint version");
  SemaeModel m;
  int H = rd.field<int>("H");
  int K = rd.field<int>("K");
  int d = rd.field<int>("d");
  if (H < 1 || K < 2 || d < 1 || d % H != 0) rd.fail("invalid H/K/d");
  auto& c = m.config;
  c.heads = H;
  c.dict_size = K;
  c.attention_kernel = parse_kernel(rd.field<std::string>("kernel"));

  std::map<std::string, std::string> values;
  for (const char* key : {"lambda1", "lambda2", "learning_rate", "weight_decay", "epochs", "batch_size",
                          "rng_seed", "l1_mode", "kmeans_max_iter"}) {
    auto ls = rd.line();
    std::string tag, name, value;
    if (!(ls >> tag >> name >> value) || tag != "config" || name != key) rd.fail(std::string("expected config ") + key);
    values[key] = value;
  }
  try {
    c.lambda1 = std::stod(values["lambda1"]);
    c.lambda2 = std::stod(values["lambda2"]);
    c.learning_rate = std::stod(values["learning_rate"]);
    c.weight_decay = std::stod(values["weight_decay"]);
    c.epochs = std::stoi(values["epochs"]);
    c.batch_size = std::stoi(values["batch_size"]);
    c.rng_seed = std::stoull(values["rng_seed"]);
    c.kmeans_max_iter = std::stoi(values["kmeans_max_iter"]);
  } catch (const std::exception&) {
    rd.fail("invalid config value");
  }
  c.l1_mode = parse_l1_mode(values["l1_mode"]);

  auto& t = m.transform;
  t.heads = H;
  t.dim = d;
  t.W = rd.tensor("W", d, d / H);
  t.b = rd.tensor("b", 1, d).transpose();
  t.ln_gain = rd.tensor("ln_gain", 1, d).transpose();
  t.ln_bias = rd.tensor("ln_bias", 1, d).transpose();
  m.dictionary.elements = rd.tensor("D", K, d);
  auto ls = rd.line();
  std::string end;
  if (!(ls >> end) || end != "end") rd.fail("expected 'end'");
  t.validate();
  m.dictionary.validate();
  return m;
}

void save_checkpoint(const SemaeModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write checkpoint " + path.string());
  write_checkpoint(model, out);
}

SemaeModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace semae
