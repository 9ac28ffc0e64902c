#include "cropspec/model_io.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cropspec/errors.hpp"
#include "cropspec/util.hpp"

namespace cropspec {

namespace {

void write_vector(std::ostream& out, const char* tag, const Eigen::VectorXd& v) {
  out << tag;
  for (long i = 0; i < v.size(); ++i) out << ' ' << format_double(v[i]);
  out << '\n';
}

// Line-oriented token reader; blank lines are skipped, errors carry the line
// number.
struct Reader {
  std::istream& in;
  std::size_t lineno = 0;

  std::vector<std::string> next() {
    std::string line;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty()) continue;
      std::istringstream tokens(line);
      std::vector<std::string> out;
      std::string tok;
      while (tokens >> tok) out.push_back(tok);
      return out;
    }
    throw DataError("model file line " + std::to_string(lineno + 1) +
                    ": unexpected end of file");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError("model file line " + std::to_string(lineno) + ": " + what);
  }

  void expect(bool cond, const std::string& what) const {
    if (!cond) fail(what);
  }

  double num(const std::string& tok) const {
    const std::optional<double> v = parse_double(tok);
    if (!v) fail("expected a number, got \"" + tok + "\"");
    return *v;
  }

  long integer(const std::string& tok) const {
    const std::optional<long> v = parse_long(tok);
    if (!v) fail("expected an integer, got \"" + tok + "\"");
    return *v;
  }

  // Consumes a line "key v1 ... vN" with exactly n values.
  Eigen::VectorXd vector_line(const std::string& key, long n) {
    const std::vector<std::string> t = next();
    expect(!t.empty() && t[0] == key, "expected \"" + key + "\" line");
    expect(static_cast<long>(t.size()) == n + 1,
           key + " line carries " + std::to_string(t.size() - 1) + " values, expected " +
               std::to_string(n));
    Eigen::VectorXd v(n);
    for (long i = 0; i < n; ++i) v[i] = num(t[static_cast<std::size_t>(i) + 1]);
    return v;
  }

  void header(const std::string& expected_type) {
    std::vector<std::string> t = next();
    expect(t == std::vector<std::string>{"cropspec", "model", "v1"},
           "not a cropspec model file (missing \"cropspec model v1\" header)");
    t = next();
    expect(t.size() == 2 && t[0] == "type", "expected \"type\" line");
    expect(t[1] == expected_type, "model type is \"" + t[1] + "\", expected " + expected_type);
  }
};

Eigen::MatrixXd read_lower_triangle(Reader& r, long bands) {
  Eigen::MatrixXd factor = Eigen::MatrixXd::Zero(bands, bands);
  for (long row = 0; row < bands; ++row) {
    const std::vector<std::string> t = r.next();
    r.expect(!t.empty() && t[0] == "frow", "expected \"frow\" line");
    r.expect(static_cast<long>(t.size()) == row + 2,
             "frow " + std::to_string(row) + " carries " + std::to_string(t.size() - 1) +
                 " values, expected " + std::to_string(row + 1));
    for (long col = 0; col <= row; ++col)
      factor(row, col) = r.num(t[static_cast<std::size_t>(col) + 1]);
  }
  return factor;
}

}  // namespace

void write_model(std::ostream& out, const DiscriminantModel& m) {
  out << "cropspec model v1\n";
  out << "type discriminant\n";
  out << "kind " << (m.kind == DiscriminantKind::LDA ? "lda" : "qda") << '\n';
  out << "mode " << (m.mode == LabelingMode::CropOnly ? "crop" : "joint") << '\n';
  out << "lambda " << format_double(m.lambda) << '\n';
  out << "priors " << (m.prior_mode == PriorMode::Uniform ? "uniform" : "empirical") << '\n';
  out << "bands " << m.bands() << '\n';
  out << "wavelengths";
  for (double w : m.grid.wavelengths_nm) out << ' ' << format_double(w);
  out << '\n';
  out << "classes " << m.classes.size() << '\n';
  for (std::size_t k = 0; k < m.classes.size(); ++k) {
    out << "class " << to_string(m.classes[k].crop) << ' '
        << (m.classes[k].stage ? to_string(*m.classes[k].stage) : std::string_view("-"))
        << " prior " << format_double(m.priors[k]) << " count " << m.counts[k] << '\n';
    write_vector(out, "mean", m.means[k]);
  }
  out << "factors " << m.covariances.size() << '\n';
  for (std::size_t f = 0; f < m.covariances.size(); ++f) {
    out << "factor " << f << " logdet " << format_double(m.covariances[f].log_det) << '\n';
    const Eigen::MatrixXd& factor = m.covariances[f].factor;
    for (long row = 0; row < factor.rows(); ++row) {
      out << "frow";
      for (long col = 0; col <= row; ++col) out << ' ' << format_double(factor(row, col));
      out << '\n';
    }
  }
  out << "end\n";
}

void write_model(std::ostream& out, const MLPModel& m) {
  out << "cropspec model v1\n";
  out << "type mlp\n";
  out << "bands " << m.bands() << '\n';
  out << "wavelengths";
  for (double w : m.grid.wavelengths_nm) out << ' ' << format_double(w);
  out << '\n';
  write_vector(out, "mean", m.input_mean);
  write_vector(out, "std", m.input_std);
  out << "layers " << m.weights.size() << '\n';
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    const Eigen::MatrixXd& w = m.weights[l];
    out << "layer " << l << " out " << w.rows() << " in " << w.cols() << '\n';
    for (long row = 0; row < w.rows(); ++row) {
      out << "wrow";
      for (long col = 0; col < w.cols(); ++col) out << ' ' << format_double(w(row, col));
      out << '\n';
    }
    write_vector(out, "bias", m.biases[l]);
  }
  out << "end\n";
}

DiscriminantModel read_discriminant_model(std::istream& in) {
  Reader r{in};
  r.header("discriminant");
  DiscriminantModel m;

  std::vector<std::string> t = r.next();
  r.expect(t.size() == 2 && t[0] == "kind", "expected \"kind\" line");
  if (t[1] == "lda")
    m.kind = DiscriminantKind::LDA;
  else if (t[1] == "qda")
    m.kind = DiscriminantKind::QDA;
  else
    r.fail("unknown kind \"" + t[1] + "\"");

  t = r.next();
  r.expect(t.size() == 2 && t[0] == "mode", "expected \"mode\" line");
  if (t[1] == "crop")
    m.mode = LabelingMode::CropOnly;
  else if (t[1] == "joint")
    m.mode = LabelingMode::JointCropStage;
  else
    r.fail("unknown mode \"" + t[1] + "\"");

  t = r.next();
  r.expect(t.size() == 2 && t[0] == "lambda", "expected \"lambda\" line");
  m.lambda = r.num(t[1]);

  t = r.next();
  r.expect(t.size() == 2 && t[0] == "priors", "expected \"priors\" line");
  if (t[1] == "uniform")
    m.prior_mode = PriorMode::Uniform;
  else if (t[1] == "empirical")
    m.prior_mode = PriorMode::Empirical;
  else
    r.fail("unknown priors \"" + t[1] + "\"");

  t = r.next();
  r.expect(t.size() == 2 && t[0] == "bands", "expected \"bands\" line");
  const long bands = r.integer(t[1]);
  r.expect(bands >= 1, "bands must be positive");

  m.grid.wavelengths_nm.resize(static_cast<std::size_t>(bands));
  const Eigen::VectorXd wl = r.vector_line("wavelengths", bands);
  for (long i = 0; i < bands; ++i) m.grid.wavelengths_nm[static_cast<std::size_t>(i)] = wl[i];

  t = r.next();
  r.expect(t.size() == 2 && t[0] == "classes", "expected \"classes\" line");
  const long num_classes = r.integer(t[1]);
  r.expect(num_classes >= 1, "at least one class required");

  for (long k = 0; k < num_classes; ++k) {
    t = r.next();
    r.expect(t.size() == 7 && t[0] == "class" && t[3] == "prior" && t[5] == "count",
             "expected \"class <crop> <stage|-> prior <p> count <n>\" line");
    ClassId id{};
    const std::optional<CropLabel> crop = crop_from_string(t[1]);
    if (!crop) r.fail("unknown crop \"" + t[1] + "\"");
    id.crop = *crop;
    if (t[2] != "-") {
      const std::optional<StageLabel> stage = stage_from_string(t[2]);
      if (!stage) r.fail("unknown stage \"" + t[2] + "\"");
      id.stage = *stage;
    }
    r.expect((m.mode == LabelingMode::JointCropStage) == id.stage.has_value(),
             "class stage qualifier does not match the model mode");
    m.classes.push_back(id);
    m.priors.push_back(r.num(t[4]));
    m.counts.push_back(r.integer(t[6]));
    m.means.push_back(r.vector_line("mean", bands));
  }

  t = r.next();
  r.expect(t.size() == 2 && t[0] == "factors", "expected \"factors\" line");
  const long num_factors = r.integer(t[1]);
  const long expected =
      m.kind == DiscriminantKind::LDA ? 1 : num_classes;
  r.expect(num_factors == expected,
           "factor count " + std::to_string(num_factors) + " does not match kind (expected " +
               std::to_string(expected) + ")");
  for (long f = 0; f < num_factors; ++f) {
    t = r.next();
    r.expect(t.size() == 4 && t[0] == "factor" && t[2] == "logdet",
             "expected \"factor <i> logdet <v>\" line");
    r.expect(r.integer(t[1]) == f, "factor indices must be sequential");
    CholeskyResult chol;
    chol.log_det = r.num(t[3]);
    chol.factor = read_lower_triangle(r, bands);
    m.covariances.push_back(std::move(chol));
  }

  t = r.next();
  r.expect(t.size() == 1 && t[0] == "end", "expected \"end\" line");
  validate(m.grid);
  return m;
}

MLPModel read_mlp_model(std::istream& in) {
  Reader r{in};
  r.header("mlp");
  MLPModel m;

  std::vector<std::string> t = r.next();
  r.expect(t.size() == 2 && t[0] == "bands", "expected \"bands\" line");
  const long bands = r.integer(t[1]);
  r.expect(bands >= 1, "bands must be positive");

  m.grid.wavelengths_nm.resize(static_cast<std::size_t>(bands));
  const Eigen::VectorXd wl = r.vector_line("wavelengths", bands);
  for (long i = 0; i < bands; ++i) m.grid.wavelengths_nm[static_cast<std::size_t>(i)] = wl[i];

  m.input_mean = r.vector_line("mean", bands);
  m.input_std = r.vector_line("std", bands);

  t = r.next();
  r.expect(t.size() == 2 && t[0] == "layers", "expected \"layers\" line");
  const long layers = r.integer(t[1]);
  r.expect(layers >= 2 && layers <= 3, "layers must be 2 or 3 (one or two hidden layers)");

  long prev_out = bands;
  for (long l = 0; l < layers; ++l) {
    t = r.next();
    r.expect(t.size() == 6 && t[0] == "layer" && t[2] == "out" && t[4] == "in",
             "expected \"layer <i> out <rows> in <cols>\" line");
    r.expect(r.integer(t[1]) == l, "layer indices must be sequential");
    const long rows = r.integer(t[3]);
    const long cols = r.integer(t[5]);
    r.expect(rows >= 1 && cols >= 1, "layer dimensions must be positive");
    r.expect(cols == prev_out,
             "layer input width " + std::to_string(cols) + " does not chain from previous width " +
                 std::to_string(prev_out));
    Eigen::MatrixXd w(rows, cols);
    for (long row = 0; row < rows; ++row) {
      const std::vector<std::string> wt = r.next();
      r.expect(!wt.empty() && wt[0] == "wrow", "expected \"wrow\" line");
      r.expect(static_cast<long>(wt.size()) == cols + 1,
               "wrow carries " + std::to_string(wt.size() - 1) + " values, expected " +
                   std::to_string(cols));
      for (long col = 0; col < cols; ++col)
        w(row, col) = r.num(wt[static_cast<std::size_t>(col) + 1]);
    }
    m.weights.push_back(std::move(w));
    m.biases.push_back(r.vector_line("bias", rows));
    prev_out = rows;
  }
  r.expect(prev_out == kNumCrops,
           "final layer emits " + std::to_string(prev_out) + " outputs, expected " +
               std::to_string(kNumCrops));

  t = r.next();
  r.expect(t.size() == 1 && t[0] == "end", "expected \"end\" line");
  validate(m.grid);
  return m;
}

namespace {

void save_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw DataError("failed while writing " + path);
}

}  // namespace

void save_model(const DiscriminantModel& m, const std::string& path) {
  std::ostringstream buffer;
  write_model(buffer, m);
  save_text(path, buffer.str());
}

void save_model(const MLPModel& m, const std::string& path) {
  std::ostringstream buffer;
  write_model(buffer, m);
  save_text(path, buffer.str());
}

AnyModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();

  // Dispatch on the type line, then parse from the start.
  std::string line;
  std::string type;
  std::getline(buffer, line);  // header
  if (std::getline(buffer, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("type ", 0) == 0) type = line.substr(5);
  }
  buffer.clear();
  buffer.seekg(0);
  if (type == "discriminant") return read_discriminant_model(buffer);
  if (type == "mlp") return read_mlp_model(buffer);
  throw DataError("model file " + path + ": unknown or missing type line");
}

}  // namespace cropspec
