#include "pqsim/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "pqsim/error.hpp"
#include "pqsim/opf.hpp"
#include "pqsim/random.hpp"
#include "pqsim/records.hpp"

namespace pqsim {

ConfigError::ConfigError(std::string key, std::size_t line, const std::string& message)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + key + ": " + message
                              : key + ": " + message),
      key_(std::move(key)),
      line_(line) {}

namespace {

constexpr double kAmplitudeNormTol = 1e-6;

struct Value {
  enum class Kind { Token, String, List };
  Kind kind = Kind::Token;
  std::string text;
  std::vector<Value> items;
};

struct Entry {
  std::string key;
  Value value;
  std::size_t line;
};

class ValueParser {
 public:
  ValueParser(std::string_view text, const std::string& key, std::size_t line)
      : text_(text), key_(key), line_(line) {}

  Value parse() {
    Value v = value();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(text_.substr(pos_)) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(key_, line_, what); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  Value value() {
    skip_ws();
    if (pos_ == text_.size()) fail("missing value");
    Value v;
    if (text_[pos_] == '[') {
      v.kind = Value::Kind::List;
      ++pos_;
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == ']') {
        ++pos_;
        return v;
      }
      while (true) {
        v.items.push_back(value());
        skip_ws();
        if (pos_ == text_.size()) fail("unterminated list");
        if (text_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (text_[pos_] == ']') {
          ++pos_;
          return v;
        }
        fail("expected ',' or ']' in list");
      }
    }
    if (text_[pos_] == '"') {
      v.kind = Value::Kind::String;
      ++pos_;
      while (pos_ < text_.size() && text_[pos_] != '"') {
        if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
        v.text += text_[pos_++];
      }
      if (pos_ == text_.size()) fail("unterminated string");
      ++pos_;
      return v;
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    v.text = std::string(text_.substr(start, pos_ - start));
    if (v.text.empty()) fail("missing value");
    return v;
  }

  std::string_view text_;
  const std::string& key_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

std::string strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && quoted) {
      ++i;
    } else if (line[i] == '"') {
      quoted = !quoted;
    } else if (line[i] == '#' && !quoted) {
      return std::string(line.substr(0, i));
    }
  }
  return std::string(line);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

int bracket_depth(std::string_view s) {
  int depth = 0;
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && quoted) {
      ++i;
    } else if (s[i] == '"') {
      quoted = !quoted;
    } else if (!quoted && s[i] == '[') {
      ++depth;
    } else if (!quoted && s[i] == ']') {
      --depth;
    }
  }
  return depth;
}

std::vector<Entry> tokenize(std::string_view text) {
  std::vector<Entry> entries;
  std::set<std::string> seen;
  std::string section;
  std::vector<std::string> lines;
  {
    std::string cur;
    std::istringstream in{std::string(text)};
    while (std::getline(in, cur)) lines.push_back(cur);
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    std::string line = trim(strip_comment(lines[i]));
    if (line.empty()) continue;
    if (line.front() == '[' && line.find('=') == std::string::npos) {
      if (line.back() != ']' || line.size() < 3) throw ConfigError(line, line_no, "malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line, line_no, "expected 'key = value'");
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ConfigError("", line_no, "missing key");
    if (!section.empty()) key = section + "." + key;
    std::string raw = trim(std::string_view(line).substr(eq + 1));
    while (bracket_depth(raw) > 0 && i + 1 < lines.size()) raw += " " + trim(strip_comment(lines[++i]));
    if (!seen.insert(key).second) throw ConfigError(key, line_no, "duplicate key");
    entries.push_back({key, ValueParser(raw, key, line_no).parse(), line_no});
  }
  return entries;
}

// ---------------------------------------------------------------------------
// Value conversion

class Converter {
 public:
  explicit Converter(const Entry& e) : e_(e) {}

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(e_.key, e_.line, what); }

  std::string word(const Value& v) const {
    if (v.kind == Value::Kind::List) fail("expected a string");
    return v.text;
  }
  std::string word() const { return word(e_.value); }

  std::int64_t integer(const Value& v) const {
    if (v.kind != Value::Kind::Token) fail("expected an integer");
    std::int64_t x = 0;
    const auto [p, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), x);
    if (ec != std::errc() || p != v.text.data() + v.text.size()) fail("expected an integer, got '" + v.text + "'");
    return x;
  }
  std::int64_t integer() const { return integer(e_.value); }

  int small_int() const {
    const auto x = integer();
    if (x < -1000000 || x > 1000000) fail("value out of range");
    return static_cast<int>(x);
  }

  std::size_t count() const {
    const auto x = integer();
    if (x < 0) fail("expected a non-negative integer");
    return static_cast<std::size_t>(x);
  }

  std::uint64_t seed() const {
    const Value& v = e_.value;
    if (v.kind != Value::Kind::Token) fail("expected an unsigned integer");
    std::string_view s = v.text;
    int base = 10;
    if (s.starts_with("0x") || s.starts_with("0X")) {
      s.remove_prefix(2);
      base = 16;
    }
    std::uint64_t x = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x, base);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size()) fail("expected an unsigned 64-bit integer");
    return x;
  }

  double real(const Value& v) const {
    if (v.kind != Value::Kind::Token) fail("expected a number");
    double x = 0.0;
    const auto [p, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), x);
    if (ec != std::errc() || p != v.text.data() + v.text.size()) fail("expected a number, got '" + v.text + "'");
    return x;
  }
  double real() const { return real(e_.value); }

  bool boolean() const {
    const std::string w = word();
    if (w == "true") return true;
    if (w == "false") return false;
    fail("expected true or false");
  }

  Complex complex(const Value& v) const {
    if (v.kind == Value::Kind::List) fail("expected a complex number");
    const auto z = parse_complex(v.text);
    if (!z) fail("expected a complex number, got '" + v.text + "'");
    return *z;
  }

  const std::vector<Value>& list(const Value& v) const {
    if (v.kind != Value::Kind::List) fail("expected a list");
    return v.items;
  }

  std::vector<int> int_list() const {
    std::vector<int> out;
    for (const auto& v : list(e_.value)) out.push_back(static_cast<int>(integer(v)));
    return out;
  }
  std::vector<double> real_list() const {
    std::vector<double> out;
    for (const auto& v : list(e_.value)) out.push_back(real(v));
    return out;
  }
  std::vector<Complex> complex_list(const Value& v) const {
    std::vector<Complex> out;
    for (const auto& x : list(v)) out.push_back(complex(x));
    return out;
  }
  std::vector<Complex> complex_list() const { return complex_list(e_.value); }
  ComplexRows rows(const Value& v) const {
    ComplexRows out;
    for (const auto& r : list(v)) out.push_back(complex_list(r));
    return out;
  }
  ComplexRows rows() const { return rows(e_.value); }
  std::vector<ComplexRows> matrices() const {
    std::vector<ComplexRows> out;
    for (const auto& m : list(e_.value)) out.push_back(rows(m));
    return out;
  }

 private:
  const Entry& e_;
};

Matrix to_matrix(const ComplexRows& rows) {
  if (rows.empty()) throw ContractViolation("empty matrix");
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto m = static_cast<Eigen::Index>(rows.front().size());
  Matrix out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != m) throw ContractViolation("ragged matrix rows");
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = row[static_cast<std::size_t>(j)];
  }
  return out;
}

Vector to_vector(const std::vector<Complex>& xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) v(static_cast<Eigen::Index>(i)) = xs[i];
  return v;
}

/// Basis given as a list of vectors; they become the columns.
Matrix basis_columns(const ComplexRows& vectors) { return to_matrix(vectors).transpose(); }

const std::set<std::string>& common_device_keys() {
  static const std::set<std::string> keys{"kind", "target", "repetitions"};
  return keys;
}

std::string param_name(std::string_view p) {
  return std::string(p.ends_with('?') ? p.substr(0, p.size() - 1) : p);
}

// ---------------------------------------------------------------------------
// Serialization helpers

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

template <typename T, typename F>
std::string list_text(const std::vector<T>& xs, F&& item) {
  std::string out = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += item(xs[i]);
  }
  return out + "]";
}

std::string complex_text(Complex z) { return format_complex(z); }
std::string complex_list_text(const std::vector<Complex>& xs) { return list_text(xs, complex_text); }
std::string rows_text(const ComplexRows& rows) { return list_text(rows, complex_list_text); }

}  // namespace

const std::vector<DeviceCatalogEntry>& device_catalog() {
  static const std::vector<DeviceCatalogEntry> catalog{
      {DeviceKind::Readout, "RD, FPRD", "reduced density matrix readout", {"basis?", "precision?"}},
      {DeviceKind::FunctionReadout, "FRD, FFRD", "readout of a matrix function of the reduced state",
       {"function", "exponent", "basis?", "precision?"}},
      {DeviceKind::ExpectationReadout, "ERD, FERD", "expectation value readout", {"observable", "precision?"}},
      {DeviceKind::EigenvalueSampler, "SEVRD, FSEVRD, ISEVRD, FISEVRD, SPRD",
       "eigenvalue sampling without state disturbance",
       {"observable", "variant", "precision?", "label_offset"}},
      {DeviceKind::PovmSampler, "SPOD, FSPOD", "POVM sampling without state disturbance", {"povm", "finite_m?"}},
      {DeviceKind::OverlapTest, "SOD, SSOD", "overlap threshold test", {"vector", "threshold", "sharpness?"}},
      {DeviceKind::BasisSelect, "BSD, SBSD", "most likely basis element", {"basis", "sharpness?"}},
      {DeviceKind::EntropyMeter, "VNEM, REM, UEM", "entropy of the reduced state", {"alpha", "precision?"}},
      {DeviceKind::EntropyCertifier, "UEC, smoothed UEC", "entropy threshold certifier",
       {"alpha", "entropy_threshold", "sharpness?"}},
      {DeviceKind::EntanglementAnalyse, "EA, FPEA", "entanglement analyser on one factor",
       {"basis?", "precision?"}},
      {DeviceKind::UncertaintySampler, "SURD, FSURD", "uncertainty readout", {"observable", "precision?"}},
  };
  return catalog;
}

const std::vector<std::string_view>& experiment_ids() {
  static const std::vector<std::string_view> ids{
      "fpvnem", "spod-update", "no-signalling", "cloning", "tomography", "ensemble-readout",
      "ensemble-overlap"};
  return ids;
}

DeviceSpec build_device_spec(const DeviceConfig& c) {
  const auto kind = parse_kind(c.kind);
  if (!kind) throw ContractViolation("unknown device kind '" + c.kind + "'");
  auto basis = [&]() -> std::optional<OrthonormalBasis> {
    if (!c.basis) return std::nullopt;
    return OrthonormalBasis(basis_columns(*c.basis));
  };
  auto observable = [&]() {
    if (!c.observable) throw ContractViolation("missing observable");
    return HermitianObservable(to_matrix(*c.observable));
  };
  switch (*kind) {
    case DeviceKind::Readout:
      return ReadoutSpec{basis(), c.precision};
    case DeviceKind::FunctionReadout: {
      MatrixFunction f;
      if (c.function == "power") {
        f = MatrixFunction::power(c.exponent);
      } else if (c.function != "identity") {
        throw ContractViolation("function must be identity or power");
      }
      return FunctionReadoutSpec{f, basis(), c.precision};
    }
    case DeviceKind::ExpectationReadout:
      return ExpectationReadoutSpec{observable(), c.precision};
    case DeviceKind::EigenvalueSampler: {
      EigenvalueVariant v;
      if (c.variant == "value") {
        v = EigenvalueVariant::Value;
      } else if (c.variant == "label") {
        v = EigenvalueVariant::IntegerLabel;
      } else if (c.variant == "finite") {
        v = EigenvalueVariant::Finite;
      } else {
        throw ContractViolation("variant must be value, label or finite");
      }
      return EigenvalueSamplerSpec{observable(), v, c.precision, c.label_offset};
    }
    case DeviceKind::PovmSampler: {
      if (c.povm.empty()) throw ContractViolation("missing povm");
      std::vector<Matrix> elements;
      for (const auto& m : c.povm) elements.push_back(to_matrix(m));
      return PovmSamplerSpec{PovmSet(std::move(elements)), c.finite_m};
    }
    case DeviceKind::OverlapTest:
      if (c.vector.empty()) throw ContractViolation("missing vector");
      return OverlapTestSpec{to_vector(c.vector), c.threshold, c.sharpness};
    case DeviceKind::BasisSelect: {
      auto b = basis();
      if (!b) throw ContractViolation("missing basis");
      return BasisSelectSpec{*b, c.sharpness};
    }
    case DeviceKind::EntropyMeter:
      return EntropyMeterSpec{c.alpha, c.precision};
    case DeviceKind::EntropyCertifier:
      return EntropyCertifierSpec{c.alpha, c.entropy_threshold, c.sharpness};
    case DeviceKind::EntanglementAnalyse:
      return EntanglementAnalyseSpec{basis(), c.precision};
    case DeviceKind::UncertaintySampler:
      return UncertaintySamplerSpec{observable(), c.precision};
  }
  throw ContractViolation("unknown device kind");
}

PureState build_state(const StateConfig& c, const std::vector<int>& dims, RandomStream& rng) {
  const FactorSpace space(dims);
  if (c.kind == "bell") {
    if (dims.size() != 2 || dims[0] != dims[1]) {
      throw ContractViolation("bell needs two factors of equal dimension");
    }
    return maximally_entangled(dims[0]);
  }
  if (c.kind == "ghz") {
    if (dims.size() < 2 || std::adjacent_find(dims.begin(), dims.end(), std::not_equal_to<>()) != dims.end()) {
      throw ContractViolation("ghz needs at least two factors of equal dimension");
    }
    Vector v = Vector::Zero(space.total_dim());
    const int d = dims[0];
    for (int j = 0; j < d; ++j) {
      int index = 0;
      for (std::size_t f = 0; f < dims.size(); ++f) index = index * d + j;
      v(index) = 1.0;
    }
    return PureState::normalized(space, v);
  }
  if (c.kind == "product") {
    if (c.labels.size() != dims.size()) {
      throw ContractViolation("product needs one basis label per factor (" + std::to_string(dims.size()) + ")");
    }
    for (std::size_t f = 0; f < dims.size(); ++f) {
      if (c.labels[f] < 0 || c.labels[f] >= dims[f]) {
        throw ContractViolation("label " + std::to_string(c.labels[f]) + " out of range for factor " +
                                std::to_string(f));
      }
    }
    return PureState::basis(space, c.labels);
  }
  if (c.kind == "random") return random_state(space, rng);
  if (c.kind == "explicit") {
    if (static_cast<int>(c.amplitudes.size()) != space.total_dim()) {
      throw ContractViolation("length " + std::to_string(c.amplitudes.size()) +
                              " does not match total dimension " + std::to_string(space.total_dim()));
    }
    const Vector v = to_vector(c.amplitudes);
    if (std::abs(v.norm() - 1.0) > kAmplitudeNormTol) {
      throw ContractViolation("amplitudes have norm " + format_double(v.norm()) + ", not 1 within 1e-6");
    }
    return PureState::normalized(space, v);
  }
  throw ContractViolation("unknown state constructor '" + c.kind +
                          "' (expected bell, ghz, product, random or explicit)");
}

RunConfig parse_config(std::string_view text, std::vector<std::string>* warnings) {
  const std::vector<Entry> entries = tokenize(text);
  RunConfig cfg;
  std::map<std::string, std::size_t> lines;
  DeviceConfig device;
  ExperimentConfig experiment;
  CheckConfig check;
  bool has_device = false;
  bool has_experiment = false;
  bool has_check = false;

  using Handler = std::function<void(const Converter&)>;
  const std::map<std::string, Handler> handlers{
      {"run.seed", [&](const Converter& c) { cfg.seed = c.seed(); }},
      {"space.dims", [&](const Converter& c) { cfg.dims = c.int_list(); }},
      {"state.kind", [&](const Converter& c) { cfg.state.kind = c.word(); }},
      {"state.labels", [&](const Converter& c) { cfg.state.labels = c.int_list(); }},
      {"state.amplitudes", [&](const Converter& c) { cfg.state.amplitudes = c.complex_list(); }},
      {"output.path", [&](const Converter& c) { cfg.output.path = c.word(); }},
      {"output.format", [&](const Converter& c) { cfg.output.format = c.word(); }},

      {"device.kind", [&](const Converter& c) { device.kind = c.word(); }},
      {"device.target",
       [&](const Converter& c) {
         device.target.clear();
         for (int t : c.int_list()) {
           if (t < 0) c.fail("subsystem indices are non-negative");
           device.target.push_back(static_cast<std::size_t>(t));
         }
       }},
      {"device.repetitions", [&](const Converter& c) { device.repetitions = c.count(); }},
      {"device.precision", [&](const Converter& c) { device.precision = c.small_int(); }},
      {"device.basis", [&](const Converter& c) { device.basis = c.rows(); }},
      {"device.observable", [&](const Converter& c) { device.observable = c.rows(); }},
      {"device.povm", [&](const Converter& c) { device.povm = c.matrices(); }},
      {"device.function", [&](const Converter& c) { device.function = c.word(); }},
      {"device.exponent", [&](const Converter& c) { device.exponent = c.small_int(); }},
      {"device.variant", [&](const Converter& c) { device.variant = c.word(); }},
      {"device.label_offset", [&](const Converter& c) { device.label_offset = c.integer(); }},
      {"device.finite_m", [&](const Converter& c) { device.finite_m = c.small_int(); }},
      {"device.vector", [&](const Converter& c) { device.vector = c.complex_list(); }},
      {"device.threshold", [&](const Converter& c) { device.threshold = c.real(); }},
      {"device.sharpness", [&](const Converter& c) { device.sharpness = c.real(); }},
      {"device.alpha", [&](const Converter& c) { device.alpha = c.real(); }},
      {"device.entropy_threshold", [&](const Converter& c) { device.entropy_threshold = c.real(); }},

      {"experiment.id", [&](const Converter& c) { experiment.id = c.word(); }},
      {"experiment.d", [&](const Converter& c) { experiment.d = c.small_int(); }},
      {"experiment.m", [&](const Converter& c) { experiment.m = c.small_int(); }},
      {"experiment.samples", [&](const Converter& c) { experiment.samples = c.count(); }},
      {"experiment.trials", [&](const Converter& c) { experiment.trials = c.count(); }},
      {"experiment.required_fraction", [&](const Converter& c) { experiment.required_fraction = c.real(); }},
      {"experiment.calls", [&](const Converter& c) { experiment.calls = c.count(); }},
      {"experiment.element", [&](const Converter& c) { experiment.element = c.rows(); }},
      {"experiment.input", [&](const Converter& c) { experiment.input = c.word(); }},
      {"experiment.precision", [&](const Converter& c) { experiment.precision = c.small_int(); }},
      {"experiment.shots", [&](const Converter& c) { experiment.shots = c.count(); }},
      {"experiment.precision_schedule", [&](const Converter& c) { experiment.precision_schedule = c.int_list(); }},
      {"experiment.epsilon_schedule", [&](const Converter& c) { experiment.epsilon_schedule = c.real_list(); }},
      {"experiment.net_cap", [&](const Converter& c) { experiment.net_cap = c.count(); }},
      {"experiment.members", [&](const Converter& c) { experiment.members = c.rows(); }},
      {"experiment.weights", [&](const Converter& c) { experiment.weights = c.real_list(); }},
      {"experiment.product_only", [&](const Converter& c) { experiment.product_only = c.boolean(); }},

      {"check.kind", [&](const Converter& c) { check.kind = c.word(); }},
      {"check.family", [&](const Converter& c) { check.family = c.word(); }},
      {"check.d", [&](const Converter& c) { check.d = c.small_int(); }},
      {"check.m", [&](const Converter& c) { check.m = c.small_int(); }},
      {"check.samples", [&](const Converter& c) { check.samples = c.count(); }},
      {"check.background_dim", [&](const Converter& c) { check.background_dim = c.small_int(); }},
      {"check.members", [&](const Converter& c) { check.members = c.count(); }},
      {"check.probes", [&](const Converter& c) { check.probes = c.word(); }},
  };

  for (const Entry& e : entries) {
    const auto it = handlers.find(e.key);
    if (it == handlers.end()) throw ConfigError(e.key, e.line, "unknown key");
    it->second(Converter(e));
    lines[e.key] = e.line;
    has_device |= e.key.starts_with("device.");
    has_experiment |= e.key.starts_with("experiment.");
    has_check |= e.key.starts_with("check.");
  }
  auto line_of = [&](const std::string& key) {
    const auto it = lines.find(key);
    return it == lines.end() ? std::size_t{0} : it->second;
  };
  auto fail = [&](const std::string& key, const std::string& what) -> void {
    throw ConfigError(key, line_of(key), what);
  };

  const int actions = int(has_device) + int(has_experiment) + int(has_check);
  if (actions == 0) fail("device.kind", "missing required key (one of device.kind, experiment.id, check.kind)");
  if (actions > 1) fail("device.kind", "exactly one of the device, experiment and check sections may be given");

  if (cfg.dims.empty()) fail("space.dims", "needs at least one factor");
  for (int d : cfg.dims) {
    if (d < 2) fail("space.dims", "every dimension must be >= 2");
  }
  long long total = 1;
  for (int d : cfg.dims) {
    total *= d;
    if (total > 4096) fail("space.dims", "total dimension above 4096 is not supported");
  }

  {
    RandomStream scratch(0);
    const std::string state_key = cfg.state.kind == "product"    ? "state.labels"
                                  : cfg.state.kind == "explicit" ? "state.amplitudes"
                                                                 : "state.kind";
    try {
      build_state(cfg.state, cfg.dims, scratch);
    } catch (const ContractViolation& ex) {
      fail(state_key, ex.what());
    }
    if (cfg.state.kind == "explicit") {
      const Vector v = to_vector(cfg.state.amplitudes);
      if (std::abs(v.norm() - 1.0) > 1e-12) {
        const Vector n = v / v.norm();
        for (std::size_t i = 0; i < cfg.state.amplitudes.size(); ++i) {
          cfg.state.amplitudes[i] = n(static_cast<Eigen::Index>(i));
        }
        if (warnings) {
          warnings->push_back("state.amplitudes: norm " + format_double(v.norm()) + " renormalized to 1");
        }
      }
    }
  }

  if (cfg.output.format != "text" && cfg.output.format != "records") {
    fail("output.format", "must be text or records");
  }

  if (has_device) {
    if (device.kind.empty()) fail("device.kind", "missing required key");
    const auto kind = parse_kind(device.kind);
    if (!kind) fail("device.kind", "unknown device kind '" + device.kind + "'");
    device.kind = std::string(kind_name(*kind));
    const auto& entry = *std::find_if(device_catalog().begin(), device_catalog().end(),
                                      [&](const DeviceCatalogEntry& e) { return e.kind == *kind; });
    for (const auto& [key, line] : lines) {
      if (!key.starts_with("device.")) continue;
      const std::string name = key.substr(7);
      if (common_device_keys().contains(name)) continue;
      const bool known = std::any_of(entry.parameters.begin(), entry.parameters.end(),
                                     [&](std::string_view p) { return param_name(p) == name; });
      if (!known) fail(key, "does not apply to " + device.kind);
    }
    for (std::string_view p : entry.parameters) {
      if (p.ends_with('?')) continue;
      const std::string key = "device." + std::string(p);
      const bool defaulted = p == "function" || p == "exponent" || p == "variant" || p == "label_offset" ||
                             p == "threshold" || p == "alpha" || p == "entropy_threshold";
      if (!defaulted && !lines.contains(key)) fail(key, "missing required key for " + device.kind);
    }
    if (device.repetitions < 1) fail("device.repetitions", "must be >= 1");
    const FactorSpace space(cfg.dims);
    try {
      device.target = normalize_subsystems(space, device.target);
    } catch (const ContractViolation& ex) {
      fail("device.target", ex.what());
    }
    try {
      validate(build_device_spec(device), space, device.target);
    } catch (const ContractViolation& ex) {
      const std::string msg = ex.what();
      std::string key = "device.kind";
      for (const char* k : {"entropy_threshold", "threshold E", "precision", "sharpness", "threshold a", "alpha",
                            "observable", "povm", "basis", "vector", "function", "exponent", "variant",
                            "dimension"}) {
        if (msg.find(k) == std::string::npos) continue;
        const std::string_view kv = k;
        key = kv == "threshold E"   ? "device.entropy_threshold"
              : kv == "threshold a" ? "device.threshold"
              : kv == "dimension"   ? "device.target"
                                    : "device." + std::string(kv);
        break;
      }
      fail(key, msg);
    }
    cfg.action = std::move(device);
  } else if (has_experiment) {
    const auto& ids = experiment_ids();
    if (experiment.id.empty()) fail("experiment.id", "missing required key");
    if (std::find(ids.begin(), ids.end(), experiment.id) == ids.end()) {
      fail("experiment.id", "unknown experiment '" + experiment.id + "'");
    }
    if (experiment.d < 2 || experiment.d > 4) fail("experiment.d", "must lie in 2..4");
    if (experiment.m < 1 || experiment.m > 8) fail("experiment.m", "must lie in 1..8");
    if (experiment.trials < 1) fail("experiment.trials", "must be >= 1");
    if (!(experiment.required_fraction > 0.0 && experiment.required_fraction <= 1.0)) {
      fail("experiment.required_fraction", "must lie in (0, 1]");
    }
    if (experiment.members.size() != experiment.weights.size()) {
      fail("experiment.weights", "needs one weight per member");
    }
    if (experiment.input != "bell" && experiment.input != "product" && experiment.input != "partial") {
      fail("experiment.input", "must be bell, product or partial");
    }
    if (experiment.precision && *experiment.precision < 1) fail("experiment.precision", "must be >= 1");
    if (experiment.epsilon_schedule.empty()) fail("experiment.epsilon_schedule", "must not be empty");
    cfg.action = std::move(experiment);
  } else {
    if (check.kind.empty()) fail("check.kind", "missing required key");
    if (check.kind == "closure") {
      if (check.family != "quantum_povm" && check.family != "fpvnem") {
        fail("check.family", "closure families are quantum_povm and fpvnem");
      }
    } else if (check.kind == "product_form") {
      if (check.family != "quantum_povm" && check.family != "fpvnem") {
        fail("check.family", "product_form families are quantum_povm and fpvnem");
      }
    } else if (check.kind == "estimation") {
      try {
        parse_family(check.family);
      } catch (const ContractViolation& ex) {
        fail("check.family", ex.what());
      }
    } else {
      fail("check.kind", "must be closure, product_form or estimation");
    }
    if (check.d < 2 || check.d > 4) fail("check.d", "must lie in 2..4");
    if (check.m < 1 || check.m > 8) fail("check.m", "must lie in 1..8");
    if (check.background_dim < 2 || check.background_dim > 4) fail("check.background_dim", "must lie in 2..4");
    if (check.probes != "full" && check.probes != "product") fail("check.probes", "must be full or product");
    cfg.action = std::move(check);
  }
  return cfg;
}

std::string to_config_text(const RunConfig& cfg) {
  std::ostringstream out;
  auto line = [&](const std::string& key, const std::string& value) { out << key << " = " << value << "\n"; };
  auto integer = [](auto x) { return std::to_string(x); };
  auto real = [](double x) { return format_double(x); };

  if (cfg.seed) {
    out << "[run]\n";
    line("seed", std::to_string(*cfg.seed));
  }
  out << "[space]\n";
  line("dims", list_text(cfg.dims, integer));
  out << "[state]\n";
  line("kind", quote(cfg.state.kind));
  if (!cfg.state.labels.empty()) line("labels", list_text(cfg.state.labels, integer));
  if (!cfg.state.amplitudes.empty()) line("amplitudes", complex_list_text(cfg.state.amplitudes));

  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, DeviceConfig>) {
          out << "[device]\n";
          line("kind", quote(a.kind));
          line("target", list_text(a.target, integer));
          line("repetitions", integer(a.repetitions));
          const auto kind = parse_kind(a.kind);
          const auto entry = std::find_if(device_catalog().begin(), device_catalog().end(),
                                          [&](const DeviceCatalogEntry& e) { return kind && e.kind == *kind; });
          auto applies = [&](std::string_view name) {
            return entry != device_catalog().end() &&
                   std::any_of(entry->parameters.begin(), entry->parameters.end(),
                               [&](std::string_view p) { return param_name(p) == name; });
          };
          if (a.precision && applies("precision")) line("precision", integer(*a.precision));
          if (a.basis && applies("basis")) line("basis", rows_text(*a.basis));
          if (a.observable && applies("observable")) line("observable", rows_text(*a.observable));
          if (!a.povm.empty() && applies("povm")) line("povm", list_text(a.povm, rows_text));
          if (applies("function")) line("function", quote(a.function));
          if (applies("exponent")) line("exponent", integer(a.exponent));
          if (applies("variant")) line("variant", quote(a.variant));
          if (applies("label_offset")) line("label_offset", integer(a.label_offset));
          if (a.finite_m && applies("finite_m")) line("finite_m", integer(*a.finite_m));
          if (!a.vector.empty() && applies("vector")) line("vector", complex_list_text(a.vector));
          if (applies("threshold")) line("threshold", real(a.threshold));
          if (a.sharpness && applies("sharpness")) line("sharpness", real(*a.sharpness));
          if (applies("alpha")) line("alpha", real(a.alpha));
          if (applies("entropy_threshold")) line("entropy_threshold", real(a.entropy_threshold));
        } else if constexpr (std::is_same_v<T, ExperimentConfig>) {
          out << "[experiment]\n";
          line("id", quote(a.id));
          line("d", integer(a.d));
          line("m", integer(a.m));
          line("samples", integer(a.samples));
          line("trials", integer(a.trials));
          line("required_fraction", real(a.required_fraction));
          line("calls", integer(a.calls));
          if (a.element) line("element", rows_text(*a.element));
          line("input", quote(a.input));
          if (a.precision) line("precision", integer(*a.precision));
          if (a.shots) line("shots", integer(*a.shots));
          line("precision_schedule", list_text(a.precision_schedule, integer));
          line("epsilon_schedule", list_text(a.epsilon_schedule, real));
          line("net_cap", integer(a.net_cap));
          line("members", rows_text(a.members));
          line("weights", list_text(a.weights, real));
          line("product_only", a.product_only ? "true" : "false");
        } else {
          out << "[check]\n";
          line("kind", quote(a.kind));
          line("family", quote(a.family));
          line("d", integer(a.d));
          line("m", integer(a.m));
          line("samples", integer(a.samples));
          line("background_dim", integer(a.background_dim));
          line("members", integer(a.members));
          line("probes", quote(a.probes));
        }
      },
      cfg.action);

  out << "[output]\n";
  line("path", quote(cfg.output.path));
  line("format", quote(cfg.output.format));
  return out.str();
}

}  // namespace pqsim
