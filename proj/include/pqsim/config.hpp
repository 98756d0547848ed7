#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pqsim/devices.hpp"
#include "pqsim/state.hpp"

namespace pqsim {

class RandomStream;

/// Configuration diagnostic; names the offending key (dotted path) and the
/// 1-based line, when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, std::size_t line, const std::string& message);
  const std::string& key() const { return key_; }
  std::size_t line() const { return line_; }

 private:
  std::string key_;
  std::size_t line_;
};

using ComplexRows = std::vector<std::vector<Complex>>;

struct StateConfig {
  std::string kind = "bell";  // bell | ghz | product | random | explicit
  std::vector<int> labels;    // product
  std::vector<Complex> amplitudes;  // explicit
  bool operator==(const StateConfig&) const = default;
};

struct DeviceConfig {
  std::string kind;
  Subsystems target{0};
  std::size_t repetitions = 1;
  std::optional<int> precision;
  std::optional<ComplexRows> basis;       // basis vectors
  std::optional<ComplexRows> observable;  // matrix rows
  std::vector<ComplexRows> povm;          // one matrix per element
  std::string function = "identity";     // identity | power
  int exponent = 1;
  std::string variant = "value";         // value | label | finite
  std::int64_t label_offset = 0;
  std::optional<int> finite_m;
  std::vector<Complex> vector;           // overlap target
  double threshold = 0.5;
  std::optional<double> sharpness;
  double alpha = 1.0;
  double entropy_threshold = 0.5;
  bool operator==(const DeviceConfig&) const = default;
};

struct ExperimentConfig {
  std::string id;
  int d = 2;
  int m = 3;
  std::size_t samples = 1000;
  std::size_t trials = 1;
  double required_fraction = 0.95;
  std::size_t calls = 100;
  std::optional<ComplexRows> element;
  std::string input = "bell";
  std::optional<int> precision;
  std::optional<std::size_t> shots;
  std::vector<int> precision_schedule;
  std::vector<double> epsilon_schedule{0.1, 0.01};
  std::size_t net_cap = 100000;
  ComplexRows members;
  std::vector<double> weights;
  bool product_only = false;
  bool operator==(const ExperimentConfig&) const = default;
};

struct CheckConfig {
  std::string kind;  // closure | product_form | estimation
  std::string family = "quantum_povm";
  int d = 2;
  int m = 3;
  std::size_t samples = 1000;
  int background_dim = 2;
  std::size_t members = 4;
  std::string probes = "full";  // full | product
  bool operator==(const CheckConfig&) const = default;
};

struct OutputConfig {
  std::string path;               // empty: standard output
  std::string format = "text";    // text | records
  bool operator==(const OutputConfig&) const = default;
};

using ActionConfig = std::variant<DeviceConfig, ExperimentConfig, CheckConfig>;

struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::vector<int> dims{2, 2};
  StateConfig state;
  ActionConfig action;
  OutputConfig output;
  bool operator==(const RunConfig&) const = default;
};

/// Parses and validates a configuration. Non-fatal notes (renormalized
/// amplitudes) are appended to `warnings` when given.
RunConfig parse_config(std::string_view text, std::vector<std::string>* warnings = nullptr);

/// Serializes a configuration so that parse_config reproduces it.
std::string to_config_text(const RunConfig& config);

/// Catalog row for one device kind.
struct DeviceCatalogEntry {
  DeviceKind kind;
  std::string_view tags;     // device acronyms the kind covers
  std::string_view summary;
  std::vector<std::string_view> parameters;  // optional ones end in '?'
};

const std::vector<DeviceCatalogEntry>& device_catalog();

/// Throws ContractViolation when the parameters do not form a device.
DeviceSpec build_device_spec(const DeviceConfig& config);

/// Throws ContractViolation when the constructor and dims disagree. `rng`
/// is only used by the random constructor.
PureState build_state(const StateConfig& config, const std::vector<int>& dims, RandomStream& rng);

/// Built-in experiment ids, in demo order.
const std::vector<std::string_view>& experiment_ids();

}  // namespace pqsim
