#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "pqsim/linalg.hpp"

namespace pqsim {

/// %.17g, with "inf", "-inf" and "nan" for non-finite values.
std::string format_double(double x);

/// re+imi / re-imi, both parts at 17 significant digits.
std::string format_complex(Complex z);

/// Parses the output of format_complex (and plain reals). Empty on malformed
/// input.
std::optional<Complex> parse_complex(std::string_view text);

/// One line of `key=value` pairs, keys in lexicographic order. Values with
/// spaces, quotes or '=' are double-quoted with backslash escapes.
class Record {
 public:
  Record& set(const std::string& key, std::string value);
  Record& set(const std::string& key, const char* value) { return set(key, std::string(value)); }
  Record& set(const std::string& key, double value);
  Record& set(const std::string& key, std::int64_t value);
  Record& set(const std::string& key, std::uint64_t value);
  Record& set(const std::string& key, int value) { return set(key, static_cast<std::int64_t>(value)); }
  Record& set(const std::string& key, bool value) { return set(key, std::string(value ? "true" : "false")); }
  Record& set(const std::string& key, Complex value);

  std::optional<std::string> get(const std::string& key) const;
  const std::map<std::string, std::string>& fields() const { return fields_; }

  std::string to_line() const;

  /// Inverse of to_line; throws std::invalid_argument on malformed input.
  static Record parse(std::string_view line);

  bool operator==(const Record&) const = default;

 private:
  std::map<std::string, std::string> fields_;
};

}  // namespace pqsim
