#include "pqsim/records.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace pqsim {

namespace {

bool needs_quotes(std::string_view v) {
  if (v.empty()) return true;
  for (char c : v) {
    if (c == ' ' || c == '\t' || c == '"' || c == '=' || c == '\\') return true;
  }
  return false;
}

bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
  }
  return true;
}

std::optional<double> parse_real(std::string_view s) {
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  if (s == "nan") return NAN;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_complex(Complex z) {
  std::string im = format_double(z.imag());
  if (im.front() != '-') im.insert(im.begin(), '+');
  return format_double(z.real()) + im + "i";
}

std::optional<Complex> parse_complex(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text.back() != 'i') {
    const auto re = parse_real(text);
    if (!re) return std::nullopt;
    return Complex(*re, 0.0);
  }
  const std::string_view body = text.substr(0, text.size() - 1);
  // The imaginary part starts at the last sign that is not an exponent sign.
  for (std::size_t i = body.size(); i-- > 0;) {
    if ((body[i] == '+' || body[i] == '-') && (i == 0 || (body[i - 1] != 'e' && body[i - 1] != 'E'))) {
      const std::string_view re_part = body.substr(0, i);
      std::string_view im_part = body.substr(i);
      if (im_part.size() == 1) return std::nullopt;
      if (im_part.front() == '+') im_part.remove_prefix(1);
      const auto im = parse_real(im_part);
      if (!im) return std::nullopt;
      if (re_part.empty()) return Complex(0.0, *im);
      const auto re = parse_real(re_part);
      if (!re) return std::nullopt;
      return Complex(*re, *im);
    }
  }
  const auto im = parse_real(body);
  if (!im) return std::nullopt;
  return Complex(0.0, *im);
}

Record& Record::set(const std::string& key, std::string value) {
  if (!valid_key(key)) throw std::invalid_argument("record key '" + key + "' is not a plain identifier");
  fields_[key] = std::move(value);
  return *this;
}

Record& Record::set(const std::string& key, double value) { return set(key, format_double(value)); }
Record& Record::set(const std::string& key, std::int64_t value) { return set(key, std::to_string(value)); }
Record& Record::set(const std::string& key, std::uint64_t value) { return set(key, std::to_string(value)); }
Record& Record::set(const std::string& key, Complex value) { return set(key, format_complex(value)); }

std::optional<std::string> Record::get(const std::string& key) const {
  const auto it = fields_.find(key);
  if (it == fields_.end()) return std::nullopt;
  return it->second;
}

std::string Record::to_line() const {
  std::string out;
  for (const auto& [key, value] : fields_) {
    if (!out.empty()) out += ' ';
    out += key;
    out += '=';
    if (!needs_quotes(value)) {
      out += value;
      continue;
    }
    out += '"';
    for (char c : value) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    out += '"';
  }
  return out;
}

Record Record::parse(std::string_view line) {
  Record r;
  std::size_t i = 0;
  auto fail = [&](const char* what) {
    throw std::invalid_argument(std::string("record: ") + what + " at column " + std::to_string(i + 1));
  };
  while (i < line.size()) {
    if (line[i] == ' ') {
      ++i;
      continue;
    }
    const std::size_t eq = line.find('=', i);
    if (eq == std::string_view::npos) fail("missing '='");
    const std::string key(line.substr(i, eq - i));
    i = eq + 1;
    std::string value;
    if (i < line.size() && line[i] == '"') {
      ++i;
      bool closed = false;
      while (i < line.size()) {
        const char c = line[i++];
        if (c == '\\' && i < line.size()) {
          value += line[i++];
        } else if (c == '"') {
          closed = true;
          break;
        } else {
          value += c;
        }
      }
      if (!closed) fail("unterminated quote");
    } else {
      const std::size_t end = std::min(line.find(' ', i), line.size());
      value = std::string(line.substr(i, end - i));
      i = end;
    }
    if (r.fields_.contains(key)) fail("duplicate key");
    r.set(key, std::move(value));
  }
  return r;
}

}  // namespace pqsim
