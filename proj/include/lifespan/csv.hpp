#pragma once

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace lifespan::csv {

/// Shortest round-trip decimal form; "nan"/"inf" spelled out.
inline std::string format(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// RFC 4180 quoting: fields with comma, quote or line break are quoted and
/// embedded quotes doubled.
inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void header(const std::vector<std::string>& names) { row(names); }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << quote(fields[i]);
    }
    out_ << '\n';
  }

  void numbers(const std::vector<double>& values) {
    std::vector<std::string> f;
    f.reserve(values.size());
    for (double v : values) f.push_back(format(v));
    row(f);
  }

 private:
  std::ostream& out_;
};

/// Splits one CSV record (no embedded line breaks) honouring quotes.
inline std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace lifespan::csv
