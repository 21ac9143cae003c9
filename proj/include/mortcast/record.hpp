#pragma once

// Plain-text model records shared by every serializable model.
//
//   @arima
//   order 1 0 0
//   ar 0.49873211904410517
//   @end
//
// One key per line followed by whitespace-separated tokens. Numbers are
// written with 17 significant digits so a write/read cycle is bit-exact.

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mortcast/error.hpp"

namespace mortcast {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& token, std::size_t line = 0) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(token, &used);
  } catch (const std::exception&) {
    throw ParseError("not a number: '" + token + "'", line);
  }
  if (used != token.size()) throw ParseError("not a number: '" + token + "'", line);
  return value;
}

class Record {
 public:
  explicit Record(std::string kind = {}) : kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

  Record& set(const std::string& key, std::vector<std::string> tokens) {
    for (auto& [k, v] : fields_) {
      if (k == key) {
        v = std::move(tokens);
        return *this;
      }
    }
    fields_.emplace_back(key, std::move(tokens));
    return *this;
  }
  Record& set(const std::string& key, const std::string& text) {
    return set(key, std::vector<std::string>{text});
  }
  Record& set(const std::string& key, const char* text) { return set(key, std::string(text)); }
  Record& set(const std::string& key, const std::vector<double>& values) {
    std::vector<std::string> tokens;
    tokens.reserve(values.size());
    for (double v : values) tokens.push_back(format_double(v));
    return set(key, std::move(tokens));
  }
  Record& set(const std::string& key, double value) {
    return set(key, std::vector<std::string>{format_double(value)});
  }
  Record& set(const std::string& key, long long value) {
    return set(key, std::vector<std::string>{std::to_string(value)});
  }
  Record& set(const std::string& key, int value) { return set(key, static_cast<long long>(value)); }

  bool has(const std::string& key) const { return find(key) != nullptr; }

  const std::vector<std::string>& tokens(const std::string& key) const {
    const auto* t = find(key);
    if (!t) throw ParseError("record '" + kind_ + "' has no field '" + key + "'", 0);
    return *t;
  }
  std::string text(const std::string& key) const {
    const auto& t = tokens(key);
    if (t.size() != 1) throw ParseError("field '" + key + "' expects one token", 0);
    return t.front();
  }
  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    for (const auto& tok : tokens(key)) out.push_back(parse_double(tok));
    return out;
  }
  double number(const std::string& key) const { return parse_double(text(key)); }
  long long integer(const std::string& key) const {
    const auto t = text(key);
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.size() || t.empty()) throw ParseError("field '" + key + "' is not an integer", 0);
    return v;
  }

  const std::vector<std::pair<std::string, std::vector<std::string>>>& fields() const noexcept {
    return fields_;
  }

 private:
  const std::vector<std::string>* find(const std::string& key) const {
    for (const auto& [k, v] : fields_)
      if (k == key) return &v;
    return nullptr;
  }

  std::string kind_;
  std::vector<std::pair<std::string, std::vector<std::string>>> fields_;
};

inline void write_record(std::ostream& os, const Record& rec) {
  os << '@' << rec.kind() << '\n';
  for (const auto& [key, tokens] : rec.fields()) {
    os << key;
    for (const auto& t : tokens) os << ' ' << t;
    os << '\n';
  }
  os << "@end\n";
}

/// Reads every record in the stream. Blank lines and lines starting with '#' are ignored.
inline std::vector<Record> read_records(std::istream& is) {
  std::vector<Record> out;
  std::string line;
  std::size_t lineno = 0;
  bool open = false;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string head;
    if (!(ss >> head) || head.front() == '#') continue;
    if (head.front() == '@') {
      if (head == "@end") {
        if (!open) throw ParseError("'@end' without an open record", lineno);
        open = false;
      } else {
        if (open) throw ParseError("record '" + out.back().kind() + "' not closed", lineno);
        out.emplace_back(head.substr(1));
        open = true;
      }
      continue;
    }
    if (!open) throw ParseError("field outside a record", lineno);
    std::vector<std::string> tokens;
    for (std::string tok; ss >> tok;) tokens.push_back(tok);
    out.back().set(head, std::move(tokens));
  }
  if (open) throw ParseError("record '" + out.back().kind() + "' not closed", lineno);
  return out;
}

inline std::string to_text(const std::vector<Record>& records) {
  std::ostringstream os;
  for (const auto& r : records) write_record(os, r);
  return os.str();
}

inline std::vector<Record> from_text(const std::string& text) {
  std::istringstream is(text);
  return read_records(is);
}

}  // namespace mortcast
