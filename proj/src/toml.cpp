#include "spikelab/toml.hpp"

#include <cctype>
#include <charconv>
#include <limits>
#include <sstream>
#include <vector>

#include "spikelab/error.hpp"

namespace spikelab::toml {

namespace {

using nlohmann::json;

class LineParser {
 public:
  LineParser(std::string_view s, int line) : s_(s), line_(line) {}

  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream msg;
    msg << "config line " << line_ << ": " << what;
    throw InvalidArgument(msg.str());
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  bool at_end_or_comment() {
    skip_ws();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }

  std::vector<std::string> key_path() {
    std::vector<std::string> parts;
    do {
      skip_ws();
      parts.push_back(key());
    } while (consume('.'));
    return parts;
  }

  json value() {
    skip_ws();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"') return json(basic_string());
    if (c == '\'') return json(literal_string());
    if (c == '[') return array();
    if (c == '{') return inline_table();
    return scalar();
  }

 private:
  std::string key() {
    if (pos_ < s_.size() && s_[pos_] == '"') return basic_string();
    if (pos_ < s_.size() && s_[pos_] == '\'') return literal_string();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-')) ++pos_;
    if (start == pos_) fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::string basic_string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      }
      out.push_back(c);
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  std::string literal_string() {
    ++pos_;
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != '\'') ++pos_;
    if (pos_ >= s_.size()) fail("unterminated string");
    return std::string(s_.substr(start, pos_++ - start));
  }

  json array() {
    ++pos_;
    json arr = json::array();
    skip_ws();
    if (consume(']')) return arr;
    while (true) {
      arr.push_back(value());
      if (consume(']')) return arr;
      expect(',');
      if (consume(']')) return arr;  // trailing comma
    }
  }

  json inline_table() {
    ++pos_;
    json obj = json::object();
    if (consume('}')) return obj;
    while (true) {
      skip_ws();
      const auto path = key_path();
      expect('=');
      json* node = &obj;
      for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        node = &(*node)[path[i]];
        if (node->is_null()) *node = json::object();
        if (!node->is_object()) fail("key '" + path[i] + "' is not a table");
      }
      if (node->contains(path.back())) fail("duplicate key '" + path.back() + "'");
      (*node)[path.back()] = value();
      if (consume('}')) return obj;
      expect(',');
    }
  }

  json scalar() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '}' && s_[pos_] != '#' && s_[pos_] != ' ' && s_[pos_] != '\t') ++pos_;
    std::string tok(s_.substr(start, pos_ - start));
    if (tok == "true") return json(true);
    if (tok == "false") return json(false);
    if (tok == "inf" || tok == "+inf") return json(std::numeric_limits<double>::infinity());
    if (tok == "-inf") return json(-std::numeric_limits<double>::infinity());
    std::string clean;
    for (char c : tok) {
      if (c != '_') clean.push_back(c);
    }
    if (clean.empty()) fail("missing value");
    const bool is_float = clean.find_first_of(".eE") != std::string::npos;
    const char* first = clean.data() + (clean[0] == '+' ? 1 : 0);
    const char* last = clean.data() + clean.size();
    if (!is_float) {
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec == std::errc() && ptr == last) return json(v);
    } else {
      double v = 0;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec == std::errc() && ptr == last) return json(v);
    }
    fail("cannot parse value '" + tok + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_;
};

json& descend(json& root, const std::vector<std::string>& path, std::size_t count, LineParser& lp) {
  json* node = &root;
  for (std::size_t i = 0; i < count; ++i) {
    json& next = (*node)[path[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) lp.fail("key '" + path[i] + "' is not a table");
    node = &next;
  }
  return *node;
}

}  // namespace

nlohmann::json parse(const std::string& text) {
  json root = json::object();
  std::vector<std::string> table;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    LineParser lp(line, number);
    if (lp.at_end_or_comment()) continue;
    if (lp.consume('[')) {
      if (lp.consume('[')) lp.fail("arrays of tables are not supported");
      table = lp.key_path();
      lp.expect(']');
      if (!lp.at_end_or_comment()) lp.fail("unexpected text after table header");
      descend(root, table, table.size(), lp);
      continue;
    }
    auto path = lp.key_path();
    lp.expect('=');
    json v = lp.value();
    if (!lp.at_end_or_comment()) lp.fail("unexpected text after value");
    json& base = descend(root, table, table.size(), lp);
    json& parent = descend(base, path, path.size() - 1, lp);
    if (parent.contains(path.back())) lp.fail("duplicate key '" + path.back() + "'");
    parent[path.back()] = std::move(v);
  }
  return root;
}

}  // namespace spikelab::toml
