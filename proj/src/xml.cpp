#include "xml.hpp"

#include <cctype>
#include <cstdint>

#include "flakelens/errors.hpp"

namespace flakelens::xml {

std::optional<std::string_view> Element::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return std::string_view(v);
  }
  return std::nullopt;
}

namespace {

bool is_name_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || c == ':' || c == '-' || c == '.' || u >= 0x80;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

class Parser {
 public:
  explicit Parser(std::string_view doc) : doc_(doc) {}

  Element parse_document() {
    skip_misc();
    if (eof() || peek() != '<') fail("expected root element");
    Element root = parse_element();
    skip_misc();
    if (!eof()) fail("content after root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("XML parse error at byte " + std::to_string(pos_) + ": " + msg, pos_,
                     ParseError::Location::ByteOffset);
  }

  bool eof() const { return pos_ >= doc_.size(); }
  char peek() const { return doc_[pos_]; }
  bool starts_with(std::string_view s) const { return doc_.substr(pos_, s.size()) == s; }

  void skip_space() {
    while (!eof() && is_space(peek())) ++pos_;
  }

  void skip_until(std::string_view terminator, const char* what) {
    auto end = doc_.find(terminator, pos_);
    if (end == std::string_view::npos) fail(std::string("unterminated ") + what);
    pos_ = end + terminator.size();
  }

  // Prolog, comments, PIs and DOCTYPE between top-level constructs.
  void skip_misc() {
    for (;;) {
      skip_space();
      if (starts_with("<?")) {
        skip_until("?>", "processing instruction");
      } else if (starts_with("<!--")) {
        skip_until("-->", "comment");
      } else if (starts_with("<!DOCTYPE")) {
        skip_doctype();
      } else {
        return;
      }
    }
  }

  void skip_doctype() {
    int depth = 0;
    while (!eof()) {
      char c = doc_[pos_++];
      if (c == '[') ++depth;
      if (c == ']') --depth;
      if (c == '>' && depth <= 0) return;
    }
    fail("unterminated DOCTYPE");
  }

  std::string parse_name() {
    auto start = pos_;
    while (!eof() && is_name_char(peek())) ++pos_;
    if (start == pos_) fail("expected name");
    return std::string(doc_.substr(start, pos_ - start));
  }

  void decode_entity(std::string& out) {
    auto start = pos_;
    auto end = doc_.find(';', pos_);
    if (end == std::string_view::npos || end - pos_ > 12) fail("unterminated entity");
    auto ent = doc_.substr(pos_ + 1, end - pos_ - 1);
    pos_ = end + 1;
    if (ent == "lt") out += '<';
    else if (ent == "gt") out += '>';
    else if (ent == "amp") out += '&';
    else if (ent == "quot") out += '"';
    else if (ent == "apos") out += '\'';
    else if (!ent.empty() && ent[0] == '#') {
      std::uint32_t cp = 0;
      bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
      auto digits = ent.substr(hex ? 2 : 1);
      if (digits.empty()) {
        pos_ = start;
        fail("bad character reference");
      }
      for (char c : digits) {
        int d;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (hex && c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else if (hex && c >= 'A' && c <= 'F') d = c - 'A' + 10;
        else {
          pos_ = start;
          fail("bad character reference");
        }
        cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(d);
        if (cp > 0x10FFFF) {
          pos_ = start;
          fail("character reference out of range");
        }
      }
      append_utf8(out, cp);
    } else {
      pos_ = start;
      fail("unknown entity '" + std::string(ent) + "'");
    }
  }

  std::string parse_attribute_value() {
    if (eof() || (peek() != '"' && peek() != '\'')) fail("expected quoted attribute value");
    char quote = doc_[pos_++];
    std::string out;
    for (;;) {
      if (eof()) fail("unterminated attribute value");
      char c = peek();
      if (c == quote) {
        ++pos_;
        return out;
      }
      if (c == '<') fail("'<' in attribute value");
      if (c == '&') {
        decode_entity(out);
      } else {
        out += c;
        ++pos_;
      }
    }
  }

  Element parse_element() {
    Element el;
    el.offset = pos_;
    ++pos_;  // '<'
    el.name = parse_name();
    for (;;) {
      skip_space();
      if (eof()) fail("unterminated start tag");
      if (starts_with("/>")) {
        pos_ += 2;
        return el;
      }
      if (peek() == '>') {
        ++pos_;
        break;
      }
      std::string key = parse_name();
      skip_space();
      if (eof() || peek() != '=') fail("expected '=' after attribute name");
      ++pos_;
      skip_space();
      std::string value = parse_attribute_value();
      for (const auto& a : el.attributes) {
        if (a.first == key) fail("duplicate attribute '" + key + "'");
      }
      el.attributes.emplace_back(std::move(key), std::move(value));
    }
    // content
    for (;;) {
      if (eof()) fail("missing end tag for <" + el.name + ">");
      if (starts_with("</")) {
        pos_ += 2;
        auto close = parse_name();
        if (close != el.name) fail("mismatched end tag </" + close + "> for <" + el.name + ">");
        skip_space();
        if (eof() || peek() != '>') fail("expected '>'");
        ++pos_;
        return el;
      }
      if (starts_with("<!--")) {
        skip_until("-->", "comment");
      } else if (starts_with("<![CDATA[")) {
        pos_ += 9;
        auto end = doc_.find("]]>", pos_);
        if (end == std::string_view::npos) fail("unterminated CDATA");
        el.text.append(doc_.substr(pos_, end - pos_));
        pos_ = end + 3;
      } else if (starts_with("<?")) {
        skip_until("?>", "processing instruction");
      } else if (peek() == '<') {
        el.children.push_back(parse_element());
      } else if (peek() == '&') {
        decode_entity(el.text);
      } else {
        el.text += doc_[pos_++];
      }
    }
  }

  std::string_view doc_;
  std::size_t pos_ = 0;
};

}  // namespace

Element parse(std::string_view document) { return Parser(document).parse_document(); }

}  // namespace flakelens::xml
