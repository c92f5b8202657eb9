#pragma once

// Minimal non-validating XML reader covering what test reports use:
// elements, attributes, text, CDATA, comments, processing instructions
// and the predefined/numeric entities. DTDs are skipped, not interpreted.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace flakelens::xml {

struct Element {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Element> children;
  std::string text;
  std::size_t offset = 0;  // byte offset of '<'

  std::optional<std::string_view> attribute(std::string_view key) const;
};

/// Parses a document and returns its root element. Throws ParseError with
/// the byte offset of the first problem.
Element parse(std::string_view document);

}  // namespace flakelens::xml
