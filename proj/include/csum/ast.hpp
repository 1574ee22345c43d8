#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace csum {

/// Labeled ordered tree over the srcML-style grammar subset. Word-bearing
/// nodes are leaves: `word` non-empty implies no children.
struct AstNode {
  std::string label;
  std::string word;
  std::vector<AstNode> children;

  AstNode() = default;
  explicit AstNode(std::string lbl) : label(std::move(lbl)) {}
  AstNode(std::string lbl, std::string w) : label(std::move(lbl)), word(std::move(w)) {}

  AstNode& add(AstNode child) {
    children.push_back(std::move(child));
    return children.back();
  }

  bool is_leaf() const { return children.empty(); }
  std::size_t node_count() const {
    std::size_t n = 1;
    for (const AstNode& c : children) n += c.node_count();
    return n;
  }
};

/// Parse failure with the byte offset of the offending token. Pipeline
/// policy is skip-and-count, so callers catch this per method.
class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t offset, const std::string& msg)
      : std::runtime_error(msg + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_ = 0;
};

class XmlError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The closed set of node labels the parser emits and the XML reader accepts.
const std::set<std::string>& srcml_label_set();

/// Java API class names whose words survive SBT-AO masking.
class ApiWhitelist {
public:
  ApiWhitelist() = default;
  explicit ApiWhitelist(std::set<std::string> names) : names_(std::move(names)) {}

  static ApiWhitelist from_file(const std::string& path);
  static ApiWhitelist parse(std::string_view text);  // one name per line, # comments

  bool contains(const std::string& name) const { return names_.count(name) != 0; }
  std::size_t size() const { return names_.size(); }

private:
  std::set<std::string> names_;  // case-sensitive
};

/// Parse a single Java method declaration (grammar subset) into an AST
/// rooted at `unit` with one `function` child.
AstNode parse_method(std::string_view source);

/// Ingest srcML-style structural XML. Element name -> label (namespace
/// prefixes stripped); text of leaf elements -> word. Unknown elements and
/// malformed XML raise XmlError naming the offender.
AstNode from_xml(std::string_view xml);

/// SBT flattening: depth-first `( label ... ) label` rendering; a
/// word-bearing leaf renders `label_word` on both tokens.
std::vector<std::string> sbt_flatten(const AstNode& root);

/// SBT-AO flattening: identical skeleton, but leaf words are masked to
/// OTHER unless whitelisted, and the word suffix appears on the closing
/// token only.
std::vector<std::string> sbt_ao_flatten(const AstNode& root, const ApiWhitelist& wl);

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace csum
