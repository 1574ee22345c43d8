#include "csum/ast.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

namespace csum {

namespace {

// ---------------------------------------------------------------------------
// Label set
// ---------------------------------------------------------------------------

const std::set<std::string>& label_set_impl() {
  static const std::set<std::string> labels = {
      "unit",       "function",  "annotation", "specifier", "type",
      "name",       "parameter_list", "parameter", "decl",  "decl_stmt",
      "init",       "block",     "expr_stmt",  "expr",      "operator",
      "literal",    "call",      "argument_list", "argument", "index",
      "return",     "if_stmt",   "if",         "condition", "else",
      "while",      "for",       "control",    "incr",      "try",
      "catch",      "finally",   "throw",      "throws",    "empty_stmt",
  };
  return labels;
}

// ---------------------------------------------------------------------------
// Java lexer (grammar subset)
// ---------------------------------------------------------------------------

enum class TokKind { Ident, Number, String, Char, Punct, End };

struct Token {
  TokKind kind = TokKind::End;
  std::string text;
  std::size_t offset = 0;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }
bool ident_cont(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }

// Multi-character punctuators, longest first so max-munch works by scan order.
const std::array<std::string_view, 21> kMultiPunct = {
    "<<=", ">>=", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=",
    "-=",  "*=",  "/=", "%=", "&=", "|=", "^=", "<<", ">>", "->",
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = src.size();
  while (i < n) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      std::size_t start = i;
      i += 2;
      while (i + 1 < n && !(src[i] == '*' && src[i + 1] == '/')) ++i;
      if (i + 1 >= n) throw ParseError(start, "unterminated block comment");
      i += 2;
      continue;
    }
    if (ident_start(c)) {
      std::size_t start = i;
      while (i < n && ident_cont(src[i])) ++i;
      out.push_back({TokKind::Ident, std::string(src.substr(start, i - start)), start});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = i;
      while (i < n && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '.')) ++i;
      out.push_back({TokKind::Number, std::string(src.substr(start, i - start)), start});
      continue;
    }
    if (c == '"' || c == '\'') {
      char quote = c;
      std::size_t start = i;
      ++i;
      while (i < n && src[i] != quote) {
        if (src[i] == '\\' && i + 1 < n) ++i;
        ++i;
      }
      if (i >= n) throw ParseError(start, "unterminated literal");
      ++i;
      out.push_back({quote == '"' ? TokKind::String : TokKind::Char,
                     std::string(src.substr(start, i - start)), start});
      continue;
    }
    bool matched = false;
    for (std::string_view p : kMultiPunct) {
      if (src.substr(i, p.size()) == p) {
        out.push_back({TokKind::Punct, std::string(p), i});
        i += p.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;
    static const std::string kSingle = "(){}[];,.=<>+-*/%!&|^~@:?";
    if (kSingle.find(c) != std::string::npos) {
      out.push_back({TokKind::Punct, std::string(1, c), i});
      ++i;
      continue;
    }
    throw ParseError(i, std::string("unexpected character '") + c + "'");
  }
  out.push_back({TokKind::End, "", n});
  return out;
}

// ---------------------------------------------------------------------------
// Recursive-descent parser producing the srcML-shaped tree
// ---------------------------------------------------------------------------

const std::set<std::string>& specifier_words() {
  static const std::set<std::string> s = {
      "public", "private",      "protected", "static",   "final",    "abstract",
      "native", "synchronized", "transient", "volatile", "strictfp", "default",
  };
  return s;
}

class MethodParser {
public:
  explicit MethodParser(std::string_view src) : toks_(lex(src)) {}

  AstNode parse_unit() {
    AstNode unit("unit");
    unit.add(parse_function());
    if (!at_end()) fail("trailing input after method");
    return unit;
  }

private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;

  const Token& cur() const { return toks_[pos_]; }
  const Token& ahead(std::size_t k) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  bool at_end() const { return cur().kind == TokKind::End; }
  bool at_punct(std::string_view p) const { return cur().kind == TokKind::Punct && cur().text == p; }
  bool at_ident(std::string_view w) const { return cur().kind == TokKind::Ident && cur().text == w; }
  void advance() { if (!at_end()) ++pos_; }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(cur().offset, msg); }

  void expect_punct(std::string_view p) {
    if (!at_punct(p)) fail("expected '" + std::string(p) + "'");
    advance();
  }

  std::string expect_ident(const char* what) {
    if (cur().kind != TokKind::Ident) fail(std::string("expected ") + what);
    std::string w = cur().text;
    advance();
    return w;
  }

  AstNode parse_function() {
    AstNode fn("function");
    while (at_punct("@")) fn.add(parse_annotation());
    while (cur().kind == TokKind::Ident && specifier_words().count(cur().text)) {
      fn.add(AstNode("specifier", cur().text));
      advance();
    }
    fn.add(parse_type());
    fn.add(AstNode("name", expect_ident("method name")));
    fn.add(parse_parameter_list());
    if (at_ident("throws")) {
      advance();
      AstNode th("throws");
      th.add(parse_dotted_name());
      while (at_punct(",")) {
        advance();
        th.add(parse_dotted_name());
      }
      fn.add(std::move(th));
    }
    fn.add(parse_block());
    return fn;
  }

  AstNode parse_annotation() {
    expect_punct("@");
    AstNode ann("annotation");
    ann.add(AstNode("name", expect_ident("annotation name")));
    return ann;
  }

  // A type is a (possibly dotted) identifier. Generics and arrays are outside
  // the supported subset and fail with a parse error.
  AstNode parse_type() {
    AstNode type("type");
    type.add(parse_dotted_name());
    if (at_punct("<") || at_punct("[")) fail("unsupported type syntax");
    return type;
  }

  // `a.b.c` folds into name(name, operator, name, operator, name); a single
  // identifier stays a word-bearing name leaf. A trailing `[expr]` folds the
  // name into name(name, index(expr)).
  AstNode parse_dotted_name() {
    AstNode first("name", expect_ident("name"));
    AstNode node = std::move(first);
    while (at_punct(".") && ahead(1).kind == TokKind::Ident) {
      if (node.is_leaf() && node.label == "name" && node.children.empty() && !node.word.empty()) {
        AstNode outer("name");
        outer.add(std::move(node));
        node = std::move(outer);
      }
      advance();
      node.add(AstNode("operator", "."));
      node.add(AstNode("name", expect_ident("name")));
    }
    if (at_punct("[")) {
      AstNode outer("name");
      if (node.label == "name" && !node.word.empty()) {
        outer.add(std::move(node));
      } else {
        outer = std::move(node);
      }
      while (at_punct("[")) {
        advance();
        AstNode idx("index");
        if (!at_punct("]")) idx.add(parse_expr_until({"]"}));
        expect_punct("]");
        outer.add(std::move(idx));
      }
      return outer;
    }
    return node;
  }

  AstNode parse_parameter_list() {
    expect_punct("(");
    AstNode params("parameter_list");
    if (!at_punct(")")) {
      params.add(parse_parameter());
      while (at_punct(",")) {
        advance();
        params.add(parse_parameter());
      }
    }
    expect_punct(")");
    return params;
  }

  AstNode parse_parameter() {
    AstNode param("parameter");
    AstNode decl("decl");
    while (at_ident("final")) {
      decl.add(AstNode("specifier", "final"));
      advance();
    }
    decl.add(parse_type());
    decl.add(AstNode("name", expect_ident("parameter name")));
    param.add(std::move(decl));
    return param;
  }

  AstNode parse_block() {
    expect_punct("{");
    AstNode block("block");
    while (!at_punct("}")) {
      if (at_end()) fail("unterminated block");
      block.add(parse_statement());
    }
    expect_punct("}");
    return block;
  }

  // A braceless loop/branch body becomes a block holding the lone statement,
  // so downstream consumers see one body shape.
  AstNode parse_body() {
    if (at_punct("{")) return parse_block();
    AstNode block("block");
    block.add(parse_statement());
    return block;
  }

  AstNode parse_statement() {
    if (at_punct(";")) {
      advance();
      return AstNode("empty_stmt");
    }
    if (at_punct("{")) return parse_block();
    if (at_ident("return")) return parse_return();
    if (at_ident("throw")) return parse_throw();
    if (at_ident("if")) return parse_if_stmt();
    if (at_ident("while")) return parse_while();
    if (at_ident("for")) return parse_for();
    if (at_ident("try")) return parse_try();
    if (looks_like_decl()) return parse_decl_stmt();
    AstNode stmt("expr_stmt");
    stmt.add(parse_expr_until({";"}));
    expect_punct(";");
    return stmt;
  }

  AstNode parse_return() {
    advance();
    AstNode ret("return");
    if (!at_punct(";")) ret.add(parse_expr_until({";"}));
    expect_punct(";");
    return ret;
  }

  AstNode parse_throw() {
    advance();
    AstNode thr("throw");
    thr.add(parse_expr_until({";"}));
    expect_punct(";");
    return thr;
  }

  AstNode parse_if_stmt() {
    AstNode if_stmt("if_stmt");
    AstNode if_node("if");
    advance();  // if
    expect_punct("(");
    AstNode cond("condition");
    cond.add(parse_expr_until({")"}));
    expect_punct(")");
    if_node.add(std::move(cond));
    if_node.add(parse_body());
    if_stmt.add(std::move(if_node));
    if (at_ident("else")) {
      advance();
      AstNode else_node("else");
      if (at_ident("if")) {
        else_node.add(parse_if_stmt());
      } else {
        else_node.add(parse_body());
      }
      if_stmt.add(std::move(else_node));
    }
    return if_stmt;
  }

  AstNode parse_while() {
    advance();
    AstNode wh("while");
    expect_punct("(");
    AstNode cond("condition");
    cond.add(parse_expr_until({")"}));
    expect_punct(")");
    wh.add(std::move(cond));
    wh.add(parse_body());
    return wh;
  }

  AstNode parse_for() {
    advance();
    AstNode f("for");
    expect_punct("(");
    AstNode control("control");
    AstNode init("init");
    if (!at_punct(";")) {
      if (looks_like_decl_header()) {
        init.add(parse_decl());
      } else {
        init.add(parse_expr_until({";"}));
      }
    }
    expect_punct(";");
    control.add(std::move(init));
    AstNode cond("condition");
    if (!at_punct(";")) cond.add(parse_expr_until({";"}));
    expect_punct(";");
    control.add(std::move(cond));
    AstNode incr("incr");
    if (!at_punct(")")) incr.add(parse_expr_until({")"}));
    expect_punct(")");
    control.add(std::move(incr));
    f.add(std::move(control));
    f.add(parse_body());
    return f;
  }

  AstNode parse_try() {
    advance();
    AstNode tr("try");
    tr.add(parse_block());
    bool saw_handler = false;
    while (at_ident("catch")) {
      saw_handler = true;
      advance();
      AstNode cat("catch");
      expect_punct("(");
      AstNode params("parameter_list");
      AstNode param("parameter");
      AstNode decl("decl");
      decl.add(parse_type());
      decl.add(AstNode("name", expect_ident("exception name")));
      param.add(std::move(decl));
      params.add(std::move(param));
      expect_punct(")");
      cat.add(std::move(params));
      cat.add(parse_block());
      tr.add(std::move(cat));
    }
    if (at_ident("finally")) {
      saw_handler = true;
      advance();
      AstNode fin("finally");
      fin.add(parse_block());
      tr.add(std::move(fin));
    }
    if (!saw_handler) fail("try without catch or finally");
    return tr;
  }

  bool looks_like_decl_header() const {
    // Type name followed by a declared identifier: IDENT (. IDENT)* IDENT
    if (cur().kind != TokKind::Ident) return false;
    if (specifier_words().count(cur().text)) return true;
    std::size_t k = 1;
    while (ahead(k).kind == TokKind::Punct && ahead(k).text == "." &&
           ahead(k + 1).kind == TokKind::Ident) {
      k += 2;
    }
    return ahead(k).kind == TokKind::Ident;
  }

  bool looks_like_decl() const {
    if (!looks_like_decl_header()) return false;
    return true;
  }

  AstNode parse_decl() {
    AstNode decl("decl");
    while (cur().kind == TokKind::Ident && specifier_words().count(cur().text)) {
      decl.add(AstNode("specifier", cur().text));
      advance();
    }
    decl.add(parse_type());
    decl.add(AstNode("name", expect_ident("declared name")));
    if (at_punct("=")) {
      advance();
      AstNode init("init");
      init.add(parse_expr_until({";", ")", ","}));
      decl.add(std::move(init));
    }
    return decl;
  }

  AstNode parse_decl_stmt() {
    AstNode stmt("decl_stmt");
    stmt.add(parse_decl());
    if (at_punct(",")) fail("multiple declarators are unsupported");
    expect_punct(";");
    return stmt;
  }

  bool at_stop(const std::vector<std::string_view>& stops, int paren_depth) const {
    if (paren_depth > 0) return false;
    if (cur().kind != TokKind::Punct) return false;
    for (std::string_view s : stops) {
      if (cur().text == s) return true;
    }
    return false;
  }

  // Expressions are rendered flat, srcML style: a sequence of operand and
  // operator children with no precedence structure.
  AstNode parse_expr_until(const std::vector<std::string_view>& stops) {
    AstNode expr("expr");
    int guard = 0;
    while (!at_stop(stops, 0)) {
      if (at_end()) fail("unterminated expression");
      if (++guard > 4096) fail("expression too long");
      if (cur().kind == TokKind::Ident) {
        if (cur().text == "new") fail("unsupported expression syntax 'new'");
        if (cur().text == "true" || cur().text == "false" || cur().text == "null") {
          expr.add(AstNode("literal", cur().text));
          advance();
          continue;
        }
        expr.add(parse_name_or_call());
        continue;
      }
      if (cur().kind == TokKind::Number) {
        expr.add(AstNode("literal", cur().text));
        advance();
        continue;
      }
      if (cur().kind == TokKind::String) {
        expr.add(AstNode("literal", "STR"));
        advance();
        continue;
      }
      if (cur().kind == TokKind::Char) {
        expr.add(AstNode("literal", "CHR"));
        advance();
        continue;
      }
      if (cur().kind == TokKind::Punct) {
        const std::string& p = cur().text;
        if (p == "(" || p == ")" || p == "[" || p == "]" || p == "{" || p == "}" ||
            p == ";" || p == "," || p == "@" || p == "?" || p == ":" || p == "->") {
          fail("unsupported token '" + p + "' in expression");
        }
        expr.add(AstNode("operator", p));
        advance();
        continue;
      }
      fail("unsupported token in expression");
    }
    if (expr.children.empty()) fail("empty expression");
    return expr;
  }

  // A dotted name followed by `(` is a call: call(name, argument_list).
  AstNode parse_name_or_call() {
    AstNode name = parse_dotted_name();
    if (!at_punct("(")) return name;
    advance();
    AstNode call("call");
    call.add(std::move(name));
    AstNode args("argument_list");
    if (!at_punct(")")) {
      for (;;) {
        AstNode arg("argument");
        arg.add(parse_expr_until({",", ")"}));
        args.add(std::move(arg));
        if (!at_punct(",")) break;
        advance();
      }
    }
    expect_punct(")");
    call.add(std::move(args));
    return call;
  }
};

// ---------------------------------------------------------------------------
// Minimal XML reader for srcML-style structural markup
// ---------------------------------------------------------------------------

class XmlReader {
public:
  explicit XmlReader(std::string_view s) : s_(s) {}

  AstNode parse_document() {
    skip_prolog();
    AstNode root = parse_element();
    skip_ws();
    skip_misc();
    if (i_ != s_.size()) throw XmlError("trailing content after root element");
    return root;
  }

private:
  std::string_view s_;
  std::size_t i_ = 0;

  [[noreturn]] void fail(const std::string& msg) const { throw XmlError(msg); }

  void skip_ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }

  bool starts_with(std::string_view p) const { return s_.substr(i_, p.size()) == p; }

  void skip_misc() {
    for (;;) {
      skip_ws();
      if (starts_with("<?")) {
        std::size_t end = s_.find("?>", i_);
        if (end == std::string_view::npos) fail("unterminated processing instruction");
        i_ = end + 2;
      } else if (starts_with("<!--")) {
        std::size_t end = s_.find("-->", i_);
        if (end == std::string_view::npos) fail("unterminated comment");
        i_ = end + 3;
      } else {
        return;
      }
    }
  }

  void skip_prolog() { skip_misc(); }

  static std::string strip_prefix(std::string_view name) {
    std::size_t colon = name.rfind(':');
    if (colon == std::string_view::npos) return std::string(name);
    return std::string(name.substr(colon + 1));
  }

  std::string read_name() {
    std::size_t start = i_;
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) ||
                              s_[i_] == '_' || s_[i_] == ':' || s_[i_] == '-')) {
      ++i_;
    }
    if (i_ == start) fail("expected element name");
    return std::string(s_.substr(start, i_ - start));
  }

  void skip_attributes() {
    for (;;) {
      skip_ws();
      if (i_ >= s_.size()) fail("unterminated start tag");
      char c = s_[i_];
      if (c == '>' || c == '/') return;
      read_name();
      skip_ws();
      if (i_ >= s_.size() || s_[i_] != '=') fail("malformed attribute");
      ++i_;
      skip_ws();
      if (i_ >= s_.size() || (s_[i_] != '"' && s_[i_] != '\'')) fail("malformed attribute value");
      char quote = s_[i_++];
      std::size_t end = s_.find(quote, i_);
      if (end == std::string_view::npos) fail("unterminated attribute value");
      i_ = end + 1;
    }
  }

  std::string decode_entities(std::string_view text) const {
    std::string out;
    out.reserve(text.size());
    for (std::size_t j = 0; j < text.size(); ++j) {
      if (text[j] != '&') {
        out.push_back(text[j]);
        continue;
      }
      std::size_t semi = text.find(';', j);
      if (semi == std::string_view::npos) throw XmlError("unterminated entity reference");
      std::string_view ent = text.substr(j + 1, semi - j - 1);
      if (ent == "lt") out.push_back('<');
      else if (ent == "gt") out.push_back('>');
      else if (ent == "amp") out.push_back('&');
      else if (ent == "quot") out.push_back('"');
      else if (ent == "apos") out.push_back('\'');
      else throw XmlError("unknown entity reference '&" + std::string(ent) + ";'");
      j = semi;
    }
    return out;
  }

  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  AstNode parse_element() {
    if (i_ >= s_.size() || s_[i_] != '<') fail("expected element");
    ++i_;
    std::string raw_name = read_name();
    std::string label = strip_prefix(raw_name);
    if (!srcml_label_set().count(label)) fail("unknown element '" + label + "'");
    AstNode node(label);
    skip_attributes();
    if (starts_with("/")) {
      ++i_;
      if (i_ >= s_.size() || s_[i_] != '>') fail("malformed empty-element tag");
      ++i_;
      return node;
    }
    if (i_ >= s_.size() || s_[i_] != '>') fail("malformed start tag");
    ++i_;

    std::string text;
    for (;;) {
      if (i_ >= s_.size()) fail("unterminated element '" + label + "'");
      if (starts_with("</")) {
        i_ += 2;
        std::string close = strip_prefix(read_name());
        skip_ws();
        if (i_ >= s_.size() || s_[i_] != '>') fail("malformed end tag");
        ++i_;
        if (close != label) {
          fail("mismatched end tag '" + close + "' for element '" + label + "'");
        }
        break;
      }
      if (starts_with("<!--")) {
        std::size_t end = s_.find("-->", i_);
        if (end == std::string_view::npos) fail("unterminated comment");
        i_ = end + 3;
        continue;
      }
      if (s_[i_] == '<') {
        node.children.push_back(parse_element());
        continue;
      }
      std::size_t next = s_.find('<', i_);
      if (next == std::string_view::npos) fail("unterminated element '" + label + "'");
      text.append(decode_entities(s_.substr(i_, next - i_)));
      i_ = next;
    }
    // srcML intersperses source punctuation between child elements; only
    // childless elements carry a word.
    if (node.children.empty()) node.word = trim(text);
    return node;
  }
};

// ---------------------------------------------------------------------------
// Flattening
// ---------------------------------------------------------------------------

std::string sanitize_word(const std::string& w) {
  std::string out = w;
  for (char& c : out) {
    if (std::isspace(static_cast<unsigned char>(c))) c = '_';
  }
  return out;
}

void sbt_walk(const AstNode& node, std::vector<std::string>& out) {
  const std::string rendered =
      node.word.empty() ? node.label : node.label + "_" + sanitize_word(node.word);
  out.push_back("(");
  out.push_back(rendered);
  for (const AstNode& c : node.children) sbt_walk(c, out);
  out.push_back(")");
  out.push_back(rendered);
}

void sbt_ao_walk(const AstNode& node, const ApiWhitelist& wl, std::vector<std::string>& out) {
  std::string close = node.label;
  if (!node.word.empty()) {
    close += wl.contains(node.word) ? "_" + sanitize_word(node.word) : "_OTHER";
  }
  out.push_back("(");
  out.push_back(node.label);
  for (const AstNode& c : node.children) sbt_ao_walk(c, wl, out);
  out.push_back(")");
  out.push_back(close);
}

}  // namespace

const std::set<std::string>& srcml_label_set() { return label_set_impl(); }

ApiWhitelist ApiWhitelist::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open whitelist file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

ApiWhitelist ApiWhitelist::parse(std::string_view text) {
  std::set<std::string> names;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    std::size_t a = 0, b = line.size();
    while (a < b && std::isspace(static_cast<unsigned char>(line[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(line[b - 1]))) --b;
    if (b > a) names.insert(std::string(line.substr(a, b - a)));
    if (end == text.size()) break;
  }
  return ApiWhitelist(std::move(names));
}

AstNode parse_method(std::string_view source) {
  MethodParser parser(source);
  return parser.parse_unit();
}

AstNode from_xml(std::string_view xml) {
  XmlReader reader(xml);
  return reader.parse_document();
}

std::vector<std::string> sbt_flatten(const AstNode& root) {
  std::vector<std::string> out;
  out.reserve(2 * root.node_count() * 2);
  sbt_walk(root, out);
  return out;
}

std::vector<std::string> sbt_ao_flatten(const AstNode& root, const ApiWhitelist& wl) {
  std::vector<std::string> out;
  out.reserve(2 * root.node_count() * 2);
  sbt_ao_walk(root, wl, out);
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

}  // namespace csum
