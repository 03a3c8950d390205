#include "gsamr/penman.hpp"

#include <cctype>
#include <map>
#include <sstream>

#include "gsamr/error.hpp"

namespace gsamr {

namespace {

enum class TokKind { LParen, RParen, Slash, Role, Atom, Str, End };

struct Token {
  TokKind kind;
  std::string text;
  int line, col;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  Token next() {
    skip_space();
    if (pos_ >= text_.size()) return {TokKind::End, "", line_, col_};
    const int line = line_, col = col_;
    const char c = text_[pos_];
    if (c == '(') { advance(); return {TokKind::LParen, "(", line, col}; }
    if (c == ')') { advance(); return {TokKind::RParen, ")", line, col}; }
    if (c == '/') { advance(); return {TokKind::Slash, "/", line, col}; }
    if (c == '"') return lex_string(line, col);
    if (c == ':') {
      advance();
      std::string role;
      while (pos_ < text_.size() && !is_delim(text_[pos_])) {
        role += text_[pos_];
        advance();
      }
      if (role.empty()) fail("empty role", line, col);
      return {TokKind::Role, role, line, col};
    }
    std::string atom;
    while (pos_ < text_.size() && !is_delim(text_[pos_])) {
      atom += text_[pos_];
      advance();
    }
    return {TokKind::Atom, atom, line, col};
  }

  [[noreturn]] void fail(const std::string& msg, int line, int col) const {
    throw DataError("penman:" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
  }

 private:
  static bool is_delim(char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '/' ||
           c == ':' || c == '"';
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) advance();
  }

  Token lex_string(int line, int col) {
    advance();  // opening quote
    std::string s;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) advance();
      s += text_[pos_];
      advance();
    }
    if (pos_ >= text_.size()) fail("unterminated string", line, col);
    advance();  // closing quote
    return {TokKind::Str, s, line, col};
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

bool is_mode_constant(const std::string& s) {
  return s == "imperative" || s == "expressive" || s == "interrogative";
}

// Relations in textual order; targets are either an existing node (subgraph
// or quoted constant) or an atom resolved after the full parse.
struct PendingRelation {
  int src;
  std::string role;
  int target_node = -1;
  std::string atom;
  bool is_atom = false;
  int line = 0, col = 0;
};

class Parser {
 public:
  explicit Parser(const std::string& text) : lex_(text) { tok_ = lex_.next(); }

  AmrGraph parse() {
    if (tok_.kind == TokKind::End) throw DataError("penman: empty input");
    const int root = parse_node();
    if (tok_.kind != TokKind::End) {
      lex_.fail("trailing content after graph", tok_.line, tok_.col);
    }
    resolve();
    graph_.set_root(root);
    graph_.validate();
    return graph_;
  }

 private:
  void expect(TokKind k, const char* what) {
    if (tok_.kind != k) lex_.fail(std::string("expected ") + what + ", got '" + tok_.text + "'",
                                  tok_.line, tok_.col);
  }

  void consume() { tok_ = lex_.next(); }

  int parse_node() {
    expect(TokKind::LParen, "'('");
    consume();
    expect(TokKind::Atom, "variable name");
    const std::string var = tok_.text;
    const int vline = tok_.line, vcol = tok_.col;
    consume();
    expect(TokKind::Slash, "'/'");
    consume();
    expect(TokKind::Atom, "concept label");
    const std::string label = tok_.text;
    consume();
    if (vars_.count(var)) {
      lex_.fail("duplicate variable definition '" + var + "'", vline, vcol);
    }
    const int idx = graph_.add_node(var, label, false);
    vars_[var] = idx;

    while (tok_.kind == TokKind::Role) {
      PendingRelation rel;
      rel.src = idx;
      rel.role = tok_.text;
      rel.line = tok_.line;
      rel.col = tok_.col;
      consume();
      // Reserve the slot before recursing so edges stay in textual order.
      const std::size_t slot = pending_.size();
      pending_.push_back(rel);
      switch (tok_.kind) {
        case TokKind::LParen:
          pending_[slot].target_node = parse_node();
          break;
        case TokKind::Str:
          pending_[slot].target_node = graph_.add_node("", tok_.text, true);
          consume();
          break;
        case TokKind::Atom:
          pending_[slot].atom = tok_.text;
          pending_[slot].is_atom = true;
          pending_[slot].line = tok_.line;
          pending_[slot].col = tok_.col;
          consume();
          break;
        default:
          lex_.fail("expected relation target", tok_.line, tok_.col);
      }
    }
    expect(TokKind::RParen, "')'");
    consume();
    return idx;
  }

  void add_normalized_edge(int src, int tgt, const std::string& role, int line, int col) {
    if (role.size() > 3 && role.compare(role.size() - 3, 3, "-of") == 0) {
      if (graph_.node(tgt).attribute) {
        lex_.fail("inverse role '" + role + "' on a constant", line, col);
      }
      graph_.add_edge(tgt, src, role.substr(0, role.size() - 3));
    } else {
      graph_.add_edge(src, tgt, role);
    }
  }

  void resolve() {
    // Edges are added in textual order so that serialization is stable
    // under re-parsing. Bare atoms: defined variables become reentrant
    // references; numbers, polarity marks and mode interjections become
    // constants; everything else is a dangling reference.
    for (const PendingRelation& r : pending_) {
      int target = r.target_node;
      if (r.is_atom) {
        auto it = vars_.find(r.atom);
        if (it != vars_.end()) {
          target = it->second;
        } else if (is_bare_constant(r.atom) || is_mode_constant(r.atom)) {
          target = graph_.add_node("", r.atom, true);
        } else {
          lex_.fail("dangling variable reference '" + r.atom + "'", r.line, r.col);
        }
      }
      add_normalized_edge(r.src, target, r.role, r.line, r.col);
    }
  }

  Lexer lex_;
  Token tok_;
  AmrGraph graph_;
  std::map<std::string, int> vars_;
  std::vector<PendingRelation> pending_;
};

std::string quote_constant(const std::string& s) {
  if (is_bare_constant(s) || is_mode_constant(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

class Serializer {
 public:
  explicit Serializer(const AmrGraph& g) : g_(g) {
    var_names_.resize(static_cast<std::size_t>(g.node_count()));
    visited_.assign(static_cast<std::size_t>(g.node_count()), 0);
    edge_done_.assign(g.edges().size(), 0);
  }

  std::string run() {
    std::ostringstream os;
    emit_node(g_.root(), os);
    return os.str();
  }

 private:
  // Variables are numbered in emission order, which makes serialization a
  // fixed point of parse + serialize.
  const std::string& name_of(int u) {
    std::string& name = var_names_[static_cast<std::size_t>(u)];
    if (name.empty()) name = "v" + std::to_string(next_var_++);
    return name;
  }

  void emit_node(int u, std::ostringstream& os) {
    visited_[static_cast<std::size_t>(u)] = 1;
    os << "(" << name_of(u) << " / " << g_.node(u).label;
    // Incident edges in insertion order; forward edges keep their label,
    // edges pointing back at u descend with the inverse label.
    for (auto [ei, other, outgoing] : g_.incident(u)) {
      if (edge_done_[static_cast<std::size_t>(ei)]) continue;
      const AmrEdge& e = g_.edges()[static_cast<std::size_t>(ei)];
      const AmrNode& target = g_.node(other);
      if (outgoing) {
        edge_done_[static_cast<std::size_t>(ei)] = 1;
        os << " :" << e.label << " ";
        if (target.attribute) {
          os << quote_constant(target.label);
        } else if (visited_[static_cast<std::size_t>(other)]) {
          os << name_of(other);
        } else {
          emit_node(other, os);
        }
      } else {
        // incoming edge other -> u; attributes cannot be sources
        edge_done_[static_cast<std::size_t>(ei)] = 1;
        os << " :" << e.label << "-of ";
        if (visited_[static_cast<std::size_t>(other)]) {
          os << name_of(other);
        } else {
          emit_node(other, os);
        }
      }
    }
    os << ")";
  }

  const AmrGraph& g_;
  std::vector<std::string> var_names_;
  std::vector<char> visited_;
  std::vector<char> edge_done_;
  int next_var_ = 0;
};

}  // namespace

AmrGraph parse_penman(const std::string& text) { return Parser(text).parse(); }

std::string serialize_penman(const AmrGraph& graph) {
  if (graph.empty()) return "(a / amr-empty)";
  graph.validate();
  return Serializer(graph).run();
}

std::vector<AmrGraph> parse_penman_blocks(const std::string& text) {
  std::vector<AmrGraph> out;
  std::istringstream is(text);
  std::string line, block;
  int block_start_line = 1, line_no = 0;
  auto flush = [&] {
    if (block.find_first_not_of(" \t\r\n") == std::string::npos) {
      block.clear();
      return;
    }
    try {
      out.push_back(parse_penman(block));
    } catch (const DataError& e) {
      throw DataError("block starting at line " + std::to_string(block_start_line) + ": " +
                      e.what());
    }
    block.clear();
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line[0] == '#') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      flush();
      block_start_line = line_no + 1;
    } else {
      if (block.empty()) block_start_line = line_no;
      block += line;
      block += '\n';
    }
  }
  flush();
  return out;
}

std::string serialize_penman_blocks(const std::vector<AmrGraph>& graphs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (i) os << "\n";
    os << serialize_penman(graphs[i]) << "\n";
  }
  return os.str();
}

}  // namespace gsamr
