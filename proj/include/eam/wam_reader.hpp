#pragma once

// Reader and printer for GNU-Prolog-style textual WAM listings:
//
//   predicate(NAME/ARITY, LINE, STA, VIS, OWN, [ INSTR {, INSTR} ]).
//
// Only the instruction subset in `opcode_table()` is accepted. Anything else
// is a hard error; nothing is silently skipped.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "eam/ids.hpp"

namespace eam {

enum class Opcode {
  // choice
  try_me_else, retry_me_else, trust_me_else_fail, try_, retry, trust,
  // indexing
  switch_on_term, switch_on_atom, switch_on_integer, switch_on_structure,
  // control
  allocate, deallocate, call, execute, proceed,
  // get
  get_variable, get_value, get_atom, get_integer, get_nil, get_list, get_structure,
  // put
  put_variable, put_void, put_value, put_unsafe_value, put_atom, put_integer, put_nil, put_list,
  put_structure,
  // unify
  unify_variable, unify_void, unify_value, unify_local_value, unify_atom, unify_integer, unify_nil,
  // pseudo
  label,
};

enum class RegBank { x, y };

struct Reg {
  RegBank bank = RegBank::x;
  std::uint32_t index = 0;
  bool operator==(const Reg&) const = default;
};
struct ArgIndex {
  std::uint32_t index = 0;
  bool operator==(const ArgIndex&) const = default;
};
struct Count {
  std::uint32_t n = 0;
  bool operator==(const Count&) const = default;
};
struct Atom {
  std::string name;
  bool operator==(const Atom&) const = default;
};
struct Integer {
  std::int64_t value = 0;
  bool operator==(const Integer&) const = default;
};
struct Functor {
  std::string name;
  std::uint32_t arity = 0;
  bool operator==(const Functor&) const = default;
};
struct PredRef {
  std::string name;
  std::uint32_t arity = 0;
  bool operator==(const PredRef&) const = default;
  auto operator<=>(const PredRef&) const = default;
};

// A jump target. Unit-local `Label`s are what the reader produces; the linker
// rewrites them to absolute `CodeAddress`es. `FailTarget` is the literal `fail`
// GNU Prolog writes in switch tables for "no clause".
struct Label {
  std::int64_t id = 0;
  bool operator==(const Label&) const = default;
};
struct FailTarget {
  bool operator==(const FailTarget&) const = default;
};
using Target = std::variant<Label, FailTarget, CodeAddress>;

using SwitchKey = std::variant<Atom, Integer, Functor>;
struct SwitchCase {
  SwitchKey key;
  Target target;
  bool operator==(const SwitchCase&) const = default;
};
struct SwitchTable {
  std::vector<SwitchCase> cases;
  bool operator==(const SwitchTable&) const = default;
};

using Operand = std::variant<Reg, ArgIndex, Count, Atom, Integer, Functor, PredRef, Target, SwitchTable>;

struct WamInstruction {
  Opcode opcode{};
  std::vector<Operand> operands;
  bool operator==(const WamInstruction&) const = default;

  template <typename T>
  const T& as(std::size_t i) const { return std::get<T>(operands.at(i)); }
};

struct WamUnit {
  std::string name;
  std::uint32_t arity = 0;
  // line, static/dynamic, visibility, owner: kept verbatim, never interpreted
  std::vector<std::string> meta;
  std::vector<WamInstruction> body;
  bool operator==(const WamUnit&) const = default;

  PredRef key() const { return {name, arity}; }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line, int column)
      : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

enum class OperandKind { reg, arg, count, atom, integer, functor, pred, label, label_or_fail, atom_table, int_table, functor_table };

struct OpcodeInfo {
  Opcode opcode;
  std::string_view name;
  std::vector<OperandKind> signature;
};

inline const std::vector<OpcodeInfo>& opcode_table() {
  using K = OperandKind;
  static const std::vector<OpcodeInfo> table = {
      {Opcode::try_me_else, "try_me_else", {K::label}},
      {Opcode::retry_me_else, "retry_me_else", {K::label}},
      {Opcode::trust_me_else_fail, "trust_me_else_fail", {}},
      {Opcode::try_, "try", {K::label}},
      {Opcode::retry, "retry", {K::label}},
      {Opcode::trust, "trust", {K::label}},
      {Opcode::switch_on_term, "switch_on_term", {K::label_or_fail, K::label_or_fail, K::label_or_fail, K::label_or_fail, K::label_or_fail}},
      {Opcode::switch_on_atom, "switch_on_atom", {K::atom_table}},
      {Opcode::switch_on_integer, "switch_on_integer", {K::int_table}},
      {Opcode::switch_on_structure, "switch_on_structure", {K::functor_table}},
      {Opcode::allocate, "allocate", {K::count}},
      {Opcode::deallocate, "deallocate", {}},
      {Opcode::call, "call", {K::pred}},
      {Opcode::execute, "execute", {K::pred}},
      {Opcode::proceed, "proceed", {}},
      {Opcode::get_variable, "get_variable", {K::reg, K::arg}},
      {Opcode::get_value, "get_value", {K::reg, K::arg}},
      {Opcode::get_atom, "get_atom", {K::atom, K::arg}},
      {Opcode::get_integer, "get_integer", {K::integer, K::arg}},
      {Opcode::get_nil, "get_nil", {K::arg}},
      {Opcode::get_list, "get_list", {K::arg}},
      {Opcode::get_structure, "get_structure", {K::functor, K::arg}},
      {Opcode::put_variable, "put_variable", {K::reg, K::arg}},
      {Opcode::put_void, "put_void", {K::arg}},
      {Opcode::put_value, "put_value", {K::reg, K::arg}},
      {Opcode::put_unsafe_value, "put_unsafe_value", {K::reg, K::arg}},
      {Opcode::put_atom, "put_atom", {K::atom, K::arg}},
      {Opcode::put_integer, "put_integer", {K::integer, K::arg}},
      {Opcode::put_nil, "put_nil", {K::arg}},
      {Opcode::put_list, "put_list", {K::arg}},
      {Opcode::put_structure, "put_structure", {K::functor, K::arg}},
      {Opcode::unify_variable, "unify_variable", {K::reg}},
      {Opcode::unify_void, "unify_void", {K::count}},
      {Opcode::unify_value, "unify_value", {K::reg}},
      {Opcode::unify_local_value, "unify_local_value", {K::reg}},
      {Opcode::unify_atom, "unify_atom", {K::atom}},
      {Opcode::unify_integer, "unify_integer", {K::integer}},
      {Opcode::unify_nil, "unify_nil", {}},
      {Opcode::label, "label", {K::label}},
  };
  return table;
}

inline const OpcodeInfo& opcode_info(Opcode op) {
  const auto& table = opcode_table();
  auto it = std::find_if(table.begin(), table.end(), [op](const OpcodeInfo& i) { return i.opcode == op; });
  return *it;
}

inline std::string_view opcode_name(Opcode op) { return opcode_info(op).name; }

inline bool is_choice_opcode(Opcode op) {
  switch (op) {
    case Opcode::try_me_else: case Opcode::retry_me_else: case Opcode::try_: case Opcode::retry:
    case Opcode::trust: case Opcode::switch_on_term: case Opcode::switch_on_atom:
    case Opcode::switch_on_integer: case Opcode::switch_on_structure:
      return true;
    default:
      return false;
  }
}

namespace detail {

// Generic operand term, converted to a typed Operand once the opcode is known.
struct RawTerm {
  enum class Kind { integer, atom, compound, slash, list, tuple } kind = Kind::atom;
  std::int64_t value = 0;
  std::string name;
  std::vector<RawTerm> args;
  int line = 0;
  int column = 0;
};

class Lexer {
 public:
  enum class Tok { ident, quoted, integer, punct, end };
  struct Token {
    Tok kind = Tok::end;
    std::string text;
    std::int64_t value = 0;
    int line = 1;
    int column = 1;
  };

  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Token& peek() const { return current_; }

  Token next() {
    Token t = current_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& what, const Token& at) const { throw ParseError(what, at.line, at.column); }

  void expect(char c) {
    if (current_.kind != Tok::punct || current_.text[0] != c)
      fail(std::string("expected '") + c + "', found " + describe(current_), current_);
    advance();
  }

  bool at_punct(char c) const { return current_.kind == Tok::punct && current_.text[0] == c; }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case Tok::end: return "end of input";
      case Tok::integer: return "integer " + std::to_string(t.value);
      case Tok::quoted: return "'" + t.text + "'";
      default: return "'" + t.text + "'";
    }
  }

 private:
  void skip_blanks() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') bump();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        bump();
      } else {
        break;
      }
    }
  }

  void bump() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void advance() {
    skip_blanks();
    Token t;
    t.line = line_;
    t.column = column_;
    if (pos_ >= text_.size()) {
      t.kind = Tok::end;
      current_ = t;
      return;
    }
    char c = text_[pos_];
    auto digit = [&](std::size_t p) { return p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p])); };
    if (digit(pos_) || (c == '-' && digit(pos_ + 1))) {
      std::string s;
      if (c == '-') { s += c; bump(); }
      while (digit(pos_)) { s += text_[pos_]; bump(); }
      t.kind = Tok::integer;
      t.text = s;
      try {
        t.value = std::stoll(s);
      } catch (const std::out_of_range&) {
        throw ParseError("integer out of range: " + s, t.line, t.column);
      }
    } else if (std::islower(static_cast<unsigned char>(c))) {
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        t.text += text_[pos_];
        bump();
      }
      t.kind = Tok::ident;
    } else if (c == '\'') {
      bump();
      for (;;) {
        if (pos_ >= text_.size()) throw ParseError("unterminated quoted atom", t.line, t.column);
        char q = text_[pos_];
        if (q == '\'') {
          if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '\'') {
            t.text += '\'';
            bump();
            bump();
            continue;
          }
          bump();
          break;
        }
        if (q == '\\' && pos_ + 1 < text_.size()) {
          bump();
          t.text += text_[pos_];
          bump();
          continue;
        }
        t.text += q;
        bump();
      }
      t.kind = Tok::quoted;
    } else if (std::string_view("()[],/.").find(c) != std::string_view::npos) {
      t.kind = Tok::punct;
      t.text = std::string(1, c);
      bump();
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", t.line, t.column);
    }
    current_ = t;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
  Token current_;
};

class Reader {
 public:
  explicit Reader(std::string_view text) : lex_(text) {}

  std::vector<WamUnit> read_all() {
    std::vector<WamUnit> units;
    while (lex_.peek().kind != Lexer::Tok::end) units.push_back(read_unit());
    return units;
  }

 private:
  using Tok = Lexer::Tok;

  std::string read_atom_name() {
    auto t = lex_.next();
    if (t.kind == Tok::ident || t.kind == Tok::quoted) return t.text;
    if (t.kind == Tok::punct && t.text == "[") {
      lex_.expect(']');
      return "[]";
    }
    lex_.fail("expected an atom, found " + Lexer::describe(t), t);
  }

  std::int64_t read_integer() {
    auto t = lex_.next();
    if (t.kind != Tok::integer) lex_.fail("expected an integer, found " + Lexer::describe(t), t);
    return t.value;
  }

  std::string read_keyword(std::initializer_list<std::string_view> allowed, const char* what) {
    auto t = lex_.next();
    if (t.kind == Tok::ident) {
      for (auto a : allowed)
        if (t.text == a) return t.text;
    }
    lex_.fail(std::string("expected ") + what + ", found " + Lexer::describe(t), t);
  }

  WamUnit read_unit() {
    auto head = lex_.next();
    if (head.kind != Tok::ident || head.text != "predicate")
      lex_.fail("expected 'predicate', found " + Lexer::describe(head), head);
    WamUnit unit;
    lex_.expect('(');
    unit.name = read_atom_name();
    lex_.expect('/');
    auto arity_tok = lex_.peek();
    auto arity = read_integer();
    if (arity < 0) lex_.fail("negative arity", arity_tok);
    unit.arity = static_cast<std::uint32_t>(arity);
    lex_.expect(',');
    unit.meta.push_back(std::to_string(read_integer()));
    lex_.expect(',');
    unit.meta.push_back(read_keyword({"static", "dynamic"}, "static or dynamic"));
    lex_.expect(',');
    unit.meta.push_back(read_keyword({"private", "public"}, "private or public"));
    lex_.expect(',');
    unit.meta.push_back(read_keyword({"user", "built_in"}, "user or built_in"));
    lex_.expect(',');
    auto open = lex_.peek();
    lex_.expect('[');
    if (lex_.at_punct(']')) lex_.fail("predicate body must not be empty", open);
    for (;;) {
      unit.body.push_back(read_instruction());
      if (lex_.at_punct(',')) {
        lex_.next();
        continue;
      }
      lex_.expect(']');
      break;
    }
    lex_.expect(')');
    lex_.expect('.');
    check_labels(unit, head);
    return unit;
  }

  void check_labels(const WamUnit& unit, const Lexer::Token& at) {
    std::set<std::int64_t> defined;
    for (const auto& ins : unit.body)
      if (ins.opcode == Opcode::label) {
        auto id = std::get<Label>(ins.as<Target>(0)).id;
        if (!defined.insert(id).second)
          lex_.fail("label " + std::to_string(id) + " defined twice in " + unit.name + "/" + std::to_string(unit.arity), at);
      }
    auto check = [&](const Target& t) {
      if (auto* l = std::get_if<Label>(&t); l && !defined.count(l->id))
        lex_.fail("undefined label " + std::to_string(l->id) + " in " + unit.name + "/" + std::to_string(unit.arity), at);
    };
    for (const auto& ins : unit.body) {
      if (!is_choice_opcode(ins.opcode)) continue;
      for (const auto& op : ins.operands) {
        if (auto* t = std::get_if<Target>(&op)) check(*t);
        if (auto* tab = std::get_if<SwitchTable>(&op))
          for (const auto& c : tab->cases) check(c.target);
      }
    }
  }

  RawTerm read_raw() {
    auto t = lex_.peek();
    RawTerm r;
    r.line = t.line;
    r.column = t.column;
    if (t.kind == Tok::integer) {
      lex_.next();
      r.kind = RawTerm::Kind::integer;
      r.value = t.value;
    } else if (t.kind == Tok::ident || t.kind == Tok::quoted) {
      lex_.next();
      r.kind = RawTerm::Kind::atom;
      r.name = t.text;
      if (lex_.at_punct('(')) {
        lex_.next();
        r.kind = RawTerm::Kind::compound;
        r.args = read_raw_sequence(')');
      }
    } else if (lex_.at_punct('[')) {
      lex_.next();
      if (lex_.at_punct(']')) {
        lex_.next();
        r.kind = RawTerm::Kind::atom;
        r.name = "[]";
      } else {
        r.kind = RawTerm::Kind::list;
        r.args = read_raw_sequence(']');
      }
    } else if (lex_.at_punct('(')) {
      lex_.next();
      r.kind = RawTerm::Kind::tuple;
      r.args = read_raw_sequence(')');
    } else {
      lex_.fail("unexpected " + Lexer::describe(t), t);
    }
    if (lex_.at_punct('/')) {
      lex_.next();
      if (r.kind != RawTerm::Kind::atom) lex_.fail("left side of '/' must be an atom", t);
      RawTerm s;
      s.kind = RawTerm::Kind::slash;
      s.name = r.name;
      s.value = read_integer();
      s.line = r.line;
      s.column = r.column;
      return s;
    }
    return r;
  }

  std::vector<RawTerm> read_raw_sequence(char close) {
    std::vector<RawTerm> out;
    for (;;) {
      out.push_back(read_raw());
      if (lex_.at_punct(',')) {
        lex_.next();
        continue;
      }
      lex_.expect(close);
      return out;
    }
  }

  [[noreturn]] static void bad(const RawTerm& r, const std::string& what) { throw ParseError(what, r.line, r.column); }

  static std::uint32_t non_negative(const RawTerm& r, const char* what) {
    if (r.kind != RawTerm::Kind::integer) bad(r, std::string("expected ") + what);
    if (r.value < 0) bad(r, std::string(what) + " must be non-negative");
    return static_cast<std::uint32_t>(r.value);
  }

  static Target to_target(const RawTerm& r, bool allow_fail) {
    if (allow_fail && r.kind == RawTerm::Kind::atom && r.name == "fail") return FailTarget{};
    if (r.kind != RawTerm::Kind::integer) bad(r, allow_fail ? "expected a label or 'fail'" : "expected a label");
    return Label{r.value};
  }

  static SwitchTable to_table(const RawTerm& r, OperandKind kind) {
    SwitchTable table;
    if (r.kind == RawTerm::Kind::atom && r.name == "[]") return table;
    if (r.kind != RawTerm::Kind::list) bad(r, "expected a switch table");
    for (const auto& e : r.args) {
      if (e.kind != RawTerm::Kind::tuple || e.args.size() != 2) bad(e, "expected a (key,label) pair");
      const auto& k = e.args[0];
      SwitchCase c;
      if (kind == OperandKind::atom_table) {
        if (k.kind != RawTerm::Kind::atom) bad(k, "expected an atom key");
        c.key = Atom{k.name};
      } else if (kind == OperandKind::int_table) {
        if (k.kind != RawTerm::Kind::integer) bad(k, "expected an integer key");
        c.key = Integer{k.value};
      } else {
        if (k.kind != RawTerm::Kind::slash || k.value < 0) bad(k, "expected a functor key");
        c.key = Functor{k.name, static_cast<std::uint32_t>(k.value)};
      }
      c.target = to_target(e.args[1], true);
      table.cases.push_back(std::move(c));
    }
    return table;
  }

  static Operand convert(const RawTerm& r, OperandKind kind) {
    switch (kind) {
      case OperandKind::reg: {
        if (r.kind != RawTerm::Kind::compound || r.args.size() != 1 || (r.name != "x" && r.name != "y"))
          bad(r, "expected a register x(N) or y(N)");
        return Reg{r.name == "x" ? RegBank::x : RegBank::y, non_negative(r.args[0], "register index")};
      }
      case OperandKind::arg: return ArgIndex{non_negative(r, "argument index")};
      case OperandKind::count: return Count{non_negative(r, "count")};
      case OperandKind::atom:
        if (r.kind != RawTerm::Kind::atom) bad(r, "expected an atom");
        return Atom{r.name};
      case OperandKind::integer:
        if (r.kind != RawTerm::Kind::integer) bad(r, "expected an integer");
        return Integer{r.value};
      case OperandKind::functor:
      case OperandKind::pred:
        if (r.kind != RawTerm::Kind::slash) bad(r, "expected NAME/ARITY");
        if (r.value < 0) bad(r, "arity must be non-negative");
        if (kind == OperandKind::functor) return Functor{r.name, static_cast<std::uint32_t>(r.value)};
        return PredRef{r.name, static_cast<std::uint32_t>(r.value)};
      case OperandKind::label: return to_target(r, false);
      case OperandKind::label_or_fail: return to_target(r, true);
      case OperandKind::atom_table:
      case OperandKind::int_table:
      case OperandKind::functor_table: return to_table(r, kind);
    }
    bad(r, "unsupported operand");
  }

  WamInstruction read_instruction() {
    auto t = lex_.next();
    if (t.kind != Tok::ident) lex_.fail("expected an instruction, found " + Lexer::describe(t), t);
    const auto& table = opcode_table();
    auto it = std::find_if(table.begin(), table.end(), [&](const OpcodeInfo& i) { return i.name == t.text; });
    if (it == table.end()) lex_.fail("unknown opcode '" + t.text + "'", t);
    std::vector<RawTerm> raw;
    if (lex_.at_punct('(')) {
      lex_.next();
      raw = read_raw_sequence(')');
    }
    if (raw.size() != it->signature.size())
      lex_.fail("opcode '" + t.text + "' takes " + std::to_string(it->signature.size()) + " operand(s), got " +
                    std::to_string(raw.size()),
                t);
    WamInstruction ins;
    ins.opcode = it->opcode;
    for (std::size_t i = 0; i < raw.size(); ++i) ins.operands.push_back(convert(raw[i], it->signature[i]));
    return ins;
  }

  Lexer lex_;
};

inline bool is_plain_atom(std::string_view s) {
  if (s == "[]") return true;
  if (s.empty() || !std::islower(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

}  // namespace detail

inline std::vector<WamUnit> parse_wam_text(std::string_view text) { return detail::Reader(text).read_all(); }

inline std::string quote_atom(std::string_view name) {
  if (detail::is_plain_atom(name)) return std::string(name);
  std::string out = "'";
  for (char c : name) {
    if (c == '\'') out += "''";
    else if (c == '\\') out += "\\\\";
    else out += c;
  }
  return out + "'";
}

inline std::string to_string(const Target& t) {
  if (auto* l = std::get_if<Label>(&t)) return std::to_string(l->id);
  if (std::holds_alternative<FailTarget>(t)) return "fail";
  return "@" + std::to_string(std::get<CodeAddress>(t).value);
}

inline std::string to_string(const Operand& op) {
  struct Printer {
    std::string operator()(const Reg& r) const { return std::string(r.bank == RegBank::x ? "x(" : "y(") + std::to_string(r.index) + ")"; }
    std::string operator()(const ArgIndex& a) const { return std::to_string(a.index); }
    std::string operator()(const Count& c) const { return std::to_string(c.n); }
    std::string operator()(const Atom& a) const { return quote_atom(a.name); }
    std::string operator()(const Integer& i) const { return std::to_string(i.value); }
    std::string operator()(const Functor& f) const { return quote_atom(f.name) + "/" + std::to_string(f.arity); }
    std::string operator()(const PredRef& p) const { return quote_atom(p.name) + "/" + std::to_string(p.arity); }
    std::string operator()(const Target& t) const { return eam::to_string(t); }
    std::string operator()(const SwitchTable& tab) const {
      std::string out = "[";
      for (std::size_t i = 0; i < tab.cases.size(); ++i) {
        if (i) out += ",";
        auto key = std::visit([](const auto& k) { return Printer{}(k); }, tab.cases[i].key);
        out += "(" + key + "," + eam::to_string(tab.cases[i].target) + ")";
      }
      return out + "]";
    }
  };
  return std::visit(Printer{}, op);
}

inline std::string to_string(const WamInstruction& ins) {
  std::string out(opcode_name(ins.opcode));
  if (ins.operands.empty()) return out;
  out += "(";
  for (std::size_t i = 0; i < ins.operands.size(); ++i) {
    if (i) out += ",";
    out += to_string(ins.operands[i]);
  }
  return out + ")";
}

inline std::string print_unit(const WamUnit& u) {
  std::string out = "predicate(" + quote_atom(u.name) + "/" + std::to_string(u.arity);
  for (const auto& m : u.meta) out += "," + m;
  out += ",[";
  if (u.body.size() == 1) return out + to_string(u.body[0]) + "]).";
  for (std::size_t i = 0; i < u.body.size(); ++i) {
    out += i ? ",\n    " : "\n    ";
    out += to_string(u.body[i]);
  }
  return out + "]).";
}

}  // namespace eam
