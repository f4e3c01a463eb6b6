#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "bdplan/spec/formula.hpp"

namespace bdplan::spec {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& message);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Concrete grammar, loosest to tightest binding:
///
///   formula := disj ( '->' formula )?
///   disj    := conj ( '|' conj )*
///   conj    := until ( '&' until )*
///   until   := unary ( 'U' '[' a ',' b ']' unary )?
///   unary   := '!' unary | 'X' unary | 'G' '[' a ',' b ']' unary
///            | 'F' '[' a ',' b ']' unary | primary
///   primary := '(' formula ')' | op '<' t1 ',' t2 ',' pred '>' | pred
///   op      := 'reach' | 'avoid' | 'stay'
///   pred    := ball(cx,cy,r) | box(x0,y0,x1,y1) | obs() | around(x,y,r)
///            | behind(obj,r) | region(NAME) | NAME
///
/// Bare names resolve through the registry.
Formula parse_formula(std::string_view text, const PredicateRegistry& registry = {});

}  // namespace bdplan::spec
