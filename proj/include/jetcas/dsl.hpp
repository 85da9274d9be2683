#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jetcas/error.hpp"

namespace jetcas::dsl {

struct Loc {
    int line = 1;
    int col = 1;
};

class ParseError : public Error {
public:
    ParseError(Loc loc, const std::string& msg)
        : Error(std::to_string(loc.line) + ":" + std::to_string(loc.col) + ": " + msg), loc_(loc) {}
    Loc loc() const { return loc_; }

private:
    Loc loc_;
};

enum class Op { Num, Name, Call, Neg, Add, Sub, Mul, Div, Pow, TotalDeriv };

struct Ast;
using AstPtr = std::shared_ptr<const Ast>;

struct Ast {
    Op op = Op::Num;
    Loc loc;
    std::string text;          // number literal, name, callee, or derivative variables
    std::vector<int> derivs;   // Call: f'(x) -> {1}, f[1,0](u,v) -> {1,0}; empty for plain calls
    bool bracket = false;      // Call: derivative written as f[...] rather than primes
    std::vector<AstPtr> args;  // operands
};

bool ast_equal(const AstPtr& a, const AstPtr& b);
std::string print_expr(const AstPtr& e);

enum class StmtKind {
    Vars, Dep, Param, Func, Let, Evolve, Hyper, General, Constraint, Template, Constants, Coef,
    Ansatz, Basis, Expect, Ode, Field, Solution, Box, Set, Check, Chain, Flag
};

struct Assign {
    std::string name;
    AstPtr value;
};

struct Interval {
    std::string var;
    AstPtr lo, hi;
};

struct FuncDecl {
    std::string name;
    int arity = 0;
    std::vector<std::string> slots;  // named slots, e.g. g(x, y, z, p, q)
    std::vector<AstPtr> at;          // default arguments for named slots
};

struct Stmt {
    StmtKind kind = StmtKind::Vars;
    Loc loc;
    std::vector<std::string> names;  // declarations, unknown lists, checks, field components order
    std::vector<FuncDecl> funcs;
    std::string name;                // let/ansatz/solution/field/template/chain/flag label
    AstPtr lhs, rhs;                 // equations: lhs = rhs (rhs may be null)
    std::string lead;                // optional leading jet
    std::vector<Assign> assigns;     // template options, constants, field components, set
    std::vector<AstPtr> exprs;       // basis
    std::vector<Interval> ranges;    // box
    std::string text;                // flag message
};

struct ProblemFile {
    std::string case_id;
    std::string anchor;
    std::vector<Stmt> stmts;
};

ProblemFile parse(const std::string& text);
std::string print(const ProblemFile& f);
bool ast_equal(const ProblemFile& a, const ProblemFile& b);

/// Closest candidate by edit distance, if reasonably close.
std::optional<std::string> suggest(const std::string& name, const std::vector<std::string>& candidates);

}  // namespace jetcas::dsl
