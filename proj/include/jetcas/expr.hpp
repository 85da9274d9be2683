#pragma once

// Canonical symbolic expressions.
//
// Every Expr is kept as a sparse distributed polynomial with rational
// coefficients over a set of atoms: independent variables, parameters, jet
// coordinates, elementary function applications, opaque (user) function
// applications and powers of non-monomial bases. Exponents of atoms are
// themselves expressions, usually rational constants (u^(1/2)) but possibly
// symbolic (u^(k - 1)). Products of exponentials are merged into a single
// exp factor, so exp(y)*exp(-y) is 1.
//
// No algebraic relation between distinct atoms is assumed: sin(u)^2 +
// cos(u)^2 - 1 is not zero for this kernel.

#include <gmpxx.h>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jetcas/error.hpp"

namespace jetcas {

using Rational = mpq_class;

enum class AtomKind : std::uint8_t { Variable, Parameter, Jet, Elementary, Opaque, Power };
enum class Elementary : std::uint8_t { Sin, Cos, Tan, Exp, Ln };

const char* elementary_name(Elementary fn);

/// Derivative counts per independent variable, sorted by variable name.
class DerivIndex {
public:
    DerivIndex() = default;
    explicit DerivIndex(std::vector<std::pair<std::string, int>> counts);

    int order(std::string_view var) const;
    int total() const;
    bool empty() const { return counts_.empty(); }
    DerivIndex bumped(const std::string& var, int by = 1) const;
    /// True when every count of `other` is <= the matching count here.
    bool covers(const DerivIndex& other) const;
    /// this - other; requires covers(other).
    DerivIndex minus(const DerivIndex& other) const;
    const std::vector<std::pair<std::string, int>>& counts() const { return counts_; }

    friend bool operator==(const DerivIndex&, const DerivIndex&) = default;
    friend int compare(const DerivIndex& a, const DerivIndex& b);

private:
    std::vector<std::pair<std::string, int>> counts_;
};

/// A jet coordinate u^i_{alpha}: dependent variable plus derivative counts.
struct JetVar {
    std::string dep;
    DerivIndex index;

    JetVar() = default;
    JetVar(std::string d, DerivIndex i = {}) : dep(std::move(d)), index(std::move(i)) {}

    JetVar derivative(const std::string& var, int by = 1) const {
        return {dep, index.bumped(var, by)};
    }
    std::string str() const;

    friend bool operator==(const JetVar&, const JetVar&) = default;
};

int compare(const JetVar& a, const JetVar& b);

class Expr;
namespace detail {
struct AtomNode;
struct ExprNode;
}  // namespace detail

class Atom {
public:
    static Atom variable(std::string name);
    static Atom parameter(std::string name);
    static Atom jet(JetVar v);
    /// Opaque function application; derivs has one count per argument.
    static Atom opaque(std::string name, std::vector<Expr> args, std::vector<int> derivs = {});

    AtomKind kind() const;
    const std::string& name() const;
    Elementary function() const;
    const std::vector<Expr>& args() const;
    const std::vector<int>& arg_derivs() const;
    JetVar jet_var() const;
    /// For Power atoms: the base expression.
    const Expr& base() const;

    bool is_leaf() const;
    bool is_exp() const;
    /// Leaf atoms occurring inside a composite atom (empty for leaves).
    const std::vector<Atom>& leaves() const;
    bool depends_on(const Atom& a) const;
    std::size_t hash() const;
    std::string str() const;

    friend int compare(const Atom& a, const Atom& b);
    friend bool operator==(const Atom& a, const Atom& b) { return compare(a, b) == 0; }
    friend bool operator<(const Atom& a, const Atom& b) { return compare(a, b) < 0; }

private:
    friend struct detail::AtomNode;
    friend Atom make_elementary_atom(Elementary fn, Expr arg);
    friend Atom make_power_atom(Expr base);
    explicit Atom(std::shared_ptr<const detail::AtomNode> n) : node_(std::move(n)) {}
    std::shared_ptr<const detail::AtomNode> node_;
};

struct AtomHash {
    std::size_t operator()(const Atom& a) const { return a.hash(); }
};

struct Factor;
struct Term;

class Expr {
public:
    Expr();
    Expr(int v);
    Expr(long v);
    Expr(const Rational& q);
    Expr(const Atom& a);

    static Expr variable(const std::string& name) { return Expr(Atom::variable(name)); }
    static Expr parameter(const std::string& name) { return Expr(Atom::parameter(name)); }
    static Expr jet(const JetVar& v) { return Expr(Atom::jet(v)); }

    const std::vector<Term>& terms() const;
    bool is_zero_node() const;
    bool is_constant() const;
    Rational constant_value() const;
    bool is_integer() const;
    /// Single atom with coefficient 1 and exponent 1.
    bool is_atom() const;
    Atom as_atom() const;
    /// Single term (coefficient times a product of factors).
    bool is_monomial() const;
    /// Coefficient of the first term in canonical order.
    Rational leading_coefficient() const;

    const std::vector<Atom>& leaves() const;
    bool depends_on(const Atom& a) const;
    std::size_t hash() const;
    std::string str() const;

    friend int compare(const Expr& a, const Expr& b);
    friend bool operator==(const Expr& a, const Expr& b);
    friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }
    friend bool operator<(const Expr& a, const Expr& b) { return compare(a, b) < 0; }

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);
    Expr& operator+=(const Expr& b) { return *this = *this + b; }
    Expr& operator-=(const Expr& b) { return *this = *this - b; }
    Expr& operator*=(const Expr& b) { return *this = *this * b; }

    // Internal: build from unsorted terms.
    static Expr from_terms(std::vector<Term> terms);

private:
    explicit Expr(std::shared_ptr<const detail::ExprNode> n) : node_(std::move(n)) {}
    std::shared_ptr<const detail::ExprNode> node_;
};

struct Factor {
    Atom base;
    Expr exponent;
};

struct Term {
    std::vector<Factor> factors;  // sorted by base, distinct bases
    Rational coef;
};

int compare_factors(const std::vector<Factor>& a, const std::vector<Factor>& b);

Atom make_elementary_atom(Elementary fn, Expr arg);
Atom make_power_atom(Expr base);

// Construction helpers.
Expr pow(const Expr& base, const Expr& exponent);
Expr pow(const Expr& base, long exponent);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr tan(const Expr& a);
Expr exp(const Expr& a);
Expr ln(const Expr& a);
/// Principal square root; rejects negative constants and the literal zero.
Expr sqrt(const Expr& a);
Expr apply_elementary(Elementary fn, const Expr& a);
Expr opaque(const std::string& name, std::vector<Expr> args, std::vector<int> derivs = {});
Expr sum(std::span<const Expr> parts);
Expr monomial_expr(const Rational& coef, const std::vector<Factor>& factors);
Expr rational(long num, long den);

// Core operations.
Expr partial(const Expr& e, const Atom& wrt);

/// Simultaneous substitution of atoms (leaves or opaque applications).
using SubstMap = std::map<Atom, Expr>;
Expr substitute(const Expr& e, const SubstMap& rules);

/// Replace every application name(args) and its derivatives by the body
/// evaluated at the arguments. params are the body's formal parameters.
Expr substitute_function(const Expr& e, const std::string& name, const std::vector<Atom>& params,
                         const Expr& body);

/// Multiply through by powers of non-monomial bases so that no negative
/// power of a sum remains. The multiplier is nonzero wherever e is defined.
Expr clear_denominators(const Expr& e);

/// Sound zero test for the canonical class (rational functions over
/// algebraically independent atoms).
bool is_zero(const Expr& e);

/// Polynomial coefficients of e with respect to vars. Keys are monomials in
/// vars (coefficient 1) in canonical order; the empty monomial is Expr(1).
using Collected = std::vector<std::pair<Expr, Expr>>;
Collected collect(const Expr& e, const std::vector<Atom>& vars);

/// Leaf jets in e, ascending.
std::vector<JetVar> jets_in(const Expr& e);
/// Every opaque application occurring in e (including inside arguments).
std::vector<Atom> opaque_atoms_in(const Expr& e);

/// Floating evaluation environment.
struct NumericEnv {
    std::map<std::string, double> values;  // variables, parameters, jets (by str())
    std::function<double(const Atom&, std::span<const double>)> opaque;
};

/// Evaluates e; throws DomainError at poles or outside real domains.
double evaluate(const Expr& e, const NumericEnv& env);

/// Numerical value of a leaf atom name key used in NumericEnv.
std::string leaf_key(const Atom& a);

}  // namespace jetcas
