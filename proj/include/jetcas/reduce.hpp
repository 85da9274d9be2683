#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "jetcas/detsolve.hpp"

namespace jetcas {

/// Closed-form shape u = expr for each dependent variable. The expressions
/// may contain single-argument unknown functions (V(x^2 - t^2), a1(x), ...).
struct Ansatz {
    std::map<std::string, Expr> solution;
    std::vector<std::string> unknowns;  // names of the unknown functions
};

/// Derivative of the closed form of dep along alpha.
Expr ansatz_jet(const Ansatz& a, const JetVar& j);

/// Residuals of sys (one per equation) with every jet replaced by the
/// derivative of the ansatz.
std::vector<Expr> substitute_ansatz(const PdeSystem& sys, const Ansatz& a);
Expr substitute_ansatz(const Expr& residual, const Ansatz& a);

struct OdeSystem {
    std::vector<std::string> unknowns;
    std::vector<Expr> equations;
    std::string str() const;
};

/// Rewrites products of sin/cos of arguments depending on vars into sums of
/// single sines and cosines.
Expr product_to_sum(const Expr& e, const std::vector<Atom>& vars);

/// Coefficients of the residuals with respect to the basis: every factor
/// depending on a leaf variable of the basis is treated as a basis monomial.
/// Products of sin/cos are rewritten first when the basis is trigonometric.
OdeSystem extract_ode_system(const std::vector<Expr>& residuals, const std::vector<Expr>& basis,
                             std::vector<std::string> unknowns);

/// Every expected equation matches one derived equation up to a factor free
/// of the unknown functions, and vice versa.
struct OdeMatch {
    bool ok = false;
    std::vector<Expr> missing;     // expected, not derived
    std::vector<Expr> unexpected;  // derived, not expected
};
OdeMatch match_odes(const OdeSystem& derived, const std::vector<Expr>& expected);

/// f^(k)(t) = rhs, solved for the highest derivative of one unknown.
struct OdeRule {
    std::string name;
    int order = 0;
    Expr argument;
    Expr rhs;
};

/// Solves each equation for its highest derivative of some unknown (linear
/// occurrence required).
std::vector<OdeRule> solve_odes(const std::vector<Expr>& equations, const std::vector<std::string>& unknowns);

/// Replaces every derivative of order >= rule.order by the rule (higher ones
/// through differentiation along the argument), to a fixed point.
Expr reduce_modulo_odes(const Expr& e, const std::vector<OdeRule>& rules);

struct Box {
    std::map<std::string, std::pair<double, double>> ranges;
};

struct NumericResult {
    double max_abs = 0;
    int samples = 0;
    int rejected = 0;
};

/// Samples the expressions at uniform points of the box and returns the
/// largest absolute value. Points where evaluation fails are redrawn; more
/// than `samples` rejections raise DomainError.
NumericResult numeric_residual(const std::vector<Expr>& residuals, const Box& box, int samples, std::uint64_t seed,
                               const std::map<std::string, double>& fixed = {});
/// Same computation on a single thread.
NumericResult numeric_residual_serial(const std::vector<Expr>& residuals, const Box& box, int samples,
                                      std::uint64_t seed, const std::map<std::string, double>& fixed = {});

/// Central difference against the symbolic partial derivative:
/// |fd - exact| / max(1, |exact|).
double fd_check(const Expr& e, const Atom& wrt, const NumericEnv& point, double step);

struct ChainStep {
    std::string description;
    bool ok = false;
    std::string detail;
};

struct ChainReport {
    std::string name;
    bool ok = false;
    std::vector<ChainStep> steps;
};

/// Built-in reduction chains: "gt-painleve2", "gt-airy", "longwave-s6".
ChainReport verify_reduction_chain(const std::string& name);
std::vector<std::string> reduction_chains();

}  // namespace jetcas
