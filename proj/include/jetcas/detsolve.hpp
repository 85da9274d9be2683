#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "jetcas/jet.hpp"

namespace jetcas {

enum class SystemKind { Evolution, Hyperbolic, General };

/// A PDE system together with its solved (on-shell) form.
struct PdeSystem {
    SystemKind kind = SystemKind::General;
    std::string time;                // empty when there is no distinguished time
    std::vector<std::string> space;  // spatial variables
    std::vector<std::string> deps;
    std::vector<Rule> rules;        // u_t = F, u_tt = F, or lead = ...
    std::vector<Expr> residuals;    // each equation written as expr = 0

    Reducer reducer() const { return Reducer(rules); }
    /// Right-hand side of the rule for dependent variable dep.
    const Expr& rhs(const std::string& dep) const;
};

PdeSystem evolution_system(std::string time, std::vector<std::string> space,
                           const std::vector<std::pair<std::string, Expr>>& rhs);
PdeSystem hyperbolic_system(std::string time, std::vector<std::string> space, const std::string& dep,
                            const Expr& rhs);
PdeSystem general_system(std::string time, std::vector<std::string> space, std::vector<std::string> deps,
                         const std::vector<std::pair<Expr, JetVar>>& equations);

JetVar jet_of(const std::string& dep, const std::string& var, int order);

enum class TemplateKind { Evolution, SecondOrder, Hyperbolic, GibbonsTsarev, ReactionDiffusion, ThreeVariable, Qde, Custom };

struct DetEqTemplate {
    TemplateKind kind = TemplateKind::Evolution;
    int order = 0;  // n for the evolution and hyperbolic forms
    // reaction-diffusion exponents and diffusion ratio
    Expr k, l, m, n, d1 = Expr(1);
    // Gibbons-Tsarev: eliminate mixed derivatives (true) or solve for z_xx
    bool eliminate_mixed = true;
    // QDE coefficient functions r1, r2, q1, q2 (default zero)
    std::map<std::string, Expr> coefficient_functions;
    // Custom: raw defects in terms of the slot expressions
    std::function<std::vector<Expr>(const std::vector<Expr>&)> custom;

    /// Names of the undetermined constants, in canonical order.
    std::vector<std::string> constants() const;
    /// Number of slots (h, beta, ...).
    std::size_t slots() const;
};

DetEqTemplate evolution_template(int n);
DetEqTemplate second_order_template();
DetEqTemplate hyperbolic_template(int n);
DetEqTemplate gibbons_tsarev_template(bool eliminate_mixed = true);
DetEqTemplate reaction_diffusion_template(Expr k, Expr l, Expr m, Expr n, Expr d1);
DetEqTemplate three_variable_template();
DetEqTemplate qde_template(std::map<std::string, Expr> coefficient_functions = {});

/// Normal-form reduction used for a template/system pair.
std::function<Expr(const Expr&)> normal_form(const DetEqTemplate& tpl, const PdeSystem& sys);

/// Defects (LHS - RHS, on-shell) of the determining equations for the slots.
std::vector<Expr> build_lde(const DetEqTemplate& tpl, const PdeSystem& sys, const std::vector<Expr>& h);

enum class SolveStatus { Unique, ParametricFamily, Inconsistent };

struct LinearSolveResult {
    SolveStatus status = SolveStatus::Unique;
    std::map<std::string, Expr> assignments;
    std::vector<std::string> free;
    Expr witness;                          // offending equation when inconsistent
    std::vector<Expr> coefficient_system;  // coefficients involving unknown functions
};

/// Jets occurring as direct polynomial factors of e (integer exponents) and nowhere inside a
/// composite atom.
std::vector<Atom> polynomial_jets(const Expr& e);

/// Multiplies e by the smallest monomial in vars that removes negative
/// exponents of vars.
Expr clear_monomial_denominators(const Expr& e, const std::vector<Atom>& vars);

/// Solves the defects for the named constants by splitting every coefficient
/// over the remaining atoms. Coefficients that involve one of the unknown
/// functions are not split; they are returned as the coefficient system.
/// When no rational solution exists, the constants may instead depend on the
/// remaining parameters (f11, d1, ...), solved for generic parameter values.
LinearSolveResult solve_constants(const std::vector<Expr>& defects, const std::vector<std::string>& unknowns,
                                  const std::set<std::string>& unknown_functions = {},
                                  std::optional<std::vector<Atom>> collect_vars = std::nullopt);

struct Verdict {
    bool ok = false;
    std::vector<Expr> residuals;
};

Verdict verify_lde_solution(const DetEqTemplate& tpl, const PdeSystem& sys, const std::vector<Expr>& h,
                            const std::map<std::string, Expr>& constants);

Expr substitute_parameters(const Expr& e, const std::map<std::string, Expr>& values);

/// Coefficient equations in the unknown functions after the constants have
/// been solved; each equation is cleared of denominators.
struct CoefficientSystem {
    LinearSolveResult constants;
    std::vector<Expr> equations;
};
CoefficientSystem derive_coefficient_system(const DetEqTemplate& tpl, const PdeSystem& sys,
                                            const std::vector<Expr>& h_ansatz,
                                            const std::set<std::string>& unknown_functions);

/// True when a and b agree up to a factor free of the unknown functions.
bool proportional(const Expr& a, const Expr& b, const std::set<std::string>& unknown_functions);

struct Constraint {
    Expr h;
    JetVar lead;
};

struct InvarianceResult {
    bool ok = false;
    std::vector<Expr> residuals;  // one per checked function
    std::vector<Constraint> constraints;  // final constraint set used
};

/// Invariance of h_j = 0 under an evolution system: D_t h_j vanishes on
/// [S] and [H].
InvarianceResult check_invariance(const PdeSystem& sys, const std::vector<Constraint>& H);

/// Second-order-in-time variant: k = D_t h (reduced) joins the constraint
/// set and D_t k must vanish modulo the enlarged set.
InvarianceResult check_invariance_hyperbolic(const PdeSystem& sys, const std::vector<Constraint>& H);

/// The identity behind the nonlinear determining equation for a second-order
/// evolution equation u_t = F and a constraint of order n >= 4: returns
/// gamma = D_t h - M(h), whose partial derivatives in u_n, u_{n+1}, u_{n+2}
/// vanish.
Expr nonlinear_gamma(const PdeSystem& sys, const Expr& h, int n);

}  // namespace jetcas
