#pragma once

#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "jetcas/expr.hpp"
#include "jetcas/linalg.hpp"

namespace jetcas {

Expr total_derivative(const Expr& e, const std::string& var);
Expr total_derivative(const Expr& e, const DerivIndex& alpha);

struct JetLess {
    bool operator()(const JetVar& a, const JetVar& b) const { return compare(a, b) < 0; }
};

/// lead = rhs, with rhs free of lead and of its derivatives. The rule is
/// prolonged only along the listed variables (every variable when empty).
struct Rule {
    JetVar lead;
    Expr rhs;
    std::vector<std::string> prolong;

    bool applies_to(const JetVar& j) const;
};

/// Solves eq = 0 for lead; eq must be linear in lead with a coefficient that
/// does not vanish identically.
Rule solve_for(const Expr& eq, const JetVar& lead, std::vector<std::string> prolong = {});

/// Highest jet of eq under the JetVar order (the default constraint leader).
JetVar highest_jet(const Expr& eq);

/// Replaces every jet that is a derivative of some rule's leader by the
/// corresponding prolongation of the rule, recursively, so that the result
/// contains no such jet. When several leaders apply the highest one wins.
class Reducer {
public:
    Reducer() = default;
    explicit Reducer(std::vector<Rule> rules);
    Reducer(const Reducer& other) : rules_(other.rules_) {}
    Reducer& operator=(const Reducer& other) {
        rules_ = other.rules_;
        std::lock_guard lock(mu_);
        cache_.clear();
        return *this;
    }

    Expr operator()(const Expr& e) const;
    bool reducible(const JetVar& j) const;
    const std::vector<Rule>& rules() const { return rules_; }
    bool empty() const { return rules_.empty(); }

private:
    Expr reduced_jet(const JetVar& j, int depth) const;
    Expr reduce(const Expr& e, int depth) const;

    std::vector<Rule> rules_;
    mutable std::mutex mu_;
    mutable std::map<JetVar, Expr, JetLess> cache_;
};

/// Normal form for a second-order equation in two independent variables that
/// eliminates every mixed derivative of the dependent variable. Mixed jets of
/// order k are obtained by solving the k-1 prolongations of order k, which
/// are linear in them, so only pure derivatives remain.
class MixedEliminator {
public:
    MixedEliminator(Expr equation, std::string dep, std::string x, std::string y);

    Expr operator()(const Expr& e) const;

private:
    void ensure_order(int k) const;

    Expr equation_;
    std::string dep_, x_, y_;
    mutable std::mutex mu_;
    mutable int solved_order_ = 1;
    mutable SubstMap solutions_;
};

}  // namespace jetcas
