#include "jetcas/jet.hpp"

#include <algorithm>

namespace jetcas {

Expr total_derivative(const Expr& e, const std::string& var) {
    std::vector<Expr> parts;
    parts.push_back(partial(e, Atom::variable(var)));
    for (const auto& j : jets_in(e)) {
        Expr d = partial(e, Atom::jet(j));
        if (!d.is_zero_node()) parts.push_back(d * Expr::jet(j.derivative(var)));
    }
    return sum(parts);
}

Expr total_derivative(const Expr& e, const DerivIndex& alpha) {
    Expr r = e;
    for (const auto& [v, c] : alpha.counts())
        for (int i = 0; i < c; ++i) r = total_derivative(r, v);
    return r;
}

Rule solve_for(const Expr& eq, const JetVar& lead, std::vector<std::string> prolong) {
    Atom a = Atom::jet(lead);
    Collected parts;
    try {
        parts = collect(eq, {a});
    } catch (const StructureError&) {
        throw StructureError("constraint is not linear in its leading jet " + lead.str());
    }
    Expr coef, rest;
    for (const auto& [mono, c] : parts) {
        if (mono == Expr(1)) {
            rest = c;
        } else if (mono == Expr(a)) {
            coef = c;
        } else {
            throw StructureError("constraint is not linear in its leading jet " + lead.str());
        }
    }
    if (is_zero(coef)) throw StructureError("constraint does not contain its leading jet " + lead.str());
    Expr rhs = -rest / coef;
    for (const auto& j : jets_in(rhs))
        if (j.dep == lead.dep && j.index.covers(lead.index))
            throw StructureError("constraint cannot be solved for " + lead.str());
    return Rule{lead, rhs, std::move(prolong)};
}

JetVar highest_jet(const Expr& eq) {
    auto js = jets_in(eq);
    if (js.empty()) throw StructureError("expression contains no jet variable: " + eq.str());
    return js.back();
}

Reducer::Reducer(std::vector<Rule> rules) : rules_(std::move(rules)) {}

bool Rule::applies_to(const JetVar& j) const {
    if (lead.dep != j.dep || !j.index.covers(lead.index)) return false;
    if (prolong.empty()) return true;
    const DerivIndex extra = j.index.minus(lead.index);
    for (const auto& [v, c] : extra.counts())
        if (std::find(prolong.begin(), prolong.end(), v) == prolong.end()) return false;
    return true;
}

bool Reducer::reducible(const JetVar& j) const {
    for (const auto& r : rules_)
        if (r.applies_to(j)) return true;
    return false;
}

Expr Reducer::operator()(const Expr& e) const { return reduce(e, 0); }

Expr Reducer::reduce(const Expr& e, int depth) const {
    SubstMap m;
    for (const auto& j : jets_in(e))
        if (reducible(j)) m.emplace(Atom::jet(j), reduced_jet(j, depth + 1));
    if (m.empty()) return e;
    return substitute(e, m);
}

Expr Reducer::reduced_jet(const JetVar& j, int depth) const {
    if (depth > 256) throw InternalError("reduction depth exceeded at " + j.str());
    {
        std::lock_guard lock(mu_);
        if (auto it = cache_.find(j); it != cache_.end()) return it->second;
    }
    const Rule* rule = nullptr;
    for (const auto& r : rules_)
        if (r.applies_to(j) && (rule == nullptr || compare(r.lead, rule->lead) > 0))
            rule = &r;
    Expr value;
    if (j.index == rule->lead.index) {
        value = reduce(rule->rhs, depth);
    } else {
        const std::string w = j.index.minus(rule->lead.index).counts().front().first;
        JetVar parent{j.dep, j.index.bumped(w, -1)};
        value = reduce(total_derivative(reduced_jet(parent, depth + 1), w), depth);
    }
    std::lock_guard lock(mu_);
    cache_.emplace(j, value);
    return value;
}

MixedEliminator::MixedEliminator(Expr equation, std::string dep, std::string x, std::string y)
    : equation_(std::move(equation)), dep_(std::move(dep)), x_(std::move(x)), y_(std::move(y)) {}

namespace {

bool is_mixed(const JetVar& j, const std::string& dep, const std::string& x, const std::string& y) {
    return j.dep == dep && j.index.order(x) > 0 && j.index.order(y) > 0;
}

}  // namespace

void MixedEliminator::ensure_order(int k) const {
    for (int o = solved_order_ + 1; o <= k; ++o) {
        std::vector<Atom> unknowns;
        for (int i = 1; i < o; ++i)
            unknowns.push_back(Atom::jet(JetVar(dep_, DerivIndex({{x_, o - i}, {y_, i}}))));
        Matrix m;
        std::vector<Expr> rhs;
        for (int j = 0; j <= o - 2; ++j) {
            Expr eq = total_derivative(equation_, DerivIndex({{x_, o - 2 - j}, {y_, j}}));
            eq = substitute(eq, solutions_);
            std::vector<Expr> row(unknowns.size());
            Expr constant;
            for (const auto& [mono, c] : collect(eq, unknowns)) {
                if (mono == Expr(1)) {
                    constant = c;
                    continue;
                }
                if (!mono.is_atom()) throw StructureError("prolongation is not linear in mixed jets");
                auto pos = std::find(unknowns.begin(), unknowns.end(), mono.as_atom()) - unknowns.begin();
                row[static_cast<std::size_t>(pos)] = c;
            }
            m.push_back(std::move(row));
            rhs.push_back(-constant);
        }
        auto sol = cramer(m, rhs);
        for (std::size_t i = 0; i < unknowns.size(); ++i) solutions_.emplace(unknowns[i], sol[i]);
        solved_order_ = o;
    }
}

Expr MixedEliminator::operator()(const Expr& e) const {
    int top = 0;
    for (const auto& j : jets_in(e))
        if (is_mixed(j, dep_, x_, y_)) top = std::max(top, j.index.total());
    if (top == 0) return e;
    std::lock_guard lock(mu_);
    ensure_order(top);
    return substitute(e, solutions_);
}

}  // namespace jetcas
