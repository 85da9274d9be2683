#include "jetcas/distrib.hpp"

#include <algorithm>

namespace jetcas {

namespace {

void check_coefficient(const Expr& e) {
    for (const auto& j : jets_in(e))
        if (!j.index.empty()) throw StructureError("vector field coefficient depends on a derivative: " + j.str());
}

// pick p columns of the p x n matrix with a nonzero minor
std::vector<std::size_t> independent_columns(const Matrix& m, std::size_t n) {
    std::size_t p = m.size();
    std::vector<std::size_t> cols;
    std::vector<bool> pick(n, false);
    std::fill(pick.begin(), pick.begin() + static_cast<long>(std::min(p, n)), true);
    if (p > n) throw DegenerateError("more fields than independent variables");
    do {
        cols.clear();
        for (std::size_t i = 0; i < n; ++i)
            if (pick[i]) cols.push_back(i);
        Matrix sq(p, std::vector<Expr>(p));
        for (std::size_t r = 0; r < p; ++r)
            for (std::size_t c = 0; c < p; ++c) sq[r][c] = m[r][cols[c]];
        if (!is_zero(det(sq))) return cols;
    } while (std::prev_permutation(pick.begin(), pick.end()));
    throw DegenerateError("vector fields are linearly dependent");
}

}  // namespace

VectorField::VectorField(std::vector<std::string> v, std::vector<std::string> d, std::vector<Expr> x,
                         std::vector<Expr> e)
    : vars(std::move(v)), deps(std::move(d)), xi(std::move(x)), eta(std::move(e)) {
    if (xi.size() != vars.size() || eta.size() != deps.size())
        throw StructureError("vector field coefficient count does not match its variables");
    for (const auto& c : xi) check_coefficient(c);
    for (const auto& c : eta) check_coefficient(c);
}

Expr VectorField::apply(const Expr& f) const {
    std::vector<Expr> parts;
    for (std::size_t i = 0; i < vars.size(); ++i)
        if (!xi[i].is_zero_node()) parts.push_back(xi[i] * partial(f, Atom::variable(vars[i])));
    for (std::size_t j = 0; j < deps.size(); ++j)
        if (!eta[j].is_zero_node()) parts.push_back(eta[j] * partial(f, Atom::jet(JetVar(deps[j]))));
    return sum(parts);
}

bool VectorField::is_zero() const {
    for (const auto& c : xi)
        if (!jetcas::is_zero(c)) return false;
    for (const auto& c : eta)
        if (!jetcas::is_zero(c)) return false;
    return true;
}

std::string VectorField::str() const {
    std::string out;
    auto add = [&](const Expr& c, const std::string& name) {
        if (c.is_zero_node()) return;
        if (!out.empty()) out += " + ";
        out += "(" + c.str() + ")*d_" + name;
    };
    for (std::size_t i = 0; i < vars.size(); ++i) add(xi[i], vars[i]);
    for (std::size_t j = 0; j < deps.size(); ++j) add(eta[j], deps[j]);
    return out.empty() ? "0" : out;
}

VectorField operator+(const VectorField& a, const VectorField& b) {
    VectorField r = a;
    for (std::size_t i = 0; i < r.xi.size(); ++i) r.xi[i] += b.xi[i];
    for (std::size_t j = 0; j < r.eta.size(); ++j) r.eta[j] += b.eta[j];
    return r;
}

VectorField operator*(const Expr& c, const VectorField& a) {
    VectorField r = a;
    for (auto& x : r.xi) x = c * x;
    for (auto& e : r.eta) e = c * e;
    return r;
}

VectorField commutator(const VectorField& X, const VectorField& Y) {
    if (X.vars != Y.vars || X.deps != Y.deps) throw StructureError("vector fields live on different spaces");
    VectorField r = X;
    for (std::size_t i = 0; i < r.xi.size(); ++i) r.xi[i] = X.apply(Y.xi[i]) - Y.apply(X.xi[i]);
    for (std::size_t j = 0; j < r.eta.size(); ++j) r.eta[j] = X.apply(Y.eta[j]) - Y.apply(X.eta[j]);
    return r;
}

InvolutivityResult check_involutive(const std::vector<VectorField>& basis) {
    InvolutivityResult out;
    out.involutive = true;
    if (basis.empty()) return out;
    std::size_t p = basis.size(), n = basis[0].vars.size();
    Matrix xi;
    for (const auto& X : basis) xi.push_back(X.xi);
    auto cols = independent_columns(xi, n);
    Matrix sq(p, std::vector<Expr>(p));
    for (std::size_t r = 0; r < p; ++r)
        for (std::size_t c = 0; c < p; ++c) sq[c][r] = xi[r][cols[c]];
    out.c.assign(p, std::vector<std::vector<Expr>>(p));
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j) {
            VectorField B = commutator(basis[i], basis[j]);
            std::vector<Expr> rhs;
            for (auto c : cols) rhs.push_back(B.xi[c]);
            auto c = cramer(sq, rhs);
            VectorField rest = B;
            for (std::size_t k = 0; k < p; ++k) rest = rest + (-c[k]) * basis[k];
            out.c[i][j] = c;
            if (out.involutive && !rest.is_zero()) {
                out.involutive = false;
                out.failing_pair = {static_cast<int>(i), static_cast<int>(j)};
                out.witness = rest;
            }
        }
    return out;
}

FirstOrderManifold manifold_from_fields(const std::vector<VectorField>& basis) {
    if (basis.empty()) throw StructureError("empty basis");
    FirstOrderManifold M;
    M.vars = basis[0].vars;
    M.deps = basis[0].deps;
    std::size_t n = M.vars.size();
    if (basis.size() != n) throw StructureError("manifold_from_fields needs as many fields as variables");
    Matrix xi;
    for (const auto& X : basis) xi.push_back(X.xi);
    Expr d = det(xi);
    if (is_zero(d)) throw DegenerateError("det(xi) vanishes identically");
    Matrix adj = adjugate(xi);
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<Expr> eqs, tilde;
        for (std::size_t j = 0; j < M.deps.size(); ++j) {
            std::vector<Expr> parts;
            for (std::size_t i = 0; i < n; ++i)
                parts.push_back(xi[k][i] * Expr::jet(JetVar(M.deps[j], DerivIndex({{M.vars[i], 1}}))));
            parts.push_back(-basis[k].eta[j]);
            eqs.push_back(sum(parts));
            std::vector<Expr> t;
            for (std::size_t l = 0; l < n; ++l) t.push_back(adj[k][l] * basis[l].eta[j]);
            tilde.push_back(sum(t) / d);
        }
        M.equations.push_back(std::move(eqs));
        M.eta_tilde.push_back(std::move(tilde));
    }
    return M;
}

FirstOrderManifold normalized_manifold(std::vector<std::string> vars, std::vector<std::string> deps,
                                       const std::vector<std::vector<Expr>>& h) {
    FirstOrderManifold M;
    M.vars = std::move(vars);
    M.deps = std::move(deps);
    M.equations = h;
    for (std::size_t k = 0; k < h.size(); ++k) {
        std::vector<Expr> tilde;
        for (std::size_t j = 0; j < h[k].size(); ++j) {
            JetVar lead(M.deps[j], DerivIndex({{M.vars[k], 1}}));
            Rule r = solve_for(h[k][j], lead);
            for (const auto& jv : jets_in(r.rhs))
                if (!jv.index.empty()) throw StructureError("manifold equation is not in normalized form");
            tilde.push_back(r.rhs);
        }
        M.eta_tilde.push_back(std::move(tilde));
    }
    return M;
}

Verdict check_cross_compatibility(const FirstOrderManifold& M) {
    Verdict v;
    v.ok = true;
    std::size_t n = M.vars.size();
    std::vector<VectorField> Z;
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<Expr> xi(n);
        xi[k] = Expr(1);
        Z.emplace_back(M.vars, M.deps, xi, M.eta_tilde[k]);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = i + 1; k < n; ++k)
            for (std::size_t j = 0; j < M.deps.size(); ++j) {
                Expr r = clear_denominators(Z[i].apply(M.eta_tilde[k][j]) - Z[k].apply(M.eta_tilde[i][j]));
                if (!r.is_zero_node()) v.ok = false;
                v.residuals.push_back(r);
            }
    return v;
}

Verdict verify_qde(const PdeSystem& sys, const Expr& h1, const Expr& h2, const std::map<std::string, Expr>& constants,
                   const std::map<std::string, Expr>& coefficient_functions, const std::vector<Expr>& side_odes,
                   const std::vector<std::string>& side_unknowns) {
    Verdict v = verify_lde_solution(qde_template(coefficient_functions), sys, {h1, h2}, constants);
    if (side_odes.empty()) return v;
    auto rules = solve_odes(side_odes, side_unknowns);
    v.ok = true;
    for (auto& r : v.residuals) {
        r = clear_denominators(reduce_modulo_odes(r, rules));
        if (!is_zero(r)) v.ok = false;
    }
    return v;
}

}  // namespace jetcas
