#include "jetcas/detsolve.hpp"

#include <algorithm>
#include <memory>

namespace jetcas {

namespace {

Expr D(const Expr& e, const std::string& var, int times = 1) {
    Expr r = e;
    for (int i = 0; i < times; ++i) r = total_derivative(r, var);
    return r;
}

Expr P(const std::string& name) { return Expr::parameter(name); }

Expr J(const std::string& dep, std::vector<std::pair<std::string, int>> idx = {}) {
    return Expr::jet(JetVar(dep, DerivIndex(std::move(idx))));
}

Expr wrt(const Expr& e, const Expr& jet) { return partial(e, jet.as_atom()); }

int max_order(const Expr& e, const std::string& dep, const std::string& var) {
    int n = -1;
    for (const auto& j : jets_in(e))
        if (j.dep == dep) n = std::max(n, j.index.order(var));
    return n;
}

void require(bool cond, const std::string& what) {
    if (!cond) throw StructureError(what);
}

bool mentions_unknown(const Expr& e, const std::set<std::string>& names) {
    if (names.empty()) return false;
    for (const auto& a : opaque_atoms_in(e))
        if (names.count(a.name())) return true;
    return false;
}

}  // namespace

const Expr& PdeSystem::rhs(const std::string& dep) const {
    for (const auto& r : rules)
        if (r.lead.dep == dep) return r.rhs;
    throw StructureError("no equation for " + dep);
}

JetVar jet_of(const std::string& dep, const std::string& var, int order) {
    if (order == 0) return JetVar(dep);
    return JetVar(dep, DerivIndex({{var, order}}));
}

PdeSystem evolution_system(std::string time, std::vector<std::string> space,
                           const std::vector<std::pair<std::string, Expr>>& rhs) {
    PdeSystem s;
    s.kind = SystemKind::Evolution;
    s.time = std::move(time);
    s.space = std::move(space);
    for (const auto& [dep, f] : rhs) {
        for (const auto& j : jets_in(f))
            require(j.index.order(s.time) == 0, "right-hand side contains a time derivative: " + j.str());
        JetVar lead = jet_of(dep, s.time, 1);
        s.deps.push_back(dep);
        s.rules.push_back(Rule{lead, f, {}});
        s.residuals.push_back(Expr::jet(lead) - f);
    }
    return s;
}

PdeSystem hyperbolic_system(std::string time, std::vector<std::string> space, const std::string& dep,
                            const Expr& rhs) {
    PdeSystem s;
    s.kind = SystemKind::Hyperbolic;
    s.time = std::move(time);
    s.space = std::move(space);
    for (const auto& j : jets_in(rhs))
        require(j.index.order(s.time) < 2, "right-hand side contains a second time derivative: " + j.str());
    JetVar lead = jet_of(dep, s.time, 2);
    s.deps.push_back(dep);
    s.rules.push_back(Rule{lead, rhs, {}});
    s.residuals.push_back(Expr::jet(lead) - rhs);
    return s;
}

PdeSystem general_system(std::string time, std::vector<std::string> space, std::vector<std::string> deps,
                         const std::vector<std::pair<Expr, JetVar>>& equations) {
    PdeSystem s;
    s.kind = SystemKind::General;
    s.time = std::move(time);
    s.space = std::move(space);
    s.deps = std::move(deps);
    for (const auto& [eq, lead] : equations) {
        s.rules.push_back(solve_for(eq, lead));
        s.residuals.push_back(eq);
    }
    return s;
}

// ------------------------------------------------------------------ templates

std::vector<std::string> DetEqTemplate::constants() const {
    std::vector<std::string> out;
    auto numbered = [&](const std::string& prefix, int from, int to) {
        for (int i = from; i <= to; ++i) out.push_back(prefix + std::to_string(i));
    };
    switch (kind) {
        case TemplateKind::Evolution:
        case TemplateKind::Hyperbolic:
            for (int i = 0; i <= order; ++i)
                for (int k = 0; k <= i; ++k) out.push_back("b" + std::to_string(i) + std::to_string(k));
            break;
        case TemplateKind::SecondOrder: numbered("c", 1, 5); break;
        case TemplateKind::GibbonsTsarev: numbered("b", 1, 2); break;
        case TemplateKind::ReactionDiffusion: numbered("b", 1, 16); break;
        case TemplateKind::ThreeVariable:
            numbered("a", 1, 9);
            numbered("b", 1, 9);
            break;
        case TemplateKind::Qde:
            numbered("a", 1, 7);
            numbered("b", 1, 7);
            break;
        case TemplateKind::Custom: break;
    }
    return out;
}

std::size_t DetEqTemplate::slots() const {
    switch (kind) {
        case TemplateKind::ReactionDiffusion:
        case TemplateKind::ThreeVariable:
        case TemplateKind::Qde: return 2;
        default: return 1;
    }
}

DetEqTemplate evolution_template(int n) {
    DetEqTemplate t;
    t.kind = TemplateKind::Evolution;
    t.order = n;
    return t;
}

DetEqTemplate second_order_template() {
    DetEqTemplate t;
    t.kind = TemplateKind::SecondOrder;
    t.order = 2;
    return t;
}

DetEqTemplate hyperbolic_template(int n) {
    DetEqTemplate t;
    t.kind = TemplateKind::Hyperbolic;
    t.order = n;
    return t;
}

DetEqTemplate gibbons_tsarev_template(bool eliminate_mixed) {
    DetEqTemplate t;
    t.kind = TemplateKind::GibbonsTsarev;
    t.eliminate_mixed = eliminate_mixed;
    return t;
}

DetEqTemplate reaction_diffusion_template(Expr k, Expr l, Expr m, Expr n, Expr d1) {
    DetEqTemplate t;
    t.kind = TemplateKind::ReactionDiffusion;
    t.k = std::move(k);
    t.l = std::move(l);
    t.m = std::move(m);
    t.n = std::move(n);
    t.d1 = std::move(d1);
    return t;
}

DetEqTemplate three_variable_template() {
    DetEqTemplate t;
    t.kind = TemplateKind::ThreeVariable;
    return t;
}

DetEqTemplate qde_template(std::map<std::string, Expr> coefficient_functions) {
    DetEqTemplate t;
    t.kind = TemplateKind::Qde;
    t.coefficient_functions = std::move(coefficient_functions);
    return t;
}

std::function<Expr(const Expr&)> normal_form(const DetEqTemplate& tpl, const PdeSystem& sys) {
    if (tpl.kind == TemplateKind::GibbonsTsarev && tpl.eliminate_mixed) {
        require(sys.residuals.size() == 1 && sys.deps.size() == 1 && !sys.space.empty(),
                "Gibbons-Tsarev template needs one equation in two variables");
        auto elim = std::make_shared<MixedEliminator>(sys.residuals[0], sys.deps[0], sys.time, sys.space[0]);
        return [elim](const Expr& e) { return (*elim)(e); };
    }
    auto red = std::make_shared<Reducer>(sys.rules);
    return [red](const Expr& e) { return (*red)(e); };
}

namespace {

// sum_{i<=n} sum_{k<=i} b_ik D^{i-k}(F_{u_{n-k}}) D^{n-i}(h)
Expr b_sum(const Expr& F, const std::string& dep, const std::string& x, int n, const Expr& h) {
    std::vector<Expr> Dh{h};
    for (int i = 1; i <= n; ++i) Dh.push_back(D(Dh.back(), x));
    std::vector<Expr> parts;
    for (int k = 0; k <= n; ++k) {
        Expr Fk = wrt(F, Expr::jet(jet_of(dep, x, n - k)));
        Expr DFk = Fk;
        for (int i = k; i <= n; ++i) {
            if (i > k) DFk = D(DFk, x);
            if (DFk.is_zero_node()) break;
            parts.push_back(P("b" + std::to_string(i) + std::to_string(k)) * DFk * Dh[static_cast<std::size_t>(n - i)]);
        }
    }
    return sum(parts);
}

std::vector<Expr> evolution_defect(const DetEqTemplate& tpl, const PdeSystem& sys, const std::vector<Expr>& h,
                                   const std::function<Expr(const Expr&)>& nf) {
    require(sys.kind == SystemKind::Evolution && sys.deps.size() == 1 && sys.space.size() == 1,
            "template needs a scalar evolution equation in one space variable");
    const auto& dep = sys.deps[0];
    const auto& x = sys.space[0];
    const Expr& F = sys.rhs(dep);
    require(max_order(F, dep, x) == tpl.order, "template/system order mismatch");
    return {nf(D(h[0], sys.time)) - b_sum(F, dep, x, tpl.order, h[0])};
}

std::vector<Expr> second_order_defect(const PdeSystem& sys, const std::vector<Expr>& h,
                                      const std::function<Expr(const Expr&)>& nf) {
    require(sys.kind == SystemKind::Evolution && sys.deps.size() == 1 && sys.space.size() == 1,
            "template needs a scalar evolution equation in one space variable");
    const auto& dep = sys.deps[0];
    const auto& x = sys.space[0];
    const Expr& F = sys.rhs(dep);
    require(max_order(F, dep, x) == 2, "template/system order mismatch");
    Expr F0 = wrt(F, J(dep)), F1 = wrt(F, Expr::jet(jet_of(dep, x, 1))), F2 = wrt(F, Expr::jet(jet_of(dep, x, 2)));
    Expr Dh = D(h[0], x);
    Expr rhs = F2 * D(Dh, x) + (P("c1") * F1 + P("c2") * D(F2, x)) * Dh +
               (P("c3") * F0 + P("c4") * D(F1, x) + P("c5") * D(F2, x, 2)) * h[0];
    return {nf(D(h[0], sys.time)) - rhs};
}

std::vector<Expr> hyperbolic_defect(const DetEqTemplate& tpl, const PdeSystem& sys, const std::vector<Expr>& h,
                                    const std::function<Expr(const Expr&)>& nf) {
    require(sys.kind == SystemKind::Hyperbolic && sys.space.size() == 1, "template needs u_tt = F in one space variable");
    const auto& dep = sys.deps[0];
    const auto& x = sys.space[0];
    const Expr& F = sys.rhs(dep);
    require(max_order(F, dep, x) == tpl.order, "template/system order mismatch");
    Expr dth = nf(D(nf(D(h[0], sys.time)), sys.time));
    return {dth - b_sum(F, dep, x, tpl.order, h[0])};
}

std::vector<Expr> gt_defect(const PdeSystem& sys, const std::vector<Expr>& h,
                            const std::function<Expr(const Expr&)>& nf) {
    require(sys.deps.size() == 1 && sys.space.size() == 1 && !sys.time.empty(),
            "Gibbons-Tsarev template needs one unknown of two variables");
    const auto& z = sys.deps[0];
    const auto& x = sys.time;
    const auto& y = sys.space[0];
    Expr Dx = nf(D(h[0], x)), Dy = nf(D(h[0], y));
    Expr e = nf(D(Dx, x)) + J(z, {{y, 1}}) * nf(D(Dx, y)) - J(z, {{x, 1}}) * nf(D(Dy, y)) +
             P("b1") * J(z, {{y, 2}}) * Dx + P("b2") * nf(J(z, {{x, 1}, {y, 1}})) * Dy;
    return {nf(e)};
}

std::vector<Expr> reaction_diffusion_defect(const DetEqTemplate& tpl, const PdeSystem& sys,
                                            const std::vector<Expr>& hb,
                                            const std::function<Expr(const Expr&)>& nf) {
    require(sys.kind == SystemKind::Evolution && sys.deps.size() == 2 && sys.space.size() == 1,
            "template needs a two-component evolution system in one space variable");
    const auto& un = sys.deps[0];
    const auto& vn = sys.deps[1];
    const auto& x = sys.space[0];
    Expr u = J(un), v = J(vn);
    Expr ux = J(un, {{x, 1}}), vx = J(vn, {{x, 1}});
    Expr uxx = J(un, {{x, 2}}), vxx = J(vn, {{x, 2}});
    const Expr &k = tpl.k, &l = tpl.l, &m = tpl.m, &n = tpl.n, &d1 = tpl.d1;
    Expr f1 = sys.rhs(un) - D(pow(u, k) * pow(v, l) * ux, x);
    Expr f2 = sys.rhs(vn) - d1 * D(pow(u, m) * pow(v, n) * vx, x);
    for (const Expr* f : {&f1, &f2})
        for (const auto& j : jets_in(*f))
            require(j.index.empty(), "system does not match the reaction-diffusion template: " + f->str());
    Expr f1u = wrt(f1, u), f1v = wrt(f1, v), f2u = wrt(f2, u), f2v = wrt(f2, v);
    auto b = [](int i) { return P("b" + std::to_string(i)); };
    const Expr& h = hb[0];
    const Expr& beta = hb[1];
    Expr Dh = D(h, x), Db = D(beta, x);
    Expr D2h = D(Dh, x), D2b = D(Db, x);
    auto pw = [](const Expr& base, const Expr& e) { return pow(base, e); };
    Expr one(1), two(2);

    Expr rhs1 =
        pw(u, k) * pw(v, l) * D2h + (b(1) * k * pw(u, k - one) * pw(v, l) * ux + b(2) * l * pw(u, k) * pw(v, l - one) * vx) * Dh +
        b(3) * l * pw(u, k) * pw(v, l - one) * ux * Db +
        (b(4) * f1u +
         (b(4) + 2 * b(5) + b(6)) * k * (pw(u, k - one) * pw(v, l) * uxx + (k - one) * pw(u, k - two) * pw(v, l) * ux * ux) +
         (b(4) + 3 * b(5) + b(6)) * k * l * pw(u, k - one) * pw(v, l - one) * ux * vx +
         (b(5) + b(6)) * l * (pw(u, k) * pw(v, l - one) * vxx + (l - one) * pw(u, k) * pw(v, l - two) * vx * vx)) *
            h +
        (b(7) * f1v + b(8) * l *
                          (pw(u, k) * pw(v, l - one) * uxx + k * pw(u, k - one) * pw(v, l - one) * ux * ux +
                           (l - one) * pw(u, k) * pw(v, l - two) * ux * vx)) *
            beta;

    Expr rhs2 =
        d1 * pw(u, m) * pw(v, n) * D2b +
        d1 * (b(9) * m * pw(u, m - one) * pw(v, n) * ux + b(10) * n * pw(u, m) * pw(v, n - one) * vx) * Db +
        b(11) * d1 * m * pw(u, m - one) * pw(v, n) * vx * Dh +
        (b(12) * f2u + b(13) * d1 * m *
                           (pw(u, m - one) * pw(v, n) * vxx + n * pw(u, m - one) * pw(v, n - one) * vx * vx +
                            (m - one) * pw(u, m - two) * pw(v, n) * ux * vx)) *
            h +
        (b(14) * f2v +
         d1 * n * (b(14) + 2 * b(15) + b(16)) * (pw(u, m) * pw(v, n - one) * vxx + (n - one) * pw(u, m) * pw(v, n - two) * vx * vx) +
         d1 * (b(14) + 3 * b(15) + b(16)) * m * n * pw(u, m - one) * pw(v, n - one) * ux * vx +
         d1 * m * (b(15) + b(16)) * (pw(u, m - one) * pw(v, n) * uxx + (m - one) * pw(u, m - two) * pw(v, n) * ux * ux)) *
            beta;

    return {nf(D(h, sys.time)) - rhs1, nf(D(beta, sys.time)) - rhs2};
}

std::vector<Expr> three_variable_defect(const PdeSystem& sys, const std::vector<Expr>& hs,
                                        const std::function<Expr(const Expr&)>& nf) {
    require(sys.kind == SystemKind::Evolution && sys.deps.size() == 1 && sys.space.size() == 2,
            "template needs a scalar evolution equation in two space variables");
    const auto& un = sys.deps[0];
    const auto& x = sys.space[0];
    const auto& y = sys.space[1];
    const Expr& G = sys.rhs(un);
    Expr Gu = wrt(G, J(un)), Gux = wrt(G, J(un, {{x, 1}})), Guy = wrt(G, J(un, {{y, 1}}));
    Expr Guxx = wrt(G, J(un, {{x, 2}})), Guyy = wrt(G, J(un, {{y, 2}}));
    auto side = [&](const std::string& c, const Expr& h1, const Expr& h2, const std::string& x1,
                    const std::string& y1, const Expr& G11, const Expr& G22, const Expr& G1, const Expr& G2) {
        auto a = [&](int i) { return P(c + std::to_string(i)); };
        Expr rhs = a(1) * G11 * D(h1, x1, 2) + a(2) * G22 * D(h1, y1, 2) + (a(3) * G1 + a(4) * D(G11, x1)) * D(h1, x1) +
                   a(5) * G2 * D(h1, y1) + a(6) * D(G22, x1) * D(h2, y1) +
                   (a(7) * Gu + a(8) * D(G11, x1, 2) + a(9) * D(G22, y1, 2)) * h1;
        return nf(D(h1, sys.time)) - rhs;
    };
    return {side("a", hs[0], hs[1], x, y, Guxx, Guyy, Gux, Guy), side("b", hs[1], hs[0], y, x, Guyy, Guxx, Guy, Gux)};
}

std::vector<Expr> qde_defect(const DetEqTemplate& tpl, const PdeSystem& sys, const std::vector<Expr>& hs,
                             const std::function<Expr(const Expr&)>& nf) {
    require(sys.deps.size() == 1 && sys.space.size() == 2 && !sys.time.empty(),
            "QDE template needs one unknown of (t, x, y)");
    const auto& un = sys.deps[0];
    const auto& t = sys.time;
    const auto& x = sys.space[0];
    const auto& y = sys.space[1];
    Expr u = J(un), ux = J(un, {{x, 1}}), uy = J(un, {{y, 1}});
    Expr uxx = J(un, {{x, 2}}), uyy = J(un, {{y, 2}});
    auto fn = [&](const std::string& name) {
        auto it = tpl.coefficient_functions.find(name);
        return it == tpl.coefficient_functions.end() ? Expr() : it->second;
    };
    auto N = [&](const Expr& h) {
        Expr tt = D(h, t, 2);
        return nf(tt - D(tt, x, 2) - D(tt, y, 2));
    };
    auto side = [&](const std::string& c, const Expr& h1, const Expr& h2, const Expr& d1, const Expr& d2,
                    const std::string& x1, const std::string& y1, const Expr& r, const Expr& q) {
        auto a = [&](int i) { return P(c + std::to_string(i)); };
        Expr e = N(h1) + a(1) * u * (D(h1, x, 2) + D(h1, y, 2)) + a(2) * d1 * D(h1, x1) + a(3) * d2 * D(h1, y1) +
                 a(4) * d1 * D(h2, y1) + (a(5) * (uxx + uyy) + a(6) * uxx + a(7) * uyy + r) * h1 + q * h2;
        return nf(e);
    };
    return {side("a", hs[0], hs[1], ux, uy, x, y, fn("r1"), fn("q1")),
            side("b", hs[1], hs[0], uy, ux, y, x, fn("r2"), fn("q2"))};
}

}  // namespace

std::vector<Expr> build_lde(const DetEqTemplate& tpl, const PdeSystem& sys, const std::vector<Expr>& h) {
    if (h.size() != tpl.slots()) throw StructureError("template expects " + std::to_string(tpl.slots()) + " functions");
    for (const auto& e : h)
        for (const auto& j : jets_in(e))
            if (j.index.order(sys.time) > 0 && tpl.kind != TemplateKind::Custom && tpl.kind != TemplateKind::Qde &&
                tpl.kind != TemplateKind::GibbonsTsarev)
                throw StructureError("determining function contains a time derivative: " + j.str());
    auto nf = normal_form(tpl, sys);
    switch (tpl.kind) {
        case TemplateKind::Evolution: return evolution_defect(tpl, sys, h, nf);
        case TemplateKind::SecondOrder: return second_order_defect(sys, h, nf);
        case TemplateKind::Hyperbolic: return hyperbolic_defect(tpl, sys, h, nf);
        case TemplateKind::GibbonsTsarev: return gt_defect(sys, h, nf);
        case TemplateKind::ReactionDiffusion: return reaction_diffusion_defect(tpl, sys, h, nf);
        case TemplateKind::ThreeVariable: return three_variable_defect(sys, h, nf);
        case TemplateKind::Qde: return qde_defect(tpl, sys, h, nf);
        case TemplateKind::Custom: {
            std::vector<Expr> out;
            for (const auto& e : tpl.custom(h)) out.push_back(nf(e));
            return out;
        }
    }
    return {};
}

// ------------------------------------------------------------------- solving

std::vector<Atom> polynomial_jets(const Expr& e) {
    std::vector<Atom> top, inner;
    for (const auto& t : e.terms())
        for (const auto& f : t.factors) {
            if (f.base.kind() == AtomKind::Jet) {
                // fractional powers stay in the coefficient keys
                if (f.exponent.is_integer()) top.push_back(f.base);
                else inner.push_back(f.base);
            } else if (!f.base.is_leaf()) {
                inner.insert(inner.end(), f.base.leaves().begin(), f.base.leaves().end());
            }
            inner.insert(inner.end(), f.exponent.leaves().begin(), f.exponent.leaves().end());
        }
    std::sort(top.begin(), top.end());
    top.erase(std::unique(top.begin(), top.end()), top.end());
    std::sort(inner.begin(), inner.end());
    std::vector<Atom> out;
    std::set_difference(top.begin(), top.end(), inner.begin(), inner.end(), std::back_inserter(out));
    return out;
}

Expr clear_monomial_denominators(const Expr& e, const std::vector<Atom>& vars) {
    std::vector<Factor> mult;
    for (const auto& v : vars) {
        Rational lowest = 0;
        for (const auto& t : e.terms())
            for (const auto& f : t.factors)
                if (f.base == v && f.exponent.is_constant() && f.exponent.constant_value() < lowest)
                    lowest = f.exponent.constant_value();
        if (lowest < 0) mult.push_back(Factor{v, Expr(Rational(-lowest))});
    }
    if (mult.empty()) return e;
    return e * monomial_expr(1, mult);
}

namespace {

struct LinearRow {
    std::vector<Rational> coefs;
    Rational rhs;
    Expr source;
};

// defect index and monomial
using RowKey = std::pair<std::size_t, std::vector<Factor>>;
struct RowKeyLess {
    bool operator()(const RowKey& a, const RowKey& b) const {
        if (a.first != b.first) return a.first < b.first;
        return compare_factors(a.second, b.second) < 0;
    }
};

void split_linear(std::size_t eq, const Expr& mono, const Expr& c, const std::vector<Atom>& unknowns,
                  std::map<RowKey, LinearRow, RowKeyLess>& rows) {
    for (const auto& t : c.terms()) {
        int col = -1;
        std::vector<Factor> key;
        for (const auto& f : t.factors) {
            auto it = std::find(unknowns.begin(), unknowns.end(), f.base);
            if (it != unknowns.end()) {
                if (col >= 0 || f.exponent != Expr(1))
                    throw StructureError("non-linear occurrence of an undetermined constant in " + c.str());
                col = static_cast<int>(it - unknowns.begin());
                continue;
            }
            if (!f.base.is_leaf())
                for (const auto& u : unknowns)
                    if (f.base.depends_on(u))
                        throw StructureError("undetermined constant inside " + f.base.str());
            for (const auto& u : unknowns)
                if (f.exponent.depends_on(u)) throw StructureError("undetermined constant inside an exponent");
            key.push_back(f);
        }
        key = (monomial_expr(1, key) * mono).terms().front().factors;
        auto& row = rows[{eq, key}];
        if (row.coefs.empty()) row.coefs.assign(unknowns.size(), 0);
        if (col < 0) {
            row.rhs -= t.coef;
        } else {
            row.coefs[static_cast<std::size_t>(col)] += t.coef;
        }
        if (row.source.is_zero_node()) row.source = c;
    }
}


bool parameter_only(const Factor& f, const std::vector<Atom>& unknowns) {
    auto ok = [&](const Atom& a) {
        return a.kind() == AtomKind::Parameter && std::find(unknowns.begin(), unknowns.end(), a) == unknowns.end();
    };
    if (f.base.kind() != AtomKind::Parameter && f.base.kind() != AtomKind::Power) return false;
    for (const auto& l : f.base.is_leaf() ? std::vector<Atom>{f.base} : f.base.leaves())
        if (!ok(l)) return false;
    for (const auto& l : f.exponent.leaves())
        if (!ok(l)) return false;
    return true;
}

// Gauss-Jordan over the fraction field of the remaining parameters. Each row is
// one equation, linear in the unknowns; pivots are assumed generic (nonzero
// as rational functions of the parameters).
std::optional<LinearSolveResult> solve_over_parameters(const std::vector<Expr>& defects,
                                                       const std::vector<std::string>& unknowns) {
    std::vector<Atom> params;
    for (const auto& n : unknowns) params.push_back(Atom::parameter(n));
    std::map<RowKey, Expr, RowKeyLess> grouped;
    for (std::size_t eq = 0; eq < defects.size(); ++eq) {
        Expr d = clear_denominators(defects[eq]);
        d = clear_monomial_denominators(d, polynomial_jets(d));
        for (const auto& t : d.terms()) {
            std::vector<Factor> key, rest;
            for (const auto& f : t.factors) {
                if (std::find(params.begin(), params.end(), f.base) != params.end() || parameter_only(f, params))
                    rest.push_back(f);
                else
                    key.push_back(f);
            }
            grouped[{eq, key}] += monomial_expr(t.coef, rest);
        }
    }
    std::vector<Expr> rows;
    for (auto& [key, e] : grouped) {
        Expr r = clear_denominators(e);
        if (!r.is_zero_node()) rows.push_back(r);
    }
    auto coef = [&](const Expr& row, std::size_t j) {
        Expr c;
        for (const auto& [m, v] : collect(row, {params[j]}))
            if (m == Expr(params[j])) c = v;
            else if (m != Expr(1)) throw StructureError("non-linear occurrence of an undetermined constant in " + row.str());
        return c;
    };
    std::vector<std::size_t> pivot_col;
    std::size_t r = 0;
    for (std::size_t c = 0; c < params.size() && r < rows.size(); ++c) {
        std::size_t best = rows.size();
        std::size_t best_size = 0;
        for (std::size_t i = r; i < rows.size(); ++i) {
            Expr a = coef(rows[i], c);
            if (is_zero(a)) continue;
            std::size_t size = a.is_constant() ? 0 : a.terms().size();
            if (best == rows.size() || size < best_size) best = i, best_size = size;
        }
        if (best == rows.size()) continue;
        std::swap(rows[best], rows[r]);
        Expr p = coef(rows[r], c);
        if (p.is_constant()) rows[r] = rows[r] * Expr(1 / p.constant_value()), p = Expr(1);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i == r) continue;
            Expr a = coef(rows[i], c);
            if (is_zero(a)) continue;
            rows[i] = clear_denominators(p * rows[i] - a * rows[r]);
        }
        pivot_col.push_back(c);
        ++r;
    }
    for (std::size_t i = r; i < rows.size(); ++i)
        if (!is_zero(rows[i])) return std::nullopt;
    LinearSolveResult out;
    std::vector<bool> is_pivot(params.size(), false);
    for (auto c : pivot_col) is_pivot[c] = true;
    for (std::size_t c = 0; c < params.size(); ++c)
        if (!is_pivot[c]) {
            out.free.push_back(unknowns[c]);
            out.assignments.emplace(unknowns[c], Expr(params[c]));
        }
    for (std::size_t i = 0; i < pivot_col.size(); ++i) {
        auto c = pivot_col[i];
        Expr p = coef(rows[i], c);
        out.assignments.emplace(unknowns[c], (Expr(params[c]) * p - rows[i]) / p);
    }
    out.status = out.free.empty() ? SolveStatus::Unique : SolveStatus::ParametricFamily;
    return out;
}

}  // namespace

LinearSolveResult solve_constants(const std::vector<Expr>& defects, const std::vector<std::string>& unknowns,
                                  const std::set<std::string>& unknown_functions,
                                  std::optional<std::vector<Atom>> collect_vars) {
    std::vector<Atom> params;
    for (const auto& n : unknowns) params.push_back(Atom::parameter(n));
    std::map<RowKey, LinearRow, RowKeyLess> rows;
    LinearSolveResult out;
    std::vector<Expr> pdes;
    for (std::size_t eq = 0; eq < defects.size(); ++eq) {
        Expr d = clear_denominators(defects[eq]);
        std::vector<Atom> vars = collect_vars ? *collect_vars : polynomial_jets(d);
        d = clear_monomial_denominators(d, vars);
        for (const auto& [mono, c] : collect(d, vars)) {
            if (mentions_unknown(c, unknown_functions)) {
                pdes.push_back(c);
                continue;
            }
            split_linear(eq, mono, c, params, rows);
        }
    }
    RationalSystem sys;
    std::vector<Expr> sources;
    for (auto& [key, row] : rows) {
        sys.rows.push_back(row.coefs);
        sys.rhs.push_back(row.rhs);
        sources.push_back(row.source);
    }
    auto sol = solve_rational(sys, static_cast<int>(params.size()));
    if (!sol.consistent && pdes.empty() && !collect_vars)
        if (auto generic = solve_over_parameters(defects, unknowns)) return *generic;
    if (!sol.consistent) {
        out.status = SolveStatus::Inconsistent;
        // report the first original coefficient that cannot vanish
        out.witness = sources.empty() ? Expr() : sources[static_cast<std::size_t>(sol.inconsistent_row)];
        for (std::size_t i = 0; i < sources.size(); ++i) {
            bool all_zero = std::all_of(sys.rows[i].begin(), sys.rows[i].end(), [](const Rational& q) { return q == 0; });
            if (all_zero && sys.rhs[i] != 0) {
                out.witness = sources[i];
                break;
            }
        }
        out.coefficient_system = pdes;
        return out;
    }
    out.status = sol.free.empty() ? SolveStatus::Unique : SolveStatus::ParametricFamily;
    for (int f : sol.free) out.free.push_back(unknowns[static_cast<std::size_t>(f)]);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Expr v(sol.value[i]);
        for (const auto& [f, coef] : sol.free_terms[i]) v += coef * Expr(params[static_cast<std::size_t>(f)]);
        out.assignments.emplace(unknowns[i], v);
    }
    for (const auto& p : pdes) {
        Expr e = clear_denominators(substitute_parameters(p, out.assignments));
        if (!e.is_zero_node()) out.coefficient_system.push_back(e);
    }
    return out;
}

Expr substitute_parameters(const Expr& e, const std::map<std::string, Expr>& values) {
    SubstMap m;
    for (const auto& [k, v] : values) m.emplace(Atom::parameter(k), v);
    return substitute(e, m);
}

Verdict verify_lde_solution(const DetEqTemplate& tpl, const PdeSystem& sys, const std::vector<Expr>& h,
                            const std::map<std::string, Expr>& constants) {
    Verdict v;
    v.ok = true;
    for (const auto& d : build_lde(tpl, sys, h)) {
        Expr r = clear_denominators(substitute_parameters(d, constants));
        if (!r.is_zero_node()) v.ok = false;
        v.residuals.push_back(r);
    }
    return v;
}

bool proportional(const Expr& a, const Expr& b, const std::set<std::string>& unknown_functions) {
    // freeze every factor that involves an unknown function into a symbol
    SubstMap freeze;
    for (const Expr* e : {&a, &b})
        for (const auto& t : e->terms())
            for (const auto& f : t.factors)
                if (!freeze.count(f.base) && mentions_unknown(Expr(f.base), unknown_functions))
                    freeze.emplace(f.base, Expr::parameter("#" + std::to_string(freeze.size())));
    std::vector<Atom> atoms;
    for (const auto& [k, v] : freeze) atoms.push_back(v.as_atom());
    Expr fa = substitute(a, freeze), fb = substitute(b, freeze);
    std::vector<Factor> common;
    for (const auto& v : atoms) {
        Rational lowest = 0;
        for (const Expr* e : {&fa, &fb})
            for (const auto& t : e->terms())
                for (const auto& f : t.factors)
                    if (f.base == v && f.exponent.is_constant() && f.exponent.constant_value() < lowest)
                        lowest = f.exponent.constant_value();
        if (lowest < 0) common.push_back(Factor{v, Expr(Rational(-lowest))});
    }
    if (!common.empty()) {
        fa *= monomial_expr(1, common);
        fb *= monomial_expr(1, common);
    }
    if (mentions_unknown(fa, unknown_functions) || mentions_unknown(fb, unknown_functions))
        throw StructureError("unknown function inside an exponent");
    auto ca = collect(fa, atoms), cb = collect(fb, atoms);
    std::map<Expr, std::pair<Expr, Expr>> table;
    for (const auto& [m, c] : ca) table[m].first = c;
    for (const auto& [m, c] : cb) table[m].second = c;
    const std::pair<Expr, Expr>* ref = nullptr;
    for (const auto& [m, pr] : table)
        if (!is_zero(pr.first) || !is_zero(pr.second)) {
            ref = &pr;
            break;
        }
    if (ref == nullptr) return true;
    if (is_zero(ref->first) || is_zero(ref->second)) return false;
    for (const auto& [m, pr] : table)
        if (!is_zero(pr.first * ref->second - pr.second * ref->first)) return false;
    return true;
}

CoefficientSystem derive_coefficient_system(const DetEqTemplate& tpl, const PdeSystem& sys,
                                            const std::vector<Expr>& h_ansatz,
                                            const std::set<std::string>& unknown_functions) {
    bool found = false;
    for (const auto& h : h_ansatz) found |= mentions_unknown(h, unknown_functions);
    if (!found) throw StructureError("ansatz contains no unknown function");
    CoefficientSystem out;
    out.constants = solve_constants(build_lde(tpl, sys, h_ansatz), tpl.constants(), unknown_functions);
    for (const auto& e : out.constants.coefficient_system) {
        bool dup = false;
        for (const auto& seen : out.equations)
            if (proportional(seen, e, unknown_functions)) {
                dup = true;
                break;
            }
        if (!dup) out.equations.push_back(e);
    }
    return out;
}

// ----------------------------------------------------------------- invariance

namespace {

std::vector<Rule> constraint_rules(const PdeSystem& sys, const std::vector<Constraint>& H) {
    std::vector<Rule> rules;
    for (const auto& c : H)
        if (!c.h.is_zero_node()) rules.push_back(solve_for(c.h, c.lead, sys.space));
    return rules;
}

Expr reduce_both(const PdeSystem& sys, const Reducer& combined, const Expr& e) {
    (void)sys;
    Expr r = e;
    for (int i = 0; i < 8; ++i) {
        Expr next = combined(r);
        if (next == r) return r;
        r = next;
    }
    throw InternalError("reduction did not reach a fixed point");
}

}  // namespace

InvarianceResult check_invariance(const PdeSystem& sys, const std::vector<Constraint>& H) {
    if (sys.time.empty()) throw StructureError("invariance needs a time variable");
    auto rules = sys.rules;
    auto hr = constraint_rules(sys, H);
    rules.insert(rules.end(), hr.begin(), hr.end());
    Reducer combined(rules);
    InvarianceResult out;
    out.ok = true;
    out.constraints = H;
    for (const auto& c : H) {
        Expr r = clear_denominators(reduce_both(sys, combined, total_derivative(c.h, sys.time)));
        if (!r.is_zero_node()) out.ok = false;
        out.residuals.push_back(r);
    }
    return out;
}

InvarianceResult check_invariance_hyperbolic(const PdeSystem& sys, const std::vector<Constraint>& H) {
    if (sys.time.empty()) throw StructureError("invariance needs a time variable");
    std::vector<Constraint> all = H;
    auto build = [&](const std::vector<Constraint>& cs) {
        auto rules = sys.rules;
        auto hr = constraint_rules(sys, cs);
        rules.insert(rules.end(), hr.begin(), hr.end());
        return Reducer(rules);
    };
    Reducer first = build(all);
    for (const auto& c : H) {
        Expr k = clear_denominators(reduce_both(sys, first, total_derivative(c.h, sys.time)));
        if (k.is_zero_node()) continue;
        JetVar lead;
        bool have = false;
        for (const auto& j : jets_in(k))
            if (!first.reducible(j) && (!have || compare(j, lead) > 0)) {
                lead = j;
                have = true;
            }
        if (!have) throw StructureError("time derivative of constraint has no free leading jet");
        all.push_back(Constraint{k, lead});
    }
    Reducer combined = build(all);
    InvarianceResult out;
    out.ok = true;
    out.constraints = all;
    for (const auto& c : all) {
        Expr r = clear_denominators(reduce_both(sys, combined, total_derivative(c.h, sys.time)));
        if (!r.is_zero_node()) out.ok = false;
        out.residuals.push_back(r);
    }
    return out;
}

Expr nonlinear_gamma(const PdeSystem& sys, const Expr& h, int n) {
    require(sys.kind == SystemKind::Evolution && sys.deps.size() == 1 && sys.space.size() == 1,
            "needs a scalar evolution equation");
    require(n >= 4, "identity holds for constraints of order n >= 4");
    const auto& dep = sys.deps[0];
    const auto& x = sys.space[0];
    const Expr& F = sys.rhs(dep);
    require(max_order(F, dep, x) <= 2, "needs a second-order equation");
    Reducer red(sys.rules);
    Expr F0 = wrt(F, J(dep)), F1 = wrt(F, Expr::jet(jet_of(dep, x, 1))), F2 = wrt(F, Expr::jet(jet_of(dep, x, 2)));
    Expr un1 = Expr::jet(jet_of(dep, x, n - 1));
    Expr h1 = wrt(h, un1);
    Expr h11 = wrt(h1, un1);
    Expr N(n);
    Expr M = F2 * D(h, x, 2) + (F1 + N * D(F2, x)) * D(h, x) +
             (F0 + N * D(F1, x) - h1 * D(F2, x) + Expr(Rational(n * (n - 1), 2)) * D(F2, x, 2) + F2 * h * h11 -
              2 * F2 * D(h1, x)) *
                 h;
    return red(D(h, sys.time)) - M;
}

}  // namespace jetcas
