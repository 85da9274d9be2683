#include "jetcas/expr.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace jetcas {

namespace detail {

struct AtomNode {
    AtomKind kind{};
    std::string name;
    DerivIndex index;
    Elementary fn{};
    std::vector<Expr> args;
    std::vector<int> derivs;
    std::size_t hash = 0;
    std::vector<Atom> leaves;  // composite atoms only
};

struct ExprNode {
    std::vector<Term> terms;
    std::size_t hash = 0;
    std::vector<Atom> leaves;
};

}  // namespace detail

namespace {

std::size_t mix(std::size_t seed, std::size_t v) {
    return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::size_t hash_rational(const Rational& q) {
    std::size_t h = mpz_get_ui(q.get_num_mpz_t());
    h = mix(h, mpz_get_ui(q.get_den_mpz_t()));
    return mix(h, static_cast<std::size_t>(sgn(q) + 1));
}

void merge_leaves(std::vector<Atom>& into, const std::vector<Atom>& more) {
    if (more.empty()) return;
    std::vector<Atom> out;
    out.reserve(into.size() + more.size());
    std::set_union(into.begin(), into.end(), more.begin(), more.end(), std::back_inserter(out));
    into = std::move(out);
}

void add_atom_leaves(std::vector<Atom>& into, const Atom& a) {
    if (a.is_leaf()) {
        merge_leaves(into, {a});
    } else {
        merge_leaves(into, a.leaves());
    }
}

const std::shared_ptr<const detail::ExprNode>& zero_node() {
    static const auto node = std::make_shared<const detail::ExprNode>();
    return node;
}

}  // namespace

const char* elementary_name(Elementary fn) {
    switch (fn) {
        case Elementary::Sin: return "sin";
        case Elementary::Cos: return "cos";
        case Elementary::Tan: return "tan";
        case Elementary::Exp: return "exp";
        case Elementary::Ln: return "ln";
    }
    return "?";
}

// ---------------------------------------------------------------- DerivIndex

DerivIndex::DerivIndex(std::vector<std::pair<std::string, int>> counts) {
    std::map<std::string, int> merged;
    for (auto& [v, c] : counts) merged[v] += c;
    for (auto& [v, c] : merged) {
        if (c < 0) throw StructureError("negative derivative count for " + v);
        if (c > 0) counts_.emplace_back(v, c);
    }
}

int DerivIndex::order(std::string_view var) const {
    for (const auto& [v, c] : counts_)
        if (v == var) return c;
    return 0;
}

int DerivIndex::total() const {
    int t = 0;
    for (const auto& p : counts_) t += p.second;
    return t;
}

DerivIndex DerivIndex::bumped(const std::string& var, int by) const {
    auto c = counts_;
    c.emplace_back(var, by);
    return DerivIndex(std::move(c));
}

bool DerivIndex::covers(const DerivIndex& other) const {
    for (const auto& [v, c] : other.counts_)
        if (order(v) < c) return false;
    return true;
}

DerivIndex DerivIndex::minus(const DerivIndex& other) const {
    auto c = counts_;
    for (const auto& [v, n] : other.counts_) c.emplace_back(v, -n);
    return DerivIndex(std::move(c));
}

int compare(const DerivIndex& a, const DerivIndex& b) {
    const auto& x = a.counts();
    const auto& y = b.counts();
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
        if (int c = x[i].first.compare(y[i].first); c != 0) return c < 0 ? 1 : -1;
        if (x[i].second != y[i].second) return x[i].second < y[i].second ? -1 : 1;
    }
    if (x.size() != y.size()) return x.size() < y.size() ? -1 : 1;
    return 0;
}

std::string JetVar::str() const {
    if (index.empty()) return dep;
    std::string s = dep + "_";
    for (const auto& [v, c] : index.counts())
        for (int i = 0; i < c; ++i) s += v;
    return s;
}

int compare(const JetVar& a, const JetVar& b) {
    if (int c = a.dep.compare(b.dep); c != 0) return c < 0 ? -1 : 1;
    if (a.index.total() != b.index.total()) return a.index.total() < b.index.total() ? -1 : 1;
    return compare(a.index, b.index);
}

// ---------------------------------------------------------------------- Atom

namespace {

std::shared_ptr<detail::AtomNode> new_atom(AtomKind k) {
    auto n = std::make_shared<detail::AtomNode>();
    n->kind = k;
    return n;
}

std::size_t hash_args(std::size_t h, const std::vector<Expr>& args) {
    for (const auto& a : args) h = mix(h, a.hash());
    return h;
}

}  // namespace

Atom Atom::variable(std::string name) {
    auto n = new_atom(AtomKind::Variable);
    n->hash = mix(1, std::hash<std::string>{}(name));
    n->name = std::move(name);
    return Atom(std::move(n));
}

Atom Atom::parameter(std::string name) {
    auto n = new_atom(AtomKind::Parameter);
    n->hash = mix(2, std::hash<std::string>{}(name));
    n->name = std::move(name);
    return Atom(std::move(n));
}

Atom Atom::jet(JetVar v) {
    auto n = new_atom(AtomKind::Jet);
    std::size_t h = mix(3, std::hash<std::string>{}(v.dep));
    for (const auto& [var, c] : v.index.counts())
        h = mix(mix(h, std::hash<std::string>{}(var)), static_cast<std::size_t>(c));
    n->hash = h;
    n->name = std::move(v.dep);
    n->index = std::move(v.index);
    return Atom(std::move(n));
}

Atom Atom::opaque(std::string name, std::vector<Expr> args, std::vector<int> derivs) {
    if (derivs.empty()) derivs.assign(args.size(), 0);
    if (derivs.size() != args.size())
        throw StructureError("derivative index arity mismatch for " + name);
    auto n = new_atom(AtomKind::Opaque);
    std::size_t h = mix(5, std::hash<std::string>{}(name));
    for (int d : derivs) h = mix(h, static_cast<std::size_t>(d));
    n->hash = hash_args(h, args);
    for (const auto& a : args) merge_leaves(n->leaves, a.leaves());
    n->name = std::move(name);
    n->args = std::move(args);
    n->derivs = std::move(derivs);
    return Atom(std::move(n));
}

Atom make_elementary_atom(Elementary fn, Expr arg) {
    auto n = new_atom(AtomKind::Elementary);
    n->fn = fn;
    n->hash = mix(mix(4, static_cast<std::size_t>(fn)), arg.hash());
    n->leaves = arg.leaves();
    n->args.push_back(std::move(arg));
    return Atom(std::move(n));
}

Atom make_power_atom(Expr base) {
    auto n = new_atom(AtomKind::Power);
    n->hash = mix(6, base.hash());
    n->leaves = base.leaves();
    n->args.push_back(std::move(base));
    return Atom(std::move(n));
}

AtomKind Atom::kind() const { return node_->kind; }
const std::string& Atom::name() const { return node_->name; }
Elementary Atom::function() const { return node_->fn; }
const std::vector<Expr>& Atom::args() const { return node_->args; }
const std::vector<int>& Atom::arg_derivs() const { return node_->derivs; }
JetVar Atom::jet_var() const { return JetVar(node_->name, node_->index); }
const Expr& Atom::base() const { return node_->args.front(); }
std::size_t Atom::hash() const { return node_->hash; }
const std::vector<Atom>& Atom::leaves() const { return node_->leaves; }

bool Atom::is_leaf() const {
    auto k = node_->kind;
    return k == AtomKind::Variable || k == AtomKind::Parameter || k == AtomKind::Jet;
}

bool Atom::is_exp() const {
    return node_->kind == AtomKind::Elementary && node_->fn == Elementary::Exp;
}

bool Atom::depends_on(const Atom& a) const {
    if (*this == a) return true;
    if (is_leaf()) return false;
    if (a.is_leaf()) return std::binary_search(node_->leaves.begin(), node_->leaves.end(), a);
    for (const auto& arg : node_->args)
        if (arg.depends_on(a)) return true;
    return false;
}

int compare(const Atom& a, const Atom& b) {
    if (a.node_ == b.node_) return 0;
    const auto& x = *a.node_;
    const auto& y = *b.node_;
    if (x.kind != y.kind) return x.kind < y.kind ? -1 : 1;
    switch (x.kind) {
        case AtomKind::Variable:
        case AtomKind::Parameter: {
            int c = x.name.compare(y.name);
            return c < 0 ? -1 : (c > 0 ? 1 : 0);
        }
        case AtomKind::Jet:
            return compare(JetVar(x.name, x.index), JetVar(y.name, y.index));
        case AtomKind::Elementary:
            if (x.fn != y.fn) return x.fn < y.fn ? -1 : 1;
            return compare(x.args[0], y.args[0]);
        case AtomKind::Opaque: {
            if (int c = x.name.compare(y.name); c != 0) return c < 0 ? -1 : 1;
            if (x.args.size() != y.args.size()) return x.args.size() < y.args.size() ? -1 : 1;
            if (x.derivs != y.derivs) return x.derivs < y.derivs ? -1 : 1;
            for (std::size_t i = 0; i < x.args.size(); ++i)
                if (int c = compare(x.args[i], y.args[i]); c != 0) return c;
            return 0;
        }
        case AtomKind::Power:
            return compare(x.args[0], y.args[0]);
    }
    return 0;
}

namespace {

std::string opaque_head(const Atom& a) {
    const auto& d = a.arg_derivs();
    bool any = std::any_of(d.begin(), d.end(), [](int v) { return v != 0; });
    if (!any) return a.name();
    if (d.size() == 1 && d[0] <= 3) return a.name() + std::string(static_cast<std::size_t>(d[0]), '\'');
    std::string s = a.name() + "^(";
    for (std::size_t i = 0; i < d.size(); ++i) s += (i ? "," : "") + std::to_string(d[i]);
    return s + ")";
}

}  // namespace

std::string Atom::str() const {
    switch (kind()) {
        case AtomKind::Variable:
        case AtomKind::Parameter: return name();
        case AtomKind::Jet: return jet_var().str();
        case AtomKind::Elementary:
            return std::string(elementary_name(function())) + "(" + args()[0].str() + ")";
        case AtomKind::Opaque: {
            std::string s = opaque_head(*this) + "(";
            for (std::size_t i = 0; i < args().size(); ++i) s += (i ? ", " : "") + args()[i].str();
            return s + ")";
        }
        case AtomKind::Power: return "(" + base().str() + ")";
    }
    return "?";
}

std::string leaf_key(const Atom& a) { return a.str(); }

// ---------------------------------------------------------------------- Expr

namespace {

int compare_exponent(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return cmp(a.constant_value(), b.constant_value());
    if (a.is_constant() != b.is_constant()) return a.is_constant() ? -1 : 1;
    return compare(a, b);
}

std::size_t hash_factors(const std::vector<Factor>& fs) {
    std::size_t h = 7;
    for (const auto& f : fs) h = mix(mix(h, f.base.hash()), f.exponent.hash());
    return h;
}

}  // namespace

int compare_factors(const std::vector<Factor>& a, const std::vector<Factor>& b) {
    std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (int c = compare(a[i].base, b[i].base); c != 0) return c;
        if (int c = compare_exponent(a[i].exponent, b[i].exponent); c != 0) return -c;
    }
    if (a.size() != b.size()) return a.size() < b.size() ? 1 : -1;
    return 0;
}

Expr::Expr() : node_(zero_node()) {}
Expr::Expr(int v) : Expr(Rational(v)) {}
Expr::Expr(long v) : Expr(Rational(v)) {}

Expr::Expr(const Rational& q) : node_(zero_node()) {
    if (q == 0) return;
    auto n = std::make_shared<detail::ExprNode>();
    n->terms.push_back(Term{{}, q});
    n->hash = mix(hash_factors({}), hash_rational(q));
    node_ = std::move(n);
}

Expr::Expr(const Atom& a) : node_(zero_node()) {
    if (a.is_exp()) {
        *this = monomial_expr(1, {Factor{a, Expr(1)}});
        return;
    }
    auto n = std::make_shared<detail::ExprNode>();
    n->terms.push_back(Term{{Factor{a, Expr(1)}}, Rational(1)});
    n->hash = mix(hash_factors(n->terms[0].factors), hash_rational(1));
    add_atom_leaves(n->leaves, a);
    node_ = std::move(n);
}

Expr Expr::from_terms(std::vector<Term> terms) {
    std::sort(terms.begin(), terms.end(),
              [](const Term& a, const Term& b) { return compare_factors(a.factors, b.factors) < 0; });
    std::vector<Term> out;
    out.reserve(terms.size());
    for (auto& t : terms) {
        if (!out.empty() && compare_factors(out.back().factors, t.factors) == 0) {
            out.back().coef += t.coef;
        } else {
            if (!out.empty() && out.back().coef == 0) out.pop_back();
            out.push_back(std::move(t));
        }
    }
    if (!out.empty() && out.back().coef == 0) out.pop_back();
    if (out.empty()) return Expr();
    auto n = std::make_shared<detail::ExprNode>();
    std::size_t h = 11;
    for (const auto& t : out) {
        h = mix(mix(h, hash_factors(t.factors)), hash_rational(t.coef));
        for (const auto& f : t.factors) {
            add_atom_leaves(n->leaves, f.base);
            merge_leaves(n->leaves, f.exponent.leaves());
        }
    }
    n->hash = out.size() == 1 ? mix(hash_factors(out[0].factors), hash_rational(out[0].coef)) : h;
    n->terms = std::move(out);
    return Expr(std::move(n));
}

const std::vector<Term>& Expr::terms() const { return node_->terms; }
bool Expr::is_zero_node() const { return node_->terms.empty(); }

bool Expr::is_constant() const {
    return node_->terms.empty() || (node_->terms.size() == 1 && node_->terms[0].factors.empty());
}

Rational Expr::constant_value() const {
    if (node_->terms.empty()) return 0;
    if (!is_constant()) throw StructureError("expression is not constant: " + str());
    return node_->terms[0].coef;
}

bool Expr::is_integer() const {
    return is_constant() && constant_value().get_den() == 1;
}

bool Expr::is_atom() const {
    const auto& t = node_->terms;
    return t.size() == 1 && t[0].coef == 1 && t[0].factors.size() == 1 &&
           t[0].factors[0].exponent.is_constant() && t[0].factors[0].exponent.constant_value() == 1;
}

Atom Expr::as_atom() const {
    if (!is_atom()) throw StructureError("expression is not a single atom: " + str());
    return node_->terms[0].factors[0].base;
}

bool Expr::is_monomial() const { return node_->terms.size() == 1; }

Rational Expr::leading_coefficient() const {
    return node_->terms.empty() ? Rational(0) : node_->terms[0].coef;
}

const std::vector<Atom>& Expr::leaves() const { return node_->leaves; }

bool Expr::depends_on(const Atom& a) const {
    if (a.is_leaf()) return std::binary_search(node_->leaves.begin(), node_->leaves.end(), a);
    for (const auto& t : node_->terms)
        for (const auto& f : t.factors)
            if (f.base.depends_on(a) || f.exponent.depends_on(a)) return true;
    return false;
}

std::size_t Expr::hash() const { return node_->hash; }

int compare(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return 0;
    const auto& x = a.node_->terms;
    const auto& y = b.node_->terms;
    std::size_t n = std::min(x.size(), y.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (int c = compare_factors(x[i].factors, y[i].factors); c != 0) return c;
        if (int c = cmp(x[i].coef, y[i].coef); c != 0) return c < 0 ? -1 : 1;
    }
    if (x.size() != y.size()) return x.size() < y.size() ? -1 : 1;
    return 0;
}

bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    if (a.node_->hash != b.node_->hash) return false;
    return compare(a, b) == 0;
}

namespace {

std::string rational_str(const Rational& q) {
    return q.get_den() == 1 ? q.get_num().get_str() : q.get_num().get_str() + "/" + q.get_den().get_str();
}

std::string factor_str(const Factor& f) {
    std::string base = f.base.str();
    if (f.exponent.is_constant()) {
        Rational e = f.exponent.constant_value();
        if (e == 1) return base;
        if (e > 0 && e.get_den() == 1) return base + "^" + rational_str(e);
    }
    return base + "^(" + f.exponent.str() + ")";
}

}  // namespace

std::string Expr::str() const {
    const auto& ts = node_->terms;
    if (ts.empty()) return "0";
    std::string s;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const auto& t = ts[i];
        Rational c = t.coef;
        if (i == 0) {
            if (c < 0) s += "-";
        } else {
            s += c < 0 ? " - " : " + ";
        }
        Rational mag = abs(c);
        if (t.factors.empty()) {
            s += rational_str(mag);
            continue;
        }
        bool first = true;
        if (mag != 1) {
            s += rational_str(mag);
            first = false;
        }
        for (const auto& f : t.factors) {
            if (!first) s += "*";
            s += factor_str(f);
            first = false;
        }
    }
    return s;
}

// ---------------------------------------------------------------- arithmetic

namespace {

Expr scale(const Expr& e, const Rational& q) {
    if (q == 0 || e.is_zero_node()) return Expr();
    if (q == 1) return e;
    std::vector<Term> ts = e.terms();
    for (auto& t : ts) t.coef *= q;
    return Expr::from_terms(std::move(ts));
}

bool exponent_at_least_one(const Factor& f) {
    return f.base.kind() == AtomKind::Power && f.exponent.is_constant() && f.exponent.constant_value() >= 1;
}

// Sorted merge of two canonical factor lists. Returns false when the result
// needs the general normalisation (exp merge or power overflow).
bool merge_factor_lists(const std::vector<Factor>& a, const std::vector<Factor>& b, std::vector<Factor>& out) {
    out.clear();
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    bool exp_a = false, exp_b = false;
    for (const auto& f : a) exp_a |= f.base.is_exp();
    for (const auto& f : b) exp_b |= f.base.is_exp();
    if (exp_a && exp_b) return false;
    while (i < a.size() || j < b.size()) {
        if (j == b.size()) {
            out.push_back(a[i++]);
        } else if (i == a.size()) {
            out.push_back(b[j++]);
        } else {
            int c = compare(a[i].base, b[j].base);
            if (c < 0) {
                out.push_back(a[i++]);
            } else if (c > 0) {
                out.push_back(b[j++]);
            } else {
                Expr e = a[i].exponent + b[j].exponent;
                if (!e.is_zero_node()) {
                    out.push_back(Factor{a[i].base, e});
                    if (exponent_at_least_one(out.back())) return false;
                }
                ++i;
                ++j;
            }
        }
    }
    return true;
}

}  // namespace

Expr monomial_expr(const Rational& coef, const std::vector<Factor>& factors) {
    if (coef == 0) return Expr();
    std::vector<Factor> fs;
    Expr exp_arg;
    bool has_exp = false;
    for (const auto& f : factors) {
        if (f.exponent.is_zero_node()) continue;
        if (f.base.is_exp()) {
            exp_arg += f.base.args()[0] * f.exponent;
            has_exp = true;
        } else {
            fs.push_back(f);
        }
    }
    std::stable_sort(fs.begin(), fs.end(), [](const Factor& x, const Factor& y) { return x.base < y.base; });
    std::vector<Factor> merged;
    for (auto& f : fs) {
        if (!merged.empty() && merged.back().base == f.base) {
            merged.back().exponent += f.exponent;
        } else {
            merged.push_back(f);
        }
    }
    std::erase_if(merged, [](const Factor& f) { return f.exponent.is_zero_node(); });
    if (has_exp && !exp_arg.is_zero_node()) {
        Factor ef{make_elementary_atom(Elementary::Exp, exp_arg), Expr(1)};
        auto pos = std::lower_bound(merged.begin(), merged.end(), ef,
                                    [](const Factor& x, const Factor& y) { return x.base < y.base; });
        merged.insert(pos, std::move(ef));
    }
    Expr extra(1);
    Rational c = coef;
    for (auto& f : merged) {
        if (!exponent_at_least_one(f)) continue;
        Rational r = f.exponent.constant_value();
        mpz_class whole;
        mpz_fdiv_q(whole.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
        Rational frac = r - Rational(whole);
        extra = extra * pow(f.base.base(), whole.get_si());
        f.exponent = Expr(frac);
    }
    std::erase_if(merged, [](const Factor& f) { return f.exponent.is_zero_node(); });
    std::vector<Term> t;
    t.push_back(Term{std::move(merged), c});
    Expr single = Expr::from_terms(std::move(t));
    return extra == Expr(1) ? single : single * extra;
}

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_zero_node()) return b;
    if (b.is_zero_node()) return a;
    std::vector<Term> ts;
    ts.reserve(a.terms().size() + b.terms().size());
    ts.insert(ts.end(), a.terms().begin(), a.terms().end());
    ts.insert(ts.end(), b.terms().begin(), b.terms().end());
    return Expr::from_terms(std::move(ts));
}

Expr operator-(const Expr& a) { return scale(a, -1); }
Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_zero_node() || b.is_zero_node()) return Expr();
    if (a.is_constant()) return scale(b, a.constant_value());
    if (b.is_constant()) return scale(a, b.constant_value());
    std::vector<Term> out;
    out.reserve(a.terms().size() * b.terms().size());
    std::vector<Expr> extras;
    std::vector<Factor> buf;
    for (const auto& ta : a.terms()) {
        for (const auto& tb : b.terms()) {
            Rational c = ta.coef * tb.coef;
            if (merge_factor_lists(ta.factors, tb.factors, buf)) {
                out.push_back(Term{buf, c});
            } else {
                std::vector<Factor> all = ta.factors;
                all.insert(all.end(), tb.factors.begin(), tb.factors.end());
                extras.push_back(monomial_expr(c, all));
            }
        }
    }
    for (auto& e : extras)
        for (const auto& t : e.terms()) out.push_back(t);
    return Expr::from_terms(std::move(out));
}

Expr operator/(const Expr& a, const Expr& b) {
    if (b.is_zero_node()) throw DegenerateError("division by zero");
    if (b.is_constant()) return scale(a, 1 / b.constant_value());
    if (a.terms().size() == b.terms().size() && !b.is_monomial()) {
        Rational ratio = a.terms()[0].coef / b.terms()[0].coef;
        if (a == scale(b, ratio)) return Expr(ratio);
    }
    return a * pow(b, -1);
}

Expr sum(std::span<const Expr> parts) {
    std::vector<Term> ts;
    for (const auto& p : parts) ts.insert(ts.end(), p.terms().begin(), p.terms().end());
    return Expr::from_terms(std::move(ts));
}

Expr rational(long num, long den) { return Expr(Rational(num, den)); }

namespace {

bool exact_root(const mpz_class& v, unsigned long k, mpz_class& out) {
    return mpz_root(out.get_mpz_t(), v.get_mpz_t(), k) != 0;
}

Expr rational_int_power(const Rational& c, long n) {
    Rational r = 1;
    Rational b = n >= 0 ? c : 1 / c;
    for (long k = std::labs(n); k > 0; --k) r *= b;
    return Expr(r);
}

// c^E for a rational constant c.
Expr constant_power(const Rational& c, const Expr& e) {
    if (c == 1) return Expr(1);
    if (c == 0) {
        if (e.is_constant() && e.constant_value() > 0) return Expr();
        throw DegenerateError("zero raised to a non-positive power");
    }
    if (e.is_constant()) {
        Rational r = e.constant_value();
        if (r.get_den() == 1) return rational_int_power(c, r.get_num().get_si());
        unsigned long q = r.get_den().get_ui();
        long p = r.get_num().get_si();
        Rational mag = abs(c);
        Rational sign = 1;
        if (c < 0) {
            if (q % 2 == 0) throw DomainError("even root of a negative constant");
            if (p % 2 != 0) sign = -1;
        }
        mpz_class nr, dr;
        if (exact_root(mag.get_num(), q, nr) && exact_root(mag.get_den(), q, dr)) {
            return scale(rational_int_power(Rational(nr, dr), p), sign);
        }
        return monomial_expr(sign, {Factor{make_power_atom(Expr(mag)), e}});
    }
    if (c < 0) throw DomainError("negative constant raised to a symbolic power");
    return monomial_expr(1, {Factor{make_power_atom(Expr(c)), e}});
}

Expr monomial_power(const Term& t, const Expr& e) {
    Expr cpow = constant_power(t.coef, e);
    std::vector<Factor> fs;
    fs.reserve(t.factors.size());
    for (const auto& f : t.factors) fs.push_back(Factor{f.base, f.exponent * e});
    return cpow * monomial_expr(1, fs);
}

// Power of a sum with a negative or fractional/symbolic exponent.
Expr sum_power(const Expr& p, const Expr& e) {
    Rational lead = p.leading_coefficient();
    Expr q = scale(p, 1 / lead);
    // common monomial factor with constant exponents
    std::vector<Factor> common;
    const auto& ts = q.terms();
    for (const auto& f : ts[0].factors) {
        if (!f.exponent.is_constant() || f.base.is_exp()) continue;
        Rational m = f.exponent.constant_value();
        bool everywhere = true;
        for (std::size_t i = 1; i < ts.size() && everywhere; ++i) {
            auto it = std::find_if(ts[i].factors.begin(), ts[i].factors.end(),
                                   [&](const Factor& g) { return g.base == f.base; });
            if (it == ts[i].factors.end() || !it->exponent.is_constant()) {
                everywhere = false;
            } else if (it->exponent.constant_value() < m) {
                m = it->exponent.constant_value();
            }
        }
        if (everywhere) common.push_back(Factor{f.base, Expr(m)});
    }
    Expr mono(1);
    if (!common.empty()) {
        mono = monomial_expr(1, common);
        std::vector<Factor> inv;
        for (const auto& f : common) inv.push_back(Factor{f.base, -f.exponent});
        q = q * monomial_expr(1, inv);
    }
    Expr result = constant_power(lead, e);
    if (!common.empty()) result = result * pow(mono, e);
    return result * monomial_expr(1, {Factor{make_power_atom(q), e}});
}

}  // namespace

Expr pow(const Expr& base, const Expr& e) {
    if (e.is_zero_node()) return Expr(1);
    if (base.is_zero_node()) {
        if (e.is_constant() && e.constant_value() > 0) return Expr();
        throw DegenerateError("division by zero");
    }
    if (base.is_constant()) return constant_power(base.constant_value(), e);
    if (base.is_monomial()) return monomial_power(base.terms()[0], e);
    if (e.is_integer() && e.constant_value() > 0) {
        long n = e.constant_value().get_num().get_si();
        Expr result(1), b = base;
        while (n > 0) {
            if (n & 1) result = result * b;
            n >>= 1;
            if (n) b = b * b;
        }
        return result;
    }
    return sum_power(base, e);
}

Expr pow(const Expr& base, long exponent) { return pow(base, Expr(exponent)); }

Expr apply_elementary(Elementary fn, const Expr& a) {
    switch (fn) {
        case Elementary::Sin:
        case Elementary::Tan:
            if (a.is_zero_node()) return Expr();
            if (a.leading_coefficient() < 0) return -Expr(make_elementary_atom(fn, -a));
            return Expr(make_elementary_atom(fn, a));
        case Elementary::Cos:
            if (a.is_zero_node()) return Expr(1);
            if (a.leading_coefficient() < 0) return Expr(make_elementary_atom(fn, -a));
            return Expr(make_elementary_atom(fn, a));
        case Elementary::Exp:
            if (a.is_zero_node()) return Expr(1);
            return monomial_expr(1, {Factor{make_elementary_atom(fn, a), Expr(1)}});
        case Elementary::Ln:
            if (a.is_constant()) {
                Rational c = a.constant_value();
                if (c <= 0) throw DomainError("ln of a non-positive constant");
                if (c == 1) return Expr();
            }
            if (a.is_monomial() && a.terms()[0].coef == 1 && a.terms()[0].factors.size() == 1 &&
                a.terms()[0].factors[0].base.is_exp())
                return a.terms()[0].factors[0].base.args()[0];
            return Expr(make_elementary_atom(fn, a));
    }
    return Expr();
}

Expr sin(const Expr& a) { return apply_elementary(Elementary::Sin, a); }
Expr cos(const Expr& a) { return apply_elementary(Elementary::Cos, a); }
Expr tan(const Expr& a) { return apply_elementary(Elementary::Tan, a); }
Expr exp(const Expr& a) { return apply_elementary(Elementary::Exp, a); }
Expr ln(const Expr& a) { return apply_elementary(Elementary::Ln, a); }

Expr sqrt(const Expr& a) {
    if (a.is_constant() && a.constant_value() <= 0)
        throw DomainError("sqrt of a non-positive constant");
    return pow(a, Expr(Rational(1, 2)));
}

Expr opaque(const std::string& name, std::vector<Expr> args, std::vector<int> derivs) {
    return Expr(Atom::opaque(name, std::move(args), std::move(derivs)));
}

// ------------------------------------------------------------- differentiation

namespace {

Expr atom_value(const Atom& a) {
    return a.kind() == AtomKind::Power ? a.base() : Expr(a);
}

Expr partial_atom(const Atom& a, const Atom& w) {
    if (a == w) return Expr(1);
    if (a.is_leaf()) return Expr();
    if (!a.depends_on(w)) return Expr();
    switch (a.kind()) {
        case AtomKind::Elementary: {
            const Expr& arg = a.args()[0];
            Expr d = partial(arg, w);
            if (d.is_zero_node()) return Expr();
            switch (a.function()) {
                case Elementary::Sin: return cos(arg) * d;
                case Elementary::Cos: return -sin(arg) * d;
                case Elementary::Tan: return (Expr(1) + pow(tan(arg), 2)) * d;
                case Elementary::Exp: return exp(arg) * d;
                case Elementary::Ln: return d / arg;
            }
            return Expr();
        }
        case AtomKind::Opaque: {
            std::vector<Expr> parts;
            for (std::size_t i = 0; i < a.args().size(); ++i) {
                Expr d = partial(a.args()[i], w);
                if (d.is_zero_node()) continue;
                auto derivs = a.arg_derivs();
                derivs[i] += 1;
                parts.push_back(opaque(a.name(), a.args(), derivs) * d);
            }
            return sum(parts);
        }
        case AtomKind::Power: return partial(a.base(), w);
        default: return Expr();
    }
}

Expr partial_factor(const Factor& f, const Atom& w) {
    bool base_dep = f.base.depends_on(w);
    bool exp_dep = f.exponent.depends_on(w);
    if (!base_dep && !exp_dep) return Expr();
    if (f.base.is_exp()) return Expr(f.base) * partial(f.base.args()[0], w);
    Expr da = base_dep ? partial_atom(f.base, w) : Expr();
    if (!exp_dep) {
        if (da.is_zero_node()) return Expr();
        return f.exponent * monomial_expr(1, {Factor{f.base, f.exponent - Expr(1)}}) * da;
    }
    Expr self = monomial_expr(1, {f});
    Expr value = atom_value(f.base);
    Expr r = partial(f.exponent, w) * ln(value);
    if (!da.is_zero_node()) r = r + f.exponent * da / value;
    return self * r;
}

}  // namespace

Expr partial(const Expr& e, const Atom& wrt) {
    if (!e.depends_on(wrt)) return Expr();
    std::vector<Expr> parts;
    for (const auto& t : e.terms()) {
        for (std::size_t i = 0; i < t.factors.size(); ++i) {
            Expr d = partial_factor(t.factors[i], wrt);
            if (d.is_zero_node()) continue;
            std::vector<Factor> rest;
            rest.reserve(t.factors.size() - 1);
            for (std::size_t j = 0; j < t.factors.size(); ++j)
                if (j != i) rest.push_back(t.factors[j]);
            std::vector<Term> one;
            one.push_back(Term{std::move(rest), t.coef});
            parts.push_back(Expr::from_terms(std::move(one)) * d);
        }
    }
    return sum(parts);
}

// --------------------------------------------------------------- substitution

namespace {

class Substituter {
public:
    explicit Substituter(const SubstMap& rules) : rules_(rules) {
        for (const auto& [k, v] : rules)
            if (!k.is_leaf()) composite_keys_ = true;
    }

    Expr run(const Expr& e) {
        if (!touches(e)) return e;
        std::vector<Expr> parts;
        parts.reserve(e.terms().size());
        for (const auto& t : e.terms()) {
            Expr acc(t.coef);
            std::vector<Factor> untouched;
            for (const auto& f : t.factors) {
                if (!touches(f.base) && !touches(f.exponent)) {
                    untouched.push_back(f);
                    continue;
                }
                if (f.base.is_exp()) {
                    acc = acc * exp(run(f.base.args()[0]) * run(f.exponent));
                } else {
                    acc = acc * pow(atom(f.base), run(f.exponent));
                }
            }
            if (!untouched.empty()) acc = acc * monomial_expr(1, untouched);
            parts.push_back(std::move(acc));
        }
        return sum(parts);
    }

private:
    bool touches(const Atom& a) const {
        if (auto it = rules_.find(a); it != rules_.end()) return true;
        if (a.is_leaf()) return false;
        for (const auto& [k, v] : rules_)
            if (a.depends_on(k)) return true;
        return false;
    }

    bool touches(const Expr& e) const {
        if (!composite_keys_) {
            for (const auto& [k, v] : rules_)
                if (e.depends_on(k)) return true;
            return false;
        }
        for (const auto& [k, v] : rules_)
            if (e.depends_on(k)) return true;
        return false;
    }

    Expr atom(const Atom& a) {
        if (auto it = rules_.find(a); it != rules_.end()) return it->second;
        switch (a.kind()) {
            case AtomKind::Elementary: return apply_elementary(a.function(), run(a.args()[0]));
            case AtomKind::Opaque: {
                std::vector<Expr> args;
                for (const auto& x : a.args()) args.push_back(run(x));
                return opaque(a.name(), std::move(args), a.arg_derivs());
            }
            case AtomKind::Power: return run(a.base());
            default: return Expr(a);
        }
    }

    const SubstMap& rules_;
    bool composite_keys_ = false;
};

bool mentions_function(const Expr& e, const std::string& name);

bool mentions_function(const Atom& a, const std::string& name) {
    if (a.is_leaf()) return false;
    if (a.kind() == AtomKind::Opaque && a.name() == name) return true;
    for (const auto& x : a.args())
        if (mentions_function(x, name)) return true;
    return false;
}

bool mentions_function(const Expr& e, const std::string& name) {
    for (const auto& t : e.terms())
        for (const auto& f : t.factors)
            if (mentions_function(f.base, name) || mentions_function(f.exponent, name)) return true;
    return false;
}

class FunctionSubstituter {
public:
    FunctionSubstituter(const std::string& name, const std::vector<Atom>& params, const Expr& body)
        : name_(name), params_(params), body_(body) {}

    Expr run(const Expr& e) {
        if (!mentions_function(e, name_)) return e;
        std::vector<Expr> parts;
        for (const auto& t : e.terms()) {
            Expr acc(t.coef);
            for (const auto& f : t.factors) {
                if (!mentions_function(f.base, name_) && !mentions_function(f.exponent, name_)) {
                    acc = acc * monomial_expr(1, {f});
                } else if (f.base.is_exp()) {
                    acc = acc * exp(run(f.base.args()[0]) * run(f.exponent));
                } else {
                    acc = acc * pow(atom(f.base), run(f.exponent));
                }
            }
            parts.push_back(std::move(acc));
        }
        return sum(parts);
    }

private:
    Expr atom(const Atom& a) {
        switch (a.kind()) {
            case AtomKind::Elementary: return apply_elementary(a.function(), run(a.args()[0]));
            case AtomKind::Power: return run(a.base());
            case AtomKind::Opaque: {
                std::vector<Expr> args;
                for (const auto& x : a.args()) args.push_back(run(x));
                if (a.name() != name_) return opaque(a.name(), std::move(args), a.arg_derivs());
                if (args.size() != params_.size())
                    throw StructureError("arity mismatch substituting function " + name_);
                Expr d = body_;
                for (std::size_t i = 0; i < params_.size(); ++i)
                    for (int k = 0; k < a.arg_derivs()[i]; ++k) d = partial(d, params_[i]);
                SubstMap m;
                for (std::size_t i = 0; i < params_.size(); ++i) m.emplace(params_[i], args[i]);
                return substitute(d, m);
            }
            default: return Expr(a);
        }
    }

    const std::string& name_;
    const std::vector<Atom>& params_;
    const Expr& body_;
};

}  // namespace

Expr substitute(const Expr& e, const SubstMap& rules) {
    if (rules.empty()) return e;
    return Substituter(rules).run(e);
}

Expr substitute_function(const Expr& e, const std::string& name, const std::vector<Atom>& params,
                         const Expr& body) {
    return FunctionSubstituter(name, params, body).run(e);
}

// ------------------------------------------------------------ zero testing

Expr clear_denominators(const Expr& e) {
    std::map<Atom, Rational> worst;
    for (const auto& t : e.terms())
        for (const auto& f : t.factors) {
            if (f.base.kind() != AtomKind::Power || !f.exponent.is_constant()) continue;
            Rational r = f.exponent.constant_value();
            if (r >= 0) continue;
            auto [it, inserted] = worst.emplace(f.base, r);
            if (!inserted && r < it->second) it->second = r;
        }
    if (worst.empty()) return e;
    std::vector<Expr> parts;
    parts.reserve(e.terms().size());
    for (const auto& t : e.terms()) {
        std::vector<Factor> fs;
        std::map<Atom, Rational> raised;
        for (const auto& [b, r] : worst) raised.emplace(b, -r);
        for (const auto& f : t.factors) {
            auto it = raised.find(f.base);
            if (it != raised.end() && f.exponent.is_constant())
                it->second += f.exponent.constant_value();
            else
                fs.push_back(f);
        }
        // integer powers of the cleared sums are expanded so that cancellation is visible
        Expr part = monomial_expr(t.coef, fs);
        for (const auto& [b, r] : raised) {
            if (r == 0) continue;
            if (r.get_den() == 1) part = part * pow(b.base(), Expr(r));
            else part = part * monomial_expr(1, {Factor{b, Expr(r)}});
        }
        parts.push_back(part);
    }
    return sum(parts);
}

bool is_zero(const Expr& e) {
    if (e.is_zero_node()) return true;
    return clear_denominators(e).is_zero_node();
}

// ---------------------------------------------------------------- collection

Collected collect(const Expr& e, const std::vector<Atom>& vars) {
    std::vector<Atom> sorted_vars = vars;
    std::sort(sorted_vars.begin(), sorted_vars.end());
    auto is_var = [&](const Atom& a) { return std::binary_search(sorted_vars.begin(), sorted_vars.end(), a); };
    auto mentions_var = [&](const Expr& x) {
        for (const auto& v : sorted_vars)
            if (x.depends_on(v)) return true;
        return false;
    };
    std::map<std::vector<Factor>, std::vector<Term>, bool (*)(const std::vector<Factor>&, const std::vector<Factor>&)>
        groups([](const std::vector<Factor>& a, const std::vector<Factor>& b) { return compare_factors(a, b) < 0; });
    for (const auto& t : e.terms()) {
        std::vector<Factor> key, rest;
        for (const auto& f : t.factors) {
            if (is_var(f.base)) {
                if (!f.exponent.is_integer() || f.exponent.constant_value() < 0)
                    throw StructureError("non-polynomial dependence on " + f.base.str());
                key.push_back(f);
            } else {
                if (!f.base.is_leaf()) {
                    for (const auto& v : sorted_vars)
                        if (f.base.depends_on(v))
                            throw StructureError("non-polynomial dependence on " + v.str() + " through " +
                                                 f.base.str());
                }
                if (mentions_var(f.exponent))
                    throw StructureError("collection variable inside an exponent");
                rest.push_back(f);
            }
        }
        groups[key].push_back(Term{std::move(rest), t.coef});
    }
    Collected out;
    for (auto& [key, terms] : groups) {
        std::vector<Term> k;
        k.push_back(Term{key, Rational(1)});
        out.emplace_back(Expr::from_terms(std::move(k)), Expr::from_terms(std::move(terms)));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return compare(a.first, b.first) < 0; });
    return out;
}

std::vector<JetVar> jets_in(const Expr& e) {
    std::vector<JetVar> out;
    for (const auto& a : e.leaves())
        if (a.kind() == AtomKind::Jet) out.push_back(a.jet_var());
    std::sort(out.begin(), out.end(), [](const JetVar& a, const JetVar& b) { return compare(a, b) < 0; });
    return out;
}

namespace {

void gather_opaque(const Expr& e, std::vector<Atom>& out);

void gather_opaque(const Atom& a, std::vector<Atom>& out) {
    if (a.is_leaf()) return;
    if (a.kind() == AtomKind::Opaque) out.push_back(a);
    for (const auto& x : a.args()) gather_opaque(x, out);
}

void gather_opaque(const Expr& e, std::vector<Atom>& out) {
    for (const auto& t : e.terms())
        for (const auto& f : t.factors) {
            gather_opaque(f.base, out);
            gather_opaque(f.exponent, out);
        }
}

}  // namespace

std::vector<Atom> opaque_atoms_in(const Expr& e) {
    std::vector<Atom> out;
    gather_opaque(e, out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// ---------------------------------------------------------------- evaluation

namespace {

double eval_atom(const Atom& a, const NumericEnv& env);

double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw DomainError(std::string("non-finite value in ") + what);
    return v;
}

double eval_expr(const Expr& e, const NumericEnv& env) {
    double total = 0;
    for (const auto& t : e.terms()) {
        double v = t.coef.get_d();
        for (const auto& f : t.factors) {
            double b = eval_atom(f.base, env);
            if (f.base.is_exp()) {
                v *= b;
                continue;
            }
            if (f.exponent.is_constant()) {
                Rational r = f.exponent.constant_value();
                if (r.get_den() == 1) {
                    long n = r.get_num().get_si();
                    if (n < 0 && b == 0) throw DomainError("pole");
                    v *= std::pow(b, static_cast<double>(n));
                    continue;
                }
                if (b < 0) {
                    if (r.get_den() % 2 == 0) throw DomainError("even root of a negative value");
                    double m = std::pow(-b, r.get_d());
                    v *= (r.get_num() % 2 == 0) ? m : -m;
                    continue;
                }
                if (b == 0 && r < 0) throw DomainError("pole");
                v *= std::pow(b, r.get_d());
                continue;
            }
            double x = eval_expr(f.exponent, env);
            if (b < 0) throw DomainError("negative base with symbolic exponent");
            v *= std::pow(b, x);
        }
        total += v;
    }
    return checked(total, "expression");
}

double eval_atom(const Atom& a, const NumericEnv& env) {
    switch (a.kind()) {
        case AtomKind::Variable:
        case AtomKind::Parameter:
        case AtomKind::Jet: {
            auto it = env.values.find(leaf_key(a));
            if (it == env.values.end()) throw Error("no numeric value for " + a.str());
            return it->second;
        }
        case AtomKind::Elementary: {
            double x = eval_expr(a.args()[0], env);
            switch (a.function()) {
                case Elementary::Sin: return std::sin(x);
                case Elementary::Cos: return std::cos(x);
                case Elementary::Tan: return checked(std::tan(x), "tan");
                case Elementary::Exp: return checked(std::exp(x), "exp");
                case Elementary::Ln:
                    if (x <= 0) throw DomainError("ln of a non-positive value");
                    return std::log(x);
            }
            return 0;
        }
        case AtomKind::Opaque: {
            if (!env.opaque) throw Error("no numeric model for function " + a.name());
            std::vector<double> xs;
            for (const auto& arg : a.args()) xs.push_back(eval_expr(arg, env));
            return checked(env.opaque(a, xs), "opaque function");
        }
        case AtomKind::Power: return eval_expr(a.base(), env);
    }
    return 0;
}

}  // namespace

double evaluate(const Expr& e, const NumericEnv& env) { return eval_expr(e, env); }

}  // namespace jetcas
