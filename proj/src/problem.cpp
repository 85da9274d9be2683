#include <algorithm>
#include <set>

#include "jetcas/cli.hpp"

namespace jetcas::cli {

using dsl::AstPtr;
using dsl::Loc;
using dsl::Op;
using dsl::ParseError;
using dsl::Stmt;
using dsl::StmtKind;

namespace {

struct FuncInfo {
    int arity = 0;
    std::vector<std::string> slots;
    std::vector<Expr> at;
};

Rational parse_number(const std::string& s) {
    auto dot = s.find('.');
    if (dot == std::string::npos) return Rational(s);
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    std::string den = "1" + std::string(s.size() - dot - 1, '0');
    Rational q(digits.empty() ? "0" : digits, 10);
    q /= Rational(den);
    q.canonicalize();
    return q;
}

DetEqTemplate make_template(const Stmt& st, const std::map<std::string, Expr>& opts,
                            const std::map<std::string, Expr>& coefs) {
    auto num = [&](const char* key, int def) {
        auto it = opts.find(key);
        if (it == opts.end()) return def;
        if (!it->second.is_integer()) throw ParseError(st.loc, std::string("option ") + key + " must be an integer");
        return static_cast<int>(it->second.constant_value().get_num().get_si());
    };
    auto ex = [&](const char* key, Expr def) {
        auto it = opts.find(key);
        return it == opts.end() ? def : it->second;
    };
    const std::string& n = st.name;
    if (n == "evolution") return evolution_template(num("n", 2));
    if (n == "second_order") return second_order_template();
    if (n == "hyperbolic") return hyperbolic_template(num("n", 1));
    if (n == "gibbons_tsarev") return gibbons_tsarev_template(num("mixed", 1) != 0);
    if (n == "reaction_diffusion")
        return reaction_diffusion_template(ex("k", Expr()), ex("l", Expr()), ex("m", Expr()), ex("n", Expr()),
                                           ex("d1", Expr(1)));
    if (n == "three_variable") return three_variable_template();
    if (n == "qde") return qde_template(coefs);
    static const std::vector<std::string> names{"evolution",          "second_order",   "hyperbolic", "gibbons_tsarev",
                                                "reaction_diffusion", "three_variable", "qde"};
    auto s = dsl::suggest(n, names);
    throw ParseError(st.loc, "unknown template '" + n + "'" + (s ? "; did you mean '" + *s + "'?" : ""));
}

std::vector<std::string> expand_unknowns(const Stmt& st, const std::vector<std::string>& all) {
    std::vector<std::string> out;
    for (const auto& item : st.names) {
        auto dots = item.find("..");
        if (dots == std::string::npos) {
            if (std::find(all.begin(), all.end(), item) == all.end())
                throw ParseError(st.loc, "'" + item + "' is not a constant of template " + st.name);
            out.push_back(item);
            continue;
        }
        std::string a = item.substr(0, dots), b = item.substr(dots + 2);
        auto ia = std::find(all.begin(), all.end(), a), ib = std::find(all.begin(), all.end(), b);
        if (ia == all.end() || ib == all.end() || ib < ia)
            throw ParseError(st.loc, "range " + item + " does not match the constants of template " + st.name);
        out.insert(out.end(), ia, ib + 1);
    }
    return out;
}

class Elaborator {
public:
    Problem run(const dsl::ProblemFile& f) {
        p_.case_id = f.case_id;
        p_.anchor = f.anchor;
        const Stmt* tpl_stmt = nullptr;
        std::map<std::string, Expr> tpl_opts, coefs;
        std::vector<std::pair<std::string, Expr>> evolve;
        std::optional<std::pair<JetVar, Expr>> hyper;
        std::vector<std::pair<Expr, JetVar>> general;
        Loc sys_loc;
        for (const auto& st : f.stmts) {
            switch (st.kind) {
                case StmtKind::Vars:
                    for (const auto& n : st.names) declare(st.loc, n, p_.vars);
                    break;
                case StmtKind::Dep:
                    for (const auto& n : st.names) declare(st.loc, n, p_.deps);
                    break;
                case StmtKind::Param:
                    for (const auto& n : st.names) declare(st.loc, n, p_.params);
                    break;
                case StmtKind::Func:
                    for (const auto& fd : st.funcs) {
                        std::vector<std::string> dummy;
                        declare(st.loc, fd.name, dummy);
                        FuncInfo fi;
                        fi.arity = fd.arity;
                        fi.slots = fd.slots;
                        for (const auto& a : fd.at) fi.at.push_back(build(a));
                        if (!fi.at.empty() && fi.at.size() != static_cast<std::size_t>(fi.arity))
                            throw ParseError(st.loc, "default arguments of " + fd.name + " do not match its arity");
                        if (fi.arity < 1) throw ParseError(st.loc, "function " + fd.name + " needs at least one argument");
                        if (!fi.at.empty()) {
                            std::string args;
                            for (const auto& a : fi.at) args += (args.empty() ? "" : ", ") + a.str();
                            p_.slot_display[fd.name] = {fi.slots, "(" + args + ")"};
                        }
                        funcs_[fd.name] = fi;
                        p_.funcs[fd.name] = fi.arity;
                        names_.insert(fd.name);
                    }
                    break;
                case StmtKind::Let: {
                    std::vector<std::string> dummy;
                    declare(st.loc, st.name, dummy);
                    lets_[st.name] = build(st.lhs);
                    break;
                }
                case StmtKind::Evolve: {
                    JetVar j = lhs_jet(st, 1);
                    if (!evolve.empty() && j.index.counts().front().first != time_)
                        throw ParseError(st.loc, "evolution equations must share the time variable");
                    time_ = j.index.counts().front().first;
                    evolve.emplace_back(j.dep, build(st.rhs));
                    sys_loc = st.loc;
                    break;
                }
                case StmtKind::Hyper: {
                    if (hyper) throw ParseError(st.loc, "only one hyperbolic equation is supported");
                    JetVar j = lhs_jet(st, 2);
                    hyper.emplace(j, build(st.rhs));
                    sys_loc = st.loc;
                    break;
                }
                case StmtKind::General:
                    general.emplace_back(equation(st), jet_name(st.loc, st.lead));
                    sys_loc = st.loc;
                    break;
                case StmtKind::Constraint: {
                    Expr h = equation(st);
                    // a zero slot (beta = 0) constrains nothing and has no leading jet
                    JetVar lead = !st.lead.empty() ? jet_name(st.loc, st.lead) : h.is_zero_node() ? JetVar{} : highest_jet(h);
                    p_.constraints.push_back({h, lead});
                    p_.constraint_locs.push_back(st.loc);
                    break;
                }
                case StmtKind::Template: {
                    if (tpl_stmt) throw ParseError(st.loc, "only one template per file");
                    tpl_stmt = &st;
                    for (const auto& a : st.assigns) tpl_opts[a.name] = build(a.value);
                    auto provisional = make_template(st, tpl_opts, {});
                    tpl_constants_ = provisional.constants();
                    for (const auto& c : tpl_constants_) names_.insert(c);
                    break;
                }
                case StmtKind::Constants:
                    for (const auto& a : st.assigns) {
                        if (std::find(tpl_constants_.begin(), tpl_constants_.end(), a.name) == tpl_constants_.end())
                            throw ParseError(st.loc, "'" + a.name + "' is not a template constant");
                        p_.constants[a.name] = build(a.value);
                    }
                    break;
                case StmtKind::Coef:
                    for (const auto& a : st.assigns) coefs[a.name] = build(a.value);
                    break;
                case StmtKind::Ansatz: {
                    if (std::find(p_.deps.begin(), p_.deps.end(), st.name) == p_.deps.end())
                        throw ParseError(st.loc, "'" + st.name + "' is not a dependent variable");
                    if (!p_.ansatz) p_.ansatz.emplace();
                    Expr e = build(st.lhs);
                    p_.ansatz->solution[st.name] = e;
                    for (const auto& o : opaque_atoms_in(e))
                        if (std::find(p_.ansatz->unknowns.begin(), p_.ansatz->unknowns.end(), o.name()) ==
                            p_.ansatz->unknowns.end())
                            p_.ansatz->unknowns.push_back(o.name());
                    break;
                }
                case StmtKind::Basis:
                    for (const auto& e : st.exprs) p_.basis.push_back(build(e));
                    break;
                case StmtKind::Expect:
                    p_.expects.emplace_back(build(st.lhs), st.rhs ? build(st.rhs) : Expr());
                    break;
                case StmtKind::Ode:
                    p_.side_odes.push_back(equation(st));
                    break;
                case StmtKind::Field: {
                    if (p_.vars.empty()) throw ParseError(st.loc, "vector field before variable declarations");
                    std::vector<std::string> vars = field_vars();
                    std::vector<Expr> xi(vars.size()), eta(p_.deps.size());
                    for (const auto& a : st.assigns) {
                        auto iv = std::find(vars.begin(), vars.end(), a.name);
                        auto id = std::find(p_.deps.begin(), p_.deps.end(), a.name);
                        if (iv != vars.end()) xi[static_cast<std::size_t>(iv - vars.begin())] = build(a.value);
                        else if (id != p_.deps.end()) eta[static_cast<std::size_t>(id - p_.deps.begin())] = build(a.value);
                        else throw ParseError(a.value->loc, "'" + a.name + "' is not a field coordinate");
                    }
                    try {
                        p_.fields.emplace_back(st.name, VectorField(vars, p_.deps, xi, eta));
                    } catch (const Error& e) {
                        throw ParseError(st.loc, e.what());
                    }
                    break;
                }
                case StmtKind::Solution:
                    if (std::find(p_.deps.begin(), p_.deps.end(), st.name) == p_.deps.end())
                        throw ParseError(st.loc, "'" + st.name + "' is not a dependent variable");
                    p_.solution[st.name] = build(st.lhs);
                    break;
                case StmtKind::Box:
                    for (const auto& r : st.ranges) {
                        if (std::find(p_.vars.begin(), p_.vars.end(), r.var) == p_.vars.end())
                            throw ParseError(st.loc, "'" + r.var + "' is not an independent variable");
                        p_.box.ranges[r.var] = {number(r.lo), number(r.hi)};
                    }
                    break;
                case StmtKind::Set:
                    for (const auto& a : st.assigns) {
                        if (std::find(p_.params.begin(), p_.params.end(), a.name) == p_.params.end())
                            throw ParseError(st.loc, "'" + a.name + "' is not a parameter");
                        p_.fixed[a.name] = number(a.value);
                    }
                    break;
                case StmtKind::Check:
                    for (const auto& c : st.names) {
                        if (std::find(commands.begin(), commands.end(), c) == commands.end() || c == "corpus") {
                            auto s = dsl::suggest(c, commands);
                            throw ParseError(st.loc, "unknown check '" + c + "'" + (s ? "; did you mean '" + *s + "'?" : ""));
                        }
                        p_.checks.push_back(c);
                    }
                    break;
                case StmtKind::Chain: {
                    auto chains = reduction_chains();
                    if (std::find(chains.begin(), chains.end(), st.name) == chains.end()) {
                        auto s = dsl::suggest(st.name, chains);
                        throw ParseError(st.loc, "unknown chain '" + st.name + "'" + (s ? "; did you mean '" + *s + "'?" : ""));
                    }
                    p_.chain = st.name;
                    break;
                }
                case StmtKind::Flag:
                    p_.flag = st.text;
                    break;
            }
        }
        int kinds = !evolve.empty() + static_cast<int>(hyper.has_value()) + !general.empty();
        if (kinds > 1) throw ParseError(sys_loc, "mixing evolve, hyper and general equations is not supported");
        try {
            if (!evolve.empty()) p_.system = evolution_system(time_, others(time_), evolve);
            if (hyper) {
                std::string t = hyper->first.index.counts().front().first;
                p_.system = hyperbolic_system(t, others(t), hyper->first.dep, hyper->second);
            }
            if (!general.empty()) p_.system = general_system(p_.vars.front(), others(p_.vars.front()), p_.deps, general);
        } catch (const Error& e) {
            throw ParseError(sys_loc, e.what());
        }
        if (tpl_stmt) {
            p_.tpl = make_template(*tpl_stmt, tpl_opts, coefs);
            p_.unknowns = tpl_stmt->names.empty() ? tpl_constants_ : expand_unknowns(*tpl_stmt, tpl_constants_);
            if (tpl_stmt->names.empty())
                std::erase_if(p_.unknowns, [&](const std::string& c) { return p_.constants.count(c) > 0; });
        } else if (!coefs.empty()) {
            throw ParseError(f.stmts.front().loc, "coef statements need a template");
        }
        return std::move(p_);
    }

private:
    Problem p_;
    std::set<std::string> names_;
    std::map<std::string, FuncInfo> funcs_;
    std::map<std::string, Expr> lets_;
    std::vector<std::string> tpl_constants_;
    std::string time_;

    void declare(Loc loc, const std::string& n, std::vector<std::string>& into) {
        static const std::set<std::string> reserved{"sin", "cos", "tan", "exp", "ln", "sqrt"};
        if (reserved.count(n) || names_.count(n)) throw ParseError(loc, "'" + n + "' is already declared");
        names_.insert(n);
        into.push_back(n);
    }

    std::vector<std::string> others(const std::string& t) const {
        std::vector<std::string> out;
        for (const auto& v : p_.vars)
            if (v != t) out.push_back(v);
        return out;
    }

    // coordinates of vector fields: the spatial variables of the system when
    // there is one, otherwise all variables
    std::vector<std::string> field_vars() const {
        if (!time_.empty()) return others(time_);
        if (p_.vars.size() > 1 && p_.vars.front() == "t") return others("t");
        return p_.vars;
    }

    double number(const AstPtr& a) {
        Expr e = build(a);
        if (!e.is_constant()) throw ParseError(a->loc, "expected a number");
        return e.constant_value().get_d();
    }

    Expr equation(const Stmt& st) { return st.rhs ? build(st.lhs) - build(st.rhs) : build(st.lhs); }

    JetVar lhs_jet(const Stmt& st, int order) {
        if (st.lhs->op != Op::Name) throw ParseError(st.lhs->loc, "left-hand side must be a derivative");
        JetVar j = jet_name(st.lhs->loc, st.lhs->text);
        const auto& c = j.index.counts();
        if (c.size() != 1 || c.front().second != order)
            throw ParseError(st.lhs->loc, "left-hand side must be a derivative of order " + std::to_string(order) +
                                              " in one variable");
        return j;
    }

    std::optional<DerivIndex> subscript(const std::string& s) const {
        std::vector<std::pair<std::string, int>> counts;
        std::size_t i = 0;
        while (i < s.size()) {
            std::string best;
            for (const auto& v : p_.vars)
                if (s.compare(i, v.size(), v) == 0 && v.size() > best.size()) best = v;
            if (best.empty()) return std::nullopt;
            counts.emplace_back(best, 1);
            i += best.size();
        }
        return DerivIndex(counts);
    }

    std::optional<JetVar> try_jet(const std::string& n) const {
        if (std::find(p_.deps.begin(), p_.deps.end(), n) != p_.deps.end()) return JetVar(n);
        auto us = n.find('_');
        if (us == std::string::npos) return std::nullopt;
        std::string dep = n.substr(0, us);
        if (std::find(p_.deps.begin(), p_.deps.end(), dep) == p_.deps.end()) return std::nullopt;
        auto idx = subscript(n.substr(us + 1));
        if (!idx) return std::nullopt;
        return JetVar(dep, *idx);
    }

    JetVar jet_name(Loc loc, const std::string& n) {
        auto j = try_jet(n);
        if (!j) throw ParseError(loc, "'" + n + "' is not a jet variable");
        return *j;
    }

    [[noreturn]] void undeclared(Loc loc, const std::string& n) const {
        std::vector<std::string> cands(names_.begin(), names_.end());
        auto s = dsl::suggest(n, cands);
        throw ParseError(loc, "undeclared symbol '" + n + "'" + (s ? "; did you mean '" + *s + "'?" : ""));
    }

    Expr name(const AstPtr& a) {
        const std::string& n = a->text;
        if (auto it = lets_.find(n); it != lets_.end()) return it->second;
        if (std::find(p_.vars.begin(), p_.vars.end(), n) != p_.vars.end()) return Expr::variable(n);
        if (std::find(p_.params.begin(), p_.params.end(), n) != p_.params.end()) return Expr::parameter(n);
        if (std::find(tpl_constants_.begin(), tpl_constants_.end(), n) != tpl_constants_.end())
            return Expr::parameter(n);
        if (auto j = try_jet(n)) return Expr::jet(*j);
        // g or g_pq for functions declared with named slots and default arguments
        auto us = n.find('_');
        std::string fname = n.substr(0, us);
        if (auto it = funcs_.find(fname); it != funcs_.end() && !it->second.at.empty()) {
            const FuncInfo& fi = it->second;
            std::vector<int> d(static_cast<std::size_t>(fi.arity), 0);
            if (us != std::string::npos) {
                std::string sub = n.substr(us + 1);
                std::size_t i = 0;
                while (i < sub.size()) {
                    std::size_t best = fi.slots.size(), len = 0;
                    for (std::size_t k = 0; k < fi.slots.size(); ++k)
                        if (sub.compare(i, fi.slots[k].size(), fi.slots[k]) == 0 && fi.slots[k].size() > len) {
                            best = k;
                            len = fi.slots[k].size();
                        }
                    if (best == fi.slots.size()) undeclared(a->loc, n);
                    ++d[best];
                    i += len;
                }
            }
            return opaque(fname, fi.at, d);
        }
        if (funcs_.count(n)) throw ParseError(a->loc, "function '" + n + "' needs arguments");
        undeclared(a->loc, n);
    }

    Expr call(const AstPtr& a) {
        std::vector<Expr> args;
        for (const auto& x : a->args) args.push_back(build(x));
        static const std::map<std::string, Expr (*)(const Expr&)> builtins{
            {"sin", [](const Expr& e) { return sin(e); }}, {"cos", [](const Expr& e) { return cos(e); }},
            {"tan", [](const Expr& e) { return tan(e); }}, {"exp", [](const Expr& e) { return exp(e); }},
            {"ln", [](const Expr& e) { return ln(e); }},   {"sqrt", [](const Expr& e) { return sqrt(e); }},
        };
        if (auto it = builtins.find(a->text); it != builtins.end()) {
            if (args.size() != 1 || !a->derivs.empty()) throw ParseError(a->loc, a->text + " takes one argument");
            return it->second(args[0]);
        }
        auto it = funcs_.find(a->text);
        if (it == funcs_.end()) undeclared(a->loc, a->text);
        const FuncInfo& fi = it->second;
        if (args.size() != static_cast<std::size_t>(fi.arity))
            throw ParseError(a->loc, a->text + " expects " + std::to_string(fi.arity) + " arguments");
        std::vector<int> d = a->derivs;
        if (d.empty()) d.assign(args.size(), 0);
        if (d.size() != args.size()) throw ParseError(a->loc, "derivative orders of " + a->text + " do not match its arity");
        return opaque(a->text, args, d);
    }

    Expr build(const AstPtr& a) {
        try {
            switch (a->op) {
                case Op::Num: return Expr(parse_number(a->text));
                case Op::Name: return name(a);
                case Op::Call: return call(a);
                case Op::Neg: return -build(a->args[0]);
                case Op::Add: return build(a->args[0]) + build(a->args[1]);
                case Op::Sub: return build(a->args[0]) - build(a->args[1]);
                case Op::Mul: return build(a->args[0]) * build(a->args[1]);
                case Op::Div: return build(a->args[0]) / build(a->args[1]);
                case Op::Pow: return pow(build(a->args[0]), build(a->args[1]));
                case Op::TotalDeriv: {
                    auto idx = subscript(a->text);
                    if (!idx) throw ParseError(a->loc, "'" + a->text + "' is not a derivative subscript");
                    return total_derivative(build(a->args[0]), *idx);
                }
            }
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(a->loc, e.what());
        }
        return Expr();
    }
};

}  // namespace

Problem elaborate(const dsl::ProblemFile& file) { return Elaborator().run(file); }

}  // namespace jetcas::cli
