#include "jetcas/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace jetcas::dsl {

namespace {

enum class Tok { Ident, Number, String, Punct, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    Loc loc;
    bool space_before = false;
};

std::vector<Token> lex(const std::string& src, ProblemFile& meta) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    bool space = true;
    auto advance = [&](std::size_t n = 1) {
        for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance();
            space = true;
            continue;
        }
        if (c == '#') {
            std::size_t end = src.find('\n', i);
            std::string body = src.substr(i + 1, end == std::string::npos ? std::string::npos : end - i - 1);
            auto header = [&](const char* key, std::string& field) {
                std::string k = std::string(" ") + key + ":";
                if (body.rfind(k, 0) == 0 && field.empty()) {
                    field = body.substr(k.size());
                    field.erase(0, field.find_first_not_of(' '));
                    while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back()))) field.pop_back();
                }
            };
            header("case", meta.case_id);
            header("anchor", meta.anchor);
            advance(body.size() + 1);
            space = true;
            continue;
        }
        Token t;
        t.loc = {line, col};
        t.space_before = space;
        space = false;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
            t.kind = Tok::Ident;
            t.text = src.substr(i, j - i);
        } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                   (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            std::size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            if (j + 1 < src.size() && src[j] == '.' && std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
                ++j;
                while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            }
            t.kind = Tok::Number;
            t.text = src.substr(i, j - i);
        } else if (c == '"') {
            std::size_t j = i + 1;
            while (j < src.size() && src[j] != '"' && src[j] != '\n') ++j;
            if (j >= src.size() || src[j] != '"') throw ParseError(t.loc, "unterminated string");
            t.kind = Tok::String;
            t.text = src.substr(i + 1, j - i - 1);
            ++j;
            advance(j - i);
            out.push_back(t);
            continue;
        } else if (c == '.' && i + 1 < src.size() && src[i + 1] == '.') {
            t.kind = Tok::Punct;
            t.text = "..";
        } else if (std::string("+-*/^()[],;=:'").find(c) != std::string::npos) {
            t.kind = Tok::Punct;
            t.text = std::string(1, c);
        } else {
            throw ParseError(t.loc, std::string("unexpected character '") + c + "'");
        }
        advance(t.text.size());
        out.push_back(t);
    }
    Token end;
    end.loc = {line, col};
    out.push_back(end);
    return out;
}

AstPtr node(Op op, Loc loc, std::string text = {}, std::vector<AstPtr> args = {}) {
    auto a = std::make_shared<Ast>();
    a->op = op;
    a->loc = loc;
    a->text = std::move(text);
    a->args = std::move(args);
    return a;
}

const std::map<std::string, StmtKind>& keywords() {
    static const std::map<std::string, StmtKind> k{
        {"vars", StmtKind::Vars},         {"dep", StmtKind::Dep},           {"param", StmtKind::Param},
        {"func", StmtKind::Func},         {"let", StmtKind::Let},           {"evolve", StmtKind::Evolve},
        {"hyper", StmtKind::Hyper},       {"general", StmtKind::General},   {"constraint", StmtKind::Constraint},
        {"template", StmtKind::Template}, {"constants", StmtKind::Constants}, {"coef", StmtKind::Coef},
        {"ansatz", StmtKind::Ansatz},     {"basis", StmtKind::Basis},       {"expect", StmtKind::Expect},
        {"ode", StmtKind::Ode},           {"field", StmtKind::Field},       {"solution", StmtKind::Solution},
        {"box", StmtKind::Box},           {"set", StmtKind::Set},           {"check", StmtKind::Check},
        {"chain", StmtKind::Chain},       {"flag", StmtKind::Flag},
    };
    return k;
}

std::string keyword_of(StmtKind kind) {
    for (const auto& [k, v] : keywords())
        if (v == kind) return k;
    return "?";
}

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    std::vector<Stmt> statements() {
        std::vector<Stmt> out;
        while (peek().kind != Tok::End) out.push_back(statement());
        return out;
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;

    const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
    bool at(const char* p) const { return peek().kind == Tok::Punct && peek().text == p; }
    bool at_word(const char* w) const { return peek().kind == Tok::Ident && peek().text == w; }

    [[noreturn]] void fail(const Token& t, const std::string& what) const {
        std::string got = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
        throw ParseError(t.loc, "expected " + what + ", got " + got);
    }

    void expect(const char* p) {
        if (!at(p)) fail(peek(), std::string("'") + p + "'");
        next();
    }

    std::string ident(const char* what = "identifier") {
        if (peek().kind != Tok::Ident) fail(peek(), what);
        return next().text;
    }

    // hyphenated words such as solve-constants or gt-painleve2
    std::string word() {
        std::string w = ident("name");
        while (at("-") && !peek().space_before && peek(1).kind == Tok::Ident && !peek(1).space_before) {
            next();
            w += "-" + next().text;
        }
        return w;
    }

    int integer() {
        if (peek().kind != Tok::Number || peek().text.find('.') != std::string::npos) fail(peek(), "integer");
        return std::stoi(next().text);
    }

    Stmt statement() {
        const Token& kw = peek();
        if (kw.kind != Tok::Ident) fail(kw, "statement keyword");
        auto it = keywords().find(kw.text);
        if (it == keywords().end()) {
            std::vector<std::string> all;
            for (const auto& [k, v] : keywords()) all.push_back(k);
            auto s = suggest(kw.text, all);
            throw ParseError(kw.loc, "unknown statement '" + kw.text + "'" + (s ? "; did you mean '" + *s + "'?" : ""));
        }
        next();
        Stmt st;
        st.kind = it->second;
        st.loc = kw.loc;
        switch (st.kind) {
            case StmtKind::Vars:
            case StmtKind::Dep:
            case StmtKind::Param:
                do st.names.push_back(ident());
                while (peek().kind == Tok::Ident);
                break;
            case StmtKind::Func:
                do st.funcs.push_back(func_decl());
                while (at(",") && (next(), true));
                break;
            case StmtKind::Let:
            case StmtKind::Ansatz:
            case StmtKind::Solution:
                st.name = ident();
                expect("=");
                st.lhs = expr();
                break;
            case StmtKind::Evolve:
            case StmtKind::Hyper:
                st.lhs = expr();
                expect("=");
                st.rhs = expr();
                break;
            case StmtKind::General:
            case StmtKind::Constraint:
            case StmtKind::Expect:
            case StmtKind::Ode:
                st.lhs = expr();
                if (at("=")) {
                    next();
                    st.rhs = expr();
                }
                if (at_word("lead")) {
                    next();
                    st.lead = ident("jet variable");
                } else if (st.kind == StmtKind::General) {
                    fail(peek(), "'lead'");
                }
                break;
            case StmtKind::Template:
                st.name = ident("template name");
                if (at("(")) {
                    next();
                    if (!at(")")) {
                        do st.assigns.push_back(assign());
                        while (at(",") && (next(), true));
                    }
                    expect(")");
                }
                if (at_word("unknowns")) {
                    next();
                    name_list(st.names);
                }
                break;
            case StmtKind::Constants:
            case StmtKind::Coef:
            case StmtKind::Set:
                do st.assigns.push_back(assign());
                while (at(",") && (next(), true));
                break;
            case StmtKind::Basis:
                do st.exprs.push_back(expr());
                while (at(",") && (next(), true));
                break;
            case StmtKind::Field:
                st.name = ident();
                expect("=");
                expect("[");
                do {
                    Assign a;
                    a.name = ident("variable");
                    expect(":");
                    a.value = expr();
                    st.assigns.push_back(a);
                } while (at(",") && (next(), true));
                expect("]");
                break;
            case StmtKind::Box:
                do {
                    Interval r;
                    r.var = ident("variable");
                    if (!at_word("in")) fail(peek(), "'in'");
                    next();
                    expect("[");
                    r.lo = expr();
                    expect(",");
                    r.hi = expr();
                    expect("]");
                    st.ranges.push_back(r);
                } while (at(",") && (next(), true));
                break;
            case StmtKind::Check:
                do st.names.push_back(word());
                while (peek().kind == Tok::Ident);
                break;
            case StmtKind::Chain:
                st.name = word();
                break;
            case StmtKind::Flag:
                st.name = ident("flag kind");
                if (peek().kind != Tok::String) fail(peek(), "string");
                st.text = next().text;
                break;
        }
        expect(";");
        return st;
    }

    FuncDecl func_decl() {
        FuncDecl f;
        f.name = ident("function name");
        expect("(");
        if (peek().kind == Tok::Number) {
            f.arity = integer();
        } else {
            do f.slots.push_back(ident("slot name"));
            while (at(",") && (next(), true));
            f.arity = static_cast<int>(f.slots.size());
        }
        expect(")");
        if (at_word("at")) {
            next();
            expect("(");
            do f.at.push_back(expr());
            while (at(",") && (next(), true));
            expect(")");
        }
        return f;
    }

    Assign assign() {
        Assign a;
        a.name = ident();
        expect("=");
        a.value = expr();
        return a;
    }

    void name_list(std::vector<std::string>& out) {
        while (peek().kind == Tok::Ident) {
            std::string n = next().text;
            if (at("..")) {
                next();
                n += ".." + ident();
            }
            out.push_back(n);
            if (at(",")) next();
        }
    }

    AstPtr expr() {
        AstPtr lhs = term();
        while (at("+") || at("-")) {
            const Token& t = next();
            lhs = node(t.text == "+" ? Op::Add : Op::Sub, t.loc, {}, {lhs, term()});
        }
        return lhs;
    }

    AstPtr term() {
        AstPtr lhs = unary();
        while (at("*") || at("/")) {
            const Token& t = next();
            lhs = node(t.text == "*" ? Op::Mul : Op::Div, t.loc, {}, {lhs, unary()});
        }
        return lhs;
    }

    AstPtr unary() {
        if (at("-")) {
            const Token& t = next();
            return node(Op::Neg, t.loc, {}, {unary()});
        }
        return power();
    }

    AstPtr power() {
        AstPtr base = postfix();
        if (at("^")) {
            const Token& t = next();
            return node(Op::Pow, t.loc, {}, {base, unary()});
        }
        return base;
    }

    AstPtr postfix() {
        bool paren = at("(");
        AstPtr e = primary();
        while (paren && peek().kind == Tok::Ident && !peek().space_before && peek().text.size() > 1 &&
               peek().text[0] == '_') {
            const Token& t = next();
            e = node(Op::TotalDeriv, t.loc, t.text.substr(1), {e});
        }
        return e;
    }

    AstPtr primary() {
        const Token& t = peek();
        if (t.kind == Tok::Number) {
            next();
            return node(Op::Num, t.loc, t.text);
        }
        if (at("(")) {
            next();
            AstPtr e = expr();
            expect(")");
            return e;
        }
        if (t.kind != Tok::Ident) fail(t, "expression");
        next();
        int primes = 0;
        while (at("'") && !peek().space_before) {
            next();
            ++primes;
        }
        std::vector<int> derivs;
        bool bracket = false;
        if (primes == 0 && at("[") && !peek().space_before) {
            next();
            bracket = true;
            do derivs.push_back(integer());
            while (at(",") && (next(), true));
            expect("]");
        }
        if (!at("(")) {
            if (primes > 0 || bracket) fail(peek(), "'(' after derivative of " + t.text);
            return node(Op::Name, t.loc, t.text);
        }
        next();
        std::vector<AstPtr> args;
        if (!at(")")) {
            do args.push_back(expr());
            while (at(",") && (next(), true));
        }
        expect(")");
        auto call = std::make_shared<Ast>();
        call->op = Op::Call;
        call->loc = t.loc;
        call->text = t.text;
        call->args = std::move(args);
        call->bracket = bracket;
        if (primes > 0) call->derivs = {primes};
        else call->derivs = std::move(derivs);
        return call;
    }
};

int prec(Op op) {
    switch (op) {
        case Op::Add:
        case Op::Sub: return 1;
        case Op::Mul:
        case Op::Div: return 2;
        case Op::Neg: return 3;
        case Op::Pow: return 4;
        default: return 5;
    }
}

std::string wrap(const AstPtr& e, int need) {
    std::string s = print_expr(e);
    return prec(e->op) < need ? "(" + s + ")" : s;
}

std::string join(const std::vector<std::string>& v, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
    return out;
}

std::string exprs(const std::vector<AstPtr>& v) {
    std::vector<std::string> s;
    for (const auto& e : v) s.push_back(print_expr(e));
    return join(s, ", ");
}

std::string assigns(const std::vector<Assign>& v, const char* sep) {
    std::vector<std::string> s;
    for (const auto& a : v) s.push_back(a.name + sep + print_expr(a.value));
    return join(s, ", ");
}

bool same(const std::vector<AstPtr>& a, const std::vector<AstPtr>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!ast_equal(a[i], b[i])) return false;
    return true;
}

}  // namespace

std::string print_expr(const AstPtr& e) {
    switch (e->op) {
        case Op::Num:
        case Op::Name: return e->text;
        case Op::Call: {
            std::string d;
            if (e->bracket) {
                std::vector<std::string> s;
                for (int k : e->derivs) s.push_back(std::to_string(k));
                d = "[" + join(s, ",") + "]";
            } else if (!e->derivs.empty()) {
                d = std::string(static_cast<std::size_t>(e->derivs[0]), '\'');
            }
            return e->text + d + "(" + exprs(e->args) + ")";
        }
        case Op::Neg: return "-" + wrap(e->args[0], 3);
        case Op::Add: return print_expr(e->args[0]) + " + " + wrap(e->args[1], 1);
        case Op::Sub: return print_expr(e->args[0]) + " - " + wrap(e->args[1], 2);
        case Op::Mul: return wrap(e->args[0], 2) + "*" + wrap(e->args[1], 3);
        case Op::Div: return wrap(e->args[0], 2) + "/" + wrap(e->args[1], 3);
        case Op::Pow: return wrap(e->args[0], 5) + "^" + wrap(e->args[1], 3);
        case Op::TotalDeriv: return "(" + print_expr(e->args[0]) + ")_" + e->text;
    }
    return "?";
}

bool ast_equal(const AstPtr& a, const AstPtr& b) {
    if (!a || !b) return !a && !b;
    return a->op == b->op && a->text == b->text && a->derivs == b->derivs && a->bracket == b->bracket &&
           same(a->args, b->args);
}

ProblemFile parse(const std::string& text) {
    ProblemFile f;
    Parser p(lex(text, f));
    f.stmts = p.statements();
    return f;
}

std::string print(const ProblemFile& f) {
    std::string out;
    if (!f.case_id.empty()) out += "# case: " + f.case_id + "\n";
    if (!f.anchor.empty()) out += "# anchor: " + f.anchor + "\n";
    for (const auto& s : f.stmts) {
        std::string line = keyword_of(s.kind);
        auto eq = [&] {
            std::string r = " " + print_expr(s.lhs);
            if (s.rhs) r += " = " + print_expr(s.rhs);
            if (!s.lead.empty()) r += " lead " + s.lead;
            return r;
        };
        switch (s.kind) {
            case StmtKind::Vars:
            case StmtKind::Dep:
            case StmtKind::Param:
            case StmtKind::Check: line += " " + join(s.names, " "); break;
            case StmtKind::Func: {
                std::vector<std::string> parts;
                for (const auto& fd : s.funcs) {
                    std::string d = fd.name + "(" + (fd.slots.empty() ? std::to_string(fd.arity) : join(fd.slots, ", ")) + ")";
                    if (!fd.at.empty()) d += " at (" + exprs(fd.at) + ")";
                    parts.push_back(d);
                }
                line += " " + join(parts, ", ");
                break;
            }
            case StmtKind::Let:
            case StmtKind::Ansatz:
            case StmtKind::Solution: line += " " + s.name + " = " + print_expr(s.lhs); break;
            case StmtKind::Evolve:
            case StmtKind::Hyper:
            case StmtKind::General:
            case StmtKind::Constraint:
            case StmtKind::Expect:
            case StmtKind::Ode: line += eq(); break;
            case StmtKind::Template:
                line += " " + s.name;
                if (!s.assigns.empty()) line += "(" + assigns(s.assigns, "=") + ")";
                if (!s.names.empty()) line += " unknowns " + join(s.names, " ");
                break;
            case StmtKind::Constants:
            case StmtKind::Coef:
            case StmtKind::Set: line += " " + assigns(s.assigns, " = "); break;
            case StmtKind::Basis: line += " " + exprs(s.exprs); break;
            case StmtKind::Field: line += " " + s.name + " = [" + assigns(s.assigns, ": ") + "]"; break;
            case StmtKind::Box: {
                std::vector<std::string> parts;
                for (const auto& r : s.ranges)
                    parts.push_back(r.var + " in [" + print_expr(r.lo) + ", " + print_expr(r.hi) + "]");
                line += " " + join(parts, ", ");
                break;
            }
            case StmtKind::Chain: line += " " + s.name; break;
            case StmtKind::Flag: line += " " + s.name + " \"" + s.text + "\""; break;
        }
        out += line + ";\n";
    }
    return out;
}

bool ast_equal(const ProblemFile& a, const ProblemFile& b) {
    if (a.case_id != b.case_id || a.anchor != b.anchor || a.stmts.size() != b.stmts.size()) return false;
    for (std::size_t i = 0; i < a.stmts.size(); ++i) {
        const Stmt& x = a.stmts[i];
        const Stmt& y = b.stmts[i];
        if (x.kind != y.kind || x.names != y.names || x.name != y.name || x.lead != y.lead || x.text != y.text ||
            !ast_equal(x.lhs, y.lhs) || !ast_equal(x.rhs, y.rhs) || !same(x.exprs, y.exprs) ||
            x.funcs.size() != y.funcs.size() || x.assigns.size() != y.assigns.size() || x.ranges.size() != y.ranges.size())
            return false;
        for (std::size_t k = 0; k < x.funcs.size(); ++k)
            if (x.funcs[k].name != y.funcs[k].name || x.funcs[k].arity != y.funcs[k].arity ||
                x.funcs[k].slots != y.funcs[k].slots || !same(x.funcs[k].at, y.funcs[k].at))
                return false;
        for (std::size_t k = 0; k < x.assigns.size(); ++k)
            if (x.assigns[k].name != y.assigns[k].name || !ast_equal(x.assigns[k].value, y.assigns[k].value)) return false;
        for (std::size_t k = 0; k < x.ranges.size(); ++k)
            if (x.ranges[k].var != y.ranges[k].var || !ast_equal(x.ranges[k].lo, y.ranges[k].lo) ||
                !ast_equal(x.ranges[k].hi, y.ranges[k].hi))
                return false;
    }
    return true;
}

std::optional<std::string> suggest(const std::string& name, const std::vector<std::string>& candidates) {
    std::optional<std::string> best;
    std::size_t best_d = std::max<std::size_t>(2, name.size() / 3) + 1;
    for (const auto& c : candidates) {
        std::vector<std::size_t> row(c.size() + 1);
        for (std::size_t j = 0; j <= c.size(); ++j) row[j] = j;
        for (std::size_t i = 1; i <= name.size(); ++i) {
            std::size_t diag = row[0];
            row[0] = i;
            for (std::size_t j = 1; j <= c.size(); ++j) {
                std::size_t up = row[j];
                row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (name[i - 1] == c[j - 1] ? 0 : 1)});
                diag = up;
            }
        }
        if (row[c.size()] < best_d) {
            best_d = row[c.size()];
            best = c;
        }
    }
    return best;
}

}  // namespace jetcas::dsl
