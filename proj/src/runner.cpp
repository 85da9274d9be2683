#include <omp.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "jetcas/cli.hpp"
#include "json.hpp"

#ifndef JETCAS_CORPUS_DIR
#define JETCAS_CORPUS_DIR "corpus"
#endif

namespace jetcas::cli {

const std::vector<std::string> commands{"verify-lde", "solve-constants", "check-invariance", "check-involutive",
                                        "reduce",     "residual",        "corpus"};

const char* status_name(Status s) {
    switch (s) {
        case Status::Pass: return "pass";
        case Status::Fail: return "fail";
        case Status::FlaggedTypo: return "flagged-typo";
        case Status::Error: return "error";
    }
    return "?";
}

namespace {

std::set<std::string> function_names(const Problem& p) {
    std::set<std::string> out;
    for (const auto& [n, a] : p.funcs) out.insert(n);
    return out;
}

void need(bool ok, const std::string& what) {
    if (!ok) throw StructureError(what);
}

std::vector<Expr> slot_functions(const Problem& p) {
    need(p.system.has_value(), "no equation declared");
    need(p.tpl.has_value(), "no template declared");
    need(p.constraints.size() == p.tpl->slots(),
         "template expects " + std::to_string(p.tpl->slots()) + " constraint(s), file has " +
             std::to_string(p.constraints.size()));
    std::vector<Expr> hs;
    for (const auto& c : p.constraints) hs.push_back(c.h);
    return hs;
}

bool is_unknown_constant(const Problem& p, const Expr& lhs) {
    if (!lhs.is_atom() || lhs.as_atom().kind() != AtomKind::Parameter) return false;
    const auto& n = lhs.as_atom().name();
    return std::find(p.unknowns.begin(), p.unknowns.end(), n) != p.unknowns.end();
}

std::vector<Expr> expected_equations(const Problem& p) {
    std::vector<Expr> out;
    for (const auto& [lhs, rhs] : p.expects)
        if (!is_unknown_constant(p, lhs)) out.push_back(lhs - rhs);
    return out;
}

// every expected equation proportional to a derived one and vice versa
void match_sets(CheckReport& r, const std::vector<Expr>& derived, const std::vector<Expr>& expected,
                const std::set<std::string>& fns) {
    std::vector<bool> used(derived.size(), false);
    bool ok = true;
    for (const auto& e : expected) {
        bool hit = false;
        for (std::size_t j = 0; j < derived.size() && !hit; ++j)
            if (!used[j] && proportional(e, derived[j], fns)) used[j] = hit = true;
        if (!hit) {
            ok = false;
            r.lines.push_back("missing: " + e.str() + " = 0");
            r.residuals.push_back(e.str());
        }
    }
    for (std::size_t j = 0; j < derived.size(); ++j)
        if (!used[j]) {
            ok = false;
            r.lines.push_back("unexpected: " + derived[j].str() + " = 0");
        }
    if (!ok) r.status = Status::Fail;
}

void report_constants(CheckReport& r, const LinearSolveResult& s) {
    for (const auto& [k, v] : s.assignments) {
        if (std::find(s.free.begin(), s.free.end(), k) != s.free.end()) continue;
        r.constants[k] = v.str();
        r.lines.push_back(k + " = " + v.str());
    }
    for (const auto& f : s.free) r.lines.push_back(f + " free");
}

void check_expected_constants(CheckReport& r, const Problem& p, const std::map<std::string, Expr>& got) {
    for (const auto& [lhs, rhs] : p.expects) {
        if (!is_unknown_constant(p, lhs)) continue;
        const auto& n = lhs.as_atom().name();
        auto it = got.find(n);
        if (it == got.end() || !is_zero(it->second - rhs)) {
            r.status = Status::Fail;
            r.lines.push_back("expected " + n + " = " + rhs.str());
        }
    }
}

std::vector<Expr> defects(const Problem& p) {
    auto hs = slot_functions(p);
    auto ds = build_lde(*p.tpl, *p.system, hs);
    if (!p.constants.empty())
        for (auto& d : ds) d = substitute_parameters(d, p.constants);
    return ds;
}

CheckReport solve_constants_cmd(const Problem& p) {
    CheckReport r;
    r.status = Status::Pass;
    auto fns = function_names(p);
    std::set<std::string> used;
    for (const auto& c : p.constraints)
        for (const auto& o : opaque_atoms_in(c.h)) used.insert(o.name());
    if (!used.empty()) {
        auto cs = derive_coefficient_system(*p.tpl, *p.system, slot_functions(p), used);
        report_constants(r, cs.constants);
        if (cs.constants.status == SolveStatus::Inconsistent) {
            r.status = Status::Fail;
            r.lines.push_back("inconsistent: " + cs.constants.witness.str());
            r.residuals.push_back(cs.constants.witness.str());
            return r;
        }
        for (const auto& e : cs.equations) {
            r.equations.push_back(e.str() + " = 0");
            r.lines.push_back(e.str() + " = 0");
        }
        check_expected_constants(r, p, cs.constants.assignments);
        auto exp = expected_equations(p);
        if (!exp.empty()) match_sets(r, cs.equations, exp, used);
        return r;
    }
    auto s = solve_constants(defects(p), p.unknowns);
    if (s.status == SolveStatus::Inconsistent) {
        r.status = Status::Fail;
        r.lines.push_back("inconsistent: " + s.witness.str());
        r.residuals.push_back(s.witness.str());
        return r;
    }
    report_constants(r, s);
    check_expected_constants(r, p, s.assignments);
    return r;
}

CheckReport verify_lde_cmd(const Problem& p) {
    CheckReport r;
    auto hs = slot_functions(p);
    std::map<std::string, Expr> constants = p.constants;
    if (!p.unknowns.empty()) {
        auto s = solve_constants(defects(p), p.unknowns);
        if (s.status == SolveStatus::Inconsistent) {
            r.status = Status::Fail;
            r.lines.push_back("no constants: " + s.witness.str());
            r.residuals.push_back(s.witness.str());
            return r;
        }
        report_constants(r, s);
        for (const auto& [k, v] : s.assignments) constants[k] = v;
        for (const auto& f : s.free) constants.emplace(f, Expr());
    }
    auto v = verify_lde_solution(*p.tpl, *p.system, hs, constants);
    if (!p.side_odes.empty()) {
        std::vector<std::string> names;
        for (const auto& [n, a] : p.funcs) names.push_back(n);
        auto rules = solve_odes(p.side_odes, names);
        v.ok = true;
        for (auto& e : v.residuals) {
            e = clear_denominators(reduce_modulo_odes(e, rules));
            if (!is_zero(e)) v.ok = false;
        }
    }
    r.status = v.ok ? Status::Pass : Status::Fail;
    for (const auto& e : v.residuals)
        if (!is_zero(e)) {
            r.residuals.push_back(e.str());
            r.lines.push_back("residual: " + e.str());
        }
    return r;
}

CheckReport invariance_cmd(const Problem& p) {
    CheckReport r;
    need(p.system.has_value(), "no equation declared");
    need(!p.constraints.empty(), "no constraint declared");
    auto res = p.system->kind == SystemKind::Hyperbolic ? check_invariance_hyperbolic(*p.system, p.constraints)
                                                        : check_invariance(*p.system, p.constraints);
    r.status = res.ok ? Status::Pass : Status::Fail;
    if (p.system->kind == SystemKind::Hyperbolic) r.lines.push_back("second-order-in-time variant");
    for (const auto& e : res.residuals)
        if (!is_zero(e)) {
            r.residuals.push_back(e.str());
            r.lines.push_back("residual: " + e.str());
        }
    return r;
}

bool same_up_to_sign(const Expr& a, const Expr& b) { return is_zero(a - b) || is_zero(a + b); }

CheckReport involutive_cmd(const Problem& p) {
    CheckReport r;
    need(!p.fields.empty(), "no vector field declared");
    std::vector<VectorField> fs;
    for (const auto& [n, f] : p.fields) fs.push_back(f);
    r.status = Status::Pass;
    auto inv = check_involutive(fs);
    if (!inv.involutive) {
        r.status = Status::Fail;
        const auto& [i, j] = *inv.failing_pair;
        r.lines.push_back("[" + p.fields[static_cast<std::size_t>(i)].first + ", " +
                          p.fields[static_cast<std::size_t>(j)].first + "] leaves " + inv.witness.str());
        r.residuals.push_back(inv.witness.str());
        return r;
    }
    for (std::size_t i = 0; i < fs.size(); ++i)
        for (std::size_t j = i + 1; j < fs.size(); ++j) {
            std::string c;
            for (std::size_t k = 0; k < fs.size(); ++k)
                if (!is_zero(inv.c[i][j][k])) c += (c.empty() ? "" : " + ") + ("(" + inv.c[i][j][k].str() + ")*" + p.fields[k].first);
            r.lines.push_back("[" + p.fields[i].first + ", " + p.fields[j].first + "] = " + (c.empty() ? "0" : c));
        }
    if (fs.size() != fs.front().vars.size()) return r;
    auto M = manifold_from_fields(fs);
    std::vector<Expr> eqs;
    for (const auto& row : M.equations)
        for (const auto& e : row) {
            eqs.push_back(e);
            r.equations.push_back(e.str() + " = 0");
            r.lines.push_back("manifold: " + e.str() + " = 0");
        }
    auto cc = check_cross_compatibility(M);
    r.lines.push_back(std::string("cross-compatibility: ") + (cc.ok ? "ok" : "fails"));
    if (!cc.ok) {
        r.status = Status::Fail;
        for (const auto& e : cc.residuals) r.residuals.push_back(e.str());
    }
    if (!p.constraints.empty()) {
        for (const auto& c : p.constraints) {
            bool hit = std::any_of(eqs.begin(), eqs.end(), [&](const Expr& e) { return same_up_to_sign(e, c.h); });
            if (!hit) {
                r.status = Status::Fail;
                r.lines.push_back("constraint not produced: " + c.h.str());
            }
        }
    }
    if (p.system) {
        std::vector<Constraint> H;
        for (std::size_t k = 0; k < M.vars.size(); ++k)
            for (std::size_t j = 0; j < M.deps.size(); ++j)
                H.push_back({M.equations[k][j], JetVar(M.deps[j], DerivIndex({{M.vars[k], 1}}))});
        auto res = check_invariance(*p.system, H);
        r.lines.push_back(std::string("manifold invariant under the equation: ") + (res.ok ? "yes" : "no"));
        if (!res.ok) {
            r.status = Status::Fail;
            for (const auto& e : res.residuals) r.residuals.push_back(e.str());
        }
    }
    return r;
}

CheckReport reduce_cmd(const Problem& p) {
    CheckReport r;
    if (p.chain) {
        auto c = verify_reduction_chain(*p.chain);
        r.status = c.ok ? Status::Pass : Status::Fail;
        for (const auto& s : c.steps) {
            r.lines.push_back(std::string(s.ok ? "ok   " : "FAIL ") + s.description);
            if (!s.detail.empty() && (!s.ok || s.detail.rfind("flagged", 0) == 0)) r.lines.push_back("     " + s.detail);
            if (!s.ok) r.residuals.push_back(s.detail);
        }
        return r;
    }
    need(p.system.has_value(), "no equation declared");
    need(p.ansatz.has_value(), "no ansatz declared");
    r.status = Status::Pass;
    for (const auto& c : p.constraints) {
        Expr e = substitute_ansatz(c.h, *p.ansatz);
        if (!is_zero(e)) {
            r.status = Status::Fail;
            r.lines.push_back("ansatz violates constraint: " + e.str());
            r.residuals.push_back(e.str());
        }
    }
    auto residuals = substitute_ansatz(*p.system, *p.ansatz);
    auto expected = expected_equations(p);
    std::set<std::string> fns(p.ansatz->unknowns.begin(), p.ansatz->unknowns.end());
    if (p.basis.empty()) {
        std::vector<Expr> nonzero;
        for (const auto& e : residuals)
            if (!is_zero(e)) nonzero.push_back(e);
        for (const auto& e : nonzero) {
            r.equations.push_back(e.str() + " = 0");
            r.lines.push_back(e.str() + " = 0");
        }
        match_sets(r, nonzero, expected, fns);
        return r;
    }
    auto sys = extract_ode_system(residuals, p.basis, p.ansatz->unknowns);
    for (const auto& e : sys.equations) {
        r.equations.push_back(e.str() + " = 0");
        r.lines.push_back(e.str() + " = 0");
    }
    if (!expected.empty()) {
        auto m = match_odes(sys, expected);
        if (!m.ok) r.status = Status::Fail;
        for (const auto& e : m.missing) {
            r.lines.push_back("missing: " + e.str() + " = 0");
            r.residuals.push_back(e.str());
        }
        for (const auto& e : m.unexpected) r.lines.push_back("unexpected: " + e.str() + " = 0");
    }
    return r;
}

CheckReport residual_cmd(const Problem& p, const Options& opt) {
    CheckReport r;
    need(!p.solution.empty(), "no solution declared");
    need(!p.box.ranges.empty(), "no sampling box declared");
    Ansatz an;
    an.solution = p.solution;
    std::vector<Expr> exprs;
    if (p.system)
        for (const auto& e : substitute_ansatz(*p.system, an)) exprs.push_back(e);
    for (const auto& c : p.constraints) exprs.push_back(substitute_ansatz(c.h, an));
    need(!exprs.empty(), "nothing to evaluate");
    for (const auto& v : p.box.ranges) (void)v;
    for (const auto& e : exprs)
        for (const auto& l : e.leaves()) {
            bool known = (l.kind() == AtomKind::Variable && p.box.ranges.count(l.name())) ||
                         (l.kind() == AtomKind::Parameter && p.fixed.count(l.name()));
            need(known, "no value for " + l.str() + " (add it to box or set)");
        }
    auto res = numeric_residual(exprs, p.box, opt.samples, opt.seed, p.fixed);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", res.max_abs);
    r.lines.push_back("max |residual| = " + std::string(buf) + " over " + std::to_string(res.samples) + " points");
    if (res.rejected > 0) r.lines.push_back(std::to_string(res.rejected) + " points redrawn");
    r.status = res.max_abs <= opt.tol ? Status::Pass : Status::Fail;
    if (r.status == Status::Fail) r.residuals.push_back(buf);
    return r;
}

CheckReport dispatch(const std::string& cmd, const Problem& p, const Options& opt) {
    if (cmd == "solve-constants") return solve_constants_cmd(p);
    if (cmd == "verify-lde") return verify_lde_cmd(p);
    if (cmd == "check-invariance") return invariance_cmd(p);
    if (cmd == "check-involutive") return involutive_cmd(p);
    if (cmd == "reduce") return reduce_cmd(p);
    if (cmd == "residual") return residual_cmd(p, opt);
    throw StructureError("unknown command " + cmd);
}

// g^(0,0,0,1,1)(x, y, z, z_x, z_y) -> g_pq for slot functions
std::string tidy(const Problem& p, std::string s) {
    for (const auto& [name, info] : p.slot_display) {
        const auto& [slots, args] = info;
        std::string out;
        std::size_t i = 0;
        while (i < s.size()) {
            bool boundary = i == 0 || !(std::isalnum(static_cast<unsigned char>(s[i - 1])) || s[i - 1] == '_');
            if (!boundary || s.compare(i, name.size(), name) != 0) {
                out += s[i++];
                continue;
            }
            std::size_t j = i + name.size();
            std::string sub;
            if (j < s.size() && s[j] == '^') {
                std::size_t close = s.find(')', j);
                if (close == std::string::npos || s[j + 1] != '(') {
                    out += s[i++];
                    continue;
                }
                std::vector<int> counts;
                std::stringstream ss(s.substr(j + 2, close - j - 2));
                std::string item;
                while (std::getline(ss, item, ',')) counts.push_back(std::stoi(item));
                if (counts.size() != slots.size()) {
                    out += s[i++];
                    continue;
                }
                for (std::size_t k = 0; k < counts.size(); ++k)
                    for (int c = 0; c < counts[k]; ++c) sub += slots[k];
                j = close + 1;
            }
            if (s.compare(j, args.size(), args) != 0) {
                out += s[i++];
                continue;
            }
            out += name + (sub.empty() ? "" : "_" + sub);
            i = j + args.size();
        }
        s = out;
    }
    return s;
}

void tidy(const Problem& p, CheckReport& r) {
    for (auto& l : r.lines) l = tidy(p, l);
    for (auto& l : r.equations) l = tidy(p, l);
    for (auto& l : r.residuals) l = tidy(p, l);
    for (auto& [k, v] : r.constants) v = tidy(p, v);
}

CheckReport timed(const std::string& cmd, const Problem& p, const Options& opt) {
    auto start = std::chrono::steady_clock::now();
    CheckReport r;
    try {
        r = dispatch(cmd, p, opt);
    } catch (const Error& e) {
        r = CheckReport{};
        r.status = Status::Error;
        r.lines.push_back(e.what());
    }
    tidy(p, r);
    r.command = cmd;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (p.flag && r.status == Status::Fail) {
        r.status = Status::FlaggedTypo;
        r.lines.push_back("flagged: " + *p.flag);
    }
    return r;
}

Report with_problem(const dsl::ProblemFile& file, const std::function<void(const Problem&, Report&)>& body) {
    Report rep;
    rep.case_id = file.case_id;
    rep.anchor = file.anchor;
    try {
        Problem p = elaborate(file);
        body(p, rep);
    } catch (const dsl::ParseError& e) {
        rep.input_error = true;
        rep.error = e.what();
    }
    return rep;
}

}  // namespace

Report run(const std::string& command, const dsl::ProblemFile& file, const Options& opt) {
    return with_problem(file, [&](const Problem& p, Report& rep) { rep.checks.push_back(timed(command, p, opt)); });
}

Report run_case(const dsl::ProblemFile& file, const Options& opt) {
    return with_problem(file, [&](const Problem& p, Report& rep) {
        if (p.checks.empty()) {
            rep.input_error = true;
            rep.error = "case has no check directive";
        }
        for (const auto& c : p.checks) rep.checks.push_back(timed(c, p, opt));
    });
}

Report load_error(const std::string& file, const std::string& message) {
    Report r;
    r.file = file;
    r.input_error = true;
    r.error = message;
    return r;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string render(const std::vector<Report>& reports, const Options& opt) {
    if (opt.structured) {
        nlohmann::ordered_json doc = nlohmann::ordered_json::array();
        for (const auto& r : reports) {
            nlohmann::ordered_json c;
            c["case"] = r.case_id;
            c["anchor"] = r.anchor;
            if (!r.file.empty()) c["file"] = r.file;
            if (r.input_error) {
                c["status"] = "input-error";
                c["error"] = r.error;
            }
            c["checks"] = nlohmann::ordered_json::array();
            for (const auto& k : r.checks) {
                nlohmann::ordered_json j;
                j["command"] = k.command;
                j["status"] = status_name(k.status);
                j["constants"] = k.constants;
                j["equations"] = k.equations;
                j["residual"] = k.residuals;
                j["detail"] = k.lines;
                if (opt.timing) j["seconds"] = k.seconds;
                c["checks"].push_back(j);
            }
            doc.push_back(c);
        }
        return doc.dump(2) + "\n";
    }
    std::string out;
    for (const auto& r : reports) {
        std::string name = !r.case_id.empty() ? r.case_id : r.file;
        if (r.input_error) {
            out += "input-error " + name + ": " + r.error + "\n";
            continue;
        }
        for (const auto& k : r.checks) {
            out += std::string(status_name(k.status)) + " " + name + " " + k.command;
            if (opt.timing) {
                char buf[32];
                std::snprintf(buf, sizeof buf, " (%.2fs)", k.seconds);
                out += buf;
            }
            out += "\n";
            for (const auto& l : k.lines) out += "  " + l + "\n";
        }
    }
    return out;
}

int exit_code(const std::vector<Report>& reports) {
    bool failed = false;
    for (const auto& r : reports) {
        if (r.input_error) return 2;
        for (const auto& k : r.checks)
            if (k.status == Status::Fail || k.status == Status::Error) failed = true;
    }
    return failed ? 1 : 0;
}

std::string default_corpus_dir() { return JETCAS_CORPUS_DIR; }

std::vector<CorpusEntry> list_corpus(const std::string& dir) {
    std::vector<CorpusEntry> out;
    if (!std::filesystem::is_directory(dir)) throw Error("corpus directory not found: " + dir);
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.path().extension() != ".prob") continue;
        CorpusEntry c;
        c.path = e.path().string();
        auto f = dsl::parse(read_file(c.path));
        c.id = f.case_id.empty() ? e.path().stem().string() : f.case_id;
        c.anchor = f.anchor;
        out.push_back(c);
    }
    std::sort(out.begin(), out.end(), [](const CorpusEntry& a, const CorpusEntry& b) { return a.id < b.id; });
    return out;
}

std::vector<Report> run_corpus(const std::vector<CorpusEntry>& cases, const Options& opt) {
    std::vector<Report> out(cases.size());
    long n = static_cast<long>(cases.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        const auto& c = cases[static_cast<std::size_t>(i)];
        Report r;
        try {
            r = run_case(dsl::parse(read_file(c.path)), opt);
        } catch (const Error& e) {
            r = load_error(c.path, e.what());
        }
        if (r.case_id.empty()) r.case_id = c.id;
        out[static_cast<std::size_t>(i)] = std::move(r);
    }
    return out;
}

}  // namespace jetcas::cli
