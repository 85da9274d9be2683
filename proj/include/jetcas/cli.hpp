#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jetcas/distrib.hpp"
#include "jetcas/dsl.hpp"
#include "jetcas/reduce.hpp"

namespace jetcas::cli {

/// A problem file with every expression resolved against its declarations.
struct Problem {
    std::string case_id, anchor;
    std::vector<std::string> vars, deps, params;
    std::map<std::string, int> funcs;  // name -> arity
    // slot functions g(x, y, z, p, q) at (...): slot names and printed default arguments
    std::map<std::string, std::pair<std::vector<std::string>, std::string>> slot_display;

    std::optional<PdeSystem> system;
    std::vector<Constraint> constraints;
    std::vector<dsl::Loc> constraint_locs;

    std::optional<DetEqTemplate> tpl;
    std::vector<std::string> unknowns;
    std::map<std::string, Expr> constants;

    std::vector<Expr> side_odes;
    std::optional<Ansatz> ansatz;
    std::vector<Expr> basis;
    std::vector<std::pair<Expr, Expr>> expects;  // lhs, rhs
    std::vector<std::pair<std::string, VectorField>> fields;

    std::map<std::string, Expr> solution;
    Box box;
    std::map<std::string, double> fixed;

    std::vector<std::string> checks;
    std::optional<std::string> chain;
    std::optional<std::string> flag;
};

/// Resolves names, builds the system and the template. Errors are ParseError
/// with the location of the offending statement or symbol.
Problem elaborate(const dsl::ProblemFile& file);

struct Options {
    std::uint64_t seed = 0;
    double tol = 1e-8;
    int samples = 100;
    bool structured = false;
    bool timing = false;
};

enum class Status { Pass, Fail, FlaggedTypo, Error };
const char* status_name(Status s);

struct CheckReport {
    std::string command;
    Status status = Status::Fail;
    std::vector<std::string> lines;                // human-readable detail
    std::map<std::string, std::string> constants;  // solved constants
    std::vector<std::string> equations;            // derived ODEs / coefficient equations
    std::vector<std::string> residuals;            // nonzero residuals on failure
    double seconds = 0;
};

struct Report {
    std::string case_id, anchor, file;
    bool input_error = false;
    std::string error;
    std::vector<CheckReport> checks;
};

extern const std::vector<std::string> commands;

/// Runs one command on a parsed file.
Report run(const std::string& command, const dsl::ProblemFile& file, const Options& opt);
/// Runs every check directive of a file.
Report run_case(const dsl::ProblemFile& file, const Options& opt);

std::string render(const std::vector<Report>& reports, const Options& opt);
int exit_code(const std::vector<Report>& reports);

struct CorpusEntry {
    std::string id, anchor, path;
};

std::string default_corpus_dir();
/// Corpus files (*.prob) of a directory, sorted by case id.
std::vector<CorpusEntry> list_corpus(const std::string& dir);
/// Runs the cases concurrently; the result is ordered as the input.
std::vector<Report> run_corpus(const std::vector<CorpusEntry>& cases, const Options& opt);

Report load_error(const std::string& file, const std::string& message);
std::string read_file(const std::string& path);

}  // namespace jetcas::cli
