#include <cstring>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "jetcas/cli.hpp"

namespace cli = jetcas::cli;

namespace {

std::string locate(const std::string& file) {
    if (std::filesystem::exists(file)) return file;
    auto in_corpus = std::filesystem::path(cli::default_corpus_dir()) / file;
    if (std::filesystem::exists(in_corpus)) return in_corpus.string();
    return file;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<char*> args(argv, argv + argc);
    if (args.size() > 1 && std::strcmp(args[1], "run") == 0) args.erase(args.begin() + 1);

    CLI::App app{"jet-space determining equations, invariance and reductions"};
    app.require_subcommand(1);

    cli::Options opt;
    std::string format = "text";
    std::string corpus_dir = cli::default_corpus_dir();
    app.add_option("--seed", opt.seed, "seed for numeric sampling")->capture_default_str();
    app.add_option("--tol", opt.tol, "tolerance for numeric residuals")->capture_default_str();
    app.add_option("--samples", opt.samples, "number of sample points")->capture_default_str();
    app.add_option("--format", format, "report format")->check(CLI::IsMember({"text", "structured"}))->capture_default_str();
    app.add_flag("--timing", opt.timing, "include timings in the report");
    app.add_option("--corpus-dir", corpus_dir, "directory of *.prob cases");

    std::map<std::string, std::string> files;
    for (const auto& c : cli::commands) {
        if (c == "corpus") continue;
        auto* sub = app.add_subcommand(c);
        sub->add_option("file", files[c], "problem file")->required();
    }
    auto* corpus = app.add_subcommand("corpus", "run or list the built-in cases");
    bool list = false, all = false;
    std::vector<std::string> ids;
    corpus->add_flag("--list", list, "list case ids and anchors");
    corpus->add_flag("--all", all, "run every case");
    corpus->add_option("--case", ids, "run the named case(s)");
    app.fallthrough();

    try {
        app.parse(static_cast<int>(args.size()), args.data());
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    opt.structured = format == "structured";

    std::vector<cli::Report> reports;
    if (corpus->parsed()) {
        std::vector<cli::CorpusEntry> entries;
        try {
            entries = cli::list_corpus(corpus_dir);
        } catch (const jetcas::Error& e) {
            std::cerr << e.what() << "\n";
            return 2;
        }
        if (list) {
            for (const auto& e : entries) std::cout << e.id << "\t" << e.anchor << "\n";
            return 0;
        }
        std::vector<cli::CorpusEntry> chosen;
        if (all) {
            chosen = entries;
        } else if (!ids.empty()) {
            std::vector<std::string> known;
            for (const auto& e : entries) known.push_back(e.id);
            for (const auto& id : ids) {
                auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.id == id; });
                if (it == entries.end()) {
                    std::cerr << "unknown case " << id;
                    if (auto s = jetcas::dsl::suggest(id, known)) std::cerr << " (did you mean " << *s << "?)";
                    std::cerr << "\n";
                    return 2;
                }
                chosen.push_back(*it);
            }
        } else {
            std::cerr << "corpus: give --list, --all or --case <id>\n";
            return 2;
        }
        reports = cli::run_corpus(chosen, opt);
    } else {
        for (const auto& c : cli::commands) {
            auto* sub = app.get_subcommand(c == "corpus" ? "corpus" : c);
            if (c == "corpus" || !sub->parsed()) continue;
            std::string path = locate(files[c]);
            cli::Report r;
            try {
                r = cli::run(c, jetcas::dsl::parse(cli::read_file(path)), opt);
            } catch (const jetcas::Error& e) {
                r = cli::load_error(path, e.what());
            }
            r.file = path;
            reports.push_back(std::move(r));
        }
    }
    std::cout << cli::render(reports, opt);
    return cli::exit_code(reports);
}
