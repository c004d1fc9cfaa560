#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "qsearch/app/pipeline.hpp"
#include "qsearch/app/runtime.hpp"
#include "qsearch/app/server.hpp"
#include "qsearch/app/session.hpp"
#include "qsearch/core/errors.hpp"
#include "qsearch/eval/eval.hpp"
#include "qsearch/gateway/stub_gateway.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace qsearch;

namespace {

enum Exit : int { kOk = 0, kPipelineError = 1, kConfigError = 2, kRefused = 3 };

struct CommonFlags {
    std::optional<std::string> config;
    bool stub = false;
    std::optional<std::string> fixtures;
    std::vector<std::string> sources;
    bool no_cache = false;
    std::optional<std::string> cache_file;
    bool verbose = false;
};

void add_common(CLI::App& cmd, CommonFlags& f) {
    cmd.add_option("--config", f.config, "JSON config: pipeline settings, providers, sources, cache");
    cmd.add_flag("--stub", f.stub, "Use the offline stub gateway");
    cmd.add_option("--fixtures", f.fixtures, "Fixture directory for the stub gateway and file sources");
    cmd.add_option("--sources", f.sources, "Only use these source ids")->delimiter(',');
    cmd.add_flag("--no-cache", f.no_cache, "Disable the document cache");
    cmd.add_option("--cache-file", f.cache_file, "Document cache file");
    cmd.add_flag("-v,--verbose", f.verbose, "Log degraded-mode warnings");
}

app::RuntimeOptions runtime_options(const CommonFlags& f) {
    app::RuntimeOptions o;
    if (f.config) o.config_file = *f.config;
    o.stub = f.stub;
    if (f.fixtures) o.fixtures = *f.fixtures;
    o.source_ids = f.sources;
    o.cache_enabled = !f.no_cache;
    if (f.cache_file) o.cache_file = *f.cache_file;
    return o;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
    if (!out) throw ConfigError("cannot write " + p.string());
}

struct SearchFlags {
    std::string query;
    std::string out = ".";
    std::optional<std::string> option;
    std::optional<std::string> local_time;
    std::optional<std::string> location;
    bool eval = false;
    std::optional<int> dump_context;
};

int run_search(const CommonFlags& f, const SearchFlags& s) {
    app::Runtime rt = app::make_runtime(runtime_options(f));
    app::Pipeline pipeline(rt.deps());

    app::SearchInput in;
    in.query = s.query;
    in.chosen_option = s.option;
    if (s.local_time) {
        auto ctx = preproc::UserContext::at(*s.local_time, s.location);
        if (!ctx) throw ConfigError("--local-time is not an ISO time: " + *s.local_time);
        in.context = *ctx;
    } else {
        in.context = preproc::UserContext::now(s.location);
    }

    const app::SearchSession session = pipeline.run(in);
    const fs::path out = s.out;
    fs::create_directories(out);
    const json transcript = session;
    write_file(out / "session.json", transcript.dump(2) + "\n");

    if (session.status == "refused") {
        std::cerr << preproc::kRefusalMessage << "\n";
        return kRefused;
    }
    if (session.status != "ok") {
        std::cerr << "search failed: " << (session.error ? session.error->code + ": " + session.error->message : "")
                  << "\n";
        return kPipelineError;
    }
    write_file(out / "answer.md", app::answer_markdown(session));
    write_file(out / "timeline.json", json{{"groups", transcript.at("timeline")}}.dump(2) + "\n");
    write_file(out / "images.json", json{{"placements", transcript.at("images")}}.dump(2) + "\n");
    std::cout << app::answer_markdown(session);

    if (s.dump_context) {
        bool found = false;
        for (const auto& n : session.nodes) {
            if (n.node == *s.dump_context) {
                std::cout << json(n.context).dump(2) << "\n";
                found = true;
            }
        }
        if (!found) std::cerr << "no node " << *s.dump_context << " in this session\n";
    }

    if (s.eval) {
        const fs::path dir = out / "eval";
        fs::create_directories(dir);
        write_file(dir / "session.json", transcript.dump(2) + "\n");
        Diagnostics diag;
        const json report = eval::run_eval_suite(dir, *rt.gateway, {}, &diag);
        write_file(out / "eval_report.json", report.dump(2) + "\n");
        std::cout << "\n" << eval::render_report_table(report);
    }
    return kOk;
}

struct EvalFlags {
    std::string facets = "all";
    std::string input;
    std::string out = "report.json";
    std::optional<std::string> date;
};

int run_eval(const CommonFlags& f, const EvalFlags& e) {
    app::Runtime rt = app::make_runtime(runtime_options(f), false);
    eval::EvalOptions opts;
    opts.facets = eval::parse_facet_list(e.facets);
    opts.current_date = e.date;
    Diagnostics diag;
    const json report = eval::run_eval_suite(e.input, *rt.gateway, opts, &diag);
    const fs::path out = e.out;
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_file(out, report.dump(2) + "\n");
    std::cout << eval::render_report_table(report);
    return kOk;
}

struct ServeFlags {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string sessions = "sessions";
};

int run_serve(const CommonFlags& f, const ServeFlags& s) {
    app::Runtime rt = app::make_runtime(runtime_options(f));
    app::Pipeline pipeline(rt.deps());
    app::SessionStore store(fs::path(s.sessions));
    app::SearchService service(pipeline, store);
    httplib::Server server;
    service.mount(server);
    spdlog::info("listening on http://{}:{}", s.host, s.port);
    std::cerr << "listening on http://" << s.host << ":" << s.port << "\n";
    if (!server.listen(s.host, s.port)) {
        std::cerr << "cannot listen on " << s.host << ":" << s.port << "\n";
        return kConfigError;
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_color_mt("qsearch");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::err);

    CLI::App cli{"Generative search over web sources with citations, timelines and images"};
    cli.require_subcommand(1);

    CommonFlags common;
    SearchFlags search;
    auto* search_cmd = cli.add_subcommand("search", "Answer one query and write answer.md, timeline.json, images.json, session.json");
    search_cmd->add_option("query", search.query, "The question")->required();
    search_cmd->add_option("--out", search.out, "Output directory");
    search_cmd->add_option("--option", search.option, "Chosen clarification option");
    search_cmd->add_option("--local-time", search.local_time, "User local time, ISO 8601 with offset");
    search_cmd->add_option("--location", search.location, "User location");
    search_cmd->add_flag("--eval", search.eval, "Score the answer with the evaluation suite");
    search_cmd->add_option("--dump-context", search.dump_context, "Print the ranked context of a node");
    add_common(*search_cmd, common);

    EvalFlags evalf;
    auto* eval_cmd = cli.add_subcommand("eval", "Evaluation suite");
    eval_cmd->require_subcommand(1);
    auto* eval_run = eval_cmd->add_subcommand("run", "Score every transcript in a directory");
    eval_run->add_option("--facets", evalf.facets, "Comma-separated facets or 'all'");
    eval_run->add_option("--input", evalf.input, "Directory of session transcripts")->required();
    eval_run->add_option("--out", evalf.out, "Report file");
    eval_run->add_option("--date", evalf.date, "Current date for time-sensitive facets");
    add_common(*eval_run, common);

    ServeFlags serve;
    auto* serve_cmd = cli.add_subcommand("serve", "Run the HTTP service");
    serve_cmd->add_option("--host", serve.host, "Bind address");
    serve_cmd->add_option("--port", serve.port, "Port");
    serve_cmd->add_option("--sessions", serve.sessions, "Directory for session transcripts");
    add_common(*serve_cmd, common);

    std::string key_template;
    std::string key_input;
    auto* key_cmd = cli.add_subcommand("fixture-key", "Print the stub fixture path for a template and key");
    key_cmd->add_option("template", key_template)->required();
    key_cmd->add_option("key", key_input)->required();

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : kConfigError;
    }
    if (common.verbose) spdlog::set_level(spdlog::level::info);

    try {
        if (*search_cmd) return run_search(common, search);
        if (*eval_run) return run_eval(common, evalf);
        if (*serve_cmd) return run_serve(common, serve);
        if (*key_cmd) {
            std::cout << gateway::fixture_relpath(key_template, key_input) << "\n";
            return kOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kPipelineError;
    }
    return kOk;
}
