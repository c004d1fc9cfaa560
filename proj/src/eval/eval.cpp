#include "qsearch/eval/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "qsearch/core/assets.hpp"
#include "qsearch/core/lenient_json.hpp"
#include "qsearch/core/prompts.hpp"
#include "qsearch/core/utf8.hpp"

namespace qsearch::eval {

using nlohmann::json;

namespace {

constexpr int kJudgeAttempts = 3;
constexpr std::size_t kJudgeWorkers = 8;

std::string squash(std::string_view s) {
    std::string out;
    for (const char c : utf8::to_lower(s)) {
        if (std::isalnum(static_cast<unsigned char>(c)) != 0) {
            out.push_back(c);
        }
    }
    return out;
}

const json* find_key(const json& obj, std::string_view name) {
    const std::string want = squash(name);
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (squash(it.key()) == want) {
            return &it.value();
        }
    }
    return nullptr;
}

std::optional<double> as_number(const json& v) {
    if (v.is_number()) {
        return v.get<double>();
    }
    if (v.is_string()) {
        static const std::regex num(R"(^\s*(-?\d+(?:\.\d+)?)\s*(?:/\s*10)?\s*(?:points?)?\s*$)", std::regex::icase);
        std::smatch m;
        const std::string s = v.get<std::string>();
        if (std::regex_match(s, m, num)) {
            return std::stod(m[1].str());
        }
    }
    return std::nullopt;
}

std::optional<double> mean(const std::vector<double>& xs) {
    if (xs.empty()) {
        return std::nullopt;
    }
    double s = 0.0;
    for (const double x : xs) {
        s += x;
    }
    return s / static_cast<double>(xs.size());
}

json number_or_null(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string file_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Transcript {
    std::string id;
    std::string query;
    std::string answer;
    std::string date;
    std::optional<double> density;
    json judgments;
    json human_scores;
};

Transcript read_transcript(const std::filesystem::path& p) {
    json j;
    try {
        j = json::parse(file_text(p));
    } catch (const json::exception& e) {
        throw ConfigError("transcript " + p.filename().string() + ": " + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("transcript " + p.filename().string() + ": expected an object");
    }
    Transcript t;
    t.id = p.stem().string();
    t.query = j.value("query", "");
    const json fa = j.value("final_answer", json::object());
    if (fa.is_string()) {
        t.answer = fa.get<std::string>();
    } else if (fa.is_object()) {
        t.answer = fa.value("text", "");
    }
    if (j.contains("user_context") && j["user_context"].is_object()) {
        t.date = j["user_context"].value("local_time", "").substr(0, 10);
    }
    if (t.date.empty()) {
        t.date = j.value("created_at", "").substr(0, 10);
    }
    if (fa.is_object() && fa.contains("sentences") && fa["sentences"].is_array() && !fa["sentences"].empty()) {
        std::vector<presentation::CitationEvent> events;
        for (const auto& c : j.value("citations", json::array())) {
            presentation::CitationEvent ev;
            ev.sentence_index = c.value("sentence_index", std::size_t{0});
            if (c.contains("doc_index") && c["doc_index"].is_number_integer()) {
                ev.doc_index = c["doc_index"].get<int>();
            }
            events.push_back(ev);
        }
        t.density = citation_density(events, fa["sentences"].size());
    }
    t.judgments = j.value("judgments", json::object());
    t.human_scores = j.value("human_scores", json::object());
    if (t.query.empty() || t.answer.empty()) {
        throw ConfigError("transcript " + p.filename().string() + ": missing query or final answer");
    }
    return t;
}

std::vector<JudgmentRecord> records_of(const json& list) {
    std::vector<JudgmentRecord> out;
    if (!list.is_array()) {
        return out;
    }
    for (const auto& r : list) {
        if (r.is_object() && r.contains("relevant")) {
            if (const auto b = lenient_bool(r["relevant"])) {
                out.push_back({json_text(r.value("id", json(""))), *b});
            }
        }
    }
    return out;
}

} // namespace

std::string_view title(Facet f) {
    switch (f) {
    case Facet::Conciseness:
        return "Conciseness";
    case Facet::NumericalPrecision:
        return "Numerical Precision";
    case Facet::Relevance:
        return "Relevance";
    case Facet::Factuality:
        return "Factuality";
    case Facet::Timeliness:
        return "Timeliness";
    case Facet::Comprehensiveness:
        return "Comprehensiveness";
    case Facet::Clarity:
        return "Clarity";
    case Facet::Coherence:
        return "Coherence";
    case Facet::Insightfulness:
        return "Insightfulness";
    }
    return "Conciseness";
}

std::optional<Facet> parse_facet(std::string_view name) {
    const std::string want = squash(name);
    for (const Facet f : kAllFacets) {
        if (squash(title(f)) == want) {
            return f;
        }
    }
    return std::nullopt;
}

std::vector<Facet> parse_facet_list(std::string_view list) {
    if (squash(list) == "all" || utf8::trim(list).empty()) {
        return {kAllFacets.begin(), kAllFacets.end()};
    }
    std::vector<Facet> out;
    std::size_t pos = 0;
    while (pos <= list.size()) {
        auto comma = list.find(',', pos);
        if (comma == std::string_view::npos) {
            comma = list.size();
        }
        const auto item = utf8::trim(list.substr(pos, comma - pos));
        if (!item.empty()) {
            const auto f = parse_facet(item);
            if (!f) {
                throw ConfigError("unknown facet '" + std::string(item) + "'");
            }
            if (std::find(out.begin(), out.end(), *f) == out.end()) {
                out.push_back(*f);
            }
        }
        pos = comma + 1;
    }
    return out;
}

std::string facet_definition(Facet f, std::string_view current_date) {
    const std::string_view text = assets::get("eval_criteria.txt");
    const std::string header = "(" + std::to_string(static_cast<int>(f) + 1) + ") " + std::string(title(f)) + ":";
    const auto start = text.find(header);
    if (start == std::string_view::npos) {
        throw ContractViolation("missing rubric for " + std::string(title(f)));
    }
    const auto body = text.find('\n', start);
    auto end = text.find("\n(", body);
    if (end == std::string_view::npos) {
        end = text.size();
    }
    std::string def = utf8::trim(text.substr(body + 1, end - body - 1));
    def = "    " + def;
    const std::string slot = "{to be filled}";
    if (const auto at = def.find(slot); at != std::string::npos) {
        def.replace(at, slot.size(), current_date.empty() ? "unknown" : std::string(current_date));
    }
    return def;
}

std::string render_judge_prompt(std::string_view question, std::string_view answer, Facet f,
                                std::string_view current_date) {
    return prompts::fill(prompts::template_text(prompts::kEvaluation),
                         {{"Metric Title", std::string(title(f))},
                          {"Metric Definition", facet_definition(f, current_date)},
                          {"Few-Shot Examples", std::string(prompts::few_shot(prompts::kEvaluation))},
                          {"Question", utf8::trim(question)},
                          {"Response", utf8::trim(answer)}});
}

void to_json(json& j, const FacetScore& s) {
    j = json{{"facet", title(s.facet)},
             {"score", number_or_null(s.score)},
             {"issues", s.issues},
             {"calc", s.calc},
             {"clamped", s.clamped}};
}

std::optional<FacetScore> parse_judgment(std::string_view reply, Facet f) {
    const auto j = parse_lenient_json(reply);
    if (!j || !j->is_object()) {
        return std::nullopt;
    }
    FacetScore out;
    out.facet = f;
    if (const auto* v = find_key(*j, "Issues Identified")) {
        out.issues = json_text(*v);
    }
    if (const auto* v = find_key(*j, "Calculation Process")) {
        out.calc = json_text(*v);
    }
    if (const auto* v = find_key(*j, "Score")) {
        out.score = as_number(*v);
    }
    if (!out.score && !out.calc.empty()) {
        static const std::regex result(R"(=\s*(-?\d+(?:\.\d+)?)\s*$)");
        std::smatch m;
        if (std::regex_search(out.calc, m, result)) {
            out.score = std::stod(m[1].str());
        }
    }
    if (!out.score || !std::isfinite(*out.score)) {
        return std::nullopt;
    }
    return out;
}

FacetScore judge_facet(std::string_view question, std::string_view answer, Facet f, gateway::Gateway& gw,
                       std::string_view current_date, Diagnostics* diag) {
    const std::string key = std::string(title(f)) + "\n" + utf8::trim(question) + "\n" + utf8::trim(answer);
    const gateway::ChatRequest req{std::string(prompts::kEvaluation), key,
                                   render_judge_prompt(question, answer, f, current_date)};
    for (int attempt = 0; attempt < kJudgeAttempts; ++attempt) {
        const std::string reply = gw.chat_complete(req, gateway::judge_params());
        if (auto parsed = parse_judgment(reply, f)) {
            const double raw = *parsed->score;
            parsed->score = std::clamp(raw, 0.0, 10.0);
            if (*parsed->score != raw) {
                parsed->clamped = true;
                warn(diag, "eval", std::string(title(f)) + " score " + json(raw).dump() + " clamped to [0,10]");
            }
            return *parsed;
        }
    }
    warn(diag, "eval", std::string(title(f)) + ": judge output unparseable; unscored");
    FacetScore out;
    out.facet = f;
    return out;
}

double citation_density(const std::vector<presentation::CitationEvent>& events, std::size_t sentence_count) {
    if (sentence_count == 0) {
        throw UndefinedMetric("citation density needs at least one sentence");
    }
    std::set<std::size_t> cited;
    for (const auto& e : events) {
        if (e.doc_index && e.sentence_index < sentence_count) {
            cited.insert(e.sentence_index);
        }
    }
    return 100.0 * static_cast<double>(cited.size()) / static_cast<double>(sentence_count);
}

double precision_metric(const std::vector<JudgmentRecord>& records) {
    if (records.empty()) {
        throw UndefinedMetric("precision of an empty judgment set");
    }
    const auto relevant = std::count_if(records.begin(), records.end(), [](const JudgmentRecord& r) {
        return r.relevant;
    });
    return 100.0 * static_cast<double>(relevant) / static_cast<double>(records.size());
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) {
        throw ContractViolation("pearson: need two equal-length samples of at least two points");
    }
    const double n = static_cast<double>(xs.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw UndefinedMetric("pearson: zero variance");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

json run_eval_suite(const std::filesystem::path& results_dir, gateway::Gateway& gw, const EvalOptions& options,
                    Diagnostics* diag) {
    if (options.facets.empty()) {
        throw ConfigError("eval: no facets selected");
    }
    std::vector<std::filesystem::path> files;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(results_dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    if (ec) {
        throw ConfigError("eval: cannot read " + results_dir.string() + ": " + ec.message());
    }
    if (files.empty()) {
        throw ConfigError("eval: no transcripts in " + results_dir.string());
    }
    std::sort(files.begin(), files.end());
    std::vector<Transcript> transcripts;
    for (const auto& f : files) {
        transcripts.push_back(read_transcript(f));
    }

    const std::size_t F = options.facets.size();
    std::vector<FacetScore> scores(transcripts.size() * F);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < scores.size(); k = next++) {
            const auto& t = transcripts[k / F];
            const Facet f = options.facets[k % F];
            const std::string date = options.current_date.value_or(t.date);
            try {
                scores[k] = judge_facet(t.query, t.answer, f, gw, date, diag);
            } catch (const Error& e) {
                warn(diag, "eval", t.id + " " + std::string(title(f)) + ": " + e.what());
                scores[k] = FacetScore{f, std::nullopt, "", "", false};
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(kJudgeWorkers, scores.size()); ++w) {
        pool.emplace_back(work);
    }
    for (auto& th : pool) {
        th.join();
    }

    json report;
    report["transcripts"] = transcripts.size();
    report["facets"] = json::array();
    for (const Facet f : options.facets) {
        report["facets"].push_back(title(f));
    }
    json answers = json::array();
    std::vector<double> densities;
    std::vector<JudgmentRecord> cite_recs;
    std::vector<JudgmentRecord> timeline_recs;
    std::vector<JudgmentRecord> image_recs;
    for (std::size_t a = 0; a < transcripts.size(); ++a) {
        const auto& t = transcripts[a];
        json row{{"id", t.id}, {"query", t.query}, {"citation_density", number_or_null(t.density)}};
        row["scores"] = json::array();
        for (std::size_t fi = 0; fi < F; ++fi) {
            row["scores"].push_back(scores[a * F + fi]);
        }
        answers.push_back(std::move(row));
        if (t.density) {
            densities.push_back(*t.density);
        }
        for (auto [key, out] : {std::pair{"citation", &cite_recs}, std::pair{"timeline", &timeline_recs},
                                std::pair{"images", &image_recs}}) {
            if (t.judgments.is_object() && t.judgments.contains(key)) {
                for (auto& r : records_of(t.judgments[key])) {
                    out->push_back(std::move(r));
                }
            }
        }
    }
    report["answers"] = std::move(answers);

    json means = json::object();
    json correlation = json::object();
    for (std::size_t fi = 0; fi < F; ++fi) {
        const std::string name(title(options.facets[fi]));
        std::vector<double> scored;
        std::vector<double> human;
        std::vector<double> judged;
        std::size_t unscored = 0;
        for (std::size_t a = 0; a < transcripts.size(); ++a) {
            const auto& s = scores[a * F + fi];
            if (!s.score) {
                ++unscored;
                continue;
            }
            scored.push_back(*s.score);
            if (const auto* h = find_key(transcripts[a].human_scores, name)) {
                if (const auto hv = as_number(*h)) {
                    human.push_back(*hv);
                    judged.push_back(*s.score);
                }
            }
        }
        means[name] = {{"mean", number_or_null(mean(scored))}, {"scored", scored.size()}, {"unscored", unscored}};
        std::optional<double> r;
        if (human.size() >= 2) {
            try {
                r = pearson(human, judged);
            } catch (const UndefinedMetric&) {
            }
        }
        correlation[name] = number_or_null(r);
    }
    report["facet_means"] = std::move(means);
    report["human_correlation"] = std::move(correlation);

    auto precision_or_null = [](const std::vector<JudgmentRecord>& recs) {
        return recs.empty() ? json(nullptr) : json(precision_metric(recs));
    };
    report["metrics"] = {{"citation_density", number_or_null(mean(densities))},
                         {"citation_precision", precision_or_null(cite_recs)},
                         {"timeline_precision", precision_or_null(timeline_recs)},
                         {"image_precision", precision_or_null(image_recs)}};
    return report;
}

std::string render_report_table(const json& report) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    out << "Transcripts: " << report.value("transcripts", 0) << "\n\n";
    out << std::left << std::setw(22) << "Facet" << std::right << std::setw(8) << "Mean" << std::setw(8) << "Scored"
        << std::setw(10) << "Unscored" << "\n";
    for (const auto& name : report.value("facets", json::array())) {
        const auto& m = report["facet_means"][name.get<std::string>()];
        out << std::left << std::setw(22) << name.get<std::string>() << std::right << std::setw(8);
        if (m["mean"].is_null()) {
            out << "-";
        } else {
            out << m["mean"].get<double>();
        }
        out << std::setw(8) << m["scored"].get<std::size_t>() << std::setw(10) << m["unscored"].get<std::size_t>()
            << "\n";
    }
    out << "\n";
    const json metrics = report.value("metrics", json::object());
    for (const auto& [name, v] : metrics.items()) {
        out << std::left << std::setw(22) << name << std::right << std::setw(8);
        if (v.is_null()) {
            out << "-";
        } else {
            out << v.get<double>();
        }
        out << "\n";
    }
    return out.str();
}

} // namespace qsearch::eval
