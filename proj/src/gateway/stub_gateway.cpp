#include "qsearch/gateway/stub_gateway.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "qsearch/core/digest.hpp"
#include "qsearch/core/prompts.hpp"
#include "qsearch/core/text.hpp"
#include "qsearch/core/timestamp.hpp"
#include "qsearch/core/utf8.hpp"

namespace qsearch::gateway {

namespace {

std::optional<std::string> read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string s = ss.str();
    if (!s.empty() && s.back() == '\n') {
        s.pop_back();
        if (!s.empty() && s.back() == '\r') {
            s.pop_back();
        }
    }
    return s;
}

bool is_terminal_punct(char32_t c) {
    return c == U'.' || c == U'!' || c == U'?' || c == U'。' || c == U'！' || c == U'？';
}

std::vector<std::string> leading_sentences(std::string_view text, std::size_t n) {
    const std::u32string cps = utf8::decode(utf8::normalize_space(text));
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < cps.size() && out.size() < n; ++i) {
        if (!is_terminal_punct(cps[i])) {
            continue;
        }
        const bool wide = cps[i] > 0x7f;
        if (!wide && i + 1 < cps.size() && !utf8::is_space(cps[i + 1])) {
            continue;
        }
        auto s = utf8::trim(utf8::encode(cps.substr(start, i + 1 - start)));
        if (!s.empty()) {
            out.push_back(std::move(s));
        }
        start = i + 1;
    }
    if (out.size() < n && start < cps.size()) {
        auto rest = utf8::trim(utf8::encode(cps.substr(start)));
        if (!rest.empty()) {
            out.push_back(rest + ".");
        }
    }
    return out;
}

// Lines between `header` and the next blank line.
std::vector<std::string> section_lines(std::string_view prompt, std::string_view header) {
    std::vector<std::string> lines;
    const auto at = prompt.find(header);
    if (at == std::string_view::npos) {
        return lines;
    }
    std::size_t pos = at + header.size();
    while (pos < prompt.size()) {
        auto eol = prompt.find('\n', pos);
        if (eol == std::string_view::npos) {
            eol = prompt.size();
        }
        const std::string line = utf8::trim(prompt.substr(pos, eol - pos));
        if (line.empty()) {
            break;
        }
        lines.push_back(line);
        pos = eol + 1;
    }
    return lines;
}

std::string strip_marker(const std::string& line) {
    if (!line.empty() && line.front() == '[') {
        const auto close = line.find("] ");
        if (close != std::string::npos) {
            return line.substr(close + 2);
        }
    }
    return line;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) {
            out += sep;
        }
        out += parts[i];
    }
    return out;
}

std::string extractive_answer(const ChatRequest& req) {
    std::vector<std::string> sentences;
    for (const auto& line : section_lines(req.prompt, "Reference materials:\n")) {
        if (sentences.size() >= 3) {
            break;
        }
        if (line == prompts::kNoReferencesMarker) {
            continue;
        }
        for (auto& s : leading_sentences(strip_marker(line), 1)) {
            sentences.push_back(std::move(s));
        }
    }
    if (sentences.empty()) {
        return "No reliable information was found for this question.";
    }
    return join(sentences, " ");
}

std::string synthesized_answer(const ChatRequest& req) {
    const auto lines = section_lines(req.prompt, "Related Q&A:\n");
    std::vector<std::string> sentences;
    for (std::size_t i = 1; i < lines.size(); i += 2) {
        for (auto& s : leading_sentences(lines[i], 2)) {
            sentences.push_back(std::move(s));
        }
    }
    if (sentences.empty()) {
        return "No reliable information was found for this question.";
    }
    return join(sentences, " ");
}

std::string timeline_event(const ChatRequest& req) {
    const std::string& passage = req.key_input;
    const auto first = leading_sentences(passage, 1);
    const std::string summary = first.empty() ? utf8::normalize_space(passage) : first.front();
    std::istringstream words(summary);
    std::vector<std::string> title_words;
    std::string w;
    while (title_words.size() < 8 && words >> w) {
        title_words.push_back(w);
    }
    nlohmann::json out;
    const auto when = Timestamp::find_first(passage);
    out["Time"] = when ? when->iso() : "";
    out["Title"] = join(title_words, " ");
    out["Summary"] = summary;
    return out.dump();
}

} // namespace

std::string fixture_relpath(std::string_view template_id, std::string_view key_input) {
    return std::string(template_id) + "/" + sha256_hex(key_input).substr(0, 16) + ".txt";
}

std::vector<std::string> split_into_deltas(std::string_view text) {
    const std::u32string cps = utf8::decode(text);
    std::vector<std::string> deltas;
    std::u32string cur;
    int words = 0;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        cur.push_back(cps[i]);
        const bool boundary = utf8::is_space(cps[i]) && (i + 1 == cps.size() || !utf8::is_space(cps[i + 1]));
        if (boundary && ++words == 3) {
            deltas.push_back(utf8::encode(cur));
            cur.clear();
            words = 0;
        }
    }
    if (!cur.empty()) {
        deltas.push_back(utf8::encode(cur));
    }
    if (deltas.size() == 1 && cps.size() >= 2) {
        const std::size_t half = cps.size() / 2;
        deltas = {utf8::encode(cps.substr(0, half)), utf8::encode(cps.substr(half))};
    }
    return deltas;
}

StubGateway::StubGateway(StubOptions options) : Gateway(options.gateway), options_(std::move(options)) {
    if (options_.embed_dim == 0) {
        throw ContractViolation("stub embedding dimension must be positive");
    }
}

void StubGateway::set_fault_hook(FaultHook hook) {
    std::lock_guard lock(hook_mu_);
    fault_hook_ = std::move(hook);
}

void StubGateway::set_delta_hook(DeltaHook hook) {
    std::lock_guard lock(hook_mu_);
    delta_hook_ = std::move(hook);
}

void StubGateway::before_call(CallKind kind, const ChatRequest* request) {
    FaultHook hook;
    {
        std::lock_guard lock(hook_mu_);
        hook = fault_hook_;
    }
    if (hook) {
        hook(kind, request);
    }
    if (options_.call_latency.count() > 0) {
        std::this_thread::sleep_for(options_.call_latency);
    }
}

std::string StubGateway::fallback_response(const ChatRequest& req) {
    namespace p = prompts;
    const std::string_view id = req.template_id;
    if (id == p::kIntentRefusal) {
        return R"({"Refusal": "No", "Category": ""})";
    }
    if (id == p::kIntentClarify) {
        return R"({"Requires additional input": "No", "Additional options": {"Prompt description": "", "Choices": []}})";
    }
    if (id == p::kQueryRewrite) {
        return req.key_input;
    }
    if (id == p::kQueryAnalysis) {
        return "{'is_complex': False, 'sub_queries': [], 'parent_child': []}";
    }
    if (id == p::kQueryExpansion || id == p::kKeywordExtraction) {
        return "[]";
    }
    if (id == p::kEncyclopediaQa) {
        return extractive_answer(req);
    }
    if (id == p::kFinalSynthesis) {
        return synthesized_answer(req);
    }
    if (id == p::kInfoExtraction) {
        return "{}";
    }
    if (id == p::kCitationSourceMatching) {
        return "-1";
    }
    if (id == p::kTimelineEvent) {
        return timeline_event(req);
    }
    return "";
}

std::string StubGateway::do_chat(const ChatRequest& request, const GenerationParams&, const DeltaSink& on_delta) {
    before_call(CallKind::Chat, &request);
    std::optional<std::string> text;
    if (!options_.fixture_dir.empty()) {
        text = read_file(options_.fixture_dir / fixture_relpath(request.template_id, request.key_input));
    }
    const std::string full = text ? *text : fallback_response(request);

    DeltaHook hook;
    {
        std::lock_guard lock(hook_mu_);
        hook = delta_hook_;
    }
    const auto deltas = split_into_deltas(full);
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (hook) {
            hook(request, i);
        }
        if (options_.delta_delay.count() > 0) {
            std::this_thread::sleep_for(options_.delta_delay);
        }
        if (on_delta) {
            on_delta(deltas[i]);
        }
    }
    return full;
}

std::vector<double> StubGateway::embed_raw(std::string_view text) const {
    std::u32string cps = U" ";
    for (char32_t c : utf8::decode(utf8::normalize_space(text))) {
        cps.push_back(utf8::to_lower(c));
    }
    cps.push_back(U' ');
    std::vector<double> v(options_.embed_dim, 0.0);
    for (std::size_t i = 0; i + 3 <= cps.size(); ++i) {
        const std::uint64_t h = fnv1a64(utf8::encode(cps.substr(i, 3)), options_.seed);
        v[h % options_.embed_dim] += (h >> 63) != 0 ? -1.0 : 1.0;
    }
    bool zero = true;
    for (double x : v) {
        zero = zero && x == 0.0;
    }
    if (zero) {
        v[fnv1a64(text, options_.seed) % options_.embed_dim] = 1.0;
    }
    return v;
}

std::vector<std::vector<double>> StubGateway::do_embed(const std::vector<std::string>& texts) {
    before_call(CallKind::Embed, nullptr);
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        out.push_back(embed_raw(t));
    }
    return out;
}

std::vector<double> StubGateway::do_rerank(std::string_view query, const std::vector<std::string>& passages) {
    before_call(CallKind::Rerank, nullptr);
    std::vector<double> out;
    out.reserve(passages.size());
    for (const auto& p : passages) {
        out.push_back(text::jaccard(query, p));
    }
    return out;
}

std::vector<double> StubGateway::do_crossmodal(std::string_view text, std::span<const ImageAsset> images) {
    if (!options_.crossmodal) {
        throw CapabilityUnavailable("stub gateway configured without a cross-modal model");
    }
    before_call(CallKind::CrossModal, nullptr);
    const auto q = Embedding::normalized(embed_raw(text));
    std::vector<double> out;
    out.reserve(images.size());
    for (const auto& img : images) {
        std::string desc = img.alt_text;
        if (img.caption) {
            desc += " " + *img.caption;
        }
        if (utf8::trim(desc).empty()) {
            desc = img.url;
        }
        out.push_back(cosine_similarity(q, Embedding::normalized(embed_raw(desc))));
    }
    return out;
}

} // namespace qsearch::gateway
