#include "qsearch/generation/generation.hpp"

#include <exception>
#include <mutex>
#include <thread>

#include "qsearch/core/errors.hpp"
#include "qsearch/core/prompts.hpp"
#include "qsearch/core/utf8.hpp"

namespace qsearch::generation {

using nlohmann::json;

namespace {

std::string one_line(std::string_view s) { return utf8::normalize_space(s); }

std::string qa_lines(const std::vector<QaPair>& qas) {
    std::string out;
    for (const auto& qa : qas) {
        if (!out.empty()) {
            out += '\n';
        }
        out += one_line(qa.question);
        out += '\n';
        out += one_line(*qa.answer);
    }
    return out;
}

} // namespace

NodePrompt build_node_prompt(qdg::NodeId node, std::string_view sub_query, const std::vector<QaPair>& ancestor_qas,
                             const std::vector<Passage>& passages) {
    NodePrompt p;
    p.node = node;
    p.sub_query = one_line(sub_query);
    for (const auto& qa : ancestor_qas) {
        if (!qa.answer) {
            throw ContractViolation("build_node_prompt: ancestor \"" + qa.question + "\" has no answer");
        }
    }
    p.ancestor_qas = ancestor_qas;
    std::string materials;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        p.passages.push_back(one_line(passages[i].text));
        if (i > 0) {
            materials += '\n';
        }
        materials += "[" + std::to_string(i + 1) + "] " + p.passages.back();
    }
    if (passages.empty()) {
        materials = std::string(prompts::kNoReferencesMarker);
    }
    std::string t(prompts::template_text(prompts::kEncyclopediaQa));
    t = prompts::replace_list_block(t, "{Ancestor Node 1: Sub-Query}", qa_lines(ancestor_qas));
    t = prompts::replace_list_block(t, "{Retrieved Passage 1}", materials);
    p.rendered = prompts::fill(t, {{"Sub-Query", p.sub_query}});
    return p;
}

std::vector<std::size_t> AnswerStream::sentence_boundaries() const {
    std::vector<std::size_t> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) {
        out.push_back(s.range.end);
    }
    return out;
}

void to_json(json& j, const AnswerStream& a) {
    json sentences = json::array();
    for (const auto& s : a.sentences) {
        sentences.push_back({{"index", s.index}, {"start", s.range.start}, {"end", s.range.end}});
    }
    j = json{{"node", a.node},       {"text", a.text},   {"sentences", sentences},
             {"failed", a.failed},   {"error", a.error}, {"notes", a.notes}};
}

AnswerStream stream_answer(const gateway::ChatRequest& request, qdg::NodeId node, gateway::Gateway& gw,
                           const gateway::GenerationParams& params, const StreamCallbacks& cb, Diagnostics* diag) {
    AnswerStream out;
    out.node = node;
    SentenceSegmenter seg;
    const auto emit = [&](std::vector<Sentence> done) {
        for (auto& s : done) {
            if (cb.on_sentence) {
                cb.on_sentence(s);
            }
            out.sentences.push_back(std::move(s));
        }
    };
    try {
        gw.chat_complete(request, params, [&](std::string_view delta) {
            out.deltas.emplace_back(delta);
            out.text += delta;
            if (cb.on_delta) {
                cb.on_delta(delta);
            }
            emit(seg.feed(delta));
        });
    } catch (const Error& e) {
        out.failed = true;
        out.error = e.what();
        warn(diag, "generation", "answer for \"" + request.key_input + "\" failed: " + e.what());
    }
    emit(seg.finish());
    return out;
}

AnswerStream answer_node(const NodePrompt& prompt, gateway::Gateway& gw, const gateway::GenerationParams& params,
                         const StreamCallbacks& cb, Diagnostics* diag) {
    const gateway::ChatRequest req{std::string(prompts::kEncyclopediaQa), prompt.sub_query, prompt.rendered};
    return stream_answer(req, prompt.node, gw, params, cb, diag);
}

namespace {

void run_parallel(const std::vector<qdg::NodeId>& ids, const std::function<void(qdg::NodeId)>& fn) {
    if (ids.size() == 1) {
        fn(ids.front());
        return;
    }
    std::exception_ptr first;
    std::mutex mu;
    std::vector<std::thread> workers;
    workers.reserve(ids.size());
    for (const qdg::NodeId id : ids) {
        workers.emplace_back([&, id] {
            try {
                fn(id);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!first) {
                    first = std::current_exception();
                }
            }
        });
    }
    for (auto& w : workers) {
        w.join();
    }
    if (first) {
        std::rethrow_exception(first);
    }
}

} // namespace

void run_layers(const qdg::Qdg& g, const std::function<void(qdg::NodeId)>& fn) {
    for (const auto& layer : qdg::topo_layers(g)) {
        run_parallel(layer, fn);
    }
}

std::map<qdg::NodeId, AnswerStream> answer_graph(
    qdg::Qdg& g, const std::function<std::vector<Passage>(qdg::NodeId)>& passages_for, gateway::Gateway& gw,
    const gateway::GenerationParams& params, const std::function<StreamCallbacks(qdg::NodeId)>& callbacks_for,
    Diagnostics* diag) {
    std::map<qdg::NodeId, AnswerStream> answers;
    std::mutex mu;
    for (const auto& layer : qdg::topo_layers(g)) {
        // Prompts are built before the layer starts, so every read of an
        // ancestor answer happens behind the previous layer's barrier.
        std::map<qdg::NodeId, NodePrompt> prompts_by_node;
        for (const qdg::NodeId id : layer) {
            std::vector<QaPair> qas;
            for (const qdg::NodeId a : qdg::ancestors(g, id)) {
                const auto& node = g.node(a);
                if (node.answer && !utf8::trim(*node.answer).empty()) {
                    qas.push_back({node.sub_query, node.answer});
                }
            }
            prompts_by_node.emplace(id, build_node_prompt(id, g.node(id).sub_query, qas, passages_for(id)));
        }
        run_parallel(layer, [&](qdg::NodeId id) {
            const StreamCallbacks cb = callbacks_for ? callbacks_for(id) : StreamCallbacks{};
            AnswerStream a = answer_node(prompts_by_node.at(id), gw, params, cb, diag);
            std::lock_guard lock(mu);
            answers.emplace(id, std::move(a));
        });
        for (const qdg::NodeId id : layer) {
            g.set_answer(id, answers.at(id).text);
        }
    }
    return answers;
}

std::string render_synthesis_prompt(std::string_view root_query, const std::vector<QaPair>& leaf_qas) {
    return prompts::fill(prompts::template_text(prompts::kFinalSynthesis),
                         {{"Query", one_line(root_query)}, {"Related Q&A", qa_lines(leaf_qas)}});
}

AnswerStream synthesize_final(const qdg::Qdg& g, const std::map<qdg::NodeId, AnswerStream>& answers,
                              gateway::Gateway& gw, const gateway::GenerationParams& params,
                              const StreamCallbacks& cb, Diagnostics* diag) {
    std::vector<QaPair> qas;
    std::vector<std::string> notes;
    for (const qdg::NodeId leaf : qdg::leaves(g)) {
        const auto it = answers.find(leaf);
        const std::string& q = g.node(leaf).sub_query;
        if (it == answers.end() || it->second.failed || utf8::trim(it->second.text).empty()) {
            notes.push_back("sub-query failed: " + q);
            continue;
        }
        qas.push_back({q, it->second.text});
    }
    if (qas.empty()) {
        throw PipelineError("generation_unavailable", "no sub-query could be answered");
    }
    if (g.is_terminal()) {
        AnswerStream out = answers.at(qdg::leaves(g).front());
        out.node = kFinalNode;
        return out;
    }
    const gateway::ChatRequest req{std::string(prompts::kFinalSynthesis), one_line(g.root_query()),
                                   render_synthesis_prompt(g.root_query(), qas)};
    AnswerStream out = stream_answer(req, kFinalNode, gw, params, cb, diag);
    out.notes = std::move(notes);
    if (out.failed && utf8::trim(out.text).empty()) {
        throw PipelineError("generation_unavailable", "final synthesis failed: " + out.error);
    }
    return out;
}

} // namespace qsearch::generation
