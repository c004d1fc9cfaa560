#include "qsearch/qdg/qdg.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "qsearch/core/errors.hpp"
#include "qsearch/core/lenient_json.hpp"
#include "qsearch/core/prompts.hpp"
#include "qsearch/core/utf8.hpp"

namespace qsearch::qdg {

using nlohmann::json;

void to_json(json& j, const QdgAnalysis& a) {
    json pc = json::array();
    for (const auto& d : a.parent_child) {
        pc.push_back(json{{"parent", d.parent}, {"child", d.child}});
    }
    j = json{{"is_complex", a.is_complex}, {"sub_queries", a.sub_queries}, {"parent_child", pc}};
}

std::optional<QdgAnalysis> parse_analysis(std::string_view reply) {
    const auto j = parse_lenient_json(reply);
    if (!j || !j->is_object() || !j->contains("is_complex")) {
        return std::nullopt;
    }
    const auto complex = lenient_bool((*j)["is_complex"]);
    if (!complex) {
        return std::nullopt;
    }
    QdgAnalysis a;
    a.is_complex = *complex;
    if (j->contains("sub_queries")) {
        const auto& sq = (*j)["sub_queries"];
        if (!sq.is_array()) {
            return std::nullopt;
        }
        for (const auto& s : sq) {
            if (!s.is_string()) {
                return std::nullopt;
            }
            a.sub_queries.push_back(s.get<std::string>());
        }
    }
    if (j->contains("parent_child")) {
        const auto& pc = (*j)["parent_child"];
        if (!pc.is_array()) {
            return std::nullopt;
        }
        for (const auto& d : pc) {
            if (d.is_object() && d.contains("parent") && d.contains("child") && d["parent"].is_string() &&
                d["child"].is_string()) {
                a.parent_child.push_back({d["parent"].get<std::string>(), d["child"].get<std::string>()});
            } else if (d.is_array() && d.size() == 2 && d[0].is_string() && d[1].is_string()) {
                a.parent_child.push_back({d[0].get<std::string>(), d[1].get<std::string>()});
            } else {
                return std::nullopt;
            }
        }
    }
    return a;
}

std::string_view to_string(ViolationKind kind) {
    switch (kind) {
    case ViolationKind::Duplicate:
        return "duplicate";
    case ViolationKind::Dangling:
        return "dangling";
    case ViolationKind::Cycle:
        return "cycle";
    case ViolationKind::Count:
        return "count";
    case ViolationKind::Shape:
        return "shape";
    }
    return "unknown";
}

std::string node_key(std::string_view sub_query) { return utf8::normalize_space(sub_query); }

namespace {

// Kahn's algorithm over adjacency lists; returns false when a cycle remains.
bool acyclic(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    std::vector<std::vector<std::size_t>> out(n);
    std::vector<int> indeg(n, 0);
    for (const auto& [p, c] : edges) {
        out[p].push_back(c);
        ++indeg[c];
    }
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i) {
        if (indeg[i] == 0) {
            ready.push_back(i);
        }
    }
    std::size_t seen = 0;
    while (!ready.empty()) {
        const auto v = ready.back();
        ready.pop_back();
        ++seen;
        for (auto c : out[v]) {
            if (--indeg[c] == 0) {
                ready.push_back(c);
            }
        }
    }
    return seen == n;
}

} // namespace

std::vector<Violation> validate_analysis(const QdgAnalysis& a, int max_subqueries) {
    std::vector<Violation> v;
    if (!a.is_complex) {
        if (!a.sub_queries.empty() || !a.parent_child.empty()) {
            v.push_back({ViolationKind::Shape, "shape: simple query must have empty sub_queries and parent_child"});
        }
        return v;
    }
    if (a.sub_queries.empty()) {
        v.push_back({ViolationKind::Shape, "shape: complex query without sub_queries"});
    }
    if (static_cast<int>(a.sub_queries.size()) > max_subqueries) {
        v.push_back({ViolationKind::Count, "count exceeds " + std::to_string(max_subqueries)});
    }
    std::map<std::string, std::size_t> index;
    for (const auto& s : a.sub_queries) {
        const auto key = node_key(s);
        if (key.empty()) {
            v.push_back({ViolationKind::Shape, "shape: empty sub-query"});
            continue;
        }
        if (!index.emplace(key, index.size()).second) {
            v.push_back({ViolationKind::Duplicate, "duplicate sub-query: " + key});
        }
    }
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& d : a.parent_child) {
        const auto p = index.find(node_key(d.parent));
        const auto c = index.find(node_key(d.child));
        if (p == index.end() || c == index.end()) {
            v.push_back({ViolationKind::Dangling,
                         "dangling reference: " + (p == index.end() ? node_key(d.parent) : node_key(d.child))});
            continue;
        }
        edges.emplace_back(p->second, c->second);
    }
    if (!acyclic(index.size(), edges)) {
        v.push_back({ViolationKind::Cycle, "cycle in parent_child dependencies"});
    }
    return v;
}

Qdg::Qdg(std::string root_query, std::vector<Node> nodes, std::vector<std::pair<NodeId, NodeId>> edges)
    : root_query_(std::move(root_query)), nodes_(std::move(nodes)), edges_(std::move(edges)) {
    if (nodes_.empty()) {
        throw ContractViolation("QDG must have at least one node");
    }
    std::set<NodeId> ids;
    for (const auto& n : nodes_) {
        if (!ids.insert(n.id).second) {
            throw ContractViolation("QDG node ids must be unique");
        }
    }
    std::vector<std::pair<std::size_t, std::size_t>> idx_edges;
    for (const auto& [p, c] : edges_) {
        idx_edges.emplace_back(index_of(p), index_of(c));
    }
    if (!acyclic(nodes_.size(), idx_edges)) {
        throw ContractViolation("QDG edges contain a cycle");
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
}

Qdg Qdg::terminal(std::string root_query) {
    Node n{0, root_query, std::nullopt};
    Qdg g(std::move(root_query), {std::move(n)}, {});
    g.terminal_ = true;
    return g;
}

Qdg Qdg::from_analysis(std::string root_query, const QdgAnalysis& a) {
    if (!a.is_complex) {
        return terminal(std::move(root_query));
    }
    std::vector<Node> nodes;
    std::map<std::string, NodeId> ids;
    for (const auto& s : a.sub_queries) {
        const auto key = node_key(s);
        const NodeId id = static_cast<NodeId>(nodes.size());
        if (!ids.emplace(key, id).second) {
            throw ContractViolation("from_analysis: duplicate sub-query");
        }
        nodes.push_back(Node{id, key, std::nullopt});
    }
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (const auto& d : a.parent_child) {
        const auto p = ids.find(node_key(d.parent));
        const auto c = ids.find(node_key(d.child));
        if (p == ids.end() || c == ids.end()) {
            throw ContractViolation("from_analysis: dangling dependency");
        }
        edges.emplace_back(p->second, c->second);
    }
    return Qdg(std::move(root_query), std::move(nodes), std::move(edges));
}

std::size_t Qdg::index_of(NodeId id) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].id == id) {
            return i;
        }
    }
    throw ContractViolation("unknown QDG node id " + std::to_string(id));
}

const Node& Qdg::node(NodeId id) const { return nodes_[index_of(id)]; }

std::vector<NodeId> Qdg::parents(NodeId id) const {
    index_of(id);
    std::vector<NodeId> out;
    for (const auto& [p, c] : edges_) {
        if (c == id) {
            out.push_back(p);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<NodeId> Qdg::children(NodeId id) const {
    index_of(id);
    std::vector<NodeId> out;
    for (const auto& [p, c] : edges_) {
        if (p == id) {
            out.push_back(c);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

void Qdg::set_answer(NodeId id, std::string answer) { nodes_[index_of(id)].answer = std::move(answer); }

void to_json(json& j, const Qdg& g) {
    json nodes = json::array();
    for (const auto& n : g.nodes()) {
        nodes.push_back(json{{"id", n.id}, {"sub_query", n.sub_query}, {"answer", n.answer ? json(*n.answer) : json()}});
    }
    json edges = json::array();
    for (const auto& [p, c] : g.edges()) {
        edges.push_back(json::array({p, c}));
    }
    j = json{{"root_query", g.root_query()}, {"terminal", g.is_terminal()}, {"nodes", nodes}, {"edges", edges}};
}

std::vector<std::vector<NodeId>> topo_layers(const Qdg& g) {
    std::map<NodeId, int> indeg;
    std::map<NodeId, int> layer;
    for (const auto& n : g.nodes()) {
        indeg[n.id] = 0;
        layer[n.id] = 0;
    }
    for (const auto& [p, c] : g.edges()) {
        ++indeg[c];
    }
    std::vector<NodeId> ready;
    for (const auto& [id, d] : indeg) {
        if (d == 0) {
            ready.push_back(id);
        }
    }
    std::size_t seen = 0;
    int depth = 0;
    while (!ready.empty()) {
        std::vector<NodeId> next;
        for (NodeId v : ready) {
            ++seen;
            for (NodeId c : g.children(v)) {
                layer[c] = std::max(layer[c], layer[v] + 1);
                if (--indeg[c] == 0) {
                    next.push_back(c);
                }
            }
        }
        ready = std::move(next);
        ++depth;
    }
    if (seen != g.nodes().size()) {
        throw ContractViolation("topo_layers: graph has a cycle");
    }
    std::vector<std::vector<NodeId>> layers(static_cast<std::size_t>(depth));
    for (const auto& [id, l] : layer) {
        layers[static_cast<std::size_t>(l)].push_back(id);
    }
    return layers;
}

std::vector<NodeId> ancestors(const Qdg& g, NodeId id) {
    std::set<NodeId> found;
    std::vector<NodeId> stack = g.parents(id);
    while (!stack.empty()) {
        const NodeId v = stack.back();
        stack.pop_back();
        if (found.insert(v).second) {
            for (NodeId p : g.parents(v)) {
                stack.push_back(p);
            }
        }
    }
    std::vector<NodeId> out;
    for (const auto& layer : topo_layers(g)) {
        for (NodeId v : layer) {
            if (found.count(v) != 0) {
                out.push_back(v);
            }
        }
    }
    return out;
}

std::vector<NodeId> leaves(const Qdg& g) {
    std::vector<NodeId> out;
    for (const auto& layer : topo_layers(g)) {
        for (NodeId v : layer) {
            if (g.children(v).empty()) {
                out.push_back(v);
            }
        }
    }
    return out;
}

std::string render_analysis_prompt(std::string_view query) {
    return prompts::fill(prompts::template_text(prompts::kQueryAnalysis),
                         {{"Few-Shot Examples", std::string(prompts::few_shot(prompts::kQueryAnalysis))},
                          {"Query", std::string(query)}});
}

BuildResult build_qdg(std::string_view query, gateway::Gateway& gw, const PipelineConfig& cfg, Diagnostics* diag) {
    const std::string q = utf8::trim(query);
    if (q.empty()) {
        throw ContractViolation("build_qdg: query must be non-empty");
    }
    const gateway::ChatRequest req{std::string(prompts::kQueryAnalysis), q, render_analysis_prompt(q)};
    int attempts = 0;
    for (; attempts < cfg.qdg_max_retries;) {
        ++attempts;
        const std::string reply = gw.chat_complete(req, gateway::judge_params());
        const auto analysis = parse_analysis(reply);
        if (!analysis) {
            warn(diag, "qdg", "attempt " + std::to_string(attempts) + ": unparseable decomposition");
            continue;
        }
        const auto violations = validate_analysis(*analysis, cfg.max_subqueries);
        if (!violations.empty()) {
            warn(diag, "qdg", "attempt " + std::to_string(attempts) + ": " + violations.front().message);
            continue;
        }
        return BuildResult{Qdg::from_analysis(q, *analysis), attempts, false};
    }
    warn(diag, "qdg", "decomposition failed; answering the query as a single node");
    return BuildResult{Qdg::terminal(q), attempts, true};
}

} // namespace qsearch::qdg
