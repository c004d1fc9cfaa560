#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qsearch/core/config.hpp"
#include "qsearch/core/diagnostics.hpp"
#include "qsearch/gateway/gateway.hpp"

namespace qsearch::qdg {

struct Dependency {
    std::string parent;
    std::string child;
    friend bool operator==(const Dependency&, const Dependency&) = default;
};

// The decomposition model's output, keyed exactly like its dictionary format.
struct QdgAnalysis {
    bool is_complex = false;
    std::vector<std::string> sub_queries;
    std::vector<Dependency> parent_child;
};

void to_json(nlohmann::json& j, const QdgAnalysis& a);

// Accepts strict JSON and Python dict literals; dependencies may be
// {"parent", "child"} objects or [parent, child] pairs.
std::optional<QdgAnalysis> parse_analysis(std::string_view reply);

enum class ViolationKind { Duplicate, Dangling, Cycle, Count, Shape };

std::string_view to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    std::string message;
};

// Trimmed, whitespace-collapsed text; the identity of a node.
std::string node_key(std::string_view sub_query);

std::vector<Violation> validate_analysis(const QdgAnalysis& a, int max_subqueries);

using NodeId = int;

struct Node {
    NodeId id = 0;
    std::string sub_query;
    std::optional<std::string> answer;
};

// Directed acyclic graph of sub-queries; edges point parent -> child.
class Qdg {
public:
    // Throws ContractViolation on duplicate ids, unknown edge endpoints or cycles.
    Qdg(std::string root_query, std::vector<Node> nodes, std::vector<std::pair<NodeId, NodeId>> edges);

    // Single node holding the root query itself.
    static Qdg terminal(std::string root_query);
    // Node ids follow sub_queries order. Precondition: the analysis validates.
    static Qdg from_analysis(std::string root_query, const QdgAnalysis& a);

    const std::string& root_query() const noexcept { return root_query_; }
    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const std::vector<std::pair<NodeId, NodeId>>& edges() const noexcept { return edges_; }
    bool is_terminal() const noexcept { return terminal_; }

    const Node& node(NodeId id) const;
    std::vector<NodeId> parents(NodeId id) const;
    std::vector<NodeId> children(NodeId id) const;

    // Each node has a single writer (the generation stage).
    void set_answer(NodeId id, std::string answer);

private:
    std::size_t index_of(NodeId id) const;

    std::string root_query_;
    std::vector<Node> nodes_;
    std::vector<std::pair<NodeId, NodeId>> edges_;
    bool terminal_ = false;
};

void to_json(nlohmann::json& j, const Qdg& g);

// Longest-path layering; ids ascending within a layer. Throws
// ContractViolation on a cycle.
std::vector<std::vector<NodeId>> topo_layers(const Qdg& g);

// Transitive parents ordered by layer, then id.
std::vector<NodeId> ancestors(const Qdg& g, NodeId id);

// Nodes without outgoing edges, in topological (layer, id) order.
std::vector<NodeId> leaves(const Qdg& g);

struct BuildResult {
    Qdg graph;
    int attempts = 0;
    bool degraded = false;
};

// Asks the model for a decomposition, validating and regenerating up to
// qdg_max_retries times before degrading to a Terminal graph.
BuildResult build_qdg(std::string_view query, gateway::Gateway& gw, const PipelineConfig& cfg,
                      Diagnostics* diag = nullptr);

// The rendered decomposition prompt for a query.
std::string render_analysis_prompt(std::string_view query);

} // namespace qsearch::qdg
