#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qsearch/core/diagnostics.hpp"
#include "qsearch/gateway/gateway.hpp"
#include "qsearch/presentation/citations.hpp"

namespace qsearch::eval {

enum class Facet {
    Conciseness,
    NumericalPrecision,
    Relevance,
    Factuality,
    Timeliness,
    Comprehensiveness,
    Clarity,
    Coherence,
    Insightfulness,
};

inline constexpr std::array<Facet, 9> kAllFacets{
    Facet::Conciseness,       Facet::NumericalPrecision, Facet::Relevance,
    Facet::Factuality,        Facet::Timeliness,         Facet::Comprehensiveness,
    Facet::Clarity,           Facet::Coherence,          Facet::Insightfulness,
};

// "Numerical Precision"
std::string_view title(Facet f);
// Accepts the title in any case, with spaces, '_' or '-' between words.
std::optional<Facet> parse_facet(std::string_view name);
// Comma-separated list; "all" selects every facet. Throws ConfigError.
std::vector<Facet> parse_facet_list(std::string_view list);

// Rubric text for one facet; the Timeliness date slot is filled with
// `current_date`.
std::string facet_definition(Facet f, std::string_view current_date);

std::string render_judge_prompt(std::string_view question, std::string_view answer, Facet f,
                                std::string_view current_date);

struct FacetScore {
    Facet facet = Facet::Conciseness;
    std::optional<double> score; // absent means unscored
    std::string issues;
    std::string calc;
    bool clamped = false;
};

void to_json(nlohmann::json& j, const FacetScore& s);

// Score from the judge JSON, or from the last "= n" of the calculation when
// the score field is missing. Not clamped.
std::optional<FacetScore> parse_judgment(std::string_view reply, Facet f);

// Temperature 0; up to three attempts; scores clamped to [0,10].
FacetScore judge_facet(std::string_view question, std::string_view answer, Facet f, gateway::Gateway& gw,
                       std::string_view current_date, Diagnostics* diag = nullptr);

// Percentage of sentences carrying a citation. Throws UndefinedMetric when
// sentence_count is 0.
double citation_density(const std::vector<presentation::CitationEvent>& events, std::size_t sentence_count);

struct JudgmentRecord {
    std::string id;
    bool relevant = false;
};

// 100 * relevant / total. Throws UndefinedMetric on empty input.
double precision_metric(const std::vector<JudgmentRecord>& records);

// Sample Pearson correlation. Throws ContractViolation on length mismatch
// or fewer than two points, UndefinedMetric on zero variance.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

struct EvalOptions {
    std::vector<Facet> facets{kAllFacets.begin(), kAllFacets.end()};
    // Overrides the date taken from each transcript.
    std::optional<std::string> current_date;
};

// Scores every session transcript (*.json) in `results_dir`. The report is
// deterministic for a deterministic gateway.
nlohmann::json run_eval_suite(const std::filesystem::path& results_dir, gateway::Gateway& gw,
                              const EvalOptions& options = {}, Diagnostics* diag = nullptr);

// Plain-text table of the facet means and metrics of a report.
std::string render_report_table(const nlohmann::json& report);

} // namespace qsearch::eval
