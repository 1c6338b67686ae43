#pragma once

#include "dfdx/eval.hpp"
#include "dfdx/extractors.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dfdx {

struct AnalysisRequest {
    std::string path;     // local directory
    std::string repo_url; // git URL, used when `path` is empty
    std::optional<std::string> ref;
    std::string output_dir; // nothing is written when empty
    std::set<std::string> formats{"json", "trace", "dot"};
    std::vector<std::string> rule_files;
    std::optional<std::string> images_file;
    std::optional<std::string> eval_truth;
    bool paper_parity = false;
};

struct AnalysisResult {
    std::string app;
    std::optional<std::string> commit;
    PipelineResult pipeline;
    std::size_t files_indexed = 0;
    double extraction_seconds = 0; // indexing and extraction, clone excluded
    std::string dfd_json;
    std::string trace_json;
    std::string dot;
    std::optional<EvalCounts> counts;
    std::vector<std::string> written;
    std::vector<std::string> notices;
};

const std::set<std::string>& known_formats();

/// Throws Error(input) for invalid requests and Error(fatal) for clone failures,
/// unreadable paths and empty indexes.
AnalysisResult analyze(const AnalysisRequest& request);

/// Rule files layered over the defaults: named keyword lists and rules with the same
/// name are replaced, everything else is appended.
RuleSet layered_rules(const std::vector<std::string>& rule_files);

/// Short human-readable summary of an analysis.
std::string summary(const AnalysisResult& result, bool verbose);

} // namespace dfdx
