#pragma once

#include "dfdx/search.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dfdx {

enum class Phase { parse, node, flow, annotation, finalize };

const char* to_string(Phase phase) noexcept;
Phase phase_from_string(std::string_view text);

/// Which flows of the owning service a rule annotates.
enum class FlowScope { file, outgoing, incoming };

struct FlowEffect {
    std::vector<std::string> stereotypes;
    FlowScope scope = FlowScope::outgoing;
    // Scope used instead when paper_parity is set.
    std::optional<FlowScope> parity_scope;
    // Only flows already carrying this stereotype.
    std::optional<std::string> filter;
};

struct ExternalEffect {
    std::string name;
    std::vector<std::string> stereotypes;
    bool inbound = true; // entity -> owner
    std::vector<std::string> flow_stereotypes;
};

struct IterativeSpec {
    ExtractionRule extract;
    std::vector<std::string> follow;
};

struct KeywordRule {
    std::string name;
    Phase phase = Phase::annotation;
    std::vector<std::string> seeds;
    bool regex = false;
    std::optional<std::set<LanguageClass>> languages;
    std::optional<std::string> files;
    std::optional<IterativeSpec> iterative;
    std::vector<std::string> stereotypes;
    std::optional<FlowEffect> flows;
    std::optional<ExternalEffect> external;
};

struct PropertyRule {
    std::string name;
    Phase phase = Phase::annotation;
    std::vector<std::string> keys;
    bool truthy = true; // otherwise presence is enough
    std::vector<std::string> stereotypes;
    std::optional<FlowEffect> flows;
};

enum class CredentialRole { username, password };

struct CredentialPattern {
    std::string key;
    CredentialRole role = CredentialRole::password;
};

struct CredentialContext {
    std::string prefix;
    std::optional<std::string> target;
    std::vector<std::string> host_keys;
    bool authentication = false;
};

/// Data-driven extraction rules; see data/rules/default_rules.yml for the format.
struct RuleSet {
    std::map<std::string, std::vector<std::string>> keywords;
    std::vector<KeywordRule> keyword_rules;
    std::vector<PropertyRule> property_rules;
    std::vector<CredentialPattern> credentials;
    std::vector<CredentialContext> credential_contexts;
    std::set<std::string> infrastructural;

    /// Throws ParseError on malformed YAML and Error(input) on invalid rules,
    /// including stereotypes outside the catalog.
    static RuleSet from_yaml(std::string_view text);
    static const RuleSet& defaults();

    /// Throws Error(input) for unknown list names.
    const std::vector<std::string>& keyword_list(std::string_view name) const;

    /// Stereotypes any rule can emit.
    std::set<std::string> emitted_stereotypes() const;
};

std::string read_text_file(const std::string& path);

} // namespace dfdx
