#include "dfdx/rules.hpp"

#include "dfdx/error.hpp"
#include "dfdx/stereotype.hpp"
#include "embedded.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <regex>
#include <sstream>

namespace dfdx {

const char* to_string(Phase phase) noexcept {
    switch (phase) {
    case Phase::parse: return "parse";
    case Phase::node: return "node";
    case Phase::flow: return "flow";
    case Phase::annotation: return "annotation";
    case Phase::finalize: return "finalize";
    }
    return "?";
}

Phase phase_from_string(std::string_view text) {
    for (auto p : {Phase::parse, Phase::node, Phase::flow, Phase::annotation, Phase::finalize}) {
        if (text == to_string(p)) return p;
    }
    throw Error(ErrorKind::input, "unknown phase '" + std::string(text) + "'");
}

namespace {

LanguageClass language_from_string(const std::string& text) {
    for (auto cls : {LanguageClass::java, LanguageClass::yaml, LanguageClass::properties, LanguageClass::dockerfile,
                     LanguageClass::compose, LanguageClass::build, LanguageClass::env, LanguageClass::other}) {
        if (text == to_string(cls)) return cls;
    }
    throw Error(ErrorKind::input, "unknown language class '" + text + "'");
}

FlowScope scope_from_string(const std::string& text) {
    if (text == "file") return FlowScope::file;
    if (text == "outgoing") return FlowScope::outgoing;
    if (text == "incoming") return FlowScope::incoming;
    throw Error(ErrorKind::input, "unknown flow scope '" + text + "'");
}

std::vector<std::string> strings(const YAML::Node& node) {
    std::vector<std::string> out;
    if (!node) return out;
    if (node.IsScalar()) {
        out.push_back(node.as<std::string>());
        return out;
    }
    for (const auto& item : node) out.push_back(item.as<std::string>());
    return out;
}

void check_stereotypes(const std::vector<std::string>& names, Applicability kind, const std::string& rule) {
    for (const auto& name : names) {
        if (!Stereotype::is_known(name)) {
            throw Error(ErrorKind::input, "rule '" + rule + "': unknown stereotype '" + name + "'");
        }
        if (!Stereotype(name).applies_to(kind)) {
            throw Error(ErrorKind::input, "rule '" + rule + "': stereotype '" + name + "' not applicable here");
        }
    }
}

std::optional<FlowEffect> flow_effect(const YAML::Node& node, const std::string& rule) {
    if (!node) return std::nullopt;
    FlowEffect effect;
    effect.stereotypes = strings(node["stereotypes"]);
    check_stereotypes(effect.stereotypes, Applicability::flow, rule);
    if (node["scope"]) effect.scope = scope_from_string(node["scope"].as<std::string>());
    if (node["parity_scope"]) effect.parity_scope = scope_from_string(node["parity_scope"].as<std::string>());
    if (node["filter"]) {
        effect.filter = node["filter"].as<std::string>();
        check_stereotypes({*effect.filter}, Applicability::flow, rule);
    }
    return effect;
}

void check_regex(const std::string& pattern, const std::string& rule) {
    try {
        std::regex re(pattern);
    } catch (const std::regex_error& e) {
        throw Error(ErrorKind::pattern, "rule '" + rule + "': malformed pattern '" + pattern + "'");
    }
}

KeywordRule keyword_rule(const YAML::Node& node) {
    KeywordRule rule;
    rule.name = node["name"].as<std::string>();
    rule.phase = phase_from_string(node["phase"] ? node["phase"].as<std::string>() : "annotation");
    if (rule.phase == Phase::parse || rule.phase == Phase::finalize) {
        throw Error(ErrorKind::input, "rule '" + rule.name + "': keyword rules run in node, flow or annotation phase");
    }
    rule.seeds = strings(node["seeds"]);
    if (rule.seeds.empty()) throw Error(ErrorKind::input, "rule '" + rule.name + "' has no seeds");
    rule.regex = node["regex"] && node["regex"].as<bool>();
    if (rule.regex) {
        for (const auto& seed : rule.seeds) check_regex(seed, rule.name);
    }
    if (node["languages"]) {
        std::set<LanguageClass> langs;
        for (const auto& l : strings(node["languages"])) langs.insert(language_from_string(l));
        rule.languages = std::move(langs);
    }
    if (node["files"]) rule.files = node["files"].as<std::string>();
    if (const auto it = node["iterative"]) {
        IterativeSpec spec;
        if (it["variable_of"]) {
            spec.extract = ExtractionRule::variable_of(it["variable_of"].as<std::string>());
        } else {
            spec.extract.patterns = strings(it["extract"]);
            for (const auto& p : spec.extract.patterns) check_regex(p, rule.name);
        }
        spec.follow = strings(it["follow"]);
        if (spec.extract.patterns.empty() || spec.follow.empty()) {
            throw Error(ErrorKind::input, "rule '" + rule.name + "': iterative rules need extract and follow");
        }
        rule.iterative = std::move(spec);
    }
    rule.stereotypes = strings(node["stereotypes"]);
    check_stereotypes(rule.stereotypes, Applicability::node, rule.name);
    rule.flows = flow_effect(node["flows"], rule.name);
    if (const auto ext = node["external"]) {
        ExternalEffect effect;
        effect.name = ext["name"].as<std::string>();
        effect.stereotypes = strings(ext["stereotypes"]);
        check_stereotypes(effect.stereotypes, Applicability::external_entity, rule.name);
        effect.inbound = !ext["direction"] || ext["direction"].as<std::string>() != "outbound";
        effect.flow_stereotypes = strings(ext["flow_stereotypes"]);
        check_stereotypes(effect.flow_stereotypes, Applicability::flow, rule.name);
        rule.external = std::move(effect);
    }
    return rule;
}

PropertyRule property_rule(const YAML::Node& node) {
    PropertyRule rule;
    rule.name = node["name"].as<std::string>();
    rule.phase = phase_from_string(node["phase"] ? node["phase"].as<std::string>() : "annotation");
    rule.keys = strings(node["keys"]);
    if (rule.keys.empty()) throw Error(ErrorKind::input, "rule '" + rule.name + "' has no keys");
    auto when = node["when"] ? node["when"].as<std::string>() : "truthy";
    if (when != "truthy" && when != "present") throw Error(ErrorKind::input, "rule '" + rule.name + "': bad 'when'");
    rule.truthy = when == "truthy";
    rule.stereotypes = strings(node["stereotypes"]);
    check_stereotypes(rule.stereotypes, Applicability::node, rule.name);
    rule.flows = flow_effect(node["flows"], rule.name);
    return rule;
}

} // namespace

RuleSet RuleSet::from_yaml(std::string_view text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        throw ParseError("<rules>", static_cast<std::size_t>(std::max(e.mark.line, 0)) + 1, e.msg);
    }
    RuleSet rules;
    try {
        if (const auto kw = root["keywords"]) {
            for (auto it = kw.begin(); it != kw.end(); ++it) {
                rules.keywords[it->first.as<std::string>()] = strings(it->second);
            }
        }
        for (const auto& node : root["keyword_rules"]) rules.keyword_rules.push_back(keyword_rule(node));
        for (const auto& node : root["property_rules"]) rules.property_rules.push_back(property_rule(node));
        for (const auto& node : root["credentials"]) {
            CredentialPattern pattern;
            pattern.key = node["key"].as<std::string>();
            auto role = node["role"] ? node["role"].as<std::string>() : "password";
            if (role != "password" && role != "username") {
                throw Error(ErrorKind::input, "credential pattern '" + pattern.key + "': bad role");
            }
            pattern.role = role == "password" ? CredentialRole::password : CredentialRole::username;
            rules.credentials.push_back(std::move(pattern));
        }
        for (const auto& node : root["credential_contexts"]) {
            CredentialContext ctx;
            ctx.prefix = node["prefix"].as<std::string>();
            if (node["target"]) ctx.target = node["target"].as<std::string>();
            ctx.host_keys = strings(node["host_keys"]);
            ctx.authentication = node["authentication"] && node["authentication"].as<bool>();
            rules.credential_contexts.push_back(std::move(ctx));
        }
        for (const auto& name : strings(root["infrastructural"])) {
            check_stereotypes({name}, Applicability::node, "infrastructural");
            rules.infrastructural.insert(name);
        }
    } catch (const YAML::Exception& e) {
        throw Error(ErrorKind::input, "invalid rule file: " + e.msg);
    }
    return rules;
}

const RuleSet& RuleSet::defaults() {
    static const RuleSet rules = from_yaml(embedded::rules_yaml());
    return rules;
}

const std::vector<std::string>& RuleSet::keyword_list(std::string_view name) const {
    auto it = keywords.find(std::string(name));
    if (it == keywords.end()) throw Error(ErrorKind::input, "rule file lacks keyword list '" + std::string(name) + "'");
    return it->second;
}

std::set<std::string> RuleSet::emitted_stereotypes() const {
    std::set<std::string> out;
    auto add_flow = [&](const std::optional<FlowEffect>& effect) {
        if (effect) out.insert(effect->stereotypes.begin(), effect->stereotypes.end());
    };
    for (const auto& rule : keyword_rules) {
        out.insert(rule.stereotypes.begin(), rule.stereotypes.end());
        add_flow(rule.flows);
        if (rule.external) {
            out.insert(rule.external->stereotypes.begin(), rule.external->stereotypes.end());
            out.insert(rule.external->flow_stereotypes.begin(), rule.external->flow_stereotypes.end());
        }
    }
    for (const auto& rule : property_rules) {
        out.insert(rule.stereotypes.begin(), rule.stereotypes.end());
        add_flow(rule.flows);
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace dfdx
