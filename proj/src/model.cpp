#include "dfdx/model.hpp"

#include "dfdx/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace dfdx {

const char* to_string(NodeType type) noexcept {
    switch (type) {
    case NodeType::service: return "service";
    case NodeType::database: return "database";
    case NodeType::external_entity: return "external_entity";
    }
    return "service";
}

NodeType node_type_from_string(std::string_view text) {
    if (text == "service") return NodeType::service;
    if (text == "database") return NodeType::database;
    if (text == "external_entity" || text == "external entity") return NodeType::external_entity;
    throw Error(ErrorKind::input, "unknown node type '" + std::string(text) + "'");
}

std::string normalize_name(std::string_view raw) {
    auto is_trim = [](char c) {
        return std::isspace(static_cast<unsigned char>(c)) || c == '"' || c == '\'';
    };
    while (!raw.empty() && is_trim(raw.front())) raw.remove_prefix(1);
    while (!raw.empty() && is_trim(raw.back())) raw.remove_suffix(1);
    if (raw.empty()) {
        throw Error(ErrorKind::invalid_name, "name is empty after trimming");
    }
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        char mapped = (c == '-' || c == '.' || c == ' ' || c == '/')
                          ? '_'
                          : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (mapped == '_' && !out.empty() && out.back() == '_') {
            continue;
        }
        out.push_back(mapped);
    }
    return out;
}

std::string Span::str() const {
    return "(" + std::to_string(start) + ":" + std::to_string(end) + ")";
}

std::optional<Span> Span::parse(std::string_view text) {
    if (text.size() < 5 || text.front() != '(' || text.back() != ')') return std::nullopt;
    text = text.substr(1, text.size() - 2);
    auto colon = text.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    Span span;
    auto a = text.substr(0, colon);
    auto b = text.substr(colon + 1);
    if (std::from_chars(a.data(), a.data() + a.size(), span.start).ec != std::errc{}) return std::nullopt;
    if (std::from_chars(b.data(), b.data() + b.size(), span.end).ec != std::errc{}) return std::nullopt;
    if (span.end < span.start) return std::nullopt;
    return span;
}

void TraceStore::clear_entries(const std::string& item_id) {
    auto it = items_.find(item_id);
    if (it != items_.end()) it->second.entries.clear();
}

void TraceStore::add(const std::string& item_id, const TraceEntry& entry) {
    items_[item_id].entries.insert(entry);
}

void TraceStore::add_sub_item(const std::string& item_id, const std::string& key, const TraceEntry& entry) {
    auto& record = items_[item_id];
    if (record.entries.empty()) {
        record.entries.insert(entry);
    }
    record.sub_items[key].insert(entry);
}

const TraceRecord* TraceStore::find(const std::string& item_id) const {
    auto it = items_.find(item_id);
    return it == items_.end() ? nullptr : &it->second;
}

void merge_tags(TaggedValues& into, const TaggedValues& from) {
    for (const auto& [key, values] : from) {
        into[key].insert(values.begin(), values.end());
    }
}

namespace {

std::set<Stereotype> make_stereotypes(std::initializer_list<std::string_view> names) {
    std::set<Stereotype> out;
    for (auto name : names) out.emplace(name);
    return out;
}

Applicability applicability_of(NodeType type) {
    return type == NodeType::external_entity ? Applicability::external_entity : Applicability::node;
}

void check_applicable(const Stereotype& s, Applicability kind, const std::string& item) {
    if (!s.applies_to(kind)) {
        throw Error(ErrorKind::applicability,
                    "stereotype '" + std::string(s.name()) + "' does not apply to " + item);
    }
}

} // namespace

Node Node::make(std::string_view display_name, NodeType type,
                std::initializer_list<std::string_view> stereotypes, TaggedValues tags) {
    Node node;
    node.display_name = std::string(display_name);
    node.canonical_name = normalize_name(display_name);
    node.type = type;
    node.stereotypes = make_stereotypes(stereotypes);
    if (type == NodeType::database) node.stereotypes.emplace("database");
    node.tagged_values = std::move(tags);
    return node;
}

bool Node::has(std::string_view stereotype) const {
    return std::any_of(stereotypes.begin(), stereotypes.end(),
                       [&](const Stereotype& s) { return s.name() == stereotype; });
}

std::string flow_id(const FlowKey& key) {
    return key.first + "->" + key.second;
}

Flow Flow::make(std::string_view sender, std::string_view receiver,
                std::initializer_list<std::string_view> stereotypes, TaggedValues tags) {
    Flow flow;
    flow.sender = normalize_name(sender);
    flow.receiver = normalize_name(receiver);
    flow.stereotypes = make_stereotypes(stereotypes);
    flow.tagged_values = std::move(tags);
    return flow;
}

bool Flow::has(std::string_view stereotype) const {
    return std::any_of(stereotypes.begin(), stereotypes.end(),
                       [&](const Stereotype& s) { return s.name() == stereotype; });
}

void Dfd::validate_node(const Node& node) const {
    if (node.canonical_name != normalize_name(node.display_name)) {
        throw Error(ErrorKind::invariant, "canonical name '" + node.canonical_name +
                                              "' does not match display name '" + node.display_name + "'");
    }
    if (node.type == NodeType::database && !node.has("database")) {
        throw Error(ErrorKind::invariant, "database node '" + node.canonical_name + "' lacks 'database'");
    }
    for (const auto& s : node.stereotypes) {
        check_applicable(s, applicability_of(node.type), "node '" + node.canonical_name + "'");
    }
}

void Dfd::record_node_traces(const Node& node, const TraceEntry& trace) {
    trace_.add(node.canonical_name, trace);
    for (const auto& s : node.stereotypes) {
        trace_.add_sub_item(node.canonical_name, std::string(s.name()), trace);
    }
    for (const auto& [key, values] : node.tagged_values) {
        trace_.add_sub_item(node.canonical_name, key, trace);
    }
}

void Dfd::upsert_node(Node node, const TraceEntry& trace) {
    validate_node(node);
    auto it = nodes_.find(node.canonical_name);
    if (it == nodes_.end()) {
        record_node_traces(node, trace);
        nodes_.emplace(node.canonical_name, std::move(node));
        return;
    }

    Node& existing = it->second;
    NodeType merged_type = existing.type;
    std::string display = existing.display_name;
    bool adopt = existing.placeholder && !node.placeholder;
    if (adopt) {
        merged_type = node.type;
        display = node.display_name;
    } else if (!node.placeholder && existing.type != node.type) {
        bool external_clash =
            existing.type == NodeType::external_entity || node.type == NodeType::external_entity;
        if (external_clash) {
            throw Error(ErrorKind::conflict, "node '" + node.canonical_name + "' is both " +
                                                 to_string(existing.type) + " and " + to_string(node.type));
        }
        merged_type = NodeType::database;
    }

    std::set<Stereotype> merged = existing.stereotypes;
    merged.insert(node.stereotypes.begin(), node.stereotypes.end());
    if (merged_type == NodeType::database) merged.emplace("database");
    for (const auto& s : merged) {
        check_applicable(s, applicability_of(merged_type), "node '" + node.canonical_name + "'");
    }

    existing.type = merged_type;
    existing.display_name = std::move(display);
    existing.stereotypes = std::move(merged);
    existing.placeholder = existing.placeholder && node.placeholder;
    merge_tags(existing.tagged_values, node.tagged_values);
    // Adopting a placeholder replaces its flow evidence.
    if (adopt) trace_.clear_entries(existing.canonical_name);
    record_node_traces(node, trace);
    if (existing.type == NodeType::database && !node.has("database")) {
        trace_.add_sub_item(existing.canonical_name, "database", trace);
    }
}

void Dfd::upsert_flow(Flow flow, const TraceEntry& trace, SelfFlows self_flows) {
    flow.sender = normalize_name(flow.sender);
    flow.receiver = normalize_name(flow.receiver);
    if (flow.sender == flow.receiver && self_flows == SelfFlows::reject) {
        throw Error(ErrorKind::self_flow, "self-flow on '" + flow.sender + "' rejected");
    }
    for (const auto& s : flow.stereotypes) {
        check_applicable(s, Applicability::flow, "flow " + flow_id(flow.key()));
    }
    for (const auto* endpoint : {&flow.sender, &flow.receiver}) {
        if (!nodes_.contains(*endpoint)) {
            Node placeholder;
            placeholder.display_name = *endpoint;
            placeholder.canonical_name = *endpoint;
            placeholder.placeholder = true;
            trace_.add(*endpoint, trace);
            nodes_.emplace(*endpoint, std::move(placeholder));
        }
    }

    const std::string id = flow_id(flow.key());
    trace_.add(id, trace);
    for (const auto& s : flow.stereotypes) trace_.add_sub_item(id, std::string(s.name()), trace);
    for (const auto& [key, values] : flow.tagged_values) trace_.add_sub_item(id, key, trace);

    auto it = flows_.find(flow.key());
    if (it == flows_.end()) {
        flows_.emplace(flow.key(), std::move(flow));
        return;
    }
    it->second.stereotypes.insert(flow.stereotypes.begin(), flow.stereotypes.end());
    merge_tags(it->second.tagged_values, flow.tagged_values);
}

void Dfd::annotate(const AnnotationTarget& target, const std::optional<Stereotype>& stereotype,
                   const TaggedValues& tags, const TraceEntry& trace) {
    std::set<Stereotype>* stereotypes = nullptr;
    TaggedValues* tagged = nullptr;
    std::string id;
    if (const auto* name = std::get_if<std::string>(&target)) {
        id = normalize_name(*name);
        auto it = nodes_.find(id);
        if (it == nodes_.end()) {
            throw Error(ErrorKind::missing_target, "no node '" + id + "'");
        }
        if (stereotype) {
            check_applicable(*stereotype, applicability_of(it->second.type), "node '" + id + "'");
        }
        stereotypes = &it->second.stereotypes;
        tagged = &it->second.tagged_values;
    } else {
        const auto& raw = std::get<FlowKey>(target);
        FlowKey key{normalize_name(raw.first), normalize_name(raw.second)};
        auto it = flows_.find(key);
        if (it == flows_.end()) {
            throw Error(ErrorKind::missing_target, "no flow " + flow_id(key));
        }
        if (stereotype) check_applicable(*stereotype, Applicability::flow, "flow " + flow_id(key));
        id = flow_id(key);
        stereotypes = &it->second.stereotypes;
        tagged = &it->second.tagged_values;
    }
    if (stereotype) {
        stereotypes->insert(*stereotype);
        trace_.add_sub_item(id, std::string(stereotype->name()), trace);
    }
    merge_tags(*tagged, tags);
    for (const auto& [key, values] : tags) trace_.add_sub_item(id, key, trace);
}

const Node* Dfd::find_node(std::string_view canonical) const {
    auto it = nodes_.find(std::string(canonical));
    return it == nodes_.end() ? nullptr : &it->second;
}

const Flow* Dfd::find_flow(const FlowKey& key) const {
    auto it = flows_.find(key);
    return it == flows_.end() ? nullptr : &it->second;
}

void Dfd::check_invariants() const {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::invariant, what); };
    for (const auto& [name, node] : nodes_) {
        if (name != node.canonical_name) fail("node key '" + name + "' differs from its canonical name");
        if (!node.placeholder) validate_node(node);
        const auto* record = trace_.find(name);
        if (record == nullptr || record->entries.empty()) fail("node '" + name + "' has no trace");
        for (const auto& s : node.stereotypes) {
            if (!record->sub_items.contains(std::string(s.name())))
                fail("stereotype '" + std::string(s.name()) + "' on '" + name + "' has no trace");
        }
        for (const auto& [key, values] : node.tagged_values) {
            if (!record->sub_items.contains(key)) fail("tag '" + key + "' on '" + name + "' has no trace");
        }
    }
    for (const auto& [key, flow] : flows_) {
        if (!nodes_.contains(flow.sender) || !nodes_.contains(flow.receiver)) {
            fail("flow " + flow_id(key) + " references a missing node");
        }
        const auto* record = trace_.find(flow_id(key));
        if (record == nullptr || record->entries.empty()) fail("flow " + flow_id(key) + " has no trace");
        for (const auto& s : flow.stereotypes) {
            if (!s.applies_to(Applicability::flow)) fail("stereotype on flow " + flow_id(key) + " not a flow stereotype");
            if (!record->sub_items.contains(std::string(s.name())))
                fail("stereotype '" + std::string(s.name()) + "' on " + flow_id(key) + " has no trace");
        }
        for (const auto& [tag, values] : flow.tagged_values) {
            if (!record->sub_items.contains(tag)) fail("tag '" + tag + "' on " + flow_id(key) + " has no trace");
        }
    }
}

} // namespace dfdx
