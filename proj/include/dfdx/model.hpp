#pragma once

#include "dfdx/stereotype.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

namespace dfdx {

enum class NodeType { service, database, external_entity };

const char* to_string(NodeType type) noexcept;
NodeType node_type_from_string(std::string_view text);

/// Lowercases and maps '-', '.', ' ', '/' to '_' (collapsing runs). Throws on empty input.
std::string normalize_name(std::string_view raw);

/// Column interval [start, end) on one line, rendered "(start:end)".
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;

    std::string str() const;
    static std::optional<Span> parse(std::string_view text);

    friend auto operator<=>(const Span&, const Span&) = default;
};

/// Location of the code evidence for one model item.
///
/// `rank` orders competing evidence for the same item: the entry with the lowest
/// (rank, file, line, span) is the item's primary trace, which keeps the choice
/// independent of the order in which evidence was recorded.
struct TraceEntry {
    std::string file;
    std::size_t line = 0;
    Span span;
    std::string evidence;
    int rank = 1;

    auto key() const { return std::tie(rank, file, line, span, evidence); }

    friend bool operator==(const TraceEntry& a, const TraceEntry& b) { return a.key() == b.key(); }
    friend bool operator<(const TraceEntry& a, const TraceEntry& b) { return a.key() < b.key(); }
};

struct TraceRecord {
    std::set<TraceEntry> entries;
    std::map<std::string, std::set<TraceEntry>> sub_items;

    const TraceEntry& primary() const { return *entries.begin(); }
};

class TraceStore {
public:
    void add(const std::string& item_id, const TraceEntry& entry);
    void add_sub_item(const std::string& item_id, const std::string& key, const TraceEntry& entry);
    /// Drops the item's own entries; sub-items stay.
    void clear_entries(const std::string& item_id);

    const TraceRecord* find(const std::string& item_id) const;
    const std::map<std::string, TraceRecord>& items() const noexcept { return items_; }
    std::size_t size() const noexcept { return items_.size(); }

private:
    std::map<std::string, TraceRecord> items_;
};

/// Tag key -> values. Conflicting evidence keeps every value.
using TaggedValues = std::map<std::string, std::set<std::string>>;

void merge_tags(TaggedValues& into, const TaggedValues& from);

struct Node {
    std::string display_name;
    std::string canonical_name;
    NodeType type = NodeType::service;
    std::set<Stereotype> stereotypes;
    TaggedValues tagged_values;
    // Auto-created as a flow endpoint; may still adopt any type on first real upsert.
    bool placeholder = false;

    static Node make(std::string_view display_name, NodeType type,
                     std::initializer_list<std::string_view> stereotypes = {},
                     TaggedValues tags = {});

    bool has(std::string_view stereotype) const;
};

using FlowKey = std::pair<std::string, std::string>;

std::string flow_id(const FlowKey& key);

struct Flow {
    std::string sender;
    std::string receiver;
    std::set<Stereotype> stereotypes;
    TaggedValues tagged_values;

    static Flow make(std::string_view sender, std::string_view receiver,
                     std::initializer_list<std::string_view> stereotypes = {},
                     TaggedValues tags = {});

    FlowKey key() const { return {sender, receiver}; }
    bool has(std::string_view stereotype) const;
};

enum class SelfFlows { reject, allow };

using AnnotationTarget = std::variant<std::string, FlowKey>;

/// Dataflow diagram builder. Single writer; copies are independent.
class Dfd {
public:
    /// Inserts or merges a node. Throws Error(conflict) for database <-> external entity
    /// (and service <-> external entity) clashes; the existing node is left untouched.
    void upsert_node(Node node, const TraceEntry& trace);

    /// Inserts or merges a flow; missing endpoints are auto-created as placeholder services.
    void upsert_flow(Flow flow, const TraceEntry& trace, SelfFlows self_flows = SelfFlows::reject);

    void annotate(const AnnotationTarget& target, const std::optional<Stereotype>& stereotype,
                  const TaggedValues& tags, const TraceEntry& trace);

    const std::map<std::string, Node>& nodes() const noexcept { return nodes_; }
    const std::map<FlowKey, Flow>& flows() const noexcept { return flows_; }
    const TraceStore& trace() const noexcept { return trace_; }

    const Node* find_node(std::string_view canonical) const;
    const Flow* find_flow(const FlowKey& key) const;

    /// Throws Error(invariant) on referential-integrity, naming, catalog or trace violations.
    void check_invariants() const;

private:
    void validate_node(const Node& node) const;
    void record_node_traces(const Node& node, const TraceEntry& trace);

    std::map<std::string, Node> nodes_;
    std::map<FlowKey, Flow> flows_;
    TraceStore trace_;
};

} // namespace dfdx
