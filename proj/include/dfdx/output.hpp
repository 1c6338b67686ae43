#pragma once

#include "dfdx/model.hpp"

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dfdx {

struct NodeRecord {
    std::string name;
    NodeType type = NodeType::service;
    std::vector<std::string> stereotypes; // sorted
    TaggedValues tagged_values;

    friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

struct FlowRecord {
    std::string sender;
    std::string receiver;
    std::vector<std::string> stereotypes; // sorted
    TaggedValues tagged_values;

    friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

/// Serializable view of a Dfd: nodes sorted by name, flows by (sender, receiver).
struct DfdDocument {
    std::vector<NodeRecord> nodes;
    std::vector<FlowRecord> flows;

    friend bool operator==(const DfdDocument&, const DfdDocument&) = default;
};

DfdDocument to_document(const Dfd& dfd);

/// Tags with a single integer-literal value serialize as numbers, multi-valued tags
/// as arrays of strings.
std::string document_to_json(const DfdDocument& doc);
std::string dfd_to_json(const Dfd& dfd);

/// Parses the document format written by dfd_to_json. Names are canonicalized.
/// Throws Error(input) on malformed documents and duplicate identities.
DfdDocument parse_dfd_json(std::string_view text);

/// One object per item id with the primary evidence, further evidence under
/// "additional" and per-annotation evidence under "sub_items".
std::string trace_to_json(const TraceStore& store);

/// Graphviz digraph following common DFD conventions.
std::string dfd_to_dot(const Dfd& dfd);

} // namespace dfdx
