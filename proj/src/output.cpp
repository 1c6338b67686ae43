#include "dfdx/output.hpp"

#include "dfdx/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <sstream>

namespace dfdx {

using ordered_json = nlohmann::ordered_json;

namespace {

std::vector<std::string> names(const std::set<Stereotype>& stereotypes) {
    std::vector<std::string> out;
    for (const auto& s : stereotypes) out.emplace_back(s.name());
    std::sort(out.begin(), out.end());
    return out;
}

bool integer_literal(const std::string& text) {
    if (text.empty() || text.size() > 18) return false;
    std::size_t start = text[0] == '-' ? 1 : 0;
    if (start == text.size()) return false;
    if (text[start] == '0' && text.size() > start + 1) return false;
    return std::all_of(text.begin() + static_cast<std::ptrdiff_t>(start), text.end(),
                       [](char c) { return c >= '0' && c <= '9'; });
}

ordered_json tag_value(const std::string& text) {
    if (integer_literal(text)) {
        long long value = 0;
        std::from_chars(text.data(), text.data() + text.size(), value);
        return value;
    }
    return text;
}

ordered_json tags_json(const TaggedValues& tags) {
    ordered_json out = ordered_json::object();
    for (const auto& [key, values] : tags) {
        if (values.size() == 1) {
            out[key] = tag_value(*values.begin());
        } else {
            ordered_json list = ordered_json::array();
            for (const auto& v : values) list.push_back(v);
            out[key] = std::move(list);
        }
    }
    return out;
}

ordered_json entry_json(const TraceEntry& e) {
    ordered_json out;
    out["file"] = e.file;
    out["line"] = e.line;
    out["span"] = e.span.str();
    out["evidence"] = e.evidence;
    return out;
}

ordered_json entries_json(const std::set<TraceEntry>& entries) {
    ordered_json out = entry_json(*entries.begin());
    if (entries.size() > 1) {
        ordered_json more = ordered_json::array();
        for (auto it = std::next(entries.begin()); it != entries.end(); ++it) more.push_back(entry_json(*it));
        out["additional"] = std::move(more);
    }
    return out;
}

[[noreturn]] void malformed(const std::string& what) {
    throw Error(ErrorKind::input, "malformed DFD document: " + what);
}

std::string scalar_text(const nlohmann::json& v, const std::string& where) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return v.dump();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    malformed(where + " must be a string or number");
}

TaggedValues parse_tags(const nlohmann::json& j, const std::string& where) {
    TaggedValues out;
    if (j.is_null()) return out;
    if (!j.is_object()) malformed(where + ".tagged_values must be an object");
    for (const auto& [key, value] : j.items()) {
        auto& values = out[key];
        if (value.is_array()) {
            for (const auto& v : value) values.insert(scalar_text(v, where + "." + key));
        } else {
            values.insert(scalar_text(value, where + "." + key));
        }
    }
    return out;
}

std::vector<std::string> parse_stereotypes(const nlohmann::json& j, const std::string& where) {
    std::vector<std::string> out;
    if (j.is_null()) return out;
    if (!j.is_array()) malformed(where + ".stereotypes must be an array");
    for (const auto& s : j) {
        if (!s.is_string()) malformed(where + ".stereotypes must hold strings");
        out.push_back(s.get<std::string>());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

NodeType infer_type(const std::vector<std::string>& stereotypes) {
    static const std::set<std::string> external{"user",         "mail_server", "external_website",
                                                "github_repository", "external_database", "entrypoint",
                                                "exitpoint"};
    for (const auto& s : stereotypes) {
        if (external.contains(s)) return NodeType::external_entity;
    }
    for (const auto& s : stereotypes) {
        if (s == "database") return NodeType::database;
    }
    return NodeType::service;
}

std::string canonical(const nlohmann::json& j, const std::string& where) {
    if (!j.is_string()) malformed(where + " must be a string");
    try {
        return normalize_name(j.get<std::string>());
    } catch (const Error&) {
        malformed(where + " is not a valid name");
    }
}

std::string dot_escape(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out += c;
    }
    return out;
}

std::string label(const std::string& title, const std::vector<std::string>& stereotypes, const TaggedValues& tags) {
    std::string out = dot_escape(title);
    for (const auto& s : stereotypes) out += "\\n--" + dot_escape(s) + "--";
    for (const auto& [key, values] : tags) {
        for (const auto& v : values) out += "\\n" + dot_escape(key) + " = " + dot_escape(v);
    }
    return out;
}

} // namespace

DfdDocument to_document(const Dfd& dfd) {
    DfdDocument doc;
    for (const auto& [name, node] : dfd.nodes()) {
        doc.nodes.push_back(NodeRecord{name, node.type, names(node.stereotypes), node.tagged_values});
    }
    for (const auto& [key, flow] : dfd.flows()) {
        doc.flows.push_back(FlowRecord{key.first, key.second, names(flow.stereotypes), flow.tagged_values});
    }
    return doc;
}

std::string document_to_json(const DfdDocument& doc) {
    ordered_json out;
    out["nodes"] = ordered_json::array();
    for (const auto& n : doc.nodes) {
        ordered_json node;
        node["name"] = n.name;
        node["type"] = to_string(n.type);
        node["stereotypes"] = n.stereotypes;
        node["tagged_values"] = tags_json(n.tagged_values);
        out["nodes"].push_back(std::move(node));
    }
    out["flows"] = ordered_json::array();
    for (const auto& f : doc.flows) {
        ordered_json flow;
        flow["sender"] = f.sender;
        flow["receiver"] = f.receiver;
        flow["stereotypes"] = f.stereotypes;
        flow["tagged_values"] = tags_json(f.tagged_values);
        out["flows"].push_back(std::move(flow));
    }
    return out.dump(4) + "\n";
}

std::string dfd_to_json(const Dfd& dfd) {
    return document_to_json(to_document(dfd));
}

DfdDocument parse_dfd_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        malformed(e.what());
    }
    if (!j.is_object()) malformed("top level must be an object");
    DfdDocument doc;
    std::set<std::string> seen_nodes;
    std::set<FlowKey> seen_flows;
    const auto nodes = j.value("nodes", nlohmann::json::array());
    const auto flows = j.value("flows", nlohmann::json::array());
    if (!nodes.is_array() || !flows.is_array()) malformed("nodes and flows must be arrays");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        auto where = "nodes[" + std::to_string(i) + "]";
        if (!n.is_object()) malformed(where + " must be an object");
        NodeRecord record;
        record.name = canonical(n.value("name", nlohmann::json()), where + ".name");
        record.stereotypes = parse_stereotypes(n.value("stereotypes", nlohmann::json()), where);
        record.tagged_values = parse_tags(n.value("tagged_values", nlohmann::json()), where);
        if (n.contains("type")) {
            try {
                record.type = node_type_from_string(n["type"].get<std::string>());
            } catch (const std::exception&) {
                malformed(where + ".type is not a node type");
            }
        } else {
            record.type = infer_type(record.stereotypes);
        }
        if (!seen_nodes.insert(record.name).second) {
            throw Error(ErrorKind::input, "duplicate node '" + record.name + "'");
        }
        doc.nodes.push_back(std::move(record));
    }
    for (std::size_t i = 0; i < flows.size(); ++i) {
        const auto& f = flows[i];
        auto where = "flows[" + std::to_string(i) + "]";
        if (!f.is_object()) malformed(where + " must be an object");
        FlowRecord record;
        record.sender = canonical(f.value("sender", nlohmann::json()), where + ".sender");
        record.receiver = canonical(f.value("receiver", nlohmann::json()), where + ".receiver");
        record.stereotypes = parse_stereotypes(f.value("stereotypes", nlohmann::json()), where);
        record.tagged_values = parse_tags(f.value("tagged_values", nlohmann::json()), where);
        if (!seen_flows.emplace(record.sender, record.receiver).second) {
            throw Error(ErrorKind::input, "duplicate flow '" + record.sender + "->" + record.receiver + "'");
        }
        doc.flows.push_back(std::move(record));
    }
    std::sort(doc.nodes.begin(), doc.nodes.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    std::sort(doc.flows.begin(), doc.flows.end(), [](const auto& a, const auto& b) {
        return std::tie(a.sender, a.receiver) < std::tie(b.sender, b.receiver);
    });
    return doc;
}

std::string trace_to_json(const TraceStore& store) {
    ordered_json out = ordered_json::object();
    for (const auto& [id, record] : store.items()) {
        if (record.entries.empty()) continue;
        ordered_json item = entries_json(record.entries);
        if (!record.sub_items.empty()) {
            ordered_json subs = ordered_json::object();
            for (const auto& [key, entries] : record.sub_items) {
                if (!entries.empty()) subs[key] = entries_json(entries);
            }
            item["sub_items"] = std::move(subs);
        }
        out[id] = std::move(item);
    }
    return out.dump(4) + "\n";
}

std::string dfd_to_dot(const Dfd& dfd) {
    auto doc = to_document(dfd);
    std::ostringstream os;
    os << "digraph dfd {\n"
       << "    rankdir=LR;\n"
       << "    node [fontname=\"Helvetica\", fontsize=10];\n"
       << "    edge [fontname=\"Helvetica\", fontsize=9];\n";
    for (const auto& n : doc.nodes) {
        const char* shape = "shape=box, style=rounded";
        if (n.type == NodeType::database) shape = "shape=cylinder";
        if (n.type == NodeType::external_entity) shape = "shape=box";
        os << "    \"" << dot_escape(n.name) << "\" [" << shape << ", label=\""
           << label(n.name, n.stereotypes, n.tagged_values) << "\"];\n";
    }
    for (const auto& f : doc.flows) {
        os << "    \"" << dot_escape(f.sender) << "\" -> \"" << dot_escape(f.receiver) << "\" [label=\""
           << label("", f.stereotypes, f.tagged_values).substr(f.stereotypes.empty() && f.tagged_values.empty() ? 0 : 2)
           << "\"];\n";
    }
    os << "}\n";
    return os.str();
}

} // namespace dfdx
