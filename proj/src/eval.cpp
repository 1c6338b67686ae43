#include "dfdx/eval.hpp"

#include "dfdx/error.hpp"
#include "util.hpp"

#include <nlohmann/json.hpp>

#include <set>
#include <tuple>

namespace dfdx {

namespace {

enum class NodeGroup { services, external_entities };

NodeGroup group_of(NodeType type) {
    return type == NodeType::external_entity ? NodeGroup::external_entities : NodeGroup::services;
}

struct ItemSets {
    std::set<std::pair<NodeGroup, std::string>> nodes;
    std::set<FlowKey> flows;
    // (owner id, kind, key, value): kind 's' stereotype, 't' tag
    std::set<std::tuple<std::string, char, std::string, std::string>> annotations;
    std::set<std::tuple<std::string, char, std::string, std::string>> security;
};

bool security_stereotype(const std::string& name) {
    return Stereotype::is_known(name) && Stereotype(name).is_security();
}

void add_annotations(ItemSets& sets, const std::string& owner, const std::vector<std::string>& stereotypes,
                     const TaggedValues& tags) {
    for (const auto& s : stereotypes) {
        sets.annotations.emplace(owner, 's', s, "");
        if (security_stereotype(s)) sets.security.emplace(owner, 's', s, "");
    }
    for (const auto& [key, values] : tags) {
        for (const auto& v : values) sets.annotations.emplace(owner, 't', key, std::string(util::trim(v)));
    }
}

ItemSets items_of(const DfdDocument& doc, const char* which) {
    ItemSets sets;
    std::set<std::string> names;
    for (const auto& n : doc.nodes) {
        if (!names.insert(n.name).second) {
            throw Error(ErrorKind::input, std::string(which) + " document has duplicate node '" + n.name + "'");
        }
        sets.nodes.emplace(group_of(n.type), n.name);
        add_annotations(sets, "node:" + n.name, n.stereotypes, n.tagged_values);
    }
    for (const auto& f : doc.flows) {
        if (!sets.flows.emplace(f.sender, f.receiver).second) {
            throw Error(ErrorKind::input,
                        std::string(which) + " document has duplicate flow '" + f.sender + "->" + f.receiver + "'");
        }
        add_annotations(sets, "flow:" + f.sender + "->" + f.receiver, f.stereotypes, f.tagged_values);
    }
    return sets;
}

template <class Set>
GroupCounts compare(const Set& extracted, const Set& truth) {
    GroupCounts c;
    for (const auto& item : extracted) {
        if (truth.contains(item)) {
            ++c.tp;
        } else {
            ++c.fp;
        }
    }
    for (const auto& item : truth) {
        if (!extracted.contains(item)) ++c.fn;
    }
    return c;
}

GroupCounts compare_nodes(const ItemSets& extracted, const ItemSets& truth, NodeGroup group) {
    std::set<std::string> e;
    std::set<std::string> t;
    for (const auto& [g, name] : extracted.nodes) {
        if (g == group) e.insert(name);
    }
    for (const auto& [g, name] : truth.nodes) {
        if (g == group) t.insert(name);
    }
    return compare(e, t);
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

struct Mean {
    double sum = 0;
    std::size_t n = 0;
    void add(const std::optional<double>& v) {
        if (!v) return;
        sum += *v;
        ++n;
    }
    std::optional<double> value() const { return n == 0 ? std::nullopt : std::optional<double>(sum / n); }
};

Score mean_of(const std::vector<MetricsRow>& rows, Score MetricsRow::*field) {
    Mean p;
    Mean r;
    for (const auto& row : rows) {
        p.add((row.*field).precision);
        r.add((row.*field).recall);
    }
    return Score{p.value(), r.value()};
}

nlohmann::ordered_json counts_json(const GroupCounts& c) {
    return nlohmann::ordered_json{{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}};
}

nlohmann::ordered_json score_json(const Score& s) {
    nlohmann::ordered_json out;
    out["precision"] = s.precision ? nlohmann::ordered_json(*s.precision) : nlohmann::ordered_json();
    out["recall"] = s.recall ? nlohmann::ordered_json(*s.recall) : nlohmann::ordered_json();
    return out;
}

nlohmann::ordered_json row_json(const MetricsRow& row) {
    nlohmann::ordered_json out;
    out["services"] = score_json(row.services);
    out["external_entities"] = score_json(row.external_entities);
    out["information_flows"] = score_json(row.information_flows);
    out["annotations"] = score_json(row.annotations);
    out["overall"] = score_json(row.overall);
    out["core"] = score_json(row.core);
    out["security"] = score_json(row.security);
    return out;
}

nlohmann::ordered_json all_counts_json(const EvalCounts& c) {
    nlohmann::ordered_json out;
    out["services"] = counts_json(c.services);
    out["external_entities"] = counts_json(c.external_entities);
    out["information_flows"] = counts_json(c.information_flows);
    out["annotations"] = counts_json(c.annotations);
    out["security_annotations"] = counts_json(c.security_annotations);
    out["overall"] = counts_json(c.overall());
    return out;
}

// Dataset tagged values: an object, or a list of [key, value] pairs.
nlohmann::json adapt_tags(const nlohmann::json& tags) {
    if (!tags.is_array()) return tags;
    nlohmann::json out = nlohmann::json::object();
    for (const auto& pair : tags) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string()) {
            throw Error(ErrorKind::input, "tagged value pairs must be [key, value]");
        }
        auto& slot = out[pair[0].get<std::string>()];
        auto values = pair[1].is_array() ? pair[1] : nlohmann::json::array({pair[1]});
        if (slot.is_null()) slot = nlohmann::json::array();
        for (const auto& v : values) slot.push_back(v);
    }
    return out;
}

nlohmann::json adapt_item(const nlohmann::json& item, const char* type) {
    nlohmann::json out = item;
    if (type != nullptr && !out.contains("type")) {
        bool database = false;
        for (const auto& s : item.value("stereotypes", nlohmann::json::array())) {
            if (s == "database") database = true;
        }
        out["type"] = database && std::string_view(type) == "service" ? "database" : type;
    }
    if (out.contains("tagged_values")) out["tagged_values"] = adapt_tags(out["tagged_values"]);
    return out;
}

nlohmann::json items_list(const nlohmann::json& j) {
    if (j.is_array()) return j;
    nlohmann::json out = nlohmann::json::array();
    if (j.is_object()) {
        for (const auto& [key, value] : j.items()) {
            auto item = value;
            if (item.is_object() && !item.contains("name")) item["name"] = key;
            out.push_back(item);
        }
    }
    return out;
}

} // namespace

EvalCounts& EvalCounts::operator+=(const EvalCounts& o) {
    services += o.services;
    external_entities += o.external_entities;
    information_flows += o.information_flows;
    annotations += o.annotations;
    security_annotations += o.security_annotations;
    return *this;
}

Score Score::of(const GroupCounts& c) {
    return Score{ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn)};
}

MetricsRow metrics_of(const EvalCounts& c) {
    return MetricsRow{Score::of(c.services),    Score::of(c.external_entities),
                      Score::of(c.information_flows), Score::of(c.annotations),
                      Score::of(c.overall()),   Score::of(c.core()),
                      Score::of(c.security_annotations)};
}

EvalCounts match_items(const DfdDocument& extracted, const DfdDocument& truth) {
    auto e = items_of(extracted, "extracted");
    auto t = items_of(truth, "ground-truth");
    EvalCounts out;
    out.services = compare_nodes(e, t, NodeGroup::services);
    out.external_entities = compare_nodes(e, t, NodeGroup::external_entities);
    out.information_flows = compare(e.flows, t.flows);
    out.annotations = compare(e.annotations, t.annotations);
    out.security_annotations = compare(e.security, t.security);
    return out;
}

Metrics compute_metrics(const std::vector<EvalCounts>& counts) {
    if (counts.empty()) throw Error(ErrorKind::input, "no evaluation counts");
    Metrics m;
    for (const auto& c : counts) {
        m.per_app.push_back(metrics_of(c));
        m.total += c;
    }
    m.micro = metrics_of(m.total);
    for (auto field : {&MetricsRow::services, &MetricsRow::external_entities, &MetricsRow::information_flows,
                       &MetricsRow::annotations, &MetricsRow::overall, &MetricsRow::core, &MetricsRow::security}) {
        m.per_app_mean.*field = mean_of(m.per_app, field);
    }
    return m;
}

DfdDocument parse_ground_truth(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::input, std::string("malformed ground truth: ") + e.what());
    }
    if (j.is_object() && (j.contains("services") || j.contains("information_flows") ||
                          j.contains("external_entities"))) {
        nlohmann::json doc;
        doc["nodes"] = nlohmann::json::array();
        doc["flows"] = nlohmann::json::array();
        for (const auto& item : items_list(j.value("services", nlohmann::json()))) {
            doc["nodes"].push_back(adapt_item(item, "service"));
        }
        for (const auto& item : items_list(j.value("external_entities", nlohmann::json()))) {
            doc["nodes"].push_back(adapt_item(item, "external_entity"));
        }
        for (const auto& item : items_list(j.value("information_flows", nlohmann::json()))) {
            doc["flows"].push_back(adapt_item(item, nullptr));
        }
        return parse_dfd_json(doc.dump());
    }
    return parse_dfd_json(text);
}

std::string metrics_to_json(const std::vector<std::string>& apps, const std::vector<EvalCounts>& counts,
                            const Metrics& metrics) {
    nlohmann::ordered_json out;
    out["applications"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < counts.size(); ++i) {
        nlohmann::ordered_json app;
        app["name"] = i < apps.size() ? apps[i] : std::to_string(i + 1);
        app["counts"] = all_counts_json(counts[i]);
        app["metrics"] = row_json(metrics.per_app[i]);
        out["applications"].push_back(std::move(app));
    }
    out["total"] = all_counts_json(metrics.total);
    out["micro"] = row_json(metrics.micro);
    out["per_app_mean"] = row_json(metrics.per_app_mean);
    return out.dump(4) + "\n";
}

} // namespace dfdx
