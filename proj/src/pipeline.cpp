#include "dfdx/extractors.hpp"

#include "dfdx/error.hpp"
#include "extract_util.hpp"
#include "util.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <cctype>
#include <sstream>

namespace dfdx {

namespace {

constexpr Phase kPhases[] = {Phase::parse, Phase::node, Phase::flow, Phase::annotation, Phase::finalize};

void write_trace(std::ostream& os, const TraceEntry& t) {
    os << t.rank << '\x1f' << t.file << '\x1f' << t.line << '\x1f' << t.span.start << ':' << t.span.end << '\x1f'
       << t.evidence;
}

void write_set(std::ostream& os, const std::set<Stereotype>& stereotypes) {
    for (const auto& s : stereotypes) os << s.name() << ',';
}

void write_tags(std::ostream& os, const TaggedValues& tags) {
    for (const auto& [k, values] : tags) {
        os << k << '=';
        for (const auto& v : values) os << v << '|';
        os << ';';
    }
}

std::string sort_key(const Deltas::NodeOp& op) {
    std::ostringstream os;
    os << normalize_name(op.node.display_name) << '\x1e' << to_string(op.node.type) << '\x1e' << op.node.display_name
       << '\x1e';
    write_set(os, op.node.stereotypes);
    write_tags(os, op.node.tagged_values);
    write_trace(os, op.trace);
    return os.str();
}

std::string sort_key(const Deltas::FlowOp& op) {
    std::ostringstream os;
    os << op.flow.sender << '\x1e' << op.flow.receiver << '\x1e' << static_cast<int>(op.self_flows) << '\x1e';
    write_set(os, op.flow.stereotypes);
    write_tags(os, op.flow.tagged_values);
    write_trace(os, op.trace);
    return os.str();
}

std::string sort_key(const Deltas::AnnotateOp& op) {
    std::ostringstream os;
    if (const auto* node = std::get_if<std::string>(&op.target)) {
        os << "n\x1e" << *node;
    } else {
        const auto& key = std::get<FlowKey>(op.target);
        os << "f\x1e" << key.first << '\x1e' << key.second;
    }
    os << '\x1e' << (op.stereotype ? op.stereotype->name() : std::string_view{}) << '\x1e';
    write_tags(os, op.tags);
    write_trace(os, op.trace);
    return os.str();
}

std::string target_name(const AnnotationTarget& target) {
    if (const auto* node = std::get_if<std::string>(&target)) return *node;
    return flow_id(std::get<FlowKey>(target));
}

template <class Op>
std::vector<const Op*> sorted_ops(const std::vector<Deltas>& deltas, const std::vector<Op>& (Deltas::*get)() const) {
    std::vector<std::pair<std::string, const Op*>> keyed;
    for (const auto& d : deltas) {
        for (const auto& op : (d.*get)()) {
            std::string key;
            try {
                key = sort_key(op);
            } catch (const Error&) {
                // Invalid names still apply (and fail) deterministically.
                key = "\x7f" + op.trace.file + std::to_string(op.trace.line);
            }
            keyed.emplace_back(std::move(key), &op);
        }
    }
    std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<const Op*> out;
    out.reserve(keyed.size());
    for (const auto& [key, op] : keyed) out.push_back(op);
    return out;
}

void sort_unique(std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

void apply_deltas(PipelineResult& result, const std::vector<Deltas>& deltas) {
    auto& dfd = result.dfd;
    auto& report = result.report;
    for (const auto* op : sorted_ops(deltas, &Deltas::nodes)) {
        try {
            dfd.upsert_node(op->node, op->trace);
        } catch (const Error& e) {
            (e.kind() == ErrorKind::conflict ? report.conflicts : report.errors).push_back(e.what());
        }
    }
    for (const auto* op : sorted_ops(deltas, &Deltas::flows)) {
        try {
            dfd.upsert_flow(op->flow, op->trace, op->self_flows);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::self_flow) {
                ++report.suppressed_self_flows;
            } else {
                report.errors.push_back(e.what());
            }
        }
    }
    for (const auto* op : sorted_ops(deltas, &Deltas::annotations)) {
        try {
            dfd.annotate(op->target, op->stereotype, op->tags, op->trace);
        } catch (const Error& e) {
            report.errors.push_back(target_name(op->target) + ": " + e.what());
        }
    }
    for (const auto& d : deltas) {
        for (const auto& f : d.features()) result.features.add(f);
        report.unresolved.insert(report.unresolved.end(), d.unresolved_items().begin(), d.unresolved_items().end());
        report.warnings.insert(report.warnings.end(), d.warnings().begin(), d.warnings().end());
    }
}

bool glob(const std::string& pattern, std::string_view text) {
    return fnmatch(pattern.c_str(), std::string(text).c_str(), 0) == 0;
}

// Flows of `owner` a rule's flow effect applies to.
std::vector<FlowKey> scoped_flows(const ExtractorContext& ctx, const FlowEffect& effect, const std::string& owner,
                                  const std::string& file) {
    auto scope = effect.scope;
    if (ctx.workspace.options().paper_parity && effect.parity_scope) scope = *effect.parity_scope;
    std::vector<FlowKey> out;
    auto candidates = scope == FlowScope::incoming ? detail::flows_to(ctx.dfd, owner) : detail::flows_from(ctx.dfd, owner);
    for (const auto& key : candidates) {
        const auto* flow = ctx.dfd.find_flow(key);
        if (effect.filter && !flow->has(*effect.filter)) continue;
        if (scope == FlowScope::incoming) {
            const auto* sender = ctx.dfd.find_node(key.first);
            if (sender == nullptr || sender->type == NodeType::external_entity) continue;
        }
        if (scope == FlowScope::file && !detail::flow_files(ctx.dfd, key).contains(file)) continue;
        out.push_back(key);
    }
    return out;
}

void apply_effects(const ExtractorContext& ctx, Deltas& out, const std::string& owner,
                   const std::vector<std::string>& stereotypes, const std::optional<FlowEffect>& flows,
                   const std::string& file, const TraceEntry& trace) {
    for (const auto& s : stereotypes) out.annotate(owner, Stereotype(s), {}, trace);
    if (!flows) return;
    for (const auto& key : scoped_flows(ctx, *flows, owner, file)) {
        for (const auto& s : flows->stereotypes) out.annotate(key, Stereotype(s), {}, trace);
    }
}

bool identifier_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// "@EnableHystrix" must not fire on "@EnableHystrixDashboard".
bool extends_identifier(std::string_view seed, const Match& m) {
    if (seed.empty() || !identifier_char(seed.back())) return false;
    return m.span.end < m.line_text.size() && identifier_char(m.line_text[m.span.end]);
}

void run_keyword_rule(const KeywordRule& rule, const ExtractorContext& ctx, Deltas& out) {
    const auto& ws = ctx.workspace;
    auto options = ws.search_options(rule.languages);
    // Each hit: the owning file and the evidence traces.
    std::vector<std::vector<Match>> hits;
    for (const auto& seed : rule.seeds) {
        auto keyword = rule.regex ? Keyword::pattern(seed) : Keyword::literal(seed);
        if (rule.iterative) {
            for (auto& chain : iterative_search(ws.index(), keyword, rule.iterative->extract, rule.iterative->follow,
                                                options)) {
                if (chain.resolved) hits.push_back(std::move(chain.matches));
            }
        } else {
            for (auto& m : find_keyword(ws.index(), keyword, options)) {
                if (!rule.regex && extends_identifier(seed, m)) continue;
                hits.push_back({std::move(m)});
            }
        }
    }
    for (const auto& chain : hits) {
        const auto& first = chain.front();
        if (rule.files) {
            const auto* file = ws.index().find(first.file);
            if (file == nullptr || !glob(*rule.files, file->filename())) continue;
        }
        const auto* owner = ws.owner_of(first.file);
        if (owner == nullptr || ctx.dfd.find_node(owner->name) == nullptr) continue;
        for (const auto& m : chain) {
            apply_effects(ctx, out, owner->name, rule.stereotypes, rule.flows, first.file, m.trace());
        }
        if (rule.external) {
            const auto& ext = *rule.external;
            Node entity = Node::make(ext.name, NodeType::external_entity);
            for (const auto& s : ext.stereotypes) entity.stereotypes.insert(Stereotype(s));
            out.node(std::move(entity), first.trace());
            Flow flow = ext.inbound ? Flow::make(ext.name, owner->name) : Flow::make(owner->name, ext.name);
            for (const auto& s : ext.flow_stereotypes) flow.stereotypes.insert(Stereotype(s));
            out.flow(std::move(flow), first.trace());
        }
    }
}

void run_property_rule(const PropertyRule& rule, const ExtractorContext& ctx, Deltas& out) {
    const auto& ws = ctx.workspace;
    for (const auto& unit : ws.units()) {
        if (ctx.dfd.find_node(unit.name) == nullptr) continue;
        for (const auto& [key, pv] : unit.properties.entries()) {
            if (key.starts_with("[")) continue;
            bool matched = std::any_of(rule.keys.begin(), rule.keys.end(), [&](const auto& k) { return glob(k, key); });
            if (!matched || (rule.truthy && !is_truthy(pv.value))) continue;
            auto trace = detail::property_trace(ws, pv, util::trim(pv.value));
            apply_effects(ctx, out, unit.name, rule.stereotypes, rule.flows, pv.trace.file, trace);
        }
    }
}

} // namespace

PipelineResult run_pipeline(const Workspace& workspace, const std::vector<Extractor>& registry) {
    if (registry.empty()) throw Error(ErrorKind::input, "extractor registry is empty");
    PipelineResult result;
    result.report.warnings = workspace.warnings();
    for (auto phase : kPhases) {
        ExtractorContext ctx{workspace, result.dfd, result.features};
        std::vector<Deltas> deltas;
        for (const auto& extractor : registry) {
            if (extractor.phase != phase) continue;
            ExtractorStats stats{extractor.name, phase};
            Deltas d;
            try {
                extractor.run(ctx, d);
            } catch (const std::exception& e) {
                stats.failed = true;
                result.report.errors.push_back(extractor.name + ": " + e.what());
                result.report.extractors.push_back(stats);
                continue;
            }
            stats.nodes = d.nodes().size();
            stats.flows = d.flows().size();
            stats.annotations = d.annotations().size();
            stats.features = d.features().size();
            result.report.extractors.push_back(stats);
            deltas.push_back(std::move(d));
        }
        apply_deltas(result, deltas);
    }

    auto& report = result.report;
    for (const auto& [name, node] : result.dfd.nodes()) {
        if (node.placeholder ||
            (node.type == NodeType::service && !node.has("internal") && !node.has("infrastructural"))) {
            report.unclassified.push_back(name);
        }
    }
    std::sort(report.extractors.begin(), report.extractors.end(),
              [](const auto& a, const auto& b) { return std::tie(a.phase, a.name) < std::tie(b.phase, b.name); });
    sort_unique(report.unresolved);
    sort_unique(report.errors);
    sort_unique(report.conflicts);
    sort_unique(report.warnings);
    result.dfd.check_invariants();
    return result;
}

std::vector<Extractor> default_registry(const RuleSet& rules) {
    std::vector<Extractor> registry{
        {"service_nodes", Phase::parse, extract_service_nodes},
        {"properties", Phase::parse, extract_properties},
        {"ports", Phase::node, extract_ports},
        {"endpoints", Phase::node, extract_endpoints},
        {"message_channels", Phase::node, extract_message_channels},
        {"feign", Phase::flow, extract_feign},
        {"rest", Phase::flow, extract_rest},
        {"message_broker", Phase::flow, extract_message_broker},
        {"config_server", Phase::flow, extract_config_server},
        {"discovery", Phase::flow, extract_discovery},
        {"gateway_routes", Phase::flow, extract_gateway_routes},
        {"databases", Phase::flow, extract_databases},
        {"mail", Phase::flow, extract_mail},
        {"monitoring", Phase::flow, extract_monitoring},
        {"auth_provider", Phase::flow, extract_auth_provider},
        {"implicit_user", Phase::flow, extract_implicit_user},
        {"ssl", Phase::annotation, extract_ssl_feature},
        {"plaintext_credentials", Phase::annotation, extract_plaintext_credentials},
        {"internal_infrastructural", Phase::finalize, classify_internal_infrastructural},
        {"entry_exit", Phase::finalize, classify_entry_exit},
    };
    for (const auto& rule : rules.keyword_rules) {
        registry.push_back({"rule:" + rule.name, rule.phase,
                            [rule](const ExtractorContext& ctx, Deltas& out) { run_keyword_rule(rule, ctx, out); }});
    }
    for (const auto& rule : rules.property_rules) {
        registry.push_back({"rule:" + rule.name, rule.phase,
                            [rule](const ExtractorContext& ctx, Deltas& out) { run_property_rule(rule, ctx, out); }});
    }
    std::stable_sort(registry.begin(), registry.end(),
                     [](const Extractor& a, const Extractor& b) { return a.phase < b.phase; });
    return registry;
}

std::set<std::string> builtin_stereotypes() {
    return {"restful_http",
            "feign_connection",
            "external_website",
            "github_repository",
            "jdbc",
            "external_database",
            "database",
            "mail_server",
            "tracing_server",
            "administration_server",
            "logging_server",
            "message_broker",
            "message_producer_rabbitmq",
            "message_consumer_rabbitmq",
            "message_producer_kafka",
            "message_consumer_kafka",
            "auth_provider",
            "user",
            "entrypoint",
            "exitpoint",
            "ssl_enabled",
            "plaintext_credentials",
            "plaintext_credentials_link",
            "plaintext_authentication",
            "internal",
            "infrastructural"};
}

} // namespace dfdx
