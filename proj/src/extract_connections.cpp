#include "dfdx/extractors.hpp"

#include "dfdx/error.hpp"
#include "extract_util.hpp"
#include "util.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

namespace dfdx {

using detail::Argument;
using detail::property_trace;

namespace {

const std::set<LanguageClass> kJava{LanguageClass::java};

bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Hits of an annotation keyword that are not prefixes of a longer name.
std::vector<Match> annotation_hits(const Workspace& ws, const std::string& keyword) {
    std::vector<Match> out;
    for (auto& m : ws.search(keyword, kJava)) {
        if (m.span.end < m.line_text.size() && ident_char(m.line_text[m.span.end])) continue;
        out.push_back(std::move(m));
    }
    return out;
}

const Argument* argument(const std::vector<Argument>& args, std::initializer_list<std::string_view> names,
                         bool positional_first = true) {
    for (const auto& a : args) {
        for (auto n : names) {
            if (a.name == n) return &a;
        }
    }
    if (positional_first && !args.empty() && args.front().name.empty()) return &args.front();
    return nullptr;
}

bool looks_external(std::string_view host) {
    if (detail::is_local_host(host)) return false;
    return host.find('.') != std::string_view::npos;
}

std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> out;
    if (auto q = path.find_first_of("?#"); q != std::string_view::npos) path = path.substr(0, q);
    std::stringstream ss{std::string(path)};
    for (std::string seg; std::getline(ss, seg, '/');) {
        if (!seg.empty()) out.push_back(seg);
    }
    return out;
}

bool path_matches(std::string_view declared, std::string_view called) {
    auto d = split_path(declared);
    auto c = split_path(called);
    if (d.empty() || d.size() > c.size()) return false;
    for (std::size_t i = 0; i < d.size(); ++i) {
        bool wildcard = d[i].front() == '{' || d[i] == "*" || d[i] == "**";
        bool variable = c[i].find('{') != std::string::npos;
        if (!wildcard && !variable && d[i] != c[i]) return false;
    }
    return true;
}

// First operand of a string concatenation: "http://x/" + id -> "http://x/"
Argument first_operand(const Argument& arg) {
    Argument out = arg;
    char quote = 0;
    for (std::size_t i = 0; i < arg.expression.size(); ++i) {
        char c = arg.expression[i];
        if (quote != 0) {
            if (c == '\\') {
                ++i;
            } else if (c == quote) {
                quote = 0;
            }
            continue;
        }
        if (c == '"') {
            quote = c;
        } else if (c == '+') {
            out.expression = std::string(util::trim(std::string_view(arg.expression).substr(0, i)));
            out.at.span.end = std::min(out.at.span.end, out.at.span.start + out.expression.size());
            break;
        }
    }
    return out;
}

struct Target {
    std::string node;
    bool external = false;
};

// Host of a URL to a node: a known service or node, else an external website.
std::optional<Target> url_target(const ExtractorContext& ctx, const Url& url) {
    if (auto node = detail::resolve_node(ctx, url.host)) return Target{*node, false};
    if (looks_external(url.host)) return Target{normalize_name(url.host), true};
    return std::nullopt;
}

void add_external_website(Deltas& out, const std::string& host, const TraceEntry& trace) {
    out.node(Node::make(host, NodeType::external_entity, {"external_website"}), trace);
}

std::optional<std::string> property(const Workspace& ws, const ServiceUnit& unit, const std::string& key,
                                    const PropertyValue** found = nullptr) {
    const auto* pv = unit.properties.find(key);
    if (pv == nullptr) return std::nullopt;
    if (found != nullptr) *found = pv;
    return detail::expand(ws, &unit, pv->value, pv->trace.file);
}

} // namespace

void extract_feign(const ExtractorContext& ctx, Deltas& out) {
    const auto& ws = ctx.workspace;
    for (const auto& keyword : ws.rules().keyword_list("feign_client")) {
        for (const auto& hit : annotation_hits(ws, keyword)) {
            const auto* owner = ws.owner_of(hit.file);
            if (owner == nullptr) {
                out.unresolved(hit.file + ":" + std::to_string(hit.line) + ": Feign client outside any service");
                continue;
            }
            auto args = detail::call_arguments(*ws.index().find(hit.file), hit.line, hit.span.end);
            const auto* name_arg = argument(args, {"name", "value", "serviceId"});
            const auto* url_arg = argument(args, {"url"}, false);
            std::optional<Target> target;
            TraceEntry trace = hit.trace();
            if (url_arg != nullptr) {
                auto value = detail::resolve_expression(ws, *url_arg);
                if (auto url = value.resolved ? parse_url(value.value) : std::nullopt) {
                    target = url_target(ctx, *url);
                    if (target && target->external) add_external_website(out, url->host, value.trace);
                }
            }
            if (!target && name_arg != nullptr) {
                auto value = detail::resolve_expression(ws, *name_arg);
                if (value.resolved && !util::trim(value.value).empty()) {
                    if (auto node = detail::resolve_node(ctx, value.value)) {
                        target = Target{*node, false};
                    } else {
                        target = Target{normalize_name(value.value), false};
                        out.unresolved(owner->name + ": Feign target '" + value.value + "' is not a known service");
                    }
                }
            }
            if (!target) {
                out.unresolved(hit.file + ":" + std::to_string(hit.line) + ": Feign target not resolvable");
                continue;
            }
            if (target->node == owner->name) continue;
            out.flow(Flow::make(owner->name, target->node, {"restful_http", "feign_connection"}), trace);
        }
    }
}

void extract_endpoints(const ExtractorContext& ctx, Deltas& out) {
    const auto& ws = ctx.workspace;
    struct Mapping {
        Match hit;
        std::vector<detail::ResolvedValue> paths;
        std::string method;
        bool class_level = false;
    };
    std::map<std::string, std::vector<Mapping>> by_file;
    for (const auto& keyword : ws.rules().keyword_list("endpoint_mappings")) {
        for (const auto& hit : annotation_hits(ws, keyword)) {
            const auto& file = *ws.index().find(hit.file);
            auto args = detail::call_arguments(file, hit.line, hit.span.end);
            Mapping mapping{hit, {}, "", false};
            auto verb = keyword.substr(1, keyword.size() - 1 - std::string("Mapping").size());
            mapping.method = verb == "Request" ? "ANY" : util::lower(verb);
            std::transform(mapping.method.begin(), mapping.method.end(), mapping.method.begin(), ::toupper);
            if (const auto* m = argument(args, {"method"}, false)) {
                static const std::regex verb_re(R"(RequestMethod\.(\w+))");
                std::smatch vm;
                if (std::regex_search(m->expression, vm, verb_re)) mapping.method = vm.str(1);
            }
            if (const auto* p = argument(args, {"value", "path"})) {
                for (const auto& el : detail::array_elements(*p)) {
                    auto v = detail::resolve_expression(ws, el);
                    if (v.resolved) mapping.paths.push_back(v);
                }
            }
            for (std::size_t row = hit.line; row < file.lines.size() && row < hit.line + 8; ++row) {
                auto text = util::trim(file.lines[row]);
                if (text.empty() || text.starts_with("@") || text.starts_with("//")) continue;
                static const std::regex class_re(R"(\b(class|interface)\s+\w+)");
                mapping.class_level = std::regex_search(file.lines[row], class_re);
                break;
            }
            by_file[hit.file].push_back(std::move(mapping));
        }
    }
    for (const auto& [path, mappings] : by_file) {
        const auto* owner = ws.owner_of(path);
        if (owner == nullptr) continue;
        std::vector<std::string> prefixes{""};
        for (const auto& m : mappings) {
            if (!m.class_level || m.paths.empty()) continue;
            prefixes.clear();
            for (const auto& p : m.paths) prefixes.push_back(p.value);
        }
        for (const auto& m : mappings) {
            if (m.class_level) continue;
            std::vector<detail::ResolvedValue> paths = m.paths;
            if (paths.empty()) paths.push_back({"", m.hit.trace(), true});
            for (const auto& prefix : prefixes) {
                for (const auto& p : paths) {
                    std::string full = prefix + p.value;
                    if (full.empty()) full = "/";
                    if (full.front() != '/') full.insert(full.begin(), '/');
                    out.feature(Feature{FeatureKind::endpoint_declared, owner->name,
                                        {{"path", full}, {"method", m.method}}, p.trace});
                }
            }
        }
    }
}

void extract_rest(const ExtractorContext& ctx, Deltas& out) {
    const auto& ws = ctx.workspace;
    const auto& rules = ws.rules();
    std::vector<Match> calls;
    for (const auto& type : rules.keyword_list("rest_client_types")) {
        auto chains = iterative_search(ws.index(), Keyword::literal(type), ExtractionRule::variable_of(type),
                                       rules.keyword_list("rest_client_calls"), ws.search_options(kJava));
        for (const auto& chain : chains) {
            if (chain.resolved && chain.matches.size() >= 2) calls.push_back(chain.matches.back());
        }
    }
    for (const auto& member : rules.keyword_list("web_client_calls")) {
        for (const auto& hit : ws.search("." + member + "(", kJava)) {
            Match adjusted = hit;
            adjusted.span.end -= 1; // leave the parenthesis to the argument parser
            calls.push_back(adjusted);
        }
    }
    std::sort(calls.begin(), calls.end());
    calls.erase(std::unique(calls.begin(), calls.end()), calls.end());

    for (const auto& call : calls) {
        const auto* caller = ws.owner_of(call.file);
        if (caller == nullptr) continue;
        auto args = detail::call_arguments(*ws.index().find(call.file), call.line, call.span.end);
        if (args.empty()) continue;
        auto value = detail::resolve_expression(ws, first_operand(args.front()));
        if (!value.resolved) {
            out.unresolved(call.file + ":" + std::to_string(call.line) + ": request URL not resolvable");
            continue;
        }
        auto url = parse_url(value.value);
        if (!url || (url->scheme != "http" && url->scheme != "https" && url->scheme != "lb")) continue;
        auto target = url_target(ctx, *url);
        if (!target) {
            out.unresolved(call.file + ":" + std::to_string(call.line) + ": unknown host '" + url->host + "'");
            continue;
        }
        if (target->node == caller->name) continue;
        auto trace = value.trace;
        if (target->external) add_external_website(out, url->host, trace);
        out.flow(Flow::make(caller->name, target->node, {"restful_http"}), trace);
        if (target->external) continue;
        for (const auto* endpoint : ctx.features.of(FeatureKind::endpoint_declared, target->node)) {
            if (path_matches(endpoint->get("path"), url->path)) {
                out.annotate(target->node, std::nullopt, {{"Endpoint", {endpoint->get("path")}}}, endpoint->trace);
            }
        }
    }
}

void extract_config_server(const ExtractorContext& ctx, Deltas& out) {
    const auto& ws = ctx.workspace;
    for (const auto* f : ctx.features.of(FeatureKind::config_client)) {
        auto server = detail::resolve_node(ctx, f->get("host"));
        if (!server) server = detail::node_with(ctx.dfd, "configuration_server");
        if (!server) {
            out.unresolved(f->owner + ": config server host '" + f->get("host") + "' unknown");
            continue;
        }
        if (*server == f->owner) continue;
        out.flow(Flow::make(*server, f->owner, {"restful_http"}), f->trace);
    }
    for (const auto& unit : ws.units()) {
        const PropertyValue* pv = nullptr;
        auto value = property(ws, unit, "spring.cloud.config.server.git.uri", &pv);
        if (!value) continue;
        auto url = parse_url(*value);
        if (!url || url->scheme == "file" || detail::is_local_host(url->host)) continue;
        bool github = url->host.find("github") != std::string::npos;
        std::string name = github ? "github-repository" : url->host;
        auto trace = property_trace(ws, *pv, util::trim(pv->value));
        if (github) {
            out.node(Node::make(name, NodeType::external_entity, {"github_repository"}), trace);
        } else {
            out.node(Node::make(name, NodeType::external_entity), trace);
        }
        out.flow(Flow::make(name, unit.name), trace);
    }
}

void extract_discovery(const ExtractorContext& ctx, Deltas& out) {
    const auto& ws = ctx.workspace;
    std::set<std::string> registered;
    for (const auto* f : ctx.features.of(FeatureKind::discovery_registration)) {
        auto registry = detail::resolve_node(ctx, f->get("host"));
        if (!registry) registry = detail::node_with(ctx.dfd, "service_discovery");
        if (!registry) {
            out.unresolved(f->owner + ": discovery host '" + f->get("host") + "' unknown");
            continue;
        }
        registered.insert(f->owner);
        out.flow(Flow::make(f->owner, *registry, {"restful_http"}), f->trace);
        out.flow(Flow::make(*registry, f->owner, {"restful_http"}), f->trace);
    }
    auto registry = detail::node_with(ctx.dfd, "service_discovery");
    if (!registry) return;
    for (const auto& keyword : ws.rules().keyword_list("discovery_client")) {
        for (const auto& hit : annotation_hits(ws, keyword)) {
            const auto* owner = ws.owner_of(hit.file);
            if (owner == nullptr || registered.contains(owner->name)) continue;
            out.flow(Flow::make(owner->name, *registry, {"restful_http"}), hit.trace());
            out.flow(Flow::make(*registry, owner->name, {"restful_http"}), hit.trace());
        }
    }
}

void extract_gateway_routes(const ExtractorContext& ctx, Deltas& out) {
    const auto& ws = ctx.workspace;
    static const std::regex zuul_re(R"(^zuul\.routes\.([^.]+)(?:\.(url|serviceid|service-id|path))?$)");
    static const std::regex scg_re(R"(^spring\.cloud\.gateway\.routes\[\d+\]\.uri$)");
    for (const auto& unit : ws.units()) {
        const auto* node = ctx.dfd.find_node(unit.name);
        if (node == nullptr || !node->has("gateway")) continue;
        std::map<std::string, std::map<std::string, const PropertyValue*>> zuul;
        std::vector<const PropertyValue*> uris;
        for (const auto& [key, pv] : unit.properties.entries()) {
            std::smatch m;
            if (std::regex_match(key, m, zuul_re)) {
                zuul[m.str(1)][m[2].matched ? m.str(2) : "path"] = &pv;
            } else if (std::regex_match(key, scg_re)) {
                uris.push_back(&pv);
            }
        }
        auto route_to = [&](const std::string& host, const PropertyValue& pv) {
            Url url;
            url.host = util::lower(host);
            auto target = url_target(ctx, url);
            auto trace = property_trace(ws, pv, util::trim(pv.value));
            if (!target) {
                out.unresolved(unit.name + ": route target '" + host + "' unknown");
                return;
            }
            if (target->node == unit.name) return;
            if (target->external) add_external_website(out, host, trace);
            out.flow(Flow::make(unit.name, target->node, {"restful_http"}), trace);
        };
        for (const auto& [route, fields] : zuul) {
            if (auto it = fields.find("url"); it != fields.end()) {
                auto value = detail::expand(ws, &unit, it->second->value, it->second->trace.file);
                if (auto url = value ? parse_url(*value) : std::nullopt) route_to(url->host, *it->second);
            } else if (auto sid = fields.contains("serviceid") ? fields.find("serviceid") : fields.find("service-id");
                       sid != fields.end()) {
                route_to(std::string(util::trim(sid->second->value)), *sid->second);
            } else if (auto p = fields.find("path"); p != fields.end()) {
                route_to(route, *p->second);
            }
        }
        for (const auto* pv : uris) {
            auto value = detail::expand(ws, &unit, pv->value, pv->trace.file);
            if (auto url = value ? parse_url(*value) : std::nullopt) route_to(url->host, *pv);
        }
    }
}

void extract_databases(const ExtractorContext& ctx, Deltas& out) {
    const auto& ws = ctx.workspace;
    for (const auto& unit : ws.units()) {
        for (auto key : {"spring.datasource.url", "spring.datasource.jdbc-url", "spring.datasource.jdbcurl"}) {
            const PropertyValue* pv = nullptr;
            auto value = property(ws, unit, key, &pv);
            if (!value) continue;
            auto trace = property_trace(ws, *pv, util::trim(pv->value));
            if (value->find("//") == std::string::npos && value->find('@') == std::string::npos) continue; // embedded
            auto url = parse_url(*value);
            if (!url || detail::is_local_host(url->host)) {
                out.unresolved(unit.name + ": datasource '" + *value + "' has no resolvable host");
                continue;
            }
            auto node = detail::resolve_node(ctx, url->host);
            if (!node) {
                node = normalize_name(url->host);
                out.node(Node::make(url->host, NodeType::external_entity, {"external_database"}), trace);
            }
            if (*node == unit.name) continue;
            out.flow(Flow::make(unit.name, *node, {"jdbc"}), trace);
            break;
        }
        for (auto key : {"spring.data.mongodb.uri", "spring.data.mongodb.host", "spring.redis.host",
                         "spring.data.redis.host", "spring.data.cassandra.contact-points"}) {
            const PropertyValue* pv = nullptr;
            auto value = property(ws, unit, key, &pv);
            if (!value) continue;
            auto url = parse_url(*value);
            if (!url || detail::is_local_host(url->host)) continue;
            auto trace = property_trace(ws, *pv, util::trim(pv->value));
            auto node = detail::resolve_node(ctx, url->host);
            if (!node) {
                if (std::string_view(key).find("redis") != std::string_view::npos) {
                    out.unresolved(unit.name + ": cache host '" + url->host + "' unknown");
                    continue;
                }
                node = normalize_name(url->host);
                out.node(Node::make(url->host, NodeType::external_entity, {"external_database"}), trace);
            }
            if (*node == unit.name) continue;
            out.flow(Flow::make(unit.name, *node), trace);
        }
    }
}

void extract_mail(const ExtractorContext& ctx, Deltas& out) {
    const auto& ws = ctx.workspace;
    for (const auto& unit : ws.units()) {
        const auto* pv = unit.properties.find("spring.mail.host");
        if (pv == nullptr || util::trim(pv->value).empty()) continue;
        auto trace = property_trace(ws, *pv, util::trim(pv->value));
        out.node(Node::make("mail-server", NodeType::external_entity, {"mail_server"}), trace);
        out.flow(Flow::make(unit.name, "mail_server"), trace);
    }
}

void extract_monitoring(const ExtractorContext& ctx, Deltas& out) {
    const auto& ws = ctx.workspace;
    auto connect = [&](const ServiceUnit& unit, const std::string& key, std::string_view stereotype,
                       std::string_view hint) {
        const PropertyValue* pv = nullptr;
        auto value = property(ws, unit, key, &pv);
        if (!value) return;
        auto url = parse_url(*value);
        auto trace = property_trace(ws, *pv, util::trim(pv->value));
        std::optional<std::string> target;
        if (url && !detail::is_local_host(url->host)) target = detail::resolve_node(ctx, url->host);
        if (!target) target = detail::node_with(ctx.dfd, stereotype, hint);
        if (!target && url && !detail::is_local_host(url->host)) {
            target = normalize_name(url->host);
            out.node(Node::make(url->host, NodeType::service, {stereotype}), trace);
        }
        if (!target) {
            out.unresolved(unit.name + ": " + key + " '" + *value + "' unknown");
            return;
        }
        out.flow(Flow::make(unit.name, *target, {"restful_http"}), trace);
    };
    for (const auto& unit : ws.units()) {
        for (auto key : {"spring.zipkin.base-url", "spring.zipkin.baseurl"}) connect(unit, key, "tracing_server", "zipkin");
        for (auto key : {"spring.boot.admin.client.url", "spring.boot.admin.url"}) {
            connect(unit, key, "administration_server", "admin");
        }
        for (auto key : {"turbine.app-config", "turbine.appconfig"}) {
            const auto* pv = unit.properties.find(key);
            if (pv == nullptr) continue;
            std::stringstream ss(pv->value);
            for (std::string app; std::getline(ss, app, ',');) {
                auto name = std::string(util::trim(app));
                if (name.empty()) continue;
                auto source = detail::resolve_node(ctx, name);
                if (!source) {
                    out.unresolved(unit.name + ": turbine application '" + name + "' unknown");
                    continue;
                }
                out.flow(Flow::make(*source, unit.name), property_trace(ws, *pv, name), SelfFlows::reject);
            }
        }
    }

    // Prometheus scrape targets: every target feeds the metrics server.
    for (const auto& file : ws.index().files()) {
        if (file.filename() != "prometheus.yml" && file.filename() != "prometheus.yaml") continue;
        auto prometheus = detail::node_with(ctx.dfd, "metrics_server", "prometheus");
        if (!prometheus) continue;
        PropertyFile parsed;
        try {
            parsed = parse_properties(file);
        } catch (const Error& e) {
            out.warning(e.what());
            continue;
        }
        static const std::regex target_re(R"(^scrape_configs\[\d+\]\.static_configs\[\d+\]\.targets\[\d+\]$)");
        const auto merged = parsed.merged();
        for (const auto& [key, pv] : merged.entries()) {
            if (!std::regex_match(key, target_re)) continue;
            auto url = parse_url(pv.value);
            if (!url) continue;
            auto source = detail::resolve_node(ctx, url->host);
            if (!source) continue;
            out.flow(Flow::make(*source, *prometheus), property_trace(ws, pv, util::trim(pv.value)));
        }
    }

    // Log shipping to a logstash instance.
    for (const auto& keyword : ws.rules().keyword_list("logstash")) {
        for (const auto& hit : ws.search(keyword, std::nullopt)) {
            const auto* owner = ws.owner_of(hit.file);
            if (owner == nullptr) continue;
            auto target = detail::node_with(ctx.dfd, "logging_server", "logstash");
            if (!target) {
                target = "logstash";
                out.node(Node::make("logstash", NodeType::external_entity, {"logging_server"}), hit.trace());
            }
            if (*target == owner->name) continue;
            out.flow(Flow::make(owner->name, *target), hit.trace());
        }
    }
}

void extract_auth_provider(const ExtractorContext& ctx, Deltas& out) {
    const auto& ws = ctx.workspace;
    static const std::vector<std::string> keys{
        "security.oauth2.client.access-token-uri", "security.oauth2.client.accesstokenuri",
        "security.oauth2.resource.user-info-uri",  "security.oauth2.resource.userinfouri",
        "security.oauth2.resource.token-info-uri", "security.oauth2.resource.tokeninfouri",
        "spring.security.oauth2.resourceserver.jwt.issuer-uri",
        "spring.security.oauth2.resourceserver.jwt.jwk-set-uri"};
    for (const auto& unit : ws.units()) {
        for (const auto& key : keys) {
            const PropertyValue* pv = nullptr;
            auto value = property(ws, unit, key, &pv);
            if (!value) continue;
            auto url = parse_url(*value);
            if (!url) continue;
            auto provider = detail::resolve_node(ctx, url->host);
            if (!provider) {
                if (!detail::is_local_host(url->host)) out.unresolved(unit.name + ": token host '" + url->host + "' unknown");
                continue;
            }
            if (*provider == unit.name) continue;
            out.flow(Flow::make(*provider, unit.name, {"restful_http", "auth_provider"}),
                     property_trace(ws, *pv, util::trim(pv->value)));
        }
    }
}

} // namespace dfdx
