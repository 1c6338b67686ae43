#include "dfdx/extractors.hpp"

#include "extract_util.hpp"
#include "util.hpp"

#include <algorithm>
#include <regex>

namespace dfdx {

namespace {

const std::set<LanguageClass> kJava{LanguageClass::java};

using Payload = std::map<std::string, std::string>;

struct Value {
    std::string text;
    TraceEntry trace;
};

std::optional<Value> resolve(const Workspace& ws, const detail::Argument& arg) {
    auto v = detail::resolve_expression(ws, arg);
    if (!v.resolved) return std::nullopt;
    return Value{v.value, v.trace};
}

std::vector<Value> resolve_all(const Workspace& ws, const detail::Argument& arg) {
    std::vector<Value> out;
    for (const auto& el : detail::array_elements(arg)) {
        if (auto v = resolve(ws, el)) out.push_back(std::move(*v));
    }
    return out;
}

const detail::Argument* named(const std::vector<detail::Argument>& args, std::string_view name) {
    for (const auto& a : args) {
        if (a.name == name) return &a;
    }
    return nullptr;
}

std::vector<Match> send_calls(const Workspace& ws, const std::string& types_list, const std::string& send_list) {
    std::vector<Match> out;
    const auto& rules = ws.rules();
    for (const auto& type : rules.keyword_list(types_list)) {
        for (const auto& chain : iterative_search(ws.index(), Keyword::literal(type), ExtractionRule::variable_of(type),
                                                  rules.keyword_list(send_list), ws.search_options(kJava))) {
            if (chain.resolved && chain.matches.size() >= 2) out.push_back(chain.matches.back());
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Argument list of the annotation or call a match starts.
std::vector<detail::Argument> arguments_at(const Workspace& ws, const Match& m) {
    return detail::call_arguments(*ws.index().find(m.file), m.line, m.span.end);
}

// Identifier a declaration is bound to: `x = new T(...)` or the enclosing bean method `T x() {`.
std::optional<std::string> declared_identifier(const SourceFile& file, const Match& m, std::string_view type) {
    std::regex assigned(R"((\w+)\s*=\s*new\s+)" + std::string(type) + R"(\b)");
    std::smatch sm;
    if (std::regex_search(m.line_text, sm, assigned)) return sm.str(1);
    std::regex method(R"(\b)" + std::string(type) + R"(\s+(\w+)\s*\()");
    for (std::size_t row = m.line; row > 0 && row + 6 > m.line; --row) {
        const auto& text = file.lines[row - 1];
        if (std::regex_search(text, sm, method)) return sm.str(1);
    }
    return std::nullopt;
}

void rabbit_declarations(const Workspace& ws, Deltas& out) {
    struct Declared {
        std::string name;
        std::string owner;
        TraceEntry trace;
    };
    // file -> identifier -> declared name
    std::map<std::string, std::map<std::string, Declared>> queues;
    std::map<std::string, std::map<std::string, Declared>> exchanges;
    auto collect = [&](const std::string& type, auto& into) {
        for (const auto& hit : ws.search("new " + type, kJava)) {
            const auto* owner = ws.owner_of(hit.file);
            if (owner == nullptr) continue;
            auto end = hit.span.end;
            if (end < hit.line_text.size() && std::isalnum(static_cast<unsigned char>(hit.line_text[end]))) continue;
            auto args = arguments_at(ws, hit);
            if (args.empty()) continue;
            auto name = resolve(ws, args.front());
            if (!name) continue;
            const auto& file = *ws.index().find(hit.file);
            auto id = declared_identifier(file, hit, type).value_or(name->text);
            into[hit.file][id] = Declared{name->text, owner->name, name->trace};
        }
    };
    for (const auto& type : ws.rules().keyword_list("rabbit_queue_types")) collect(type, queues);
    for (const auto& type : ws.rules().keyword_list("rabbit_exchange_types")) collect(type, exchanges);

    static const std::regex binding(
        R"(BindingBuilder\s*\.\s*bind\s*\(\s*(\w+)(?:\(\))?\s*\)\s*\.\s*to\s*\(\s*(\w+)(?:\(\))?\s*\)(?:\s*\.\s*with\s*\(\s*([^)]*)\))?)");
    auto lookup = [](const auto& table, const std::string& file, const std::string& id) -> const Declared* {
        auto f = table.find(file);
        if (f == table.end()) return nullptr;
        if (auto it = f->second.find(id); it != f->second.end()) return &it->second;
        if (f->second.size() == 1) return &f->second.begin()->second;
        return nullptr;
    };
    std::set<std::pair<std::string, std::string>> bound;
    for (const auto& hit : ws.search("BindingBuilder", kJava)) {
        std::smatch m;
        if (!std::regex_search(hit.line_text, m, binding)) continue;
        const auto* queue = lookup(queues, hit.file, m.str(1));
        const auto* exchange = lookup(exchanges, hit.file, m.str(2));
        if (queue == nullptr || exchange == nullptr) continue;
        Payload payload{{"technology", "rabbitmq"}, {"queue", queue->name}, {"exchange", exchange->name}};
        if (m[3].matched) {
            detail::Argument key{"", m.str(3), hit};
            if (auto k = resolve(ws, key)) payload["routing_key"] = k->text;
        }
        bound.emplace(queue->owner, queue->name);
        out.feature(Feature{FeatureKind::message_queue, queue->owner, std::move(payload), hit.trace()});
    }
    for (const auto& [file, ids] : queues) {
        for (const auto& [id, q] : ids) {
            if (bound.contains({q.owner, q.name})) continue;
            out.feature(Feature{FeatureKind::message_queue, q.owner, {{"technology", "rabbitmq"}, {"queue", q.name}},
                                q.trace});
        }
    }
}

void rabbit_producers(const Workspace& ws, Deltas& out) {
    for (const auto& call : send_calls(ws, "rabbit_templates", "rabbit_send")) {
        const auto* owner = ws.owner_of(call.file);
        if (owner == nullptr) continue;
        auto args = arguments_at(ws, call);
        Payload payload{{"technology", "rabbitmq"}, {"role", "producer"}, {"exchange", ""}};
        std::optional<TraceEntry> trace;
        if (args.size() >= 3) {
            auto exchange = resolve(ws, args[0]);
            auto key = resolve(ws, args[1]);
            if (!exchange) {
                out.unresolved(call.file + ":" + std::to_string(call.line) + ": exchange not resolvable");
                continue;
            }
            payload["exchange"] = exchange->text;
            trace = exchange->trace;
            if (key) payload["routing_key"] = key->text;
        } else if (args.size() == 2) {
            auto key = resolve(ws, args[0]);
            if (!key) {
                out.unresolved(call.file + ":" + std::to_string(call.line) + ": routing key not resolvable");
                continue;
            }
            payload["routing_key"] = key->text;
            trace = key->trace;
        }
        out.feature(Feature{FeatureKind::message_exchange, owner->name, std::move(payload), trace.value_or(call.trace())});
    }
}

void rabbit_consumers(const Workspace& ws, Deltas& out) {
    static const std::regex queue_re(R"(@Queue\s*\(\s*(?:value\s*=\s*)?("[^"]*"|[\w.]+))");
    static const std::regex exchange_re(R"(@Exchange\s*\(\s*(?:value\s*=\s*)?("[^"]*"|[\w.]+))");
    static const std::regex key_re(R"(\bkey\s*=\s*("[^"]*"|[\w.]+))");
    for (const auto& keyword : ws.rules().keyword_list("rabbit_listener")) {
        for (const auto& hit : ws.search(keyword, kJava)) {
            const auto* owner = ws.owner_of(hit.file);
            if (owner == nullptr) continue;
            auto args = arguments_at(ws, hit);
            auto emit = [&](Payload payload, const TraceEntry& trace) {
                payload["technology"] = "rabbitmq";
                payload["role"] = "consumer";
                out.feature(Feature{FeatureKind::message_exchange, owner->name, std::move(payload), trace});
            };
            if (const auto* b = named(args, "bindings")) {
                auto part = [&](const std::regex& re) -> std::optional<Value> {
                    std::smatch m;
                    if (!std::regex_search(b->expression, m, re)) return std::nullopt;
                    detail::Argument a{"", m.str(1), b->at};
                    return resolve(ws, a);
                };
                auto exchange = part(exchange_re);
                auto queue = part(queue_re);
                auto key = part(key_re);
                if (!exchange && !queue) continue;
                Payload payload;
                if (exchange) payload["exchange"] = exchange->text;
                if (queue) payload["queue"] = queue->text;
                if (key) payload["routing_key"] = key->text;
                emit(std::move(payload), exchange ? exchange->trace : queue->trace);
                continue;
            }
            const auto* q = named(args, "queues");
            if (q == nullptr) q = named(args, "queuesToDeclare");
            if (q == nullptr && !args.empty() && args.front().name.empty()) q = &args.front();
            if (q == nullptr) continue;
            for (const auto& v : resolve_all(ws, *q)) {
                std::smatch m;
                std::string queue = v.text;
                if (std::regex_search(q->expression, m, queue_re)) {
                    detail::Argument a{"", m.str(1), q->at};
                    if (auto inner = resolve(ws, a)) queue = inner->text;
                }
                emit({{"queue", queue}}, v.trace);
            }
        }
    }
}

void kafka_channels(const Workspace& ws, Deltas& out) {
    for (const auto& call : send_calls(ws, "kafka_templates", "kafka_send")) {
        const auto* owner = ws.owner_of(call.file);
        if (owner == nullptr) continue;
        auto args = arguments_at(ws, call);
        if (args.empty()) continue;
        auto topic = resolve(ws, args.front());
        if (!topic) {
            out.unresolved(call.file + ":" + std::to_string(call.line) + ": topic not resolvable");
            continue;
        }
        out.feature(Feature{FeatureKind::message_exchange, owner->name,
                            {{"technology", "kafka"}, {"role", "producer"}, {"exchange", topic->text}}, topic->trace});
    }
    for (const auto& keyword : ws.rules().keyword_list("kafka_listener")) {
        for (const auto& hit : ws.search(keyword, kJava)) {
            const auto* owner = ws.owner_of(hit.file);
            if (owner == nullptr) continue;
            auto args = arguments_at(ws, hit);
            const auto* topics = named(args, "topics");
            if (topics == nullptr && !args.empty() && args.front().name.empty()) topics = &args.front();
            if (topics == nullptr) continue;
            for (const auto& v : resolve_all(ws, *topics)) {
                out.feature(Feature{FeatureKind::message_exchange, owner->name,
                                    {{"technology", "kafka"}, {"role", "consumer"}, {"exchange", v.text}}, v.trace});
            }
        }
    }
}

std::set<std::string> kafka_binder_units(const Workspace& ws) {
    std::set<std::string> out;
    for (auto keyword : {"spring-cloud-stream-binder-kafka", "spring-cloud-starter-stream-kafka"}) {
        for (const auto& hit : ws.search(keyword, std::set<LanguageClass>{LanguageClass::build})) {
            if (const auto* owner = ws.owner_of(hit.file)) out.insert(owner->name);
        }
    }
    return out;
}

void stream_bindings(const Workspace& ws, Deltas& out) {
    static const std::regex destination_re(R"(^spring\.cloud\.stream\.bindings\.([^.]+)\.destination$)");
    auto kafka_units = kafka_binder_units(ws);
    for (const auto& unit : ws.units()) {
        std::string technology = kafka_units.contains(unit.name) ? "kafka" : "rabbitmq";
        for (const auto& [key, pv] : unit.properties.entries()) {
            std::smatch m;
            if (!std::regex_match(key, m, destination_re)) continue;
            auto binding = m.str(1);
            std::string role;
            if (binding.find("input") != std::string::npos || binding.find("-in-") != std::string::npos) {
                role = "consumer";
            } else if (binding.find("output") != std::string::npos || binding.find("-out-") != std::string::npos) {
                role = "producer";
            } else {
                out.unresolved(unit.name + ": direction of stream binding '" + binding + "' unknown");
                continue;
            }
            auto destination = std::string(util::trim(pv.value));
            out.feature(Feature{FeatureKind::message_exchange, unit.name,
                                {{"technology", technology}, {"role", role}, {"exchange", destination}},
                                detail::property_trace(ws, pv, destination)});
        }
    }
    // Hystrix metrics published over the bus and aggregated by Turbine.
    static const std::string hystrix_destination = "springCloudHystrixStream";
    auto bus = [&](const std::string& list, std::optional<std::set<LanguageClass>> langs, const std::string& role) {
        for (const auto& keyword : ws.rules().keyword_list(list)) {
            for (const auto& hit : ws.search(keyword, langs)) {
                const auto* owner = ws.owner_of(hit.file);
                if (owner == nullptr) continue;
                std::string technology = kafka_units.contains(owner->name) ? "kafka" : "rabbitmq";
                out.feature(Feature{FeatureKind::message_exchange, owner->name,
                                    {{"technology", technology}, {"role", role}, {"exchange", hystrix_destination}},
                                    hit.trace()});
            }
        }
    };
    bus("hystrix_stream", std::set<LanguageClass>{LanguageClass::build}, "producer");
    bus("turbine_stream", kJava, "consumer");
}

std::optional<std::string> configured_broker(const ExtractorContext& ctx, const std::string& owner,
                                             const std::string& technology) {
    const auto* unit = ctx.workspace.unit(owner);
    if (unit == nullptr) return std::nullopt;
    std::vector<std::string> keys = technology == "kafka"
                                        ? std::vector<std::string>{"spring.kafka.bootstrap-servers",
                                                                   "spring.cloud.stream.kafka.binder.brokers"}
                                        : std::vector<std::string>{"spring.rabbitmq.host", "spring.rabbitmq.addresses"};
    for (const auto& key : keys) {
        auto value = unit->properties.get(key);
        if (!value) continue;
        auto expanded = detail::expand(ctx.workspace, unit, *value, "");
        auto url = expanded ? parse_url(*expanded) : std::nullopt;
        if (!url || detail::is_local_host(url->host)) continue;
        if (auto node = detail::resolve_node(ctx, url->host)) return node;
    }
    return std::nullopt;
}

} // namespace

void extract_message_channels(const ExtractorContext& ctx, Deltas& out) {
    const auto& ws = ctx.workspace;
    rabbit_declarations(ws, out);
    rabbit_producers(ws, out);
    rabbit_consumers(ws, out);
    kafka_channels(ws, out);
    stream_bindings(ws, out);
}

void extract_message_broker(const ExtractorContext& ctx, Deltas& out) {
    // Queue -> exchange bindings declared anywhere in the application.
    std::map<std::string, std::set<std::string>> queue_exchanges;
    for (const auto* f : ctx.features.of(FeatureKind::message_queue)) {
        if (!f->get("exchange").empty()) queue_exchanges[f->get("queue")].insert(f->get("exchange"));
    }
    std::map<std::string, std::string> created;
    auto broker_for = [&](const Feature& f) -> std::string {
        const auto technology = f.get("technology");
        if (auto node = configured_broker(ctx, f.owner, technology)) return *node;
        const std::string hint = technology == "kafka" ? "kafka" : "rabbit";
        for (const auto& [name, node] : ctx.dfd.nodes()) {
            if (node.has("message_broker") && name.find(hint) != std::string::npos) return name;
        }
        if (auto node = detail::node_with(ctx.dfd, "message_broker")) return *node;
        auto name = technology == "kafka" ? std::string("kafka") : std::string("rabbitmq");
        if (created.emplace(name, f.owner).second) {
            out.node(Node::make(name, NodeType::service, {"message_broker"}), f.trace);
            out.unresolved(f.owner + ": no message broker deployed; '" + name + "' assumed");
        }
        return name;
    };
    for (const auto* f : ctx.features.of(FeatureKind::message_exchange)) {
        const auto technology = f->get("technology");
        const bool kafka = technology == "kafka";
        auto broker = broker_for(*f);
        if (broker == f->owner) continue;
        TaggedValues tags;
        const std::string channel_key = kafka ? "topic" : "exchange";
        if (!f->get("exchange").empty()) tags[channel_key].insert(std::string(util::trim(f->get("exchange"))));
        if (!f->get("routing_key").empty()) tags["routing_key"].insert(std::string(util::trim(f->get("routing_key"))));
        if (f->get("role") == "producer") {
            std::string stereotype = kafka ? "message_producer_kafka" : "message_producer_rabbitmq";
            out.flow(Flow::make(f->owner, broker, {stereotype}, tags), f->trace);
        } else {
            if (!kafka && f->get("exchange").empty() && !f->get("queue").empty()) {
                auto it = queue_exchanges.find(f->get("queue"));
                if (it != queue_exchanges.end()) {
                    for (const auto& ex : it->second) tags["exchange"].insert(ex);
                }
            }
            if (!f->get("queue").empty()) tags["queue"].insert(std::string(util::trim(f->get("queue"))));
            std::string stereotype = kafka ? "message_consumer_kafka" : "message_consumer_rabbitmq";
            out.flow(Flow::make(broker, f->owner, {stereotype}, tags), f->trace);
        }
    }
}

} // namespace dfdx
