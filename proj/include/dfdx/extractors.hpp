#pragma once

#include "dfdx/model.hpp"
#include "dfdx/parsers.hpp"
#include "dfdx/rules.hpp"
#include "dfdx/search.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dfdx {

/// Partial evidence handed from one extractor to later ones.
///
/// Payload keys per kind:
///   ssl_enabled             key
///   endpoint_declared       path, method
///   port                    port
///   message_exchange        technology, exchange, routing_key?, role (producer|consumer)
///   message_queue           technology, queue, exchange?
///   discovery_registration  url, host
///   config_client           url, host
///   credentials_found       key, role (username|password), value, context, target?, authentication
enum class FeatureKind {
    ssl_enabled,
    endpoint_declared,
    port,
    message_exchange,
    message_queue,
    discovery_registration,
    config_client,
    credentials_found,
};

const char* to_string(FeatureKind kind) noexcept;

struct Feature {
    FeatureKind kind;
    std::string owner; // canonical service name
    std::map<std::string, std::string> payload;
    TraceEntry trace;

    std::string get(const std::string& key) const;

    friend bool operator==(const Feature& a, const Feature& b) {
        return std::tie(a.kind, a.owner, a.payload, a.trace) == std::tie(b.kind, b.owner, b.payload, b.trace);
    }
    friend bool operator<(const Feature& a, const Feature& b) {
        return std::tie(a.kind, a.owner, a.payload, a.trace) < std::tie(b.kind, b.owner, b.payload, b.trace);
    }
};

class FeatureStore {
public:
    void add(Feature feature) { features_.insert(std::move(feature)); }
    std::vector<const Feature*> of(FeatureKind kind) const;
    std::vector<const Feature*> of(FeatureKind kind, std::string_view owner) const;
    const std::set<Feature>& all() const noexcept { return features_; }
    std::size_t size() const noexcept { return features_.size(); }

private:
    std::set<Feature> features_;
};

/// A deployable unit of the analyzed application: a build module, a compose
/// service, or both.
struct ServiceUnit {
    std::string name; // canonical
    std::string display_name;
    std::optional<std::string> directory; // module directory relative to the root
    bool has_code = false;
    // Name-giving evidence; rank 0 configuration, 1 compose key, 2 build module.
    std::vector<TraceEntry> name_traces;
    std::set<std::string> aliases; // canonical host names that reach this unit
    PropertyMap properties;
    std::vector<std::string> config_files;
    std::optional<ServiceDecl> compose;
    std::optional<DockerfileInfo> dockerfile;
    std::optional<ImageClass> image_class;
};

struct AnalysisOptions {
    // Keeps hits inside comments and widens circuit-breaker scoping.
    bool paper_parity = false;
};

/// Parsed, immutable view of a codebase that all extractors share.
class Workspace {
public:
    static Workspace build(const FileIndex& index, const RuleSet& rules = RuleSet::defaults(),
                           const ImageCatalog& images = ImageCatalog::defaults(), AnalysisOptions options = {});

    const FileIndex& index() const noexcept { return *index_; }
    const RuleSet& rules() const noexcept { return *rules_; }
    const ImageCatalog& images() const noexcept { return *images_; }
    const AnalysisOptions& options() const noexcept { return options_; }
    const std::vector<ServiceUnit>& units() const noexcept { return units_; }
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    const ServiceUnit* unit(std::string_view canonical) const;
    /// Unit whose module directory is the longest prefix of `path`.
    const ServiceUnit* owner_of(std::string_view path) const;
    /// Canonical unit name for a host name (compose key, application name, module name).
    std::optional<std::string> resolve_host(std::string_view host) const;

    SearchOptions search_options(std::optional<std::set<LanguageClass>> languages = std::nullopt) const;
    std::vector<Match> search(std::string_view keyword, std::optional<std::set<LanguageClass>> languages) const;

private:
    const FileIndex* index_ = nullptr;
    const RuleSet* rules_ = nullptr;
    const ImageCatalog* images_ = nullptr;
    AnalysisOptions options_;
    std::vector<ServiceUnit> units_;
    std::map<std::string, std::string> aliases_;
    std::vector<std::string> warnings_;
};

/// What an extractor sees: the parsed workspace plus the model and features as they
/// stood when its phase began.
struct ExtractorContext {
    const Workspace& workspace;
    const Dfd& dfd;
    const FeatureStore& features;
};

/// Changes proposed by one extractor run.
class Deltas {
public:
    struct NodeOp {
        Node node;
        TraceEntry trace;
    };
    struct FlowOp {
        Flow flow;
        TraceEntry trace;
        SelfFlows self_flows = SelfFlows::reject;
    };
    struct AnnotateOp {
        AnnotationTarget target;
        std::optional<Stereotype> stereotype;
        TaggedValues tags;
        TraceEntry trace;
    };

    void node(Node node, const TraceEntry& trace) { nodes_.push_back({std::move(node), trace}); }
    void flow(Flow flow, const TraceEntry& trace, SelfFlows self = SelfFlows::reject) {
        flows_.push_back({std::move(flow), trace, self});
    }
    void annotate(AnnotationTarget target, std::optional<Stereotype> stereotype, TaggedValues tags,
                  const TraceEntry& trace) {
        annotations_.push_back({std::move(target), std::move(stereotype), std::move(tags), trace});
    }
    void feature(Feature feature) { features_.push_back(std::move(feature)); }
    void unresolved(std::string message) { unresolved_.push_back(std::move(message)); }
    void warning(std::string message) { warnings_.push_back(std::move(message)); }

    const std::vector<NodeOp>& nodes() const noexcept { return nodes_; }
    const std::vector<FlowOp>& flows() const noexcept { return flows_; }
    const std::vector<AnnotateOp>& annotations() const noexcept { return annotations_; }
    const std::vector<Feature>& features() const noexcept { return features_; }
    const std::vector<std::string>& unresolved_items() const noexcept { return unresolved_; }
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

private:
    std::vector<NodeOp> nodes_;
    std::vector<FlowOp> flows_;
    std::vector<AnnotateOp> annotations_;
    std::vector<Feature> features_;
    std::vector<std::string> unresolved_;
    std::vector<std::string> warnings_;
};

struct Extractor {
    std::string name;
    Phase phase = Phase::annotation;
    std::function<void(const ExtractorContext&, Deltas&)> run;
};

struct ExtractorStats {
    std::string name;
    Phase phase = Phase::annotation;
    std::size_t nodes = 0;
    std::size_t flows = 0;
    std::size_t annotations = 0;
    std::size_t features = 0;
    bool failed = false;
};

struct Report {
    std::vector<ExtractorStats> extractors;
    std::vector<std::string> unresolved;
    std::vector<std::string> errors;
    std::vector<std::string> conflicts;
    std::vector<std::string> warnings;
    std::vector<std::string> unclassified;
    std::size_t suppressed_self_flows = 0;
};

struct PipelineResult {
    Dfd dfd;
    FeatureStore features;
    Report report;
};

/// Runs the registry phase by phase. Within a phase every extractor sees the same
/// snapshot; their deltas are applied in a canonical order, so the result does not
/// depend on registry order. Failing extractors are recorded and skipped.
PipelineResult run_pipeline(const Workspace& workspace, const std::vector<Extractor>& registry);

/// Technology extractors plus one extractor per keyword and property rule.
std::vector<Extractor> default_registry(const RuleSet& rules = RuleSet::defaults());

/// Stereotypes emitted by the built-in (non rule-driven) extractors.
std::set<std::string> builtin_stereotypes();

// Individual technology extractors, exposed for targeted tests.
void extract_service_nodes(const ExtractorContext& ctx, Deltas& out);
void extract_properties(const ExtractorContext& ctx, Deltas& out);
void extract_ports(const ExtractorContext& ctx, Deltas& out);
void extract_feign(const ExtractorContext& ctx, Deltas& out);
void extract_endpoints(const ExtractorContext& ctx, Deltas& out);
void extract_rest(const ExtractorContext& ctx, Deltas& out);
void extract_message_channels(const ExtractorContext& ctx, Deltas& out);
void extract_message_broker(const ExtractorContext& ctx, Deltas& out);
void extract_config_server(const ExtractorContext& ctx, Deltas& out);
void extract_discovery(const ExtractorContext& ctx, Deltas& out);
void extract_gateway_routes(const ExtractorContext& ctx, Deltas& out);
void extract_databases(const ExtractorContext& ctx, Deltas& out);
void extract_mail(const ExtractorContext& ctx, Deltas& out);
void extract_monitoring(const ExtractorContext& ctx, Deltas& out);
void extract_auth_provider(const ExtractorContext& ctx, Deltas& out);
void extract_implicit_user(const ExtractorContext& ctx, Deltas& out);
void extract_ssl_feature(const ExtractorContext& ctx, Deltas& out);
void extract_plaintext_credentials(const ExtractorContext& ctx, Deltas& out);
void classify_internal_infrastructural(const ExtractorContext& ctx, Deltas& out);
void classify_entry_exit(const ExtractorContext& ctx, Deltas& out);

struct Url {
    std::string scheme;
    std::string user;
    std::string password;
    std::string host;
    std::optional<int> port;
    std::string path;
};

/// Lenient URL split; accepts "host:port/path" without a scheme and JDBC-style
/// "jdbc:mysql://host/db" prefixes.
std::optional<Url> parse_url(std::string_view text);

bool is_truthy(std::string_view value);

} // namespace dfdx
