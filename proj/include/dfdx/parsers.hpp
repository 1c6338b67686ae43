#pragma once

#include "dfdx/model.hpp"
#include "dfdx/search.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace YAML {
class Node;
}

namespace dfdx {

struct PropertyValue {
    std::string value;
    TraceEntry trace;
};

/// Flattened configuration: lowercase dotted keys, list items as `key[i]`.
class PropertyMap {
public:
    void set(std::string key, PropertyValue value);
    /// Inserts only when the key is absent.
    bool insert(std::string key, PropertyValue value);

    const PropertyValue* find(std::string_view key) const;
    std::optional<std::string> get(std::string_view key) const;
    /// Entries whose key starts with `prefix`.
    std::vector<std::pair<std::string, const PropertyValue*>> with_prefix(std::string_view prefix) const;

    const std::map<std::string, PropertyValue>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t size() const noexcept { return entries_.size(); }

private:
    std::map<std::string, PropertyValue> entries_;
};

struct PropertyDocument {
    std::optional<std::string> profile;
    PropertyMap properties;
};

struct PropertyFile {
    std::string path;
    std::vector<PropertyDocument> documents;

    /// All documents merged. Unprofiled documents come first; profile documents add
    /// their keys both plain (when absent) and qualified as `[profile]key`.
    PropertyMap merged() const;
};

/// Parses a yaml or properties file. Throws ParseError on malformed input.
PropertyFile parse_properties(const SourceFile& file);

/// Flattens a YAML tree to dotted keys (scalars only, lowercase keys).
std::map<std::string, std::string> flatten(const YAML::Node& root);
/// Inverse of flatten for maps produced by it.
YAML::Node unflatten(const std::map<std::string, std::string>& flat);

struct PortMapping {
    std::optional<int> host;
    int container = 0;

    friend auto operator<=>(const PortMapping&, const PortMapping&) = default;
};

struct ServiceDecl {
    std::string name;
    std::optional<std::string> image;
    std::optional<std::string> build_context;
    std::vector<PortMapping> ports;
    std::vector<std::string> depends_on;
    std::map<std::string, std::string> environment;
    TraceEntry source;
    std::optional<TraceEntry> image_trace;
    std::vector<TraceEntry> port_traces;
};

struct ComposeFile {
    std::vector<ServiceDecl> services;
    std::vector<std::string> warnings;
};

ComposeFile parse_compose(const SourceFile& file);
/// Emits a version-3 compose document for the declarations.
std::string serialize_compose(const std::vector<ServiceDecl>& services);

struct DockerfileInfo {
    std::string base_image;
    std::vector<int> exposed_ports;
    TraceEntry base_image_trace;
    std::vector<TraceEntry> port_traces;
};

/// Last FROM wins. Throws Error(dockerfile) without a FROM instruction.
DockerfileInfo parse_dockerfile(const SourceFile& file);

struct BuildModule {
    std::string name;
    std::string directory; // relative to the index root; "" for the root
    TraceEntry trace;
};

struct BuildScan {
    std::vector<BuildModule> modules;
    std::vector<std::string> errors;
};

/// Maven modules and Gradle includes whose directories hold their own build file.
BuildScan parse_build(const FileIndex& index);

struct ImageClass {
    std::set<Stereotype> stereotypes;
    NodeType node_type = NodeType::service;
};

/// Image-name prefix -> classification, loaded from YAML text:
///
///   images:
///     - prefix: rabbitmq
///       type: service
///       stereotypes: [message_broker, infrastructural]
class ImageCatalog {
public:
    static ImageCatalog from_yaml(std::string_view text);
    static const ImageCatalog& defaults();

    /// Longest-prefix match on the image name with tag/digest stripped; the last path
    /// segment is tried as well so `bitnami/kafka` matches `kafka`.
    std::optional<ImageClass> classify(std::string_view image) const;

    std::size_t size() const noexcept { return entries_.size(); }
    const std::vector<std::pair<std::string, ImageClass>>& entries() const noexcept { return entries_; }

private:
    std::vector<std::pair<std::string, ImageClass>> entries_;
};

std::optional<ImageClass> classify_image(std::string_view image, const ImageCatalog& catalog = ImageCatalog::defaults());

/// Strips tag and digest: "docker.io/library/mongo:4.2" -> "docker.io/library/mongo".
std::string image_name(std::string_view image);

} // namespace dfdx
