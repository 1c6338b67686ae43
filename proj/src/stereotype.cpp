#include "dfdx/stereotype.hpp"

#include "dfdx/error.hpp"

#include <algorithm>
#include <array>

namespace dfdx {
namespace {

constexpr std::uint8_t kNode = static_cast<std::uint8_t>(Applicability::node);
constexpr std::uint8_t kFlow = static_cast<std::uint8_t>(Applicability::flow);
constexpr std::uint8_t kExternal = static_cast<std::uint8_t>(Applicability::external_entity);

// Sorted by name; lookups use binary search.
constexpr std::array kCatalog = {
    StereotypeInfo{"administration_server", kNode, false},
    StereotypeInfo{"auth_provider", kFlow, true},
    StereotypeInfo{"authenticated_request", kFlow, true},
    StereotypeInfo{"authentication_scope_all", kNode, true},
    StereotypeInfo{"authorization_server", kNode, true},
    StereotypeInfo{"basic_authentication", kNode, true},
    StereotypeInfo{"circuit_breaker", kNode, true},
    StereotypeInfo{"circuit_breaker_link", kFlow, true},
    StereotypeInfo{"configuration_server", kNode, false},
    StereotypeInfo{"csrf_disabled", kNode, true},
    StereotypeInfo{"database", kNode, false},
    StereotypeInfo{"encryption", kNode, true},
    StereotypeInfo{"entrypoint", kExternal, true},
    StereotypeInfo{"exitpoint", kExternal, true},
    StereotypeInfo{"external_database", kExternal, false},
    StereotypeInfo{"external_website", kExternal, false},
    StereotypeInfo{"feign_connection", kFlow, false},
    StereotypeInfo{"gateway", kNode, false},
    StereotypeInfo{"github_repository", kExternal, false},
    StereotypeInfo{"in_memory_authentication", kNode, false},
    StereotypeInfo{"in_memory_datastore", kNode, false},
    StereotypeInfo{"infrastructural", kNode, false},
    StereotypeInfo{"internal", kNode, false},
    StereotypeInfo{"jdbc", kFlow, false},
    StereotypeInfo{"load_balanced_link", kFlow, true},
    StereotypeInfo{"load_balancer", kNode, true},
    StereotypeInfo{"local_logging", kNode, true},
    StereotypeInfo{"logging_server", kNode | kExternal, true},
    StereotypeInfo{"mail_server", kExternal, false},
    StereotypeInfo{"message_broker", kNode, false},
    StereotypeInfo{"message_consumer_kafka", kFlow, false},
    StereotypeInfo{"message_consumer_rabbitmq", kFlow, false},
    StereotypeInfo{"message_producer_kafka", kFlow, false},
    StereotypeInfo{"message_producer_rabbitmq", kFlow, false},
    StereotypeInfo{"metrics_server", kNode, true},
    StereotypeInfo{"monitoring_dashboard", kNode, true},
    StereotypeInfo{"monitoring_server", kNode, true},
    StereotypeInfo{"plaintext_authentication", kFlow, true},
    StereotypeInfo{"plaintext_credentials", kNode | kExternal, true},
    StereotypeInfo{"plaintext_credentials_link", kFlow, true},
    StereotypeInfo{"pre_authorized_endpoints", kNode, true},
    StereotypeInfo{"resource_server", kNode, true},
    StereotypeInfo{"restful_http", kFlow, false},
    StereotypeInfo{"search_engine", kNode, false},
    StereotypeInfo{"service_discovery", kNode, false},
    StereotypeInfo{"ssl_enabled", kNode, true},
    StereotypeInfo{"token_server", kNode, true},
    StereotypeInfo{"tokenstore", kExternal, true},
    StereotypeInfo{"tracing_server", kNode, true},
    StereotypeInfo{"user", kExternal, false},
    StereotypeInfo{"web_application", kNode, false},
    StereotypeInfo{"web_server", kNode, false},
};

static_assert(std::is_sorted(kCatalog.begin(), kCatalog.end(),
                             [](const auto& a, const auto& b) { return a.name < b.name; }));

const StereotypeInfo* lookup(std::string_view name) noexcept {
    auto it = std::lower_bound(kCatalog.begin(), kCatalog.end(), name,
                               [](const StereotypeInfo& info, std::string_view n) { return info.name < n; });
    if (it == kCatalog.end() || it->name != name) {
        return nullptr;
    }
    return &*it;
}

} // namespace

std::span<const StereotypeInfo> stereotype_catalog() noexcept {
    return kCatalog;
}

Stereotype::Stereotype(std::string_view name) : info_(lookup(name)) {
    if (info_ == nullptr) {
        throw Error(ErrorKind::unknown_stereotype, "unknown stereotype '" + std::string(name) + "'");
    }
}

bool Stereotype::is_known(std::string_view name) noexcept {
    return lookup(name) != nullptr;
}

} // namespace dfdx
