#include "dfdx/extractors.hpp"

#include "extract_util.hpp"

namespace dfdx {

void extract_ssl_feature(const ExtractorContext& ctx, Deltas& out) {
    for (const auto* f : ctx.features.of(FeatureKind::ssl_enabled)) {
        if (ctx.dfd.find_node(f->owner) == nullptr) continue;
        out.annotate(f->owner, Stereotype("ssl_enabled"), {}, f->trace);
        for (const auto& [key, flow] : ctx.dfd.flows()) {
            if (key.first != f->owner && key.second != f->owner) continue;
            out.annotate(key, std::nullopt, {{"Protocol", {"HTTPS"}}}, f->trace);
        }
    }
}

void extract_plaintext_credentials(const ExtractorContext& ctx, Deltas& out) {
    for (const auto* f : ctx.features.of(FeatureKind::credentials_found)) {
        const auto target = f->get("target");
        const auto* target_node = target.empty() || target == f->owner ? nullptr : ctx.dfd.find_node(target);
        std::string holder = f->owner;
        if (target_node != nullptr && target_node->type == NodeType::external_entity) holder = target;
        if (ctx.dfd.find_node(holder) == nullptr) continue;
        out.annotate(holder, Stereotype("plaintext_credentials"), {{f->get("role"), {f->get("value")}}}, f->trace);
        if (target_node == nullptr) continue;
        const bool authentication = f->get("authentication") == "true";
        for (const auto& key : {FlowKey{f->owner, target}, FlowKey{target, f->owner}}) {
            if (ctx.dfd.find_flow(key) == nullptr) continue;
            out.annotate(key, Stereotype("plaintext_credentials_link"), {}, f->trace);
            if (authentication) out.annotate(key, Stereotype("plaintext_authentication"), {}, f->trace);
        }
    }
}

} // namespace dfdx
