#pragma once

#include "dfdx/extractors.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dfdx::detail {

/// One argument of a Java call or annotation: `name = expr` or positional.
struct Argument {
    std::string name; // empty when positional
    std::string expression;
    Match at;         // span covers the expression
};

/// Arguments of the parenthesized list opening at or after `from` on `line`
/// (1-based), following the list across up to 20 lines.
std::vector<Argument> call_arguments(const SourceFile& file, std::size_t line, std::size_t from);

/// Elements of an array initializer `{a, b}`; a single element otherwise.
std::vector<Argument> array_elements(const Argument& arg);

struct ResolvedValue {
    std::string value;
    TraceEntry trace; // span shows the value (or the keyword leading to it)
    bool resolved = false;
};

/// String value of a Java expression: literal, constant (same file or Class.CONST),
/// `${...}` resolved against the owner's configuration, then .env files.
ResolvedValue resolve_expression(const Workspace& ws, const Argument& arg);

/// Replaces `${KEY:default}` occurrences using the unit's configuration, .env files
/// and the inline default; returns nullopt when a placeholder stays unresolved.
std::optional<std::string> expand(const Workspace& ws, const ServiceUnit* unit, std::string_view text,
                                  std::string_view origin);

/// Trace whose span covers `needle` on the line of `base` when the line contains it.
TraceEntry narrow(const TraceEntry& base, std::string_view line_text, std::string_view needle);

const std::string& line_of(const Workspace& ws, const TraceEntry& trace);

/// Trace of a property value, narrowed to the given substring (e.g. the host of a URL).
TraceEntry property_trace(const Workspace& ws, const PropertyValue& value, std::string_view needle = {});

std::vector<FlowKey> flows_from(const Dfd& dfd, std::string_view node);
std::vector<FlowKey> flows_to(const Dfd& dfd, std::string_view node);
/// Files holding the evidence of a flow.
std::set<std::string> flow_files(const Dfd& dfd, const FlowKey& key);

/// Unit owning the file of a match, by module directory.
const ServiceUnit* owner(const Workspace& ws, const Match& match);

/// Canonical node for a host: a known service alias, else an existing node of that name.
std::optional<std::string> resolve_node(const ExtractorContext& ctx, std::string_view host);

/// First node carrying `stereotype`, preferring names containing `hint`.
std::optional<std::string> node_with(const Dfd& dfd, std::string_view stereotype, std::string_view hint = {});

bool is_local_host(std::string_view host);

} // namespace dfdx::detail
