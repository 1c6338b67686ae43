#include "extract_util.hpp"

#include "dfdx/error.hpp"
#include "util.hpp"

#include <regex>

namespace dfdx::detail {

namespace {

// Start of the next non-space character at or after (row, col), crossing lines.
bool skip_space(const SourceFile& file, std::size_t& row, std::size_t& col, std::size_t limit) {
    while (row < file.lines.size() && row < limit) {
        const auto& text = file.lines[row];
        while (col < text.size() && std::isspace(static_cast<unsigned char>(text[col]))) ++col;
        if (col < text.size()) return true;
        ++row;
        col = 0;
    }
    return false;
}

Argument make_argument(const SourceFile& file, std::size_t row, std::size_t start, std::size_t end) {
    const auto& text = file.lines[row];
    std::string_view raw(text);
    raw = raw.substr(start, end - start);
    while (!raw.empty() && std::isspace(static_cast<unsigned char>(raw.front()))) {
        raw.remove_prefix(1);
        ++start;
    }
    while (!raw.empty() && std::isspace(static_cast<unsigned char>(raw.back()))) {
        raw.remove_suffix(1);
        --end;
    }
    Argument arg;
    static const std::regex named(R"(^(\w+)\s*=\s*(?!=))");
    std::match_results<std::string_view::const_iterator> m;
    if (std::regex_search(raw.begin(), raw.end(), m, named)) {
        arg.name = m.str(1);
        auto skip = static_cast<std::size_t>(m.length(0));
        raw.remove_prefix(skip);
        start += skip;
    }
    arg.expression = std::string(raw);
    if (end <= start) end = std::min(text.size(), start + 1);
    arg.at = Match{file.path, row + 1, Span{start, end}, text};
    return arg;
}

} // namespace

std::vector<Argument> call_arguments(const SourceFile& file, std::size_t line, std::size_t from) {
    std::vector<Argument> out;
    if (line == 0 || line > file.lines.size()) return out;
    std::size_t row = line - 1;
    std::size_t col = from;
    if (col > 0 && col <= file.lines[row].size() && file.lines[row][col - 1] == '(') --col;
    const std::size_t limit = std::min(file.lines.size(), row + 20);
    if (!skip_space(file, row, col, limit) || file.lines[row][col] != '(') return out;
    ++col;
    int depth = 0;
    char quote = 0;
    std::size_t arg_row = row;
    std::size_t arg_start = col;
    bool has_content = false;
    for (; row < limit; ++row, col = 0) {
        const auto& text = file.lines[row];
        if (row != arg_row && !has_content) {
            arg_row = row;
            arg_start = 0;
        }
        for (; col < text.size(); ++col) {
            char c = text[col];
            if (quote != 0) {
                if (c == '\\') {
                    ++col;
                } else if (c == quote) {
                    quote = 0;
                }
                continue;
            }
            if (c == '"' || c == '\'') {
                quote = c;
                has_content = true;
                continue;
            }
            if (c == '(' || c == '{' || c == '[') {
                ++depth;
            } else if ((c == ')' || c == '}' || c == ']') && depth > 0) {
                --depth;
            } else if (c == ')' && depth == 0) {
                if (has_content) {
                    auto end = arg_row == row ? col : file.lines[arg_row].size();
                    out.push_back(make_argument(file, arg_row, arg_start, end));
                }
                return out;
            } else if (c == ',' && depth == 0) {
                if (has_content) {
                    auto end = arg_row == row ? col : file.lines[arg_row].size();
                    out.push_back(make_argument(file, arg_row, arg_start, end));
                }
                has_content = false;
                arg_row = row;
                arg_start = col + 1;
                continue;
            }
            if (!std::isspace(static_cast<unsigned char>(c))) {
                if (!has_content && arg_row != row) {
                    arg_row = row;
                    arg_start = col;
                }
                has_content = true;
            }
        }
    }
    return out;
}

std::vector<Argument> array_elements(const Argument& arg) {
    auto expr = util::trim(arg.expression);
    if (expr.size() < 2 || expr.front() != '{' || expr.back() != '}') return {arg};
    std::vector<Argument> out;
    auto offset = arg.at.span.start + 1;
    std::string_view body = expr.substr(1, expr.size() - 2);
    std::size_t start = 0;
    char quote = 0;
    for (std::size_t i = 0; i <= body.size(); ++i) {
        char c = i < body.size() ? body[i] : ',';
        if (quote != 0) {
            if (c == quote) quote = 0;
            continue;
        }
        if (c == '"') {
            quote = c;
            continue;
        }
        if (c != ',') continue;
        auto piece = body.substr(start, i - start);
        std::size_t lead = 0;
        while (lead < piece.size() && std::isspace(static_cast<unsigned char>(piece[lead]))) ++lead;
        auto trimmed = util::trim(piece);
        if (!trimmed.empty()) {
            Argument el;
            el.expression = std::string(trimmed);
            el.at = arg.at;
            auto s = offset + start + lead;
            el.at.span = Span{s, std::min(s + trimmed.size(), arg.at.line_text.size())};
            out.push_back(std::move(el));
        }
        start = i + 1;
    }
    return out;
}

TraceEntry narrow(const TraceEntry& base, std::string_view line_text, std::string_view needle) {
    if (needle.empty()) return base;
    auto pos = line_text.find(needle, base.span.start <= line_text.size() ? base.span.start : 0);
    if (pos == std::string_view::npos) pos = line_text.find(needle);
    if (pos == std::string_view::npos) return base;
    TraceEntry out = base;
    out.span = Span{pos, pos + needle.size()};
    out.evidence = std::string(needle);
    return out;
}

const std::string& line_of(const Workspace& ws, const TraceEntry& trace) {
    static const std::string empty;
    const auto* file = ws.index().find(trace.file);
    if (file == nullptr || trace.line == 0 || trace.line > file->lines.size()) return empty;
    return file->lines[trace.line - 1];
}

TraceEntry property_trace(const Workspace& ws, const PropertyValue& value, std::string_view needle) {
    return narrow(value.trace, line_of(ws, value.trace), needle);
}

std::optional<std::string> expand(const Workspace& ws, const ServiceUnit* unit, std::string_view text,
                                  std::string_view origin) {
    std::string out;
    std::size_t pos = 0;
    for (int guard = 0; guard < 16; ++guard) {
        auto open = text.find("${", pos);
        if (open == std::string_view::npos) break;
        auto close = text.find('}', open);
        if (close == std::string_view::npos) break;
        out += text.substr(pos, open - pos);
        auto token = text.substr(open, close - open + 1);
        auto body = token.substr(2, token.size() - 3);
        auto key = body.substr(0, body.find(':'));
        std::optional<std::string> value;
        if (unit != nullptr) {
            if (auto v = unit->properties.get(key); v && !is_placeholder(*v)) value = *v;
        }
        if (!value) {
            if (auto env = resolve_env_var(ws.index(), token, origin)) value = env->value;
        }
        if (!value) return std::nullopt;
        out += *value;
        pos = close + 1;
    }
    out += text.substr(pos);
    return out;
}

ResolvedValue resolve_expression(const Workspace& ws, const Argument& arg) {
    ResolvedValue out;
    auto chain = resolve_value(ws.index(), arg.expression, arg.at);
    out.trace = chain.matches.back().trace();
    if (chain.resolved && chain.resolved_value) {
        out.value = *chain.resolved_value;
        out.resolved = true;
        const auto& last = chain.matches.back();
        out.trace = narrow(last.trace(), last.line_text, out.value);
        return out;
    }
    // Spring placeholders inside a literal resolve against the owner's configuration.
    auto expr = util::trim(arg.expression);
    if (expr.size() >= 2 && expr.front() == '"' && expr.back() == '"') {
        auto literal = expr.substr(1, expr.size() - 2);
        if (literal.find("${") != std::string_view::npos) {
            const auto* unit = ws.owner_of(arg.at.file);
            if (auto value = expand(ws, unit, literal, arg.at.file)) {
                out.value = *value;
                out.resolved = true;
                if (unit != nullptr) {
                    auto open = literal.find("${");
                    auto body = literal.substr(open + 2, literal.find('}', open) - open - 2);
                    if (const auto* pv = unit->properties.find(body.substr(0, body.find(':')))) {
                        out.trace = property_trace(ws, *pv, util::trim(pv->value));
                    }
                }
            }
        }
    }
    return out;
}

std::vector<FlowKey> flows_from(const Dfd& dfd, std::string_view node) {
    std::vector<FlowKey> out;
    for (const auto& [key, flow] : dfd.flows()) {
        if (key.first == node) out.push_back(key);
    }
    return out;
}

std::vector<FlowKey> flows_to(const Dfd& dfd, std::string_view node) {
    std::vector<FlowKey> out;
    for (const auto& [key, flow] : dfd.flows()) {
        if (key.second == node) out.push_back(key);
    }
    return out;
}

std::set<std::string> flow_files(const Dfd& dfd, const FlowKey& key) {
    std::set<std::string> out;
    if (const auto* record = dfd.trace().find(flow_id(key))) {
        for (const auto& entry : record->entries) out.insert(entry.file);
    }
    return out;
}

const ServiceUnit* owner(const Workspace& ws, const Match& match) {
    return ws.owner_of(match.file);
}

std::optional<std::string> resolve_node(const ExtractorContext& ctx, std::string_view host) {
    if (auto unit = ctx.workspace.resolve_host(host)) return unit;
    try {
        auto canonical = normalize_name(host);
        if (ctx.dfd.find_node(canonical) != nullptr) return canonical;
    } catch (const Error&) {
    }
    return std::nullopt;
}

std::optional<std::string> node_with(const Dfd& dfd, std::string_view stereotype, std::string_view hint) {
    std::optional<std::string> first;
    for (const auto& [name, node] : dfd.nodes()) {
        if (!node.has(stereotype)) continue;
        if (hint.empty() || name.find(hint) != std::string::npos) return name;
        if (!first) first = name;
    }
    return first;
}

bool is_local_host(std::string_view host) {
    return host == "localhost" || host == "127.0.0.1" || host == "0.0.0.0" || host == "::1";
}

} // namespace dfdx::detail
