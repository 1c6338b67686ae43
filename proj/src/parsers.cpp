#include "dfdx/parsers.hpp"

#include "dfdx/error.hpp"
#include "embedded.hpp"

#include <yaml-cpp/yaml.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <regex>
#include <sstream>

namespace dfdx {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string join_key(const std::string& prefix, std::string_view key) {
    return prefix.empty() ? lower(key) : prefix + "." + lower(key);
}

std::string join_text(const SourceFile& file) {
    std::string text;
    for (const auto& line : file.lines) {
        text += line;
        text += '\n';
    }
    return text;
}

// Span of `text` on the line of `mark`, starting the search at the mark's column.
TraceEntry trace_at(const SourceFile& file, const YAML::Mark& mark, std::string_view text) {
    TraceEntry trace;
    trace.file = file.path;
    std::size_t row = mark.line >= 0 ? static_cast<std::size_t>(mark.line) : 0;
    if (row >= file.lines.size()) row = file.lines.empty() ? 0 : file.lines.size() - 1;
    trace.line = row + 1;
    const std::string line = file.lines.empty() ? std::string{} : file.lines[row];
    std::size_t col = mark.column >= 0 ? static_cast<std::size_t>(mark.column) : 0;
    col = std::min(col, line.size());
    std::size_t start = std::string::npos;
    if (!text.empty()) start = line.find(text, col);
    if (start == std::string::npos && col < line.size() && (line[col] == '"' || line[col] == '\'')) {
        start = col + 1;
    }
    if (start == std::string::npos || start >= line.size()) start = col < line.size() ? col : 0;
    std::size_t end = std::min(line.size(), start + std::max<std::size_t>(text.size(), 1));
    if (end <= start) {
        start = 0;
        end = line.size();
    }
    trace.span = Span{start, end};
    trace.evidence = line.substr(start, end - start);
    return trace;
}

const std::regex& lenient_pair() {
    static const std::regex re(R"(^([A-Za-z0-9_.\-]+):(\S.*)$)");
    return re;
}

void flatten_node(const YAML::Node& node, const std::string& prefix, const SourceFile* file, int parent_line,
                  PropertyMap* traced, std::map<std::string, std::string>* plain, bool only_if_absent) {
    auto emit = [&](const std::string& key, const std::string& value, const YAML::Mark& mark,
                    std::string_view located) {
        if (plain != nullptr) {
            if (!only_if_absent || !plain->contains(key)) (*plain)[key] = value;
        }
        if (traced != nullptr && file != nullptr) {
            PropertyValue pv{value, trace_at(*file, mark, located)};
            if (only_if_absent) {
                traced->insert(key, std::move(pv));
            } else {
                traced->set(key, std::move(pv));
            }
        }
    };

    switch (node.Type()) {
    case YAML::NodeType::Map: {
        std::vector<YAML::Node> merges;
        for (auto it = node.begin(); it != node.end(); ++it) {
            auto key = it->first.Scalar();
            if (key == "<<") {
                merges.push_back(it->second);
                continue;
            }
            flatten_node(it->second, join_key(prefix, key), file, it->first.Mark().line, traced, plain,
                         only_if_absent);
        }
        for (const auto& merge : merges) {
            if (merge.IsSequence()) {
                for (const auto& item : merge) flatten_node(item, prefix, file, parent_line, traced, plain, true);
            } else {
                flatten_node(merge, prefix, file, parent_line, traced, plain, true);
            }
        }
        break;
    }
    case YAML::NodeType::Sequence: {
        std::size_t i = 0;
        for (const auto& item : node) {
            flatten_node(item, prefix + "[" + std::to_string(i++) + "]", file, node.Mark().line, traced, plain,
                         only_if_absent);
        }
        break;
    }
    case YAML::NodeType::Scalar: {
        const std::string& value = node.Scalar();
        std::smatch m;
        // "key:value" written as a nested block line (no space after the colon) is a
        // common slip; recover it as a nested pair.
        if (node.Tag() == "?" && node.Mark().line > parent_line && !prefix.empty() &&
            std::regex_match(value, m, lenient_pair())) {
            emit(prefix + "." + lower(m.str(1)), m.str(2), node.Mark(), m.str(2));
            break;
        }
        emit(prefix, value, node.Mark(), value);
        break;
    }
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined: break;
    }
}

std::optional<std::string> profile_of(const PropertyMap& map) {
    for (auto key : {"spring.profiles", "spring.config.activate.on-profile", "spring.profiles[0]"}) {
        if (auto v = map.get(key)) return *v;
    }
    return std::nullopt;
}

PropertyFile parse_yaml_properties(const SourceFile& file) {
    PropertyFile out;
    out.path = file.path;
    std::vector<YAML::Node> docs;
    try {
        docs = YAML::LoadAll(join_text(file));
    } catch (const YAML::Exception& e) {
        throw ParseError(file.path, static_cast<std::size_t>(std::max(e.mark.line, 0)) + 1, e.msg);
    }
    for (const auto& doc : docs) {
        PropertyDocument pd;
        flatten_node(doc, "", &file, -1, &pd.properties, nullptr, false);
        if (pd.properties.empty() && !doc.IsMap()) continue;
        pd.profile = profile_of(pd.properties);
        out.documents.push_back(std::move(pd));
    }
    return out;
}

PropertyFile parse_java_properties(const SourceFile& file) {
    PropertyFile out;
    out.path = file.path;
    out.documents.emplace_back();
    for (std::size_t i = 0; i < file.lines.size(); ++i) {
        const std::string& line = file.lines[i];
        auto first = line.find_first_not_of(" \t\f");
        if (first == std::string::npos) continue;
        if (line[first] == '#' || line[first] == '!') {
            if (line.substr(first).starts_with("#---")) {
                auto& last = out.documents.back();
                last.profile = profile_of(last.properties);
                out.documents.emplace_back();
            }
            continue;
        }
        std::size_t key_end = first;
        while (key_end < line.size()) {
            char c = line[key_end];
            if (c == '\\') {
                key_end += 2;
                continue;
            }
            if (c == '=' || c == ':' || c == ' ' || c == '\t') break;
            ++key_end;
        }
        key_end = std::min(key_end, line.size());
        std::string key = line.substr(first, key_end - first);
        std::size_t vpos = key_end;
        while (vpos < line.size() && (line[vpos] == ' ' || line[vpos] == '\t')) ++vpos;
        if (vpos < line.size() && (line[vpos] == '=' || line[vpos] == ':')) ++vpos;
        while (vpos < line.size() && (line[vpos] == ' ' || line[vpos] == '\t')) ++vpos;

        std::string value;
        std::size_t first_line = i;
        std::size_t vstart = vpos;
        std::string segment = line.substr(vpos);
        std::size_t vend_first = line.size();
        while (!segment.empty() && segment.back() == '\\' && i + 1 < file.lines.size()) {
            segment.pop_back();
            if (i == first_line) vend_first = line.size() - 1;
            value += segment;
            ++i;
            const auto& next = file.lines[i];
            auto nfirst = next.find_first_not_of(" \t\f");
            segment = nfirst == std::string::npos ? std::string{} : next.substr(nfirst);
        }
        value += segment;
        while (!value.empty() && (value.back() == ' ' || value.back() == '\t')) value.pop_back();
        const std::string& origin = file.lines[first_line];
        if (first_line == i) {
            vend_first = origin.size();
            while (vend_first > vstart && (origin[vend_first - 1] == ' ' || origin[vend_first - 1] == '\t')) --vend_first;
        }
        Span span{vstart, vend_first};
        if (span.end <= span.start) span = Span{first, key_end};
        TraceEntry trace{file.path, first_line + 1, span, origin.substr(span.start, span.end - span.start), 1};
        out.documents.back().properties.set(lower(key), PropertyValue{value, trace});
    }
    auto& last = out.documents.back();
    last.profile = profile_of(last.properties);
    if (out.documents.size() == 1 && out.documents.front().properties.empty()) out.documents.clear();
    return out;
}

int parse_port(std::string_view text) {
    auto dash = text.find('-');
    if (dash != std::string_view::npos) text = text.substr(0, dash);
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return 0;
    return value;
}

bool valid_port(int port) {
    return port >= 1 && port <= 65535;
}

} // namespace

void PropertyMap::set(std::string key, PropertyValue value) {
    entries_[std::move(key)] = std::move(value);
}

bool PropertyMap::insert(std::string key, PropertyValue value) {
    return entries_.emplace(std::move(key), std::move(value)).second;
}

const PropertyValue* PropertyMap::find(std::string_view key) const {
    auto it = entries_.find(lower(key));
    return it == entries_.end() ? nullptr : &it->second;
}

std::optional<std::string> PropertyMap::get(std::string_view key) const {
    const auto* v = find(key);
    if (v == nullptr) return std::nullopt;
    return v->value;
}

std::vector<std::pair<std::string, const PropertyValue*>> PropertyMap::with_prefix(std::string_view prefix) const {
    std::vector<std::pair<std::string, const PropertyValue*>> out;
    auto p = lower(prefix);
    for (auto it = entries_.lower_bound(p); it != entries_.end() && it->first.starts_with(p); ++it) {
        out.emplace_back(it->first, &it->second);
    }
    return out;
}

PropertyMap PropertyFile::merged() const {
    PropertyMap out;
    for (const auto& doc : documents) {
        if (doc.profile) continue;
        for (const auto& [key, value] : doc.properties.entries()) out.insert(key, value);
    }
    for (const auto& doc : documents) {
        if (!doc.profile) continue;
        for (const auto& [key, value] : doc.properties.entries()) {
            out.insert(key, value);
            out.insert("[" + *doc.profile + "]" + key, value);
        }
    }
    return out;
}

PropertyFile parse_properties(const SourceFile& file) {
    if (file.filename().ends_with(".properties")) return parse_java_properties(file);
    return parse_yaml_properties(file);
}

std::map<std::string, std::string> flatten(const YAML::Node& root) {
    std::map<std::string, std::string> out;
    flatten_node(root, "", nullptr, -1, nullptr, &out, false);
    return out;
}

YAML::Node unflatten(const std::map<std::string, std::string>& flat) {
    YAML::Node root(YAML::NodeType::Map);
    static const std::regex segment_re(R"(([^.\[\]]+)|\[(\d+)\])");
    for (const auto& [key, value] : flat) {
        std::vector<std::variant<std::string, std::size_t>> path;
        for (std::sregex_iterator it(key.begin(), key.end(), segment_re), end; it != end; ++it) {
            if ((*it)[1].matched) {
                path.emplace_back(it->str(1));
            } else {
                path.emplace_back(static_cast<std::size_t>(std::stoul(it->str(2))));
            }
        }
        YAML::Node cursor = root;
        for (std::size_t i = 0; i < path.size(); ++i) {
            bool last = i + 1 == path.size();
            YAML::Node next;
            if (const auto* name = std::get_if<std::string>(&path[i])) {
                next = cursor[*name];
            } else {
                auto idx = std::get<std::size_t>(path[i]);
                while (cursor.size() <= idx) cursor.push_back(YAML::Node());
                next = cursor[idx];
            }
            if (last) {
                next = value;
            } else if (!next.IsDefined() || next.IsNull()) {
                bool next_is_index = std::holds_alternative<std::size_t>(path[i + 1]);
                next = YAML::Node(next_is_index ? YAML::NodeType::Sequence : YAML::NodeType::Map);
            }
            cursor.reset(next);
        }
    }
    return root;
}

ComposeFile parse_compose(const SourceFile& file) {
    ComposeFile out;
    YAML::Node root;
    try {
        root = YAML::Load(join_text(file));
    } catch (const YAML::Exception& e) {
        throw ParseError(file.path, static_cast<std::size_t>(std::max(e.mark.line, 0)) + 1, e.msg);
    }
    if (!root.IsMap() || !root["services"] || !root["services"].IsMap()) {
        out.warnings.push_back(file.path + ": no 'services:' section");
        return out;
    }
    for (auto it = root["services"].begin(); it != root["services"].end(); ++it) {
        ServiceDecl decl;
        decl.name = it->first.Scalar();
        decl.source = trace_at(file, it->first.Mark(), decl.name);
        const YAML::Node body = it->second;
        if (!body.IsMap()) {
            out.services.push_back(std::move(decl));
            continue;
        }
        if (auto image = body["image"]; image && image.IsScalar()) {
            decl.image = image.Scalar();
            decl.image_trace = trace_at(file, image.Mark(), image.Scalar());
        }
        if (auto build = body["build"]) {
            if (build.IsScalar()) {
                decl.build_context = build.Scalar();
            } else if (build.IsMap() && build["context"]) {
                decl.build_context = build["context"].Scalar();
            }
        }
        if (auto ports = body["ports"]; ports && ports.IsSequence()) {
            for (const auto& p : ports) {
                PortMapping mapping;
                if (p.IsMap()) {
                    mapping.container = p["target"] ? parse_port(p["target"].Scalar()) : 0;
                    if (p["published"]) {
                        int host = parse_port(p["published"].Scalar());
                        if (valid_port(host)) mapping.host = host;
                    }
                } else if (p.IsScalar()) {
                    std::string spec = p.Scalar();
                    if (auto slash = spec.find('/'); slash != std::string::npos) spec.resize(slash);
                    std::vector<std::string> parts;
                    std::stringstream ss(spec);
                    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
                    if (parts.empty()) continue;
                    mapping.container = parse_port(parts.back());
                    if (parts.size() >= 2) {
                        int host = parse_port(parts[parts.size() - 2]);
                        if (valid_port(host)) mapping.host = host;
                    }
                }
                if (!valid_port(mapping.container)) {
                    out.warnings.push_back(file.path + ": ignored invalid port in service '" + decl.name + "'");
                    continue;
                }
                decl.ports.push_back(mapping);
                decl.port_traces.push_back(
                    trace_at(file, p.Mark(), p.IsScalar() ? p.Scalar() : std::to_string(mapping.container)));
            }
        }
        if (auto deps = body["depends_on"]) {
            if (deps.IsSequence()) {
                for (const auto& d : deps) decl.depends_on.push_back(d.Scalar());
            } else if (deps.IsMap()) {
                for (auto d = deps.begin(); d != deps.end(); ++d) decl.depends_on.push_back(d->first.Scalar());
            }
        }
        if (auto env = body["environment"]) {
            if (env.IsSequence()) {
                for (const auto& e : env) {
                    auto text = e.Scalar();
                    auto eq = text.find('=');
                    if (eq == std::string::npos) {
                        decl.environment[text] = "";
                    } else {
                        decl.environment[text.substr(0, eq)] = text.substr(eq + 1);
                    }
                }
            } else if (env.IsMap()) {
                for (auto e = env.begin(); e != env.end(); ++e) {
                    decl.environment[e->first.Scalar()] = e->second.IsScalar() ? e->second.Scalar() : "";
                }
            }
        }
        out.services.push_back(std::move(decl));
    }
    return out;
}

std::string serialize_compose(const std::vector<ServiceDecl>& services) {
    YAML::Emitter emitter;
    emitter << YAML::BeginMap << YAML::Key << "version" << YAML::Value << YAML::DoubleQuoted << "3";
    emitter << YAML::Key << "services" << YAML::Value << YAML::BeginMap;
    for (const auto& s : services) {
        emitter << YAML::Key << s.name << YAML::Value << YAML::BeginMap;
        if (s.image) emitter << YAML::Key << "image" << YAML::Value << *s.image;
        if (s.build_context) emitter << YAML::Key << "build" << YAML::Value << *s.build_context;
        if (!s.ports.empty()) {
            emitter << YAML::Key << "ports" << YAML::Value << YAML::BeginSeq;
            for (const auto& p : s.ports) {
                std::string text = p.host ? std::to_string(*p.host) + ":" + std::to_string(p.container)
                                          : std::to_string(p.container);
                emitter << YAML::DoubleQuoted << text;
            }
            emitter << YAML::EndSeq;
        }
        if (!s.depends_on.empty()) {
            emitter << YAML::Key << "depends_on" << YAML::Value << YAML::BeginSeq;
            for (const auto& d : s.depends_on) emitter << d;
            emitter << YAML::EndSeq;
        }
        if (!s.environment.empty()) {
            emitter << YAML::Key << "environment" << YAML::Value << YAML::BeginMap;
            for (const auto& [k, v] : s.environment) emitter << YAML::Key << k << YAML::Value << v;
            emitter << YAML::EndMap;
        }
        emitter << YAML::EndMap;
    }
    emitter << YAML::EndMap << YAML::EndMap;
    return std::string(emitter.c_str()) + "\n";
}

DockerfileInfo parse_dockerfile(const SourceFile& file) {
    DockerfileInfo info;
    bool have_from = false;
    for (std::size_t i = 0; i < file.lines.size(); ++i) {
        const std::string& line = file.lines[i];
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        auto word_end = line.find_first_of(" \t", first);
        if (word_end == std::string::npos) continue;
        auto instruction = lower(std::string_view(line).substr(first, word_end - first));
        std::vector<std::pair<std::size_t, std::string>> args;
        std::size_t pos = word_end;
        while (pos < line.size()) {
            auto start = line.find_first_not_of(" \t", pos);
            if (start == std::string::npos) break;
            auto end = line.find_first_of(" \t", start);
            if (end == std::string::npos) end = line.size();
            auto token = line.substr(start, end - start);
            if (token != "\\") args.emplace_back(start, token);
            pos = end;
        }
        if (instruction == "from") {
            for (const auto& [col, token] : args) {
                if (token.starts_with("--")) continue;
                info.base_image = token;
                info.base_image_trace = TraceEntry{file.path, i + 1, Span{col, col + token.size()}, token, 1};
                have_from = true;
                break;
            }
        } else if (instruction == "expose") {
            for (const auto& [col, token] : args) {
                std::string_view port = token;
                if (auto slash = port.find('/'); slash != std::string_view::npos) port = port.substr(0, slash);
                int value = parse_port(port);
                if (!valid_port(value)) continue;
                info.exposed_ports.push_back(value);
                info.port_traces.push_back(TraceEntry{file.path, i + 1, Span{col, col + port.size()}, std::string(port), 1});
            }
        }
    }
    if (!have_from) throw Error(ErrorKind::dockerfile, file.path + ": no FROM instruction");
    return info;
}

namespace {

std::string join_path(std::string_view dir, std::string_view child) {
    std::vector<std::string> parts;
    auto push = [&](std::string_view path) {
        std::size_t start = 0;
        while (start <= path.size()) {
            auto end = path.find('/', start);
            if (end == std::string_view::npos) end = path.size();
            auto part = path.substr(start, end - start);
            if (part == "..") {
                if (!parts.empty()) parts.pop_back();
            } else if (!part.empty() && part != ".") {
                parts.emplace_back(part);
            }
            start = end + 1;
        }
    };
    push(dir);
    push(child);
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += '/';
        out += p;
    }
    return out;
}

std::string in_dir(std::string_view dir, std::string_view name) {
    return dir.empty() ? std::string(name) : std::string(dir) + "/" + std::string(name);
}

bool has_build_file(const FileIndex& index, std::string_view dir) {
    for (auto name : {"pom.xml", "build.gradle", "build.gradle.kts"}) {
        if (index.find(in_dir(dir, name)) != nullptr) return true;
    }
    return false;
}

std::string last_segment(std::string_view path) {
    auto slash = path.rfind('/');
    return std::string(slash == std::string_view::npos ? path : path.substr(slash + 1));
}

TraceEntry locate(const SourceFile& file, std::string_view needle) {
    for (std::size_t i = 0; i < file.lines.size(); ++i) {
        auto pos = file.lines[i].find(needle);
        if (pos != std::string::npos && !file.in_comment(i + 1, pos)) {
            return TraceEntry{file.path, i + 1, Span{pos, pos + needle.size()}, std::string(needle), 1};
        }
    }
    std::size_t len = file.lines.empty() ? 0 : file.lines[0].size();
    return TraceEntry{file.path, 1, Span{0, std::max<std::size_t>(len, 1)}, file.lines.empty() ? "" : file.lines[0], 1};
}

void scan_maven(const FileIndex& index, const std::string& dir, const std::optional<TraceEntry>& trace,
                BuildScan& out, std::set<std::string>& visited, int depth) {
    if (depth > 8 || !visited.insert(dir).second) return;
    const auto* pom = index.find(in_dir(dir, "pom.xml"));
    if (pom == nullptr) return;
    boost::property_tree::ptree tree;
    try {
        std::istringstream in(join_text(*pom));
        boost::property_tree::read_xml(in, tree);
    } catch (const boost::property_tree::xml_parser_error& e) {
        out.errors.push_back(pom->path + ":" + std::to_string(e.line()) + ": " + e.message());
        return;
    }
    std::vector<std::string> modules;
    if (auto node = tree.get_child_optional("project.modules")) {
        for (const auto& [key, child] : *node) {
            if (key == "module") modules.push_back(child.get_value<std::string>());
        }
    }
    if (modules.empty()) {
        std::string name = dir.empty() ? tree.get<std::string>("project.artifactId", "") : last_segment(dir);
        if (name.empty()) name = index.root().filename().string();
        if (name.empty() || name == ".") name = "app";
        TraceEntry entry = trace ? *trace : locate(*pom, "<artifactId>");
        if (!trace) {
            if (auto artifact = tree.get_optional<std::string>("project.artifactId")) entry = locate(*pom, *artifact);
        }
        out.modules.push_back(BuildModule{name, dir, entry});
        return;
    }
    for (const auto& module : modules) {
        auto child = join_path(dir, module);
        if (!has_build_file(index, child)) continue;
        auto entry = locate(*pom, module);
        if (index.find(in_dir(child, "pom.xml")) != nullptr) {
            scan_maven(index, child, entry, out, visited, depth + 1);
        } else {
            out.modules.push_back(BuildModule{last_segment(child), child, entry});
        }
    }
}

void scan_gradle(const FileIndex& index, const std::string& dir, BuildScan& out) {
    const SourceFile* settings = index.find(in_dir(dir, "settings.gradle"));
    if (settings == nullptr) settings = index.find(in_dir(dir, "settings.gradle.kts"));
    if (settings == nullptr) {
        const auto* build = index.find(in_dir(dir, "build.gradle"));
        if (build == nullptr) build = index.find(in_dir(dir, "build.gradle.kts"));
        if (build != nullptr) {
            std::string name = dir.empty() ? index.root().filename().string() : last_segment(dir);
            if (name.empty() || name == ".") name = "app";
            std::size_t len = build->lines.empty() ? 1 : std::max<std::size_t>(build->lines[0].size(), 1);
            out.modules.push_back(BuildModule{name, dir, TraceEntry{build->path, 1, Span{0, len}, "", 1}});
        }
        return;
    }
    static const std::regex quoted(R"(['"]([^'"]+)['"])");
    std::size_t before = out.modules.size();
    for (std::size_t i = 0; i < settings->lines.size(); ++i) {
        const std::string& line = settings->lines[i];
        auto inc = line.find("include");
        if (inc == std::string::npos || settings->in_comment(i + 1, inc)) continue;
        for (std::sregex_iterator it(line.begin() + static_cast<std::ptrdiff_t>(inc), line.end(), quoted), end;
             it != end; ++it) {
            std::string path = it->str(1);
            std::string rel;
            std::stringstream ss(path);
            for (std::string part; std::getline(ss, part, ':');) {
                if (part.empty()) continue;
                if (!rel.empty()) rel += '/';
                rel += part;
            }
            auto child = join_path(dir, rel);
            if (!has_build_file(index, child)) continue;
            auto col = static_cast<std::size_t>(it->position(1)) + inc;
            out.modules.push_back(BuildModule{last_segment(child), child,
                                              TraceEntry{settings->path, i + 1, Span{col, col + path.size()}, path, 1}});
        }
    }
    if (out.modules.size() == before && has_build_file(index, dir)) {
        std::string name = dir.empty() ? index.root().filename().string() : last_segment(dir);
        if (name.empty() || name == ".") name = "app";
        std::size_t len = settings->lines.empty() ? 1 : std::max<std::size_t>(settings->lines[0].size(), 1);
        out.modules.push_back(BuildModule{name, dir, TraceEntry{settings->path, 1, Span{0, len}, "", 1}});
    }
}

} // namespace

BuildScan parse_build(const FileIndex& index) {
    BuildScan out;
    std::set<std::string> visited;
    // Top-level build roots: build files with no build file in any ancestor directory.
    std::set<std::string> roots;
    for (const auto& file : index.files()) {
        if (file.language != LanguageClass::build) continue;
        std::string dir(file.directory());
        bool nested = false;
        std::string probe = dir;
        while (!probe.empty()) {
            auto slash = probe.rfind('/');
            probe = slash == std::string::npos ? std::string{} : probe.substr(0, slash);
            if (has_build_file(index, probe) || index.find(in_dir(probe, "settings.gradle")) != nullptr) {
                nested = true;
                break;
            }
        }
        if (!nested) roots.insert(dir);
    }
    for (const auto& dir : roots) {
        if (index.find(in_dir(dir, "pom.xml")) != nullptr) {
            scan_maven(index, dir, std::nullopt, out, visited, 0);
        } else {
            scan_gradle(index, dir, out);
        }
    }
    std::sort(out.modules.begin(), out.modules.end(),
              [](const BuildModule& a, const BuildModule& b) { return a.directory < b.directory; });
    out.modules.erase(std::unique(out.modules.begin(), out.modules.end(),
                                  [](const BuildModule& a, const BuildModule& b) { return a.directory == b.directory; }),
                      out.modules.end());
    return out;
}

std::string image_name(std::string_view image) {
    auto at = image.find('@');
    if (at != std::string_view::npos) image = image.substr(0, at);
    auto slash = image.rfind('/');
    auto colon = image.rfind(':');
    if (colon != std::string_view::npos && (slash == std::string_view::npos || colon > slash)) {
        image = image.substr(0, colon);
    }
    return std::string(image);
}

ImageCatalog ImageCatalog::from_yaml(std::string_view text) {
    ImageCatalog catalog;
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        throw ParseError("<image catalog>", static_cast<std::size_t>(std::max(e.mark.line, 0)) + 1, e.msg);
    }
    const auto images = root["images"];
    if (!images || !images.IsSequence()) throw Error(ErrorKind::input, "image catalog lacks an 'images' list");
    for (const auto& entry : images) {
        ImageClass cls;
        auto prefix = lower(entry["prefix"].as<std::string>());
        cls.node_type = node_type_from_string(entry["type"] ? entry["type"].as<std::string>() : "service");
        if (entry["stereotypes"]) {
            for (const auto& s : entry["stereotypes"]) cls.stereotypes.emplace(s.as<std::string>());
        }
        if (cls.node_type == NodeType::database) cls.stereotypes.emplace("database");
        catalog.entries_.emplace_back(std::move(prefix), std::move(cls));
    }
    return catalog;
}

const ImageCatalog& ImageCatalog::defaults() {
    static const ImageCatalog catalog = from_yaml(embedded::images_yaml());
    return catalog;
}

std::optional<ImageClass> ImageCatalog::classify(std::string_view image) const {
    auto name = lower(image_name(image));
    if (name.empty()) return std::nullopt;
    std::string last = last_segment(name);
    const ImageClass* best = nullptr;
    std::size_t best_len = 0;
    for (const auto& [prefix, cls] : entries_) {
        bool hit = name.starts_with(prefix) || (prefix.find('/') == std::string::npos && last.starts_with(prefix));
        if (hit && prefix.size() > best_len) {
            best = &cls;
            best_len = prefix.size();
        }
    }
    if (best == nullptr) {
        // Project-prefixed images such as "shop-mongodb": try each later '-'/'_' token.
        for (auto sep = last.find_first_of("-_"); sep != std::string::npos; sep = last.find_first_of("-_", sep + 1)) {
            std::string_view token = std::string_view(last).substr(sep + 1);
            for (const auto& [prefix, cls] : entries_) {
                if (prefix.find('/') == std::string::npos && token.starts_with(prefix) && prefix.size() > best_len) {
                    best = &cls;
                    best_len = prefix.size();
                }
            }
            if (best != nullptr) break;
        }
    }
    if (best == nullptr) return std::nullopt;
    return *best;
}

std::optional<ImageClass> classify_image(std::string_view image, const ImageCatalog& catalog) {
    return catalog.classify(image);
}

} // namespace dfdx
