#include "dfdx/search.hpp"

#include "dfdx/error.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace dfdx {

namespace fs = std::filesystem;

const char* to_string(LanguageClass cls) noexcept {
    switch (cls) {
    case LanguageClass::java: return "java";
    case LanguageClass::yaml: return "yaml";
    case LanguageClass::properties: return "properties";
    case LanguageClass::dockerfile: return "dockerfile";
    case LanguageClass::compose: return "compose";
    case LanguageClass::build: return "build";
    case LanguageClass::env: return "env";
    case LanguageClass::other: return "other";
    }
    return "other";
}

std::vector<ClassificationRule> default_classification() {
    return {
        {"docker-compose*.yml", LanguageClass::compose},
        {"docker-compose*.yaml", LanguageClass::compose},
        {"compose.yml", LanguageClass::compose},
        {"compose.yaml", LanguageClass::compose},
        {"Dockerfile*", LanguageClass::dockerfile},
        {"pom.xml", LanguageClass::build},
        {"build.gradle", LanguageClass::build},
        {"build.gradle.kts", LanguageClass::build},
        {"settings.gradle", LanguageClass::build},
        {"settings.gradle.kts", LanguageClass::build},
        {"*.java", LanguageClass::java},
        {"*.properties", LanguageClass::properties},
        {".env", LanguageClass::env},
        {"*.yml", LanguageClass::yaml, true},
        {"*.yaml", LanguageClass::yaml, true},
    };
}

namespace {

std::string_view filename_of(std::string_view path) {
    auto slash = path.rfind('/');
    return slash == std::string_view::npos ? path : path.substr(slash + 1);
}

bool is_config_location(std::string_view path) {
    auto name = filename_of(path);
    if (name.find("application") != std::string_view::npos || name.find("bootstrap") != std::string_view::npos) {
        return true;
    }
    return path.starts_with("resources/") || path.find("/resources/") != std::string_view::npos;
}

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

enum class CommentStyle { none, java, hash, xml };

CommentStyle comment_style(const SourceFile& file) {
    switch (file.language) {
    case LanguageClass::java: return CommentStyle::java;
    case LanguageClass::yaml:
    case LanguageClass::properties:
    case LanguageClass::dockerfile:
    case LanguageClass::compose:
    case LanguageClass::env: return CommentStyle::hash;
    case LanguageClass::build:
        return file.filename() == "pom.xml" ? CommentStyle::xml : CommentStyle::java;
    case LanguageClass::other: break;
    }
    auto name = file.filename();
    if (name.ends_with(".xml") || name.ends_with(".html")) return CommentStyle::xml;
    return CommentStyle::none;
}

void add_comment(std::vector<Span>& spans, std::size_t start, std::size_t end) {
    if (end > start) spans.push_back({start, end});
}

// Marks comment regions line by line; block comments may span lines.
std::vector<std::vector<Span>> scan_comments(const std::vector<std::string>& lines, CommentStyle style) {
    std::vector<std::vector<Span>> out(lines.size());
    if (style == CommentStyle::none) return out;

    if (style == CommentStyle::hash) {
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const auto& line = lines[i];
            auto first = line.find_first_not_of(" \t");
            if (first != std::string::npos && (line[first] == '#' || line[first] == '!')) {
                add_comment(out[i], first, line.size());
            }
        }
        return out;
    }

    const std::string_view open = style == CommentStyle::xml ? "<!--" : "/*";
    const std::string_view close = style == CommentStyle::xml ? "-->" : "*/";
    bool in_block = false;
    bool in_text_block = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        std::size_t pos = 0;
        std::size_t block_start = 0;
        while (pos < line.size()) {
            if (in_block) {
                auto end = line.find(close, pos);
                if (end == std::string::npos) {
                    add_comment(out[i], block_start, line.size());
                    pos = line.size();
                    break;
                }
                add_comment(out[i], block_start, end + close.size());
                pos = end + close.size();
                in_block = false;
                continue;
            }
            if (in_text_block) {
                auto end = line.find("\"\"\"", pos);
                if (end == std::string::npos) {
                    pos = line.size();
                    break;
                }
                pos = end + 3;
                in_text_block = false;
                continue;
            }
            std::string_view rest(line.data() + pos, line.size() - pos);
            if (rest.starts_with(open)) {
                in_block = true;
                block_start = pos;
                pos += open.size();
                continue;
            }
            if (style == CommentStyle::java) {
                if (rest.starts_with("//")) {
                    add_comment(out[i], pos, line.size());
                    break;
                }
                if (rest.starts_with("\"\"\"")) {
                    in_text_block = true;
                    pos += 3;
                    continue;
                }
                if (line[pos] == '"' || line[pos] == '\'') {
                    char quote = line[pos++];
                    while (pos < line.size() && line[pos] != quote) {
                        pos += line[pos] == '\\' ? 2 : 1;
                    }
                    ++pos;
                    continue;
                }
            }
            ++pos;
        }
        if (in_block && pos >= line.size() && (out[i].empty() || out[i].back().end != line.size())) {
            // Block opened on this line and still open: covered above, or the line is empty.
            add_comment(out[i], block_start, line.size());
        }
        block_start = 0;
    }
    return out;
}

bool looks_binary(std::string_view content) {
    auto head = content.substr(0, 8000);
    return head.find('\0') != std::string_view::npos;
}

} // namespace

LanguageClass classify_path(std::string_view relative_path, const std::vector<ClassificationRule>& rules) {
    std::string name(filename_of(relative_path));
    for (const auto& rule : rules) {
        if (fnmatch(rule.pattern.c_str(), name.c_str(), 0) != 0) continue;
        if (rule.config_location_only && !is_config_location(relative_path)) continue;
        return rule.language;
    }
    return LanguageClass::other;
}

std::string_view SourceFile::filename() const {
    return filename_of(path);
}

std::string_view SourceFile::directory() const {
    auto slash = path.rfind('/');
    return slash == std::string::npos ? std::string_view{} : std::string_view(path).substr(0, slash);
}

std::string_view SourceFile::stem() const {
    auto name = filename();
    auto dot = name.find('.');
    return dot == std::string_view::npos || dot == 0 ? name : name.substr(0, dot);
}

bool SourceFile::in_comment(std::size_t line, std::size_t column) const {
    if (line == 0 || line > comments.size()) return false;
    for (const auto& span : comments[line - 1]) {
        if (column >= span.start && column < span.end) return true;
    }
    return false;
}

std::vector<std::string> split_lines(std::string_view content) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= content.size()) {
        auto end = content.find('\n', start);
        if (end == std::string_view::npos) {
            if (start < content.size()) lines.emplace_back(content.substr(start));
            break;
        }
        auto line = content.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.emplace_back(line);
        start = end + 1;
    }
    return lines;
}

void FileIndex::add(std::string path, std::string_view content, const IndexOptions& options) {
    SourceFile file;
    file.path = std::move(path);
    file.language = classify_path(file.path, options.classification);
    file.lines = split_lines(content);
    file.comments = scan_comments(file.lines, comment_style(file));
    files_.push_back(std::move(file));
}

FileIndex FileIndex::build(const fs::path& root, const IndexOptions& options) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        throw Error(ErrorKind::io, "cannot read directory '" + root.string() + "'");
    }
    FileIndex index;
    index.root_ = fs::absolute(root);
    std::vector<std::pair<std::string, fs::path>> candidates;
    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
    if (ec) throw Error(ErrorKind::io, "cannot read directory '" + root.string() + "': " + ec.message());
    for (auto end = fs::recursive_directory_iterator(); it != end; it.increment(ec)) {
        if (ec) {
            index.warnings_.push_back("skipped entry: " + ec.message());
            ec.clear();
            continue;
        }
        const auto& entry = *it;
        auto name = entry.path().filename().string();
        if (entry.is_directory(ec)) {
            if (options.ignored_directories.contains(name)) it.disable_recursion_pending();
            continue;
        }
        if (!entry.is_regular_file(ec)) continue;
        auto size = entry.file_size(ec);
        auto rel = fs::relative(entry.path(), root, ec).generic_string();
        if (ec) {
            index.warnings_.push_back("skipped '" + entry.path().string() + "': " + ec.message());
            ec.clear();
            continue;
        }
        if (size > options.max_file_size) {
            index.warnings_.push_back("skipped '" + rel + "': larger than size limit");
            continue;
        }
        candidates.emplace_back(std::move(rel), entry.path());
    }
    std::sort(candidates.begin(), candidates.end());
    for (auto& [rel, path] : candidates) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            index.warnings_.push_back("skipped '" + rel + "': unreadable");
            continue;
        }
        std::ostringstream buffer;
        buffer << in.rdbuf();
        std::string content = buffer.str();
        if (looks_binary(content)) continue;
        index.add(rel, content, options);
    }
    return index;
}

FileIndex FileIndex::from_files(std::vector<std::pair<std::string, std::string>> files, const IndexOptions& options) {
    std::sort(files.begin(), files.end());
    FileIndex index;
    index.root_ = fs::path(".");
    for (auto& [path, content] : files) index.add(path, content, options);
    return index;
}

const SourceFile* FileIndex::find(std::string_view relative_path) const {
    auto it = std::lower_bound(files_.begin(), files_.end(), relative_path,
                               [](const SourceFile& f, std::string_view p) { return f.path < p; });
    if (it == files_.end() || it->path != relative_path) return nullptr;
    return &*it;
}

Keyword Keyword::literal(std::string text) {
    if (text.empty()) throw Error(ErrorKind::pattern, "empty keyword");
    Keyword k;
    k.text_ = std::move(text);
    return k;
}

Keyword Keyword::pattern(std::string expression) {
    if (expression.empty()) throw Error(ErrorKind::pattern, "empty pattern");
    Keyword k;
    try {
        k.regex_.emplace(expression, std::regex::ECMAScript | std::regex::optimize);
    } catch (const std::regex_error& e) {
        throw Error(ErrorKind::pattern, "malformed pattern '" + expression + "': " + e.what());
    }
    k.text_ = std::move(expression);
    return k;
}

void Keyword::scan(std::string_view line, std::vector<Span>& out) const {
    if (!regex_) {
        std::size_t pos = 0;
        while ((pos = line.find(text_, pos)) != std::string_view::npos) {
            out.push_back({pos, pos + text_.size()});
            pos += text_.size();
        }
        return;
    }
    for (std::cregex_iterator it(line.data(), line.data() + line.size(), *regex_), end; it != end; ++it) {
        if (it->length(0) == 0) continue;
        auto start = static_cast<std::size_t>(it->position(0));
        out.push_back({start, start + static_cast<std::size_t>(it->length(0))});
    }
}

std::vector<Match> find_in_file(const SourceFile& file, const Keyword& keyword, bool include_comments) {
    std::vector<Match> out;
    std::vector<Span> spans;
    for (std::size_t i = 0; i < file.lines.size(); ++i) {
        spans.clear();
        keyword.scan(file.lines[i], spans);
        for (const auto& span : spans) {
            if (!include_comments && file.in_comment(i + 1, span.start)) continue;
            out.push_back(Match{file.path, i + 1, span, file.lines[i]});
        }
    }
    return out;
}

std::vector<Match> find_keyword(const FileIndex& index, const Keyword& keyword, const SearchOptions& options) {
    std::vector<Match> out;
    for (const auto& file : index.files()) {
        if (options.languages && !options.languages->contains(file.language)) continue;
        if (options.path_prefix && !file.path.starts_with(*options.path_prefix)) continue;
        auto hits = find_in_file(file, keyword, options.include_comments);
        out.insert(out.end(), std::make_move_iterator(hits.begin()), std::make_move_iterator(hits.end()));
    }
    return out;
}

std::optional<CrossFileTarget> resolve_cross_file(const FileIndex& index, std::string_view dotted,
                                                  std::string_view origin) {
    auto dot = dotted.find('.');
    if (dot == std::string_view::npos || dot == 0 || dot + 1 >= dotted.size()) return std::nullopt;
    auto stem = dotted.substr(0, dot);
    auto remainder = dotted.substr(dot + 1);
    if (!std::all_of(stem.begin(), stem.end(), is_ident_char)) return std::nullopt;

    const SourceFile* origin_file = index.find(origin);
    std::string_view origin_dir = origin_file ? origin_file->directory() : std::string_view{};

    auto package_of = [](const SourceFile& f) -> std::string {
        for (const auto& line : f.lines) {
            auto trimmed = std::string_view(line);
            if (trimmed.starts_with("package ")) return std::string(trimmed);
        }
        return {};
    };

    const SourceFile* found = nullptr;
    for (const auto& file : index.files()) {
        if (file.path == origin || file.stem() != stem) continue;
        if (file.directory() == origin_dir) {
            found = &file;
            break;
        }
    }
    if (found == nullptr && origin_file != nullptr) {
        auto package = package_of(*origin_file);
        if (!package.empty()) {
            for (const auto& file : index.files()) {
                if (file.path != origin && file.stem() == stem && file.language == LanguageClass::java &&
                    package_of(file) == package) {
                    found = &file;
                    break;
                }
            }
        }
    }
    if (found == nullptr) return std::nullopt;
    return CrossFileTarget{found, std::string(remainder)};
}

bool is_placeholder(std::string_view token) {
    return token.size() > 3 && token.starts_with("${") && token.ends_with("}");
}

std::optional<EnvValue> resolve_env_var(const FileIndex& index, std::string_view token, std::string_view origin) {
    auto trimmed = token;
    while (!trimmed.empty() && (trimmed.front() == ' ' || trimmed.front() == '"')) trimmed.remove_prefix(1);
    while (!trimmed.empty() && (trimmed.back() == ' ' || trimmed.back() == '"')) trimmed.remove_suffix(1);
    if (!is_placeholder(trimmed)) return std::nullopt;
    auto body = trimmed.substr(2, trimmed.size() - 3);
    std::optional<std::string> fallback;
    if (auto colon = body.find(':'); colon != std::string_view::npos) {
        fallback = std::string(body.substr(colon + 1));
        body = body.substr(0, colon);
    }
    std::string name(body);

    std::string dir;
    if (const auto* file = index.find(origin)) {
        dir = std::string(file->directory());
    } else if (!origin.empty()) {
        auto slash = origin.rfind('/');
        dir = slash == std::string_view::npos ? std::string{} : std::string(origin.substr(0, slash));
    }
    while (true) {
        std::string candidate = dir.empty() ? ".env" : dir + "/.env";
        if (const auto* env = index.find(candidate)) {
            for (std::size_t i = 0; i < env->lines.size(); ++i) {
                std::string_view line = env->lines[i];
                auto first = line.find_first_not_of(" \t");
                if (first == std::string_view::npos || line[first] == '#') continue;
                std::size_t key_start = first;
                if (line.substr(first).starts_with("export ")) key_start = first + 7;
                auto eq = line.find('=', key_start);
                if (eq == std::string_view::npos) continue;
                auto key = line.substr(key_start, eq - key_start);
                while (!key.empty() && key.back() == ' ') key.remove_suffix(1);
                if (key != name) continue;
                std::size_t vstart = eq + 1;
                std::size_t vend = line.size();
                while (vstart < vend && line[vstart] == ' ') ++vstart;
                while (vend > vstart && (line[vend - 1] == ' ' || line[vend - 1] == '\t')) --vend;
                if (vend - vstart >= 2 && (line[vstart] == '"' || line[vstart] == '\'') &&
                    line[vend - 1] == line[vstart]) {
                    ++vstart;
                    --vend;
                }
                Span span{vstart, std::max(vend, vstart + 1)};
                if (vend == vstart) span = {key_start, eq};
                return EnvValue{std::string(line.substr(vstart, vend - vstart)),
                                Match{env->path, i + 1, span, env->lines[i]}};
            }
        }
        if (dir.empty()) break;
        auto slash = dir.rfind('/');
        dir = slash == std::string::npos ? std::string{} : dir.substr(0, slash);
    }
    if (fallback) return EnvValue{*fallback, std::nullopt};
    return std::nullopt;
}

namespace {

std::string regex_escape(std::string_view text) {
    static const std::string special = R"(\^$.|?*+()[]{})";
    std::string out;
    for (char c : text) {
        if (special.find(c) != std::string::npos) out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

bool is_import_line(std::string_view line) {
    auto first = line.find_first_not_of(" \t");
    return first != std::string_view::npos && line.substr(first).starts_with("import ");
}

// First line in `file` declaring `name = "literal"`; returns the match over the literal.
std::optional<std::pair<Match, std::string>> find_constant(const SourceFile& file, std::string_view name) {
    std::regex decl("\\b" + regex_escape(name) + "\\s*=\\s*\"([^\"]*)\"");
    for (std::size_t i = 0; i < file.lines.size(); ++i) {
        std::smatch m;
        const std::string& line = file.lines[i];
        if (!std::regex_search(line, m, decl)) continue;
        auto start = static_cast<std::size_t>(m.position(1));
        if (file.in_comment(i + 1, start)) continue;
        Span span{start, start + static_cast<std::size_t>(m.length(1))};
        if (span.end == span.start) span = {static_cast<std::size_t>(m.position(0)), static_cast<std::size_t>(m.position(0) + m.length(0))};
        return std::make_pair(Match{file.path, i + 1, span, line}, m.str(1));
    }
    return std::nullopt;
}

// Hits of `identifier.member` whose identifier is not the tail of a longer name.
std::vector<Match> member_hits(const SourceFile& file, const std::string& identifier, const std::string& member,
                               bool include_comments) {
    std::vector<Match> out;
    auto needle = identifier + "." + member;
    for (auto& hit : find_in_file(file, Keyword::literal(needle), include_comments)) {
        if (hit.span.start > 0 && is_ident_char(hit.line_text[hit.span.start - 1])) continue;
        auto after = hit.span.end;
        if (after < hit.line_text.size() && is_ident_char(hit.line_text[after])) continue;
        if (after < hit.line_text.size() && hit.line_text[after] == '(') ++hit.span.end;
        out.push_back(std::move(hit));
    }
    return out;
}

void append_env_hop(const FileIndex& index, EvidenceChain& chain, const std::string& value, std::string_view origin) {
    if (!is_placeholder(value)) {
        chain.resolved_value = value;
        chain.resolved = true;
        return;
    }
    if (auto env = resolve_env_var(index, value, origin)) {
        if (env->source) chain.matches.push_back(*env->source);
        chain.resolved_value = env->value;
        chain.resolved = true;
    }
}

} // namespace

ExtractionRule ExtractionRule::variable_of(std::string_view seed_type) {
    auto seed = regex_escape(seed_type);
    return ExtractionRule{{
        "(\\w+)\\s*=\\s*new\\s+" + seed + "\\b",
        "\\b" + seed + "(?:<[^>]*>)?\\s+(\\w+)\\s*[=;,)]",
    }};
}

std::vector<std::string> ExtractionRule::extract(std::string_view line) const {
    std::vector<std::string> out;
    std::string text(line);
    for (const auto& pattern : patterns) {
        std::regex re(pattern);
        for (std::sregex_iterator it(text.begin(), text.end(), re), end; it != end; ++it) {
            if (it->size() < 2 || !(*it)[1].matched) continue;
            auto id = it->str(1);
            if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(std::move(id));
        }
    }
    return out;
}

std::vector<EvidenceChain> iterative_search(const FileIndex& index, const Keyword& seed,
                                            const ExtractionRule& extract,
                                            const std::vector<std::string>& follow,
                                            const SearchOptions& options) {
    std::vector<EvidenceChain> chains;
    auto seeds = find_keyword(index, seed, options);
    std::set<std::pair<std::string, std::size_t>> seen_lines;
    for (const auto& hit : seeds) {
        if (!seen_lines.emplace(hit.file, hit.line).second) continue;
        if (is_import_line(hit.line_text)) continue;
        auto identifiers = extract.extract(hit.line_text);
        if (identifiers.empty()) {
            chains.push_back(EvidenceChain{{hit}, {}, false, std::nullopt});
            continue;
        }
        const SourceFile* origin = index.find(hit.file);
        for (const auto& id : identifiers) {
            if (is_placeholder(id)) {
                EvidenceChain chain{{hit}, id, false, std::nullopt};
                append_env_hop(index, chain, id, hit.file);
                chains.push_back(std::move(chain));
                continue;
            }
            if (id.find('.') != std::string::npos) {
                EvidenceChain chain{{hit}, id, false, std::nullopt};
                if (auto target = resolve_cross_file(index, id, hit.file)) {
                    if (auto constant = find_constant(*target->file, target->keyword)) {
                        chain.matches.push_back(constant->first);
                        append_env_hop(index, chain, constant->second, target->file->path);
                    }
                }
                chains.push_back(std::move(chain));
                continue;
            }

            bool any = false;
            auto collect = [&](const SourceFile& file) {
                for (const auto& member : follow) {
                    for (auto& m : member_hits(file, id, member, options.include_comments)) {
                        chains.push_back(EvidenceChain{{hit, std::move(m)}, id, true, std::nullopt});
                        any = true;
                    }
                }
            };
            if (origin != nullptr) collect(*origin);
            if (!any && origin != nullptr) {
                for (const auto& file : index.files()) {
                    if (&file != origin && file.language == LanguageClass::java &&
                        file.directory() == origin->directory()) {
                        collect(file);
                    }
                }
            }
            if (!any) chains.push_back(EvidenceChain{{hit}, id, false, std::nullopt});
        }
    }
    return chains;
}

EvidenceChain resolve_value(const FileIndex& index, std::string_view expression, const Match& origin_match) {
    EvidenceChain chain{{origin_match}, std::string(expression), false, std::nullopt};
    auto expr = expression;
    while (!expr.empty() && std::isspace(static_cast<unsigned char>(expr.front()))) expr.remove_prefix(1);
    while (!expr.empty() && std::isspace(static_cast<unsigned char>(expr.back()))) expr.remove_suffix(1);
    chain.extracted_identifier = std::string(expr);
    if (expr.empty()) return chain;

    if (expr.size() >= 2 && expr.front() == '"' && expr.back() == '"') {
        std::string literal(expr.substr(1, expr.size() - 2));
        append_env_hop(index, chain, literal, origin_match.file);
        return chain;
    }
    if (!std::all_of(expr.begin(), expr.end(), [](char c) { return is_ident_char(c) || c == '.'; })) {
        return chain;
    }
    if (expr.find('.') != std::string_view::npos) {
        if (auto target = resolve_cross_file(index, expr, origin_match.file)) {
            if (auto constant = find_constant(*target->file, target->keyword)) {
                chain.matches.push_back(constant->first);
                append_env_hop(index, chain, constant->second, target->file->path);
            }
        }
        return chain;
    }
    if (const auto* file = index.find(origin_match.file)) {
        if (auto constant = find_constant(*file, expr)) {
            chain.matches.push_back(constant->first);
            append_env_hop(index, chain, constant->second, file->path);
        }
    }
    return chain;
}

} // namespace dfdx
