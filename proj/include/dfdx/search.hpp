#pragma once

#include "dfdx/model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dfdx {

enum class LanguageClass { java, yaml, properties, dockerfile, compose, build, env, other };

const char* to_string(LanguageClass cls) noexcept;

/// One filename rule. `pattern` is an fnmatch(3) glob over the file name; when
/// `config_location_only` is set the rule applies only to application/bootstrap
/// files or files below a `resources` directory.
struct ClassificationRule {
    std::string pattern;
    LanguageClass language;
    bool config_location_only = false;
};

/// Ordered rule list; the first matching rule wins, unmatched files are `other`.
std::vector<ClassificationRule> default_classification();

LanguageClass classify_path(std::string_view relative_path, const std::vector<ClassificationRule>& rules);

struct IndexOptions {
    std::set<std::string> ignored_directories{".git", "target", "build", "node_modules"};
    std::uintmax_t max_file_size = 2u * 1024u * 1024u;
    std::vector<ClassificationRule> classification = default_classification();
};

struct SourceFile {
    std::string path; // relative to the index root, '/'-separated
    LanguageClass language = LanguageClass::other;
    std::vector<std::string> lines;
    // Per line: column intervals covered by comments.
    std::vector<std::vector<Span>> comments;

    std::string_view directory() const;
    std::string_view stem() const;
    std::string_view filename() const;
    bool in_comment(std::size_t line, std::size_t column) const;
};

/// Immutable, line-split snapshot of a codebase.
class FileIndex {
public:
    static FileIndex build(const std::filesystem::path& root, const IndexOptions& options = {});
    /// In-memory index for tests and request handlers.
    static FileIndex from_files(std::vector<std::pair<std::string, std::string>> files,
                                const IndexOptions& options = {});

    const std::filesystem::path& root() const noexcept { return root_; }
    const std::vector<SourceFile>& files() const noexcept { return files_; }
    const SourceFile* find(std::string_view relative_path) const;
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

private:
    void add(std::string path, std::string_view content, const IndexOptions& options);

    std::filesystem::path root_;
    std::vector<SourceFile> files_;
    std::vector<std::string> warnings_;
};

/// Splits text into lines (LF or CRLF) without the terminators.
std::vector<std::string> split_lines(std::string_view content);

struct Match {
    std::string file;
    std::size_t line = 0; // 1-based
    Span span;
    std::string line_text;

    std::string_view text() const { return std::string_view(line_text).substr(span.start, span.end - span.start); }
    TraceEntry trace(int rank = 1) const { return TraceEntry{file, line, span, std::string(text()), rank}; }

    friend auto operator<=>(const Match& a, const Match& b) {
        return std::tie(a.file, a.line, a.span) <=> std::tie(b.file, b.line, b.span);
    }
    friend bool operator==(const Match& a, const Match& b) {
        return std::tie(a.file, a.line, a.span) == std::tie(b.file, b.line, b.span);
    }
};

/// Literal text (case-sensitive) or ECMAScript regular expression.
class Keyword {
public:
    static Keyword literal(std::string text);
    /// Throws Error(pattern) when the expression is malformed.
    static Keyword pattern(std::string expression);

    const std::string& text() const noexcept { return text_; }
    bool is_pattern() const noexcept { return regex_.has_value(); }

    /// Appends all hits in `line` as spans.
    void scan(std::string_view line, std::vector<Span>& out) const;

private:
    std::string text_;
    std::optional<std::regex> regex_;
};

struct SearchOptions {
    std::optional<std::set<LanguageClass>> languages;
    // Restrict to files whose path starts with this prefix.
    std::optional<std::string> path_prefix;
    // Keep hits inside comments.
    bool include_comments = false;
};

std::vector<Match> find_keyword(const FileIndex& index, const Keyword& keyword, const SearchOptions& options = {});
std::vector<Match> find_in_file(const SourceFile& file, const Keyword& keyword, bool include_comments = false);

/// `origin` is the file holding the dotted reference; returns the sibling file whose
/// stem equals the part before the first dot, and the remainder.
struct CrossFileTarget {
    const SourceFile* file = nullptr;
    std::string keyword;
};
std::optional<CrossFileTarget> resolve_cross_file(const FileIndex& index, std::string_view dotted,
                                                  std::string_view origin);

struct EnvValue {
    std::string value;
    std::optional<Match> source; // the .env line, absent when the inline default was used
};

/// Resolves "${NAME}" / "${NAME:default}" against the nearest .env walking up from
/// `origin`'s directory, then the inline default.
std::optional<EnvValue> resolve_env_var(const FileIndex& index, std::string_view token,
                                        std::string_view origin = {});
bool is_placeholder(std::string_view token);

/// Rule turning a seed line into developer-chosen identifiers. Each regex must have
/// one capture group holding the identifier.
struct ExtractionRule {
    std::vector<std::string> patterns;

    /// Variable names of `new <Seed>(...)` instantiations and `<Seed> name` declarations.
    static ExtractionRule variable_of(std::string_view seed_type);
    std::vector<std::string> extract(std::string_view line) const;
};

struct EvidenceChain {
    std::vector<Match> matches;
    std::string extracted_identifier;
    bool resolved = false;
    std::optional<std::string> resolved_value;
};

/// Seed search, identifier extraction, then `identifier.member` search (same file,
/// then sibling files of the namespace), with cross-file and .env hops for dotted
/// and `${...}` identifiers.
std::vector<EvidenceChain> iterative_search(const FileIndex& index, const Keyword& seed,
                                            const ExtractionRule& extract,
                                            const std::vector<std::string>& follow,
                                            const SearchOptions& options = {});

/// Resolves a Java expression to a string value: string literals, same-file constants,
/// `Class.CONSTANT` references across files and `${...}` environment placeholders.
/// The returned chain starts at `origin_match`; `resolved` is false on a dead end.
EvidenceChain resolve_value(const FileIndex& index, std::string_view expression, const Match& origin_match);

} // namespace dfdx
