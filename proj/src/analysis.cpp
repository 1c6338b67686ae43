#include "dfdx/analysis.hpp"

#include "dfdx/error.hpp"
#include "dfdx/output.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <regex>
#include <sstream>

namespace fs = std::filesystem;

namespace dfdx {

namespace {

struct ProcessResult {
    int status = -1;
    std::string output;
};

// Runs argv without a shell; stdout and stderr are captured together.
ProcessResult run_process(const std::vector<std::string>& argv) {
    int fds[2];
    if (pipe(fds) != 0) throw Error(ErrorKind::fatal, "pipe failed");
    pid_t pid = fork();
    if (pid < 0) {
        close(fds[0]);
        close(fds[1]);
        throw Error(ErrorKind::fatal, "fork failed");
    }
    if (pid == 0) {
        dup2(fds[1], STDOUT_FILENO);
        dup2(fds[1], STDERR_FILENO);
        close(fds[0]);
        close(fds[1]);
        setenv("GIT_TERMINAL_PROMPT", "0", 1);
        std::vector<char*> args;
        for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        execvp(args[0], args.data());
        _exit(127);
    }
    close(fds[1]);
    ProcessResult result;
    char buffer[4096];
    for (ssize_t n; (n = read(fds[0], buffer, sizeof buffer)) > 0;) result.output.append(buffer, static_cast<std::size_t>(n));
    close(fds[0]);
    int status = 0;
    waitpid(pid, &status, 0);
    result.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

bool on_path(const std::string& program) {
    const char* path = std::getenv("PATH");
    if (path == nullptr) return false;
    std::stringstream ss(path);
    for (std::string dir; std::getline(ss, dir, ':');) {
        if (dir.empty()) continue;
        auto candidate = fs::path(dir) / program;
        if (access(candidate.c_str(), X_OK) == 0) return true;
    }
    return false;
}

class TempDir {
public:
    TempDir() {
        auto pattern = (fs::temp_directory_path() / "dfdx-XXXXXX").string();
        if (mkdtemp(pattern.data()) == nullptr) throw Error(ErrorKind::fatal, "cannot create a temporary directory");
        path_ = pattern;
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const noexcept { return path_; }

private:
    fs::path path_;
};

void git(const std::vector<std::string>& args, const std::string& what) {
    std::vector<std::string> argv{"git"};
    argv.insert(argv.end(), args.begin(), args.end());
    auto result = run_process(argv);
    if (result.status != 0) {
        auto message = result.output;
        while (!message.empty() && std::isspace(static_cast<unsigned char>(message.back()))) message.pop_back();
        throw Error(ErrorKind::fatal, what + " failed: " + (message.empty() ? "git unavailable" : message));
    }
}

void clone(const std::string& url, const std::optional<std::string>& ref, const fs::path& dir) {
    static const std::regex commit_re("^[0-9a-fA-F]{7,40}$");
    if (!on_path("git")) throw Error(ErrorKind::fatal, "clone of " + url + " needs a git client on PATH");
    if (ref && std::regex_match(*ref, commit_re)) {
        git({"init", "-q", dir.string()}, "git init");
        git({"-C", dir.string(), "remote", "add", "origin", url}, "git remote");
        git({"-C", dir.string(), "fetch", "-q", "--depth", "1", "origin", *ref}, "fetch of " + url);
        git({"-C", dir.string(), "checkout", "-q", "FETCH_HEAD"}, "checkout of " + *ref);
        return;
    }
    std::vector<std::string> args{"clone", "-q", "--depth", "1"};
    if (ref) {
        args.push_back("--branch");
        args.push_back(*ref);
    }
    args.push_back("--");
    args.push_back(url);
    args.push_back(dir.string());
    git(args, "clone of " + url);
}

std::optional<std::string> head_commit(const fs::path& dir) {
    if (!fs::exists(dir / ".git")) return std::nullopt;
    auto result = run_process({"git", "-C", dir.string(), "rev-parse", "HEAD"});
    if (result.status != 0) return std::nullopt;
    auto out = result.output;
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
    return out;
}

std::string app_name(const AnalysisRequest& request) {
    std::string base;
    if (!request.path.empty()) {
        base = fs::weakly_canonical(fs::path(request.path)).filename().string();
    } else {
        base = request.repo_url;
        while (!base.empty() && base.back() == '/') base.pop_back();
        if (base.ends_with(".git")) base.resize(base.size() - 4);
        auto slash = base.find_last_of("/:");
        if (slash != std::string::npos) base = base.substr(slash + 1);
    }
    return base.empty() ? "application" : base;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << content;
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
}

template <class T>
void replace_or_append(std::vector<T>& into, const std::vector<T>& from) {
    for (const auto& item : from) {
        auto it = std::find_if(into.begin(), into.end(), [&](const T& x) { return x.name == item.name; });
        if (it != into.end()) {
            *it = item;
        } else {
            into.push_back(item);
        }
    }
}

} // namespace

const std::set<std::string>& known_formats() {
    static const std::set<std::string> formats{"json", "trace", "dot", "png"};
    return formats;
}

RuleSet layered_rules(const std::vector<std::string>& rule_files) {
    RuleSet rules = RuleSet::defaults();
    for (const auto& file : rule_files) {
        auto layer = RuleSet::from_yaml(read_text_file(file));
        for (const auto& [name, list] : layer.keywords) rules.keywords[name] = list;
        replace_or_append(rules.keyword_rules, layer.keyword_rules);
        replace_or_append(rules.property_rules, layer.property_rules);
        rules.credentials.insert(rules.credentials.end(), layer.credentials.begin(), layer.credentials.end());
        rules.credential_contexts.insert(rules.credential_contexts.end(), layer.credential_contexts.begin(),
                                         layer.credential_contexts.end());
        rules.infrastructural.insert(layer.infrastructural.begin(), layer.infrastructural.end());
    }
    return rules;
}

AnalysisResult analyze(const AnalysisRequest& request) {
    if (request.path.empty() == request.repo_url.empty()) {
        throw Error(ErrorKind::input, "exactly one of a local path or a repository URL is required");
    }
    if (request.formats.empty()) throw Error(ErrorKind::input, "at least one output format is required");
    for (const auto& f : request.formats) {
        if (!known_formats().contains(f)) throw Error(ErrorKind::input, "unknown format '" + f + "'");
    }

    AnalysisResult result;
    result.app = app_name(request);
    const auto rules = layered_rules(request.rule_files);
    const auto images =
        request.images_file ? ImageCatalog::from_yaml(read_text_file(*request.images_file)) : ImageCatalog::defaults();
    std::optional<DfdDocument> truth;
    if (request.eval_truth) truth = parse_ground_truth(read_text_file(*request.eval_truth));

    std::optional<TempDir> checkout;
    fs::path root;
    if (!request.path.empty()) {
        root = request.path;
        std::error_code ec;
        if (!fs::is_directory(root, ec)) throw Error(ErrorKind::fatal, "cannot read directory " + request.path);
    } else {
        checkout.emplace();
        root = checkout->path() / "repo";
        clone(request.repo_url, request.ref, root);
    }
    result.commit = head_commit(root);

    auto start = std::chrono::steady_clock::now();
    auto index = FileIndex::build(root);
    if (index.files().empty()) throw Error(ErrorKind::fatal, "no files indexed under " + root.string());
    result.files_indexed = index.files().size();
    auto workspace = Workspace::build(index, rules, images, AnalysisOptions{request.paper_parity});
    result.pipeline = run_pipeline(workspace, default_registry(rules));
    result.extraction_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.notices = index.warnings();

    result.dfd_json = dfd_to_json(result.pipeline.dfd);
    result.trace_json = trace_to_json(result.pipeline.dfd.trace());
    result.dot = dfd_to_dot(result.pipeline.dfd);
    if (truth) result.counts = match_items(to_document(result.pipeline.dfd), *truth);

    if (request.output_dir.empty()) return result;
    fs::path out(request.output_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create " + out.string() + ": " + ec.message());
    auto emit = [&](const std::string& name, const std::string& content) {
        write_file(out / name, content);
        result.written.push_back((out / name).string());
    };
    if (request.formats.contains("json")) emit(result.app + ".json", result.dfd_json);
    if (request.formats.contains("trace")) emit(result.app + "_traceability.json", result.trace_json);
    if (request.formats.contains("dot") || request.formats.contains("png")) emit(result.app + ".dot", result.dot);
    if (request.formats.contains("png")) {
        if (on_path("dot")) {
            auto png = (out / (result.app + ".png")).string();
            auto r = run_process({"dot", "-Tpng", (out / (result.app + ".dot")).string(), "-o", png});
            if (r.status == 0) {
                result.written.push_back(png);
            } else {
                result.notices.push_back("graphviz failed, PNG skipped: " + r.output);
            }
        } else {
            result.notices.push_back("graphviz not found, PNG skipped (DOT written)");
        }
    }
    if (result.counts) {
        emit(result.app + "_metrics.json", metrics_to_json({result.app}, {*result.counts}, compute_metrics({*result.counts})));
    }
    return result;
}

std::string summary(const AnalysisResult& result, bool verbose) {
    const auto& dfd = result.pipeline.dfd;
    const auto& report = result.pipeline.report;
    std::ostringstream os;
    os << result.app << ": " << dfd.nodes().size() << " nodes, " << dfd.flows().size() << " flows, "
       << result.files_indexed << " files, extraction " << std::fixed << std::setprecision(3)
       << result.extraction_seconds << " s\n";
    if (result.commit) os << "commit " << *result.commit << "\n";
    os << "unresolved " << report.unresolved.size() << ", errors " << report.errors.size() << ", conflicts "
       << report.conflicts.size() << ", unclassified " << report.unclassified.size() << ", suppressed self-flows "
       << report.suppressed_self_flows << "\n";
    if (result.counts) {
        auto m = metrics_of(*result.counts);
        auto show = [](const std::optional<double>& v) {
            std::ostringstream s;
            if (v) {
                s << std::fixed << std::setprecision(3) << *v;
            } else {
                s << "undefined";
            }
            return s.str();
        };
        os << "precision " << show(m.overall.precision) << ", recall " << show(m.overall.recall) << "\n";
    }
    for (const auto& path : result.written) os << "wrote " << path << "\n";
    for (const auto& notice : result.notices) os << "note: " << notice << "\n";
    if (verbose) {
        for (const auto& s : report.extractors) {
            os << "  " << to_string(s.phase) << " " << s.name << ": " << s.nodes << " nodes, " << s.flows
               << " flows, " << s.annotations << " annotations, " << s.features << " features"
               << (s.failed ? " (failed)" : "") << "\n";
        }
        for (const auto& m : report.unresolved) os << "  unresolved: " << m << "\n";
        for (const auto& m : report.errors) os << "  error: " << m << "\n";
        for (const auto& m : report.conflicts) os << "  conflict: " << m << "\n";
        for (const auto& m : report.warnings) os << "  warning: " << m << "\n";
        for (const auto& m : report.unclassified) os << "  unclassified: " << m << "\n";
    }
    return os.str();
}

} // namespace dfdx
