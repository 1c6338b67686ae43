#pragma once

#include "dfdx/extractors.hpp"
#include "dfdx/output.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace dfdx::test {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(DFDX_FIXTURES) / name;
}

inline std::filesystem::path data_file(const std::string& name) {
    return std::filesystem::path(DFDX_TEST_DATA) / name;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline TraceEntry here(std::string file = "f.java", std::size_t line = 1) {
    return TraceEntry{std::move(file), line, Span{0, 1}, "x"};
}

using Files = std::vector<std::pair<std::string, std::string>>;

/// Index, workspace and pipeline result of an in-memory application.
struct Analysis {
    FileIndex index;
    Workspace workspace;
    PipelineResult result;

    Analysis(const Analysis&) = delete;
    Analysis& operator=(const Analysis&) = delete;

    static std::unique_ptr<Analysis> run(Files files, const std::vector<Extractor>& registry = default_registry(),
                                         AnalysisOptions options = {}) {
        auto a = std::unique_ptr<Analysis>(new Analysis(FileIndex::from_files(std::move(files))));
        a->workspace = Workspace::build(a->index, RuleSet::defaults(), ImageCatalog::defaults(), options);
        a->result = run_pipeline(a->workspace, registry);
        return a;
    }
    static std::unique_ptr<Analysis> run_dir(const std::filesystem::path& root) {
        auto a = std::unique_ptr<Analysis>(new Analysis(FileIndex::build(root)));
        a->workspace = Workspace::build(a->index);
        a->result = run_pipeline(a->workspace, default_registry());
        return a;
    }

    const Dfd& dfd() const { return result.dfd; }

private:
    explicit Analysis(FileIndex i) : index(std::move(i)) {}
};

} // namespace dfdx::test
