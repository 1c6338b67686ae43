// Acceptance checks: one PASS, FAIL or SKIP line per criterion. Exits nonzero on any FAIL.

#include "../tables.hpp"
#include "dfdx/analysis.hpp"
#include "dfdx/error.hpp"
#include "dfdx/output.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using namespace dfdx;

namespace {

const char* const kFixtures[] = {"mini_app", "broker_app", "pm_app"};

int failures = 0;

void report(int id, const std::string& status, const std::string& what, const std::string& detail) {
    if (status == "FAIL") ++failures;
    std::cout << status << " " << id << " " << what << ": " << detail << std::endl;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::fixed << v;
    return os.str();
}

PipelineResult run(const fs::path& root, const std::vector<Extractor>& registry) {
    auto index = FileIndex::build(root);
    auto workspace = Workspace::build(index);
    return run_pipeline(workspace, registry);
}

std::string serialized(const PipelineResult& r) {
    return dfd_to_json(r.dfd) + trace_to_json(r.dfd.trace()) + dfd_to_dot(r.dfd);
}

std::string line_of(const std::string& text, std::size_t line) {
    std::istringstream in(text);
    std::string out;
    for (std::size_t i = 0; i < line && std::getline(in, out); ++i) {
    }
    if (!out.empty() && out.back() == '\r') out.pop_back();
    return out;
}

void mini_app(const fs::path& fixtures, const fs::path& data) {
    auto start = std::chrono::steady_clock::now();
    auto result = run(fixtures / "mini_app", default_registry());
    double elapsed = seconds_since(start);
    auto expected = parse_dfd_json(slurp(data / "mini_app_expected.json"));
    auto actual = to_document(result.dfd);
    bool exact = actual == expected;
    const auto* rec = result.dfd.trace().find("notification_service");
    bool trace = rec != nullptr && rec->primary().line == 3 && rec->primary().span.str() == "(10:30)" &&
                 rec->sub_items.contains("Port") && rec->sub_items.at("Port").begin()->line == 13 &&
                 rec->sub_items.at("Port").begin()->span.str() == "(8:12)";
    std::string detail = std::to_string(actual.nodes.size()) + " nodes, " + std::to_string(actual.flows.size()) +
                         " flows, exact " + (exact ? "yes" : "no") + ", trace " + (trace ? "yes" : "no") + ", " +
                         fmt(elapsed) + " s (limit 2 s)";
    report(1, exact && trace && elapsed < 2.0 ? "PASS" : "FAIL", "illustrative application model", detail);
}

void tables(const fs::path& data) {
    auto start = std::chrono::steady_clock::now();
    std::size_t checked = 0;
    auto mismatches = test::check_tables((data / "eval_counts.csv").string(), (data / "eval_metrics.csv").string(), 0.005, &checked);
    double elapsed = seconds_since(start);
    std::string detail = std::to_string(checked) + " cells, " + std::to_string(mismatches.size()) +
                         " outside 0.005, " + fmt(elapsed) + " s (limit 1 s)";
    for (const auto& m : mismatches) detail += "; " + m.row + "/" + m.column;
    report(2, mismatches.empty() && elapsed < 1.0 ? "PASS" : "FAIL", "evaluation tables recomputed", detail);
}

void determinism(const fs::path& fixtures) {
    std::mt19937 rng(42);
    std::size_t permutations = 0;
    std::string broken;
    for (auto name : kFixtures) {
        auto registry = default_registry();
        auto first = serialized(run(fixtures / name, registry));
        if (serialized(run(fixtures / name, registry)) != first) broken += std::string(" ") + name + "(rerun)";
        auto index = FileIndex::build(fixtures / name);
        auto workspace = Workspace::build(index);
        for (int round = 0; round < 20; ++round) {
            auto shuffled = registry;
            auto begin = shuffled.begin();
            while (begin != shuffled.end()) {
                auto end = std::find_if(begin, shuffled.end(), [&](const Extractor& e) { return e.phase != begin->phase; });
                std::shuffle(begin, end, rng);
                begin = end;
            }
            ++permutations;
            if (serialized(run_pipeline(workspace, shuffled)) != first) {
                broken += std::string(" ") + name + "(perm " + std::to_string(round) + ")";
            }
        }
    }
    report(3, broken.empty() ? "PASS" : "FAIL", "deterministic output",
           "2 runs and " + std::to_string(permutations) + " within-phase permutations over 3 fixtures" +
               (broken.empty() ? "" : ", differs:" + broken));
}

void trace_integrity(const fs::path& fixtures) {
    std::size_t entries = 0;
    std::size_t bad = 0;
    std::size_t untraced = 0;
    std::string first_bad;
    for (auto name : kFixtures) {
        auto root = fixtures / name;
        auto result = run(root, default_registry());
        auto check = [&](const TraceEntry& e, const std::string& id) {
            ++entries;
            auto line = line_of(slurp(root / e.file), e.line);
            bool ok = e.span.start < e.span.end && e.span.end <= line.size() &&
                      line.substr(e.span.start, e.span.end - e.span.start) == e.evidence;
            if (!ok) {
                ++bad;
                if (first_bad.empty()) first_bad = std::string(name) + ":" + id;
            }
        };
        for (const auto& [id, node] : result.dfd.nodes()) untraced += result.dfd.trace().find(id) == nullptr;
        for (const auto& [key, flow] : result.dfd.flows()) untraced += result.dfd.trace().find(flow_id(key)) == nullptr;
        for (const auto& [id, rec] : result.dfd.trace().items()) {
            for (const auto& e : rec.entries) check(e, id);
            for (const auto& [key, list] : rec.sub_items) {
                for (const auto& e : list) check(e, id + "/" + key);
            }
        }
    }
    report(4, bad == 0 && untraced == 0 && entries > 0 ? "PASS" : "FAIL", "traceability reads back",
           std::to_string(entries) + " entries, " + std::to_string(bad) + " mismatched, " + std::to_string(untraced) +
               " untraced items" + (first_bad.empty() ? "" : ", first " + first_bad));
}

// PIGGYMETRICS_PATH is a checkout or a git URL; PIGGYMETRICS_REF pins the commit for URLs.
void reference_application() {
    const char* source = std::getenv("PIGGYMETRICS_PATH");
    const char* truth = std::getenv("PIGGYMETRICS_TRUTH");
    if (source == nullptr || truth == nullptr) {
        report(5, "SKIP", "reference application",
               "needs PIGGYMETRICS_PATH (checkout or git URL) and PIGGYMETRICS_TRUTH (ground-truth DFD)");
        return;
    }
    try {
        AnalysisRequest request;
        if (std::string(source).find("://") != std::string::npos) {
            request.repo_url = source;
            if (const char* ref = std::getenv("PIGGYMETRICS_REF")) request.ref = ref;
        } else {
            request.path = source;
        }
        request.formats = {"json"};
        request.eval_truth = truth;
        auto result = analyze(request);
        const auto& c = *result.counts;
        auto m = metrics_of(c);
        bool services = c.services.tp == 14 && c.services.fp == 0;
        bool ok = services && m.overall.precision && m.overall.recall && *m.overall.precision >= 0.90 &&
                  *m.overall.recall >= 0.80;
        report(5, ok ? "PASS" : "FAIL", "reference application",
               "services TP " + std::to_string(c.services.tp) + " FP " + std::to_string(c.services.fp) +
                   " (want 14/0), precision " +
                   (m.overall.precision ? fmt(*m.overall.precision) : std::string("undefined")) + " (min 0.90), recall " +
                   (m.overall.recall ? fmt(*m.overall.recall) : std::string("undefined")) + " (min 0.80)");
    } catch (const std::exception& e) {
        report(5, "FAIL", "reference application", e.what());
    }
}

void runtime(const fs::path& fixtures) {
    double worst = 0;
    std::string slowest;
    for (auto name : kFixtures) {
        AnalysisRequest request;
        request.path = (fixtures / name).string();
        request.formats = {"json", "trace", "dot"};
        auto start = std::chrono::steady_clock::now();
        analyze(request);
        double elapsed = seconds_since(start);
        if (elapsed >= worst) {
            worst = elapsed;
            slowest = name;
        }
    }
    report(6, worst <= 30.0 ? "PASS" : "FAIL", "analysis time",
           "slowest " + slowest + " " + fmt(worst) + " s (limit 30 s)");
}

} // namespace

int main(int argc, char** argv) {
    fs::path fixtures = argc > 1 ? fs::path(argv[1]) : fs::path(DFDX_FIXTURES);
    fs::path data = argc > 2 ? fs::path(argv[2]) : fs::path(DFDX_TEST_DATA);
    for (auto [id, check] : std::initializer_list<std::pair<int, std::function<void()>>>{
             {1, [&] { mini_app(fixtures, data); }},
             {2, [&] { tables(data); }},
             {3, [&] { determinism(fixtures); }},
             {4, [&] { trace_integrity(fixtures); }},
             {5, [&] { reference_application(); }},
             {6, [&] { runtime(fixtures); }}}) {
        try {
            check();
        } catch (const std::exception& e) {
            report(id, "FAIL", "criterion", std::string("exception: ") + e.what());
        }
    }
    return failures == 0 ? 0 : 1;
}
