#include "dfdx/error.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace dfdx;
using test::Analysis;

namespace {

const char* const kFixtures[] = {"mini_app", "broker_app", "pm_app"};

std::string json_of(const Analysis& a) {
    return dfd_to_json(a.dfd()) + trace_to_json(a.dfd().trace());
}

// Shuffles extractors only within their phase; the phase sequence stays intact.
std::vector<Extractor> shuffled_within_phases(std::vector<Extractor> registry, std::mt19937& rng) {
    auto begin = registry.begin();
    while (begin != registry.end()) {
        auto end = std::find_if(begin, registry.end(), [&](const Extractor& e) { return e.phase != begin->phase; });
        std::shuffle(begin, end, rng);
        begin = end;
    }
    return registry;
}

std::string line_of(const std::string& text, std::size_t line) {
    std::size_t start = 0;
    for (std::size_t i = 1; i < line; ++i) {
        start = text.find('\n', start);
        if (start == std::string::npos) return {};
        ++start;
    }
    auto end = text.find('\n', start);
    auto out = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (!out.empty() && out.back() == '\r') out.pop_back();
    return out;
}

void expect_entry_reads_back(const std::filesystem::path& root, const TraceEntry& e, const std::string& id) {
    auto text = test::slurp(root / e.file);
    ASSERT_FALSE(text.empty()) << id << " " << e.file;
    auto line = line_of(text, e.line);
    ASSERT_LE(e.span.end, line.size()) << id << " " << e.file << ":" << e.line;
    EXPECT_LT(e.span.start, e.span.end) << id;
    EXPECT_EQ(line.substr(e.span.start, e.span.end - e.span.start), e.evidence) << id << " " << e.file << ":" << e.line;
}

} // namespace

TEST(Pipeline, MiniAppExactModel) {
    auto a = Analysis::run_dir(test::fixture("mini_app"));
    auto expected = parse_dfd_json(test::slurp(test::data_file("mini_app_expected.json")));
    EXPECT_EQ(to_document(a->dfd()), expected) << dfd_to_json(a->dfd());
}

TEST(Pipeline, MiniAppTraceability) {
    auto a = Analysis::run_dir(test::fixture("mini_app"));
    const auto* rec = a->dfd().trace().find("notification_service");
    ASSERT_NE(rec, nullptr);
    EXPECT_EQ(rec->primary().file, "notification-service/src/main/resources/bootstrap.yml");
    EXPECT_EQ(rec->primary().line, 3u);
    EXPECT_EQ(rec->primary().span.str(), "(10:30)");
    const auto& port = *rec->sub_items.at("Port").begin();
    EXPECT_EQ(port.file, "config/src/main/resources/shared/notification-service.yml");
    EXPECT_EQ(port.line, 13u);
    EXPECT_EQ(port.span.str(), "(8:12)");
}

TEST(Pipeline, WithinPhasePermutationInvariance) {
    for (auto name : kFixtures) {
        auto index = FileIndex::build(test::fixture(name));
        auto workspace = Workspace::build(index);
        auto registry = default_registry();
        auto reference = run_pipeline(workspace, registry);
        auto reference_json = dfd_to_json(reference.dfd) + trace_to_json(reference.dfd.trace());
        std::mt19937 rng(20240611);
        for (int round = 0; round < 24; ++round) {
            auto result = run_pipeline(workspace, shuffled_within_phases(registry, rng));
            ASSERT_EQ(dfd_to_json(result.dfd) + trace_to_json(result.dfd.trace()), reference_json)
                << name << " round " << round;
            EXPECT_EQ(result.report.suppressed_self_flows, reference.report.suppressed_self_flows);
        }
    }
}

TEST(Pipeline, RepeatedRunsIdentical) {
    for (auto name : kFixtures) {
        auto first = Analysis::run_dir(test::fixture(name));
        auto second = Analysis::run_dir(test::fixture(name));
        EXPECT_EQ(json_of(*first), json_of(*second)) << name;
    }
}

TEST(Pipeline, RegistryReversalInvariant) {
    auto index = FileIndex::build(test::fixture("pm_app"));
    auto workspace = Workspace::build(index);
    auto registry = default_registry();
    auto forward = run_pipeline(workspace, registry);
    std::stable_sort(registry.begin(), registry.end(),
                     [](const Extractor& a, const Extractor& b) { return a.phase < b.phase; });
    std::vector<Extractor> reversed;
    for (auto it = registry.rbegin(); it != registry.rend(); ++it) reversed.push_back(*it);
    std::stable_sort(reversed.begin(), reversed.end(),
                     [](const Extractor& a, const Extractor& b) { return a.phase < b.phase; });
    auto backward = run_pipeline(workspace, reversed);
    EXPECT_EQ(dfd_to_json(forward.dfd), dfd_to_json(backward.dfd));
}

TEST(Pipeline, FailingExtractorIsolated) {
    auto registry = default_registry();
    registry.push_back(Extractor{"exploding", Phase::flow, [](const ExtractorContext&, Deltas& out) {
                                     out.flow(Flow::make("a", "b"), test::here());
                                     throw std::runtime_error("boom");
                                 }});
    auto index = FileIndex::build(test::fixture("mini_app"));
    auto workspace = Workspace::build(index);
    auto result = run_pipeline(workspace, registry);
    auto clean = run_pipeline(workspace, default_registry());
    EXPECT_EQ(dfd_to_json(result.dfd), dfd_to_json(clean.dfd));
    ASSERT_EQ(result.report.errors.size(), 1u);
    EXPECT_NE(result.report.errors[0].find("exploding"), std::string::npos);
    auto failed = std::find_if(result.report.extractors.begin(), result.report.extractors.end(),
                               [](const ExtractorStats& s) { return s.name == "exploding"; });
    ASSERT_NE(failed, result.report.extractors.end());
    EXPECT_TRUE(failed->failed);
}

TEST(Pipeline, LaterPhasesSeeEarlierResults) {
    std::vector<std::size_t> seen;
    auto registry = default_registry();
    for (auto phase : {Phase::node, Phase::flow, Phase::annotation, Phase::finalize}) {
        registry.push_back(Extractor{std::string("probe_") + to_string(phase), phase,
                                     [&seen](const ExtractorContext& ctx, Deltas&) {
                                         seen.push_back(ctx.dfd.nodes().size() + ctx.dfd.flows().size());
                                     }});
    }
    auto index = FileIndex::build(test::fixture("mini_app"));
    auto workspace = Workspace::build(index);
    auto result = run_pipeline(workspace, registry);
    ASSERT_EQ(seen.size(), 4u);
    EXPECT_TRUE(std::is_sorted(seen.begin(), seen.end()));
    EXPECT_GT(seen[1], 0u);
    EXPECT_EQ(seen[3], result.dfd.nodes().size() + result.dfd.flows().size());
}

TEST(Pipeline, SnapshotHidesSamePhaseDeltas) {
    std::size_t observed = 99;
    std::vector<Extractor> registry{
        {"adder", Phase::node,
         [](const ExtractorContext&, Deltas& out) { out.node(Node::make("solo", NodeType::service), test::here()); }},
        {"observer", Phase::node,
         [&observed](const ExtractorContext& ctx, Deltas&) { observed = ctx.dfd.nodes().size(); }},
    };
    auto a = Analysis::run({{"x.txt", "x\n"}}, registry);
    EXPECT_EQ(observed, 0u);
    EXPECT_NE(a->dfd().find_node("solo"), nullptr);
}

TEST(Pipeline, SelfFlowsCountedNotFailed) {
    std::vector<Extractor> registry{
        {"nodes", Phase::node,
         [](const ExtractorContext&, Deltas& out) { out.node(Node::make("a", NodeType::service), test::here()); }},
        {"loops", Phase::flow,
         [](const ExtractorContext&, Deltas& out) { out.flow(Flow::make("a", "a"), test::here()); }},
    };
    auto a = Analysis::run({{"x.txt", "x\n"}}, registry);
    EXPECT_TRUE(a->dfd().flows().empty());
    EXPECT_EQ(a->result.report.suppressed_self_flows, 1u);
    EXPECT_TRUE(a->result.report.errors.empty());
}

TEST(Pipeline, EveryItemHasPrimaryTrace) {
    for (auto name : kFixtures) {
        auto a = Analysis::run_dir(test::fixture(name));
        for (const auto& [id, node] : a->dfd().nodes()) {
            const auto* rec = a->dfd().trace().find(id);
            ASSERT_NE(rec, nullptr) << name << " " << id;
            EXPECT_FALSE(rec->entries.empty()) << name << " " << id;
            for (const auto& s : node.stereotypes) EXPECT_TRUE(rec->sub_items.contains(std::string(s.name()))) << id << " " << s.name();
            for (const auto& [key, values] : node.tagged_values) EXPECT_TRUE(rec->sub_items.contains(key)) << id << " " << key;
        }
        for (const auto& [key, flow] : a->dfd().flows()) {
            const auto* rec = a->dfd().trace().find(flow_id(key));
            ASSERT_NE(rec, nullptr) << name << " " << flow_id(key);
            for (const auto& s : flow.stereotypes) EXPECT_TRUE(rec->sub_items.contains(std::string(s.name()))) << flow_id(key);
        }
        a->dfd().check_invariants();
    }
}

// Each trace entry, re-read from disk at (file, line, span), yields its evidence.
TEST(Pipeline, TraceEntriesReadBack) {
    for (auto name : kFixtures) {
        auto root = test::fixture(name);
        auto a = Analysis::run_dir(root);
        std::size_t checked = 0;
        for (const auto& [id, rec] : a->dfd().trace().items()) {
            for (const auto& e : rec.entries) {
                expect_entry_reads_back(root, e, id);
                ++checked;
            }
            for (const auto& [key, entries] : rec.sub_items) {
                for (const auto& e : entries) {
                    expect_entry_reads_back(root, e, id + "/" + key);
                    ++checked;
                }
            }
        }
        EXPECT_GT(checked, 0u) << name;
    }
}

TEST(Pipeline, PiggyLikeFixtureShape) {
    auto a = Analysis::run_dir(test::fixture("pm_app"));
    EXPECT_EQ(a->dfd().nodes().size(), 13u);
    EXPECT_EQ(a->dfd().flows().size(), 32u);
    EXPECT_TRUE(a->result.report.unclassified.empty());
    EXPECT_TRUE(a->result.report.errors.empty());
    for (auto name : {"gateway", "registry", "config", "auth_service", "account_service", "statistics_service",
                      "monitoring", "user", "rabbitmq"}) {
        EXPECT_NE(a->dfd().find_node(name), nullptr) << name;
    }
}
