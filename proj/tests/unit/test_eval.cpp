#include "dfdx/error.hpp"
#include "dfdx/eval.hpp"
#include "support.hpp"
#include "tables.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <random>

using namespace dfdx;

namespace {

DfdDocument random_document(std::mt19937& rng) {
    static const char* const names[] = {"a", "b", "c", "d", "e", "f"};
    static const char* const stereotypes[] = {"internal", "restful_http", "circuit_breaker", "authenticated_request",
                                              "plaintext_credentials", "database"};
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> pick(0, 5);
    DfdDocument doc;
    for (auto name : names) {
        if (!coin(rng)) continue;
        NodeRecord n{name, coin(rng) ? NodeType::service : NodeType::external_entity, {}, {}};
        if (coin(rng)) n.stereotypes.push_back(stereotypes[pick(rng)]);
        if (coin(rng)) n.tagged_values["Port"].insert(std::to_string(8000 + pick(rng)));
        doc.nodes.push_back(std::move(n));
    }
    for (auto s : names) {
        for (auto r : names) {
            if (std::string(s) == r || pick(rng) > 1) continue;
            FlowRecord f{s, r, {}, {}};
            if (coin(rng)) f.stereotypes.push_back(stereotypes[pick(rng)]);
            doc.flows.push_back(std::move(f));
        }
    }
    return doc;
}

GroupCounts swapped(const GroupCounts& c) {
    return GroupCounts{c.tp, c.fn, c.fp};
}

} // namespace

TEST(Eval, IdenticalDocumentsArePerfect) {
    auto doc = parse_dfd_json(test::slurp(test::data_file("mini_app_expected.json")));
    auto c = match_items(doc, doc);
    EXPECT_EQ(c.overall().fp, 0u);
    EXPECT_EQ(c.overall().fn, 0u);
    EXPECT_EQ(c.services.tp, 5u);
    EXPECT_EQ(c.external_entities.tp, 1u);
    EXPECT_EQ(c.information_flows.tp, 4u);
    auto m = metrics_of(c);
    EXPECT_EQ(m.overall.precision, 1.0);
    EXPECT_EQ(m.overall.recall, 1.0);
}

TEST(Eval, WrongDirectionIsOneFalsePositiveOneFalseNegative) {
    DfdDocument truth{{{"a", NodeType::service, {}, {}}, {"b", NodeType::service, {}, {}}}, {{"a", "b", {}, {}}}};
    DfdDocument extracted = truth;
    extracted.flows[0] = FlowRecord{"b", "a", {}, {}};
    auto c = match_items(extracted, truth);
    EXPECT_EQ(c.information_flows, (GroupCounts{0, 1, 1}));
}

TEST(Eval, AnnotationsMatchedByOwnerAndTrimmedValue) {
    DfdDocument truth{{{"a", NodeType::service, {"internal"}, {{"Port", {"8080"}}}}}, {}};
    DfdDocument extracted{{{"a", NodeType::service, {"internal"}, {{"Port", {" 8080 "}}}}}, {}};
    EXPECT_EQ(match_items(extracted, truth).annotations, (GroupCounts{2, 0, 0}));
    DfdDocument elsewhere{{{"a", NodeType::service, {}, {}}, {"b", NodeType::service, {"internal"}, {}}}, {}};
    auto c = match_items(elsewhere, truth);
    EXPECT_EQ(c.annotations, (GroupCounts{0, 1, 2}));
    EXPECT_EQ(c.services, (GroupCounts{1, 1, 0}));
}

TEST(Eval, SecuritySubsetOfAnnotations) {
    DfdDocument truth{{{"a", NodeType::service, {"internal", "authorization_server"}, {}}}, {}};
    DfdDocument extracted{{{"a", NodeType::service, {"internal"}, {}}}, {}};
    auto c = match_items(extracted, truth);
    EXPECT_EQ(c.security_annotations, (GroupCounts{0, 0, 1}));
    EXPECT_EQ(c.annotations, (GroupCounts{1, 0, 1}));
}

TEST(Eval, DuplicateIdentitiesRejected) {
    DfdDocument dup{{{"a", NodeType::service, {}, {}}, {"a", NodeType::database, {}, {}}}, {}};
    try {
        match_items(dup, DfdDocument{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::input);
    }
}

// Swapping extracted and truth swaps fp and fn and keeps tp; tp + fn equals the
// truth size and tp + fp the extracted size in every group.
TEST(EvalProperty, SymmetryAndConservation) {
    std::mt19937 rng(7);
    for (int round = 0; round < 200; ++round) {
        auto x = random_document(rng);
        auto y = random_document(rng);
        auto xy = match_items(x, y);
        auto yx = match_items(y, x);
        EXPECT_EQ(xy.services, swapped(yx.services));
        EXPECT_EQ(xy.external_entities, swapped(yx.external_entities));
        EXPECT_EQ(xy.information_flows, swapped(yx.information_flows));
        EXPECT_EQ(xy.annotations, swapped(yx.annotations));
        EXPECT_EQ(xy.security_annotations, swapped(yx.security_annotations));

        auto xx = match_items(x, x);
        EXPECT_EQ(xy.information_flows.tp + xy.information_flows.fp, x.flows.size());
        EXPECT_EQ(xy.information_flows.tp + xy.information_flows.fn, y.flows.size());
        EXPECT_EQ(xy.services.tp + xy.services.fp + xy.external_entities.tp + xy.external_entities.fp, x.nodes.size());
        EXPECT_EQ(xy.annotations.tp + xy.annotations.fp, xx.annotations.tp);
        EXPECT_EQ(xx.overall().fp + xx.overall().fn, 0u);
    }
}

TEST(Eval, ZeroDenominatorIsUndefined) {
    auto s = Score::of(GroupCounts{});
    EXPECT_FALSE(s.precision);
    EXPECT_FALSE(s.recall);
    auto only_fn = Score::of(GroupCounts{0, 0, 1});
    EXPECT_FALSE(only_fn.precision);
    EXPECT_EQ(only_fn.recall, 0.0);
}

TEST(Eval, SingleApplicationOverall) {
    auto rows = test::read_csv(test::data_file("eval_counts.csv").string());
    auto it = std::find_if(rows.begin(), rows.end(), [](const auto& r) { return r.label == "7"; });
    ASSERT_NE(it, rows.end());
    auto m = metrics_of(test::eval_counts_of(*it));
    ASSERT_TRUE(m.overall.precision && m.overall.recall);
    EXPECT_NEAR(*m.overall.precision, 1.00, 0.005);
    EXPECT_NEAR(*m.overall.recall, 0.91, 0.005);
}

TEST(Eval, PooledOverall) {
    std::vector<EvalCounts> all;
    for (const auto& r : test::read_csv(test::data_file("eval_counts.csv").string())) {
        if (r.label.rfind("Sum", 0) != 0) all.push_back(test::eval_counts_of(r));
    }
    ASSERT_EQ(all.size(), 17u);
    auto m = compute_metrics(all);
    EXPECT_EQ(m.total.overall(), (GroupCounts{1686, 127, 303}));
    EXPECT_NEAR(*m.micro.overall.precision, 0.93, 0.005);
    EXPECT_NEAR(*m.micro.overall.recall, 0.85, 0.005);
    EXPECT_EQ(m.per_app.size(), 17u);
}

TEST(Eval, PerAppMeanSkipsUndefined) {
    EvalCounts a;
    a.external_entities = {1, 1, 0};
    EvalCounts b;
    b.external_entities = {0, 0, 1};
    auto m = compute_metrics({a, b});
    EXPECT_DOUBLE_EQ(*m.per_app_mean.external_entities.precision, 0.5);
    EXPECT_DOUBLE_EQ(*m.per_app_mean.external_entities.recall, 0.5);
    EXPECT_THROW(compute_metrics({}), Error);
}

TEST(Eval, MetricsReproduceFromCounts) {
    std::size_t checked = 0;
    auto mismatches = test::check_tables(test::data_file("eval_counts.csv").string(), test::data_file("eval_metrics.csv").string(),
                                         0.005, &checked);
    EXPECT_GT(checked, 250u);
    for (const auto& m : mismatches) {
        ADD_FAILURE() << m.row << " " << m.column << ": computed " << (m.computed ? std::to_string(*m.computed) : "undefined")
                      << ", table " << (m.expected ? std::to_string(*m.expected) : "blank");
    }
}

TEST(Eval, MetricsCheckDetectsPerturbation) {
    auto dir = std::filesystem::temp_directory_path() / ("dfdx-tables-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
    std::filesystem::create_directories(dir);
    auto text = test::slurp(test::data_file("eval_metrics.csv"));
    auto pos = text.find("\n7,1,1,1,1,1,0.92");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 17, "\n7,1,1,1,1,1,0.97");
    std::ofstream(dir / "t4.csv") << text;
    auto mismatches = test::check_tables(test::data_file("eval_counts.csv").string(), (dir / "t4.csv").string(), 0.005);
    std::filesystem::remove_all(dir);
    ASSERT_EQ(mismatches.size(), 1u);
    EXPECT_EQ(mismatches[0].row, "7");
    EXPECT_EQ(mismatches[0].column, "i_r");
}

TEST(GroundTruth, OutputFormatAccepted) {
    auto doc = parse_ground_truth(test::slurp(test::data_file("mini_app_expected.json")));
    EXPECT_EQ(doc.nodes.size(), 6u);
}

TEST(GroundTruth, DatasetLayoutAdapted) {
    auto doc = parse_ground_truth(R"({
        "services": {"Account-Service": {"stereotypes": ["internal"], "tagged_values": [["Port", 6000]]},
                     "mongo": {"stereotypes": ["database"]}},
        "external_entities": [{"name": "user", "stereotypes": ["user", "entrypoint"]}],
        "information_flows": [{"sender": "user", "receiver": "account-service", "stereotypes": ["restful_http"]}]
    })");
    ASSERT_EQ(doc.nodes.size(), 3u);
    EXPECT_EQ(doc.nodes[0].name, "account_service");
    EXPECT_EQ(doc.nodes[0].tagged_values.at("Port"), std::set<std::string>{"6000"});
    EXPECT_EQ(doc.nodes[1].type, NodeType::database);
    EXPECT_EQ(doc.nodes[2].type, NodeType::external_entity);
    ASSERT_EQ(doc.flows.size(), 1u);
    EXPECT_EQ(doc.flows[0].receiver, "account_service");
}

TEST(GroundTruth, MalformedRejected) {
    for (auto text : {"{", "[1]", R"({"services": {"a": {"tagged_values": [["k"]]}}})"}) {
        try {
            parse_ground_truth(text);
            ADD_FAILURE() << text;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::input) << text;
        }
    }
}

TEST(MetricsJson, UndefinedIsNull) {
    EvalCounts c;
    c.services = {2, 0, 1};
    auto j = nlohmann::json::parse(metrics_to_json({"demo"}, {c}, compute_metrics({c})));
    EXPECT_EQ(j["applications"][0]["name"], "demo");
    EXPECT_TRUE(j["applications"][0]["metrics"]["external_entities"]["precision"].is_null());
    EXPECT_DOUBLE_EQ(j["micro"]["services"]["recall"].get<double>(), 2.0 / 3.0);
}
