#include "dfdx/error.hpp"
#include "support.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <functional>
#include <numeric>

using namespace dfdx;
using test::Analysis;

namespace {

Dfd small_dfd() {
    Dfd dfd;
    auto svc = Node::make("notification-service", NodeType::service, {"internal"});
    svc.tagged_values["Port"] = {"8000"};
    dfd.upsert_node(svc, test::here("bootstrap.yml", 3));
    dfd.upsert_node(Node::make("config", NodeType::service), test::here("Config.java", 1));
    auto flow = Flow::make("config", "notification-service", {"restful_http"});
    dfd.upsert_flow(flow, test::here("bootstrap.yml", 6));
    return dfd;
}

} // namespace

TEST(Json, NodeAndFlowShape) {
    auto j = nlohmann::json::parse(dfd_to_json(small_dfd()));
    ASSERT_EQ(j["nodes"].size(), 2u);
    const auto& n = j["nodes"][1];
    EXPECT_EQ(n["name"], "notification_service");
    EXPECT_EQ(n["type"], "service");
    EXPECT_EQ(n["stereotypes"], nlohmann::json::array({"internal"}));
    EXPECT_EQ(n["tagged_values"]["Port"], 8000);
    const auto& f = j["flows"][0];
    EXPECT_EQ(f["sender"], "config");
    EXPECT_EQ(f["receiver"], "notification_service");
    EXPECT_EQ(f["stereotypes"], nlohmann::json::array({"restful_http"}));
    EXPECT_TRUE(f["tagged_values"].is_object());
}

TEST(Json, EmptyDfd) {
    auto j = nlohmann::json::parse(dfd_to_json(Dfd{}));
    EXPECT_TRUE(j["nodes"].is_array() && j["nodes"].empty());
    EXPECT_TRUE(j["flows"].is_array() && j["flows"].empty());
    EXPECT_EQ(nlohmann::json::parse(trace_to_json(TraceStore{})), nlohmann::json::object());
}

TEST(Json, MultiValuedTagsAreStringArrays) {
    Dfd dfd;
    auto n = Node::make("a", NodeType::service);
    n.tagged_values["Endpoint"] = {"/b", "/a"};
    n.tagged_values["Port"] = {"0800"};
    dfd.upsert_node(n, test::here());
    auto j = nlohmann::json::parse(dfd_to_json(dfd));
    EXPECT_EQ(j["nodes"][0]["tagged_values"]["Endpoint"], nlohmann::json::array({"/a", "/b"}));
    EXPECT_EQ(j["nodes"][0]["tagged_values"]["Port"], "0800");
}

TEST(Json, RoundTripOnFixtures) {
    for (auto name : {"mini_app", "broker_app", "pm_app"}) {
        auto a = Analysis::run_dir(test::fixture(name));
        auto doc = to_document(a->dfd());
        auto text = document_to_json(doc);
        EXPECT_EQ(parse_dfd_json(text), doc) << name;
        EXPECT_EQ(document_to_json(parse_dfd_json(text)), text) << name;
    }
}

TEST(Json, ParseCanonicalizesAndSorts) {
    auto doc = parse_dfd_json(R"({"nodes": [{"name": "Zeta-Svc"}, {"name": "alpha", "stereotypes": ["mail_server"]}],
                                  "flows": [{"sender": "Zeta-Svc", "receiver": "alpha"}]})");
    ASSERT_EQ(doc.nodes.size(), 2u);
    EXPECT_EQ(doc.nodes[0].name, "alpha");
    EXPECT_EQ(doc.nodes[0].type, NodeType::external_entity);
    EXPECT_EQ(doc.nodes[1].name, "zeta_svc");
    EXPECT_EQ(doc.flows[0].sender, "zeta_svc");
}

TEST(Json, MalformedDocumentsRejected) {
    for (auto text : {"", "[]", R"({"nodes": 3})", R"({"nodes": [{"name": 3}]})",
                      R"({"nodes": [{"name": "a", "type": "planet"}]})", R"({"nodes": [{"name": "a"}, {"name": "A"}]})",
                      R"({"flows": [{"sender": "a", "receiver": "b"}, {"sender": "a", "receiver": "b"}]})"}) {
        try {
            parse_dfd_json(text);
            ADD_FAILURE() << text;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::input) << text;
        }
    }
}

TEST(Json, OutputIsDeterministicAcrossInsertionOrder) {
    std::vector<std::function<void(Dfd&)>> ops{
        [](Dfd& d) { d.upsert_node(Node::make("b", NodeType::service, {"internal"}), test::here("b", 2)); },
        [](Dfd& d) { d.upsert_node(Node::make("a", NodeType::database, {"database"}), test::here("a", 1)); },
        [](Dfd& d) { d.upsert_flow(Flow::make("b", "a"), test::here("c", 3)); },
        [](Dfd& d) { d.upsert_node(Node::make("b", NodeType::service), test::here("b", 1)); },
    };
    std::string reference;
    std::vector<std::size_t> order(ops.size());
    std::iota(order.begin(), order.end(), 0);
    do {
        Dfd d;
        for (auto i : order) ops[i](d);
        auto text = dfd_to_json(d) + trace_to_json(d.trace()) + dfd_to_dot(d);
        if (reference.empty()) reference = text;
        EXPECT_EQ(text, reference);
    } while (std::next_permutation(order.begin(), order.end()));
}

TEST(Trace, ItemShape) {
    auto j = nlohmann::json::parse(trace_to_json(small_dfd().trace()));
    const auto& item = j["notification_service"];
    EXPECT_EQ(item["file"], "bootstrap.yml");
    EXPECT_EQ(item["line"], 3);
    EXPECT_EQ(item["span"], "(0:1)");
    EXPECT_EQ(item["evidence"], "x");
    EXPECT_TRUE(item["sub_items"].contains("internal"));
    EXPECT_TRUE(item["sub_items"].contains("Port"));
    EXPECT_TRUE(j.contains("config->notification_service"));
}

TEST(Trace, AdditionalEvidenceListed) {
    Dfd dfd;
    dfd.upsert_node(Node::make("a", NodeType::service), test::here("z.yml", 9));
    dfd.upsert_node(Node::make("a", NodeType::service), test::here("a.yml", 4));
    auto j = nlohmann::json::parse(trace_to_json(dfd.trace()));
    EXPECT_EQ(j["a"]["file"], "a.yml");
    ASSERT_EQ(j["a"]["additional"].size(), 1u);
    EXPECT_EQ(j["a"]["additional"][0]["file"], "z.yml");
}

TEST(Trace, MiniAppPortSubItem) {
    auto a = Analysis::run_dir(test::fixture("mini_app"));
    auto j = nlohmann::json::parse(trace_to_json(a->dfd().trace()));
    const auto& port = j["notification_service"]["sub_items"]["Port"];
    EXPECT_EQ(port["file"], "config/src/main/resources/shared/notification-service.yml");
    EXPECT_EQ(port["line"], 13);
    EXPECT_EQ(port["span"], "(8:12)");
    EXPECT_EQ(port["evidence"], "8000");
}

TEST(Dot, ConventionsAndEscaping) {
    Dfd dfd;
    auto n = Node::make("web", NodeType::service);
    n.tagged_values["Endpoint"] = {"/say \"hi\"\\now"};
    dfd.upsert_node(n, test::here());
    dfd.upsert_node(Node::make("store", NodeType::database), test::here());
    dfd.upsert_node(Node::make("user", NodeType::external_entity, {"user"}), test::here());
    dfd.upsert_flow(Flow::make("user", "web"), test::here());
    auto dot = dfd_to_dot(dfd);
    EXPECT_EQ(dot.rfind("digraph dfd {", 0), 0u);
    EXPECT_NE(dot.find("\"store\" [shape=cylinder"), std::string::npos);
    EXPECT_NE(dot.find("\"user\" [shape=box,"), std::string::npos);
    EXPECT_NE(dot.find("Endpoint = /say \\\"hi\\\"\\\\now"), std::string::npos);
    EXPECT_NE(dot.find("\"user\" -> \"web\""), std::string::npos);
    EXPECT_EQ(dot.substr(dot.size() - 2), "}\n");
}

TEST(Dot, MiniAppConfigEdge) {
    auto a = Analysis::run_dir(test::fixture("mini_app"));
    auto dot = dfd_to_dot(a->dfd());
    EXPECT_NE(dot.find("\"config\" -> \"notification_service\" [label=\"--restful_http--\"]"), std::string::npos) << dot;
}
