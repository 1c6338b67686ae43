#include "dfdx/service.hpp"

#include "dfdx/error.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace dfdx {

namespace {

using json = nlohmann::json;

void error_response(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(json{{"error", message}}.dump(), "application/json");
}

template <class T>
T field(const json& body, const char* key) {
    try {
        return body.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorKind::input, std::string("field '") + key + "' has the wrong type");
    }
}

} // namespace

AnalysisRequest request_from_json(std::string_view text) {
    json body;
    try {
        body = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::input, std::string("malformed request body: ") + e.what());
    }
    if (!body.is_object()) throw Error(ErrorKind::input, "request body must be a JSON object");
    static const std::set<std::string> known{"path",   "repo_url",   "ref",         "formats",
                                             "rules",  "images",     "eval_truth",  "paper_parity"};
    for (const auto& [key, value] : body.items()) {
        if (!known.contains(key)) throw Error(ErrorKind::input, "unknown field '" + key + "'");
    }
    AnalysisRequest request;
    if (body.contains("path")) request.path = field<std::string>(body, "path");
    if (body.contains("repo_url")) request.repo_url = field<std::string>(body, "repo_url");
    if (request.path.empty() == request.repo_url.empty()) {
        throw Error(ErrorKind::input, "exactly one of 'path' or 'repo_url' is required");
    }
    if (body.contains("ref")) request.ref = field<std::string>(body, "ref");
    if (body.contains("formats")) request.formats = field<std::set<std::string>>(body, "formats");
    if (body.contains("rules")) request.rule_files = field<std::vector<std::string>>(body, "rules");
    if (body.contains("images")) request.images_file = field<std::string>(body, "images");
    if (body.contains("eval_truth")) request.eval_truth = field<std::string>(body, "eval_truth");
    if (body.contains("paper_parity")) request.paper_parity = field<bool>(body, "paper_parity");
    request.output_dir.clear();
    return request;
}

std::string response_json(const AnalysisResult& result) {
    const auto& report = result.pipeline.report;
    json out;
    out["app"] = result.app;
    out["commit"] = result.commit ? json(*result.commit) : json();
    out["extraction_seconds"] = result.extraction_seconds;
    out["dfd"] = json::parse(result.dfd_json);
    out["traceability"] = json::parse(result.trace_json);
    out["report"] = {{"unresolved", report.unresolved},
                     {"errors", report.errors},
                     {"conflicts", report.conflicts},
                     {"warnings", report.warnings},
                     {"unclassified", report.unclassified},
                     {"suppressed_self_flows", report.suppressed_self_flows}};
    if (result.counts) {
        auto m = metrics_of(*result.counts);
        auto value = [](const std::optional<double>& v) { return v ? json(*v) : json(); };
        out["metrics"] = {{"precision", value(m.overall.precision)}, {"recall", value(m.overall.recall)}};
    }
    return out.dump();
}

void install_routes(httplib::Server& server) {
    server.Get("/api/v1/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"status":"ok"})", "application/json");
    });
    server.Post("/api/v1/analyze", [](const httplib::Request& req, httplib::Response& res) {
        AnalysisRequest request;
        try {
            request = request_from_json(req.body);
        } catch (const std::exception& e) {
            error_response(res, 400, e.what());
            return;
        }
        try {
            res.set_content(response_json(analyze(request)), "application/json");
        } catch (const Error& e) {
            error_response(res, e.kind() == ErrorKind::input ? 400 : 422, e.what());
        } catch (const std::exception& e) {
            error_response(res, 500, e.what());
        }
    });
}

} // namespace dfdx
