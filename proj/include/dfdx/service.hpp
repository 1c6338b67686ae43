#pragma once

#include "dfdx/analysis.hpp"

#include <string>
#include <string_view>

namespace httplib {
class Server;
}

namespace dfdx {

/// Decodes a POST /api/v1/analyze body:
///   {"path" | "repo_url", "ref"?, "formats"?, "rules"?, "images"?, "eval_truth"?, "paper_parity"?}
/// Throws Error(input) on malformed bodies. Nothing is written to disk for service requests.
AnalysisRequest request_from_json(std::string_view body);

/// Response body: app, commit, extraction_seconds, dfd, traceability, report and metrics.
std::string response_json(const AnalysisResult& result);

/// GET /api/v1/health and POST /api/v1/analyze. Each request runs an independent analysis.
void install_routes(httplib::Server& server);

} // namespace dfdx
