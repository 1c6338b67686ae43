// Command line entry point: batch analysis and the HTTP service.

#include "dfdx/analysis.hpp"
#include "dfdx/service.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <iostream>

namespace {

int run_analysis(const dfdx::AnalysisRequest& request, bool verbose) {
    try {
        auto result = dfdx::analyze(request);
        std::cout << dfdx::summary(result, verbose);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "dfdx: " << e.what() << "\n";
        return 1;
    }
}

int serve(const std::string& host, int port) {
    httplib::Server server;
    dfdx::install_routes(server);
    std::cerr << "listening on " << host << ":" << port << "\n";
    if (!server.listen(host, port)) {
        std::cerr << "dfdx: cannot bind " << host << ":" << port << "\n";
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Extracts security-annotated dataflow diagrams from microservice repositories"};
    app.require_subcommand(0, 1);

    dfdx::AnalysisRequest request;
    std::vector<std::string> formats{"json", "trace", "dot"};
    std::string ref;
    std::string images;
    std::string truth;
    bool verbose = false;
    auto* source = app.add_option_group("source");
    source->add_option("--path", request.path, "Local directory to analyze")->check(CLI::ExistingDirectory);
    source->add_option("--repo-url", request.repo_url, "Git repository to clone and analyze");
    source->require_option(0, 1);
    app.add_option("--ref", ref, "Branch, tag or commit to check out (with --repo-url)");
    app.add_option("--out", request.output_dir, "Output directory")->default_val(".");
    app.add_option("--format", formats, "Output formats: json, trace, dot, png")
        ->delimiter(',')
        ->check(CLI::IsMember(dfdx::known_formats()));
    app.add_option("--rules", request.rule_files, "Rule files layered over the defaults")->check(CLI::ExistingFile);
    app.add_option("--images", images, "Image catalog replacing the default")->check(CLI::ExistingFile);
    app.add_option("--eval-truth", truth, "Ground-truth DFD document for precision/recall")->check(CLI::ExistingFile);
    app.add_flag("--paper-parity", request.paper_parity,
                 "Keep hits inside comments and widen circuit-breaker scoping to the whole service");
    app.add_flag("-v,--verbose", verbose, "Print per-extractor statistics and unresolved evidence");

    std::string host = "127.0.0.1";
    int port = 8080;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP analysis service");
    serve_cmd->add_option("--host", host, "Bind address")->capture_default_str();
    serve_cmd->add_option("--port", port, "Port")->capture_default_str()->check(CLI::Range(1, 65535));

    CLI11_PARSE(app, argc, argv);

    if (*serve_cmd) return serve(host, port);
    if (request.path.empty() && request.repo_url.empty()) {
        std::cerr << "dfdx: one of --path or --repo-url is required\n" << app.help();
        return 2;
    }
    request.formats = {formats.begin(), formats.end()};
    if (!ref.empty()) request.ref = ref;
    if (!images.empty()) request.images_file = images;
    if (!truth.empty()) request.eval_truth = truth;
    return run_analysis(request, verbose);
}
