#pragma once

#include "dfdx/output.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dfdx {

struct GroupCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    GroupCounts& operator+=(const GroupCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    friend GroupCounts operator+(GroupCounts a, const GroupCounts& b) { return a += b; }
    friend bool operator==(const GroupCounts&, const GroupCounts&) = default;
};

/// Item counts of one application. `security_annotations` is the subset of
/// `annotations` made of security stereotypes.
struct EvalCounts {
    GroupCounts services; // services and databases
    GroupCounts external_entities;
    GroupCounts information_flows;
    GroupCounts annotations;
    GroupCounts security_annotations;

    GroupCounts core() const { return services + external_entities + information_flows; }
    GroupCounts overall() const { return core() + annotations; }

    EvalCounts& operator+=(const EvalCounts& o);
    friend bool operator==(const EvalCounts&, const EvalCounts&) = default;
};

/// Precision and recall; nullopt when the denominator is zero.
struct Score {
    std::optional<double> precision;
    std::optional<double> recall;

    static Score of(const GroupCounts& c);
};

struct MetricsRow {
    Score services;
    Score external_entities;
    Score information_flows;
    Score annotations;
    Score overall;
    Score core;
    Score security;
};

MetricsRow metrics_of(const EvalCounts& counts);

struct Metrics {
    std::vector<MetricsRow> per_app;
    EvalCounts total;
    MetricsRow micro;        // from summed counts
    MetricsRow per_app_mean; // mean of the defined per-app values
};

/// Nodes match by (group, canonical name), flows by the ordered (sender, receiver)
/// pair, stereotypes by (owner, name) and tagged values by (owner, key, trimmed value).
/// Throws Error(input) on duplicate node or flow identities.
EvalCounts match_items(const DfdDocument& extracted, const DfdDocument& truth);

/// Throws Error(input) on an empty list.
Metrics compute_metrics(const std::vector<EvalCounts>& counts);

/// Reads ground truth in the output document format, or in the dataset layout
/// {"services": [...], "external_entities": [...], "information_flows": [...]}
/// where tagged values may be given as [key, value] pairs.
DfdDocument parse_ground_truth(std::string_view text);

std::string metrics_to_json(const std::vector<std::string>& apps, const std::vector<EvalCounts>& counts,
                            const Metrics& metrics);

} // namespace dfdx
