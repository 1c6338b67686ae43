#include "dfdx/extractors.hpp"

#include "dfdx/error.hpp"
#include "util.hpp"

#include <algorithm>
#include <charconv>

namespace dfdx {

const char* to_string(FeatureKind kind) noexcept {
    switch (kind) {
    case FeatureKind::ssl_enabled: return "ssl_enabled";
    case FeatureKind::endpoint_declared: return "endpoint_declared";
    case FeatureKind::port: return "port";
    case FeatureKind::message_exchange: return "message_exchange";
    case FeatureKind::message_queue: return "message_queue";
    case FeatureKind::discovery_registration: return "discovery_registration";
    case FeatureKind::config_client: return "config_client";
    case FeatureKind::credentials_found: return "credentials_found";
    }
    return "?";
}

std::string Feature::get(const std::string& key) const {
    auto it = payload.find(key);
    return it == payload.end() ? std::string{} : it->second;
}

std::vector<const Feature*> FeatureStore::of(FeatureKind kind) const {
    std::vector<const Feature*> out;
    for (const auto& f : features_) {
        if (f.kind == kind) out.push_back(&f);
    }
    return out;
}

std::vector<const Feature*> FeatureStore::of(FeatureKind kind, std::string_view owner) const {
    std::vector<const Feature*> out;
    for (const auto& f : features_) {
        if (f.kind == kind && f.owner == owner) out.push_back(&f);
    }
    return out;
}

bool is_truthy(std::string_view value) {
    auto v = util::lower(util::trim(value));
    return v == "true" || v == "yes" || v == "on" || v == "1";
}

std::optional<Url> parse_url(std::string_view text) {
    auto s = util::trim(text);
    while (!s.empty() && (s.front() == '"' || s.front() == '\'')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == '"' || s.back() == '\'')) s.remove_suffix(1);
    for (std::string_view prefix : {"optional:", "configserver:", "jdbc:"}) {
        if (s.starts_with(prefix)) s.remove_prefix(prefix.size());
    }
    if (s.empty()) return std::nullopt;
    Url url;
    auto scheme_end = s.find("://");
    if (scheme_end != std::string_view::npos) {
        url.scheme = util::lower(s.substr(0, scheme_end));
        s.remove_prefix(scheme_end + 3);
    } else if (auto at = s.find("@"); at != std::string_view::npos && s.find(':') < at) {
        // oracle:thin:@host:1521:db
        url.scheme = util::lower(s.substr(0, s.find(':')));
        s.remove_prefix(at + 1);
    }
    auto authority_end = s.find_first_of("/?#");
    auto authority = s.substr(0, authority_end);
    url.path = authority_end == std::string_view::npos ? std::string{} : std::string(s.substr(authority_end));
    if (auto comma = authority.find(','); comma != std::string_view::npos) authority = authority.substr(0, comma);
    if (auto at = authority.rfind('@'); at != std::string_view::npos) {
        auto userinfo = authority.substr(0, at);
        authority.remove_prefix(at + 1);
        auto colon = userinfo.find(':');
        url.user = std::string(userinfo.substr(0, colon));
        if (colon != std::string_view::npos) url.password = std::string(userinfo.substr(colon + 1));
    }
    auto colon = authority.find(':');
    url.host = util::lower(authority.substr(0, colon));
    if (colon != std::string_view::npos) {
        auto port_text = authority.substr(colon + 1);
        if (auto c2 = port_text.find(':'); c2 != std::string_view::npos) port_text = port_text.substr(0, c2);
        int port = 0;
        auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
        if (ec == std::errc{} && ptr == port_text.data() + port_text.size()) url.port = port;
    }
    if (url.host.empty()) return std::nullopt;
    bool valid = std::all_of(url.host.begin(), url.host.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '-' || c == '.' || c == '_';
    });
    if (!valid) return std::nullopt;
    return url;
}

namespace {

bool is_own_config(const SourceFile& file, std::string_view module_dir) {
    auto stem = file.stem();
    if (!stem.starts_with("application") && !stem.starts_with("bootstrap")) return false;
    auto parent = util::parent_dir(file.path);
    auto parent_name = util::last_segment(parent);
    return parent == module_dir || parent_name == "resources" || parent_name == "config";
}

// Profile suffix of "application-dev" -> "dev".
std::optional<std::string> file_profile(std::string_view stem) {
    for (std::string_view base : {"application-", "bootstrap-"}) {
        if (stem.starts_with(base) && stem.size() > base.size()) return std::string(stem.substr(base.size()));
    }
    return std::nullopt;
}

void absorb(PropertyMap& into, const PropertyFile& file, std::optional<std::string> profile) {
    PropertyFile copy = file;
    if (profile) {
        for (auto& doc : copy.documents) {
            if (!doc.profile) doc.profile = profile;
        }
    }
    const auto merged = copy.merged();
    for (const auto& [key, value] : merged.entries()) into.insert(key, value);
}

std::string canonical_or_empty(std::string_view raw) {
    try {
        return normalize_name(raw);
    } catch (const Error&) {
        return {};
    }
}

void merge_decl(ServiceDecl& into, const ServiceDecl& from) {
    if (!into.image && from.image) {
        into.image = from.image;
        into.image_trace = from.image_trace;
    }
    if (!into.build_context && from.build_context) into.build_context = from.build_context;
    for (std::size_t i = 0; i < from.ports.size(); ++i) {
        if (std::find(into.ports.begin(), into.ports.end(), from.ports[i]) == into.ports.end()) {
            into.ports.push_back(from.ports[i]);
            into.port_traces.push_back(from.port_traces[i]);
        }
    }
    for (const auto& d : from.depends_on) {
        if (std::find(into.depends_on.begin(), into.depends_on.end(), d) == into.depends_on.end()) {
            into.depends_on.push_back(d);
        }
    }
    for (const auto& [k, v] : from.environment) into.environment.emplace(k, v);
}

std::optional<std::string> config_host(const PropertyMap& props) {
    for (auto key : {"spring.cloud.config.uri", "spring.config.import"}) {
        auto value = props.get(key);
        if (!value) continue;
        if (std::string_view(key) == "spring.config.import" && value->find("configserver:") == std::string::npos) continue;
        if (auto url = parse_url(*value)) return url->host;
    }
    return std::nullopt;
}

} // namespace

Workspace Workspace::build(const FileIndex& index, const RuleSet& rules, const ImageCatalog& images,
                           AnalysisOptions options) {
    Workspace ws;
    ws.index_ = &index;
    ws.rules_ = &rules;
    ws.images_ = &images;
    ws.options_ = options;
    ws.warnings_ = index.warnings();

    std::map<std::string, PropertyFile> parsed;
    auto properties_of = [&](const SourceFile& file) -> const PropertyFile* {
        auto it = parsed.find(file.path);
        if (it != parsed.end()) return &it->second;
        try {
            return &parsed.emplace(file.path, parse_properties(file)).first->second;
        } catch (const Error& e) {
            ws.warnings_.push_back(e.what());
            parsed.emplace(file.path, PropertyFile{file.path, {}});
            return nullptr;
        }
    };

    // Compose declarations, merged across compose files by service key.
    std::map<std::string, ServiceDecl> compose;
    std::map<std::string, std::string> compose_context; // key -> build context relative to root
    for (const auto& file : index.files()) {
        if (file.language != LanguageClass::compose) continue;
        try {
            auto parsed_compose = parse_compose(file);
            for (auto& w : parsed_compose.warnings) ws.warnings_.push_back(std::move(w));
            for (auto& decl : parsed_compose.services) {
                if (decl.build_context && !compose_context.contains(decl.name)) {
                    compose_context[decl.name] = util::join_path(file.directory(), *decl.build_context);
                }
                auto [it, fresh] = compose.emplace(decl.name, decl);
                if (!fresh) merge_decl(it->second, decl);
            }
        } catch (const Error& e) {
            ws.warnings_.push_back(e.what());
        }
    }

    auto scan = parse_build(index);
    for (auto& e : scan.errors) ws.warnings_.push_back(std::move(e));

    auto module_owner = [&](std::string_view path) -> const BuildModule* {
        const BuildModule* best = nullptr;
        for (const auto& m : scan.modules) {
            if (util::path_in_dir(path, m.directory) && (best == nullptr || m.directory.size() > best->directory.size())) {
                best = &m;
            }
        }
        return best;
    };

    const auto& entry_keywords = rules.keyword_list("application_entry");
    std::set<std::string> matched_compose;
    std::vector<ServiceUnit> units;
    std::set<std::string> own_config_paths;

    for (const auto& module : scan.modules) {
        ServiceUnit unit;
        unit.directory = module.directory;
        std::vector<const SourceFile*> own;
        bool entry_point = false;
        for (const auto& file : index.files()) {
            if (module_owner(file.path) != &module) continue;
            if (file.language == LanguageClass::java) {
                unit.has_code = true;
                if (!entry_point) {
                    for (const auto& kw : entry_keywords) {
                        if (!find_in_file(file, Keyword::literal(kw), options.paper_parity).empty()) {
                            entry_point = true;
                            break;
                        }
                    }
                }
            }
            if ((file.language == LanguageClass::yaml || file.language == LanguageClass::properties) &&
                is_own_config(file, module.directory)) {
                own.push_back(&file);
            }
        }
        std::stable_sort(own.begin(), own.end(), [](const SourceFile* a, const SourceFile* b) {
            auto rank = [](const SourceFile* f) {
                auto stem = f->stem();
                int r = stem == "bootstrap" ? 0 : stem == "application" ? 1 : 2;
                return std::make_pair(r, f->path);
            };
            return rank(a) < rank(b);
        });
        for (const auto* file : own) {
            own_config_paths.insert(file->path);
            if (const auto* pf = properties_of(*file)) {
                absorb(unit.properties, *pf, file_profile(file->stem()));
                unit.config_files.push_back(file->path);
            }
        }

        std::optional<std::string> spring_name;
        if (const auto* pv = unit.properties.find("spring.application.name")) {
            std::string value = pv->value;
            if (is_placeholder(value)) {
                auto env = resolve_env_var(index, value, pv->trace.file);
                value = env ? env->value : std::string{};
            }
            if (!canonical_or_empty(value).empty()) {
                spring_name = value;
                TraceEntry t = pv->trace;
                t.rank = 0;
                unit.name_traces.push_back(t);
            }
        }

        // Compose entry built from this module, or named like it.
        std::optional<std::string> compose_key;
        for (const auto& [key, context] : compose_context) {
            if (context == module.directory && !matched_compose.contains(key)) {
                compose_key = key;
                break;
            }
        }
        if (!compose_key) {
            for (const auto& [key, decl] : compose) {
                if (matched_compose.contains(key)) continue;
                auto c = canonical_or_empty(key);
                if (c == canonical_or_empty(module.name) || (spring_name && c == canonical_or_empty(*spring_name))) {
                    compose_key = key;
                    break;
                }
            }
        }
        if (compose_key) {
            matched_compose.insert(*compose_key);
            unit.compose = compose.at(*compose_key);
            TraceEntry t = unit.compose->source;
            t.rank = 1;
            unit.name_traces.push_back(t);
        }
        if (!spring_name && !compose_key && !entry_point) {
            ws.warnings_.push_back("module '" + module.name + "' skipped: no service evidence");
            continue;
        }
        TraceEntry build_trace = module.trace;
        build_trace.rank = 2;
        unit.name_traces.push_back(build_trace);

        unit.display_name = spring_name ? *spring_name : compose_key ? *compose_key : module.name;
        unit.name = canonical_or_empty(unit.display_name);
        if (unit.name.empty()) continue;
        for (const auto& alias : {unit.display_name, module.name, util::last_segment(module.directory)}) {
            if (auto c = canonical_or_empty(alias); !c.empty()) unit.aliases.insert(c);
        }
        if (compose_key) unit.aliases.insert(canonical_or_empty(*compose_key));
        if (const auto* docker = index.find(util::in_dir(module.directory, "Dockerfile"))) {
            try {
                unit.dockerfile = parse_dockerfile(*docker);
            } catch (const Error& e) {
                ws.warnings_.push_back(e.what());
            }
        }
        if (unit.compose && unit.compose->image) unit.image_class = images.classify(*unit.compose->image);
        if (!unit.image_class && unit.dockerfile) unit.image_class = images.classify(unit.dockerfile->base_image);
        units.push_back(std::move(unit));
    }

    for (const auto& [key, decl] : compose) {
        if (matched_compose.contains(key)) continue;
        ServiceUnit unit;
        unit.display_name = key;
        unit.name = canonical_or_empty(key);
        if (unit.name.empty()) continue;
        unit.compose = decl;
        TraceEntry t = decl.source;
        t.rank = 1;
        unit.name_traces.push_back(t);
        unit.aliases.insert(unit.name);
        if (auto it = compose_context.find(key); it != compose_context.end()) {
            if (const auto* docker = index.find(util::in_dir(it->second, "Dockerfile"))) {
                try {
                    unit.dockerfile = parse_dockerfile(*docker);
                } catch (const Error& e) {
                    ws.warnings_.push_back(e.what());
                }
            }
        }
        if (decl.image) unit.image_class = images.classify(*decl.image);
        if (!unit.image_class && unit.dockerfile) unit.image_class = images.classify(unit.dockerfile->base_image);
        units.push_back(std::move(unit));
    }

    std::sort(units.begin(), units.end(), [](const ServiceUnit& a, const ServiceUnit& b) {
        return std::tie(a.name, a.directory) < std::tie(b.name, b.directory);
    });
    for (std::size_t i = 0; i < units.size(); ++i) {
        if (i > 0 && units[i].name == units[i - 1].name) {
            ws.warnings_.push_back("duplicate service name '" + units[i].name + "'; keeping the first declaration");
            continue;
        }
        ws.units_.push_back(std::move(units[i]));
    }
    for (const auto& unit : ws.units_) {
        for (const auto& alias : unit.aliases) {
            auto [it, fresh] = ws.aliases_.emplace(alias, unit.name);
            if (!fresh && it->second != unit.name) {
                ws.warnings_.push_back("host alias '" + alias + "' is ambiguous; using '" + it->second + "'");
            }
        }
    }
    for (const auto& unit : ws.units_) ws.aliases_.insert_or_assign(unit.name, unit.name);

    // Configuration files outside the services' own config locations: attributed by
    // file stem, or shared with every config client when named application/bootstrap.
    std::vector<const SourceFile*> shared;
    for (const auto& file : index.files()) {
        if (file.language != LanguageClass::yaml && file.language != LanguageClass::properties) continue;
        if (own_config_paths.contains(file.path)) continue;
        std::string stem(file.stem());
        if (stem == "application" || stem == "bootstrap") {
            shared.push_back(&file);
            continue;
        }
        std::optional<std::string> target;
        std::optional<std::string> profile;
        for (std::string candidate = stem; !candidate.empty();) {
            if (auto t = ws.resolve_host(candidate)) {
                target = t;
                if (candidate.size() < stem.size()) profile = stem.substr(candidate.size() + 1);
                break;
            }
            auto dash = candidate.rfind('-');
            if (dash == std::string::npos) break;
            candidate.resize(dash);
        }
        if (!target) continue;
        auto unit = std::find_if(ws.units_.begin(), ws.units_.end(),
                                 [&](const ServiceUnit& u) { return u.name == *target; });
        if (const auto* pf = properties_of(file)) {
            absorb(unit->properties, *pf, profile);
            unit->config_files.push_back(file.path);
        }
    }
    for (const auto* file : shared) {
        const ServiceUnit* holder = ws.owner_of(file->path);
        const auto* pf = properties_of(*file);
        if (pf == nullptr) continue;
        for (auto& unit : ws.units_) {
            auto host = config_host(unit.properties);
            if (!host) continue;
            auto server = ws.resolve_host(*host);
            if (holder != nullptr && server != holder->name) continue;
            if (holder != nullptr && holder->name == unit.name) continue;
            absorb(unit.properties, *pf, std::nullopt);
            unit.config_files.push_back(file->path);
        }
    }
    return ws;
}

const ServiceUnit* Workspace::unit(std::string_view canonical) const {
    for (const auto& u : units_) {
        if (u.name == canonical) return &u;
    }
    return nullptr;
}

const ServiceUnit* Workspace::owner_of(std::string_view path) const {
    const ServiceUnit* best = nullptr;
    for (const auto& u : units_) {
        if (!u.directory || !util::path_in_dir(path, *u.directory)) continue;
        if (best == nullptr || u.directory->size() > best->directory->size()) best = &u;
    }
    return best;
}

std::optional<std::string> Workspace::resolve_host(std::string_view host) const {
    auto h = util::trim(host);
    if (auto colon = h.find(':'); colon != std::string_view::npos) h = h.substr(0, colon);
    if (h.empty()) return std::nullopt;
    auto canonical = canonical_or_empty(h);
    auto it = aliases_.find(canonical);
    if (it == aliases_.end()) return std::nullopt;
    return it->second;
}

SearchOptions Workspace::search_options(std::optional<std::set<LanguageClass>> languages) const {
    SearchOptions opts;
    opts.languages = std::move(languages);
    opts.include_comments = options_.paper_parity;
    return opts;
}

std::vector<Match> Workspace::search(std::string_view keyword, std::optional<std::set<LanguageClass>> languages) const {
    return find_keyword(*index_, Keyword::literal(std::string(keyword)), search_options(std::move(languages)));
}

} // namespace dfdx
