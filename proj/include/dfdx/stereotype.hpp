#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace dfdx {

/// Kind of model item a stereotype may be attached to.
enum class Applicability : std::uint8_t {
    node = 1,
    flow = 2,
    external_entity = 4,
};

struct StereotypeInfo {
    std::string_view name;
    std::uint8_t applies; // bitmask of Applicability
    bool security;
};

/// The closed stereotype catalog (services, information flows, external entities).
std::span<const StereotypeInfo> stereotype_catalog() noexcept;

/// A catalog-checked stereotype name. Construction from an unknown name throws.
class Stereotype {
public:
    explicit Stereotype(std::string_view name);

    std::string_view name() const noexcept { return info_->name; }
    bool applies_to(Applicability kind) const noexcept {
        return (info_->applies & static_cast<std::uint8_t>(kind)) != 0;
    }
    bool is_security() const noexcept { return info_->security; }

    friend bool operator==(const Stereotype& a, const Stereotype& b) noexcept {
        return a.info_ == b.info_;
    }
    friend std::strong_ordering operator<=>(const Stereotype& a, const Stereotype& b) noexcept {
        return a.name().compare(b.name()) <=> 0;
    }

    static bool is_known(std::string_view name) noexcept;

private:
    const StereotypeInfo* info_;
};

} // namespace dfdx
