#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace bitcascade {

/// Entity categories, in the canonical order used for every class-indexed
/// vector, confusion matrix and enrichment block.
enum class EntityClass : std::uint8_t {
    Exchange = 0,
    Gambling,
    Marketplace,
    MiningPool,
    Mixer,
    Service,
};

inline constexpr std::size_t kNumClasses = 6;

inline constexpr std::array<EntityClass, kNumClasses> kAllClasses = {
    EntityClass::Exchange, EntityClass::Gambling, EntityClass::Marketplace,
    EntityClass::MiningPool, EntityClass::Mixer, EntityClass::Service,
};

inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "Exchange", "Gambling", "Marketplace", "MiningPool", "Mixer", "Service",
};

constexpr std::size_t class_index(EntityClass c) { return static_cast<std::size_t>(c); }

constexpr EntityClass class_from_index(std::size_t i) { return static_cast<EntityClass>(i); }

constexpr std::string_view class_name(EntityClass c) { return kClassNames[class_index(c)]; }

// Exact match only; abbreviations are rejected.
inline std::optional<EntityClass> parse_class(std::string_view name) {
    for (std::size_t i = 0; i < kNumClasses; ++i) {
        if (kClassNames[i] == name) return class_from_index(i);
    }
    return std::nullopt;
}

}  // namespace bitcascade
