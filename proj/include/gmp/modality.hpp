#pragma once

#include <array>
#include <string_view>

#include "gmp/errors.hpp"

namespace gmp {

enum class Modality { Video = 0, Audio = 1 };

inline constexpr std::array<Modality, 2> kModalities{Modality::Video, Modality::Audio};

constexpr Modality other(Modality m) noexcept {
  return m == Modality::Video ? Modality::Audio : Modality::Video;
}

constexpr std::string_view short_name(Modality m) noexcept {
  return m == Modality::Video ? "v" : "a";
}

inline Modality parse_modality(std::string_view name) {
  if (name == "v" || name == "video") return Modality::Video;
  if (name == "a" || name == "audio") return Modality::Audio;
  throw LookupError("unknown modality '" + std::string(name) + "'");
}

// Pair of values indexed by modality.
template <typename T>
struct PerModality {
  T v{};
  T a{};

  constexpr T& operator[](Modality m) noexcept { return m == Modality::Video ? v : a; }
  constexpr const T& operator[](Modality m) const noexcept { return m == Modality::Video ? v : a; }

  friend bool operator==(const PerModality&, const PerModality&) = default;
};

}  // namespace gmp
