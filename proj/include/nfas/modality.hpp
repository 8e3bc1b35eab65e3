#pragma once

#include <optional>
#include <string_view>

namespace nfas {

enum class Modality { Vision, Audio, Language };

[[nodiscard]] constexpr std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::Vision: return "vision";
    case Modality::Audio: return "audio";
    case Modality::Language: return "language";
  }
  return "?";
}

[[nodiscard]] constexpr std::optional<Modality> parse_modality(std::string_view s) {
  if (s == "vision") return Modality::Vision;
  if (s == "audio") return Modality::Audio;
  if (s == "language") return Modality::Language;
  return std::nullopt;
}

}  // namespace nfas
