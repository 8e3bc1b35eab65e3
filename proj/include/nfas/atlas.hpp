#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nfas {

/// Yeo-7 large-scale functional networks.
enum class Network { Visual, Somatomotor, DorsalAttention, VentralAttention, Limbic, Control, Default };

inline constexpr std::size_t kNetworkCount = 7;
inline constexpr std::array<Network, kNetworkCount> kAllNetworks = {
    Network::Visual,           Network::Somatomotor, Network::DorsalAttention,
    Network::VentralAttention, Network::Limbic,      Network::Control,
    Network::Default};

[[nodiscard]] std::string_view network_name(Network n);

/// Accepts the canonical names above and the Schaefer-table abbreviations
/// (Vis, SomMot, DorsAttn, SalVentAttn, Limbic, Cont, Default).
[[nodiscard]] std::optional<Network> parse_network(std::string_view label);

enum class Hemisphere { Left, Right };

struct AtlasRow {
  int roi_index = 0;
  std::string roi_name;
  Network network = Network::Visual;
  Hemisphere hemisphere = Hemisphere::Left;
};

struct AtlasTable {
  std::vector<AtlasRow> rows;  // sorted by roi_index, contiguous from 0

  [[nodiscard]] std::size_t roi_count() const { return rows.size(); }
  [[nodiscard]] std::vector<Network> networks() const;
};

/// Parses `roi_index,roi_name,network,hemisphere` CSV. Throws ValidationError
/// on duplicate or gapped indices and on unknown network labels.
[[nodiscard]] AtlasTable parse_atlas(std::istream& in);
[[nodiscard]] AtlasTable load_atlas(const std::filesystem::path& path);
void write_atlas(const std::filesystem::path& path, const AtlasTable& atlas);

}  // namespace nfas
