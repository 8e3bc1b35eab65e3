#include "nfas/atlas.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "nfas/error.hpp"
#include "nfas/text.hpp"

namespace nfas {
namespace {

struct NetworkAlias {
  std::string_view label;
  Network network;
};

constexpr NetworkAlias kAliases[] = {
    {"Visual", Network::Visual},
    {"Vis", Network::Visual},
    {"Somatomotor", Network::Somatomotor},
    {"SomMot", Network::Somatomotor},
    {"DorsalAttention", Network::DorsalAttention},
    {"DorsAttn", Network::DorsalAttention},
    {"VentralAttention", Network::VentralAttention},
    {"SalVentAttn", Network::VentralAttention},
    {"Limbic", Network::Limbic},
    {"Control", Network::Control},
    {"Cont", Network::Control},
    {"Default", Network::Default},
};

std::string valid_network_list() {
  std::string s;
  for (auto n : kAllNetworks) {
    if (!s.empty()) s += ", ";
    s += network_name(n);
  }
  return s;
}

}  // namespace

std::string_view network_name(Network n) {
  switch (n) {
    case Network::Visual: return "Visual";
    case Network::Somatomotor: return "Somatomotor";
    case Network::DorsalAttention: return "DorsalAttention";
    case Network::VentralAttention: return "VentralAttention";
    case Network::Limbic: return "Limbic";
    case Network::Control: return "Control";
    case Network::Default: return "Default";
  }
  return "?";
}

std::optional<Network> parse_network(std::string_view label) {
  for (const auto& a : kAliases) {
    if (a.label == label) return a.network;
  }
  return std::nullopt;
}

std::vector<Network> AtlasTable::networks() const {
  std::vector<Network> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.network);
  return out;
}

AtlasTable parse_atlas(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      split_csv_line(line) != std::vector<std::string>{"roi_index", "roi_name", "network", "hemisphere"}) {
    throw ValidationError("atlas header must be roi_index,roi_name,network,hemisphere");
  }

  AtlasTable atlas;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    const std::string where = "atlas line " + std::to_string(line_no);
    if (f.size() != 4) throw ValidationError(where + ": expected 4 fields");

    AtlasRow row;
    auto [ptr, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), row.roi_index);
    if (ec != std::errc{} || ptr != f[0].data() + f[0].size() || row.roi_index < 0) {
      throw ValidationError(where + ": invalid roi_index '" + f[0] + "'");
    }
    row.roi_name = f[1];
    const auto net = parse_network(f[2]);
    if (!net) {
      throw ValidationError(where + ": unknown network '" + f[2] + "'; valid labels are " +
                            valid_network_list());
    }
    row.network = *net;
    if (f[3] == "L") {
      row.hemisphere = Hemisphere::Left;
    } else if (f[3] == "R") {
      row.hemisphere = Hemisphere::Right;
    } else {
      throw ValidationError(where + ": hemisphere must be L or R, got '" + f[3] + "'");
    }
    atlas.rows.push_back(std::move(row));
  }

  if (atlas.rows.empty()) throw ValidationError("atlas has no rows");
  std::sort(atlas.rows.begin(), atlas.rows.end(),
            [](const AtlasRow& a, const AtlasRow& b) { return a.roi_index < b.roi_index; });
  for (std::size_t i = 0; i < atlas.rows.size(); ++i) {
    const int idx = atlas.rows[i].roi_index;
    if (idx != static_cast<int>(i)) {
      const bool duplicate = i > 0 && atlas.rows[i - 1].roi_index == idx;
      throw ValidationError(std::string("atlas roi_index values must be contiguous from 0: ") +
                            (duplicate ? "duplicate index " : "missing index ") +
                            std::to_string(duplicate ? idx : static_cast<int>(i)));
    }
  }
  return atlas;
}

AtlasTable load_atlas(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open atlas " + path.string());
  try {
    return parse_atlas(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_atlas(const std::filesystem::path& path, const AtlasTable& atlas) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "roi_index,roi_name,network,hemisphere\n";
  for (const auto& r : atlas.rows) {
    out << r.roi_index << ',' << r.roi_name << ',' << network_name(r.network) << ','
        << (r.hemisphere == Hemisphere::Left ? 'L' : 'R') << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace nfas
