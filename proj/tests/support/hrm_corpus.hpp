#pragma once

// The vectors/hrm corpus: NAME.hex holds octets (whitespace separated, `#`
// comments), NAME.txt the expected fields as `key: value` lines.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "shesop/hrm_wire.hpp"

namespace corpus {

namespace fs = std::filesystem;
using Fields = std::map<std::string, std::string>;

inline std::vector<std::uint8_t> read_hex(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::uint8_t> out;
  std::string line;
  while (std::getline(in, line)) {
    line = line.substr(0, line.find('#'));
    std::istringstream words(line);
    std::string w;
    while (words >> w) out.push_back(static_cast<std::uint8_t>(std::stoul(w, nullptr, 16)));
  }
  return out;
}

inline Fields read_fields(const fs::path& path) {
  std::ifstream in(path);
  Fields out;
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string value = line.substr(colon + 1);
    value.erase(0, value.find_first_not_of(' '));
    out[line.substr(0, colon)] = value;
  }
  return out;
}

inline std::string contact_name(shesop::wire::SensorContact c) {
  using shesop::wire::SensorContact;
  switch (c) {
    case SensorContact::not_supported: return "not_supported";
    case SensorContact::supported_no_contact: return "supported_no_contact";
    case SensorContact::supported_contact: return "supported_contact";
  }
  return "?";
}

/// The decoder's view of the octets in the .txt vocabulary.
inline Fields decoded_fields(const std::vector<std::uint8_t>& bytes) {
  const auto got = shesop::wire::try_decode_packet(bytes);
  if (!got) return {{"error", std::string(shesop::to_string(*got.error))}};
  const auto& p = *got.packet;
  std::string rr;
  for (auto v : p.rr_raw) rr += (rr.empty() ? "" : " ") + std::to_string(v);
  return {
      {"heart_rate", std::to_string(p.heart_rate)},
      {"hr_16bit", p.flags.hr_16bit ? "true" : "false"},
      {"sensor_contact", contact_name(p.flags.sensor_contact)},
      {"energy_expended", p.energy_expended ? std::to_string(*p.energy_expended) : "none"},
      {"rr_raw", rr},
      {"reserved", std::to_string(p.flags.reserved)},
  };
}

inline std::vector<fs::path> hex_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".hex") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline fs::path fields_path(fs::path hex) { return hex.replace_extension(".txt"); }

}  // namespace corpus
