#include "coinfer/profiles.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "coinfer/error.hpp"

namespace coinfer {

using nlohmann::json;

double DeviceProfile::max_payload_bits() const {
  double m = 0.0;
  for (int b = 0; b <= partition_count; ++b) m = std::max(m, payload_bits[b]);
  return m;
}

void DeviceProfile::validate() const {
  if (partition_count < 1) {
    throw ConfigError("profile '" + name + "': partition_count must be >= 1");
  }
  const std::size_t want = static_cast<std::size_t>(points());
  auto check_len = [&](const std::vector<double>& v, const char* field) {
    if (v.size() != want) {
      throw ConfigError("profile '" + name + "': " + field + " must have " +
                        std::to_string(want) + " entries, got " +
                        std::to_string(v.size()));
    }
    for (double x : v) {
      if (!(x >= 0.0)) {
        throw ConfigError("profile '" + name + "': " + field +
                          " entries must be non-negative and finite");
      }
    }
  };
  check_len(local_latency_s, "local_latency");
  check_len(compress_latency_s, "compress_latency");
  check_len(local_energy_j, "local_energy");
  check_len(compress_energy_j, "compress_energy");
  check_len(payload_bits, "payload_bits");

  // b = 0 offloads the raw input: no local execution or compression.
  if (local_latency_s[0] != 0.0)
    throw ConfigError("profile '" + name + "': local_latency[0] must be 0");
  if (compress_latency_s[0] != 0.0)
    throw ConfigError("profile '" + name + "': compress_latency[0] must be 0");
  if (local_energy_j[0] != 0.0)
    throw ConfigError("profile '" + name + "': local_energy[0] must be 0");
  if (compress_energy_j[0] != 0.0)
    throw ConfigError("profile '" + name + "': compress_energy[0] must be 0");
  // b = B+1 runs fully local: nothing is compressed.
  const int last = local_index();
  if (compress_latency_s[last] != 0.0) {
    throw ConfigError("profile '" + name +
                      "': compress_latency[B+1] must be 0");
  }
  if (compress_energy_j[last] != 0.0) {
    throw ConfigError("profile '" + name + "': compress_energy[B+1] must be 0");
  }
  for (int b = 2; b <= last; ++b) {
    if (local_latency_s[b] < local_latency_s[b - 1]) {
      throw ConfigError("profile '" + name +
                        "': local_latency must be non-decreasing at b=" +
                        std::to_string(b));
    }
  }
  for (int b = 0; b <= partition_count; ++b) {
    if (!(payload_bits[b] > 0.0)) {
      throw ConfigError("profile '" + name +
                        "': payload_bits must be positive at b=" +
                        std::to_string(b));
    }
  }
}

namespace {

std::vector<double> require_array(const json& j, const char* field) {
  if (!j.contains(field)) {
    throw ParseError(std::string("profile: missing field '") + field + "'");
  }
  const json& a = j.at(field);
  if (!a.is_array()) {
    throw ParseError(std::string("profile: field '") + field +
                     "' must be an array");
  }
  std::vector<double> out;
  out.reserve(a.size());
  for (const auto& v : a) {
    if (!v.is_number()) {
      throw ParseError(std::string("profile: field '") + field +
                       "' must contain numbers only");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

DeviceProfile parse_profile(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("profile: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("profile: document must be an object");

  DeviceProfile p;
  if (!j.contains("name") || !j.at("name").is_string()) {
    throw ParseError("profile: missing string field 'name'");
  }
  p.name = j.at("name").get<std::string>();
  if (!j.contains("units") || !j.at("units").is_object()) {
    throw ParseError("profile: missing object field 'units'");
  }
  if (!j.contains("partition_count") ||
      !j.at("partition_count").is_number_integer()) {
    throw ParseError("profile: missing integer field 'partition_count'");
  }
  p.partition_count = j.at("partition_count").get<int>();
  p.local_latency_s = require_array(j, "local_latency");
  p.compress_latency_s = require_array(j, "compress_latency");
  p.local_energy_j = require_array(j, "local_energy");
  p.compress_energy_j = require_array(j, "compress_energy");
  p.payload_bits = require_array(j, "payload_bits");
  p.validate();
  return p;
}

DeviceProfile load_profile(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError("profile: cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_profile(ss.str());
}

std::string serialize_profile(const DeviceProfile& p) {
  json j;
  j["name"] = p.name;
  j["units"] = {{"latency", "seconds"}, {"energy", "joules"},
                {"payload", "bits"}};
  j["partition_count"] = p.partition_count;
  j["local_latency"] = p.local_latency_s;
  j["compress_latency"] = p.compress_latency_s;
  j["local_energy"] = p.local_energy_j;
  j["compress_energy"] = p.compress_energy_j;
  j["payload_bits"] = p.payload_bits;
  return j.dump(2) + "\n";
}

}  // namespace coinfer
