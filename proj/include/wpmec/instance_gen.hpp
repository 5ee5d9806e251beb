#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "wpmec/network_model.hpp"
#include "wpmec/util.hpp"

namespace wpmec {

// Instance generator configuration. Keys mirror the DeviceParams/HapParams
// field names; see configs/*.cfg for the on-disk format (key = value lines,
// '#' comments).
struct InstanceConfig {
  int n_devices = 6;
  double mean_distance = 3.0;    // m; per-device distance ~ U[d-spread, d+spread]
  double distance_spread = 1.0;
  double weight_min = 1.0;       // weight ~ U[min, max] (equal => fixed)
  double weight_max = 1.0;
  double cpu_speed_min = 1.1e7;  // cycles/s, per-device uniform draw
  double cpu_speed_max = 1.5e8;
  double cycles_per_bit = 100.0;
  double energy_coeff = 1e-26;
  double tx_power = 3e-4;        // device uplink power, W
  double battery_cap = 1e-5;     // J
  double min_data_bits = 4000.0;
  bool fading = true;            // Rayleigh (exponential unit-mean factor)
  HapParams hap;                 // paper Section-V defaults

  bool draws_weights() const { return weight_max > weight_min; }
};

// Builds one frame's instance. All random draws depend only on (cfg-shape,
// seed) streams, never on the swept parameter values, so grid sweeps reuse
// the same fading/offsets/cpu/weight draws per seed (common random numbers).
inline NetworkInstance make_instance(const InstanceConfig& cfg,
                                     std::uint64_t seed) {
  Rng geo(mix_seed(seed, 1));
  Rng cpu(mix_seed(seed, 2));
  Rng wgt(mix_seed(seed, 3));
  std::vector<DeviceParams> devices;
  devices.reserve(cfg.n_devices);
  for (int n = 0; n < cfg.n_devices; ++n) {
    DeviceParams d;
    d.index = n;
    double offset = geo.uniform(-cfg.distance_spread, cfg.distance_spread);
    d.distance = std::max(cfg.mean_distance + offset, 0.5);
    d.cpu_speed = cpu.uniform(cfg.cpu_speed_min, cfg.cpu_speed_max);
    d.weight = cfg.draws_weights() ? wgt.uniform(cfg.weight_min, cfg.weight_max)
                                   : cfg.weight_min;
    d.cycles_per_bit = cfg.cycles_per_bit;
    d.energy_coeff = cfg.energy_coeff;
    d.tx_power = cfg.tx_power;
    d.battery_cap = cfg.battery_cap;
    devices.push_back(d);
  }
  ChannelRealization ch = sample_channels(devices, cfg.hap, seed, cfg.fading);
  return NetworkInstance(std::move(devices), cfg.hap, std::move(ch),
                         cfg.min_data_bits);
}

// ---- key = value config text ----

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = val;
  }
  return kv;
}

inline KeyValues parse_key_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  return parse_key_values(in);
}

inline void apply_instance_config(const KeyValues& kv, InstanceConfig& cfg) {
  auto num = [&](const char* key, double& out) {
    auto it = kv.find(key);
    if (it != kv.end()) out = std::stod(it->second);
  };
  auto it = kv.find("n_devices");
  if (it != kv.end()) cfg.n_devices = std::stoi(it->second);
  num("mean_distance", cfg.mean_distance);
  num("distance_spread", cfg.distance_spread);
  num("weight_min", cfg.weight_min);
  num("weight_max", cfg.weight_max);
  num("cpu_speed_min", cfg.cpu_speed_min);
  num("cpu_speed_max", cfg.cpu_speed_max);
  num("cycles_per_bit", cfg.cycles_per_bit);
  num("energy_coeff", cfg.energy_coeff);
  num("tx_power", cfg.tx_power);
  num("battery_cap", cfg.battery_cap);
  num("min_data_bits", cfg.min_data_bits);
  it = kv.find("fading");
  if (it != kv.end()) cfg.fading = (it->second != "none" && it->second != "0");
  num("hap_tx_power", cfg.hap.tx_power);
  num("hap_cpu_speed", cfg.hap.cpu_speed);
  num("bandwidth", cfg.hap.bandwidth);
  num("noise_power", cfg.hap.noise_power);
  num("eh_efficiency", cfg.hap.eh_efficiency);
  num("frame_length", cfg.hap.frame_length);
  num("antenna_gain", cfg.hap.antenna_gain);
  num("carrier_freq", cfg.hap.carrier_freq);
  num("path_loss_exp", cfg.hap.path_loss_exp);
}

// Flat CSV of a channel realization: device_id, mean_gain, fading_factor, gain.
inline void write_channels_csv(const NetworkInstance& inst, std::ostream& out) {
  out << "device_id,mean_gain,fading_factor,gain\n";
  for (int n = 0; n < inst.size(); ++n) {
    double mean = mean_channel_gain(inst.hap(), inst.device(n).distance);
    double g = inst.gain(n);
    out << n << ',' << format_double(mean) << ',' << format_double(g / mean)
        << ',' << format_double(g) << '\n';
  }
}

}  // namespace wpmec
