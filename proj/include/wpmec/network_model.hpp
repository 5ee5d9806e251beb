#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "wpmec/rng.hpp"

namespace wpmec {

// Per-device parameters. Units: weight dimensionless, cpu_speed cycles/s,
// cycles_per_bit cycles/bit, energy_coeff J*s^2/cycle^3, tx_power W,
// battery_cap J, distance m.
struct DeviceParams {
  int index = 0;
  double weight = 1.0;
  double cpu_speed = 0.0;
  double cycles_per_bit = 0.0;
  double energy_coeff = 0.0;
  double tx_power = 0.0;
  double battery_cap = 0.0;
  double distance = 0.0;

  void check() const {
    auto pos = [this](double v, const char* what) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument("device " + std::to_string(index) +
                                    ": non-positive " + what);
    };
    pos(weight, "weight");
    pos(cpu_speed, "cpu_speed");
    pos(cycles_per_bit, "cycles_per_bit");
    pos(energy_coeff, "energy_coeff");
    pos(tx_power, "tx_power");
    pos(battery_cap, "battery_cap");
    pos(distance, "distance");
  }

  // Local-compute energy per bit: k * f^2 * phi.
  double local_energy_per_bit() const {
    return energy_coeff * cpu_speed * cpu_speed * cycles_per_bit;
  }
};

// Hybrid access point parameters. bandwidth is per sub-channel (Hz); the
// frame has length frame_length seconds.
struct HapParams {
  double tx_power = 3.0;
  double cpu_speed = 1e9;
  double bandwidth = 2e6;
  double noise_power = 1e-10;
  double eh_efficiency = 0.51;
  double frame_length = 1.0;
  double antenna_gain = 4.11;
  double carrier_freq = 915e6;
  double path_loss_exp = 2.8;

  void check() const {
    if (!(eh_efficiency > 0.0 && eh_efficiency < 1.0))
      throw std::invalid_argument("eh_efficiency must lie in (0,1)");
    auto pos = [](double v, const char* what) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument(std::string("non-positive ") + what);
    };
    pos(tx_power, "tx_power");
    pos(cpu_speed, "cpu_speed");
    pos(bandwidth, "bandwidth");
    pos(noise_power, "noise_power");
    pos(frame_length, "frame_length");
    pos(antenna_gain, "antenna_gain");
    pos(carrier_freq, "carrier_freq");
    if (!(path_loss_exp >= 0.0))
      throw std::invalid_argument("negative path_loss_exp");
  }
};

// Free-space path loss mean gain: A_d * (c / (4 pi f_c d))^d_e.
inline double mean_channel_gain(const HapParams& hap, double distance) {
  if (!(distance > 0.0))
    throw std::domain_error("mean_channel_gain: distance must be positive");
  const double c = 3e8;
  double ratio = c / (4.0 * std::numbers::pi * hap.carrier_freq * distance);
  return hap.antenna_gain * std::pow(ratio, hap.path_loss_exp);
}

// One frame's realized channel gains.
struct ChannelRealization {
  std::vector<double> gains;
  std::uint64_t seed = 0;
};

// Rayleigh fading: gain = mean gain * Exp(1) factor. fading=false freezes the
// factor at 1 (deterministic degenerate channel).
inline ChannelRealization sample_channels(const std::vector<DeviceParams>& devices,
                                          const HapParams& hap,
                                          std::uint64_t seed, bool fading = true) {
  ChannelRealization ch;
  ch.seed = seed;
  ch.gains.reserve(devices.size());
  Rng rng(mix_seed(seed, 0xC4A11));
  for (const auto& d : devices) {
    double factor = fading ? rng.exponential() : 1.0;
    ch.gains.push_back(mean_channel_gain(hap, d.distance) * factor);
  }
  return ch;
}

// Harvested energy over one frame, Eq.-(1)-style linear model with a battery
// cap branch.
inline double harvested_energy(const DeviceParams& dev, const HapParams& hap,
                               double gain, double alpha1) {
  if (!(alpha1 > 0.0 && alpha1 <= 1.0))
    throw std::domain_error("harvested_energy: alpha1 must lie in (0,1]");
  double e = hap.eh_efficiency * hap.tx_power * gain * alpha1 * hap.frame_length;
  return std::min(e, dev.battery_cap);
}

class NetworkInstance {
 public:
  NetworkInstance(std::vector<DeviceParams> devices, HapParams hap,
                  ChannelRealization channels, double min_data_bits)
      : devices_(std::move(devices)),
        hap_(hap),
        channels_(std::move(channels)),
        min_data_bits_(min_data_bits) {
    if (devices_.empty()) throw std::invalid_argument("instance: no devices");
    if (channels_.gains.size() != devices_.size())
      throw std::invalid_argument("instance: channel count mismatch");
    if (!(min_data_bits_ >= 0.0))
      throw std::invalid_argument("instance: negative min_data_bits");
    hap_.check();
    for (std::size_t n = 0; n < devices_.size(); ++n) {
      devices_[n].check();
      if (!(channels_.gains[n] > 0.0))
        throw std::invalid_argument("instance: non-positive channel gain");
      // Energy-constrained assumption k f^3 T > E^h (harvest upper bound at
      // alpha1 = 1). Violations are reported, not fatal: the LP stays valid,
      // only the local-time elimination argument weakens.
      const auto& d = devices_[n];
      double full_speed_energy = d.energy_coeff * d.cpu_speed * d.cpu_speed *
                                 d.cpu_speed * hap_.frame_length;
      double harvest_bound = std::min(
          hap_.eh_efficiency * hap_.tx_power * channels_.gains[n] * hap_.frame_length,
          d.battery_cap);
      if (!(full_speed_energy > harvest_bound))
        assumption_violations_.push_back(static_cast<int>(n));
    }
  }

  int size() const { return static_cast<int>(devices_.size()); }
  const std::vector<DeviceParams>& devices() const { return devices_; }
  const DeviceParams& device(int n) const { return devices_.at(n); }
  const HapParams& hap() const { return hap_; }
  const ChannelRealization& channels() const { return channels_; }
  double gain(int n) const { return channels_.gains.at(n); }
  double min_data_bits() const { return min_data_bits_; }

  // Devices where k f^3 T > E^h failed (usually empty).
  const std::vector<int>& assumption_violations() const {
    return assumption_violations_;
  }
  bool energy_constrained() const { return assumption_violations_.empty(); }

  // Device->HAP uplink rate, bits/s.
  double uplink_rate(int n) const {
    const auto& d = device(n);
    return hap_.bandwidth *
           std::log2(1.0 + d.tx_power * gain(n) / hap_.noise_power);
  }

  // HAP->device downlink rate (HAP transmit power), bits/s.
  double downlink_rate(int n) const {
    return hap_.bandwidth *
           std::log2(1.0 + hap_.tx_power * gain(n) / hap_.noise_power);
  }

  double harvest(int n, double alpha1) const {
    return harvested_energy(device(n), hap_, gain(n), alpha1);
  }

  // Offload energy per bit: p / R.
  double offload_energy_per_bit(int n) const {
    return device(n).tx_power / uplink_rate(n);
  }

 private:
  std::vector<DeviceParams> devices_;
  HapParams hap_;
  ChannelRealization channels_;
  double min_data_bits_;
  std::vector<int> assumption_violations_;
};

// psi = {m, o, p, q}: positional pairing, o[i] collaborates with p[i].
class CollaborationStrategy {
 public:
  CollaborationStrategy(std::vector<int> sds, std::vector<int> ads,
                        std::vector<int> ids, int n_devices)
      : sds_(std::move(sds)), ads_(std::move(ads)), ids_(std::move(ids)) {
    if (sds_.size() != ads_.size())
      throw std::invalid_argument("strategy: |o| != |p|");
    if (2 * sds_.size() > static_cast<std::size_t>(n_devices))
      throw std::invalid_argument("strategy: m exceeds floor(N/2)");
    if (sds_.size() + ads_.size() + ids_.size() !=
        static_cast<std::size_t>(n_devices))
      throw std::invalid_argument("strategy: device count mismatch");
    std::vector<char> seen(n_devices, 0);
    auto mark = [&](const std::vector<int>& v) {
      for (int d : v) {
        if (d < 0 || d >= n_devices)
          throw std::invalid_argument("strategy: device id out of range");
        if (seen[d]) throw std::invalid_argument("strategy: duplicate device");
        seen[d] = 1;
      }
    };
    mark(sds_);
    mark(ads_);
    mark(ids_);
  }

  static CollaborationStrategy all_independent(int n_devices) {
    std::vector<int> ids(n_devices);
    for (int i = 0; i < n_devices; ++i) ids[i] = i;
    return CollaborationStrategy({}, {}, std::move(ids), n_devices);
  }

  int clusters() const { return static_cast<int>(sds_.size()); }
  const std::vector<int>& sds() const { return sds_; }
  const std::vector<int>& ads() const { return ads_; }
  const std::vector<int>& ids() const { return ids_; }

  bool operator==(const CollaborationStrategy& o) const {
    return sds_ == o.sds_ && ads_ == o.ads_ && ids_ == o.ids_;
  }

 private:
  std::vector<int> sds_, ads_, ids_;
};

// Time/data allocation for one strategy. Bits are raw (not kilobits).
struct Allocation {
  struct SdShare {
    double local_bits = 0.0;
    double hap_bits = 0.0;
    double ad_bits = 0.0;
  };
  struct IdShare {
    double local_bits = 0.0;
    double hap_bits = 0.0;
  };
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  std::vector<SdShare> sd;
  std::vector<double> ad_local_bits;
  std::vector<IdShare> id;

  static Allocation zeros(const CollaborationStrategy& s) {
    Allocation a;
    a.sd.resize(s.clusters());
    a.ad_local_bits.resize(s.clusters(), 0.0);
    a.id.resize(s.ids().size());
    return a;
  }

  bool shape_matches(const CollaborationStrategy& s) const {
    return sd.size() == static_cast<std::size_t>(s.clusters()) &&
           ad_local_bits.size() == static_cast<std::size_t>(s.clusters()) &&
           id.size() == s.ids().size();
  }
};

// Weighted sum of processed bits over one frame.
inline double wscr(const NetworkInstance& inst, const CollaborationStrategy& s,
                   const Allocation& a) {
  if (!a.shape_matches(s))
    throw std::invalid_argument("wscr: allocation shape mismatch");
  double total = 0.0;
  for (int i = 0; i < s.clusters(); ++i) {
    const auto& sh = a.sd[i];
    total += inst.device(s.sds()[i]).weight *
             (sh.local_bits + sh.hap_bits + sh.ad_bits);
    total += inst.device(s.ads()[i]).weight * a.ad_local_bits[i];
  }
  for (std::size_t k = 0; k < s.ids().size(); ++k) {
    total += inst.device(s.ids()[k]).weight *
             (a.id[k].local_bits + a.id[k].hap_bits);
  }
  return total;
}

struct Violation {
  std::string tag;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
};

struct ViolationReport {
  std::vector<Violation> violations;  // rows with slack < -tol*scale
  double worst_violation = 0.0;       // max(lhs - rhs, 0) over all rows
  double worst_relative = 0.0;        // violation / row scale
};

// Ground-truth constraint evaluator for P4: time windows (7d)-(7f),(7h),(7i),
// the six energy families of Eq. (8), minimum-data (7o)-(7q) and
// non-negativity (7r). Works in natural units straight from the physics.
inline ViolationReport validate(const NetworkInstance& inst,
                                const CollaborationStrategy& s,
                                const Allocation& a, double tol = 0.0) {
  if (!a.shape_matches(s))
    throw std::invalid_argument("validate: allocation shape mismatch");
  ViolationReport report;
  const double T = inst.hap().frame_length;

  auto check = [&](const std::string& tag, double lhs, double rhs,
                   double scale) {
    double slack = rhs - lhs;
    double violation = std::max(lhs - rhs, 0.0);
    double denom = std::max({std::abs(rhs), scale, 1e-12});
    double rel = violation / denom;
    report.worst_violation = std::max(report.worst_violation, violation);
    report.worst_relative = std::max(report.worst_relative, rel);
    if (violation > tol * denom && violation > 0.0)
      report.violations.push_back({tag, lhs, rhs, slack});
  };

  double hap_cycles = 0.0;
  for (int i = 0; i < s.clusters(); ++i) {
    int oi = s.sds()[i];
    int pi = s.ads()[i];
    const auto& sh = a.sd[i];
    const auto& od = inst.device(oi);
    const auto& pd = inst.device(pi);
    std::string idx = std::to_string(i);

    double off_time = (sh.hap_bits + sh.ad_bits) / inst.uplink_rate(oi);
    check("7d[" + idx + "]", off_time, a.alpha2 * T, T);

    double forward_time = sh.ad_bits / inst.downlink_rate(pi);
    double assist_time = od.cycles_per_bit * sh.ad_bits / pd.cpu_speed;
    check("7e[" + idx + "]", (a.alpha1 + a.alpha2) * T + forward_time + assist_time,
          T, T);

    double ad_local_time = pd.cycles_per_bit * a.ad_local_bits[i] / pd.cpu_speed;
    check("7f[" + idx + "]", ad_local_time + assist_time, T, T);

    double e_sd = od.local_energy_per_bit() * sh.local_bits +
                  inst.offload_energy_per_bit(oi) * (sh.hap_bits + sh.ad_bits);
    double harvest_sd = inst.hap().eh_efficiency * inst.hap().tx_power *
                        inst.gain(oi) * a.alpha1 * T;
    check("8-sd-harvest[" + idx + "]", e_sd, harvest_sd, harvest_sd);
    check("8-sd-cap[" + idx + "]", e_sd, od.battery_cap, od.battery_cap);

    double e_ad = pd.local_energy_per_bit() * a.ad_local_bits[i] +
                  pd.energy_coeff * pd.cpu_speed * pd.cpu_speed *
                      od.cycles_per_bit * sh.ad_bits;
    double harvest_ad = inst.hap().eh_efficiency * inst.hap().tx_power *
                        inst.gain(pi) * a.alpha1 * T;
    check("8-ad-harvest[" + idx + "]", e_ad, harvest_ad, harvest_ad);
    check("8-ad-cap[" + idx + "]", e_ad, pd.battery_cap, pd.battery_cap);

    check("7o[" + idx + "]", inst.min_data_bits(),
          sh.local_bits + sh.hap_bits + sh.ad_bits, inst.min_data_bits());
    check("7p[" + idx + "]", inst.min_data_bits(), a.ad_local_bits[i],
          inst.min_data_bits());

    hap_cycles += od.cycles_per_bit * sh.hap_bits;

    check("7r-sd-local[" + idx + "]", -sh.local_bits, 0.0, 1.0);
    check("7r-sd-hap[" + idx + "]", -sh.hap_bits, 0.0, 1.0);
    check("7r-sd-ad[" + idx + "]", -sh.ad_bits, 0.0, 1.0);
    check("7r-ad-local[" + idx + "]", -a.ad_local_bits[i], 0.0, 1.0);
  }

  for (std::size_t k = 0; k < s.ids().size(); ++k) {
    int qk = s.ids()[k];
    const auto& sh = a.id[k];
    const auto& qd = inst.device(qk);
    std::string idx = std::to_string(k);

    double off_time = sh.hap_bits / inst.uplink_rate(qk);
    check("7h[" + idx + "]", off_time, a.alpha2 * T, T);

    double e_id = qd.local_energy_per_bit() * sh.local_bits +
                  inst.offload_energy_per_bit(qk) * sh.hap_bits;
    double harvest_id = inst.hap().eh_efficiency * inst.hap().tx_power *
                        inst.gain(qk) * a.alpha1 * T;
    check("8-id-harvest[" + idx + "]", e_id, harvest_id, harvest_id);
    check("8-id-cap[" + idx + "]", e_id, qd.battery_cap, qd.battery_cap);

    check("7q[" + idx + "]", inst.min_data_bits(),
          sh.local_bits + sh.hap_bits, inst.min_data_bits());

    hap_cycles += qd.cycles_per_bit * sh.hap_bits;

    check("7r-id-local[" + idx + "]", -sh.local_bits, 0.0, 1.0);
    check("7r-id-hap[" + idx + "]", -sh.hap_bits, 0.0, 1.0);
  }

  check("7i", hap_cycles / inst.hap().cpu_speed,
        (1.0 - a.alpha1 - a.alpha2) * T, T);
  return report;
}

}  // namespace wpmec
