#include <catch2/catch_amalgamated.hpp>

#include "wpmec/instance_gen.hpp"
#include "wpmec/network_model.hpp"

using namespace wpmec;
using Catch::Approx;

namespace {

InstanceConfig desk_config(int n = 4) {
  InstanceConfig cfg;
  cfg.n_devices = n;
  cfg.weight_max = 2.0;
  return cfg;
}

}  // namespace

TEST_CASE("mean channel gain matches the free-space model") {
  HapParams hap;  // A_d = 4.11, f_c = 915 MHz, d_e = 2.8
  // golden value: high-precision evaluation of the path-loss formula at 3 m
  CHECK(mean_channel_gain(hap, 3.0) ==
        Approx(6.9835321883519196e-06).epsilon(1e-12));

  SECTION("exponent zero gives the bare antenna gain at any distance") {
    hap.path_loss_exp = 0.0;
    CHECK(mean_channel_gain(hap, 1.0) == Approx(4.11));
    CHECK(mean_channel_gain(hap, 87.3) == Approx(4.11));
  }

  SECTION("non-positive distance is a domain error") {
    CHECK_THROWS_AS(mean_channel_gain(hap, 0.0), std::domain_error);
    CHECK_THROWS_AS(mean_channel_gain(hap, -2.0), std::domain_error);
  }

  SECTION("gain decreases with distance") {
    double prev = mean_channel_gain(hap, 1.0);
    for (double d = 2.0; d < 12.0; d += 1.0) {
      double g = mean_channel_gain(hap, d);
      CHECK(g < prev);
      prev = g;
    }
  }
}

TEST_CASE("channel sampling is seeded and Rayleigh-distributed") {
  HapParams hap;
  std::vector<DeviceParams> devs;
  for (int i = 0; i < 3; ++i) {
    DeviceParams d;
    d.index = i;
    d.weight = 1;
    d.cpu_speed = 5e7;
    d.cycles_per_bit = 100;
    d.energy_coeff = 1e-26;
    d.tx_power = 3e-4;
    d.battery_cap = 1e-5;
    d.distance = 3.0 + i;
    devs.push_back(d);
  }

  SECTION("same seed, identical realization") {
    auto a = sample_channels(devs, hap, 99);
    auto b = sample_channels(devs, hap, 99);
    REQUIRE(a.gains.size() == b.gains.size());
    for (std::size_t i = 0; i < a.gains.size(); ++i)
      CHECK(a.gains[i] == b.gains[i]);  // bit-identical
    auto c = sample_channels(devs, hap, 100);
    CHECK(a.gains[0] != c.gains[0]);
  }

  SECTION("fading disabled: gains equal the mean gains") {
    auto ch = sample_channels(devs, hap, 7, false);
    for (std::size_t i = 0; i < devs.size(); ++i)
      CHECK(ch.gains[i] == Approx(mean_channel_gain(hap, devs[i].distance)));
  }

  SECTION("law of large numbers: fading factor has unit mean") {
    DeviceParams d = devs[0];
    double mean_gain = mean_channel_gain(hap, d.distance);
    double total = 0.0;
    const int draws = 100000;
    std::vector<DeviceParams> one{d};
    for (int i = 0; i < draws; ++i)
      total += sample_channels(one, hap, 10000 + i).gains[0] / mean_gain;
    CHECK(total / draws == Approx(1.0).margin(0.02));
  }
}

TEST_CASE("harvested energy follows the capped linear model") {
  HapParams hap;
  hap.eh_efficiency = 0.51;
  hap.tx_power = 3.0;
  DeviceParams dev;
  dev.index = 0;
  dev.weight = 1;
  dev.cpu_speed = 5e7;
  dev.cycles_per_bit = 100;
  dev.energy_coeff = 1e-26;
  dev.tx_power = 3e-4;
  dev.battery_cap = 1e3;  // effectively uncapped
  dev.distance = 3.0;

  CHECK(harvested_energy(dev, hap, 1e-3, 0.5) ==
        Approx(0.51 * 3.0 * 1e-3 * 0.5));

  SECTION("battery cap branch returns exactly E_max") {
    dev.battery_cap = 1e-6;
    CHECK(harvested_energy(dev, hap, 1e-3, 0.9) == dev.battery_cap);
  }

  SECTION("alpha1 outside (0,1] is a domain error") {
    CHECK_THROWS_AS(harvested_energy(dev, hap, 1e-3, 0.0), std::domain_error);
    CHECK_THROWS_AS(harvested_energy(dev, hap, 1e-3, 1.5), std::domain_error);
  }

  SECTION("linear in alpha1 until the cap") {
    double e1 = harvested_energy(dev, hap, 1e-3, 0.001);
    double e2 = harvested_energy(dev, hap, 1e-3, 0.002);
    CHECK(e2 == Approx(2.0 * e1));
  }

  SECTION("monotone in alpha1, gain and HAP power") {
    Rng rng(5);
    for (int t = 0; t < 200; ++t) {
      double g = rng.uniform(1e-8, 1e-4);
      double a = rng.uniform(0.01, 0.99);
      double da = rng.uniform(0.0, 1.0 - a);
      CHECK(harvested_energy(dev, hap, g, a + da) >=
            harvested_energy(dev, hap, g, a));
      CHECK(harvested_energy(dev, hap, g * 1.5, a) >=
            harvested_energy(dev, hap, g, a));
      HapParams strong = hap;
      strong.tx_power *= 2.0;
      CHECK(harvested_energy(dev, strong, g, a) >=
            harvested_energy(dev, hap, g, a));
    }
  }
}

TEST_CASE("wscr is the weighted bit count") {
  auto inst = make_instance(desk_config(5), 3);
  CollaborationStrategy s({0}, {1}, {2, 3, 4}, 5);

  SECTION("all-zero allocation scores zero") {
    CHECK(wscr(inst, s, Allocation::zeros(s)) == 0.0);
  }

  SECTION("unit weights reduce to a plain bit sum") {
    InstanceConfig cfg = desk_config(5);
    cfg.weight_min = cfg.weight_max = 1.0;
    auto flat = make_instance(cfg, 3);
    Allocation a = Allocation::zeros(s);
    a.sd[0] = {100.0, 200.0, 300.0};
    a.ad_local_bits[0] = 50.0;
    a.id[0] = {10.0, 20.0};
    a.id[1] = {1.0, 2.0};
    a.id[2] = {0.0, 5.0};
    CHECK(wscr(flat, s, a) == Approx(100 + 200 + 300 + 50 + 10 + 20 + 1 + 2 + 5));
  }

  SECTION("linear in the weights") {
    Allocation a = Allocation::zeros(s);
    a.sd[0] = {123.0, 45.0, 6.0};
    a.ad_local_bits[0] = 78.0;
    a.id[1] = {9.0, 10.0};
    double base = wscr(inst, s, a);
    InstanceConfig cfg = desk_config(5);
    cfg.weight_min *= 2.0;
    cfg.weight_max *= 2.0;
    auto doubled = make_instance(cfg, 3);
    CHECK(wscr(doubled, s, a) == Approx(2.0 * base));
  }

  SECTION("shape mismatch throws") {
    Allocation a = Allocation::zeros(s);
    a.id.pop_back();
    CHECK_THROWS_AS(wscr(inst, s, a), std::invalid_argument);
  }
}

TEST_CASE("validate reports exactly the violated constraints") {
  InstanceConfig cfg = desk_config(4);

  SECTION("zero allocation, l_th = 0: empty report") {
    cfg.min_data_bits = 0.0;
    auto inst = make_instance(cfg, 11);
    auto s = CollaborationStrategy::all_independent(4);
    Allocation a = Allocation::zeros(s);
    a.alpha1 = 0.5;
    auto rep = validate(inst, s, a);
    CHECK(rep.violations.empty());
    CHECK(rep.worst_violation == 0.0);
  }

  SECTION("zero allocation, l_th > 0: exactly the N minimum-data rows") {
    auto inst = make_instance(cfg, 11);
    auto s = CollaborationStrategy::all_independent(4);
    Allocation a = Allocation::zeros(s);
    a.alpha1 = 0.5;
    auto rep = validate(inst, s, a);
    REQUIRE(rep.violations.size() == 4);
    for (const auto& v : rep.violations) CHECK(v.tag.substr(0, 2) == "7q");
  }

  SECTION("empty violation list iff zero worst violation") {
    auto inst = make_instance(cfg, 12);
    auto s = CollaborationStrategy::all_independent(4);
    Allocation a = Allocation::zeros(s);
    a.alpha1 = 1.0;
    a.alpha2 = 0.2;  // alpha1 + alpha2 > 1 violates (7i)
    auto rep = validate(inst, s, a);
    CHECK(rep.violations.empty() == (rep.worst_violation == 0.0));
    CHECK(rep.worst_violation > 0.0);
  }
}

TEST_CASE("collaboration strategy constructor enforces the partition") {
  CHECK_NOTHROW(CollaborationStrategy({0}, {1}, {2, 3}, 4));
  CHECK_NOTHROW(CollaborationStrategy({}, {}, {0, 1, 2}, 3));
  // |o| != |p|
  CHECK_THROWS_AS(CollaborationStrategy({0}, {}, {1, 2, 3}, 4),
                  std::invalid_argument);
  // duplicate across groups
  CHECK_THROWS_AS(CollaborationStrategy({0}, {0}, {1, 2}, 4),
                  std::invalid_argument);
  // union misses a device
  CHECK_THROWS_AS(CollaborationStrategy({0}, {1}, {2}, 4),
                  std::invalid_argument);
  // out-of-range id
  CHECK_THROWS_AS(CollaborationStrategy({0}, {4}, {1, 2}, 4),
                  std::invalid_argument);
  // m > floor(N/2)
  CHECK_THROWS_AS(CollaborationStrategy({0, 1}, {2, 3}, {}, 3),
                  std::invalid_argument);

  SECTION("fuzz: random malformed inputs never slip through") {
    Rng rng(77);
    for (int t = 0; t < 500; ++t) {
      int n = 2 + static_cast<int>(rng.below(6));
      std::vector<int> sds, ads, ids;
      for (int d = 0; d < n; ++d) {
        switch (rng.below(4)) {
          case 0: sds.push_back(static_cast<int>(rng.below(n + 1)));  break;
          case 1: ads.push_back(static_cast<int>(rng.below(n)));      break;
          default: ids.push_back(static_cast<int>(rng.below(n)));     break;
        }
      }
      bool threw = false;
      try {
        CollaborationStrategy s(sds, ads, ids, n);
        // accepted: must be a genuine disjoint partition
        std::vector<char> seen(n, 0);
        auto count = [&](const std::vector<int>& v) {
          for (int d : v) {
            REQUIRE(d >= 0);
            REQUIRE(d < n);
            REQUIRE(!seen[d]);
            seen[d] = 1;
          }
        };
        count(s.sds());
        count(s.ads());
        count(s.ids());
        for (int d = 0; d < n; ++d) REQUIRE(seen[d]);
      } catch (const std::invalid_argument&) {
        threw = true;
      }
      (void)threw;
    }
  }
}

TEST_CASE("instance constructor checks and reports") {
  InstanceConfig cfg = desk_config(4);

  SECTION("field validation") {
    auto inst = make_instance(cfg, 1);
    auto devs = inst.devices();
    devs[0].cpu_speed = 0.0;
    CHECK_THROWS_AS(
        NetworkInstance(devs, inst.hap(), inst.channels(), cfg.min_data_bits),
        std::invalid_argument);
  }

  SECTION("channel length mismatch") {
    auto inst = make_instance(cfg, 1);
    ChannelRealization ch = inst.channels();
    ch.gains.pop_back();
    CHECK_THROWS_AS(
        NetworkInstance(inst.devices(), inst.hap(), ch, cfg.min_data_bits),
        std::invalid_argument);
  }

  SECTION("energy-constrained assumption holds at the default parameters") {
    // battery cap 1e-5 J < k f^3 T = 1.33e-5 J at the slowest CPU draw, so
    // the assumption can never trip regardless of fading.
    for (int seed = 0; seed < 50; ++seed) {
      auto inst = make_instance(cfg, seed);
      CHECK(inst.energy_constrained());
    }
  }

  SECTION("violations are reported when the cap is lifted") {
    cfg.battery_cap = 10.0;
    cfg.cpu_speed_min = cfg.cpu_speed_max = 1e6;  // k f^3 T = 1e-8, tiny
    cfg.mean_distance = 2.0;
    cfg.distance_spread = 0.1;
    auto inst = make_instance(cfg, 3);
    CHECK_FALSE(inst.energy_constrained());
    CHECK_FALSE(inst.assumption_violations().empty());
  }
}

TEST_CASE("channel realization CSV round-trips the gains") {
  auto inst = make_instance(desk_config(3), 21);
  std::ostringstream out;
  write_channels_csv(inst, out);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "device_id,mean_gain,fading_factor,gain");
  int id;
  char comma;
  double mean, factor, gain;
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    ls >> id >> comma >> mean >> comma >> factor >> comma >> gain;
    CHECK(gain == Approx(mean * factor).epsilon(1e-9));
    CHECK(gain == Approx(inst.gain(id)).epsilon(1e-9));
    ++rows;
  }
  CHECK(rows == 3);
}
