#include <cmath>

#include "doctest.h"
#include "nlif/config.hpp"

using namespace nlif;

namespace {

std::string error_of(const Settings& s, bool full = false) {
  try {
    build_config(s, full);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

bool contains(const std::string& text, const std::string& part) {
  return text.find(part) != std::string::npos;
}

Settings minimal() {
  return {{"experiment", "run-hybrid"}, {"seed", "3"},      {"network.b", "1"},
          {"network.size", "1000"},     {"grid.dv", "0.1"}, {"time.dt", "1e-3"},
          {"time.horizon", "0.5"}};
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("parsing key = value lines") {
    const auto s = parse_settings("# comment\nseed = 4  # trailing\n\nnetwork.b=0.5\n", "f.cfg");
    CHECK(s.at("seed") == "4");
    CHECK(s.at("network.b") == "0.5");
    CHECK(s.size() == 2);
  }

  TEST_CASE("parse errors name the origin and the line") {
    auto message = [](const std::string& text) {
      try {
        parse_settings(text, "f.cfg");
      } catch (const ConfigError& e) {
        return std::string(e.what());
      }
      return std::string();
    };
    CHECK(contains(message("seed = 1\nbogus.key = 2\n"), "f.cfg:2"));
    CHECK(contains(message("seed = 1\nbogus.key = 2\n"), "bogus.key"));
    CHECK(contains(message("seed = 1\nseed = 2\n"), "duplicate"));
    CHECK(contains(message("seed 1\n"), "f.cfg:1"));
  }

  TEST_CASE("an empty config lists every missing required key") {
    const auto err = error_of({});
    for (const char* key : {"experiment", "seed", "network.b", "network.size", "grid.dv", "time.dt",
                            "time.horizon"}) {
      CHECK_MESSAGE(contains(err, key), key);
    }
  }

  TEST_CASE("a misaligned grid is a config error on grid.dv") {
    auto s = minimal();
    s["grid.dv"] = "0.7";
    CHECK(contains(error_of(s), "grid.dv"));
  }

  TEST_CASE("type errors name the key") {
    auto s = minimal();
    s["network.size"] = "ten";
    CHECK(contains(error_of(s), "network.size"));
    s = minimal();
    s["micro.rule"] = "sometimes";
    CHECK(contains(error_of(s), "micro.rule"));
    s = minimal();
    s["time.horizon"] = "0.5005";
    s["time.dt"] = "1e-3";
    CHECK(contains(error_of(s), "time.horizon"));
    s = minimal();
    s["experiment"] = "nothing";
    CHECK(contains(error_of(s), "experiment"));
  }

  TEST_CASE("single-pulse-b1 expands to the documented parameters") {
    const auto cfg = build_config(preset("single-pulse-b1"));
    const auto& h = cfg.hybrid;
    CHECK(cfg.experiment == Experiment::run_hybrid);
    CHECK(cfg.seed == 1);
    CHECK(h.params.b == 1.0);
    CHECK(h.params.size == 160000);
    CHECK(h.params.kick == doctest::Approx(1.0 / 160000));
    CHECK(h.params.v_fire == 2.0);
    CHECK(h.params.v_reset == 1.0);
    CHECK(h.params.v_leak == 0.0);
    CHECK(h.params.v_min == -4.0);
    CHECK(h.params.a == 1.0);
    CHECK(h.params.sigma0 * h.params.sigma0 / 2.0 == doctest::Approx(h.params.a));
    CHECK(h.grid.dv() == doctest::Approx(0.05));
    CHECK(h.dt == 1e-4);
    CHECK(h.steps == 10000);
    CHECK(h.input(0.5) == 16.0);
    CHECK(h.input(0.6) == doctest::Approx(16.0 * std::exp(-1.0)));
    CHECK(h.rate_on == 10.0);
    CHECK(h.rate_off == 10.0);
    CHECK(h.back == 10);
    CHECK(h.micro.rule == UpdateRule::refractory);
    CHECK(cfg.k_rec == 10);
    CHECK(h.init.mean == -1.0);
    CHECK(h.init.variance == 0.5);
  }

  TEST_CASE("every preset builds at both fidelities") {
    for (const auto& name : preset_names()) {
      CHECK_NOTHROW(build_config(preset(name), false));
      CHECK_NOTHROW(build_config(preset(name), true));
    }
    CHECK_THROWS_AS(preset("no-such-preset"), ConfigError);
  }

  TEST_CASE("full fidelity replaces desk-scale values") {
    CHECK(build_config(preset("tests-1-4-b1"), false).hybrid.params.size == 10000);
    CHECK(build_config(preset("tests-1-4-b1"), true).hybrid.params.size == 160000);
    CHECK(build_config(preset("bias-study-b1"), true).replicas == 50);
  }

  TEST_CASE("auto grid follows the network size") {
    auto s = minimal();
    s["grid.dv"] = "auto";
    s["network.size"] = "20^4";
    CHECK(build_config(s).hybrid.grid.dv() == doctest::Approx(0.05));
  }

  TEST_CASE("snapshot times become steps") {
    auto s = minimal();
    s["output.snapshots"] = "0.1, 0.25";
    const auto cfg = build_config(s);
    CHECK(cfg.hybrid.snapshot_steps == std::vector<std::int64_t>{100, 250});
    s["output.snapshots"] = "0.9";
    CHECK(contains(error_of(s), "output.snapshots"));
  }

  TEST_CASE("fingerprints depend on values, not on their spelling") {
    auto a = minimal();
    auto b = minimal();
    a["grid.dv"] = "0.05";
    b["grid.dv"] = "1/20";
    b["network.size"] = "10^3";
    const auto fa = build_config(a).fingerprint;
    CHECK(fa.size() == 16);
    CHECK(fa == build_config(b).fingerprint);
    b["seed"] = "4";
    CHECK(fa != build_config(b).fingerprint);
    CHECK(build_config(a).fingerprint == fingerprint(build_config(a).settings));
  }

  TEST_CASE("merge lets later settings win") {
    const auto m = merge({{"seed", "1"}, {"network.b", "1"}}, {{"seed", "2"}});
    CHECK(m.at("seed") == "2");
    CHECK(m.at("network.b") == "1");
  }
}
