#include <charconv>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "nlif/run.hpp"

using namespace nlif;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("nlif_test_" + name);
  fs::remove_all(dir);
  return dir;
}

RunConfig small_hybrid() {
  return build_config({{"experiment", "run-hybrid"},
                       {"seed", "3"},
                       {"network.b", "1"},
                       {"network.size", "2000"},
                       {"grid.dv", "0.05"},
                       {"time.dt", "1e-3"},
                       {"time.horizon", "0.7"},
                       {"input.kind", "pulse"},
                       {"input.amplitude", "16"},
                       {"hybrid.rate_on", "10"},
                       {"hybrid.rate_off", "10"},
                       {"output.k_rec", "10"},
                       {"output.snapshots", "0.3"}});
}

}  // namespace

TEST_SUITE("run") {
  TEST_CASE("numbers round-trip through their text") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(16.0) == "16");
    CHECK(format_number(-2.5e-7) == "-2.5e-07");
    std::mt19937_64 eng(1);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int i = 0; i < 1000; ++i) {
      const double x = u(eng) * std::pow(10.0, i % 17 - 8);
      const auto s = format_number(x);
      double back = 0.0;
      std::from_chars(s.data(), s.data() + s.size(), back);
      REQUIRE(back == x);
    }
  }

  TEST_CASE("CSV writer produces the fingerprint line and the header") {
    const auto dir = scratch("csv");
    fs::create_directories(dir);
    CsvWriter w(dir / "x.csv", "00ff", {"a", "b"});
    w.cell(1.5).cell(std::int64_t{2}).end_row();
    w.cell("s").cell(0.25).end_row();
    CHECK_FALSE(fs::exists(dir / "x.csv"));
    w.commit();
    CHECK(slurp(dir / "x.csv") == "# fingerprint=00ff\na,b\n1.5,2\ns,0.25\n");
    CHECK_FALSE(fs::exists(dir / "x.csv.tmp"));
    fs::remove_all(dir);
  }

  TEST_CASE("a hybrid run writes byte-identical artifacts when repeated") {
    const auto cfg = small_hybrid();
    const auto a = scratch("repeat_a");
    const auto b = scratch("repeat_b");
    const auto files = run_experiment(cfg, a);
    run_experiment(cfg, b);
    REQUIRE(!files.empty());
    std::vector<std::string> names;
    for (const auto& f : files) {
      names.push_back(f.filename().string());
      CHECK_MESSAGE(slurp(f) == slurp(b / f.filename()), f.filename().string());
    }
    for (const char* expected : {"rates.csv", "density.csv", "events.csv", "mfe.csv", "density_k300.csv"}) {
      CHECK_MESSAGE(std::find(names.begin(), names.end(), expected) != names.end(), std::string(expected));
    }
    const auto meta = nlohmann::json::parse(slurp(a / "meta.json"));
    CHECK(meta.at("fingerprint") == cfg.fingerprint);
    CHECK(meta.at("seed") == 3);
    fs::remove_all(a);
    fs::remove_all(b);
  }

  TEST_CASE("verification flags foreign fingerprints") {
    const auto cfg = small_hybrid();
    const auto dir = scratch("verify");
    run_experiment(cfg, dir);
    auto report = verify_artifacts(dir, cfg.fingerprint);
    CHECK(report.checked >= 4);
    CHECK(report.mismatches.empty());
    {
      std::ofstream(dir / "foreign.csv") << "# fingerprint=0123456789abcdef\nx\n";
    }
    report = verify_artifacts(dir, cfg.fingerprint);
    CHECK(report.mismatches.size() == 1);
    fs::remove_all(dir);
  }
}
