#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rmplate/config.hpp"

using namespace rmplate;

namespace {

std::string write_temp(const std::string& body) {
  static int counter = 0;
  const std::string path = std::filesystem::temp_directory_path().string() +
                           "/rmplate_cfg_" + std::to_string(counter++) + ".cfg";
  std::ofstream os(path);
  os << body;
  return path;
}

}  // namespace

TEST_CASE("config parsing") {
  const std::string path = write_temp(
      "# a comment line\n"
      "beta = 2.0\n"
      "mu=1.5   # trailing comment\n"
      "sigma = 6\n"
      "h_list = 0.125, 0.0625\n"
      "bc_mode = ignore\n"
      "load = bump\n"
      "seed = 42\n"
      "\n");
  const RunConfig c = parse_config_file(path);
  CHECK(c.mat.beta == 2.0);
  CHECK(c.mat.mu == 1.5);
  CHECK(c.mat.sigma == 6.0);
  REQUIRE(c.h_list.size() == 2);
  CHECK(c.h_list[1] == 0.0625);
  CHECK(c.bc_mode == "ignore");
  CHECK(c.seed == 42);
  CHECK(c.derived_alpha() == 4.0);  // sigma = 2 alpha - 2
  CHECK_NOTHROW(c.validate());
  std::remove(path.c_str());
}

TEST_CASE("config errors") {
  SUBCASE("unknown key") {
    const std::string path = write_temp("nonsense = 1\n");
    CHECK_THROWS_AS(parse_config_file(path), std::invalid_argument);
    std::remove(path.c_str());
  }
  SUBCASE("malformed line") {
    const std::string path = write_temp("beta 2.0\n");
    CHECK_THROWS_AS(parse_config_file(path), std::invalid_argument);
    std::remove(path.c_str());
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(parse_config_file("/nonexistent/rmplate.cfg"), std::invalid_argument);
  }
  SUBCASE("h_list must decrease") {
    RunConfig c;
    c.h_list = {0.1, 0.2};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  }
  SUBCASE("force exponent relation is enforced") {
    RunConfig c;
    c.load = "bump";
    c.alpha = 3.0;
    c.alpha_given = true;
    c.mat.sigma = 5.0;  // 2*3 - 2 = 4 != 5
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.mat.sigma = 4.0;
    CHECK_NOTHROW(c.validate());
  }
  SUBCASE("sigma below four") {
    RunConfig c;
    c.mat.sigma = 3.5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  }
}

TEST_CASE("config hash is stable and key-sensitive") {
  RunConfig a, b;
  CHECK(config_hash(a) == config_hash(b));
  b.mat.mu = 2.0;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.h_list = {0.5};
  CHECK(config_hash(a) != config_hash(b));
  // the output directory is presentation, not science
  b = a;
  b.out = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_trailer(a).rfind("# config_hash=0x", 0) == 0);
}

TEST_CASE("variant resolution follows sigma") {
  RunConfig c;
  c.variant = "auto";
  c.mat.sigma = 5.0;
  CHECK(c.energy_variant() == EnergyVariant::plain);
  c.mat.sigma = 4.0;
  CHECK(c.energy_variant() == EnergyVariant::second_grad);
  c.variant = "second_grad";
  c.mat.sigma = 6.0;
  CHECK(c.energy_variant() == EnergyVariant::second_grad);
}

TEST_CASE("directory lock excludes concurrent runs") {
  const std::string dir =
      std::filesystem::temp_directory_path().string() + "/rmplate_lock_test";
  std::filesystem::remove_all(dir);
  {
    DirLock lock(dir);
    CHECK_THROWS_AS([&] { DirLock second(dir); }(), std::runtime_error);
  }
  // released on destruction
  CHECK_NOTHROW([&] { DirLock again(dir); }());
  std::filesystem::remove_all(dir);
}
