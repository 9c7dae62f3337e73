#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tempsync/cli.hpp"

using namespace tsync;
using nlohmann::json;

namespace {

struct Sandbox {
  std::filesystem::path dir;
  explicit Sandbox(const std::string& name) : dir(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
  }
  ~Sandbox() { std::filesystem::remove_all(dir); }

  std::filesystem::path write(const std::string& file, const json& j) const {
    const auto p = dir / file;
    std::ofstream(p) << j.dump(2);
    return p;
  }
  json read(const std::string& file) const {
    std::ifstream is(dir / "out" / file);
    return json::parse(is);
  }
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::string& command, const std::filesystem::path& config, const std::filesystem::path& out_dir,
        const std::string& scenario = "") {
  CliConfig cfg;
  cfg.command = command;
  cfg.scenario_name = scenario;
  cfg.config_path = config;
  cfg.out_dir = out_dir;
  std::ostringstream o, e;
  const int code = dispatch(cfg, o, e);
  return {code, o.str(), e.str()};
}

json consensus_config(const json& network) {
  return {{"network", network},
          {"nodes", {{"model", "consensus"}}},
          {"t_end", 2.0},
          {"dt", 1e-2},
          {"x0_range", {-1.0, 1.0}},
          {"bounds", {{"rho", 2.0}, {"global", true}}},
          {"certificate", {{"epsilon", 1e-3}, {"bound_M", 1e-6}}}};
}

}  // namespace

TEST_CASE("certify on a complete graph holds") {
  Sandbox sb("tempsync_cli_ok");
  const auto cfg = sb.write("c.json", consensus_config({{"type", "complete"}, {"n", 4}}));
  const auto r = run("certify", cfg, sb.dir / "out");
  CHECK(r.code == kExitOk);
  CHECK(sb.read("certificate.json")["verdict"] == "holds");
  CHECK(sb.read("report.json")["verdict"] == "holds");
}

TEST_CASE("certify on the uncompensated ring fails at pair (1,2)") {
  Sandbox sb("tempsync_cli_ring");
  const auto cfg = sb.write("c.json", consensus_config({{"type", "ring"}, {"n", 10}, {"a", 0.5}, {"a12", 0.0}}));
  const auto r = run("certify", cfg, sb.dir / "out");
  CHECK(r.code == kExitFails);
  const auto cert = sb.read("certificate.json");
  CHECK(cert["verdict"] == "fails");
  CHECK(cert["failure"]["condition"] == "gamma");
  CHECK(cert["failure"]["pair"] == json::array({1, 2}));
}

TEST_CASE("identical inputs give identical bytes") {
  Sandbox sb("tempsync_cli_bytes");
  const auto cfg = sb.write("c.json", consensus_config({{"type", "complete"}, {"n", 3}}));
  REQUIRE(run("simulate", cfg, sb.dir / "out").code == kExitOk);
  std::ifstream a(sb.dir / "out" / "trajectory.csv");
  const std::string first((std::istreambuf_iterator<char>(a)), {});
  REQUIRE(run("simulate", cfg, sb.dir / "out").code == kExitOk);
  std::ifstream b(sb.dir / "out" / "trajectory.csv");
  const std::string second((std::istreambuf_iterator<char>(b)), {});
  CHECK(first == second);
  CHECK(!first.empty());
}

TEST_CASE("missing config names the path") {
  Sandbox sb("tempsync_cli_missing");
  const auto p = sb.dir / "nope.json";
  const auto r = run("certify", p, sb.dir / "out");
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find(p.string()) != std::string::npos);
}

TEST_CASE("schema errors name the field") {
  Sandbox sb("tempsync_cli_schema");
  auto j = consensus_config({{"type", "complete"}, {"n", 3}});
  j["nodes"]["model"] = "kuramoto";
  const auto r = run("certify", sb.write("c.json", j), sb.dir / "out");
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("nodes.model") != std::string::npos);

  j.erase("network");
  const auto r2 = run("simulate", sb.write("d.json", j), sb.dir / "out");
  CHECK(r2.code == kExitUsage);
  CHECK(r2.err.find("network") != std::string::npos);
}

TEST_CASE("unknown scenario is a usage error") {
  Sandbox sb("tempsync_cli_scen");
  const auto r = run("scenario", sb.write("c.json", json::object()), sb.dir / "out", "kuramoto");
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("kuramoto") != std::string::npos);
}

TEST_CASE("threshold command") {
  Sandbox sb("tempsync_cli_threshold");
  json ok{{"network", {{"type", "complete"}, {"n", 3}}}, {"threshold", {{"l_rho", 1.0}}}};
  CHECK(run("threshold", sb.write("a.json", ok), sb.dir / "out").code == kExitOk);
  CHECK(sb.read("report.json")["c_bar"].get<double>() == doctest::Approx(1.0 / 3.0));

  json bad{{"network", {{"type", "star"}, {"n", 5}, {"a", 3.0}, {"b", -1.0}}}, {"threshold", {{"l_rho", 1.0}}}};
  CHECK(run("threshold", sb.write("b.json", bad), sb.dir / "out").code == kExitFails);
  CHECK(sb.read("report.json")["feasible"] == false);
}

TEST_CASE("cluster certify and pullback check") {
  Sandbox sb("tempsync_cli_cluster");
  auto j = consensus_config({{"type", "complete"}, {"n", 4}});
  j["cluster"] = {1, 2, 3};
  CHECK(run("cluster-certify", sb.write("c.json", j), sb.dir / "out").code == kExitOk);
  CHECK(sb.read("certificate.json")["cluster"] == json::array({1, 2, 3}));

  json pb{{"times", {0.0, 1.0, 2.0}}};
  CHECK(run("pullback-check", sb.write("p.json", pb), sb.dir / "out").code == kExitOk);
  CHECK(sb.read("report.json")["passed"] == true);
}
