#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome run(const std::string& args) {
  const std::string cmd = std::string(DCL_CLI_PATH) + " " + args + " 2>/dev/null";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (std::size_t got = std::fread(buf.data(), 1, buf.size(), pipe)) o.out.append(buf.data(), got);
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch() {
  fs::path dir = fs::temp_directory_path() / "dcl_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("successful runs") {
  const fs::path dir = scratch();
  const std::string out = (dir / "gm.csv").string();
  auto o = run("geomedian --seed 1 --horizon-ms 60 --record-every 20 --out " + out);
  CHECK(o.code == 0);
  const std::string csv = slurp(out);
  CHECK(csv.rfind("algo,seed,k,sim_time_ms,rel_error,residual\n", 0) == 0);
  CHECK(csv.find("pg-extra,1,0,0,1,") != std::string::npos);
  CHECK(csv.find("async-pd,1,") != std::string::npos);
  CHECK(fs::exists(dir / "reference_geomedian_1.json"));

  auto again = run("geomedian --seed 1 --horizon-ms 60 --record-every 20 --out -");
  CHECK(again.code == 0);
  CHECK(again.out == csv);

  auto all = run("cs --algo prox-dgd,async-prox-dgd --horizon-ms 40 --out " + (dir / "cs.csv").string());
  CHECK(all.code == 0);
  CHECK(slurp(dir / "cs.csv").find("async-prox-dgd") != std::string::npos);
}

TEST_CASE("bounds") {
  auto o = run("cs --seed 0 --bounds");
  CHECK(o.code == 0);
  for (const char* key : {"rho_min", "kappa", "2 rho_min/L", "q ", "eta_max", "observed tau"}) {
    CHECK(o.out.find(key) != std::string::npos);
  }
  auto gm = run("geomedian --bounds");
  CHECK(gm.code == 0);
  CHECK(gm.out.find("inf") != std::string::npos);
}

TEST_CASE("configuration errors exit with 2") {
  CHECK(run("").code == 2);
  CHECK(run("admm").code == 2);
  CHECK(run("cs --algo extra").code == 2);
  CHECK(run("cs --alpha -1").code == 2);
  CHECK(run("cs --horizon-ms 0").code == 2);
  CHECK(run("cs --record-every 0").code == 2);
  CHECK(run("cs --seed banana").code == 2);
  CHECK(run("matcomp --algo prox-dgd").code == 2);
  CHECK(run("geomedian --horizon-ms 10 --out /nonexistent/dir/x.csv").code == 2);
  CHECK(run("--version").code == 0);
}

TEST_CASE("numerical failures exit with 3") {
  const fs::path dir = scratch();
  const std::string out = (dir / "gm.csv").string();
  REQUIRE(run("geomedian --seed 2 --horizon-ms 20 --out " + out).code == 0);
  // A cached solution at the origin makes every relative error undefined.
  const fs::path cache = dir / "reference_geomedian_2.json";
  auto doc = nlohmann::json::parse(slurp(cache));
  doc["x"] = std::vector<double>(4, 0.0);
  std::ofstream(cache) << doc.dump();
  fs::remove(out);
  CHECK(run("geomedian --seed 2 --horizon-ms 20 --out " + out).code == 3);
  CHECK_FALSE(fs::exists(out));
}
