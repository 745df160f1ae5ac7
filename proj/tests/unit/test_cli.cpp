#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "json.hpp"
#include "phenocast/cli.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = phenocast::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path = fs::temp_directory_path() / ("phenocast_cli_test_" + std::to_string(::getpid()));
  TempDir() { fs::remove_all(path); }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("usage errors and help") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"fit", "--model", "linear"}).code == 2);
  const auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("simulate-temp") != std::string::npos);
  CHECK(run({"--version"}).code == 0);
  CHECK(run({"predict", "--day", "3"}).code == 2);  // --year is required
}

TEST_CASE("synth, fit and predict through the command line") {
  TempDir tmp;
  const auto data = tmp.path / "data";
  REQUIRE(run({"synth", "--years", "8", "--seed", "4", "--out", data.string()}).code == 0);
  for (const char* f : {"temperature.csv", "bloom_apple.csv", "truth.json", "manifest.json"})
    CHECK(fs::exists(data / f));

  const auto temp = (data / "temperature.csv").string(), bloom = (data / "bloom_cherry.csv").string();
  const auto fit_dir = tmp.path / "fit";
  const auto r = run({"fit", "--bloom", bloom, "--temp", temp, "--search", "fast", "--out", fit_dir.string()});
  REQUIRE(r.code == 0);
  const auto model = json::parse(slurp(fit_dir / "model.json"));
  CHECK(model.at("spec").at("family") == "agdd");

  const auto manifest = json::parse(slurp(fit_dir / "manifest.json"));
  CHECK(manifest.at("command") == "fit");
  CHECK(manifest.at("config").at("search") == "fast");
  CHECK_FALSE(manifest.at("config").contains("threads"));
  CHECK_FALSE(manifest.at("config").contains("out"));
  // Input paths are recorded absolute.
  bool absolute = false;
  const auto args = manifest.at("args");
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--bloom") absolute = fs::path(args[i + 1].get<std::string>()).is_absolute();
  CHECK(absolute);

  const auto pred_dir = tmp.path / "pred";
  const auto p = run({"predict", "--fitted", (fit_dir / "model.json").string(), "--temp", temp, "--year", "1940",
                      "--day", "45", "--paths", "150", "--out", pred_dir.string()});
  REQUIRE(p.code == 0);
  const auto pj = json::parse(slurp(pred_dir / "prediction.json"));
  CHECK(pj.at("first_day") == 46);
  CHECK(std::abs(pj.at("total").get<double>() - 1.0) < 1e-9);
  CHECK(slurp(pred_dir / "distribution.csv").rfind("day,mass\n", 0) == 0);

  // Oracle file: the target year's own temperatures.
  const auto orc = run({"predict", "--fitted", (fit_dir / "model.json").string(), "--temp", temp, "--year", "1940",
                        "--day", "45", "--oracle-temp", temp, "--out", (tmp.path / "oracle").string()});
  REQUIRE(orc.code == 0);
  CHECK(json::parse(slurp(tmp.path / "oracle" / "prediction.json")).at("oracle") == true);
}

TEST_CASE("input errors exit with status 1 and a message") {
  TempDir tmp;
  const auto r = run({"fit", "--bloom", "/nonexistent/b.csv", "--temp", "/nonexistent/t.csv", "--out",
                      tmp.path.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("error:") != std::string::npos);
  CHECK(run({"rerun", (tmp.path / "missing.json").string()}).code == 1);
}
