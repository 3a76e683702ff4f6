// Runs the cid executable as a subprocess and checks exit codes and outputs.

#include <array>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <sys/wait.h>

#include <doctest.h>

#include "cid/fdvv.hpp"
#include "cid/serialize.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int status = -1;
  std::string output;
};

Result run_cli(const std::string& args) {
  const std::string cmd = std::string(CID_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) r.output += buf.data();
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("cid_cli_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("usage errors exit with 1") {
  const auto r = run_cli("bench --no-such-flag");
  CHECK(r.status == 1);
  CHECK(r.output.find("Usage") != std::string::npos);
  CHECK(run_cli("").status == 1);
  CHECK(run_cli("frobnicate").status == 1);
}

TEST_CASE("bench reports the hypervolume ratio") {
  const auto r = run_cli("bench --problem schaffer --budget 40 --seed 7");
  CHECK(r.status == 0);
  CHECK(r.output.find("hv_ratio=") != std::string::npos);
  CHECK(run_cli("bench --problem rosenbrock").status == 2);
}

TEST_CASE("optimize is byte-stable and resumable") {
  TempDir dir;
  const auto config = dir.path / "run.ini";
  cid::io::write_file_atomic(config,
                             "[objectives]\nprovider = synthetic\n"
                             "[optimizer]\nscan_count = 64\nmc_samples = 32\nrestarts = 2\n"
                             "[run]\nbudget = 6\nseed = 3\n");
  const auto a = dir.path / "a", b = dir.path / "b", c = dir.path / "c";
  CHECK(run_cli("optimize --config " + config.string() + " --out-dir " + a.string()).status == 0);
  CHECK(run_cli("optimize --config " + config.string() + " --out-dir " + b.string()).status == 0);
  const auto front_a = cid::io::read_file(a / "front.csv");
  CHECK(front_a == cid::io::read_file(b / "front.csv"));
  CHECK(cid::io::read_file(a / "state.json") == cid::io::read_file(b / "state.json"));

  CHECK(run_cli("optimize --config " + config.string() + " --out-dir " + c.string() + " --stop-after 2").status ==
        0);
  CHECK(run_cli("optimize --config " + config.string() + " --out-dir " + c.string() + " --resume " +
                (c / "state.json").string())
            .status == 0);
  CHECK(cid::io::read_file(c / "front.csv") == front_a);
  CHECK(cid::io::read_file(c / "state.json") == cid::io::read_file(a / "state.json"));

  const auto r = run_cli("report --state " + (a / "state.json").string() + " --out-dir " + (dir.path / "r").string());
  CHECK(r.status == 0);
  CHECK(cid::io::read_file(dir.path / "r" / "front.csv") == front_a);

  cid::io::write_file_atomic(dir.path / "bad.ini", "[run]\nbudget = 0\n");
  const auto bad = run_cli("optimize --config " + (dir.path / "bad.ini").string() + " --out-dir " +
                           (dir.path / "bad").string());
  CHECK(bad.status == 2);
  CHECK(bad.output.find("run.budget") != std::string::npos);
}

TEST_CASE("simulate and fit") {
  TempDir dir;
  const auto model = dir.path / "model.json";
  cid::io::save_model(model, cid::button::design_to_fdvv({}));
  std::string groups;
  for (int speed : {10, 100, 300}) {
    const auto out = dir.path / ("press" + std::to_string(speed) + ".csv");
    CHECK(run_cli("simulate --model " + model.string() + " --press-speed " + std::to_string(speed) + " -o " +
                  out.string())
              .status == 0);
    groups += " --group " + out.string();
  }
  const auto fitted = dir.path / "fitted.json";
  CHECK(run_cli("fit" + groups + " -o " + fitted.string()).status == 0);
  CHECK_NOTHROW(cid::io::load_model(fitted));
  CHECK(run_cli("simulate --model " + model.string() + " -o " + (dir.path / "x.csv").string()).status == 1);
  CHECK(run_cli("fit --group " + (dir.path / "missing.csv").string() + " -o " + fitted.string()).status == 2);
}
