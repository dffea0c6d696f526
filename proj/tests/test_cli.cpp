#include <doctest.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef STIFFCTL_PATH
#error "STIFFCTL_PATH must point at the built CLI binary"
#endif

namespace {

namespace fs = std::filesystem;

struct CmdResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

CmdResult run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd =
      env + (env.empty() ? "" : " ") + STIFFCTL_PATH + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buf.data(), static_cast<int>(buf.size()), pipe)) out += buf.data();
  const int status = pclose(pipe);
  CmdResult res;
  res.output = out;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("stiffctl-test-" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("cli: --help exits 0 and lists subcommands") {
  CmdResult res = run_cli("--help");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("demo") != std::string::npos);
  CHECK(res.output.find("segment") != std::string::npos);
  CHECK(res.output.find("optimize") != std::string::npos);
  CHECK(res.output.find("report") != std::string::npos);
}

TEST_CASE("cli: unknown task name exits 2 and names the valid kinds") {
  TempDir dir;
  CmdResult res =
      run_cli("demo --task flying --seed 1 --out " + dir.file("x.json"));
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("wipe2d") != std::string::npos);
  CHECK(res.output.find("door1d") != std::string::npos);
  CHECK(res.output.find("track") != std::string::npos);
}

TEST_CASE("cli: demo then segment then optimize happy path") {
  TempDir dir;
  const std::string demo = dir.file("demo.json");
  CmdResult gen = run_cli("demo --task door1d --seed 7 --noise 0.001 --out " + demo);
  REQUIRE(gen.exit_code == 0);
  CHECK(fs::exists(demo));

  CmdResult seg = run_cli("segment " + demo + " --method icsld --m 3 --seed 7 --out " +
                          dir.file("seg.json"));
  CHECK(seg.exit_code == 0);
  CHECK(fs::exists(dir.file("seg.json")));

  CmdResult opt = run_cli("optimize --input " + demo +
                          " --task door1d --n 10 --n-init 6 --seed 7 --out " +
                          dir.file("run"));
  CHECK(opt.exit_code == 0);
  CHECK(fs::exists(dir.path / "run" / "run.csv"));
  CHECK(fs::exists(dir.path / "run" / "pareto.csv"));
  CHECK(fs::exists(dir.path / "run" / "segmentation.json"));
}

TEST_CASE("cli: missing input file exits 2") {
  CmdResult res = run_cli("segment /nonexistent/demo.json --seed 1");
  CHECK(res.exit_code == 2);
}

TEST_CASE("cli: infeasible phase count exits 4") {
  TempDir dir;
  const std::string demo = dir.file("demo.json");
  // A trajectory of T control steps cannot carry T+ phases; build a short one.
  REQUIRE(run_cli("demo --task track --seed 1 --out " + demo).exit_code == 0);
  CmdResult res = run_cli("segment " + demo + " --method icsld --m 500 --seed 1");
  CHECK(res.exit_code == 4);
}

TEST_CASE("cli: unknown config key exits 2 and names the key") {
  TempDir dir;
  {
    std::ofstream out(dir.file("cfg.json"));
    out << R"({"task": "wipe2d", "frobnicate": 3})";
  }
  CmdResult res =
      run_cli("optimize --config " + dir.file("cfg.json") + " --seed 1");
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("frobnicate") != std::string::npos);
}

TEST_CASE("cli: STIFFCTL_SEED environment fallback") {
  TempDir dir;
  const std::string a = dir.file("a.json");
  const std::string b = dir.file("b.json");
  REQUIRE(run_cli("demo --task wipe2d --noise 0.001 --out " + a,
                  "STIFFCTL_SEED=42").exit_code == 0);
  REQUIRE(run_cli("demo --task wipe2d --noise 0.001 --seed 42 --out " + b)
              .exit_code == 0);
  CHECK(read_file(a) == read_file(b));
  // No seed anywhere: falls back to the default seed 0.
  const std::string c = dir.file("c.json");
  const std::string d = dir.file("d.json");
  REQUIRE(run_cli("demo --task wipe2d --noise 0.001 --out " + c,
                  "env -u STIFFCTL_SEED").exit_code == 0);
  REQUIRE(run_cli("demo --task wipe2d --noise 0.001 --seed 0 --out " + d)
              .exit_code == 0);
  CHECK(read_file(c) == read_file(d));
}

TEST_CASE("cli: repeated optimize runs produce byte-identical outputs") {
  TempDir dir;
  const std::string demo = dir.file("demo.json");
  REQUIRE(run_cli("demo --task wipe2d --seed 7 --noise 0.001 --out " + demo)
              .exit_code == 0);
  const std::string base = " --input " + demo +
                           " --task wipe2d --n 10 --n-init 6 --seed 3 --out ";
  REQUIRE(run_cli("optimize" + base + dir.file("r1")).exit_code == 0);
  REQUIRE(run_cli("optimize" + base + dir.file("r2")).exit_code == 0);
  CHECK(read_file(dir.path / "r1" / "run.csv") ==
        read_file(dir.path / "r2" / "run.csv"));
  CHECK(read_file(dir.path / "r1" / "pareto.csv") ==
        read_file(dir.path / "r2" / "pareto.csv"));
  CHECK(read_file(dir.path / "r1" / "segmentation.json") ==
        read_file(dir.path / "r2" / "segmentation.json"));
}

TEST_CASE("cli: --no-prior equals --beta 0 output") {
  TempDir dir;
  const std::string demo = dir.file("demo.json");
  REQUIRE(run_cli("demo --task door1d --seed 7 --noise 0.001 --out " + demo)
              .exit_code == 0);
  const std::string base = " --input " + demo +
                           " --task door1d --n 9 --n-init 6 --seed 5 --out ";
  REQUIRE(run_cli("optimize" + base + dir.file("np") + " --no-prior").exit_code == 0);
  REQUIRE(run_cli("optimize" + base + dir.file("b0") + " --beta 0").exit_code == 0);
  CHECK(read_file(dir.path / "np" / "run.csv") ==
        read_file(dir.path / "b0" / "run.csv"));
}

TEST_CASE("cli: flags override config file values") {
  TempDir dir;
  const std::string demo = dir.file("demo.json");
  REQUIRE(run_cli("demo --task wipe2d --seed 7 --noise 0.001 --out " + demo)
              .exit_code == 0);
  {
    std::ofstream out(dir.file("cfg.json"));
    out << R"({"task": "wipe2d", "n": 6, "n_init": 6, "input": ")" << demo
        << R"("})";
  }
  // Config says n=6; flag bumps it to 8.  Count data rows in run.csv.
  REQUIRE(run_cli("optimize --config " + dir.file("cfg.json") +
                  " --n 8 --seed 2 --out " + dir.file("r"))
              .exit_code == 0);
  const std::string csv = read_file(dir.path / "r" / "run.csv");
  const long rows = std::count(csv.begin(), csv.end(), '\n') - 1;
  CHECK(rows == 8);
}
