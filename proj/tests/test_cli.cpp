// Runs the stlad executable and checks exit codes and outputs.
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
};

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("stlad-cli-" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

fs::path workdir() {
  static TempDir dir;
  return dir.path;
}

Run run(const std::string& args) {
  const fs::path out = workdir() / "stdout.txt";
  const std::string cmd = std::string(STLAD_CLI) + " " + args + " > " + out.string() + " 2> /dev/null";
  const int status = std::system(cmd.c_str());
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string write(const std::string& name, const std::string& text) {
  const fs::path p = workdir() / name;
  std::ofstream(p) << text;
  return p.string();
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("monitor") {
  const auto trace = write("t.csv", "# dt=0.5\nx\n0.1\n0.2\n0.9\n");
  auto ok = run("monitor --formula-text 'alw[0,0.5] (x <= 0.5)' --trace " + trace);
  CHECK(ok.code == 0);
  // margins 0.2 and 0.15, geometric branch
  CHECK(std::abs(std::stod(ok.out) - (std::sqrt(1.2 * 1.15) - 1)) <= 1e-15);
  CHECK(ok.out.find(" satisfied\n") != std::string::npos);
  auto bad = run("monitor --formula-text 'alw[0,0.5] (x <= 0.5)' --trace " + trace + " --time 1");
  CHECK(bad.code == 1);
  auto js = run("monitor --formula-text 'alw[0,0.5] (x <= 0.5)' --trace " + trace + " --step 1 --json");
  CHECK(js.code == 1);
  auto j = json::parse(js.out);
  CHECK(j["satisfied"] == false);
  CHECK(j["step"] == 1);
  CHECK(j["robustness"].get<double>() < 0);

  const auto formula = write("f.stl", "# reach\nev[0,1] (x <= 0.15)\n");
  CHECK(run("monitor --formula " + formula + " --trace " + trace).code == 0);
  CHECK(run("monitor --formula-text 'ev[0,1] (x <= )' --trace " + trace).code == 2);
  CHECK(run("monitor --formula-text 'alw[0,5] (x <= 0)' --trace " + trace).code == 2);
  CHECK(run("monitor --formula-text 'x <= 0' --trace /nonexistent.csv").code == 2);
  CHECK(run("monitor --trace " + trace).code == 2);
}

TEST_CASE("usage errors") {
  CHECK(run("").code == 2);
  CHECK(run("juggle").code == 2);
  CHECK(run("design --scenario reach-arc").code == 2);
  CHECK(run("--help").code == 0);
}

TEST_CASE("design") {
  auto r = run("design --scenario reach-arc -n 10");
  REQUIRE(r.code == 0);
  CHECK(lines(r.out) == 11);
  CHECK(r.out.rfind("cube_x,cube_y\n", 0) == 0);
  CHECK(run("design --scenario pick-mass --kind random -n 5 --seed 3").out ==
        run("design --scenario pick-mass --kind random -n 5 --seed 3").out);
  CHECK(lines(run("design --scenario pick-mass --kind pool -n 7").out) == 8);
  CHECK(lines(run("design --domain " + write("d.json", R"({"dimensions": [{"name": "u", "lo": 0, "hi": 1}]})") +
                  " --kind glp -n 4").out) == 5);
  CHECK(run("design --scenario reach-arc --kind sobol -n 4").code == 2);
  CHECK(run("design --scenario reach-arc -n 1").code == 2);
}

TEST_CASE("campaign and field") {
  const auto rec = (workdir() / "c.json").string();
  const auto hist = (workdir() / "h.csv").string();
  auto r = run("campaign --scenario reach-arc --strategy mepe --budget 3 --n-init 6 --pool-size 64 --fit-restarts 1 "
               "--seed 4 -o " + rec + " --history " + hist);
  REQUIRE(r.code == 0);
  std::ifstream in(rec);
  auto j = json::parse(in);
  CHECK(j["history"].size() == 9);
  std::ifstream hs(hist);
  std::stringstream h;
  h << hs.rdbuf();
  CHECK(lines(h.str()) == 10);

  auto f = run("field --campaign " + rec + " --resolution 3,2");
  REQUIRE(f.code == 0);
  CHECK(lines(f.out) == 7);
  CHECK(f.out.rfind("cube_x,cube_y,mean,variance\n", 0) == 0);
  CHECK(run("field --campaign /nonexistent.json").code == 2);
  CHECK(run("campaign --scenario reach-arc --strategy greedy --budget 3").code == 2);
  CHECK(run("campaign --formula-text 'x <= 0' --budget 3").code == 2);
}

TEST_CASE("external simulators") {
  const std::string sim = FAKE_SIMULATOR;
  auto ok = run("protocol-check --command '" + sim + " constant' --x 0.5,0.5");
  CHECK(ok.code == 0);
  CHECK(json::parse(ok.out)["ok"] == true);
  CHECK(run("protocol-check --command '" + sim + " malformed' --x 0.5").code == 3);
  CHECK(run("protocol-check --command '" + sim + " bad-handshake'").code == 3);
  CHECK(run("protocol-check --command '" + sim + " silent' --timeout 0.5").code == 3);
  CHECK(run("protocol-check --command '" + sim + " constant' --x 0.5,abc").code == 2);

  const auto dom = write("d2.json", R"({"dimensions": [{"name": "u", "lo": 0, "hi": 1}]})");
  const auto out = (workdir() / "ext.json").string();
  CHECK(run("campaign --formula-text 'alw[0,1] (clamp(d, 0, 1) <= -0.5)' --domain " + dom + " --command '" + sim +
            " constant' --strategy ud --budget 4 -o " + out).code == 0);
  CHECK(run("campaign --formula-text 'alw[0,1] (clamp(d, 0, 1) <= -0.5)' --domain " + dom + " --command '" + sim +
            " constant' --strategy ud --budget 4 --timeout 0").code == 2);
  CHECK(run("campaign --formula-text 'alw[0,5] (clamp(d, 0, 1) <= -0.5)' --domain " + dom + " --command '" + sim +
            " constant' --strategy ud --budget 4").code == 2);
}

TEST_CASE("bench") {
  json cfg = {{"scenario", "pick-mass"}, {"budgets", {2, 4}}, {"n_init", 5},    {"test_points", 20},
              {"repetitions", 2},        {"seeds", 1},        {"pool_size", 32}, {"fit_restarts", 1},
              {"checks", {{{"lhs", "mepe"}, {"rhs", "random"}, {"factor", 1000.0}}}}};
  const auto pass = write("pass.json", cfg.dump());
  const auto out = (workdir() / "bench").string();
  auto r = run("bench --config " + pass + " -o " + out);
  CHECK(r.code == 0);
  for (const char* f : {"report.json", "rmse.csv", "field.csv", "campaign-mepe-2-" }) {
    bool found = false;
    for (const auto& e : fs::directory_iterator(out)) found |= e.path().filename().string().rfind(f, 0) == 0;
    CHECK_MESSAGE(found, f);
  }

  cfg["checks"][0]["factor"] = 0.0;
  CHECK(run("bench --config " + write("fail.json", cfg.dump())).code == 1);
  // flags override the file
  CHECK(run("bench --config " + pass + " --budget 3 --strategy mepe,random --seed 2").code == 0);
  CHECK(run("bench --config " + pass + " --budget 4,2").code == 2);
  CHECK(run("bench --config " + write("broken.json", "{")).code == 2);
  CHECK(run("bench --config /nonexistent.json").code == 2);
  json ext = cfg;
  ext.erase("scenario");
  ext["formula"] = "alw[0,1] (clamp(d, 0, 1) <= -0.5)";
  ext["domain"] = {{"dimensions", {{{"name", "u"}, {"lo", 0}, {"hi", 1}}}}};
  ext["blackbox"] = {{"command", std::string(FAKE_SIMULATOR) + " crash"}, {"timeout_s", 2}};
  ext["checks"] = json::array();
  // every ground-truth point fails, so nothing can be scored
  CHECK(run("bench --config " + write("ext.json", ext.dump())).code == 3);
}
