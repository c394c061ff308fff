// Scripted external simulator for protocol tests.
// Usage: fake_simulator <mode>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <thread>

#include <json.hpp>

using nlohmann::json;

namespace {

void say(const std::string& s) {
  std::cout << s << "\n" << std::flush;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "constant";
  if (mode == "silent") {
    std::this_thread::sleep_for(std::chrono::seconds(30));
    return 0;
  }
  if (mode == "bad-handshake") {
    say(R"({"v": 2, "name": "future"})");
  } else if (mode == "garbage-handshake") {
    say("hello");
  } else {
    say(R"({"v": 1, "name": "fake"})");
  }

  std::string line;
  int served = 0;
  while (std::getline(std::cin, line)) {
    json req = json::parse(line);
    const auto id = req["id"].get<std::uint64_t>();
    const auto x = req["x"].get<std::vector<double>>();
    ++served;
    if (mode == "constant") {
      say(json{{"id", id}, {"dt", 0.5}, {"channels", {{"d", {0.2, 0.2, 0.2}}}}}.dump());
    } else if (mode == "echo") {
      // distance channel |x| repeated; crashes on the third request when x[0] < 0
      if (!x.empty() && x[0] < 0 && served >= 3) return 7;
      double n = 0;
      for (double v : x) n += v * v;
      say(json{{"id", id}, {"dt", 0.1}, {"channels", {{"d", {std::sqrt(n), std::sqrt(n)}}, {"x0", {x[0], x[0]}}}}}.dump());
    } else if (mode == "sleep") {
      std::this_thread::sleep_for(std::chrono::seconds(30));
    } else if (mode == "crash") {
      return 3;
    } else if (mode == "abort") {
      std::abort();
    } else if (mode == "malformed") {
      say("{\"id\": " + std::to_string(id) + ", \"dt\": 0.1, \"channels\": ");
    } else if (mode == "truncated") {
      std::cout << "{\"id\": " << id << ", \"dt\": 0.1, \"chan" << std::flush;
      return 0;
    } else if (mode == "nan") {
      say("{\"id\": " + std::to_string(id) + ", \"dt\": 0.1, \"channels\": {\"d\": [0.1, NaN]}}");
    } else if (mode == "null-sample") {
      say("{\"id\": " + std::to_string(id) + ", \"dt\": 0.1, \"channels\": {\"d\": [0.1, null]}}");
    } else if (mode == "wrong-length") {
      say(json{{"id", id}, {"dt", 0.1}, {"channels", {{"a", {1, 2, 3}}, {"b", {1, 2}}}}}.dump());
    } else if (mode == "no-dt") {
      say(json{{"id", id}, {"channels", {{"a", {1}}}}}.dump());
    } else if (mode == "wrong-id") {
      say(json{{"id", id + 1}, {"dt", 0.1}, {"channels", {{"a", {1}}}}}.dump());
    } else if (mode == "remote-error") {
      say(json{{"id", id}, {"error", "solver diverged"}}.dump());
    } else if (mode == "flaky") {
      // differs from one call to the next
      say(json{{"id", id}, {"dt", 0.1}, {"channels", {{"d", {0.01 * served}}}}}.dump());
    }
  }
  return 0;
}
