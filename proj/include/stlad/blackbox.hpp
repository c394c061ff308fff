#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stlad/design.hpp"
#include "stlad/stl.hpp"

namespace stlad {

/// The system under test: maps an environment point to a trajectory.
class BlackBox {
 public:
  virtual ~BlackBox() = default;
  virtual Trace evaluate(std::span<const double> x) = 0;
  virtual std::string describe() const = 0;
};

enum class BuiltinKind { ReachArc, PickMass, SlideShifted };

const char* to_string(BuiltinKind kind);
BuiltinKind builtin_kind_from_string(const std::string& id);

/// Reach: gripper approaching a cube on a table. x = (cube x, cube y) in metres
/// relative to the robot base. For unreachable targets (close to the base or
/// past the arm's reach) the gripper stalls where its path leaves the
/// reachable annulus.
Trace builtin_reach_arc(std::span<const double> x);

/// Pick-and-place of a cube of mass m grams in [20, 70]. Heavier cubes slip
/// out of the grasp at earlier stages of the carry; from 60 g the cube
/// cannot be lifted.
Trace builtin_pick_mass(double mass_grams);

/// Puck slide on a low-friction table. x = goal position (x, y) in metres.
/// Goals on the right overshoot; goals roughly aligned with the puck but far
/// away also overshoot without recovery.
Trace builtin_slide_shifted(std::span<const double> x);

/// Deterministic closed-form trajectory generator.
class BuiltinBlackBox final : public BlackBox {
 public:
  explicit BuiltinBlackBox(BuiltinKind kind) : kind_(kind) {}
  Trace evaluate(std::span<const double> x) override;
  std::string describe() const override;
  BuiltinKind kind() const { return kind_; }

 private:
  BuiltinKind kind_;
};

/// Child process speaking line-delimited JSON over stdin/stdout.
///
/// On start the child writes a handshake line {"v": 1, ...}. Each request is
/// {"id": n, "x": [...]}; the reply is {"id": n, "dt": s, "channels": {...}}
/// or {"id": n, "error": "..."}. One request is in flight at a time. After a
/// crash or timeout the child is killed and respawned on the next call.
class ExternalBlackBox final : public BlackBox {
 public:
  static constexpr int kProtocolVersion = 1;

  ExternalBlackBox(std::string command, std::chrono::milliseconds timeout);
  ~ExternalBlackBox() override;
  ExternalBlackBox(const ExternalBlackBox&) = delete;
  ExternalBlackBox& operator=(const ExternalBlackBox&) = delete;

  Trace evaluate(std::span<const double> x) override;
  std::string describe() const override;

  /// Spawns the child and checks its handshake unless it is already running.
  void start();
  /// Handshake object from the most recent spawn.
  const nlohmann::json& handshake() const { return handshake_; }

 private:
  void spawn();
  void kill_child();
  std::string read_line(std::chrono::steady_clock::time_point deadline);
  void write_line(const std::string& line);

  std::string command_;
  std::chrono::milliseconds timeout_;
  int pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
  std::uint64_t next_id_ = 1;
  nlohmann::json handshake_;
};

/// Parses an external reply into a Trace, enforcing the protocol rules.
Trace decode_reply(const std::string& line, std::uint64_t expected_id);

/// Benchmark scenario: formula, domain and black-box bundled together.
struct Scenario {
  std::string id;
  std::string formula_text;
  Domain domain;
  BuiltinKind blackbox;
};

Scenario builtin_scenario(const std::string& id);
std::vector<std::string> builtin_scenario_ids();

}  // namespace stlad
