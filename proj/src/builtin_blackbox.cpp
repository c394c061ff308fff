#include <algorithm>
#include <cmath>

#include "stlad/blackbox.hpp"
#include "stlad/error.hpp"

namespace stlad {

const char* to_string(BuiltinKind kind) {
  switch (kind) {
    case BuiltinKind::ReachArc: return "reach-arc";
    case BuiltinKind::PickMass: return "pick-mass";
    case BuiltinKind::SlideShifted: return "slide-shifted";
  }
  return "unknown";
}

BuiltinKind builtin_kind_from_string(const std::string& id) {
  if (id == "reach-arc") return BuiltinKind::ReachArc;
  if (id == "pick-mass") return BuiltinKind::PickMass;
  if (id == "slide-shifted") return BuiltinKind::SlideShifted;
  throw Error(ErrorCode::Config, "unknown builtin black-box '" + id + "'");
}

namespace {

struct Vec3 {
  double x, y, z;
};

Vec3 lerp(const Vec3& a, const Vec3& b, double s) {
  return {a.x + (b.x - a.x) * s, a.y + (b.y - a.y) * s, a.z + (b.z - a.z) * s};
}

double dist(const Vec3& a, const Vec3& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

// Smooth 0 -> 1 ramp over [t0, t1].
double ease(double t, double t0, double t1) {
  double s = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
  return s * s * (3.0 - 2.0 * s);
}

void require_dim(std::span<const double> x, std::size_t d, const char* who) {
  if (x.size() != d)
    throw Error(ErrorCode::InvalidArgument, std::string(who) + " expects a " + std::to_string(d) + "-dimensional input");
  for (double v : x)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, std::string(who) + " input is not finite");
}

void push(Trace::ChannelMap& ch, const char* prefix, const Vec3& v) {
  std::string p(prefix);
  ch[p + ".x"].push_back(v.x);
  ch[p + ".y"].push_back(v.y);
  ch[p + ".z"].push_back(v.z);
}

// Reach geometry (metres, robot base at the origin).
constexpr Vec3 kReachHome{0.35, 0.0, 0.30};
constexpr double kCubeHeight = 0.02;
constexpr double kDeadZoneRadius = 0.28;
constexpr double kMaxReach = 0.85;
constexpr double kReachSpeed = 0.8;  // m/s
constexpr double kReachDt = 0.05;
constexpr std::size_t kReachSteps = 31;

}  // namespace

Trace builtin_reach_arc(std::span<const double> x) {
  require_dim(x, 2, "reach-arc");
  const Vec3 cube{x[0], x[1], kCubeHeight};
  const double rho = std::hypot(x[0], x[1]);
  // Outside the reachable annulus the planner stops at its boundary, in the
  // direction of the cube, and never closes the remaining gap.
  Vec3 target = cube;
  if (rho < kDeadZoneRadius || rho > kMaxReach) {
    const double ux = rho > 0.0 ? x[0] / rho : 1.0, uy = rho > 0.0 ? x[1] / rho : 0.0;
    const double r = rho < kDeadZoneRadius ? kDeadZoneRadius : kMaxReach;
    target = {ux * r, uy * r, kCubeHeight};
  }
  const double travel = dist(kReachHome, target);
  Trace::ChannelMap ch;
  for (std::size_t k = 0; k < kReachSteps; ++k) {
    const double t = kReachDt * static_cast<double>(k);
    const Vec3 r = lerp(kReachHome, target, std::min(1.0, kReachSpeed * t / travel));
    push(ch, "r", r);
    push(ch, "c", cube);
  }
  return Trace(std::move(ch), kReachDt);
}

namespace {

constexpr double kPickDt = 0.5;
constexpr std::size_t kPickSteps = 71;
constexpr Vec3 kPickHome{0.0, 0.0, 0.30};
constexpr Vec3 kPickStart{0.0, 0.0, kCubeHeight};
constexpr Vec3 kPickGoal{0.5, 0.0, kCubeHeight};
constexpr double kGraspTime = 4.0;
constexpr double kReleaseTime = 24.0;

// Gripper path: approach, grasp, lift, carry, lower, release, retreat.
Vec3 pick_gripper(double t) {
  const Vec3 lifted{kPickStart.x, kPickStart.y, 0.20};
  const Vec3 above_goal{kPickGoal.x, kPickGoal.y, 0.20};
  const Vec3 retreat{kPickGoal.x, kPickGoal.y, 0.30};
  if (t < kGraspTime) return lerp(kPickHome, kPickStart, ease(t, 0.0, 3.5));
  if (t < 6.0) return lerp(kPickStart, lifted, ease(t, kGraspTime, 6.0));
  if (t < 22.0) return lerp(lifted, above_goal, ease(t, 6.0, 22.0));
  if (t < kReleaseTime) return lerp(above_goal, kPickGoal, ease(t, 22.0, 23.5));
  return lerp(kPickGoal, retreat, ease(t, kReleaseTime, 26.0));
}

// Time the cube slips out of the grasp; heavier cubes slip at earlier stages
// of the carry. Negative means it never slips.
double slip_time(double mass) {
  if (mass <= 35.0) return -1.0;
  if (mass <= 41.0) return 20.0;  // while lowering onto the goal
  if (mass <= 47.0) return 16.0;  // late carry
  if (mass <= 53.0) return 11.0;  // mid carry
  return 5.0;                     // during the lift
}

}  // namespace

Trace builtin_pick_mass(double mass) {
  if (!std::isfinite(mass)) throw Error(ErrorCode::InvalidArgument, "pick-mass input is not finite");
  const bool liftable = mass < 60.0;
  const double slip = slip_time(mass);
  Trace::ChannelMap ch;
  bool dropped = false;
  Vec3 cube = kPickStart;
  for (std::size_t k = 0; k < kPickSteps; ++k) {
    const double t = kPickDt * static_cast<double>(k);
    const Vec3 r = pick_gripper(t);
    const bool closed = t >= kGraspTime && t < kReleaseTime;
    if (closed && liftable && !dropped) {
      if (slip >= 0.0 && t >= slip) {
        dropped = true;
        cube = {r.x, r.y, kCubeHeight};
      } else {
        cube = r;
      }
    }
    push(ch, "r", r);
    push(ch, "c", cube);
    push(ch, "g", kPickGoal);
    ch["grasp"].push_back(closed ? 1.0 : 0.0);
  }
  return Trace(std::move(ch), kPickDt);
}

namespace {

constexpr double kSlideDt = 0.1;
constexpr std::size_t kSlideSteps = 51;
constexpr double kPuckX = 0.25, kPuckY = 0.10;

// Residual distance from the goal after the controller has finished.
double slide_offset(double gx, double gy) {
  const double right = 0.8 * std::max(0.0, gx - 0.6);
  const double dx = (gx - kPuckX) / 0.06, dy = (gy - 0.88) / 0.06;
  const double pocket = 0.35 * std::exp(-0.5 * (dx * dx + dy * dy));
  return 0.03 + right + pocket;
}

}  // namespace

Trace builtin_slide_shifted(std::span<const double> x) {
  require_dim(x, 2, "slide-shifted");
  const double gx = x[0], gy = x[1];
  double ux = gx - kPuckX, uy = gy - kPuckY;
  const double len = std::hypot(ux, uy);
  if (len > 0.0) {
    ux /= len;
    uy /= len;
  }
  const double settle = slide_offset(gx, gy);
  const double overshoot = settle + 0.12;
  Trace::ChannelMap ch;
  for (std::size_t k = 0; k < kSlideSteps; ++k) {
    const double t = kSlideDt * static_cast<double>(k);
    double px, py;
    if (t < 1.3) {
      // hit at t = 0.5, slide past the goal
      const double s = ease(t, 0.5, 1.3);
      px = kPuckX + (gx + ux * overshoot - kPuckX) * s;
      py = kPuckY + (gy + uy * overshoot - kPuckY) * s;
    } else {
      // corrective nudge back toward the goal
      const double off = overshoot + (settle - overshoot) * ease(t, 1.3, 1.8);
      px = gx + ux * off;
      py = gy + uy * off;
    }
    ch["p.x"].push_back(px);
    ch["p.y"].push_back(py);
    ch["g.x"].push_back(gx);
    ch["g.y"].push_back(gy);
  }
  return Trace(std::move(ch), kSlideDt);
}

Trace BuiltinBlackBox::evaluate(std::span<const double> x) {
  switch (kind_) {
    case BuiltinKind::ReachArc: return builtin_reach_arc(x);
    case BuiltinKind::PickMass:
      require_dim(x, 1, "pick-mass");
      return builtin_pick_mass(x[0]);
    case BuiltinKind::SlideShifted: return builtin_slide_shifted(x);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown builtin");
}

std::string BuiltinBlackBox::describe() const { return std::string("builtin:") + to_string(kind_); }

}  // namespace stlad
