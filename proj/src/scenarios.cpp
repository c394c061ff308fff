#include "stlad/blackbox.hpp"
#include "stlad/error.hpp"

namespace stlad {

namespace {

Domain make_domain(std::vector<DomainDimension> dims) { return Domain(std::move(dims)); }

}  // namespace

std::vector<std::string> builtin_scenario_ids() { return {"reach-arc", "pick-mass", "slide-shifted"}; }

Scenario builtin_scenario(const std::string& id) {
  if (id == "reach-arc") {
    // Gripper within 0.05 m of the cube at some point in the first second.
    return {id, "ev[0,1] (clamp(norm(r.x - c.x, r.y - c.y, r.z - c.z), 0, 0.2) <= -0.5)",
            make_domain({{"cube_x", "m", UniformCdf{0.0, 0.8}}, {"cube_y", "m", UniformCdf{-0.6, 0.6}}}),
            BuiltinKind::ReachArc};
  }
  if (id == "pick-mass") {
    // While grasping keep the cube within 0.1 m of the gripper, until the
    // cube is within 0.05 m of the goal.
    return {id,
            "(grasp >= 0.5 -> clamp(norm(r.x - c.x, r.y - c.y, r.z - c.z), 0, 0.2) <= 0) until[0,30] "
            "(clamp(norm(c.x - g.x, c.y - g.y, c.z - g.z), 0, 0.5) <= -0.8)",
            make_domain({{"mass", "g", UniformCdf{20.0, 70.0}}}), BuiltinKind::PickMass};
  }
  if (id == "slide-shifted") {
    // Puck eventually reaches the goal (within 0.1 m) and stays for 2 s.
    return {id, "ev[0,2] (alw[0,2] (clamp(norm(p.x - g.x, p.y - g.y), 0, 0.2) <= 0))",
            make_domain({{"goal_x", "m", UniformCdf{0.0, 1.0}}, {"goal_y", "m", UniformCdf{0.4, 1.0}}}),
            BuiltinKind::SlideShifted};
  }
  throw Error(ErrorCode::Config, "unknown scenario '" + id + "'");
}

}  // namespace stlad
