#include "pianomime/hand_model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace pianomime {
namespace {

Eigen::Matrix3d rot_y(double a) {
  Eigen::Matrix3d R;
  R << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return R;
}

Eigen::Matrix3d axis_rotation(const Eigen::Vector3d& axis, double a) {
  return Eigen::AngleAxisd(a, axis).toRotationMatrix();
}

JointCategory classify(const JointSpec& j) {
  if (j.type == JointType::prismatic)
    return std::abs(j.axis.z()) > 0.5 ? JointCategory::vert_slide : JointCategory::lat_slide;
  return std::abs(j.axis.z()) > 0.5 ? JointCategory::abduction : JointCategory::flexion;
}

// Walks the kinematic chain of one finger, invoking visit(world_axis,
// world_joint_pos, type, q_index) for every joint on the chain, and returns
// the world fingertip position. q_index counts from the hand's first joint.
template <class Visit>
Eigen::Vector3d walk_chain(const HandSpec& hand, const FingerSpec& finger, int finger_index,
                           const Eigen::VectorXd& q, int q_base, Visit&& visit) {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d p = hand.base;

  int qi = q_base;
  for (const auto& j : hand.root_joints) {
    if (j.pre_pitch != 0.0) R = R * rot_y(j.pre_pitch);
    visit(R, p, j, qi);
    if (j.type == JointType::prismatic) {
      p += R * (j.axis * q[qi]);
    } else {
      R = R * axis_rotation(j.axis, q[qi]);
    }
    p += R * j.trans_after;
    ++qi;
  }

  // Skip the fingers preceding this one in the q layout.
  for (int f = 0; f < finger_index; ++f)
    qi += static_cast<int>(hand.fingers[static_cast<std::size_t>(f)].joints.size());

  p += R * finger.knuckle;
  for (const auto& j : finger.joints) {
    if (j.pre_pitch != 0.0) R = R * rot_y(j.pre_pitch);
    visit(R, p, j, qi);
    if (j.type == JointType::prismatic) {
      p += R * (j.axis * q[qi]);
    } else {
      R = R * axis_rotation(j.axis, q[qi]);
    }
    p += R * j.trans_after;
    ++qi;
  }
  return p;
}

void check_q(const HandModelSpec& spec, const Eigen::VectorXd& q) {
  if (q.size() != spec.total_dof())
    throw std::invalid_argument("configuration has " + std::to_string(q.size()) +
                                " entries, expected " + std::to_string(spec.total_dof()));
}

JointSpec revolute(const std::string& name, const Eigen::Vector3d& axis, double lo, double hi,
                   double pre_pitch = 0.0, const Eigen::Vector3d& after = Eigen::Vector3d::Zero()) {
  return JointSpec{name, JointType::revolute, axis, lo, hi, pre_pitch, after};
}

FingerSpec make_finger(const std::string& name, double kn_y, double l1, double l2, double l3) {
  FingerSpec f;
  f.name = name;
  f.knuckle = Eigen::Vector3d(0.02, kn_y, 0.0);
  f.joints.push_back(revolute("abd", Eigen::Vector3d::UnitZ(), -0.35, 0.35));
  // flex1 reaches back to -0.5 so hover poses above the near key edge stay
  // inside the limits; the proximal link mounts flat (no pre-pitch).
  f.joints.push_back(revolute("flex1", Eigen::Vector3d::UnitY(), -0.5, 1.7, 0.0,
                              Eigen::Vector3d(l1, 0, 0)));
  f.joints.push_back(revolute("flex2", Eigen::Vector3d::UnitY(), -0.1, 1.8, 0.0,
                              Eigen::Vector3d(l2, 0, 0)));
  f.joints.push_back(revolute("flex3", Eigen::Vector3d::UnitY(), -0.1, 1.5, 0.0,
                              Eigen::Vector3d(l3, 0, 0)));
  return f;
}

FingerSpec make_thumb(double kn_y) {
  FingerSpec f;
  f.name = "thumb";
  f.knuckle = Eigen::Vector3d(0.02, kn_y, 0.0);
  f.joints.push_back(revolute("abd", Eigen::Vector3d::UnitZ(), -0.8, 0.8));
  f.joints.push_back(revolute("flex1", Eigen::Vector3d::UnitY(), -0.5, 1.6, 0.0,
                              Eigen::Vector3d(0.036, 0, 0)));
  f.joints.push_back(revolute("roll", Eigen::Vector3d::UnitX(), -0.6, 0.6));
  f.joints.push_back(revolute("flex2", Eigen::Vector3d::UnitY(), -0.2, 1.6, 0.0,
                              Eigen::Vector3d(0.028, 0, 0)));
  f.joints.push_back(revolute("flex3", Eigen::Vector3d::UnitY(), -0.2, 1.3, 0.0,
                              Eigen::Vector3d(0.024, 0, 0)));
  return f;
}

HandSpec make_hand(const std::string& name, double base_y, bool mirror) {
  HandSpec h;
  h.name = name;
  h.base = Eigen::Vector3d(-0.02, base_y, 0.09);
  h.root_joints.push_back(
      JointSpec{"slide_lat", JointType::prismatic, Eigen::Vector3d::UnitY(), -0.6, 0.6, 0.0,
                Eigen::Vector3d::Zero()});
  h.root_joints.push_back(
      JointSpec{"slide_vert", JointType::prismatic, Eigen::Vector3d::UnitZ(), -0.04, 0.06, 0.0,
                Eigen::Vector3d::Zero()});

  // Thumb sits toward the other hand: high keys for the left hand, low keys
  // for the right.
  const double s = mirror ? -1.0 : 1.0;
  h.fingers.push_back(make_thumb(s * 0.047));
  h.fingers.push_back(make_finger("index", s * 0.0235, 0.048, 0.030, 0.024));
  h.fingers.push_back(make_finger("middle", 0.0, 0.052, 0.033, 0.026));
  h.fingers.push_back(make_finger("ring", -s * 0.0235, 0.048, 0.031, 0.024));
  h.fingers.push_back(make_finger("pinky", -s * 0.047, 0.040, 0.026, 0.021));
  return h;
}

nlohmann::json vec3_json(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

Eigen::Vector3d vec3_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::runtime_error("expected a 3-element array");
  return Eigen::Vector3d(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

nlohmann::json joint_json(const JointSpec& j) {
  nlohmann::json o;
  o["name"] = j.name;
  o["type"] = j.type == JointType::prismatic ? "prismatic" : "revolute";
  o["axis"] = vec3_json(j.axis);
  o["limits"] = {j.lo, j.hi};
  o["pre_pitch"] = j.pre_pitch;
  o["trans_after"] = vec3_json(j.trans_after);
  return o;
}

JointSpec joint_from(const nlohmann::json& o) {
  JointSpec j;
  j.name = o.at("name").get<std::string>();
  const std::string type = o.at("type").get<std::string>();
  if (type == "prismatic") j.type = JointType::prismatic;
  else if (type == "revolute") j.type = JointType::revolute;
  else throw std::runtime_error("unknown joint type: " + type);
  j.axis = vec3_from(o.at("axis"));
  j.lo = o.at("limits")[0].get<double>();
  j.hi = o.at("limits")[1].get<double>();
  j.pre_pitch = o.value("pre_pitch", 0.0);
  j.trans_after = o.contains("trans_after") ? vec3_from(o.at("trans_after")) : Eigen::Vector3d::Zero();
  return j;
}

}  // namespace

int HandSpec::dof() const {
  int n = static_cast<int>(root_joints.size());
  for (const auto& f : fingers) n += static_cast<int>(f.joints.size());
  return n;
}

std::vector<JointInfo> HandModelSpec::joint_infos() const {
  std::vector<JointInfo> infos;
  for (int h = 0; h < 2; ++h) {
    const HandSpec& hand = hands[static_cast<std::size_t>(h)];
    const std::string prefix = hand.name + ".";
    for (const auto& j : hand.root_joints)
      infos.push_back({h, -1, prefix + j.name, j.type, classify(j), j.lo, j.hi});
    for (int f = 0; f < static_cast<int>(hand.fingers.size()); ++f) {
      const FingerSpec& fg = hand.fingers[static_cast<std::size_t>(f)];
      for (const auto& j : fg.joints)
        infos.push_back({h, f, prefix + fg.name + "." + j.name, j.type, classify(j), j.lo, j.hi});
    }
  }
  return infos;
}

Eigen::VectorXd HandModelSpec::lower_limits() const {
  const auto infos = joint_infos();
  Eigen::VectorXd lo(total_dof());
  for (std::size_t i = 0; i < infos.size(); ++i) lo[static_cast<Eigen::Index>(i)] = infos[i].lo;
  lo[dof()] = 0.0;
  return lo;
}

Eigen::VectorXd HandModelSpec::upper_limits() const {
  const auto infos = joint_infos();
  Eigen::VectorXd hi(total_dof());
  for (std::size_t i = 0; i < infos.size(); ++i) hi[static_cast<Eigen::Index>(i)] = infos[i].hi;
  hi[dof()] = 1.0;
  return hi;
}

Eigen::VectorXd HandModelSpec::clamp(const Eigen::VectorXd& q) const {
  check_q(*this, q);
  return q.cwiseMax(lower_limits()).cwiseMin(upper_limits());
}

Eigen::VectorXd HandModelSpec::home() const {
  return clamp(Eigen::VectorXd::Zero(total_dof()));
}

void HandModelSpec::validate() const {
  for (const auto& hand : hands) {
    if (hand.fingers.size() != 5)
      throw std::runtime_error("hand '" + hand.name + "' must have 5 fingers");
    auto check_joint = [&](const JointSpec& j) {
      if (j.lo > j.hi)
        throw std::runtime_error("joint '" + j.name + "': lower limit exceeds upper");
      if (std::abs(j.axis.norm() - 1.0) > 1e-9)
        throw std::runtime_error("joint '" + j.name + "': axis must be unit length");
    };
    for (const auto& j : hand.root_joints) check_joint(j);
    for (const auto& f : hand.fingers)
      for (const auto& j : f.joints) check_joint(j);
  }
}

HandModelSpec HandModelSpec::default_spec() {
  HandModelSpec spec;
  spec.hands[0] = make_hand("L", 0.40, false);
  spec.hands[1] = make_hand("R", 0.66, true);
  return spec;
}

HandModelSpec HandModelSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  in >> j;
  HandModelSpec spec;
  const auto& hands = j.at("hands");
  if (!hands.is_array() || hands.size() != 2)
    throw std::runtime_error(path + ": 'hands' must be an array of two hands");
  for (std::size_t h = 0; h < 2; ++h) {
    const auto& jh = hands[h];
    HandSpec& hand = spec.hands[h];
    hand.name = jh.at("name").get<std::string>();
    hand.base = vec3_from(jh.at("base"));
    for (const auto& jj : jh.at("root_joints")) hand.root_joints.push_back(joint_from(jj));
    for (const auto& jf : jh.at("fingers")) {
      FingerSpec f;
      f.name = jf.at("name").get<std::string>();
      f.knuckle = vec3_from(jf.at("knuckle"));
      for (const auto& jj : jf.at("joints")) f.joints.push_back(joint_from(jj));
      hand.fingers.push_back(std::move(f));
    }
  }
  spec.validate();
  return spec;
}

void HandModelSpec::to_json_file(const std::string& path) const {
  nlohmann::json j;
  auto& hands = j["hands"] = nlohmann::json::array();
  for (const auto& hand : this->hands) {
    nlohmann::json jh;
    jh["name"] = hand.name;
    jh["base"] = vec3_json(hand.base);
    auto& roots = jh["root_joints"] = nlohmann::json::array();
    for (const auto& jj : hand.root_joints) roots.push_back(joint_json(jj));
    auto& fingers = jh["fingers"] = nlohmann::json::array();
    for (const auto& f : hand.fingers) {
      nlohmann::json jf;
      jf["name"] = f.name;
      jf["knuckle"] = vec3_json(f.knuckle);
      auto& joints = jf["joints"] = nlohmann::json::array();
      for (const auto& jj : f.joints) joints.push_back(joint_json(jj));
      fingers.push_back(std::move(jf));
    }
    hands.push_back(std::move(jh));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

std::array<Eigen::Vector3d, kNumFingers> forward_kinematics(const HandModelSpec& spec,
                                                            const Eigen::VectorXd& q) {
  check_q(spec, q);
  std::array<Eigen::Vector3d, kNumFingers> tips;
  int q_base = 0;
  for (int h = 0; h < 2; ++h) {
    const HandSpec& hand = spec.hands[static_cast<std::size_t>(h)];
    for (int f = 0; f < 5; ++f) {
      tips[static_cast<std::size_t>(h * 5 + f)] =
          walk_chain(hand, hand.fingers[static_cast<std::size_t>(f)], f, q, q_base,
                     [](const Eigen::Matrix3d&, const Eigen::Vector3d&, const JointSpec&, int) {});
    }
    q_base += hand.dof();
  }
  return tips;
}

Eigen::Vector3d fingertip_position(const HandModelSpec& spec, const Eigen::VectorXd& q,
                                   int finger) {
  check_q(spec, q);
  if (finger < 0 || finger >= kNumFingers)
    throw std::invalid_argument("finger index out of range");
  const int h = finger / 5;
  const HandSpec& hand = spec.hands[static_cast<std::size_t>(h)];
  const int q_base = h == 0 ? 0 : spec.hand_dof(0);
  return walk_chain(hand, hand.fingers[static_cast<std::size_t>(finger % 5)], finger % 5, q,
                    q_base,
                    [](const Eigen::Matrix3d&, const Eigen::Vector3d&, const JointSpec&, int) {});
}

Eigen::MatrixXd fingertip_jacobian(const HandModelSpec& spec, const Eigen::VectorXd& q,
                                   int finger) {
  check_q(spec, q);
  if (finger < 0 || finger >= kNumFingers)
    throw std::invalid_argument("finger index out of range");
  const int h = finger / 5;
  const HandSpec& hand = spec.hands[static_cast<std::size_t>(h)];
  const int q_base = h == 0 ? 0 : spec.hand_dof(0);

  struct ChainJoint {
    Eigen::Vector3d world_axis;
    Eigen::Vector3d world_pos;
    JointType type;
    int q_index;
  };
  std::vector<ChainJoint> chain;
  const Eigen::Vector3d tip =
      walk_chain(hand, hand.fingers[static_cast<std::size_t>(finger % 5)], finger % 5, q, q_base,
                 [&](const Eigen::Matrix3d& R, const Eigen::Vector3d& p, const JointSpec& j,
                     int qi) { chain.push_back({R * j.axis, p, j.type, qi}); });

  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3, spec.total_dof());
  for (const auto& cj : chain) {
    if (cj.type == JointType::prismatic) {
      J.col(cj.q_index) = cj.world_axis;
    } else {
      J.col(cj.q_index) = cj.world_axis.cross(tip - cj.world_pos);
    }
  }
  return J;
}

}  // namespace pianomime
