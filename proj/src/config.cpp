#include "hhm/config.hpp"

#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "hhm/errors.hpp"

namespace hhm {

namespace {

namespace fs = std::filesystem;

// A YAML node together with the path that reached it, for diagnostics.
struct Node {
  YAML::Node n;
  std::string path;
  const std::string* origin;

  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << *origin;
    if (n.IsDefined() && n.Mark().line >= 0) os << ":" << n.Mark().line + 1;
    os << ": " << (path.empty() ? "<root>" : path) << ": " << msg;
    throw ConfigError(os.str());
  }
  bool has(const std::string& key) const { return n.IsMap() && n[key].IsDefined() && !n[key].IsNull(); }
  Node operator[](const std::string& key) const {
    if (!n.IsMap()) fail("expected a mapping");
    return {n[key], path.empty() ? key : path + "." + key, origin};
  }
  Node operator[](std::size_t i) const { return {n[i], path + "[" + std::to_string(i) + "]", origin}; }
  Node need(const std::string& key) const {
    if (!has(key)) fail("missing field '" + key + "'");
    return (*this)[key];
  }
  std::size_t size() const { return n.IsSequence() ? n.size() : 0; }

  double num() const {
    try {
      return n.as<double>();
    } catch (const YAML::Exception&) {
      fail("expected a number");
    }
  }
  bool boolean() const {
    try {
      return n.as<bool>();
    } catch (const YAML::Exception&) {
      fail("expected true or false");
    }
  }
  std::string str() const {
    try {
      return n.as<std::string>();
    } catch (const YAML::Exception&) {
      fail("expected a string");
    }
  }
  int integer() const {
    try {
      return n.as<int>();
    } catch (const YAML::Exception&) {
      fail("expected an integer");
    }
  }
  Eigen::VectorXd vec(int len) const {
    if (!n.IsSequence() || static_cast<int>(n.size()) != len)
      fail("expected a list of " + std::to_string(len) + " numbers");
    Eigen::VectorXd v(len);
    for (int i = 0; i < len; ++i) v(i) = (*this)[i].num();
    return v;
  }
  //! A scalar broadcast to `len` entries, or a list of exactly `len`.
  Eigen::VectorXd vec_or_scalar(int len) const {
    if (n.IsScalar()) return Eigen::VectorXd::Constant(len, num());
    return vec(len);
  }
  std::array<bool, 6> flags6() const {
    std::array<bool, 6> out{};
    if (n.IsScalar()) {
      out.fill(boolean());
      return out;
    }
    if (!n.IsSequence() || n.size() != 6) fail("expected a boolean or a list of 6 booleans");
    for (std::size_t i = 0; i < 6; ++i) out[i] = (*this)[i].boolean();
    return out;
  }
  template <class T>
  void opt(const std::string& key, T& target) const;
};

template <>
void Node::opt<double>(const std::string& key, double& target) const {
  if (has(key)) target = (*this)[key].num();
}
template <>
void Node::opt<bool>(const std::string& key, bool& target) const {
  if (has(key)) target = (*this)[key].boolean();
}
template <>
void Node::opt<int>(const std::string& key, int& target) const {
  if (has(key)) target = (*this)[key].integer();
}

Vec3 vec3(const Node& n) { return n.vec(3); }
Vec6 vec6(const Node& n) { return n.vec_or_scalar(6); }

YAML::Node parse_text(const std::string& text, const std::string& origin) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(origin + ":" + std::to_string(e.mark.line + 1) + ": syntax error: " + e.msg);
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError(p.string() + ": cannot open file");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Transform6 transform(const Node& n) {
  Vec3 rpy = Vec3::Zero(), r = Vec3::Zero();
  if (n.has("rot")) rpy = vec3(n["rot"]);
  if (n.has("r")) r = vec3(n["r"]);
  return Transform6(euler_xyz(rpy), r);
}

InertialParams body(const Node& n) {
  if (n.has("phi")) return InertialParams::from_vector(n["phi"].vec(10));
  const double m = n.need("mass").num();
  if (!(m > 0.0)) n["mass"].fail("mass must be positive");
  return InertialParams::cuboid(m, vec3(n.need("size")), n.has("com") ? vec3(n["com"]) : Vec3::Zero());
}

void chain(const Node& n, ChainGeometry& g) {
  n.opt("L", g.L);
  n.opt("L1", g.L1);
  n.opt("x0", g.x0);
  n.opt("lc", g.lc);
  n.opt("angle_offset", g.angle_offset);
  n.opt("zeta_sign", g.zeta_sign);
  n.opt("stroke_min", g.stroke_min);
  n.opt("stroke_max", g.stroke_max);
}

ManipulatorModel model(const Node& n) {
  ManipulatorModel m;
  const Node chains = n.need("chains");
  if (chains.size() != 2) chains.fail("expected two chains");
  m.chain[0].angle_offset = kChain1Offset;
  m.chain[0].zeta_sign = -1.0;
  m.chain[1].angle_offset = kChain2Offset;
  for (std::size_t j = 0; j < 2; ++j) chain(chains[j], m.chain[j]);
  n.opt("r_p", m.ratios.r_p);
  if (n.has("r_w")) m.ratios.r_w = vec3(n["r_w"]);
  n.opt("rack_offset", m.rack_offset);
  const Node mounts = n.need("mounts");
  m.ground_to_rack = transform(mounts.need("ground_to_rack"));
  m.pillar_to_chain1 = transform(mounts.need("pillar_to_chain1"));
  m.boom1_to_chain2 = transform(mounts.need("boom1_to_chain2"));
  m.boom2_to_wrist = transform(mounts.need("boom2_to_wrist"));
  const Node wl = mounts.need("wrist_links");
  if (wl.size() != 3) wl.fail("expected three wrist links");
  for (std::size_t i = 0; i < 3; ++i) m.wrist_link[i] = transform(wl[i]);
  m.tool = transform(mounts.need("tool"));
  if (n.has("wrist_axis")) {
    const Eigen::VectorXd a = n["wrist_axis"].vec(3);
    for (int i = 0; i < 3; ++i) {
      m.wrist_axis[i] = static_cast<int>(a(i));
      if (a(i) != m.wrist_axis[i] || m.wrist_axis[i] < 0 || m.wrist_axis[i] > 2)
        n["wrist_axis"].fail("axes must be 0, 1 or 2");
    }
  }
  if (n.has("gravity")) m.gravity = vec3(n["gravity"]);
  if (n.has("theta_min")) m.theta_min = vec6(n["theta_min"]);
  if (n.has("theta_max")) m.theta_max = vec6(n["theta_max"]);
  const Node bodies = n.need("bodies");
  for (int b = 0; b < kBodyCount; ++b) m.inertia[b] = body(bodies.need(frame_name(b)));
  try {
    m.validate();
  } catch (const std::exception& e) {
    n.fail(e.what());
  }
  return m;
}

void actuator_fields(const Node& n, ActuatorParams& p) {
  n.opt("A_a", p.A_a);
  n.opt("A_b", p.A_b);
  n.opt("V0a", p.V0a);
  n.opt("V0b", p.V0b);
  n.opt("stroke", p.s);
  n.opt("beta", p.beta);
  n.opt("c_l", p.c_l);
  if (n.has("theta_v")) p.theta_v = n["theta_v"].vec_or_scalar(4);
  n.opt("p_s", p.p_s);
  n.opt("p_r", p.p_r);
  if (n.has("friction")) p.friction_phi = n["friction"].vec(7);
  if (n.has("friction_shape")) {
    const Node f = n["friction_shape"];
    f.opt("v_s", p.friction.v_s);
    f.opt("eps_v", p.friction.eps_v);
    f.opt("z_max", p.friction.z_max);
  }
  n.opt("x_offset", p.x_offset);
}

// `default` applies to every joint, `joints` (list of 6) overrides per joint.
template <class T, class F>
std::array<T, 6> per_joint(const Node& n, const T& seed, F&& apply) {
  std::array<T, 6> out;
  out.fill(seed);
  if (n.has("default"))
    for (auto& v : out) apply(n["default"], v);
  if (n.has("joints")) {
    const Node j = n["joints"];
    if (j.size() != 6) j.fail("expected a list of 6 entries");
    for (std::size_t k = 0; k < 6; ++k) apply(j[k], out[k]);
  }
  return out;
}

std::array<ActuatorParams, 6> actuators(const Node& n) {
  auto out = per_joint(n, ActuatorParams(), actuator_fields);
  for (int k = 0; k < 6; ++k) {
    try {
      out[k].validate();
    } catch (const std::exception& e) {
      (n.has("joints") ? n["joints"][k] : n).fail(e.what());
    }
  }
  return out;
}

void db_fields(const Node& n, DbParams& p) {
  n.opt("m_d", p.m_d);
  n.opt("b_r", p.b_r);
  n.opt("b_l", p.b_l);
  n.opt("k_b", p.k_b);
  n.opt("B_r", p.B_r);
  n.opt("B_l", p.B_l);
}

struct GainSpec {
  ActuatorGains g;
  bool rbf_rate_set = false, rbf_bias_rate_set = false;
};

void actuator_gain_fields(const Node& n, ActuatorGains& g) {
  n.opt("k_f", g.k_f);
  n.opt("k_x", g.k_x);
  if (n.has("gamma_f")) g.gamma_f = n["gamma_f"].vec_or_scalar(7);
  n.opt("gamma_f0", g.gamma_f0);
  if (n.has("gamma_v")) g.gamma_v = n["gamma_v"].vec_or_scalar(4);
  n.opt("gamma_v0", g.gamma_v0);
  if (n.has("gamma_d")) g.gamma_d = n["gamma_d"].vec_or_scalar(4);
  n.opt("gamma_d0", g.gamma_d0);
  n.opt("delta", g.delta);
  n.opt("delta0", g.delta0);
  if (n.has("rbf")) {
    const Node r = n["rbf"];
    r.opt("delta_a", g.rbf.delta_a);
    r.opt("delta_a0", g.rbf.delta_a0);
    r.opt("bar_delta", g.rbf.bar_delta);
    r.opt("bar_delta0", g.rbf.bar_delta0);
  }
}

constexpr double kRbfRateFactor = 0.015;
constexpr double kRbfBiasRateFactor = 0.005;

struct ActuatorNetSpec {
  int nodes = 12;
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(5);
};

void controller(const Node& n, ControllerConfig& c) {
  if (n.has("mode")) {
    try {
      c.mode = parse_mode(n["mode"].str());
    } catch (const ConfigError& e) {
      n["mode"].fail(e.what());
    }
  }
  if (n.has("required")) {
    const Node r = n["required"];
    r.opt("lambda", c.required.lambda);
    if (r.has("lambda_x")) {
      const Eigen::VectorXd lx = r["lambda_x"].vec_or_scalar(2);
      c.required.lambda_x[0] = lx(0);
      c.required.lambda_x[1] = lx(1);
    }
    if (r.has("sigma")) c.required.sigma = r["sigma"].vec_or_scalar(3);
  }
  if (n.has("K_A")) {
    const Node k = n["K_A"];
    if (k.n.IsScalar()) {
      for (auto& K : c.K_A) K = k.num() * Mat6::Identity();
    } else if (k.n.IsMap()) {
      double base = 50.0;
      k.opt("default", base);
      for (auto& K : c.K_A) K = base * Mat6::Identity();
      for (int b = 0; b < kBodyCount; ++b)
        if (k.has(frame_name(b))) c.K_A[b] = Eigen::VectorXd(k[frame_name(b)].vec_or_scalar(6)).asDiagonal();
    } else {
      k.fail("expected a number or a mapping of body names");
    }
  }
  n.opt("gamma", c.gamma);
  n.opt("gamma0", c.gamma0);
  n.opt("rbf_on", c.rbf_on);
  n.opt("db_on", c.db_on);
  if (n.has("inverse_form")) {
    const std::string f = n["inverse_form"].str();
    if (f == "smooth") c.inverse_form = InverseForm::Smooth;
    else if (f == "filtered") c.inverse_form = InverseForm::Filtered;
    else n["inverse_form"].fail("expected 'smooth' or 'filtered'");
  }
  if (n.has("db_inverse")) {
    const Node d = n["db_inverse"];
    d.opt("alpha", c.db_inverse.alpha);
    d.opt("kappa0", c.db_inverse.kappa0);
    d.opt("x0", c.db_inverse.x0);
    d.opt("c_floor", c.db_inverse.c_floor);
    d.opt("c_ceiling", c.db_inverse.c_ceiling);
    d.opt("offset_limit", c.db_inverse.offset_limit);
  }
  if (n.has("rigid_rbf")) {
    const Node r = n["rigid_rbf"];
    r.opt("nodes", c.rigid_nodes);
    r.opt("width", c.rigid_width);
    auto gains = [](const Node& g, RigidRbfGains& out) {
      g.opt("gamma", out.gamma);
      g.opt("tau0", out.tau0);
      g.opt("pi", out.pi);
      g.opt("pi0", out.pi0);
    };
    for (auto& g : c.rigid_rbf) gains(r, g);
    if (r.has("bodies")) {
      const Node bodies = r["bodies"];
      for (const auto& kv : bodies.n) {
        const std::string name = kv.first.as<std::string>();
        int b = 0;
        while (b < kBodyCount && name != frame_name(b)) ++b;
        if (b == kBodyCount) bodies.fail("unknown body '" + name + "'");
        gains(bodies[name], c.rigid_rbf[b]);
      }
    }
    if (r.has("input_scale")) c.rigid_input_scale = r["input_scale"].vec_or_scalar(18);
  }
  n.opt("diff_cutoff_hz", c.diff_cutoff_hz);
  n.opt("u_max", c.u_max);
  if (n.has("pd")) {
    const Node p = n["pd"];
    if (p.has("kp")) c.pd_kp = vec6(p["kp"]);
    if (p.has("kd")) c.pd_kd = vec6(p["kd"]);
  }
  if (n.has("actuator_width")) c.actuator_width = n["actuator_width"].num();
  if (n.has("actuators")) {
    const auto specs = per_joint(n["actuators"], GainSpec(), [](const Node& a, GainSpec& s) {
      actuator_gain_fields(a, s.g);
      if (a.has("rbf")) {
        s.rbf_rate_set |= a["rbf"].has("delta_a");
        s.rbf_bias_rate_set |= a["rbf"].has("bar_delta");
      }
    });
    for (int k = 0; k < 6; ++k) {
      c.actuator[k] = specs[k].g;
      // Network rates default to fixed multiples of k_x k_f, the scale of the force loop.
      ActuatorGains& g = c.actuator[k];
      if (!specs[k].rbf_rate_set) g.rbf.delta_a = kRbfRateFactor * g.k_x * g.k_f;
      if (!specs[k].rbf_bias_rate_set) g.rbf.bar_delta = kRbfBiasRateFactor * g.k_x * g.k_f;
    }
    const auto nets = per_joint(n["actuators"], ActuatorNetSpec(), [](const Node& a, ActuatorNetSpec& s) {
      a.opt("nodes", s.nodes);
      if (a.has("input_scale")) s.scale = a["input_scale"].vec_or_scalar(5);
    });
    for (int k = 0; k < 6; ++k) {
      c.actuator_nodes[k] = nets[k].nodes;
      c.actuator_input_scale[k] = nets[k].scale;
    }
  }
  try {
    c.validate();
  } catch (const std::exception& e) {
    n.fail(e.what());
  }
}

ReferenceSpec reference(const Node& n) {
  ReferenceSpec r;
  const std::string kind = n.has("kind") ? n["kind"].str() : "joint";
  const Node wps = n.need("waypoints");
  if (wps.size() == 0) wps.fail("expected a non-empty list of waypoints");
  auto timing = [](const Node& w, double& move, double& hold) {
    move = w.need("move").num();
    hold = w.has("hold") ? w["hold"].num() : 0.0;
    if (!(move > 0.0)) w["move"].fail("move time must be positive");
    if (hold < 0.0) w["hold"].fail("hold time must be nonnegative");
  };
  if (kind == "joint") {
    r.kind = ReferenceSpec::Kind::Joint;
    for (std::size_t i = 0; i < wps.size(); ++i) {
      JointWaypoint w;
      w.theta = vec6(wps[i].need("theta"));
      timing(wps[i], w.move, w.hold);
      r.joint.push_back(w);
    }
  } else if (kind == "cartesian") {
    r.kind = ReferenceSpec::Kind::Cartesian;
    n.opt("k_pose", r.k_pose);
    for (std::size_t i = 0; i < wps.size(); ++i) {
      CartesianWaypoint w;
      w.position = vec3(wps[i].need("position"));
      if (wps[i].has("euler_xyz")) w.euler_xyz = vec3(wps[i]["euler_xyz"]);
      timing(wps[i], w.move, w.hold);
      r.cartesian.push_back(w);
    }
  } else {
    n["kind"].fail("expected 'joint' or 'cartesian'");
  }
  return r;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const fs::path& base, const std::string& origin) {
  const YAML::Node root_yaml = parse_text(text, origin);
  const Node root{root_yaml, "", &origin};
  if (!root.n.IsMap()) root.fail("expected a mapping at the top level");
  Scenario sc;

  const Node fx = root.need("fixture");
  const fs::path fixture_path = base / fx.str();
  std::string fixture_text;
  try {
    fixture_text = read_file(fixture_path);
  } catch (const ConfigError& e) {
    fx.fail(e.what());
  }
  const std::string fixture_origin = fixture_path.string();
  const YAML::Node fixture_yaml = parse_text(fixture_text, fixture_origin);
  const Node fixture{fixture_yaml, "", &fixture_origin};
  sc.model = model(fixture.need("model"));
  sc.actuators = actuators(fixture.need("actuators"));

  if (root.has("name")) sc.name = root["name"].str();
  if (root.has("seed")) {
    const double s = root["seed"].num();
    if (s < 0 || s != std::floor(s)) root["seed"].fail("seed must be a nonnegative integer");
    sc.seed = static_cast<std::uint64_t>(s);
  }
  root.opt("duration", sc.duration);
  root.opt("dt_plant", sc.dt_plant);
  root.opt("dt_control", sc.dt_control);
  root.opt("track_nu", sc.track_nu);
  root.opt("pb0_fraction", sc.pb0_fraction);
  root.opt("auto_offset", sc.auto_offset);
  if (root.has("free")) sc.free = root["free"].flags6();
  if (root.has("theta0")) sc.theta0 = vec6(root["theta0"]);
  if (root.has("init")) {
    const Node i = root["init"];
    i.opt("phi_scale", sc.init.phi_scale);
    i.opt("theta_v_scale", sc.init.theta_v_scale);
    i.opt("theta_d_scale", sc.init.theta_d_scale);
    i.opt("friction_scale", sc.init.friction_scale);
  }
  if (root.has("constraint")) {
    const Node c = root["constraint"];
    if (c.has("enabled")) sc.db_enabled = c["enabled"].flags6();
    if (c.has("backlash_model")) {
      const std::string m = c["backlash_model"].str();
      if (m == "literal") sc.backlash = BacklashModel::Literal;
      else if (m == "engaged") sc.backlash = BacklashModel::Engaged;
      else c["backlash_model"].fail("expected 'literal' or 'engaged'");
    }
    if (c.has("params")) sc.db = per_joint(c["params"], DbParams(), db_fields);
    for (int k = 0; k < 6; ++k) {
      if (!sc.db_enabled[k]) continue;
      try {
        sc.db[k].validate();
      } catch (const std::exception& e) {
        c["params"].fail("joint " + std::to_string(k + 1) + ": " + e.what());
      }
    }
  }
  if (root.has("controller")) controller(root["controller"], sc.controller);
  if (root.has("mode")) {
    try {
      sc.controller.mode = parse_mode(root["mode"].str());
    } catch (const ConfigError& e) {
      root["mode"].fail(e.what());
    }
  }
  sc.reference = reference(root.need("reference"));
  return sc;
}

Scenario load_scenario(const fs::path& path) {
  return parse_scenario(read_file(path), path.parent_path(), path.string());
}

std::vector<std::string> validate_scenario_file(const fs::path& path) {
  std::vector<std::string> problems;
  try {
    prepared(load_scenario(path));
  } catch (const std::exception& e) {
    problems.emplace_back(e.what());
  }
  return problems;
}

}  // namespace hhm
