#include "hhm/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hhm/errors.hpp"

namespace hhm {

namespace {

constexpr double kStrokeMargin = 0.02;  // fraction of the stroke kept clear at the reference waypoints

std::vector<std::string> column_names() {
  std::vector<std::string> c{"t"};
  for (const char* base : {"theta_d", "theta", "e", "f_p", "f_pr", "v", "u", "pa", "pb", "x"})
    for (int k = 1; k <= 6; ++k) c.push_back(std::string(base) + std::to_string(k));
  for (const char* base : {"db_c", "db_cbr", "db_cbl", "db_dr", "db_dl"})
    for (int k = 1; k <= 6; ++k) c.push_back(std::string(base) + std::to_string(k));
  for (const char* s : {"ee_x", "ee_y", "ee_z", "ee_dx", "ee_dy", "ee_dz", "ee_err", "ee_speed_d", "vpf_residual",
                        "phi_hat_norm", "rigid_w_norm", "act_est_norm", "act_w_norm", "nu"})
    c.emplace_back(s);
  return c;
}

bool finite(const PlantState& s) {
  return s.theta.allFinite() && s.theta_dot.allFinite() && s.pa.allFinite() && s.pb.allFinite() && s.z.allFinite();
}

PlantState axpy(const PlantState& s, double h, const PlantState& d) {
  PlantState o;
  o.theta = s.theta + h * d.theta;
  o.theta_dot = s.theta_dot + h * d.theta_dot;
  o.pa = s.pa + h * d.pa;
  o.pb = s.pb + h * d.pb;
  o.z = s.z + h * d.z;
  return o;
}

}  // namespace

int Scenario::substeps() const { return static_cast<int>(std::lround(dt_control / dt_plant)); }

void Scenario::validate() const {
  if (!(duration > 0.0)) throw ConfigError("scenario: duration must be positive");
  if (!(dt_plant > 0.0) || !(dt_control > 0.0)) throw ConfigError("scenario: time steps must be positive");
  const double ratio = dt_control / dt_plant;
  if (ratio < 1.0 - 1e-9 || std::abs(ratio - std::round(ratio)) > 1e-9)
    throw ConfigError("scenario: dt_control must be an integer multiple of dt_plant");
  if (!(init.phi_scale > 0.0) || !(init.theta_v_scale > 0.0) || !(init.theta_d_scale >= 0.0))
    throw ConfigError("scenario: estimate scales must be positive");
  if (!(pb0_fraction > 0.0 && pb0_fraction < 1.0)) throw ConfigError("scenario: pb0_fraction must lie in (0, 1)");
  if (std::none_of(free.begin(), free.end(), [](bool b) { return b; }))
    throw ConfigError("scenario: at least one joint must be free");
  model.validate();
  for (int k = 0; k < 6; ++k) {
    actuators[k].validate();
    if (db_enabled[k]) db[k].validate();
  }
  controller.validate();
  if (reference.kind == ReferenceSpec::Kind::Joint && reference.joint.empty())
    throw ConfigError("scenario: joint reference needs at least one waypoint");
  if (reference.kind == ReferenceSpec::Kind::Cartesian && reference.cartesian.empty())
    throw ConfigError("scenario: Cartesian reference needs at least one waypoint");
  for (const auto& w : reference.joint)
    if (!(w.move > 0.0) || w.hold < 0.0) throw ConfigError("scenario: waypoint move must be positive, hold nonnegative");
  for (const auto& w : reference.cartesian)
    if (!(w.move > 0.0) || w.hold < 0.0) throw ConfigError("scenario: waypoint move must be positive, hold nonnegative");
}

Plant::Plant(const ManipulatorModel& model, const std::array<ActuatorParams, 6>& actuators, std::array<bool, 6> free)
    : model_(&model), act_(&actuators), free_(free) {}

Vec6 Plant::strokes(const Vec6& theta) const {
  const Configuration c = configure(*model_, JointState::from(theta, Vec6::Zero()));
  Vec6 x = actuator_positions(*model_, c);
  for (int k = 0; k < 6; ++k) x(k) += (*act_)[k].x_offset;
  return x;
}

PlantState Plant::derivative(const PlantState& s, const Vec6& u) const {
  const ManipulatorModel& m = *model_;
  const Configuration c = configure(m, JointState::from(s.theta, s.theta_dot));
  const Vec6 x = actuator_positions(m, c);
  const Vec6 xd = actuator_rates(m, c, s.theta_dot);

  PlantState d;
  Vec6 f_c = Vec6::Zero();
  int n = 0;
  std::array<int, 6> idx{};
  for (int k = 0; k < 6; ++k) {
    if (!free_[k]) continue;
    idx[n++] = k;
    const ActuatorParams& p = (*act_)[k];
    const ActuatorState st{s.pa(k), s.pb(k), x(k) + p.x_offset, xd(k), s.z(k)};
    const ActuatorDerivative h = hydraulic_rates(st, u(k), p);
    d.pa(k) = h.pa;
    d.pb(k) = h.pb;
    d.z(k) = h.z;
    f_c(k) = piston_force(st, p) - friction_force(xd(k), s.z(k), p.friction_phi, p.friction);
  }

  // Locked joints stay put, so only the free columns of H enter.
  const Vec6 b = inverse_dynamics(m, c, s.theta_dot, Vec6::Zero(), SpatialForce(), true);
  Eigen::MatrixXd H(n, n);
  Eigen::VectorXd rhs(n);
  for (int j = 0; j < n; ++j) {
    const Vec6 col = inverse_dynamics(m, c, Vec6::Zero(), unit6(idx[j]), SpatialForce(), false);
    for (int i = 0; i < n; ++i) H(i, j) = col(idx[i]);
    rhs(j) = f_c(idx[j]) - b(idx[j]);
  }
  const Eigen::VectorXd acc = H.partialPivLu().solve(rhs);
  for (int j = 0; j < n; ++j) {
    d.theta(idx[j]) = s.theta_dot(idx[j]);
    d.theta_dot(idx[j]) = acc(j);
  }
  return d;
}

PlantState Plant::step(const PlantState& s, const Vec6& u, double dt) const {
  const PlantState k1 = derivative(s, u);
  const PlantState k2 = derivative(axpy(s, 0.5 * dt, k1), u);
  const PlantState k3 = derivative(axpy(s, 0.5 * dt, k2), u);
  const PlantState k4 = derivative(axpy(s, dt, k3), u);
  PlantState o = s;
  o.theta += dt / 6.0 * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta);
  o.theta_dot += dt / 6.0 * (k1.theta_dot + 2.0 * k2.theta_dot + 2.0 * k3.theta_dot + k4.theta_dot);
  o.pa += dt / 6.0 * (k1.pa + 2.0 * k2.pa + 2.0 * k3.pa + k4.pa);
  o.pb += dt / 6.0 * (k1.pb + 2.0 * k2.pb + 2.0 * k3.pb + k4.pb);
  o.z += dt / 6.0 * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z);
  for (int k = 0; k < 6; ++k) {
    const ActuatorParams& p = (*act_)[k];
    o.pa(k) = std::clamp(o.pa(k), p.p_r, p.p_s);
    o.pb(k) = std::clamp(o.pb(k), p.p_r, p.p_s);
  }
  return o;
}

PlantState Plant::equilibrium(const Vec6& theta, double pb_fraction) const {
  const Configuration c = configure(*model_, JointState::from(theta, Vec6::Zero()));
  const Vec6 g = inverse_dynamics(*model_, c, Vec6::Zero(), Vec6::Zero(), SpatialForce(), true);
  PlantState s;
  s.theta = theta;
  for (int k = 0; k < 6; ++k) {
    const ActuatorParams& p = (*act_)[k];
    double pb = std::max(pb_fraction * p.p_s, p.p_r);
    double pa = (g(k) + p.A_b * pb) / p.A_a;
    if (pa < p.p_r) {  // large pulling load: raise the rod side instead
      pa = p.p_r;
      pb = (p.A_a * pa - g(k)) / p.A_b;
    }
    s.pa(k) = std::clamp(pa, p.p_r, p.p_s);
    s.pb(k) = std::clamp(pb, p.p_r, p.p_s);
  }
  return s;
}

int SimResult::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
}

std::vector<double> SimResult::series(const std::string& name) const {
  const int c = column(name);
  if (c < 0) throw std::out_of_range("result: no column " + name);
  std::vector<double> out(rows());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = data[r * columns.size() + c];
  return out;
}

Scenario prepared(Scenario sc) {
  sc.controller.active = sc.free;
  sc.controller.seed = sc.seed;
  if (sc.auto_offset) {
    const Configuration c = configure(sc.model, JointState::from(sc.theta0, Vec6::Zero()));
    const Vec6 x = actuator_positions(sc.model, c);
    for (int k = 0; k < 6; ++k) sc.actuators[k].x_offset = 0.5 * sc.actuators[k].s - x(k);
  }
  sc.validate();
  const Plant plant(sc.model, sc.actuators, sc.free);
  auto check = [&](const Vec6& th, const std::string& where) {
    Vec6 x;
    try {
      x = plant.strokes(th);
    } catch (const std::exception& e) {
      throw ConfigError("scenario: " + where + " is not reachable: " + e.what());
    }
    for (int k = 0; k < 6; ++k) {
      const double s = sc.actuators[k].s;
      if (sc.free[k] && (x(k) < kStrokeMargin * s || x(k) > (1.0 - kStrokeMargin) * s))
        throw ConfigError("scenario: " + where + " puts actuator " + std::to_string(k + 1) + " outside its stroke");
    }
  };
  check(sc.theta0, "theta0");
  for (std::size_t i = 0; i < sc.reference.joint.size(); ++i) {
    Vec6 th = sc.reference.joint[i].theta;
    for (int k = 0; k < 6; ++k)
      if (!sc.free[k]) th(k) = sc.theta0(k);
    check(th, "waypoint " + std::to_string(i + 1));
  }
  return sc;
}

SimResult run(const Scenario& input) {
  const Scenario sc = prepared(input);
  const ManipulatorModel& m = sc.model;
  const Plant plant(m, sc.actuators, sc.free);

  InitialEstimates init;
  for (int b = 0; b < kBodyCount; ++b) init.inertia[b] = scaled_estimate(m.inertia[b], sc.init.phi_scale);
  for (int k = 0; k < 6; ++k) {
    const ActuatorParams& p = sc.actuators[k];
    init.actuator[k].theta_v = sc.init.theta_v_scale * p.theta_v;
    init.actuator[k].theta_d = sc.init.theta_d_scale * Vec4(1.0 / p.beta, p.A_a, p.A_b, p.c_l);
    init.actuator[k].theta_f = sc.init.friction_scale * p.friction_phi;
  }
  Controller ctl(m, sc.actuators, sc.controller, init);
  const PlantTruth truth{&sc.model, &sc.actuators, &sc.db};

  std::optional<JointPlan> jplan;
  std::optional<CartesianTracker> tracker;
  if (sc.reference.kind == ReferenceSpec::Kind::Joint) {
    std::vector<JointWaypoint> wps = sc.reference.joint;
    for (auto& w : wps)
      for (int k = 0; k < 6; ++k)
        if (!sc.free[k]) w.theta(k) = sc.theta0(k);
    jplan.emplace(sc.theta0, std::move(wps));
  } else {
    const Pose start = end_effector_pose(m, configure(m, JointState::from(sc.theta0, Vec6::Zero())));
    tracker.emplace(m, sc.theta0, CartesianPlan(start, sc.reference.cartesian), sc.reference.k_pose);
  }

  SimResult res;
  res.scenario = sc.name;
  res.mode = mode_name(sc.controller.mode);
  res.seed = sc.seed;
  res.dt = sc.dt_control;
  res.columns = column_names();
  res.free = sc.free;
  const long ticks = std::lround(sc.duration / sc.dt_control);
  res.data.reserve(static_cast<std::size_t>(ticks) * res.columns.size());

  PlantState s = plant.equilibrium(sc.theta0, sc.pb0_fraction);
  std::array<DbState, 6> dbs{};
  const int sub = sc.substeps();
  const double h = sc.dt_control / sub;
  std::vector<double> row(res.columns.size());
  bool nu_started = false;

  for (long i = 0; i < ticks; ++i) {
    const double t = i * sc.dt_control;
    try {
      JointReference ref = jplan ? jplan->at(t) : tracker->step(sc.dt_control);
      for (int k = 0; k < 6; ++k)
        if (!sc.free[k]) {
          ref.theta(k) = sc.theta0(k);
          ref.theta_dot(k) = 0.0;
        }
      const Observation obs{s.theta, s.theta_dot, s.pa, s.pb};
      const Vec6 v = ctl.tick(obs, ref, sc.dt_control);
      Vec6 u = v;
      for (int k = 0; k < 6; ++k)
        if (sc.db_enabled[k]) u(k) = compound_db(v(k), dbs[k], sc.db[k], sc.backlash);
      const Telemetry& tel = ctl.telemetry();

      const Configuration ca = configure(m, JointState::from(s.theta, Vec6::Zero()));
      const Configuration cd = configure(m, JointState::from(ref.theta, Vec6::Zero()));
      const Vec3 pe = ca.p_world[E], pd = cd.p_world[E];
      const Vec3 vd = (jacobian(m, cd) * ref.theta_dot).head<3>();
      const Vec6 x = plant.strokes(s.theta);
      double nu = 0.0;
      if (sc.track_nu && sc.controller.mode != ControlMode::PD) {
        const AccompanyingFunction a = ctl.accompanying(truth);
        nu = a.nu;
        if (!nu_started) {
          res.nu0 = nu;
          res.nu_bound = a.bound();
          nu_started = true;
        }
        res.nu_max = std::max(res.nu_max, nu);
      }

      std::size_t c = 0;
      row[c++] = t;
      const std::array<const Vec6*, 10> groups{&ref.theta, &s.theta, &tel.error, &tel.f_p, &tel.f_pr, &v, &u, &s.pa, &s.pb, &x};
      for (const Vec6* vec : groups)
        for (int k = 0; k < 6; ++k) row[c++] = (*vec)(k);
      for (int i = 0; i < 5; ++i)
        for (int k = 0; k < 6; ++k) row[c++] = ctl.actuator_estimates()[k].db.theta_hat(i);
      for (int a = 0; a < 3; ++a) row[c++] = pe(a);
      for (int a = 0; a < 3; ++a) row[c++] = pd(a);
      row[c++] = (pd - pe).norm();
      row[c++] = vd.norm();
      row[c++] = tel.vpf_residual;
      row[c++] = tel.phi_norm;
      row[c++] = tel.rigid_weight_norm;
      row[c++] = tel.actuator_estimate_norm;
      row[c++] = tel.actuator_weight_norm;
      row[c++] = nu;
      for (double value : row)
        if (!std::isfinite(value)) throw SimulationAbort("non-finite signal", i);
      res.data.insert(res.data.end(), row.begin(), row.end());

      for (int j = 0; j < sub; ++j) {
        s = plant.step(s, u, h);
        if (!finite(s)) throw SimulationAbort("non-finite plant state", i);
      }
      const Vec6 xs = plant.strokes(s.theta);
      for (int k = 0; k < 6; ++k)
        if (sc.free[k] && (xs(k) < 0.0 || xs(k) > sc.actuators[k].s))
          throw SimulationAbort("actuator " + std::to_string(k + 1) + " left its stroke", i);
    } catch (const SimulationAbort& e) {
      res.abort_reason = e.what();
      break;
    } catch (const std::exception& e) {
      res.abort_reason = SimulationAbort(e.what(), i).what();
      break;
    }
  }
  return res;
}

double rms(const std::vector<double>& x) {
  if (x.empty()) throw std::domain_error("rms of an empty series");
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

double max_abs(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

double rho(const std::vector<double>& error_norm, const std::vector<double>& speed) {
  const double vmax = max_abs(speed);
  if (!(vmax > 0.0)) throw std::domain_error("rho undefined: the reference never moves");
  return max_abs(error_norm) / vmax;
}

Metrics metrics(const SimResult& r, double steady_window) {
  if (r.rows() == 0) throw std::domain_error("metrics of an empty result");
  Metrics out;
  out.free = r.free;
  const std::vector<double> t = r.series("t");
  const double t_end = t.back();
  for (int k = 0; k < 6; ++k) {
    if (!r.free[k]) continue;
    const std::vector<double> e = r.series("e" + std::to_string(k + 1));
    const std::vector<double> v = r.series("v" + std::to_string(k + 1));
    JointMetrics& j = out.joints[k];
    j.e_max = max_abs(e);
    j.e_rms = rms(e);
    j.u_rms = rms(v);
    for (std::size_t i = 0; i < e.size(); ++i)
      if (t[i] >= t_end - steady_window) j.e_steady = std::max(j.e_steady, std::abs(e[i]));
  }
  const std::vector<double> err = r.series("ee_err"), speed = r.series("ee_speed_d");
  out.ee_error_max = max_abs(err);
  out.ee_rmse = rms(err);
  out.ee_speed_max = max_abs(speed);
  if (out.ee_speed_max > 0.0) out.rho = rho(err, speed);
  return out;
}

}  // namespace hhm
