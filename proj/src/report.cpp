#include "hhm/report.hpp"

#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "hhm/errors.hpp"

namespace hhm {

namespace {

using nlohmann::json;

constexpr double kDeg = 180.0 / std::numbers::pi;

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string csv_text(const SimResult& r) {
  std::string out = fmt::format("# hhm-sim-csv schema={} scenario={} mode={} seed={}\n", kCsvSchemaVersion,
                                r.scenario, r.mode, r.seed);
  for (std::size_t c = 0; c < r.columns.size(); ++c) out += (c ? "," : "") + r.columns[c];
  out += '\n';
  const std::size_t n = r.columns.size();
  fmt::memory_buffer buf;
  for (std::size_t i = 0; i < r.rows(); ++i) {
    for (std::size_t c = 0; c < n; ++c) {
      if (c) buf.push_back(',');
      fmt::format_to(std::back_inserter(buf), "{:.17g}", r.data[i * n + c]);
    }
    buf.push_back('\n');
  }
  out.append(buf.data(), buf.size());
  return out;
}

void write_csv(const SimResult& r, const std::filesystem::path& path) { write_text(path, csv_text(r)); }

std::string metrics_json(const SimResult& r, const Metrics& m) {
  json j;
  j["schema"] = kMetricsSchemaVersion;
  j["scenario"] = r.scenario;
  j["mode"] = r.mode;
  j["seed"] = r.seed;
  j["rows"] = r.rows();
  j["aborted"] = r.abort_reason.has_value();
  if (r.abort_reason) j["abort_reason"] = *r.abort_reason;
  json joints = json::array();
  for (int k = 0; k < 6; ++k) {
    if (!m.free[k]) continue;
    const JointMetrics& jm = m.joints[k];
    joints.push_back({{"joint", k + 1},
                      {"e_max_deg", jm.e_max * kDeg},
                      {"e_rms_deg", jm.e_rms * kDeg},
                      {"u_rms_v", jm.u_rms},
                      {"e_steady_deg", jm.e_steady * kDeg}});
  }
  j["joints"] = joints;
  j["ee_error_max_m"] = m.ee_error_max;
  j["ee_rmse_m"] = m.ee_rmse;
  j["ee_speed_max_mps"] = m.ee_speed_max;
  if (m.rho) j["rho"] = *m.rho;
  else j["rho"] = nullptr;
  if (r.nu_bound > 0.0) j["nu"] = {{"nu0", r.nu0}, {"nu_max", r.nu_max}, {"bound", r.nu_bound}};
  return j.dump(2) + "\n";
}

void write_metrics(const SimResult& r, const Metrics& m, const std::filesystem::path& path) {
  write_text(path, metrics_json(r, m));
}

MetricsRecord read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": not JSON: " + e.what());
  }
  try {
    if (j.at("schema").get<int>() != kMetricsSchemaVersion)
      throw ConfigError(path.string() + ": metrics schema " + std::to_string(j.at("schema").get<int>()) +
                        ", expected " + std::to_string(kMetricsSchemaVersion));
    MetricsRecord rec;
    rec.label = j.at("scenario").get<std::string>() + "/" + j.at("mode").get<std::string>();
    rec.aborted = j.at("aborted").get<bool>();
    for (const auto& jm : j.at("joints")) {
      const int k = jm.at("joint").get<int>() - 1;
      if (k < 0 || k > 5) throw ConfigError(path.string() + ": joint index out of range");
      rec.free[k] = true;
      rec.joints[k].e_max = jm.at("e_max_deg").get<double>();
      rec.joints[k].e_rms = jm.at("e_rms_deg").get<double>();
      rec.joints[k].u_rms = jm.at("u_rms_v").get<double>();
      rec.joints[k].e_steady = jm.at("e_steady_deg").get<double>();
    }
    if (!j.at("rho").is_null()) rec.rho = j.at("rho").get<double>();
    return rec;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": schema mismatch: " + e.what());
  }
}

std::string compare_text(const std::vector<MetricsRecord>& recs) {
  std::string out = fmt::format("{:<22}", "metric");
  for (const auto& r : recs) out += fmt::format(" {:>18}", r.label.size() > 18 ? r.label.substr(r.label.size() - 18) : r.label);
  out += '\n';
  auto line = [&](const std::string& name, auto get) {
    out += fmt::format("{:<22}", name);
    for (const auto& r : recs) out += fmt::format(" {:>18}", get(r));
    out += '\n';
  };
  for (int k = 0; k < 6; ++k) {
    if (std::none_of(recs.begin(), recs.end(), [k](const MetricsRecord& r) { return r.free[k]; })) continue;
    auto field = [k](double JointMetrics::*f) {
      return [k, f](const MetricsRecord& r) { return r.free[k] ? fmt::format("{:.4f}", r.joints[k].*f) : std::string("-"); };
    };
    line(fmt::format("joint{} |e|max deg", k + 1), field(&JointMetrics::e_max));
    line(fmt::format("joint{} e_rms deg", k + 1), field(&JointMetrics::e_rms));
    line(fmt::format("joint{} u_rms V", k + 1), field(&JointMetrics::u_rms));
  }
  line("rho", [](const MetricsRecord& r) { return r.rho < 0 ? std::string("-") : fmt::format("{:.5f}", r.rho); });
  return out;
}

std::string compare_json(const std::vector<MetricsRecord>& recs) {
  json j = json::array();
  for (const auto& r : recs) {
    json c;
    c["label"] = r.label;
    c["aborted"] = r.aborted;
    json joints = json::array();
    for (int k = 0; k < 6; ++k)
      if (r.free[k])
        joints.push_back({{"joint", k + 1},
                          {"e_max_deg", r.joints[k].e_max},
                          {"e_rms_deg", r.joints[k].e_rms},
                          {"u_rms_v", r.joints[k].u_rms}});
    c["joints"] = joints;
    if (r.rho >= 0) c["rho"] = r.rho;
    else c["rho"] = nullptr;
    j.push_back(c);
  }
  return j.dump(2) + "\n";
}

}  // namespace hhm
