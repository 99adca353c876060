#include "dynfilter/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include <Eigen/SVD>
#include <json.hpp>

#include "dynfilter/error.hpp"

namespace dynfilter {
namespace {

std::string format_g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<Eigen::Vector3d> positions(const std::vector<PosePair>& pairs, bool estimate) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(estimate ? p.estimate.translation : p.ground_truth.translation);
  return out;
}

}  // namespace

Trajectory read_tum_trajectory(std::istream& in, const std::string& source_name) {
  Trajectory traj;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    double v[8];
    for (double& x : v) {
      if (!(fields >> x)) {
        throw Error(ErrorCode::ParseError, source_name + ":" + std::to_string(line_no) +
                                               ": expected 8 numbers");
      }
    }
    std::string extra;
    if (fields >> extra) {
      throw Error(ErrorCode::ParseError,
                  source_name + ":" + std::to_string(line_no) + ": trailing field '" + extra + "'");
    }
    Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    const double norm = q.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw Error(ErrorCode::ParseError,
                  source_name + ":" + std::to_string(line_no) + ": invalid quaternion");
    }
    if (std::abs(norm - 1.0) > 1e-9) q.normalize();
    PoseSE3 pose;
    pose.timestamp = v[0];
    pose.translation = Eigen::Vector3d(v[1], v[2], v[3]);
    pose.rotation = q;
    try {
      traj.push_back(pose);
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError,
                  source_name + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return traj;
}

Trajectory read_tum_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_tum_trajectory(in, path.string());
}

void write_tum_trajectory(const Trajectory& trajectory, std::ostream& out) {
  out << "# timestamp tx ty tz qx qy qz qw\n";
  for (const auto& p : trajectory) {
    const auto& t = p.translation;
    const auto& q = p.rotation;
    out << format_g17(p.timestamp) << ' ' << format_g17(t.x()) << ' ' << format_g17(t.y()) << ' '
        << format_g17(t.z()) << ' ' << format_g17(q.x()) << ' ' << format_g17(q.y()) << ' '
        << format_g17(q.z()) << ' ' << format_g17(q.w()) << '\n';
  }
}

void write_tum_trajectory(const Trajectory& trajectory, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write_tum_trajectory(trajectory, out);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::vector<PosePair> associate_timestamps(const Trajectory& estimate,
                                           const Trajectory& ground_truth, double max_dt) {
  struct Candidate {
    double dt;
    std::size_t e;
    std::size_t g;
  };
  std::vector<Candidate> candidates;
  const auto& gt = ground_truth.poses();
  for (std::size_t e = 0; e < estimate.size(); ++e) {
    const double ts = estimate[e].timestamp;
    auto it = std::lower_bound(gt.begin(), gt.end(), ts - max_dt,
                               [](const PoseSE3& p, double t) { return p.timestamp < t; });
    for (; it != gt.end() && it->timestamp <= ts + max_dt; ++it) {
      candidates.push_back({std::abs(it->timestamp - ts), e,
                            static_cast<std::size_t>(it - gt.begin())});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.dt, a.e, a.g) < std::tie(b.dt, b.e, b.g);
  });
  std::vector<bool> used_e(estimate.size(), false);
  std::vector<bool> used_g(gt.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> chosen;
  for (const auto& c : candidates) {
    if (used_e[c.e] || used_g[c.g]) continue;
    used_e[c.e] = used_g[c.g] = true;
    chosen.emplace_back(c.e, c.g);
  }
  if (chosen.empty()) {
    throw Error(ErrorCode::NoOverlap, "no estimate timestamp within " + format_g17(max_dt) +
                                          " s of a ground-truth timestamp");
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<PosePair> out;
  out.reserve(chosen.size());
  for (const auto& [e, g] : chosen) out.push_back({estimate[e], gt[g]});
  return out;
}

std::string to_string(AlignmentMode mode) {
  switch (mode) {
    case AlignmentMode::SE3: return "se3";
    case AlignmentMode::Sim3: return "sim3";
    case AlignmentMode::None: return "none";
  }
  return "?";
}

AlignmentMode parse_alignment_mode(const std::string& text) {
  if (text == "se3") return AlignmentMode::SE3;
  if (text == "sim3") return AlignmentMode::Sim3;
  if (text == "none") return AlignmentMode::None;
  throw Error(ErrorCode::ConfigError, "unknown alignment mode '" + text + "' (se3|sim3|none)");
}

AlignmentResult align(std::span<const Eigen::Vector3d> estimate,
                      std::span<const Eigen::Vector3d> ground_truth, AlignmentMode mode) {
  const std::size_t n = estimate.size();
  if (n != ground_truth.size()) {
    throw Error(ErrorCode::Degenerate, "alignment needs equally many estimate and ground-truth points");
  }
  const std::size_t needed = mode == AlignmentMode::Sim3 ? 3 : mode == AlignmentMode::SE3 ? 2 : 1;
  if (n < needed) {
    throw Error(ErrorCode::Degenerate, to_string(mode) + " alignment needs at least " +
                                           std::to_string(needed) + " pairs, got " +
                                           std::to_string(n));
  }

  AlignmentResult result;
  if (mode != AlignmentMode::None) {
    Eigen::Vector3d mu_e = Eigen::Vector3d::Zero();
    Eigen::Vector3d mu_g = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      mu_e += estimate[i];
      mu_g += ground_truth[i];
    }
    mu_e /= static_cast<double>(n);
    mu_g /= static_cast<double>(n);
    Eigen::Matrix3d sigma = Eigen::Matrix3d::Zero();
    double var_e = 0.0;
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector3d de = estimate[i] - mu_e;
      const Eigen::Vector3d dg = ground_truth[i] - mu_g;
      sigma += dg * de.transpose();
      var_e += de.squaredNorm();
      dot += dg.dot(de);
    }
    sigma /= static_cast<double>(n);
    var_e /= static_cast<double>(n);
    dot /= static_cast<double>(n);

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d d = svd.singularValues();
    if (d(0) <= 0.0 || d(1) <= 1e-12 * d(0)) {
      result.degenerate = true;
      result.rotation = Eigen::Matrix3d::Identity();
      if (mode == AlignmentMode::Sim3 && var_e > 0.0 && dot > 0.0) result.scale = dot / var_e;
    } else {
      Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
      if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s(2, 2) = -1.0;
      result.rotation = svd.matrixU() * s * svd.matrixV().transpose();
      if (mode == AlignmentMode::Sim3) {
        result.scale = (d.asDiagonal() * s).trace() / var_e;
      }
    }
    result.translation = mu_g - result.scale * result.rotation * mu_e;
  }

  result.residuals.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d aligned =
        result.scale * result.rotation * estimate[i] + result.translation;
    result.residuals.push_back((ground_truth[i] - aligned).norm());
  }
  return result;
}

AteResult ate(const Trajectory& estimate, const Trajectory& ground_truth, AlignmentMode mode,
              double max_dt) {
  const auto pairs = associate_timestamps(estimate, ground_truth, max_dt);
  const auto e = positions(pairs, true);
  const auto g = positions(pairs, false);
  AteResult result;
  result.mode = mode;
  result.n_pairs = pairs.size();
  result.alignment = align(e, g, mode);
  double sum = 0.0;
  for (const double r : result.alignment.residuals) sum += r * r;
  result.rmse = std::sqrt(sum / static_cast<double>(pairs.size()));
  for (const auto& p : pairs) result.timestamps.push_back(p.estimate.timestamp);
  return result;
}

double ate_rmse(const Trajectory& estimate, const Trajectory& ground_truth, AlignmentMode mode,
                double max_dt) {
  return ate(estimate, ground_truth, mode, max_dt).rmse;
}

std::string metrics_json(const AteResult& result) {
  nlohmann::ordered_json j;
  j["ate_rmse"] = result.rmse;
  j["n_pairs"] = result.n_pairs;
  j["mode"] = to_string(result.mode);
  const auto& a = result.alignment;
  nlohmann::ordered_json rotation = nlohmann::ordered_json::array();
  for (int r = 0; r < 3; ++r) {
    rotation.push_back({a.rotation(r, 0), a.rotation(r, 1), a.rotation(r, 2)});
  }
  j["alignment"] = {{"rotation", rotation},
                    {"translation", {a.translation.x(), a.translation.y(), a.translation.z()}},
                    {"scale", a.scale},
                    {"degenerate", a.degenerate}};
  return j.dump(2);
}

void write_residuals_csv(const AteResult& result, std::ostream& out) {
  out << "timestamp,residual\n";
  for (std::size_t i = 0; i < result.alignment.residuals.size(); ++i) {
    out << format_g17(result.timestamps[i]) << ',' << format_g17(result.alignment.residuals[i])
        << '\n';
  }
}

double ClassificationMetrics::precision() const {
  const std::size_t predicted = true_positives + false_positives;
  return predicted == 0 ? 1.0 : static_cast<double>(true_positives) / static_cast<double>(predicted);
}

double ClassificationMetrics::recall() const {
  const std::size_t actual = true_positives + false_negatives;
  return actual == 0 ? 1.0 : static_cast<double>(true_positives) / static_cast<double>(actual);
}

ClassificationMetrics& ClassificationMetrics::operator+=(const ClassificationMetrics& other) {
  true_positives += other.true_positives;
  false_positives += other.false_positives;
  true_negatives += other.true_negatives;
  false_negatives += other.false_negatives;
  return *this;
}

ClassificationMetrics classification_metrics(std::span<const KeypointVerdict> verdicts,
                                             const std::vector<bool>& dynamic) {
  if (verdicts.size() != dynamic.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(verdicts.size()) + " verdicts but " +
                                               std::to_string(dynamic.size()) + " labels");
  }
  ClassificationMetrics m;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    const bool predicted = verdicts[i].removed();
    if (predicted && dynamic[i]) ++m.true_positives;
    if (predicted && !dynamic[i]) ++m.false_positives;
    if (!predicted && dynamic[i]) ++m.false_negatives;
    if (!predicted && !dynamic[i]) ++m.true_negatives;
  }
  return m;
}

}  // namespace dynfilter
