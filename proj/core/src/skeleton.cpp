#include "hforge/skeleton.hpp"

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "hforge/error.hpp"
#include "hforge/seed.hpp"

extern char** environ;

namespace hforge {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Distances below this are treated as exact intersections by the outlier pass.
constexpr double kOutlierFloor = 1e-12;

struct ViewResult {
  bool ok = false;
  std::vector<Detection2D> detections;
};

double median(std::vector<double> values) {
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double m = values[mid];
  if (values.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

JointEstimate triangulate_joint(const std::vector<Ray>& rays, double outlier_k) {
  JointEstimate est;
  if (rays.size() < 2) return est;
  LineFit fit;
  try {
    fit = nearest_point_to_lines(rays);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateConfiguration) throw;
    return est;
  }
  est.position = fit.point;
  est.rms_residual = fit.rms_residual;
  est.supporting_views = static_cast<int>(rays.size());

  if (!std::isfinite(outlier_k)) return est;
  std::vector<double> dist(rays.size());
  for (std::size_t i = 0; i < rays.size(); ++i) dist[i] = rays[i].distance_to(fit.point);
  const double threshold = std::max(outlier_k * median(dist), kOutlierFloor);
  std::vector<Ray> kept;
  for (std::size_t i = 0; i < rays.size(); ++i) {
    if (dist[i] <= threshold) kept.push_back(rays[i]);
  }
  if (kept.size() == rays.size() || kept.size() < 2) return est;
  try {
    const LineFit refit = nearest_point_to_lines(kept);
    if (refit.rms_residual <= fit.rms_residual) {
      est.position = refit.point;
      est.rms_residual = refit.rms_residual;
      est.supporting_views = static_cast<int>(kept.size());
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateConfiguration) throw;
  }
  return est;
}

}  // namespace

void ViewRig::validate() const {
  intrinsics.validate();
  if (poses.size() < 2) throw Error(ErrorCode::InvalidArgument, "a view rig needs at least 2 poses");
  for (std::size_t i = 0; i < poses.size(); ++i) {
    for (std::size_t j = i + 1; j < poses.size(); ++j) {
      const CameraPose& a = poses[i];
      const CameraPose& b = poses[j];
      if (a.position == b.position && a.rotation().isApprox(b.rotation(), 1e-12)) {
        throw Error(ErrorCode::InvalidArgument,
                    "poses " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
      }
    }
  }
}

std::vector<Detection2D> keep_best_per_joint(std::span<const Detection2D> detections) {
  std::vector<Detection2D> best;
  for (const Detection2D& d : detections) {
    auto it = std::find_if(best.begin(), best.end(), [&](const Detection2D& b) { return b.joint_id == d.joint_id; });
    if (it == best.end()) {
      best.push_back(d);
    } else if (d.confidence > it->confidence) {
      *it = d;
    }
  }
  std::sort(best.begin(), best.end(),
            [](const Detection2D& a, const Detection2D& b) { return a.joint_id < b.joint_id; });
  return best;
}

ViewRig make_ring_rig(int n_views, double radius, const Vec3& target, double elevation,
                      const CameraIntrinsics& intr) {
  if (n_views < 2) throw Error(ErrorCode::InvalidArgument, "ring rig needs n_views >= 2");
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "ring rig needs radius > 0");
  if (!std::isfinite(elevation)) throw Error(ErrorCode::InvalidArgument, "elevation must be finite");
  ViewRig rig;
  rig.intrinsics = intr;
  rig.poses.reserve(static_cast<std::size_t>(n_views));
  for (int i = 0; i < n_views; ++i) {
    const double azimuth = kTwoPi * i / n_views;
    // Up is -Y, so a positive elevation lifts the camera to negative Y.
    const Vec3 offset(std::cos(elevation) * std::sin(azimuth), -std::sin(elevation),
                      std::cos(elevation) * std::cos(azimuth));
    CameraPose pose;
    pose.position = target + radius * offset;
    pose.yaw = azimuth + std::numbers::pi;
    pose.pitch = -elevation;
    rig.poses.push_back(pose);
  }
  return rig;
}

ViewRig default_rig(double model_height, int n_views) {
  CameraIntrinsics intr;
  intr.width = 512;
  intr.height = 512;
  intr.fx = intr.fy = 500.0;
  intr.cx = intr.cy = 256.0;
  return make_ring_rig(n_views, 1.5 * model_height, Vec3(0.0, -0.5 * model_height, 0.0), 0.0, intr);
}

JointSet3D estimate_skeleton(const Mesh& mesh, const ViewRig& rig, Detector& detector,
                             const SkeletonConfig& cfg) {
  rig.validate();
  const std::size_t n = rig.poses.size();
  std::vector<ViewResult> views(n);
  const bool render = detector.needs_image();
  const std::array<std::uint8_t, 3> background = cfg.render.background.value_or(std::array<std::uint8_t, 3>{0, 0, 0});

  auto process = [&](std::size_t i) {
    try {
      RgbImage image;
      if (render) image = render_mesh(mesh, rig.intrinsics, rig.poses[i], cfg.render).to_rgb(background);
      const ViewContext ctx{i, &rig.intrinsics, &rig.poses[i]};
      views[i].detections = keep_best_per_joint(detector.detect(image, ctx));
      views[i].ok = true;
    } catch (const Error& e) {
      spdlog::warn("skeleton: view {} skipped: {}", i, e.what());
    }
  };

  const int threads = std::clamp(cfg.threads, 1, static_cast<int>(n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) process(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) process(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  const auto usable = std::count_if(views.begin(), views.end(), [](const ViewResult& v) { return v.ok; });
  if (usable < 2) {
    throw Error(ErrorCode::AllViewsFailed, std::to_string(usable) + " of " + std::to_string(n) + " views usable");
  }

  // Rays are gathered in view order so the fold is independent of scheduling.
  std::array<std::vector<Ray>, coco::kNumKeypoints> rays;
  for (std::size_t i = 0; i < n; ++i) {
    if (!views[i].ok) continue;
    for (const Detection2D& d : views[i].detections) {
      if (d.joint_id < 0 || d.joint_id >= coco::kNumKeypoints) continue;
      if (d.confidence < cfg.min_confidence) continue;
      rays[d.joint_id].push_back(unproject(rig.intrinsics, rig.poses[i], d.u, d.v));
    }
  }
  JointSet3D joints;
  for (int s = 0; s < coco::kNumKeypoints; ++s) joints[s] = triangulate_joint(rays[s], cfg.outlier_k);
  return joints;
}

std::vector<Detection2D> oracle_detect(std::span<const Vec3> gt_joints, const CameraIntrinsics& intr,
                                       const CameraPose& pose, double noise_sigma, double drop_prob,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<Detection2D> out;
  const std::size_t count = std::min<std::size_t>(gt_joints.size(), coco::kNumKeypoints);
  for (std::size_t s = 0; s < count; ++s) {
    const double du = noise_sigma * noise(rng);
    const double dv = noise_sigma * noise(rng);
    const double roll = coin(rng);
    if (!gt_joints[s].allFinite()) throw Error(ErrorCode::InvalidArgument, "ground-truth joint is not finite");
    if (roll < drop_prob) continue;
    const Vec3 cam = world_to_camera(pose, gt_joints[s]);
    if (!(cam.z() > 0.0)) continue;
    const Projection p = project(intr, pose, gt_joints[s]);
    out.push_back(Detection2D{static_cast<int>(s), p.u + du, p.v + dv, 1.0});
  }
  return out;
}

OracleDetector::OracleDetector(std::vector<Vec3> gt_joints, double noise_sigma, double drop_prob,
                               std::uint64_t seed)
    : gt_joints_(std::move(gt_joints)), noise_sigma_(noise_sigma), drop_prob_(drop_prob), seed_(seed) {}

std::vector<Detection2D> OracleDetector::detect(const RgbImage&, const ViewContext& view) {
  if (!view.intrinsics || !view.pose) throw Error(ErrorCode::InvalidArgument, "oracle detector needs the view camera");
  return oracle_detect(gt_joints_, *view.intrinsics, *view.pose, noise_sigma_, drop_prob_,
                       derive_seed(seed_, view.index));
}

std::vector<Detection2D> parse_keypoint_exchange(std::istream& in, const std::string& source) {
  std::vector<Detection2D> raw;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::Protocol, source + ":" + std::to_string(line_no) + ": " + what + " in line '" + line + "'");
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string body = line.substr(0, line.find('#'));
    std::istringstream fields(body);
    std::string tok;
    std::vector<std::string> tokens;
    while (fields >> tok) tokens.push_back(tok);
    if (tokens.empty()) continue;
    if (tokens.size() != 4) fail("expected 'joint_id u v confidence'");
    Detection2D d;
    try {
      std::size_t used = 0;
      const long id = std::stol(tokens[0], &used);
      if (used != tokens[0].size()) fail("bad joint id");
      if (id < 0 || id >= coco::kNumKeypoints) fail("joint id " + tokens[0] + " out of range");
      d.joint_id = static_cast<int>(id);
      d.u = std::stod(tokens[1], &used);
      if (used != tokens[1].size()) fail("bad u");
      d.v = std::stod(tokens[2], &used);
      if (used != tokens[2].size()) fail("bad v");
      d.confidence = std::stod(tokens[3], &used);
      if (used != tokens[3].size()) fail("bad confidence");
    } catch (const std::logic_error&) {
      fail("unparsable number");
    }
    if (!std::isfinite(d.u) || !std::isfinite(d.v)) fail("non-finite coordinate");
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) fail("confidence outside [0, 1]");
    raw.push_back(d);
  }
  return keep_best_per_joint(raw);
}

std::vector<Detection2D> external_detect(const std::filesystem::path& image_path,
                                         const ExternalDetectorConfig& cfg) {
  if (cfg.command.empty()) throw Error(ErrorCode::Spawn, "no detector command configured");
  static std::atomic<std::uint64_t> counter{0};
  const auto exchange = std::filesystem::temp_directory_path() /
                        ("hforge-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + ".kp");
  std::filesystem::remove(exchange);

  std::vector<std::string> env_store;
  for (char** e = environ; *e; ++e) {
    if (std::strncmp(*e, "HFORGE_IMAGE=", 13) != 0) env_store.emplace_back(*e);
  }
  env_store.push_back("HFORGE_IMAGE=" + image_path.string());
  std::vector<char*> envp;
  for (auto& s : env_store) envp.push_back(s.data());
  envp.push_back(nullptr);

  std::string script = cfg.command + " \"$1\"";
  std::string arg0 = "sh";
  std::string flag = "-c";
  std::string exchange_arg = exchange.string();
  char* argv[] = {arg0.data(), flag.data(), script.data(), arg0.data(), exchange_arg.data(), nullptr};

  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, "/bin/sh", nullptr, &attr, argv, envp.data());
  posix_spawnattr_destroy(&attr);
  if (rc != 0) throw Error(ErrorCode::Spawn, "cannot start detector: " + std::string(std::strerror(rc)));

  const auto deadline = std::chrono::steady_clock::now() + cfg.timeout;
  int status = 0;
  for (;;) {
    const pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid) break;
    if (done < 0 && errno != EINTR) throw Error(ErrorCode::Spawn, "waitpid failed: " + std::string(std::strerror(errno)));
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      std::filesystem::remove(exchange);
      throw Error(ErrorCode::Timeout, "detector exceeded " + std::to_string(cfg.timeout.count()) + " ms");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    std::filesystem::remove(exchange);
    const std::string why = WIFEXITED(status) ? "exited with status " + std::to_string(WEXITSTATUS(status))
                                              : "terminated by a signal";
    throw Error(ErrorCode::Spawn, "detector " + why);
  }
  std::ifstream in(exchange);
  if (!in) throw Error(ErrorCode::Protocol, "detector produced no exchange file at " + exchange.string());
  auto detections = parse_keypoint_exchange(in, exchange.string());
  in.close();
  std::filesystem::remove(exchange);
  return detections;
}

ExternalDetector::ExternalDetector(ExternalDetectorConfig cfg) : cfg_(std::move(cfg)) {}

std::vector<Detection2D> ExternalDetector::detect(const RgbImage& image, const ViewContext& view) {
  std::unique_lock<std::mutex> lock(mutex_, std::defer_lock);
  if (!cfg_.reentrant) lock.lock();
  static std::atomic<std::uint64_t> counter{0};
  const auto path = std::filesystem::temp_directory_path() /
                    ("hforge-view-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" +
                     std::to_string(view.index) + ".png");
  write_png(path, image);
  try {
    auto out = external_detect(path, cfg_);
    std::filesystem::remove(path);
    return out;
  } catch (...) {
    std::filesystem::remove(path);
    throw;
  }
}

void write_skeleton_sidecar(const std::filesystem::path& path, const JointSet3D& joints) {
  nlohmann::ordered_json doc;
  doc["format"] = "hforge-skeleton";
  doc["version"] = 1;
  auto& list = doc["joints"] = nlohmann::ordered_json::array();
  for (int s = 0; s < coco::kNumKeypoints; ++s) {
    const JointEstimate& j = joints[s];
    nlohmann::ordered_json entry;
    entry["joint_id"] = s;
    entry["name"] = std::string(coco::kKeypointNames[s]);
    if (j.resolved()) {
      entry["xyz"] = {j.position->x(), j.position->y(), j.position->z()};
      entry["residual"] = j.rms_residual;
    } else {
      entry["xyz"] = nullptr;
      entry["residual"] = nullptr;
    }
    entry["views"] = j.supporting_views;
    list.push_back(std::move(entry));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << doc.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

JointSet3D read_skeleton_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open skeleton sidecar " + path.string());
  JointSet3D joints;
  try {
    const auto doc = nlohmann::json::parse(in);
    const auto& list = doc.at("joints");
    if (!list.is_array() || list.size() != coco::kNumKeypoints) {
      throw Error(ErrorCode::Parse, path.string() + ": expected " + std::to_string(coco::kNumKeypoints) + " joints");
    }
    std::array<bool, coco::kNumKeypoints> seen{};
    for (const auto& entry : list) {
      const int id = entry.at("joint_id").get<int>();
      if (id < 0 || id >= coco::kNumKeypoints || seen[id]) {
        throw Error(ErrorCode::Parse, path.string() + ": bad or duplicate joint_id " + std::to_string(id));
      }
      seen[id] = true;
      JointEstimate& j = joints[id];
      j.supporting_views = entry.at("views").get<int>();
      const auto& xyz = entry.at("xyz");
      if (!xyz.is_null()) {
        if (!xyz.is_array() || xyz.size() != 3) throw Error(ErrorCode::Parse, path.string() + ": xyz must have 3 numbers");
        j.position = Vec3(xyz[0].get<double>(), xyz[1].get<double>(), xyz[2].get<double>());
        j.rms_residual = entry.at("residual").get<double>();
        if (j.supporting_views < 2) {
          throw Error(ErrorCode::Validation, path.string() + ": resolved joint with fewer than 2 views");
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
  return joints;
}

}  // namespace hforge
