#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "hforge/dataset.hpp"
#include "hforge/error.hpp"
#include "hforge/mesh.hpp"
#include "hforge/skeleton.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidationFailed = 1;
constexpr int kRuntimeFailed = 2;

using hforge::Error;
using hforge::ErrorCode;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Parse:
    case ErrorCode::Validation:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidFraction:
    case ErrorCode::DegenerateMesh:
      return kValidationFailed;
    default:
      return kRuntimeFailed;
  }
}

struct ValidateArgs {
  std::string manifest;
  std::string mesh;
  std::string up_axis = "+y";
};

int run_validate(const ValidateArgs& a) {
  if (a.mesh.empty() == a.manifest.empty()) {
    std::cerr << "validate: give either a manifest or --mesh\n";
    return kValidationFailed;
  }
  if (!a.mesh.empty()) {
    const hforge::Mesh mesh = hforge::reorient_up(hforge::load_mesh(a.mesh), hforge::parse_up_axis(a.up_axis));
    const hforge::MeshReport report = hforge::inspect_mesh(mesh);
    std::cout << report.to_text();
    hforge::normalize_mesh(mesh, 1.0);  // throws on a flat or empty mesh
    return kOk;
  }
  const hforge::DatasetManifest m = hforge::load_manifest(a.manifest);
  m.validate();
  const hforge::BackgroundFilter filter = hforge::filter_backgrounds(m);
  std::cout << "backgrounds: " << m.backgrounds.size() << " (" << filter.usable.size() << " usable)\n"
            << "models: " << m.models.size() << "\n";
  for (const auto& r : filter.rejected) std::cout << "rejected " << r.id << ": " << r.reason << "\n";
  if (filter.usable.empty() && m.image_count > 0) {
    std::cerr << "validate: no usable background\n";
    return kValidationFailed;
  }
  return kOk;
}

struct ExtractArgs {
  std::string mesh;
  std::string out;
  std::string detector;
  std::string up_axis = "+y";
  int views = 24;
  double target_height = 1.0;
  double min_confidence = 0.3;
  double outlier_k = 3.0;
  int timeout_ms = 60000;
  int threads = 1;
  bool reentrant = false;
};

int run_extract(const ExtractArgs& a) {
  const hforge::Mesh mesh = hforge::normalize_mesh(
      hforge::reorient_up(hforge::load_mesh(a.mesh), hforge::parse_up_axis(a.up_axis)), a.target_height);
  hforge::ExternalDetectorConfig dcfg;
  dcfg.command = a.detector;
  dcfg.timeout = std::chrono::milliseconds(a.timeout_ms);
  dcfg.reentrant = a.reentrant;
  hforge::ExternalDetector detector(dcfg);

  hforge::SkeletonConfig cfg;
  cfg.min_confidence = a.min_confidence;
  cfg.outlier_k = a.outlier_k;
  cfg.threads = a.threads;
  const hforge::JointSet3D joints = hforge::estimate_skeleton(mesh, hforge::default_rig(a.target_height, a.views),
                                                              detector, cfg);
  hforge::write_skeleton_sidecar(a.out, joints);
  int resolved = 0;
  for (int s = 0; s < hforge::coco::kNumKeypoints; ++s) {
    const auto& j = joints[s];
    if (j.resolved()) {
      ++resolved;
    } else {
      spdlog::warn("joint {} ({}) unresolved", s, hforge::coco::kKeypointNames[s]);
    }
  }
  std::cout << "resolved " << resolved << "/" << hforge::coco::kNumKeypoints << " joints -> " << a.out << "\n";
  return kOk;
}

struct GenerateArgs {
  std::string manifest;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> count;
  int workers = 1;
  double failure_budget = 0.10;
};

int run_generate(const GenerateArgs& a) {
  const hforge::DatasetManifest m = hforge::load_manifest(a.manifest);
  m.validate();
  hforge::GenerateOptions opts;
  opts.out_dir = a.out;
  opts.seed = a.seed;
  opts.image_count = a.count;
  opts.workers = a.workers;
  opts.failure_budget = a.failure_budget;
  const hforge::GenerateReport r = hforge::generate(m, opts);
  std::cout << "wrote " << r.written << "/" << r.requested << " images to " << a.out << " (" << r.failed
            << " failed, " << r.rejected_backgrounds.size() << " backgrounds rejected)\n";
  if (r.over_budget) {
    std::cerr << "generate: failures exceed the budget; see run.json\n";
    return kRuntimeFailed;
  }
  return kOk;
}

struct PreviewArgs {
  std::string manifest;
  std::string out;
  int count = 5;
  std::optional<std::uint64_t> seed;
};

int run_preview(const PreviewArgs& a) {
  const hforge::DatasetManifest m = hforge::load_manifest(a.manifest);
  m.validate();
  hforge::PreviewOptions opts;
  opts.out_dir = a.out;
  opts.count = a.count;
  opts.seed = a.seed;
  const int written = hforge::preview(m, opts);
  std::cout << "wrote " << written << " previews to " << a.out << "\n";
  return written == a.count ? kOk : kRuntimeFailed;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_st("humanforge"));
  spdlog::set_pattern("%^%l%$: %v");

  CLI::App app{"humanforge: rig-free person skeletons and synthetic street datasets"};
  app.set_version_flag("--version", std::string(hforge::kToolVersion));
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Errors only");

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Check a manifest, or inspect a single mesh");
  validate->add_option("manifest", va.manifest, "Dataset manifest (TOML)");
  validate->add_option("--mesh", va.mesh, "Mesh (OBJ) to inspect instead of a manifest");
  validate->add_option("--up-axis", va.up_axis, "Up axis of the mesh file")->check(CLI::IsMember({"+y", "-y", "+z", "-z"}));

  ExtractArgs ea;
  auto* extract = app.add_subcommand("extract-skeleton", "Triangulate 17 COCO joints from rendered views");
  extract->add_option("--mesh", ea.mesh, "Mesh (OBJ)")->required();
  extract->add_option("--out", ea.out, "Skeleton sidecar to write (JSON)")->required();
  extract->add_option("--detector", ea.detector, "2D keypoint detector command")->required();
  extract->add_option("--views", ea.views, "Number of ring views")->check(CLI::Range(2, 360));
  extract->add_option("--up-axis", ea.up_axis, "Up axis of the mesh file")->check(CLI::IsMember({"+y", "-y", "+z", "-z"}));
  extract->add_option("--target-height", ea.target_height, "Normalized model height")->check(CLI::PositiveNumber);
  extract->add_option("--min-confidence", ea.min_confidence, "Ignore detections below this")->check(CLI::Range(0.0, 1.0));
  extract->add_option("--outlier-k", ea.outlier_k, "Ray rejection factor (inf disables)");
  extract->add_option("--timeout", ea.timeout_ms, "Per-view detector timeout in ms")->check(CLI::PositiveNumber);
  extract->add_option("--threads", ea.threads, "Views processed concurrently")->check(CLI::Range(1, 256));
  extract->add_flag("--reentrant", ea.reentrant, "Detector may run several instances at once");

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Compose and annotate a dataset");
  gen->add_option("manifest", ga.manifest, "Dataset manifest (TOML)")->required();
  gen->add_option("--out", ga.out, "Output directory")->required();
  gen->add_option("--seed", ga.seed, "Override the manifest seed");
  gen->add_option("--count", ga.count, "Override the manifest image count")->check(CLI::NonNegativeNumber);
  gen->add_option("--workers", ga.workers, "Parallel image workers")->check(CLI::Range(1, 256));
  gen->add_option("--failure-budget", ga.failure_budget, "Tolerated fraction of failed images")
      ->check(CLI::Range(0.0, 1.0));

  PreviewArgs pa;
  auto* prev = app.add_subcommand("preview", "Render overlays for the first images of a run");
  prev->add_option("manifest", pa.manifest, "Dataset manifest (TOML)")->required();
  prev->add_option("--out", pa.out, "Output directory")->required();
  prev->add_option("--count", pa.count, "Number of previews")->check(CLI::Range(1, 10000));
  prev->add_option("--seed", pa.seed, "Override the manifest seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidationFailed;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::err : spdlog::level::info);

  try {
    if (validate->parsed()) return run_validate(va);
    if (extract->parsed()) return run_extract(ea);
    if (gen->parsed()) return run_generate(ga);
    if (prev->parsed()) return run_preview(pa);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailed;
  }
  return kRuntimeFailed;
}
