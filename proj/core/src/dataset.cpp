#include "hforge/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>
#include <toml++/toml.hpp>

#include "hforge/error.hpp"
#include "hforge/seed.hpp"
#include "hforge/skeleton.hpp"

namespace hforge {
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Class list entries may be label names or raw integer ids.
std::set<int> class_ids(const toml::node* node, const std::map<std::string, int>& labels, const char* key,
                        const std::set<int>& fallback) {
  if (!node) return fallback;
  const toml::array* arr = node->as_array();
  if (!arr) throw Error(ErrorCode::Parse, std::string("placement.") + key + " must be an array");
  std::set<int> out;
  for (const toml::node& item : *arr) {
    if (auto id = item.value<std::int64_t>()) {
      out.insert(static_cast<int>(*id));
    } else if (auto name = item.value<std::string>()) {
      const auto it = labels.find(*name);
      if (it == labels.end()) throw Error(ErrorCode::Validation, "unknown label '" + *name + "' in placement." + key);
      out.insert(it->second);
    } else {
      throw Error(ErrorCode::Parse, std::string("placement.") + key + " entries must be names or integers");
    }
  }
  return out;
}

template <typename T, typename View>
T get_or(const View& view, T fallback) {
  if (!view) return fallback;
  if constexpr (std::is_floating_point_v<T>) {
    if (auto v = view.template value<double>()) return static_cast<T>(*v);
  } else {
    if (auto v = view.template value<T>()) return *v;
  }
  throw Error(ErrorCode::Parse, "manifest value has the wrong type");
}

struct LoadedModel {
  Mesh mesh;
  JointSet3D skeleton;
  ModelInfo info;
  int identity = 0;
};

struct Context {
  const DatasetManifest& manifest;
  std::vector<std::size_t> usable;
  std::vector<LoadedModel> models;
  std::vector<ModelInfo> infos;
  std::vector<int> identity_of_model;
  std::uint64_t seed = 0;
};

Context prepare(const DatasetManifest& manifest, std::uint64_t seed, BackgroundFilter& filter) {
  manifest.validate();
  Context ctx{manifest, {}, {}, {}, {}, seed};
  filter = filter_backgrounds(manifest);
  ctx.usable = filter.usable;
  for (std::size_t m = 0; m < manifest.models.size(); ++m) {
    const ModelEntry& entry = manifest.models[m];
    LoadedModel lm;
    lm.mesh = normalize_mesh(reorient_up(load_mesh(entry.mesh), manifest.up_axis), manifest.target_height);
    lm.skeleton = read_skeleton_sidecar(entry.skeleton);
    const Aabb box = compute_bounds(lm.mesh);
    lm.info = ModelInfo{static_cast<int>(m), box.extent().y(), box.extent().x(), box.extent().z()};
    lm.identity = entry.identity_id;
    ctx.infos.push_back(lm.info);
    ctx.identity_of_model.push_back(entry.identity_id);
    ctx.models.push_back(std::move(lm));
  }
  return ctx;
}

struct ComposedImage {
  std::string background_id;
  RgbImage image;
  SceneComposite scene;
  std::vector<AnnotationRecord> records;
};

ComposedImage compose_job(const Context& ctx, std::size_t job) {
  if (ctx.usable.empty()) throw Error(ErrorCode::NoValidRegion, "no usable backgrounds");
  if (ctx.models.empty()) throw Error(ErrorCode::EmptyModelPool, "manifest lists no models");
  std::mt19937_64 rng(derive_seed(ctx.seed, job));
  const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, ctx.usable.size() - 1)(rng);
  const BackgroundEntry& bg = ctx.manifest.backgrounds[ctx.usable[pick]];
  const std::uint64_t plan_seed = rng();

  const RgbImage background = read_png_rgb(bg.image);
  const SegMask mask = read_png_labels(bg.mask);
  if (mask.width != background.width || mask.height != background.height) {
    throw Error(ErrorCode::Validation, "mask size differs from background '" + bg.id + "'");
  }
  PlacementConfig cfg = ctx.manifest.placement;
  cfg.ground = ctx.manifest.ground_for(bg, background.width, background.height);
  const PlacementPlan plan = plan_scene(bg.id, mask, ctx.infos, cfg, plan_seed);

  std::vector<PersonSprite> sprites;
  sprites.reserve(plan.placements.size());
  for (const Placement& p : plan.placements) {
    const LoadedModel& model = ctx.models[static_cast<std::size_t>(p.model_id)];
    sprites.push_back(render_person_sprite(
        model.mesh, model.skeleton,
        SpriteRequest{p.yaw, p.pixel_height, p.distance, p.person_height_m, cfg.ground.camera_height}));
  }
  ComposedImage out;
  out.background_id = bg.id;
  out.scene = composite_scene(background, plan, sprites);
  out.records = annotate(plan, sprites, out.scene, ctx.identity_of_model);
  for (const AnnotationRecord& r : out.records) r.validate(background.width, background.height);
  out.image = out.scene.image;
  return out;
}

template <typename Job>
void run_pool(std::size_t count, int workers, Job&& job) {
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::size_t>(count, 1))));
  if (n == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < n; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) job(i);
    });
  }
  for (auto& th : pool) th.join();
}

std::string image_name(std::size_t job) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img_%06zu.png", job + 1);
  return buf;
}

ojson rejections_json(const std::vector<BackgroundRejection>& rejected) {
  ojson arr = ojson::array();
  for (const auto& r : rejected) arr.push_back(ojson{{"id", r.id}, {"reason", r.reason}});
  return arr;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace

int default_label_id(const std::string& name) {
  static const std::map<std::string, int> cityscapes = {
      {"unlabeled", 0}, {"ground", 6},      {"road", 7},           {"sidewalk", 8}, {"parking", 9},
      {"rail track", 10}, {"building", 11}, {"wall", 12},          {"fence", 13},   {"vegetation", 21},
      {"terrain", 22},  {"sky", 23},        {"person", 24},        {"rider", 25},   {"car", 26},
      {"truck", 27},    {"bus", 28},        {"motorcycle", 32},    {"bicycle", 33}};
  const auto it = cityscapes.find(name);
  if (it == cityscapes.end()) throw Error(ErrorCode::Validation, "unknown label '" + name + "'");
  return it->second;
}

void DatasetManifest::validate() const {
  std::vector<std::string> problems;
  for (const BackgroundEntry& bg : backgrounds) {
    if (!fs::exists(bg.image)) problems.push_back("missing background image " + bg.image.string());
    if (bg.mask.empty()) {
      problems.push_back("background '" + bg.id + "' has no segmentation mask");
    } else if (!fs::exists(bg.mask)) {
      problems.push_back("missing segmentation mask " + bg.mask.string());
    }
  }
  std::set<int> identities;
  for (const ModelEntry& m : models) {
    if (!fs::exists(m.mesh)) problems.push_back("missing mesh " + m.mesh.string());
    if (!fs::exists(m.skeleton)) {
      problems.push_back("missing skeleton sidecar " + m.skeleton.string() + " (run `humanforge extract-skeleton --mesh " +
                         m.mesh.string() + " --out " + m.skeleton.string() + "`)");
    }
    if (!identities.insert(m.identity_id).second) {
      problems.push_back("duplicate identity id " + std::to_string(m.identity_id));
    }
  }
  if (image_count < 0) problems.push_back("image_count must be >= 0");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) problems.push_back("train_fraction must lie in (0, 1)");
  if (!(target_height > 0.0)) problems.push_back("target_height must be > 0");
  try {
    PlacementConfig probe = placement;
    probe.ground = GroundModel{0.0, camera_height, 1.0};
    probe.validate();
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  if (!problems.empty()) {
    std::string msg = std::to_string(problems.size()) + " problem(s):";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw Error(ErrorCode::Validation, msg);
  }
}

GroundModel DatasetManifest::ground_for(const BackgroundEntry& bg, int width, int height) const {
  GroundModel g{horizon_fraction * height, camera_height, focal_fraction * width};
  if (bg.horizon_row) g.horizon_row = *bg.horizon_row;
  if (bg.camera_height) g.camera_height = *bg.camera_height;
  if (bg.focal_px) g.focal_px = *bg.focal_px;
  return g;
}

DatasetManifest load_manifest(const fs::path& path) {
  DatasetManifest m;
  m.source = path;
  m.canonical_text = read_text(path);
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  toml::table doc;
  try {
    doc = toml::parse(m.canonical_text, path.string());
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << path.string() << ":" << e.source().begin.line << ": " << e.description();
    throw Error(ErrorCode::Parse, msg.str());
  }

  m.seed = static_cast<std::uint64_t>(get_or<std::int64_t>(doc["seed"], 0));
  m.image_count = static_cast<int>(get_or<std::int64_t>(doc["image_count"], 0));
  m.train_fraction = get_or<double>(doc["train_fraction"], 0.8);
  m.target_height = get_or<double>(doc["target_height"], 1.0);
  m.up_axis = parse_up_axis(get_or<std::string>(doc["up_axis"], "+y"));

  std::map<std::string, int> labels;
  for (const char* name : {"road", "sidewalk", "person", "rider"}) labels[name] = default_label_id(name);
  auto read_labels = [&](const toml::table& table) {
    for (const auto& [key, value] : table) {
      const auto id = value.value<std::int64_t>();
      if (!id) throw Error(ErrorCode::Parse, "label '" + std::string(key.str()) + "' must map to an integer id");
      labels[std::string(key.str())] = static_cast<int>(*id);
    }
  };
  if (auto file = doc["label_map"].value<std::string>()) {
    try {
      const toml::table label_doc = toml::parse_file(resolve(*file).string());
      if (const auto* t = label_doc["labels"].as_table()) read_labels(*t);
    } catch (const toml::parse_error& e) {
      throw Error(ErrorCode::Parse, resolve(*file).string() + ": " + std::string(e.description()));
    }
  }
  if (const auto* t = doc["labels"].as_table()) read_labels(*t);

  const auto pl = doc["placement"];
  PlacementConfig& cfg = m.placement;
  cfg.valid_class_ids = class_ids(pl["valid_classes"].node(), labels, "valid_classes", {labels["road"], labels["sidewalk"]});
  cfg.person_class_ids = class_ids(pl["person_classes"].node(), labels, "person_classes", {labels["person"], labels["rider"]});
  m.horizon_fraction = get_or<double>(pl["horizon_fraction"], 0.45);
  m.camera_height = get_or<double>(pl["camera_height"], 1.5);
  m.focal_fraction = get_or<double>(pl["focal_fraction"], 0.9);
  cfg.min_anchor_separation = get_or<double>(pl["min_anchor_separation"], cfg.min_anchor_separation);
  cfg.max_bbox_iou = get_or<double>(pl["max_bbox_iou"], cfg.max_bbox_iou);
  cfg.min_pixel_height = get_or<double>(pl["min_pixel_height"], cfg.min_pixel_height);
  cfg.max_pixel_height = get_or<double>(pl["max_pixel_height"], cfg.max_pixel_height);
  cfg.attempts_per_slot = static_cast<int>(get_or<std::int64_t>(pl["attempts_per_slot"], cfg.attempts_per_slot));
  if (const auto* range = pl["persons_per_image"].as_array()) {
    if (range->size() != 2) throw Error(ErrorCode::Parse, "placement.persons_per_image must be [min, max]");
    cfg.min_persons = static_cast<int>(range->get(0)->value<std::int64_t>().value_or(-1));
    cfg.max_persons = static_cast<int>(range->get(1)->value<std::int64_t>().value_or(-1));
  }
  const auto ph = pl["person_height"];
  cfg.person_height.mean = get_or<double>(ph["mean"], cfg.person_height.mean);
  cfg.person_height.std = get_or<double>(ph["std"], cfg.person_height.std);
  cfg.person_height.min = get_or<double>(ph["min"], cfg.person_height.min);
  cfg.person_height.max = get_or<double>(ph["max"], cfg.person_height.max);

  const auto mask_dir = doc["mask_dir"].value<std::string>();
  if (const auto* bgs = doc["backgrounds"].as_array()) {
    for (const toml::node& node : *bgs) {
      const toml::table* t = node.as_table();
      if (!t) throw Error(ErrorCode::Parse, "every [[backgrounds]] entry must be a table");
      const auto image = (*t)["image"].value<std::string>();
      if (!image) throw Error(ErrorCode::Parse, "background entry without 'image'");
      BackgroundEntry bg;
      bg.image = resolve(*image);
      bg.id = bg.image.stem().string();
      if (auto mask = (*t)["mask"].value<std::string>()) {
        bg.mask = resolve(*mask);
      } else if (mask_dir) {
        bg.mask = resolve(*mask_dir) / (bg.id + ".png");
      }
      bg.horizon_row = (*t)["horizon_row"].value<double>();
      bg.camera_height = (*t)["camera_height"].value<double>();
      bg.focal_px = (*t)["focal_px"].value<double>();
      m.backgrounds.push_back(std::move(bg));
    }
  }
  if (const auto* models = doc["models"].as_array()) {
    for (const toml::node& node : *models) {
      const toml::table* t = node.as_table();
      if (!t) throw Error(ErrorCode::Parse, "every [[models]] entry must be a table");
      const auto mesh = (*t)["mesh"].value<std::string>();
      const auto identity = (*t)["identity"].value<std::int64_t>();
      if (!mesh || !identity) throw Error(ErrorCode::Parse, "model entries need 'mesh' and 'identity'");
      ModelEntry me;
      me.mesh = resolve(*mesh);
      me.identity_id = static_cast<int>(*identity);
      if (auto sk = (*t)["skeleton"].value<std::string>()) {
        me.skeleton = resolve(*sk);
      } else {
        me.skeleton = me.mesh.parent_path() / (me.mesh.stem().string() + ".skeleton.json");
      }
      m.models.push_back(std::move(me));
    }
  }
  return m;
}

BackgroundFilter filter_backgrounds(const DatasetManifest& manifest) {
  BackgroundFilter out;
  for (std::size_t i = 0; i < manifest.backgrounds.size(); ++i) {
    const BackgroundEntry& bg = manifest.backgrounds[i];
    try {
      const SegMask mask = read_png_labels(bg.mask);
      if (has_person(mask, manifest.placement)) {
        out.rejected.push_back({i, bg.id, "contains person class"});
      } else {
        out.usable.push_back(i);
      }
    } catch (const Error& e) {
      out.rejected.push_back({i, bg.id, std::string("io error: ") + e.what()});
    }
  }
  return out;
}

Split split_dataset(std::span<const int> ids, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidFraction, "train fraction " + std::to_string(train_fraction) + " not in (0, 1)");
  }
  std::vector<int> order(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(order.size()) + 0.5));
  Split split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Split split_dataset(std::span<const int> ids, double train_fraction, std::uint64_t seed,
                    std::span<const std::vector<int>> identities) {
  if (identities.size() != ids.size()) {
    throw Error(ErrorCode::InvalidArgument, "identity list must parallel the id list");
  }
  Split split = split_dataset(ids, train_fraction, seed);
  std::map<int, const std::vector<int>*> idents_of;
  for (std::size_t i = 0; i < ids.size(); ++i) idents_of[ids[i]] = &identities[i];

  std::map<int, int> train_count;
  for (int id : split.train) {
    for (int who : *idents_of[id]) ++train_count[who];
  }
  for (std::size_t t = 0; t < split.test.size(); ++t) {
    const std::vector<int>& test_idents = *idents_of[split.test[t]];
    const bool missing = std::any_of(test_idents.begin(), test_idents.end(),
                                     [&](int who) { return train_count[who] == 0; });
    if (!missing) continue;
    // Swap with a train image whose identities stay covered without it.
    for (std::size_t r = split.train.size(); r-- > 0;) {
      const std::vector<int>& train_idents = *idents_of[split.train[r]];
      const bool removable = std::all_of(train_idents.begin(), train_idents.end(), [&](int who) {
        return train_count[who] >= 2 ||
               std::find(test_idents.begin(), test_idents.end(), who) != test_idents.end();
      });
      if (!removable) continue;
      for (int who : train_idents) --train_count[who];
      for (int who : test_idents) ++train_count[who];
      std::swap(split.train[r], split.test[t]);
      break;
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::string coco_json(std::span<const CocoImage> images) {
  ojson doc;
  doc["info"] = ojson{{"description", "humanforge synthetic person dataset"},
                      {"version", kToolVersion},
                      {"keypoint_pixel_centers", "integer"}};
  ojson imgs = ojson::array();
  ojson anns = ojson::array();
  int ann_id = 1;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const CocoImage& img = images[i];
    const int image_id = static_cast<int>(i) + 1;
    imgs.push_back(ojson{{"id", image_id}, {"file_name", img.file_name}, {"width", img.width}, {"height", img.height}});
    for (const AnnotationRecord& rec : img.records) {
      rec.validate(img.width, img.height);
      ojson kps = ojson::array();
      for (const Keypoint& k : rec.keypoints) {
        if (k.visibility == 0) {
          kps.push_back(0);
          kps.push_back(0);
          kps.push_back(0);
        } else {
          kps.push_back(k.u);
          kps.push_back(k.v);
          kps.push_back(k.visibility);
        }
      }
      ojson ann{{"id", ann_id++},
                {"image_id", image_id},
                {"category_id", 1},
                {"bbox", {rec.bbox.x, rec.bbox.y, rec.bbox.w, rec.bbox.h}},
                {"area", rec.area},
                {"iscrowd", 0},
                {"keypoints", std::move(kps)},
                {"num_keypoints", rec.num_keypoints},
                {"identity_id", rec.identity_id}};
      if (rec.face_bbox) {
        ann["face_bbox"] = {rec.face_bbox->x, rec.face_bbox->y, rec.face_bbox->w, rec.face_bbox->h};
      }
      anns.push_back(std::move(ann));
    }
  }
  ojson names = ojson::array();
  for (auto n : coco::kKeypointNames) names.push_back(std::string(n));
  ojson skeleton = ojson::array();
  for (const auto& [a, b] : coco::kSkeleton) skeleton.push_back({a, b});
  doc["images"] = std::move(imgs);
  doc["annotations"] = std::move(anns);
  doc["categories"] = ojson::array({ojson{{"id", 1},
                                          {"name", "person"},
                                          {"supercategory", "person"},
                                          {"keypoints", std::move(names)},
                                          {"skeleton", std::move(skeleton)}}});
  return doc.dump() + "\n";
}

void write_coco(std::span<const CocoImage> images, const fs::path& path) {
  write_text(path, coco_json(images));
}

GenerateReport generate(const DatasetManifest& manifest, const GenerateOptions& options) {
  const std::uint64_t seed = options.seed.value_or(manifest.seed);
  const int count = options.image_count.value_or(manifest.image_count);
  if (count < 0) throw Error(ErrorCode::InvalidArgument, "image count must be >= 0");
  BackgroundFilter filter;
  const Context ctx = prepare(manifest, seed, filter);
  if (count > 0 && ctx.usable.empty()) {
    throw Error(ErrorCode::Validation, "every background was rejected; nothing to compose on");
  }

  const fs::path image_dir = options.out_dir / "images";
  const fs::path ann_dir = options.out_dir / "annotations";
  fs::create_directories(image_dir);
  fs::create_directories(ann_dir);

  struct Result {
    bool ok = false;
    std::string error;
    CocoImage image;
  };
  std::vector<Result> results(static_cast<std::size_t>(count));
  run_pool(results.size(), options.workers, [&](std::size_t job) {
    Result& r = results[job];
    try {
      ComposedImage composed = compose_job(ctx, job);
      r.image.file_name = image_name(job);
      r.image.width = composed.image.width;
      r.image.height = composed.image.height;
      r.image.records = std::move(composed.records);
      write_png(image_dir / r.image.file_name, composed.image);
      r.ok = true;
    } catch (const std::exception& e) {
      r.error = e.what();
      spdlog::warn("generate: image {} failed: {}", job + 1, e.what());
    }
  });

  GenerateReport report;
  report.requested = count;
  report.rejected_backgrounds = filter.rejected;
  std::vector<CocoImage> written;
  std::vector<int> ids;
  std::vector<std::vector<int>> identities;
  ojson failures = ojson::array();
  for (std::size_t job = 0; job < results.size(); ++job) {
    Result& r = results[job];
    if (!r.ok) {
      ++report.failed;
      failures.push_back(ojson{{"image", static_cast<int>(job) + 1}, {"error", r.error}});
      continue;
    }
    std::vector<int> who;
    for (const auto& rec : r.image.records) who.push_back(rec.identity_id);
    std::sort(who.begin(), who.end());
    who.erase(std::unique(who.begin(), who.end()), who.end());
    ids.push_back(static_cast<int>(written.size()));
    identities.push_back(std::move(who));
    written.push_back(std::move(r.image));
  }
  report.written = static_cast<int>(written.size());
  report.over_budget = report.failed > options.failure_budget * count;

  Split split;
  if (!written.empty()) split = split_dataset(ids, manifest.train_fraction, seed, identities);
  auto subset = [&](const std::vector<int>& idx) {
    std::vector<CocoImage> out;
    for (int i : idx) out.push_back(written[static_cast<std::size_t>(i)]);
    return out;
  };
  write_coco(subset(split.train), ann_dir / "train.json");
  write_coco(subset(split.test), ann_dir / "test.json");

  ojson run{{"tool", "humanforge"},
            {"version", kToolVersion},
            {"manifest_hash", fnv1a_hex(manifest.canonical_text)},
            {"seed", seed},
            {"requested", count},
            {"written", report.written},
            {"failed", report.failed},
            {"train_images", split.train.size()},
            {"test_images", split.test.size()},
            {"rejected_backgrounds", rejections_json(filter.rejected)},
            {"failures", std::move(failures)}};
  write_text(options.out_dir / "run.json", run.dump(2) + "\n");
  return report;
}

int preview(const DatasetManifest& manifest, const PreviewOptions& options) {
  BackgroundFilter filter;
  const Context ctx = prepare(manifest, options.seed.value_or(manifest.seed), filter);
  fs::create_directories(options.out_dir);
  std::vector<std::array<std::uint8_t, 3>> palette{{0, 0, 0}};
  for (int i = 1; i < 256; ++i) {
    palette.push_back({static_cast<std::uint8_t>((i * 97) % 256), static_cast<std::uint8_t>((i * 57 + 80) % 256),
                       static_cast<std::uint8_t>((i * 151 + 40) % 256)});
  }
  int written = 0;
  for (int job = 0; job < options.count; ++job) {
    try {
      const ComposedImage composed = compose_job(ctx, static_cast<std::size_t>(job));
      char name[64];
      std::snprintf(name, sizeof name, "preview_%04d.png", job + 1);
      write_png(options.out_dir / name, draw_overlay(composed.image, composed.records));
      std::snprintf(name, sizeof name, "ownership_%04d.png", job + 1);
      write_png_indexed(options.out_dir / name, composed.scene.ownership_labels(), palette);
      ++written;
    } catch (const Error& e) {
      spdlog::warn("preview: image {} failed: {}", job + 1, e.what());
    }
  }
  return written;
}

}  // namespace hforge
