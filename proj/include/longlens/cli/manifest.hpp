#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "longlens/cli/common.hpp"
#include "longlens/error.hpp"
#include "longlens/raster/io.hpp"
#include "longlens/temporal.hpp"

namespace longlens::cli {

struct VisitEntry {
  double t = 0.0;
  std::string image_path;
  std::string mask_path;
  std::optional<std::string> keypoints_path;
};

struct EyeEntry {
  std::string eye_id;
  Laterality laterality = Laterality::Unknown;
  std::vector<VisitEntry> visits;
};

/// Dataset description. Relative paths resolve against `root` (the
/// directory holding the manifest file).
struct Manifest {
  std::string dataset_id;
  IntensityScale scale = IntensityScale::Byte;
  std::vector<EyeEntry> eyes;
  std::filesystem::path root;

  [[nodiscard]] std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : root / path;
  }

  /// Structural checks; `strict_times` rejects repeated timestamps, which
  /// only ingest tolerates.
  void validate(bool check_paths = true, bool strict_times = true) const {
    if (eyes.empty()) throw EmptyListError("manifest " + dataset_id + " has no eyes");
    for (const auto& e : eyes) {
      if (e.visits.empty()) throw EmptySequenceError("eye " + e.eye_id + " has no visits");
      for (std::size_t i = 1; i < e.visits.size(); ++i) {
        const bool ok = strict_times ? e.visits[i].t > e.visits[i - 1].t : e.visits[i].t >= e.visits[i - 1].t;
        if (!ok) throw DegenerateTimesError("eye " + e.eye_id + ": visit times must increase");
      }
      if (!check_paths) continue;
      for (const auto& v : e.visits) {
        for (const auto* p : {&v.image_path, &v.mask_path})
          if (!std::filesystem::exists(resolve(*p))) throw IoError("eye " + e.eye_id + ": missing file " + *p);
        if (v.keypoints_path && !std::filesystem::exists(resolve(*v.keypoints_path)))
          throw IoError("eye " + e.eye_id + ": missing file " + *v.keypoints_path);
      }
    }
  }
};

inline std::string scale_name(IntensityScale s) { return s == IntensityScale::Unit ? "unit" : "byte"; }

inline Json manifest_to_json(const Manifest& m) {
  Json j;
  j["dataset_id"] = m.dataset_id;
  j["scale"] = scale_name(m.scale);
  auto eyes = Json::array();
  for (const auto& e : m.eyes) {
    Json je;
    je["eye_id"] = e.eye_id;
    je["laterality"] = std::string(to_string(e.laterality));
    auto visits = Json::array();
    for (const auto& v : e.visits) {
      Json jv;
      jv["t"] = v.t;
      jv["image_path"] = v.image_path;
      jv["mask_path"] = v.mask_path;
      if (v.keypoints_path) jv["keypoints_path"] = *v.keypoints_path;
      visits.push_back(std::move(jv));
    }
    je["visits"] = std::move(visits);
    eyes.push_back(std::move(je));
  }
  j["eyes"] = std::move(eyes);
  return j;
}

inline Manifest manifest_from_json(const Json& j, const std::filesystem::path& root) {
  Manifest m;
  m.root = root;
  try {
    m.dataset_id = j.value("dataset_id", std::string("dataset"));
    const std::string scale = j.value("scale", std::string("byte"));
    if (scale == "byte") m.scale = IntensityScale::Byte;
    else if (scale == "unit") m.scale = IntensityScale::Unit;
    else throw FormatError("manifest: scale must be \"byte\" or \"unit\"");
    for (const auto& je : j.at("eyes")) {
      EyeEntry e;
      e.eye_id = je.at("eye_id").get<std::string>();
      e.laterality = laterality_from_string(je.value("laterality", std::string("unknown")));
      for (const auto& jv : je.at("visits")) {
        VisitEntry v;
        v.t = jv.at("t").get<double>();
        v.image_path = jv.at("image_path").get<std::string>();
        v.mask_path = jv.at("mask_path").get<std::string>();
        if (jv.contains("keypoints_path") && !jv["keypoints_path"].is_null())
          v.keypoints_path = jv["keypoints_path"].get<std::string>();
        e.visits.push_back(std::move(v));
      }
      m.eyes.push_back(std::move(e));
    }
  } catch (const Json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  return m;
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  auto root = path.parent_path();
  if (root.empty()) root = ".";
  return manifest_from_json(read_json(path), root);
}

inline void save_manifest(const std::filesystem::path& path, const Manifest& m) { write_json(path, manifest_to_json(m)); }

/// Loads a visit image and checks it against the declared scale.
inline GrayImage load_visit_image(const Manifest& m, const VisitEntry& v) {
  GrayImage img = load_image(m.resolve(v.image_path));
  if (img.scale() != m.scale) throw ScaleError(v.image_path + ": file scale disagrees with the manifest declaration");
  return img;
}

/// Eye sequence with Unit-scale frames (metrics operate on [0, 1]).
inline EyeSequence load_eye_sequence(const Manifest& m, const EyeEntry& e) {
  EyeSequence seq;
  seq.eye_id = e.eye_id;
  seq.laterality = e.laterality;
  for (const auto& v : e.visits) {
    Frame f;
    f.t = v.t;
    f.image = to_unit(load_visit_image(m, v));
    f.mask = load_mask(m.resolve(v.mask_path));
    seq.frames.push_back(std::move(f));
  }
  seq.validate();
  return seq;
}

}  // namespace longlens::cli
