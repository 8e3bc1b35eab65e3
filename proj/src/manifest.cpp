#include "nfas/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nfas/error.hpp"

namespace nfas {
namespace {

using nlohmann::json;

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("manifest field '") + key + "': " + e.what());
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ValidationError("manifest " + where + " is missing '" + key + "'");
  }
  return obj.at(key);
}

HrfParams parse_hrf(const json& j) {
  HrfParams p;
  p.peak_delay = get_or(j, "peak_delay", p.peak_delay);
  p.undershoot_delay = get_or(j, "undershoot_delay", p.undershoot_delay);
  p.peak_dispersion = get_or(j, "peak_dispersion", p.peak_dispersion);
  p.undershoot_dispersion = get_or(j, "undershoot_dispersion", p.undershoot_dispersion);
  p.undershoot_ratio = get_or(j, "undershoot_ratio", p.undershoot_ratio);
  p.duration = get_or(j, "duration", p.duration);
  p.dt = get_or(j, "dt", p.dt);
  p.validate();
  return p;
}

PipelineParams parse_params(const json& j) {
  PipelineParams p;
  if (j.is_null()) return p;
  if (!j.is_object()) throw ValidationError("manifest 'params' must be an object");
  p.svd_rel_tol = get_or(j, "svd_rel_tol", p.svd_rel_tol);
  p.ridge_grid = get_or(j, "ridge_grid", p.ridge_grid);
  p.cv_folds = get_or(j, "cv_folds", p.cv_folds);
  p.n_permutations = get_or(j, "n_permutations", p.n_permutations);
  p.epsilon = get_or(j, "epsilon", p.epsilon);
  p.sample_std = get_or(j, "sample_std", p.sample_std);
  p.joint_zscore = get_or(j, "joint_zscore", p.joint_zscore);
  p.pca_components = get_or(j, "pca_components", p.pca_components);

  const auto metric = get_or<std::string>(j, "distance_metric", "cosine");
  if (metric == "cosine") {
    p.distance_metric = DistanceMetric::Cosine;
  } else if (metric == "euclidean") {
    p.distance_metric = DistanceMetric::Euclidean;
  } else {
    throw ValidationError("distance_metric must be 'cosine' or 'euclidean'");
  }
  const auto space = get_or<std::string>(j, "silhouette_space", "raw");
  if (space == "raw") {
    p.silhouette_space = SilhouetteSpace::Raw;
  } else if (space == "pca") {
    p.silhouette_space = SilhouetteSpace::Pca;
  } else {
    throw ValidationError("silhouette_space must be 'raw' or 'pca'");
  }
  if (j.contains("hrf")) p.hrf = parse_hrf(j.at("hrf"));

  if (!(p.svd_rel_tol > 0.0 && p.svd_rel_tol < 1.0)) throw ValidationError("svd_rel_tol must lie in (0, 1)");
  if (p.ridge_grid.empty()) throw ValidationError("ridge_grid must not be empty");
  for (double l : p.ridge_grid) {
    if (!(l >= 0.0)) throw ValidationError("ridge_grid values must be >= 0");
  }
  if (p.cv_folds < 2) throw ValidationError("cv_folds must be at least 2");
  if (p.n_permutations < 1) throw ValidationError("n_permutations must be at least 1");
  if (!(p.epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  if (p.pca_components < 1) throw ValidationError("pca_components must be at least 1");
  return p;
}

json hrf_to_json(const HrfParams& p) {
  return {{"peak_delay", p.peak_delay},
          {"undershoot_delay", p.undershoot_delay},
          {"peak_dispersion", p.peak_dispersion},
          {"undershoot_dispersion", p.undershoot_dispersion},
          {"undershoot_ratio", p.undershoot_ratio},
          {"duration", p.duration},
          {"dt", p.dt}};
}

}  // namespace

bool is_safe_identifier(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '.' || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

std::filesystem::path Manifest::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : base_dir / p;
}

Manifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("manifest must be a JSON object");

  Manifest m;
  m.base_dir = base_dir;
  m.seed = get_or<std::uint64_t>(doc, "seed", 0);
  m.params = parse_params(doc.value("params", json()));

  const json& models = require(doc, "models", "document");
  if (!models.is_array() || models.empty()) throw ValidationError("manifest 'models' must be a non-empty array");
  std::set<std::string> model_ids;
  for (const auto& jm : models) {
    ModelEntry e;
    e.id = require(jm, "id", "model entry").get<std::string>();
    if (!is_safe_identifier(e.id)) throw ValidationError("model id '" + e.id + "' must match [A-Za-z0-9._-]+");
    if (!model_ids.insert(e.id).second) throw ValidationError("duplicate model id '" + e.id + "'");
    const auto modality = require(jm, "modality", "model '" + e.id + "'").get<std::string>();
    const auto parsed = parse_modality(modality);
    if (!parsed) {
      throw ValidationError("model '" + e.id + "': modality '" + modality +
                            "' is not one of vision, audio, language");
    }
    e.modality = *parsed;
    std::set<std::string> stim_ids;
    for (const auto& js : require(jm, "stimuli", "model '" + e.id + "'")) {
      StimulusEntry s;
      s.id = require(js, "id", "stimulus entry").get<std::string>();
      if (!is_safe_identifier(s.id)) throw ValidationError("stimulus id '" + s.id + "' must match [A-Za-z0-9._-]+");
      if (!stim_ids.insert(s.id).second) {
        throw ValidationError("model '" + e.id + "' lists stimulus '" + s.id + "' twice");
      }
      s.trajectory = require(js, "path", "stimulus '" + s.id + "'").get<std::string>();
      e.stimuli.push_back(std::move(s));
    }
    m.models.push_back(std::move(e));
  }

  const json& brain = require(doc, "brain", "document");
  m.brain.roi_timeseries = require(brain, "roi_timeseries", "brain").get<std::string>();
  m.brain.atlas = require(brain, "atlas", "brain").get<std::string>();
  m.brain.tr = require(brain, "tr", "brain").get<double>();
  if (!(m.brain.tr > 0.0)) throw ValidationError("brain TR must be positive");
  for (const auto& je : require(brain, "events", "brain")) {
    StimulusEvent ev;
    ev.stimulus = require(je, "stimulus", "event").get<std::string>();
    ev.onset = require(je, "onset", "event").get<double>();
    m.brain.events.push_back(std::move(ev));
  }
  if (m.brain.events.empty()) throw ValidationError("brain 'events' must not be empty");

  for (const auto& model : m.models) {
    for (const auto& ev : m.brain.events) {
      const bool found = std::any_of(model.stimuli.begin(), model.stimuli.end(),
                                     [&](const StimulusEntry& s) { return s.id == ev.stimulus; });
      if (!found) {
        throw ValidationError("model '" + model.id + "' has no trajectory for stimulus '" +
                              ev.stimulus + "'");
      }
    }
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  Manifest m = parse_manifest(buf.str(), std::filesystem::absolute(path).parent_path());

  auto check = [&](const std::filesystem::path& p, const std::string& what) {
    const auto resolved = m.resolve(p);
    if (!std::filesystem::is_regular_file(resolved)) {
      throw ValidationError(what + " not found: " + resolved.string());
    }
  };
  check(m.brain.roi_timeseries, "ROI time series");
  check(m.brain.atlas, "atlas");
  for (const auto& model : m.models) {
    for (const auto& s : model.stimuli) check(s.trajectory, "trajectory for model '" + model.id + "'");
  }
  return m;
}

std::string manifest_to_json(const Manifest& m) {
  json doc;
  doc["seed"] = m.seed;
  json models = json::array();
  for (const auto& model : m.models) {
    json stimuli = json::array();
    for (const auto& s : model.stimuli) stimuli.push_back({{"id", s.id}, {"path", s.trajectory.generic_string()}});
    models.push_back({{"id", model.id}, {"modality", modality_name(model.modality)}, {"stimuli", stimuli}});
  }
  doc["models"] = models;
  json events = json::array();
  for (const auto& e : m.brain.events) events.push_back({{"stimulus", e.stimulus}, {"onset", e.onset}});
  doc["brain"] = {{"roi_timeseries", m.brain.roi_timeseries.generic_string()},
                  {"tr", m.brain.tr},
                  {"atlas", m.brain.atlas.generic_string()},
                  {"events", events}};
  const auto& p = m.params;
  doc["params"] = {{"svd_rel_tol", p.svd_rel_tol},
                   {"ridge_grid", p.ridge_grid},
                   {"cv_folds", p.cv_folds},
                   {"n_permutations", p.n_permutations},
                   {"epsilon", p.epsilon},
                   {"sample_std", p.sample_std},
                   {"joint_zscore", p.joint_zscore},
                   {"pca_components", p.pca_components},
                   {"distance_metric", p.distance_metric == DistanceMetric::Cosine ? "cosine" : "euclidean"},
                   {"silhouette_space", p.silhouette_space == SilhouetteSpace::Raw ? "raw" : "pca"},
                   {"hrf", hrf_to_json(p.hrf)}};
  return doc.dump(2) + "\n";
}

}  // namespace nfas
