#include "nfas/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "nfas/atlas.hpp"
#include "nfas/consistency.hpp"
#include "nfas/depth_dynamics.hpp"
#include "nfas/digest.hpp"
#include "nfas/encoding.hpp"
#include "nfas/error.hpp"
#include "nfas/hemodynamics.hpp"
#include "nfas/parallel.hpp"
#include "nfas/tensor_store.hpp"
#include "nfas/text.hpp"

namespace nfas {
namespace fs = std::filesystem;
using nlohmann::json;

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::Dmd: return "dmd";
    case Stage::Hrf: return "hrf";
    case Stage::Encode: return "encode";
    case Stage::Snci: return "snci";
    case Stage::Stats: return "stats";
  }
  return "?";
}

std::vector<Stage> parse_stage_filter(std::string_view filter) {
  const std::string trimmed = trim(filter);
  if (trimmed.empty() || trimmed == "all") return {std::begin(kAllStages), std::end(kAllStages)};
  std::vector<bool> wanted(std::size(kAllStages), false);
  for (const auto& name : split_csv_line(trimmed)) {
    bool found = false;
    for (std::size_t i = 0; i < std::size(kAllStages); ++i) {
      if (stage_name(kAllStages[i]) == name) {
        wanted[i] = true;
        found = true;
      }
    }
    if (!found) {
      throw ValidationError("unknown stage '" + name + "' (expected dmd, hrf, encode, snci, stats)");
    }
  }
  std::vector<Stage> out;
  for (std::size_t i = 0; i < std::size(kAllStages); ++i) {
    if (wanted[i]) out.push_back(kAllStages[i]);
  }
  return out;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// JSON has no infinities; non-finite values are written as strings.
json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

double parse_number(const std::string& field, const fs::path& source) {
  if (field == "inf") return std::numeric_limits<double>::infinity();
  if (field == "-inf") return -std::numeric_limits<double>::infinity();
  if (field == "NA") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ValidationError(source.string() + ": '" + field + "' is not a number");
  }
  return v;
}

std::string svg_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string_view modality_color(Modality m) {
  switch (m) {
    case Modality::Vision: return "#1f77b4";
    case Modality::Audio: return "#ff7f0e";
    case Modality::Language: return "#2ca02c";
  }
  return "#000000";
}

std::string pca_svg(const StatsResults& r) {
  constexpr double kWidth = 520, kHeight = 420, kMargin = 50;
  const Eigen::Index m = r.pca.coordinates.rows();
  const bool two_d = r.pca.coordinates.cols() >= 2;
  Eigen::VectorXd xs = r.pca.coordinates.col(0);
  Eigen::VectorXd ys = two_d ? Eigen::VectorXd(r.pca.coordinates.col(1)) : Eigen::VectorXd::Zero(m);
  auto span_of = [](const Eigen::VectorXd& v) {
    double lo = v.minCoeff(), hi = v.maxCoeff();
    if (hi - lo < 1e-12) {
      lo -= 1.0;
      hi += 1.0;
    }
    const double pad = 0.08 * (hi - lo);
    return std::pair{lo - pad, hi + pad};
  };
  const auto [x0, x1] = span_of(xs);
  const auto [y0, y1] = span_of(ys);
  auto px = [&](double x) { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); };
  auto py = [&](double y) { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kWidth - 2 * kMargin
    << "\" height=\"" << kHeight - 2 * kMargin << "\" fill=\"none\" stroke=\"#444\"/>\n";
  auto pct = [&](Eigen::Index k) {
    return k < r.pca.explained_variance_ratio.size()
               ? svg_number(100.0 * r.pca.explained_variance_ratio(k)) + "%"
               : std::string("n/a");
  };
  s << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">PC1 (" << pct(0)
    << ")</text>\n";
  s << "<text x=\"16\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
    << "font-size=\"13\" transform=\"rotate(-90 16 " << kHeight / 2 << ")\">PC2 (" << pct(1)
    << ")</text>\n";
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto mod = r.modalities[static_cast<std::size_t>(i)];
    s << "<circle cx=\"" << svg_number(px(xs(i))) << "\" cy=\"" << svg_number(py(ys(i)))
      << "\" r=\"5\" fill=\"" << modality_color(mod) << "\" fill-opacity=\"0.85\"><title>"
      << r.model_ids[static_cast<std::size_t>(i)] << "</title></circle>\n";
  }
  double ly = kMargin + 14;
  for (Modality mod : {Modality::Vision, Modality::Audio, Modality::Language}) {
    if (std::find(r.modalities.begin(), r.modalities.end(), mod) == r.modalities.end()) continue;
    s << "<circle cx=\"" << kWidth - kMargin - 70 << "\" cy=\"" << ly - 4 << "\" r=\"5\" fill=\""
      << modality_color(mod) << "\"/>";
    s << "<text x=\"" << kWidth - kMargin - 60 << "\" y=\"" << ly
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << modality_name(mod) << "</text>\n";
    ly += 16;
  }
  s << "</svg>\n";
  return s.str();
}

json permutation_json(const PermutationSummary& t) {
  return {{"p_value", t.p_value},
          {"n_permutations", t.n_permutations},
          {"seed", t.seed},
          {"exact", t.exact},
          {"labelings_evaluated", t.evaluated}};
}

std::string metric_name(DistanceMetric m) {
  return m == DistanceMetric::Cosine ? "cosine" : "euclidean";
}

}  // namespace

std::vector<fs::path> emit_reports(const StatsResults& r, const fs::path& output_dir) {
  const auto m = static_cast<Eigen::Index>(r.model_ids.size());
  if (m == 0 || r.alignment.rows() != m || r.pca.coordinates.rows() != m ||
      r.distances.size() != m || r.modalities.size() != r.model_ids.size()) {
    throw ValidationError("stats results are empty or inconsistent; nothing to report");
  }
  const fs::path dir = output_dir / "stats";
  make_dirs(dir);
  std::vector<fs::path> written;
  auto emit = [&](const char* name, const std::string& text) {
    write_text(dir / name, text);
    written.push_back(dir / name);
  };

  {
    std::ostringstream s;
    s << "model_id,modality";
    for (Eigen::Index k = 0; k < r.pca.coordinates.cols(); ++k) s << ",pc" << k + 1;
    s << '\n';
    for (Eigen::Index i = 0; i < m; ++i) {
      s << r.model_ids[static_cast<std::size_t>(i)] << ','
        << modality_name(r.modalities[static_cast<std::size_t>(i)]);
      for (Eigen::Index k = 0; k < r.pca.coordinates.cols(); ++k) {
        s << ',' << format_double(r.pca.coordinates(i, k));
      }
      s << '\n';
    }
    emit("pca.csv", s.str());
  }
  emit("pca.svg", pca_svg(r));

  {
    json evr = json::array();
    for (Eigen::Index k = 0; k < r.pca.explained_variance_ratio.size(); ++k) {
      evr.push_back(r.pca.explained_variance_ratio(k));
    }
    const auto& p = r.permanova;
    json j = {{"metric", metric_name(r.distances.metric)},
              {"pseudo_f", number(p.pseudo_f)},
              {"ss_total", p.ss_total},
              {"ss_between", p.ss_between},
              {"ss_within", p.ss_within},
              {"df_between", p.df_between},
              {"df_within", p.df_within},
              {"pca_explained_variance_ratio", evr}};
    j.update(permutation_json(p.test));
    emit("permanova.json", j.dump(2) + "\n");
  }
  {
    json per = json::array();
    for (Eigen::Index i = 0; i < m; ++i) {
      per.push_back({{"model_id", r.model_ids[static_cast<std::size_t>(i)]},
                     {"modality", modality_name(r.modalities[static_cast<std::size_t>(i)])},
                     {"silhouette", r.silhouette.per_sample(i)}});
    }
    json j = {{"space", r.silhouette_space == SilhouetteSpace::Raw ? "raw" : "pca"},
              {"metric", r.silhouette_space == SilhouetteSpace::Raw ? metric_name(r.distances.metric)
                                                                    : std::string("euclidean")},
              {"mean", r.silhouette.mean},
              {"per_sample", per}};
    j.update(permutation_json(r.silhouette.test));
    emit("silhouette.json", j.dump(2) + "\n");
  }
  {
    json matrix = json::array();
    for (Eigen::Index i = 0; i < m; ++i) {
      json row = json::array();
      for (Eigen::Index k = 0; k < m; ++k) row.push_back(r.distances.values(i, k));
      matrix.push_back(row);
    }
    json j = {{"metric", metric_name(r.distances.metric)},
              {"model_ids", r.model_ids},
              {"intra_mean", number(r.contrast.intra_mean)},
              {"inter_mean", number(r.contrast.inter_mean)},
              {"intra_pairs", r.contrast.intra_pairs},
              {"inter_pairs", r.contrast.inter_pairs},
              {"matrix", matrix}};
    emit("distances.json", j.dump(2) + "\n");
  }
  {
    std::ostringstream s;
    s << "modality,network,n_rois,mean_snci\n";
    for (const auto& net : r.networks) {
      for (std::size_t k = 0; k < kNetworkCount; ++k) {
        if (!net.means[k]) continue;
        s << modality_name(net.modality) << ',' << network_name(kAllNetworks[k]) << ','
          << net.roi_counts[k] << ',' << format_double(*net.means[k]) << '\n';
      }
    }
    emit("network_means.csv", s.str());
  }
  {
    std::ostringstream s;
    s << "term,sum_sq,df,F,p_value\n";
    for (const auto& row : r.anova.rows) {
      s << row.term << ',' << format_double(row.sum_of_squares) << ',' << format_double(row.df)
        << ',' << format_double(row.f) << ',' << format_double(row.p_value) << '\n';
    }
    emit("anova.csv", s.str());
  }
  return written;
}

std::string report_to_json(const RunReport& report) {
  json timings = json::array();
  for (const auto& t : report.timings) timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  json inventory = json::array();
  for (const auto& e : report.inventory) {
    inventory.push_back({{"path", e.path}, {"bytes", e.bytes}, {"sha256", e.sha256}});
  }
  json j = {{"manifest_sha256", report.manifest_sha256},
            {"seed", report.seed},
            {"timings", timings},
            {"warnings", report.warnings},
            {"inventory", inventory}};
  return j.dump(2) + "\n";
}

namespace {

const char* kPartialMarker = ".partial";
const char* kReportName = "run_report.json";

struct Context {
  Manifest manifest;
  std::string manifest_sha;
  std::uint64_t seed = 0;
  PipelineOptions options;
  fs::path out;
  std::vector<std::string> warnings;
  std::vector<std::string> degeneracies;  // subset of warnings that --strict escalates

  void warn(std::string w) { warnings.push_back(std::move(w)); }
  void degenerate(std::string w) {
    degeneracies.push_back(w);
    warnings.push_back(std::move(w));
  }
  TensorReadOptions read_options() const { return {options.allow_nonfinite}; }
};

void check_fresh(const json& sidecar, const Context& ctx, const fs::path& source) {
  if (!sidecar.contains("manifest_sha256") ||
      sidecar.at("manifest_sha256").get<std::string>() != ctx.manifest_sha) {
    throw ValidationError(source.string() +
                          " was produced from a different manifest; rerun the earlier stages");
  }
}

fs::path z_path(const Context& ctx, const std::string& model, const std::string& stim) {
  return ctx.out / "dmd" / model / (stim + ".nft");
}

std::string fallback_name(DynamicsFallback f) {
  switch (f) {
    case DynamicsFallback::None: return "none";
    case DynamicsFallback::DegenerateLength: return "degenerate_length";
    case DynamicsFallback::ZeroDynamics: return "zero_dynamics";
  }
  return "?";
}

json spectrum_json(const std::string& stim, const DepthDynamicsResult& res) {
  json j = {{"stimulus", stim}, {"fallback", fallback_name(res.fallback)}};
  if (res.spectrum) {
    json eig = json::array();
    for (Eigen::Index i = 0; i < res.spectrum->eigenvalues.size(); ++i) {
      eig.push_back({res.spectrum->eigenvalues(i).real(), res.spectrum->eigenvalues(i).imag()});
    }
    json sigma = json::array();
    for (Eigen::Index i = 0; i < res.spectrum->sigma.size(); ++i) sigma.push_back(res.spectrum->sigma(i));
    j["rank"] = res.spectrum->rank;
    j["singular_values"] = sigma;
    j["eigenvalues"] = eig;
  } else {
    j["rank"] = 0;
  }
  if (res.selected_index) {
    j["selected_index"] = *res.selected_index;
    const auto lam = res.representation.stable_eigenvalue;
    j["stable_eigenvalue"] = {lam.real(), lam.imag()};
  } else {
    j["selected_index"] = nullptr;
  }
  return j;
}

void run_dmd(Context& ctx) {
  json models = json::array();
  for (const auto& model : ctx.manifest.models) {
    make_dirs(ctx.out / "dmd" / model.id);
    const auto n = model.stimuli.size();
    std::vector<DepthDynamicsResult> results(n);
    std::vector<bool> quarantined(n, false);
    std::vector<Eigen::Index> dims(n, 0);
    parallel_for(n, ctx.options.jobs, [&](std::size_t i) {
      const auto& stim = model.stimuli[i];
      const auto path = ctx.manifest.resolve(stim.trajectory);
      const Tensor t = read_tensor(path, ctx.read_options());
      if (t.dims.size() != 2) {
        throw ValidationError("model '" + model.id + "' stimulus '" + stim.id + "': " + path.string() +
                              " must be a 2-D [L, D] tensor");
      }
      EmbeddingTrajectory traj{stim.id, tensor_to_matrix(t)};
      dims[i] = traj.dim();
      if (t.quarantined) {
        quarantined[i] = true;
        results[i].representation.z = Eigen::VectorXd::Zero(traj.dim());
        return;
      }
      try {
        results[i] = analyze_trajectory(traj, ctx.manifest.params.svd_rel_tol);
      } catch (const ValidationError& e) {
        throw ValidationError("model '" + model.id + "' stimulus '" + stim.id + "': " + e.what());
      }
    });

    json stimuli = json::array();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& stim = model.stimuli[i];
      if (dims[i] != dims[0]) {
        throw ValidationError("model '" + model.id + "': stimulus '" + stim.id + "' has D=" +
                              std::to_string(dims[i]) + ", expected " + std::to_string(dims[0]));
      }
      if (quarantined[i]) {
        ctx.degenerate("model '" + model.id + "' stimulus '" + stim.id +
                       "': non-finite trajectory quarantined; z set to zero");
      } else if (results[i].fallback != DynamicsFallback::None) {
        ctx.degenerate("model '" + model.id + "' stimulus '" + stim.id + "': " +
                       fallback_name(results[i].fallback) + " fallback, z = depth mean");
      }
      write_vector(z_path(ctx, model.id, stim.id), results[i].representation.z);
      if (ctx.options.emit_spectra) {
        write_text(ctx.out / "dmd" / model.id / (stim.id + ".spectrum.json"),
                   spectrum_json(stim.id, results[i]).dump(2) + "\n");
      }
      stimuli.push_back({{"id", stim.id},
                         {"fallback", quarantined[i] ? "quarantined" : fallback_name(results[i].fallback)}});
    }
    models.push_back({{"id", model.id},
                      {"modality", modality_name(model.modality)},
                      {"dim", n ? dims[0] : 0},
                      {"stimuli", stimuli}});
  }
  json index = {{"manifest_sha256", ctx.manifest_sha},
                {"svd_rel_tol", ctx.manifest.params.svd_rel_tol},
                {"models", models}};
  write_text(ctx.out / "dmd" / "index.json", index.dump(2) + "\n");
}

Tensor read_brain(const Context& ctx) {
  const auto path = ctx.manifest.resolve(ctx.manifest.brain.roi_timeseries);
  Tensor t = read_tensor(path, ctx.read_options());
  if (t.dims.size() != 2) throw ValidationError(path.string() + " must be a 2-D [R, T] tensor");
  return t;
}

void run_hrf(Context& ctx) {
  const auto index_path = ctx.out / "dmd" / "index.json";
  check_fresh(read_json(index_path), ctx, index_path);
  const auto volumes = static_cast<Eigen::Index>(read_brain(ctx).dims[1]);
  const double tr = ctx.manifest.brain.tr;

  std::vector<double> onsets;
  for (const auto& ev : ctx.manifest.brain.events) onsets.push_back(ev.onset);
  make_dirs(ctx.out / "hrf");

  for (const auto& model : ctx.manifest.models) {
    std::vector<Eigen::VectorXd> z;
    for (const auto& ev : ctx.manifest.brain.events) {
      z.push_back(tensor_to_vector(read_tensor(z_path(ctx, model.id, ev.stimulus))));
    }
    FeatureSeries features;
    try {
      features = convolve_hrf(align_to_volumes(onsets, z, tr, volumes), ctx.manifest.params.hrf);
    } catch (const ValidationError& e) {
      throw ValidationError("model '" + model.id + "': " + e.what());
    }
    write_matrix(ctx.out / "hrf" / (model.id + ".nft"), features.values);
    json side = {{"manifest_sha256", ctx.manifest_sha},
                 {"tr", features.tr},
                 {"convolved", features.convolved},
                 {"volumes", features.volumes()},
                 {"dim", features.dim()}};
    write_text(ctx.out / "hrf" / (model.id + ".json"), side.dump(2) + "\n");
  }
}

void run_encode(Context& ctx) {
  const Tensor bt = read_brain(ctx);
  RoiTimeSeries brain{ctx.manifest.brain.tr, tensor_to_matrix(bt)};
  const AtlasTable atlas = load_atlas(ctx.manifest.resolve(ctx.manifest.brain.atlas));
  if (atlas.roi_count() != static_cast<std::size_t>(brain.rois())) {
    throw ValidationError("atlas has " + std::to_string(atlas.roi_count()) + " ROIs, time series has " +
                          std::to_string(brain.rois()));
  }
  if (bt.quarantined) {
    for (Eigen::Index r = 0; r < brain.rois(); ++r) {
      if (!brain.values.row(r).allFinite()) {
        brain.values.row(r).setZero();
        ctx.degenerate("roi " + std::to_string(r) + ": non-finite time series quarantined; scores set to 0");
      }
    }
  }

  make_dirs(ctx.out / "encode");
  const CvConfig cfg{ctx.manifest.params.cv_folds, ctx.manifest.params.ridge_grid};
  const auto m = static_cast<Eigen::Index>(ctx.manifest.models.size());
  Eigen::MatrixXd scores(m, brain.rois());
  json models = json::array();
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& model = ctx.manifest.models[static_cast<std::size_t>(i)];
    const auto side_path = ctx.out / "hrf" / (model.id + ".json");
    const json side = read_json(side_path);
    check_fresh(side, ctx, side_path);
    if (!side.value("convolved", false)) throw ValidationError(side_path.string() + ": features not convolved");
    FeatureSeries features{side.at("tr").get<double>(),
                           tensor_to_matrix(read_tensor(ctx.out / "hrf" / (model.id + ".nft"))), true};
    if (features.tr != ctx.manifest.brain.tr) {
      throw ValidationError(side_path.string() + ": TR does not match the brain manifest");
    }
    AlignmentVector av = alignment_vector(features, brain, cfg, model.id, model.modality, ctx.options.jobs);
    scores.row(i) = av.scores.transpose();
    for (auto& w : av.warnings) ctx.degenerate(std::move(w));

    std::ostringstream csv;
    csv << "roi_index,score\n";
    for (Eigen::Index r = 0; r < av.scores.size(); ++r) csv << r << ',' << format_double(av.scores(r)) << '\n';
    write_text(ctx.out / "encode" / (model.id + ".csv"), csv.str());
    models.push_back({{"id", model.id},
                      {"modality", modality_name(model.modality)},
                      {"degenerate_rois", av.degenerate_rois}});
  }
  write_matrix(ctx.out / "encode" / "alignment.nft", scores);
  json index = {{"manifest_sha256", ctx.manifest_sha},
                {"rois", brain.rois()},
                {"cv_folds", cfg.folds},
                {"ridge_grid", cfg.lambda_grid},
                {"models", models}};
  write_text(ctx.out / "encode" / "alignment.json", index.dump(2) + "\n");
}

struct LoadedAlignment {
  std::vector<std::string> ids;
  std::vector<Modality> modalities;
  Eigen::MatrixXd scores;
};

LoadedAlignment load_alignment(const Context& ctx) {
  const auto index_path = ctx.out / "encode" / "alignment.json";
  const json index = read_json(index_path);
  check_fresh(index, ctx, index_path);
  LoadedAlignment a;
  for (const auto& jm : index.at("models")) {
    a.ids.push_back(jm.at("id").get<std::string>());
    a.modalities.push_back(*parse_modality(jm.at("modality").get<std::string>()));
  }
  a.scores = tensor_to_matrix(read_tensor(ctx.out / "encode" / "alignment.nft"));
  if (a.scores.rows() != static_cast<Eigen::Index>(a.ids.size())) {
    throw ValidationError("alignment.nft does not match alignment.json");
  }
  return a;
}

std::vector<Modality> present_modalities(const std::vector<Modality>& per_model) {
  std::vector<Modality> out;
  for (Modality m : {Modality::Vision, Modality::Audio, Modality::Language}) {
    if (std::find(per_model.begin(), per_model.end(), m) != per_model.end()) out.push_back(m);
  }
  return out;
}

void run_snci(Context& ctx) {
  const LoadedAlignment a = load_alignment(ctx);
  const auto mods = present_modalities(a.modalities);
  const SnciOptions opts{ctx.manifest.params.epsilon, ctx.manifest.params.sample_std};

  std::vector<SnciMap> maps;
  for (Modality mod : mods) {
    ModalityGroup g;
    g.modality = mod;
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < a.ids.size(); ++i) {
      if (a.modalities[i] == mod) {
        rows.push_back(static_cast<Eigen::Index>(i));
        g.model_ids.push_back(a.ids[i]);
      }
    }
    g.scores.resize(static_cast<Eigen::Index>(rows.size()), a.scores.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) g.scores.row(static_cast<Eigen::Index>(k)) = a.scores.row(rows[k]);
    maps.push_back(snci_map(g, opts));
    for (const auto& w : maps.back().warnings) ctx.warn(w);
  }

  std::vector<ZScored> z;
  if (ctx.manifest.params.joint_zscore) {
    std::vector<Eigen::VectorXd> all;
    for (const auto& m : maps) all.push_back(m.snci);
    z = zscore_jointly(all);
  } else {
    for (const auto& m : maps) z.push_back(zscore_across_rois(m.snci));
  }

  json names = json::array();
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const auto name = std::string(modality_name(maps[k].modality));
    if (z[k].constant) ctx.warn("snci map '" + name + "' is constant across ROIs; z-scores set to 0");
    std::ostringstream csv;
    csv << "roi_index,mu,sigma,snci,snci_z\n";
    for (Eigen::Index r = 0; r < maps[k].snci.size(); ++r) {
      csv << r << ',' << format_double(maps[k].mu(r)) << ',' << format_double(maps[k].sigma(r)) << ','
          << format_double(maps[k].snci(r)) << ',' << format_double(z[k].values(r)) << '\n';
    }
    write_text(ctx.out / "snci" / (name + ".csv"), csv.str());
    names.push_back(name);
  }
  json index = {{"manifest_sha256", ctx.manifest_sha},
                {"epsilon", opts.epsilon},
                {"sample_std", opts.sample_std},
                {"joint_zscore", ctx.manifest.params.joint_zscore},
                {"modalities", names}};
  write_text(ctx.out / "snci" / "index.json", index.dump(2) + "\n");
}

Eigen::VectorXd read_snci_column(const fs::path& path, Eigen::Index rois) {
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  if (trim(line) != "roi_index,mu,sigma,snci,snci_z") throw ValidationError(path.string() + ": bad header");
  Eigen::VectorXd v(rois);
  Eigen::Index r = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 5 || r >= rois) throw ValidationError(path.string() + ": malformed row " + std::to_string(r));
    v(r++) = parse_number(f[3], path);
  }
  if (r != rois) throw ValidationError(path.string() + ": expected " + std::to_string(rois) + " rows");
  return v;
}

void run_stats(Context& ctx) {
  const LoadedAlignment a = load_alignment(ctx);
  const auto snci_index_path = ctx.out / "snci" / "index.json";
  const json snci_index = read_json(snci_index_path);
  check_fresh(snci_index, ctx, snci_index_path);
  const auto mods = present_modalities(a.modalities);
  if (mods.size() < 2) throw ValidationError("stats need models from at least two modalities");

  const AtlasTable atlas = load_atlas(ctx.manifest.resolve(ctx.manifest.brain.atlas));
  if (static_cast<Eigen::Index>(atlas.roi_count()) != a.scores.cols()) {
    throw ValidationError("atlas ROI count does not match the alignment matrix");
  }
  const auto networks = atlas.networks();
  const auto& params = ctx.manifest.params;

  StatsResults res;
  res.model_ids = a.ids;
  res.modalities = a.modalities;
  res.alignment = a.scores;
  std::vector<std::string> labels;
  for (Modality m : a.modalities) labels.emplace_back(modality_name(m));

  const Eigen::Index m = a.scores.rows();
  const Eigen::Index k = std::min<Eigen::Index>({params.pca_components, m - 1, a.scores.cols()});
  if (k < params.pca_components) {
    ctx.warn("pca_components reduced to " + std::to_string(k) + " by the data shape");
  }
  res.pca = pca_embed(a.scores, k);
  res.distances = distance_matrix(a.scores, params.distance_metric, a.ids);
  res.contrast = distance_contrast(res.distances, labels);

  const PermutationConfig perm{params.n_permutations, ctx.seed, ctx.options.jobs, true};
  res.permanova = permanova(res.distances, labels, perm);
  res.silhouette_space = params.silhouette_space;
  if (params.silhouette_space == SilhouetteSpace::Raw) {
    res.silhouette = silhouette(res.distances, labels, perm);
  } else {
    res.silhouette = silhouette(euclidean_distance_matrix(res.pca.coordinates), labels, perm);
  }

  std::vector<AnovaObservation> obs;
  for (Modality mod : mods) {
    const auto name = std::string(modality_name(mod));
    const Eigen::VectorXd snci = read_snci_column(ctx.out / "snci" / (name + ".csv"), a.scores.cols());
    StatsResults::NetworkSummary ns;
    ns.modality = mod;
    ns.means = aggregate_networks(snci, networks);
    for (std::size_t r = 0; r < networks.size(); ++r) {
      ++ns.roi_counts[static_cast<std::size_t>(networks[r])];
      obs.push_back({snci(static_cast<Eigen::Index>(r)), name, std::string(network_name(networks[r]))});
    }
    res.networks.push_back(ns);
  }
  res.anova = two_way_anova(obs, SumOfSquares::TypeII);
  emit_reports(res, ctx.out);
}

std::vector<InventoryEntry> build_inventory(const fs::path& out) {
  std::vector<InventoryEntry> inv;
  for (const auto& entry : fs::recursive_directory_iterator(out)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), out).generic_string();
    if (rel == kReportName || rel == kPartialMarker) continue;
    inv.push_back({rel, static_cast<std::uint64_t>(entry.file_size()), sha256_file(entry.path())});
  }
  std::sort(inv.begin(), inv.end(), [](const auto& x, const auto& y) { return x.path < y.path; });
  return inv;
}

[[noreturn]] void rethrow_with_prefix(const std::string& prefix) {
  try {
    throw;
  } catch (const FormatError& e) {
    throw FormatError(prefix + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(prefix + e.what());
  } catch (const IoError& e) {
    throw IoError(prefix + e.what());
  } catch (const DegeneracyError& e) {
    throw DegeneracyError(prefix + e.what());
  } catch (const Error& e) {
    throw Error(prefix + e.what());
  } catch (const std::exception& e) {
    throw Error(prefix + e.what());
  }
}

}  // namespace

RunReport run_pipeline(const fs::path& manifest_path, const PipelineOptions& options) {
  if (options.output_dir.empty()) throw ValidationError("no output directory given");
  if (options.stages.empty()) throw ValidationError("no stages selected");

  Context ctx;
  ctx.manifest = load_manifest(manifest_path);
  ctx.manifest_sha = sha256_file(manifest_path);
  ctx.seed = options.seed_override.value_or(ctx.manifest.seed);
  ctx.options = options;
  ctx.out = options.output_dir;
  make_dirs(ctx.out);
  const fs::path marker = ctx.out / kPartialMarker;
  write_text(marker, "running\n");

  RunReport report;
  report.manifest_sha256 = ctx.manifest_sha;
  report.seed = ctx.seed;
  for (Stage stage : options.stages) {
    const auto name = std::string(stage_name(stage));
    const auto start = std::chrono::steady_clock::now();
    const std::size_t degeneracies_before = ctx.degeneracies.size();
    try {
      switch (stage) {
        case Stage::Dmd: run_dmd(ctx); break;
        case Stage::Hrf: run_hrf(ctx); break;
        case Stage::Encode: run_encode(ctx); break;
        case Stage::Snci: run_snci(ctx); break;
        case Stage::Stats: run_stats(ctx); break;
      }
      if (options.strict && ctx.degeneracies.size() > degeneracies_before) {
        throw DegeneracyError(std::to_string(ctx.degeneracies.size() - degeneracies_before) +
                              " degeneracies under --strict; first: " + ctx.degeneracies[degeneracies_before]);
      }
    } catch (...) {
      try {
        rethrow_with_prefix("stage " + name + ": ");
      } catch (const std::exception& e) {
        try {
          write_text(marker, std::string("failed: ") + e.what() + "\n");
        } catch (...) {
        }
        throw;
      }
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    report.timings.push_back({name, elapsed.count()});
  }

  std::error_code ec;
  fs::remove(marker, ec);
  report.warnings = ctx.warnings;
  report.inventory = build_inventory(ctx.out);
  write_text(ctx.out / kReportName, report_to_json(report));
  return report;
}

std::vector<std::string> validate_inputs(const fs::path& manifest_path, bool allow_nonfinite) {
  const Manifest m = load_manifest(manifest_path);
  const TensorReadOptions ro{allow_nonfinite};
  std::vector<std::string> summary;

  for (const auto& model : m.models) {
    std::optional<std::uint64_t> dim;
    std::uint64_t min_l = ~0ULL, max_l = 0;
    for (const auto& s : model.stimuli) {
      const auto path = m.resolve(s.trajectory);
      const Tensor t = read_tensor(path, ro);
      if (t.dims.size() != 2) throw ValidationError(path.string() + " must be a 2-D [L, D] tensor");
      if (t.dims[0] < 2) throw ValidationError(path.string() + " has fewer than 2 layers");
      if (dim && *dim != t.dims[1]) {
        throw ValidationError("model '" + model.id + "': " + path.string() + " has D=" +
                              std::to_string(t.dims[1]) + ", expected " + std::to_string(*dim));
      }
      dim = t.dims[1];
      min_l = std::min(min_l, t.dims[0]);
      max_l = std::max(max_l, t.dims[0]);
    }
    summary.push_back("model " + model.id + " (" + std::string(modality_name(model.modality)) + "): " +
                      std::to_string(model.stimuli.size()) + " stimuli, D=" + std::to_string(dim.value_or(0)) +
                      ", L=" + std::to_string(min_l) + (min_l == max_l ? "" : ".." + std::to_string(max_l)));
  }

  const auto brain_path = m.resolve(m.brain.roi_timeseries);
  const Tensor brain = read_tensor(brain_path, ro);
  if (brain.dims.size() != 2) throw ValidationError(brain_path.string() + " must be a 2-D [R, T] tensor");
  const AtlasTable atlas = load_atlas(m.resolve(m.brain.atlas));
  if (atlas.roi_count() != brain.dims[0]) {
    throw ValidationError("atlas has " + std::to_string(atlas.roi_count()) + " ROIs, " + brain_path.string() +
                          " has " + std::to_string(brain.dims[0]));
  }
  const double scan = static_cast<double>(brain.dims[1]) * m.brain.tr;
  std::vector<std::string> late;
  double prev = -std::numeric_limits<double>::infinity();
  for (const auto& ev : m.brain.events) {
    if (ev.onset < prev) throw ValidationError("event onsets must be nondecreasing");
    prev = ev.onset;
    if (ev.onset < 0.0 || ev.onset >= scan) late.push_back(ev.stimulus + "@" + format_double(ev.onset));
  }
  if (!late.empty()) {
    std::string list;
    for (const auto& s : late) list += (list.empty() ? "" : ", ") + s;
    throw ValidationError("events outside the scan [0, " + format_double(scan) + "): " + list);
  }
  summary.push_back("brain: R=" + std::to_string(brain.dims[0]) + ", T=" + std::to_string(brain.dims[1]) +
                    ", TR=" + format_double(m.brain.tr) + (brain.quarantined ? " (quarantined)" : ""));
  summary.push_back("events: " + std::to_string(m.brain.events.size()));
  return summary;
}

}  // namespace nfas
