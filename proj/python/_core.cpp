#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "nfas/consistency.hpp"
#include "nfas/depth_dynamics.hpp"
#include "nfas/encoding.hpp"
#include "nfas/error.hpp"
#include "nfas/geometry_stats.hpp"
#include "nfas/hemodynamics.hpp"
#include "nfas/pipeline.hpp"
#include "nfas/synth.hpp"
#include "nfas/tensor_store.hpp"

namespace py = pybind11;
using namespace nfas;

namespace {

std::string fallback_name(DynamicsFallback f) {
  switch (f) {
    case DynamicsFallback::None: return "none";
    case DynamicsFallback::DegenerateLength: return "degenerate_length";
    case DynamicsFallback::ZeroDynamics: return "zero_dynamics";
  }
  return "?";
}

Modality modality_arg(const std::string& s) {
  const auto m = parse_modality(s);
  if (!m) throw ValidationError("unknown modality '" + s + "'");
  return *m;
}

py::dict permutation_dict(const PermutationSummary& s) {
  py::dict d;
  d["p_value"] = s.p_value;
  d["n_permutations"] = s.n_permutations;
  d["seed"] = s.seed;
  d["exact"] = s.exact;
  d["evaluated"] = s.evaluated;
  return d;
}

PermutationConfig perm_config(int n_permutations, std::uint64_t seed, int jobs) {
  return {.n_permutations = n_permutations, .seed = seed, .jobs = jobs};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the nfas toolkit";

  auto base = py::register_exception<Error>(m, "Error");
  auto validation = py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", validation.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<DegeneracyError>(m, "DegeneracyError", base.ptr());

  // tensor_store
  m.def(
      "read_tensor",
      [](const std::filesystem::path& path, bool allow_nonfinite) {
        const Tensor t = read_tensor(path, {allow_nonfinite});
        py::array_t<double> out(std::vector<py::ssize_t>(t.dims.begin(), t.dims.end()));
        std::copy(t.values.begin(), t.values.end(), out.mutable_data());
        return out;
      },
      py::arg("path"), py::arg("allow_nonfinite") = false);
  m.def(
      "write_tensor",
      [](const std::filesystem::path& path, py::array_t<double, py::array::c_style | py::array::forcecast> a) {
        std::vector<std::uint64_t> dims(a.shape(), a.shape() + a.ndim());
        write_tensor(path, dims, std::span<const double>(a.data(), static_cast<std::size_t>(a.size())));
      },
      py::arg("path"), py::arg("array"));

  // depth_dynamics
  m.def(
      "analyze_trajectory",
      [](const Eigen::MatrixXd& layers, double svd_rel_tol) {
        const DepthDynamicsResult r = analyze_trajectory({"", layers}, svd_rel_tol);
        py::dict d;
        d["z"] = r.representation.z;
        d["depth_mean"] = r.representation.depth_mean;
        d["stable_mode"] = r.representation.stable_mode;
        d["stable_eigenvalue"] = r.representation.stable_eigenvalue;
        d["fallback"] = fallback_name(r.fallback);
        if (r.spectrum) {
          d["eigenvalues"] = Eigen::VectorXcd(r.spectrum->eigenvalues);
          d["modes"] = Eigen::MatrixXcd(r.spectrum->modes);
          d["rank"] = r.spectrum->rank;
        } else {
          d["eigenvalues"] = py::none();
          d["modes"] = py::none();
          d["rank"] = 0;
        }
        return d;
      },
      py::arg("layers"), py::arg("svd_rel_tol") = kDefaultSvdRelTol);
  m.def(
      "trajectory_to_z",
      [](const Eigen::MatrixXd& layers, double tol) { return trajectory_to_z({"", layers}, tol); },
      py::arg("layers"), py::arg("svd_rel_tol") = kDefaultSvdRelTol);

  // hemodynamics
  py::class_<HrfParams>(m, "HrfParams")
      .def(py::init<>())
      .def_readwrite("peak_delay", &HrfParams::peak_delay)
      .def_readwrite("undershoot_delay", &HrfParams::undershoot_delay)
      .def_readwrite("peak_dispersion", &HrfParams::peak_dispersion)
      .def_readwrite("undershoot_dispersion", &HrfParams::undershoot_dispersion)
      .def_readwrite("undershoot_ratio", &HrfParams::undershoot_ratio)
      .def_readwrite("duration", &HrfParams::duration)
      .def_readwrite("dt", &HrfParams::dt);
  m.def("canonical_hrf", &canonical_hrf, py::arg("params") = HrfParams{});
  m.def(
      "hrf_kernel",
      [](double tr, const HrfParams& p) { return resample_kernel(canonical_hrf(p), p.dt, tr); },
      py::arg("tr"), py::arg("params") = HrfParams{});
  m.def(
      "convolve_hrf",
      [](const Eigen::MatrixXd& values, double tr, const HrfParams& p) {
        return convolve_hrf({tr, values, false}, p).values;
      },
      py::arg("values"), py::arg("tr"), py::arg("params") = HrfParams{});

  // encoding
  m.def(
      "fit_ridge",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
        const RidgeFit f = fit_ridge(x, y, lambda);
        return py::make_tuple(f.weights, f.intercept, f.rank_deficient);
      },
      py::arg("x"), py::arg("y"), py::arg("lam"));
  m.def(
      "cv_alignment_score",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int folds, std::vector<double> grid) {
        return cv_alignment_score(x, y, {folds, std::move(grid)});
      },
      py::arg("x"), py::arg("y"), py::arg("folds") = 5, py::arg("lambda_grid") = default_lambda_grid());
  m.def(
      "alignment_vector",
      [](const Eigen::MatrixXd& features, const Eigen::MatrixXd& brain, double tr, int folds, int jobs) {
        const AlignmentVector av =
            alignment_vector({tr, features, true}, {tr, brain}, {folds, default_lambda_grid()}, "py",
                             Modality::Vision, jobs);
        return py::make_tuple(av.scores, av.degenerate_rois);
      },
      py::arg("features"), py::arg("brain"), py::arg("tr"), py::arg("folds") = 5, py::arg("jobs") = 1,
      "features: [T, D] convolved; brain: [R, T]. Returns (scores, degenerate ROI indices).");

  // consistency
  m.def(
      "snci",
      [](const Eigen::MatrixXd& scores, double epsilon, bool sample_std) {
        ModalityGroup g;
        g.scores = scores;
        const SnciMap s = snci_map(g, {epsilon, sample_std});
        py::dict d;
        d["mu"] = s.mu;
        d["sigma"] = s.sigma;
        d["snci"] = s.snci;
        d["warnings"] = s.warnings;
        return d;
      },
      py::arg("scores"), py::arg("epsilon") = 1e-8, py::arg("sample_std") = false);
  m.def("zscore", [](const Eigen::VectorXd& v) { return zscore_across_rois(v).values; }, py::arg("values"));

  // geometry_stats
  m.def(
      "cosine_distances", [](const Eigen::MatrixXd& v) { return cosine_distance_matrix(v).values; },
      py::arg("vectors"));
  m.def(
      "pca",
      [](const Eigen::MatrixXd& scores, Eigen::Index k) {
        const PcaEmbedding p = pca_embed(scores, k);
        py::dict d;
        d["mean"] = p.mean;
        d["components"] = p.components;
        d["explained_variance_ratio"] = p.explained_variance_ratio;
        d["coordinates"] = p.coordinates;
        return d;
      },
      py::arg("scores"), py::arg("k"));
  m.def(
      "permanova",
      [](const Eigen::MatrixXd& d, const std::vector<std::string>& labels, int n, std::uint64_t seed, int jobs) {
        const PermanovaResult r = permanova({d, DistanceMetric::Cosine}, labels, perm_config(n, seed, jobs));
        py::dict out = permutation_dict(r.test);
        out["pseudo_f"] = r.pseudo_f;
        return out;
      },
      py::arg("distances"), py::arg("labels"), py::arg("n_permutations") = 999, py::arg("seed") = 0,
      py::arg("jobs") = 1);
  m.def(
      "silhouette",
      [](const Eigen::MatrixXd& d, const std::vector<std::string>& labels, int n, std::uint64_t seed, int jobs) {
        const SilhouetteResult r = silhouette({d, DistanceMetric::Cosine}, labels, perm_config(n, seed, jobs));
        py::dict out = permutation_dict(r.test);
        out["mean"] = r.mean;
        out["per_sample"] = r.per_sample;
        return out;
      },
      py::arg("distances"), py::arg("labels"), py::arg("n_permutations") = 999, py::arg("seed") = 0,
      py::arg("jobs") = 1);
  m.def(
      "two_way_anova",
      [](const std::vector<double>& values, const std::vector<std::string>& a, const std::vector<std::string>& b,
         bool type_one) {
        if (values.size() != a.size() || values.size() != b.size()) {
          throw ValidationError("values and factor columns differ in length");
        }
        std::vector<AnovaObservation> obs;
        for (std::size_t i = 0; i < values.size(); ++i) obs.push_back({values[i], a[i], b[i]});
        const AnovaTable t = two_way_anova(obs, type_one ? SumOfSquares::TypeI : SumOfSquares::TypeII);
        py::list rows;
        for (const auto& r : t.rows) {
          py::dict d;
          d["term"] = r.term;
          d["sum_sq"] = r.sum_of_squares;
          d["df"] = r.df;
          d["F"] = r.f;
          d["p_value"] = r.p_value;
          rows.append(d);
        }
        return rows;
      },
      py::arg("values"), py::arg("factor_a"), py::arg("factor_b"), py::arg("type_one") = false);

  // synth and pipeline
  m.def(
      "make_workspace",
      [](const std::filesystem::path& dir, std::uint64_t seed, int models_per_modality, int stimuli,
         int rois_per_network, int volumes, int n_permutations) {
        WorkspaceSpec s;
        s.seed = seed;
        s.models_per_modality = models_per_modality;
        s.stimuli = stimuli;
        s.rois_per_network = rois_per_network;
        s.volumes = volumes;
        s.n_permutations = n_permutations;
        return make_workspace(dir, s).manifest;
      },
      py::arg("dir"), py::arg("seed") = 7, py::arg("models_per_modality") = 5, py::arg("stimuli") = 60,
      py::arg("rois_per_network") = 4, py::arg("volumes") = 120, py::arg("n_permutations") = 999,
      "Writes a synthetic workspace and returns the manifest path.");
  m.def(
      "run_pipeline",
      [](const std::filesystem::path& manifest, const std::filesystem::path& out, const std::string& stages,
         int jobs, bool strict) {
        PipelineOptions o;
        o.output_dir = out;
        o.stages = parse_stage_filter(stages);
        o.jobs = jobs;
        o.strict = strict;
        RunReport r;
        {
          py::gil_scoped_release release;
          r = run_pipeline(manifest, o);
        }
        return py::module_::import("json").attr("loads")(report_to_json(r));
      },
      py::arg("manifest"), py::arg("out"), py::arg("stages") = "all", py::arg("jobs") = 1,
      py::arg("strict") = false, "Runs the pipeline and returns the run report as a dict.");
}
