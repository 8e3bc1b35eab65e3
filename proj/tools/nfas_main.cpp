// nfas command-line entry point.
//
// Exit codes: 0 success, 2 validation error, 3 degeneracy under --strict,
// 4 I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nfas/error.hpp"
#include "nfas/pipeline.hpp"
#include "nfas/synth.hpp"
#include "nfas/text.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitIo = 4;

struct GlobalFlags {
  std::string manifest;
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool strict = false;
  bool emit_spectra = false;
  bool allow_nonfinite = false;
};

void print_report(const nfas::RunReport& report) {
  for (const auto& t : report.timings) {
    std::cout << "stage " << t.stage << ": " << nfas::format_double(t.seconds) << " s\n";
  }
  if (!report.warnings.empty()) {
    std::cout << report.warnings.size() << " warning(s)\n";
    const std::size_t shown = std::min<std::size_t>(report.warnings.size(), 10);
    for (std::size_t i = 0; i < shown; ++i) std::cout << "  " << report.warnings[i] << '\n';
    if (shown < report.warnings.size()) std::cout << "  ... see run_report.json\n";
  }
  std::cout << report.inventory.size() << " files in inventory\n";
}

int run_stages(const GlobalFlags& g, std::vector<nfas::Stage> stages) {
  if (g.manifest.empty()) throw nfas::ValidationError("--manifest is required");
  if (g.out.empty()) throw nfas::ValidationError("--out is required");
  nfas::PipelineOptions opts;
  opts.output_dir = g.out;
  opts.stages = std::move(stages);
  opts.jobs = g.jobs;
  opts.strict = g.strict;
  opts.emit_spectra = g.emit_spectra;
  opts.allow_nonfinite = g.allow_nonfinite;
  opts.seed_override = g.seed;
  print_report(nfas::run_pipeline(g.manifest, opts));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depth dynamics, encoding alignment and consistency statistics for model populations"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--manifest", g.manifest, "Manifest JSON");
  app.add_option("--out", g.out, "Output directory (workspace directory for synth)");
  app.add_option("--seed", g.seed, "Override the manifest seed");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--strict", g.strict, "Treat numerical degeneracies as errors");
  app.add_flag("--emit-spectra", g.emit_spectra, "Write a DMD spectrum JSON per stimulus");
  app.add_flag("--allow-nonfinite", g.allow_nonfinite, "Quarantine tensors with NaN/Inf instead of rejecting them");

  std::string stage_filter = "all";
  auto* pipeline = app.add_subcommand("pipeline", "Run the full pipeline (or --stages subset)");
  pipeline->add_option("--stages", stage_filter, "Comma-separated stages: dmd,hrf,encode,snci,stats");

  struct Single {
    const char* name;
    const char* help;
    nfas::Stage stage;
  };
  const Single singles[] = {
      {"dmd", "Stable representations per stimulus", nfas::Stage::Dmd},
      {"hrf", "HRF-convolved feature series per model", nfas::Stage::Hrf},
      {"encode", "Cross-validated alignment scores", nfas::Stage::Encode},
      {"snci", "Consistency maps per modality", nfas::Stage::Snci},
      {"stats", "PCA, PERMANOVA, silhouette, network means and ANOVA", nfas::Stage::Stats},
  };
  std::vector<std::pair<CLI::App*, nfas::Stage>> stage_cmds;
  for (const auto& s : singles) stage_cmds.emplace_back(app.add_subcommand(s.name, s.help), s.stage);

  nfas::WorkspaceSpec ws;
  auto* synth = app.add_subcommand("synth", "Write a synthetic workspace");
  synth->add_option("--models-per-modality", ws.models_per_modality)->check(CLI::PositiveNumber);
  synth->add_option("--stimuli", ws.stimuli)->check(CLI::PositiveNumber);
  synth->add_option("--layers", ws.layers)->check(CLI::Range(2, 1000));
  synth->add_option("--dim", ws.dim)->check(CLI::Range(6, 100000));
  synth->add_option("--rois-per-network", ws.rois_per_network)->check(CLI::PositiveNumber);
  synth->add_option("--volumes", ws.volumes)->check(CLI::Range(2, 1000000));
  synth->add_option("--tr", ws.tr)->check(CLI::PositiveNumber);
  synth->add_option("--interval", ws.stimulus_interval, "Seconds between stimulus onsets")->check(CLI::PositiveNumber);
  synth->add_option("--brain-noise", ws.brain_noise)->check(CLI::NonNegativeNumber);
  synth->add_option("--feature-noise", ws.feature_noise)->check(CLI::NonNegativeNumber);
  synth->add_option("--n-permutations", ws.n_permutations)->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "Check a manifest and its inputs without computing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*pipeline) return run_stages(g, nfas::parse_stage_filter(stage_filter));
    for (const auto& [cmd, stage] : stage_cmds) {
      if (*cmd) return run_stages(g, {stage});
    }
    if (*synth) {
      if (g.out.empty()) throw nfas::ValidationError("--out is required");
      if (g.seed) ws.seed = *g.seed;
      const auto summary = nfas::make_workspace(g.out, ws);
      std::cout << "wrote " << summary.model_ids.size() << " models, " << summary.rois << " ROIs\n"
                << "manifest: " << summary.manifest.string() << '\n';
      return 0;
    }
    if (*validate) {
      if (g.manifest.empty()) throw nfas::ValidationError("--manifest is required");
      for (const auto& line : nfas::validate_inputs(g.manifest, g.allow_nonfinite)) std::cout << line << '\n';
      std::cout << "ok\n";
      return 0;
    }
  } catch (const nfas::DegeneracyError& e) {
    std::cerr << "degenerate: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const nfas::ValidationError& e) {
    std::cerr << "invalid: " << e.what() << '\n';
    return kExitValidation;
  } catch (const nfas::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
