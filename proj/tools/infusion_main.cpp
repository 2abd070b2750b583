#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "infusion/experiment.hpp"
#include "infusion/figures.hpp"
#include "infusion/mask.hpp"
#include "infusion/phantom.hpp"
#include "infusion/prior.hpp"

namespace fs = std::filesystem;
using namespace infusion;

namespace {

void apply_overrides(KeyValueConfig& cfg, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got: " + s);
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Undersampled MRI reconstruction with implicit neural "
               "representations and a diffusion image prior"};
  app.require_subcommand(1);

  // phantom
  auto* cmd_phantom = app.add_subcommand(
      "phantom", "Generate a complex head phantom and save it as a .cpxa array");
  std::size_t p_ny = 64, p_nx = 64, p_nz = 0;
  std::uint64_t p_seed = 1;
  std::string p_out = "phantom.cpxa";
  cmd_phantom->add_option("--ny", p_ny, "Grid rows (>= 16)");
  cmd_phantom->add_option("--nx", p_nx, "Grid columns (>= 16)");
  cmd_phantom->add_option("--nz", p_nz, "Slices; 0 means a 2D image");
  cmd_phantom->add_option("--seed", p_seed, "Shape and phase seed");
  cmd_phantom->add_option("--out", p_out, "Output .cpxa path");

  // mask
  auto* cmd_mask = app.add_subcommand(
      "mask", "Generate a sampling mask and save it as a 0/1 .cpxa array");
  std::size_t m_rows = 64, m_cols = 64;
  std::string m_kind = "poisson";
  double m_accel = 4.0;
  int m_calib = 8, m_ry = 2, m_rz = 1;
  std::uint64_t m_seed = 101;
  std::string m_out = "mask.cpxa";
  cmd_mask->add_option("--rows", m_rows, "Mask rows (ky)");
  cmd_mask->add_option("--cols", m_cols, "Mask columns (kx for 2D, kz for 3D)");
  cmd_mask->add_option("--kind", m_kind, "poisson | uniform | full");
  cmd_mask->add_option("--accel", m_accel, "Acceleration target for poisson");
  cmd_mask->add_option("--calib", m_calib, "Fully sampled center size");
  cmd_mask->add_option("--ry", m_ry, "Row stride for uniform masks");
  cmd_mask->add_option("--rz", m_rz, "Column stride for uniform masks");
  cmd_mask->add_option("--seed", m_seed, "Poisson dart seed");
  cmd_mask->add_option("--out", m_out, "Output .cpxa path");

  // train-prior
  auto* cmd_train = app.add_subcommand(
      "train-prior",
      "Train the denoising image prior on a phantom ensemble and save a "
      "checkpoint directory");
  int t_count = 64, t_steps = 2000, t_batch = 8;
  std::size_t t_side = 64;
  std::uint64_t t_base_seed = 1000, t_seed = 7;
  double t_lr = 1e-3;
  int t_w0 = 32, t_w1 = 64, t_w2 = 96;
  std::string t_out = "prior";
  std::string t_loss_csv;
  cmd_train->add_option("--count", t_count, "Ensemble size");
  cmd_train->add_option("--side", t_side, "Phantom side length (square)");
  cmd_train->add_option("--base-seed", t_base_seed,
                        "First phantom seed; members use consecutive seeds");
  cmd_train->add_option("--steps", t_steps, "Optimization steps");
  cmd_train->add_option("--batch", t_batch, "Batch size");
  cmd_train->add_option("--lr", t_lr, "Adam learning rate");
  cmd_train->add_option("--seed", t_seed, "Training noise seed");
  cmd_train->add_option("--w0", t_w0, "Channel width, full resolution");
  cmd_train->add_option("--w1", t_w1, "Channel width, half resolution");
  cmd_train->add_option("--w2", t_w2, "Channel width, quarter resolution");
  cmd_train->add_option("--out", t_out, "Checkpoint directory");
  cmd_train->add_option("--loss-csv", t_loss_csv,
                        "Optional CSV path for the loss trace");

  // recon
  auto* cmd_recon = app.add_subcommand(
      "recon",
      "Run reconstruction arms against one simulated acquisition; the config "
      "file uses key = value lines and is echoed into the output directory");
  std::string r_config;
  std::vector<std::string> r_sets;
  cmd_recon->add_option("--config", r_config, "Experiment config file")
      ->required();
  cmd_recon->add_option("--set", r_sets,
                        "Override a config key, e.g. --set recon.iters=500");

  // cohort
  auto* cmd_cohort = app.add_subcommand(
      "cohort", "Repeat recon over several phantom seeds and summarize NRMSE");
  std::string c_config;
  int c_count = 8;
  std::vector<std::string> c_sets;
  cmd_cohort->add_option("--config", c_config, "Experiment config file")
      ->required();
  cmd_cohort->add_option("--count", c_count, "Number of members (>= 2)");
  cmd_cohort->add_option("--set", c_sets, "Override a config key");

  // eval
  auto* cmd_eval = app.add_subcommand(
      "eval", "Print the NRMSE between a reconstruction and a reference");
  std::string e_image, e_ref;
  cmd_eval->add_option("--image", e_image, "Reconstruction .cpxa")->required();
  cmd_eval->add_option("--ref", e_ref, "Reference .cpxa")->required();

  // figures
  auto* cmd_fig = app.add_subcommand(
      "figures",
      "Render magnitude panels, error maps, loss traces, and cohort box plots");
  std::string f_run, f_cohort;
  cmd_fig->add_option("--run", f_run, "Experiment run directory");
  cmd_fig->add_option("--cohort", f_cohort, "Cohort directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (cmd_phantom->parsed()) {
    ComplexArray<float> img = p_nz > 0 ? make_phantom_3d<float>(p_nz, p_ny, p_nx, p_seed)
                                       : make_phantom<float>(p_ny, p_nx, p_seed);
    fs::path out(p_out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_array(p_out, img);
    std::printf("phantom %s shape %s\n", p_out.c_str(), shape_string(img).c_str());
    return 0;
  }

  if (cmd_mask->parsed()) {
    SamplingMask mask;
    if (m_kind == "full") mask = make_full_mask(m_rows, m_cols);
    else if (m_kind == "uniform") mask = make_uniform_mask(m_rows, m_cols, m_ry, m_rz);
    else if (m_kind == "poisson") mask = make_poisson_mask(m_rows, m_cols, m_accel, m_calib, m_seed);
    else throw ConfigError("unknown mask kind: " + m_kind);
    fs::path out(m_out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_array(m_out, mask_to_array<float>(mask));
    std::printf("mask %s kept %zu of %zu (R = %.3f)\n", m_out.c_str(),
                mask.kept_count(), mask.kept.size(), mask.realized_acceleration());
    return 0;
  }

  if (cmd_train->parsed()) {
    auto images = make_ensemble<float>(std::size_t(t_count), t_side, t_side,
                                       t_base_seed);
    UnetOptions uo;
    uo.w0 = t_w0;
    uo.w1 = t_w1;
    uo.w2 = t_w2;
    Denoiser<float> den;
    Rng init(t_seed);
    den.net.setup(uo, init);
    PriorTrainOptions po;
    po.steps = t_steps;
    po.batch = t_batch;
    po.lr = t_lr;
    po.seed = t_seed;
    auto losses = train_denoiser(den, images, po);
    KeyValueConfig echo;
    echo.set_int("ensemble.count", t_count);
    echo.set_int("ensemble.side", long(t_side));
    echo.set_int("ensemble.base_seed", long(t_base_seed));
    echo.set_int("train.steps", t_steps);
    echo.set_int("train.batch", t_batch);
    echo.set_double("train.lr", t_lr);
    echo.set_int("train.seed", long(t_seed));
    save_denoiser(t_out, den, echo);
    if (!t_loss_csv.empty()) {
      std::ofstream f(t_loss_csv);
      f << "step,loss\n";
      for (std::size_t i = 0; i < losses.size(); ++i)
        f << i << "," << losses[i] << "\n";
    }
    double tail = 0.0;
    const std::size_t k = std::min<std::size_t>(losses.size(), 50);
    for (std::size_t i = losses.size() - k; i < losses.size(); ++i)
      tail += losses[i] / double(k);
    std::printf("prior %s params %zu final-loss %.5f\n", t_out.c_str(),
                den.net.param_count(), tail);
    return 0;
  }

  if (cmd_recon->parsed()) {
    KeyValueConfig cfg = KeyValueConfig::parse_file(r_config);
    apply_overrides(cfg, r_sets);
    ExperimentSpec spec = spec_from_config(cfg);
    auto rows = run_experiment<float>(spec);
    for (const auto& r : rows)
      std::printf("%s nrmse %.5f runtime %.1fs\n", r.arm.c_str(), r.nrmse,
                  r.runtime_s);
    return 0;
  }

  if (cmd_cohort->parsed()) {
    KeyValueConfig cfg = KeyValueConfig::parse_file(c_config);
    apply_overrides(cfg, c_sets);
    ExperimentSpec spec = spec_from_config(cfg);
    auto result = run_cohort<float>(spec, c_count);
    for (const auto& [arm, vals] : result.nrmse) {
      std::vector<double> s = vals;
      std::sort(s.begin(), s.end());
      const double med = (s.size() % 2) ? s[s.size() / 2]
                                        : 0.5 * (s[s.size() / 2 - 1] + s[s.size() / 2]);
      std::printf("%s median-nrmse %.5f over %zu members\n", arm.c_str(), med,
                  s.size());
    }
    return 0;
  }

  if (cmd_eval->parsed()) {
    if (!fs::exists(e_image)) throw ConfigError("eval: no such file: " + e_image);
    if (!fs::exists(e_ref)) throw ConfigError("eval: no such file: " + e_ref);
    auto img = load_array_as<float>(e_image);
    auto ref = load_array_as<float>(e_ref);
    std::printf("%.17g\n", nrmse(img, ref));
    return 0;
  }

  if (cmd_fig->parsed()) {
    if (f_run.empty() && f_cohort.empty())
      throw ConfigError("figures: pass --run and/or --cohort");
    std::size_t count = 0;
    if (!f_run.empty()) count += render_run_figures<float>(f_run).size();
    if (!f_cohort.empty()) count += render_cohort_figures(f_cohort).size();
    std::printf("figures %zu\n", count);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const NumericalFailure& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
