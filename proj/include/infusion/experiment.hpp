#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "infusion/coils.hpp"
#include "infusion/common.hpp"
#include "infusion/config.hpp"
#include "infusion/cpxa.hpp"
#include "infusion/fista.hpp"
#include "infusion/inr_io.hpp"
#include "infusion/metrics.hpp"
#include "infusion/phantom.hpp"
#include "infusion/recon.hpp"

namespace infusion {

inline const std::vector<std::string>& known_arms() {
  static const std::vector<std::string> arms = {
      "zero-filled", "cs-wavelet", "inr-none", "inr-wavelet", "infusion"};
  return arms;
}

struct ExperimentSpec {
  std::size_t ny = 64, nx = 64, nz = 0;  // nz > 0 selects volume experiments
  std::uint64_t phantom_seed = 1;
  int ncoils = 4;
  std::uint64_t coil_seed = 11;

  std::string mask_kind = "poisson";  // poisson | uniform | full
  double accel = 4.0;
  int calib = 8;
  std::uint64_t mask_seed = 101;
  int uniform_ry = 2, uniform_rz = 1;

  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 202;

  std::vector<std::string> arms = {"zero-filled"};
  std::filesystem::path prior_dir;
  std::filesystem::path out_dir = "run";
  std::uint64_t seed = 0;
  std::string mode = "2d";  // 2d | hybrid-3d | coordinate-3d

  ReconOptions recon;
  double cs_lambda = 2e-3;
  int cs_iters = 80;
};

struct MetricsRow {
  std::string arm;
  double nrmse = 0.0;
  double runtime_s = 0.0;
  std::size_t peak_mem_bytes = 0;
};

inline void validate_spec(const ExperimentSpec& spec) {
  if (spec.arms.empty()) throw ConfigError("no reconstruction arms requested");
  for (const auto& a : spec.arms) {
    bool ok = false;
    for (const auto& k : known_arms()) ok = ok || (a == k);
    if (!ok) throw ConfigError("unknown arm: " + a);
  }
  bool wants_prior = false;
  for (const auto& a : spec.arms) wants_prior = wants_prior || a == "infusion";
  if (wants_prior && !std::filesystem::exists(spec.prior_dir / "manifest.txt"))
    throw ConfigError("infusion arm requested but prior checkpoint not found at " +
                      (spec.prior_dir / "manifest.txt").string());
  if (spec.mode != "2d" && spec.mode != "hybrid-3d" &&
      spec.mode != "coordinate-3d")
    throw ConfigError("unknown mode: " + spec.mode);
  if ((spec.mode == "2d") != (spec.nz == 0))
    throw ConfigError("mode and grid dimensionality disagree");
  if (spec.mask_kind != "poisson" && spec.mask_kind != "uniform" &&
      spec.mask_kind != "full")
    throw ConfigError("unknown mask kind: " + spec.mask_kind);
}

inline ReconMode recon_mode_from_string(const std::string& s) {
  if (s == "2d") return ReconMode::Image2d;
  if (s == "hybrid-3d") return ReconMode::Hybrid3d;
  return ReconMode::Coordinate3d;
}

inline std::string join_arms(const std::vector<std::string>& arms) {
  std::string s;
  for (std::size_t i = 0; i < arms.size(); ++i)
    s += (i ? "," : "") + arms[i];
  return s;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline KeyValueConfig spec_to_config(const ExperimentSpec& s) {
  KeyValueConfig c;
  c.set_int("grid.ny", long(s.ny));
  c.set_int("grid.nx", long(s.nx));
  c.set_int("grid.nz", long(s.nz));
  c.set_int("phantom.seed", long(s.phantom_seed));
  c.set_int("coils.count", s.ncoils);
  c.set_int("coils.seed", long(s.coil_seed));
  c.set("mask.kind", s.mask_kind);
  c.set_double("mask.accel", s.accel);
  c.set_int("mask.calib", s.calib);
  c.set_int("mask.seed", long(s.mask_seed));
  c.set_int("mask.uniform_ry", s.uniform_ry);
  c.set_int("mask.uniform_rz", s.uniform_rz);
  c.set_double("noise.sigma", s.noise_sigma);
  c.set_int("noise.seed", long(s.noise_seed));
  c.set("arms", join_arms(s.arms));
  c.set("prior.dir", s.prior_dir.string());
  c.set("out.dir", s.out_dir.string());
  c.set_int("seed", long(s.seed));
  c.set("mode", s.mode);
  c.set_int("recon.iters", s.recon.iters);
  c.set_double("recon.lr", s.recon.lr);
  c.set_int("recon.fourier_features", s.recon.fourier_features);
  c.set_double("recon.fourier_scale", s.recon.fourier_scale);
  c.set_int("recon.hidden", s.recon.hidden);
  c.set_int("recon.hidden_hybrid", s.recon.hidden_hybrid);
  c.set_int("recon.hidden_layers", s.recon.hidden_layers);
  c.set_double("recon.wavelet_lambda", s.recon.wavelet_lambda);
  c.set_int("recon.wavelet_levels", s.recon.wavelet_levels);
  c.set_double("recon.w0", s.recon.w0);
  c.set_double("recon.tau", s.recon.tau);
  c.set_double("recon.sigma_floor", s.recon.sigma_floor);
  c.set_int("recon.heun_steps", s.recon.heun_steps);
  c.set_int("recon.k_slices", s.recon.k_slices);
  c.set("recon.differentiable_prior",
        s.recon.differentiable_prior ? "true" : "false");
  c.set("recon.perceptual", s.recon.perceptual == PerceptualKind::PixelL2
                                ? "pixel-l2"
                                : "random-feature");
  c.set_int("recon.perceptual_seed", long(s.recon.perceptual_seed));
  c.set_double("cs.lambda", s.cs_lambda);
  c.set_int("cs.iters", s.cs_iters);
  return c;
}

inline ExperimentSpec spec_from_config(const KeyValueConfig& c) {
  ExperimentSpec s;
  s.ny = std::size_t(c.get_int("grid.ny", long(s.ny)));
  s.nx = std::size_t(c.get_int("grid.nx", long(s.nx)));
  s.nz = std::size_t(c.get_int("grid.nz", long(s.nz)));
  s.phantom_seed = std::uint64_t(c.get_int("phantom.seed", long(s.phantom_seed)));
  s.ncoils = int(c.get_int("coils.count", s.ncoils));
  s.coil_seed = std::uint64_t(c.get_int("coils.seed", long(s.coil_seed)));
  s.mask_kind = c.get_or("mask.kind", s.mask_kind);
  s.accel = c.get_double("mask.accel", s.accel);
  s.calib = int(c.get_int("mask.calib", s.calib));
  s.mask_seed = std::uint64_t(c.get_int("mask.seed", long(s.mask_seed)));
  s.uniform_ry = int(c.get_int("mask.uniform_ry", s.uniform_ry));
  s.uniform_rz = int(c.get_int("mask.uniform_rz", s.uniform_rz));
  s.noise_sigma = c.get_double("noise.sigma", s.noise_sigma);
  s.noise_seed = std::uint64_t(c.get_int("noise.seed", long(s.noise_seed)));
  if (c.has("arms")) s.arms = split_list(c.get("arms"));
  s.prior_dir = c.get_or("prior.dir", s.prior_dir.string());
  s.out_dir = c.get_or("out.dir", s.out_dir.string());
  s.seed = std::uint64_t(c.get_int("seed", long(s.seed)));
  s.mode = c.get_or("mode", s.mode);
  s.recon.mode = recon_mode_from_string(s.mode);
  s.recon.iters = int(c.get_int("recon.iters", s.recon.iters));
  s.recon.lr = c.get_double("recon.lr", s.recon.lr);
  s.recon.fourier_features =
      int(c.get_int("recon.fourier_features", s.recon.fourier_features));
  s.recon.fourier_scale =
      c.get_double("recon.fourier_scale", s.recon.fourier_scale);
  s.recon.hidden = int(c.get_int("recon.hidden", s.recon.hidden));
  s.recon.hidden_hybrid =
      int(c.get_int("recon.hidden_hybrid", s.recon.hidden_hybrid));
  s.recon.hidden_layers =
      int(c.get_int("recon.hidden_layers", s.recon.hidden_layers));
  s.recon.wavelet_lambda =
      c.get_double("recon.wavelet_lambda", s.recon.wavelet_lambda);
  s.recon.wavelet_levels =
      int(c.get_int("recon.wavelet_levels", s.recon.wavelet_levels));
  s.recon.w0 = c.get_double("recon.w0", s.recon.w0);
  s.recon.tau = c.get_double("recon.tau", s.recon.tau);
  s.recon.sigma_floor = c.get_double("recon.sigma_floor", s.recon.sigma_floor);
  s.recon.heun_steps = int(c.get_int("recon.heun_steps", s.recon.heun_steps));
  s.recon.k_slices = int(c.get_int("recon.k_slices", s.recon.k_slices));
  s.recon.differentiable_prior =
      c.get_bool("recon.differentiable_prior", s.recon.differentiable_prior);
  s.recon.perceptual = perceptual_kind_from_string(
      c.get_or("recon.perceptual", "pixel-l2"));
  s.recon.perceptual_seed =
      std::uint64_t(c.get_int("recon.perceptual_seed",
                                 long(s.recon.perceptual_seed)));
  s.cs_lambda = c.get_double("cs.lambda", s.cs_lambda);
  s.cs_iters = int(c.get_int("cs.iters", s.cs_iters));
  return s;
}

inline SamplingMask make_full_mask(std::size_t rows, std::size_t cols) {
  SamplingMask m;
  m.rows = rows;
  m.cols = cols;
  m.acceleration_target = 1.0;
  m.kept.assign(rows * cols, 1);
  return m;
}

inline void write_trace_csv(const std::filesystem::path& path,
                            const std::vector<IterationRecord>& trace) {
  std::ofstream f(path);
  f << "j,L_data,L_diffusion,w,L_total\n";
  char buf[256];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", r.j,
                  r.data_loss, r.reg_loss, r.weight, r.total);
    f << buf;
  }
}

inline void write_metrics_csv(const std::filesystem::path& path,
                              const std::vector<MetricsRow>& rows) {
  std::ofstream f(path);
  f << "arm,nrmse,runtime_s,peak_mem_bytes\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.3f,%zu\n", r.arm.c_str(),
                  r.nrmse, r.runtime_s, r.peak_mem_bytes);
    f << buf;
  }
}

// Runs every requested arm against one shared measurement realization.
// Per-arm randomness comes from streams scoped by the arm name, so adding or
// removing an arm never changes another arm's output.
template <typename T = float>
std::vector<MetricsRow> run_experiment(const ExperimentSpec& spec) {
  validate_spec(spec);
  std::filesystem::create_directories(spec.out_dir);
  spec_to_config(spec).save(spec.out_dir / "config.txt");

  const bool volumetric = spec.nz > 0;
  ComplexArray<T> truth = volumetric
                              ? make_phantom_3d<T>(spec.nz, spec.ny, spec.nx,
                                                   spec.phantom_seed)
                              : make_phantom<T>(spec.ny, spec.nx,
                                                spec.phantom_seed);
  const double peak = max_abs(truth);
  if (peak > 0)
    for (std::size_t i = 0; i < truth.size(); ++i)
      truth[i] = std::complex<T>(T(truth[i].real() / peak),
                                 T(truth[i].imag() / peak));

  SensitivityMaps<T> S =
      simulate_coil_maps<T>(spec.ny, spec.nx, spec.ncoils, spec.coil_seed);

  SamplingMask mask;
  const std::size_t mask_rows = spec.ny;
  const std::size_t mask_cols = volumetric ? spec.nz : spec.nx;
  if (spec.mask_kind == "full") {
    mask = make_full_mask(mask_rows, mask_cols);
  } else if (spec.mask_kind == "uniform") {
    mask = make_uniform_mask(mask_rows, mask_cols, spec.uniform_ry,
                             spec.uniform_rz);
  } else {
    mask = make_poisson_mask(mask_rows, mask_cols, spec.accel, spec.calib,
                             spec.mask_seed);
  }

  KSpaceMeasurements<T> y = forward(truth, S, mask);
  if (spec.noise_sigma > 0.0) {
    Rng nrng = Rng(spec.noise_seed).stream("measurement.noise");
    const double s = spec.noise_sigma / std::sqrt(2.0);
    for (std::size_t c = 0; c < std::size_t(spec.ncoils); ++c)
      for (std::size_t i = 0; i < y.values.size() / std::size_t(spec.ncoils);
           ++i) {
        const std::size_t idx = c * (y.values.size() / std::size_t(spec.ncoils)) + i;
        const std::size_t col = volumetric
                                    ? ((i / (spec.ny * spec.nx)) % spec.nz)
                                    : 0;
        const std::size_t row = volumetric
                                    ? ((i / spec.nx) % spec.ny)
                                    : (i / spec.nx);
        const bool kept = volumetric ? mask.at(row, col)
                                     : mask.kept[i] != 0;
        const double re = s * nrng.normal(), im = s * nrng.normal();
        if (kept)
          y.values[idx] += std::complex<T>(T(re), T(im));
      }
  }

  save_array(spec.out_dir / "ground_truth.cpxa", truth);
  save_array(spec.out_dir / "mask.cpxa", mask_to_array<T>(mask));
  save_array(spec.out_dir / "coil_maps.cpxa", S.values);

  Denoiser<T> prior;
  bool prior_loaded = false;
  std::vector<MetricsRow> rows;
  for (const auto& arm : spec.arms) {
    const std::filesystem::path arm_dir = spec.out_dir / arm;
    std::filesystem::create_directories(arm_dir);
    WallTimer timer;
    ComplexArray<T> image;
    std::vector<IterationRecord> trace;

    ReconOptions ro = spec.recon;
    ro.mode = recon_mode_from_string(spec.mode);
    ro.seed = Rng(spec.seed).stream("arm." + arm).next();

    if (arm == "zero-filled") {
      image = adjoint(y, S, mask);
    } else if (arm == "cs-wavelet") {
      FistaOptions fo;
      fo.lambda = spec.cs_lambda;
      fo.iters = spec.cs_iters;
      fo.record_objective = true;
      auto res = fista_l1wavelet(y, S, fo);
      image = std::move(res.image);
      for (std::size_t i = 0; i < res.objective.size(); ++i) {
        IterationRecord r;
        r.j = int(i);
        r.data_loss = res.objective[i];
        r.total = res.objective[i];
        trace.push_back(r);
      }
    } else {
      if (arm == "inr-none") ro.reg = Regularizer::None;
      else if (arm == "inr-wavelet") ro.reg = Regularizer::Wavelet;
      else ro.reg = Regularizer::Diffusion;
      if (ro.reg == Regularizer::Diffusion && !prior_loaded) {
        prior = load_denoiser<T>(spec.prior_dir);
        prior_loaded = true;
      }
      auto res = reconstruct<T>(y, S, prior_loaded ? &prior : nullptr, ro);
      image = std::move(res.image);
      trace = std::move(res.trace);
      save_inr(arm_dir / "inr", *res.model);
    }

    MetricsRow row;
    row.arm = arm;
    row.runtime_s = timer.seconds();
    row.nrmse = nrmse(image, truth);
    row.peak_mem_bytes = peak_rss_bytes();
    rows.push_back(row);

    save_array(arm_dir / "image.cpxa", image);
    if (!trace.empty()) write_trace_csv(arm_dir / "trace.csv", trace);
  }

  write_metrics_csv(spec.out_dir / "metrics.csv", rows);
  return rows;
}

struct CohortResult {
  // per arm, NRMSE per member in seed order
  std::map<std::string, std::vector<double>> nrmse;
};

// Repeats run_experiment over `count` phantom seeds. Member seeds step
// together (phantom, mask, noise, arm streams) so members are independent
// realizations; results merge in seed order.
template <typename T = float>
CohortResult run_cohort(const ExperimentSpec& base, int count) {
  if (count < 2) throw ConfigError("cohort requires count >= 2");
  validate_spec(base);
  std::filesystem::create_directories(base.out_dir);

  CohortResult result;
  std::ofstream csv(base.out_dir / "cohort.csv");
  csv << "member,phantom_seed,arm,nrmse\n";
  for (int i = 0; i < count; ++i) {
    ExperimentSpec member = base;
    member.phantom_seed = base.phantom_seed + std::uint64_t(i);
    member.mask_seed = base.mask_seed + std::uint64_t(i);
    member.noise_seed = base.noise_seed + std::uint64_t(i);
    member.seed = base.seed + std::uint64_t(i);
    member.out_dir = base.out_dir / ("member_" + std::to_string(i));
    auto rows = run_experiment<T>(member);
    for (const auto& r : rows) {
      result.nrmse[r.arm].push_back(r.nrmse);
      char buf[160];
      std::snprintf(buf, sizeof buf, "%d,%llu,%s,%.17g\n", i,
                    (unsigned long long)member.phantom_seed, r.arm.c_str(),
                    r.nrmse);
      csv << buf;
    }
  }

  std::ofstream summary(base.out_dir / "cohort_summary.csv");
  summary << "arm,count,median,mean,min,max\n";
  for (auto& [arm, vals] : result.nrmse) {
    std::vector<double> sorted = vals;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = (n % 2) ? sorted[n / 2]
                                  : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    double mean = 0.0;
    for (double v : sorted) mean += v / double(n);
    char buf[220];
    std::snprintf(buf, sizeof buf, "%s,%zu,%.17g,%.17g,%.17g,%.17g\n",
                  arm.c_str(), n, median, mean, sorted.front(), sorted.back());
    summary << buf;
  }

  KeyValueConfig meta = spec_to_config(base);
  meta.set_int("cohort.count", count);
  meta.set("cohort.note",
           "coil count fixed at " + std::to_string(base.ncoils) +
               " for every member; source cohorts mix coil counts");
  meta.save(base.out_dir / "cohort_config.txt");
  return result;
}

}  // namespace infusion
