// Acceptance gate: every release criterion in one binary, one line each.
// Exit code is the number of failed criteria.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "infusion/coils.hpp"
#include "infusion/experiment.hpp"
#include "infusion/inr.hpp"
#include "infusion/mask.hpp"
#include "infusion/metrics.hpp"
#include "infusion/phantom.hpp"
#include "infusion/prior.hpp"
#include "infusion/recon.hpp"
#include "infusion/sampler.hpp"
#include "infusion/schedules.hpp"

using namespace infusion;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int n, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s (%s)\n", n, ok ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return std::string(buf);
}

int run_cmd(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream f(p);
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <typename T>
ComplexArray<T> random_array(std::vector<std::size_t> dims, Rng& rng) {
  ComplexArray<T> a(std::move(dims));
  for (std::size_t i = 0; i < a.size(); ++i)
    a[i] = std::complex<T>(T(rng.normal()), T(rng.normal()));
  return a;
}

// Centered-index DFT evaluated directly from the definition.
ComplexArray<double> dft2c_brute(const ComplexArray<double>& x) {
  const std::size_t ny = x.dim(0), nx = x.dim(1);
  const double sy = double(ny / 2), sx = double(nx / 2);
  ComplexArray<double> X({ny, nx});
  for (std::size_t m = 0; m < ny; ++m)
    for (std::size_t n = 0; n < nx; ++n) {
      std::complex<double> acc = 0;
      for (std::size_t u = 0; u < ny; ++u)
        for (std::size_t v = 0; v < nx; ++v) {
          const double ph =
              -2.0 * M_PI * ((double(m) - sy) * (double(u) - sy) / double(ny) +
                             (double(n) - sx) * (double(v) - sx) / double(nx));
          acc += std::complex<double>(x.at2(u, v)) *
                 std::complex<double>(std::cos(ph), std::sin(ph));
        }
      X.at2(m, n) = acc / std::sqrt(double(ny * nx));
    }
  return X;
}

template <typename T>
double adjoint_identity_rel_err(std::size_t ny, std::size_t nx, std::size_t nz,
                                int ncoils, const SamplingMask& mask,
                                Rng& rng) {
  SensitivityMaps<T> S = simulate_coil_maps<T>(ny, nx, ncoils, rng.next());
  ComplexArray<T> x = nz ? random_array<T>({nz, ny, nx}, rng)
                         : random_array<T>({ny, nx}, rng);
  KSpaceMeasurements<T> y;
  y.mask = mask;
  y.ncoils = ncoils;
  y.values = nz ? random_array<T>({std::size_t(ncoils), nz, ny, nx}, rng)
                : random_array<T>({std::size_t(ncoils), ny, nx}, rng);

  KSpaceMeasurements<T> Ax = forward(x, S, mask);
  ComplexArray<T> Ahy = adjoint(y, S, mask);
  const std::complex<double> lhs = inner_product(Ax.values, y.values);
  const std::complex<double> rhs = inner_product(x, Ahy);
  return std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-30);
}

template <typename T>
double tensor_nrmse(const Tensor3<T>& x, const Tensor3<T>& ref) {
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < x.m.size(); ++i) {
    const double d = double(x.m.data()[i]) - double(ref.m.data()[i]);
    num += d * d;
    den += double(ref.m.data()[i]) * double(ref.m.data()[i]);
  }
  return std::sqrt(num / den);
}

// arm -> (nrmse, peak_mem_bytes)
std::map<std::string, std::pair<double, std::size_t>> read_metrics(
    const fs::path& csv) {
  std::map<std::string, std::pair<double, std::size_t>> out;
  auto rows = read_csv(csv);
  for (std::size_t i = 1; i < rows.size(); ++i)
    out[rows[i][0]] = {std::stod(rows[i][1]),
                      std::size_t(std::stoull(rows[i][3]))};
  return out;
}

void write_lines(const fs::path& p,
                 const std::vector<std::string>& lines) {
  std::ofstream f(p);
  for (const auto& l : lines) f << l << "\n";
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "infusion_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path prior_dir = root / "prior";
  const std::string cli = INFUSION_CLI_PATH;

  std::printf("acceptance scratch directory: %s\n", root.c_str());
  std::fflush(stdout);

  // Shared setup: the desk-scale prior used by the sampler and ordering
  // criteria. Training seeds sit far away from every evaluation seed used
  // below.
  WallTimer setup_timer;
  std::vector<ComplexArray<float>> ensemble =
      make_ensemble<float>(64, 64, 64, 1000);
  Denoiser<float> prior;
  {
    Rng init(7);
    prior.net.setup(UnetOptions{}, init);
    PriorTrainOptions po;
    po.steps = 2000;
    po.batch = 8;
    po.lr = 1e-3;
    po.seed = 7;
    std::vector<double> losses = train_denoiser(prior, ensemble, po);
    KeyValueConfig echo;
    echo.set("purpose", "acceptance gate prior");
    save_denoiser(prior_dir, prior, echo);
    double tail = 0.0;
    for (std::size_t i = losses.size() - 50; i < losses.size(); ++i)
      tail += losses[i] / 50.0;
    std::printf("setup: prior trained, %zu params, smoothed loss %.4f -> %.4f, %.0f s\n",
                prior.net.param_count(), losses.front(), tail,
                setup_timer.seconds());
    std::fflush(stdout);
  }

  // ---- criterion 1: operator correctness ----------------------------------
  try {
    WallTimer t;
    Rng rng(9001);
    double worst = 0.0;
    const int coils[3] = {1, 4, 8};
    for (int i = 0; i < 60; ++i) {
      const std::size_t ny = 8 + 2 * rng.uniform_index(9);
      const std::size_t nx = 8 + 2 * rng.uniform_index(9);
      SamplingMask m = (i % 4 == 0)
                           ? make_full_mask(ny, nx)
                           : make_poisson_mask(ny, nx, 2.0, 4, rng.next());
      worst = std::max(worst, adjoint_identity_rel_err<double>(
                                  ny, nx, 0, coils[i % 3], m, rng));
    }
    for (int i = 0; i < 40; ++i) {
      const std::size_t ny = (i % 2) ? 12 : 16, nx = 16;
      const std::size_t nz = (i % 3) ? 4 : 6;
      SamplingMask m = (i % 4 == 0)
                           ? make_full_mask(ny, nz)
                           : make_uniform_mask(ny, nz, 2, 1);
      worst = std::max(worst, adjoint_identity_rel_err<double>(
                                  ny, nx, nz, coils[i % 3], m, rng));
    }

    // Transform oracle on an 8x8 grid.
    ComplexArray<double> x8 = random_array<double>({8, 8}, rng);
    ComplexArray<double> ref = dft2c_brute(x8);
    ComplexArray<double> got = fft2c(x8);
    double dft_err = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i)
      dft_err = std::max(dft_err, std::abs(std::complex<double>(got[i]) -
                                           std::complex<double>(ref[i])));

    // The production arrays are float; record that path's identity error too.
    Rng frng(9002);
    double fworst = 0.0;
    for (int i = 0; i < 20; ++i) {
      SamplingMask m = make_poisson_mask(16, 16, 2.0, 4, frng.next());
      fworst = std::max(fworst, adjoint_identity_rel_err<float>(
                                    16, 16, 0, coils[i % 3], m, frng));
    }

    const double el = t.seconds();
    const bool ok = worst <= 1e-6 && dft_err <= 1e-5 && el < 10.0;
    report(1, ok,
           fmt("100 adjoint instances worst rel %.2e, dft oracle %.2e, "
               "float-path rel %.2e, %.1f s",
               worst, dft_err, fworst, el));
  } catch (const std::exception& e) {
    report(1, false, e.what());
  }

  // ---- criterion 2: gradient correctness ----------------------------------
  try {
    WallTimer t;
    const std::size_t ny = 8, nx = 8;

    InrOptions io;
    io.fourier_features = 4;
    io.hidden = 8;
    io.hidden_layers = 4;
    Rng root_rng(41);
    Inr<double> model;
    model.setup(io, root_rng);
    const Mat<double> enc = model.enc.encode(coordinate_grid_2d<double>(ny, nx));

    Rng scene(43);
    ComplexArray<double> target = random_array<double>({ny, nx}, scene);
    SensitivityMaps<double> S = simulate_coil_maps<double>(ny, nx, 2, 45);
    SamplingMask mask = make_poisson_mask(ny, nx, 1.5, 2, 47);
    ComplexArray<double> truth = random_array<double>({ny, nx}, scene);
    KSpaceMeasurements<double> y = forward(truth, S, mask);

    // Fixed prior sample: the regularization target is constant inside one
    // iteration, which is exactly the function the update differentiates.
    Rng pinit(49);
    Denoiser<double> toy_prior;
    UnetOptions uo;
    uo.w0 = 4;
    uo.w1 = 6;
    uo.w2 = 8;
    uo.emb_dim = 8;
    toy_prior.net.setup(uo, pinit);
    ComplexArray<double> d_fixed;
    {
      Mat<double> out0 = model.forward(enc, false);
      ComplexArray<double> img0 = output_to_image(out0, ny, nx);
      Tensor3<double> q = image_to_tensor(img0);
      Rng nz_rng(51);
      for (Eigen::Index i = 0; i < q.m.size(); ++i)
        q.m.data()[i] += 0.5 * nz_rng.normal();
      SamplerOptions so;
      so.steps = 3;
      d_fixed = tensor_to_image(heun_sample(toy_prior, q, 0.5, so));
    }
    PerceptualLoss<double> perc(PerceptualKind::PixelL2, 0);
    const double w = 0.7;

    enum class Objective { Fit, Data, Total };
    auto loss_of = [&](Objective which) {
      Mat<double> out = model.forward(enc, false);
      ComplexArray<double> img = output_to_image(out, ny, nx);
      if (which == Objective::Fit) {
        double l = 0.0;
        for (std::size_t i = 0; i < img.size(); ++i)
          l += std::norm(std::complex<double>(img[i]) -
                         std::complex<double>(target[i]));
        return l;
      }
      const double ld = data_loss_and_grad(img, y, S);
      if (which == Objective::Data) return ld;
      return ld + w * perc.eval(img, d_fixed);
    };

    auto grad_of = [&](Objective which) {
      Mat<double> out = model.forward(enc);
      ComplexArray<double> img = output_to_image(out, ny, nx);
      ComplexArray<double> g(img.dims());
      if (which == Objective::Fit) {
        for (std::size_t i = 0; i < img.size(); ++i)
          g[i] = std::complex<double>(2.0) * (img[i] - target[i]);
      } else {
        data_loss_and_grad(img, y, S, &g);
        if (which == Objective::Total) {
          ComplexArray<double> gp;
          perc.eval(img, d_fixed, &gp);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += w * gp[i];
        }
      }
      model.backward(image_grad_to_output(g));
    };

    auto params = collect_params<double>(
        [&](const ParamVisitor<double>& v) { model.visit_params(v); });

    // The coordinate network is piecewise linear in its parameters; a
    // difference quotient that straddles a relu kink measures the wrong
    // piece, so probes whose activation sign pattern differs between the
    // two evaluation points are skipped.
    auto relu_pattern = [&]() {
      model.forward(enc, true);
      std::vector<std::uint8_t> s;
      for (const auto& z : model.pre_acts)
        for (Eigen::Index i = 0; i < z.size(); ++i)
          s.push_back(z.data()[i] > 0 ? 1 : 0);
      return s;
    };

    double worst = 0.0;
    int checked = 0;
    Rng pick(53);
    for (Objective which :
         {Objective::Fit, Objective::Data, Objective::Total}) {
      for (Param<double>* p : params) p->grad.setZero();
      grad_of(which);
      for (Param<double>* p : params) {
        const Eigen::Index idx =
            Eigen::Index(pick.uniform_index(std::size_t(p->value.size())));
        const double an = p->grad.data()[idx];
        const double eps = 1e-6;
        const double saved = p->value.data()[idx];
        p->value.data()[idx] = saved + eps;
        const auto pat_p = relu_pattern();
        const double lp = loss_of(which);
        p->value.data()[idx] = saved - eps;
        const auto pat_m = relu_pattern();
        const double lm = loss_of(which);
        p->value.data()[idx] = saved;
        if (pat_p != pat_m) continue;
        const double fd = (lp - lm) / (2.0 * eps);
        const double rel =
            std::abs(an - fd) / std::max({std::abs(fd), std::abs(an), 1e-6});
        worst = std::max(worst, rel);
        ++checked;
      }
    }

    const double el = t.seconds();
    const bool ok = worst <= 1e-3 && checked >= 24 && el < 60.0;
    report(2, ok,
           fmt("%d parameter probes across fit, data, and weighted-total "
               "objectives, worst rel %.2e, %.1f s",
               checked, worst, el));
  } catch (const std::exception& e) {
    report(2, false, e.what());
  }

  // ---- criterion 3: schedule contract -------------------------------------
  try {
    const int J = 50;
    bool ok = sigma_min_schedule(0, J) == 1.0 && weight_schedule(0, J) == 1.0;
    for (int j = 1; j < J && ok; ++j) {
      ok = ok && sigma_min_schedule(j, J) < sigma_min_schedule(j - 1, J);
      ok = ok && weight_schedule(j, J) < weight_schedule(j - 1, J);
    }
    // Long runs clamp the floor instead of going below it.
    ok = ok && sigma_min_schedule(199, 200) == 0.02;

    Rng rng(61);
    int inside = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
      const int j = int(rng.uniform_index(std::size_t(J)));
      const double s = draw_perturbation_sigma(rng, j, J);
      if (s >= sigma_min_schedule(j, J) && s <= 1.0) ++inside;
    }
    ok = ok && inside == draws;
    report(3, ok,
           fmt("sigma_min(0)=1, w(0)=1, both strictly decreasing, %d/%d "
               "draws inside the band",
               inside, draws));
  } catch (const std::exception& e) {
    report(3, false, e.what());
  }

  // ---- criterion 4: sampler contract --------------------------------------
  try {
    WallTimer t;
    Tensor3<float> q = image_to_tensor(ensemble[3]);
    Rng nrng(555);
    for (Eigen::Index i = 0; i < q.m.size(); ++i)
      q.m.data()[i] += float(0.5 * nrng.normal());
    HeunTape<float> tape;
    Tensor3<float> s1 = heun_sample(prior, q, 0.5, SamplerOptions{}, &tape);
    const bool default_ok =
        SamplerOptions{}.steps == 10 && tape.xs.size() == 10 &&
        tape.sigmas.size() == 11;
    Tensor3<float> s2 = heun_sample(prior, q, 0.5);
    const bool bit_ok =
        std::memcmp(s1.m.data(), s2.m.data(),
                    sizeof(float) * std::size_t(s1.m.size())) == 0;

    Tensor3<float> clean = image_to_tensor(ensemble[0]);
    Tensor3<float> near = heun_sample(prior, clean, 0.002);
    const double drift = tensor_nrmse(near, clean);

    const double el = t.seconds();
    const bool ok = default_ok && bit_ok && drift <= 0.1 && el < 120.0;
    report(4, ok,
           fmt("10-step default %s, bitwise reproducible %s, near-clean "
               "drift NRMSE %.4f, %.1f s",
               default_ok ? "yes" : "no", bit_ok ? "yes" : "no", drift, el));
  } catch (const std::exception& e) {
    report(4, false, e.what());
  }

  // ---- criterion 5: INR expressivity --------------------------------------
  try {
    WallTimer t;
    ComplexArray<float> target = make_phantom<float>(64, 64, 4242);
    InrOptions io;
    io.fourier_features = 128;
    io.hidden = 256;
    Rng r5(77);
    Inr<float> model;
    model.setup(io, r5);
    fit_to_image(model, target, 2000, 1e-3);
    const Mat<float> enc = model.enc.encode(coordinate_grid_2d<float>(64, 64));
    Mat<float> out = model.forward(enc, false);
    const double err = nrmse(output_to_image(out, 64, 64), target);

    InrOptions ho;
    ho.fourier_features = 128;
    ho.hidden = 512;
    ho.out_dim = 32;
    Rng r5b(78);
    Inr<float> hybrid;
    hybrid.setup(ho, r5b);
    Mat<float> hout = hybrid.forward(
        hybrid.enc.encode(coordinate_grid_2d<float>(64, 64)), false);
    ComplexArray<float> vol = output_to_volume_hybrid(hout, 16, 64, 64);
    const bool shape_ok =
        vol.rank() == 3 && vol.dim(0) == 16 && vol.dim(1) == 64 &&
        vol.dim(2) == 64;

    const double el = t.seconds();
    const bool ok = err <= 0.05 && shape_ok && el < 300.0;
    report(5, ok,
           fmt("64x64 fit NRMSE %.4f in 2000 steps, hybrid head volume "
               "64x64x16 %s, %.0f s",
               err, shape_ok ? "yes" : "no", el));
  } catch (const std::exception& e) {
    report(5, false, e.what());
  }

  // ---- criterion 6: ordering reproduction ---------------------------------
  try {
    WallTimer t;
    const int instances = 8;
    std::map<std::string, std::vector<double>> errs;
    for (int i = 0; i < instances; ++i) {
      ExperimentSpec spec;
      spec.ny = 64;
      spec.nx = 64;
      spec.ncoils = 4;
      spec.coil_seed = 11;
      spec.phantom_seed = 3000 + 97 * std::uint64_t(i);
      spec.mask_kind = "poisson";
      spec.accel = 4.0;
      spec.calib = 8;
      spec.mask_seed = 7000 + std::uint64_t(i);
      spec.arms = {"cs-wavelet", "inr-none", "inr-wavelet", "infusion"};
      spec.prior_dir = prior_dir;
      spec.out_dir = root / fmt("ordering_%d", i);
      spec.seed = 100 + std::uint64_t(i);
      spec.recon.iters = 800;
      auto rows = run_experiment<float>(spec);
      for (const auto& r : rows) errs[r.arm].push_back(r.nrmse);
      std::printf("criterion 6: instance %d done at %.0f s\n", i, t.seconds());
      std::fflush(stdout);
    }

    const double med_cs = median(errs["cs-wavelet"]);
    const double med_none = median(errs["inr-none"]);
    const double med_wav = median(errs["inr-wavelet"]);
    const double med_inf = median(errs["infusion"]);
    int gap = 0;
    for (int i = 0; i < instances; ++i)
      if (errs["infusion"][std::size_t(i)] <=
          errs["inr-wavelet"][std::size_t(i)])
        ++gap;

    const double el = t.seconds();
    const bool ok = med_inf <= med_wav && med_wav <= med_none &&
                    med_inf <= med_cs && gap >= 6 && el < 8.0 * 3600.0;
    report(6, ok,
           fmt("median NRMSE infusion %.4f <= inr-wavelet %.4f <= inr-none "
               "%.4f, infusion <= cs-wavelet %.4f, per-instance gap %d/8, "
               "%.0f s",
               med_inf, med_wav, med_none, med_cs, gap, el));
  } catch (const std::exception& e) {
    report(6, false, e.what());
  }

  // ---- criterion 7: hybrid 3D feasibility ---------------------------------
  try {
    WallTimer t;
    const fs::path hyb_dir = root / "hybrid3d", coord_dir = root / "coord3d";
    const fs::path cfg_h = root / "hybrid3d.txt", cfg_c = root / "coord3d.txt";
    // The hybrid head is narrowed from its paper-scale default so the run
    // fits the time budget of a single-core gate; the architecture is
    // unchanged.
    write_lines(cfg_h, {"grid.ny = 64", "grid.nx = 64", "grid.nz = 16",
                        "mode = hybrid-3d", "coils.count = 4",
                        "mask.kind = uniform", "mask.uniform_ry = 2",
                        "mask.uniform_rz = 1",
                        "arms = inr-none,infusion",
                        "prior.dir = " + prior_dir.string(),
                        "recon.iters = 250", "recon.hidden_hybrid = 512",
                        "out.dir = " + hyb_dir.string()});
    write_lines(cfg_c, {"grid.ny = 64", "grid.nx = 64", "grid.nz = 16",
                        "mode = coordinate-3d", "coils.count = 4",
                        "mask.kind = uniform", "mask.uniform_ry = 2",
                        "mask.uniform_rz = 1", "arms = inr-none",
                        "recon.iters = 30",
                        "out.dir = " + coord_dir.string()});

    const int rc_h = run_cmd(cli + " recon --config " + cfg_h.string() +
                             " > " + (root / "hybrid3d.log").string() + " 2>&1");
    const int rc_c = run_cmd(cli + " recon --config " + cfg_c.string() +
                             " > " + (root / "coord3d.log").string() + " 2>&1");

    bool ok = rc_h == 0 && rc_c == 0;
    std::string detail;
    if (ok) {
      auto mh = read_metrics(hyb_dir / "metrics.csv");
      auto mc = read_metrics(coord_dir / "metrics.csv");
      const double none_err = mh.at("inr-none").first;
      const double inf_err = mh.at("infusion").first;
      const std::size_t hyb_peak =
          std::max(mh.at("inr-none").second, mh.at("infusion").second);
      const std::size_t coord_peak = mc.at("inr-none").second;
      const std::size_t budget = 8ull << 30;
      ok = inf_err < none_err && hyb_peak <= budget && coord_peak > hyb_peak;
      detail = fmt(
          "64x64x16 at R=2x1: infusion NRMSE %.4f < no-reg %.4f, hybrid peak "
          "%.2f GiB <= 8 GiB, coordinate-3d peak %.2f GiB larger, %.0f s",
          inf_err, none_err, double(hyb_peak) / double(1ull << 30),
          double(coord_peak) / double(1ull << 30), t.seconds());
    } else {
      detail = fmt("recon exit codes hybrid %d, coordinate %d", rc_h, rc_c);
    }
    report(7, ok, detail);
  } catch (const std::exception& e) {
    report(7, false, e.what());
  }

  // ---- criterion 8: zero-weight equivalence -------------------------------
  try {
    ComplexArray<float> truth = make_phantom<float>(64, 64, 8080);
    SensitivityMaps<float> S = simulate_coil_maps<float>(64, 64, 4, 11);
    SamplingMask mask = make_poisson_mask(64, 64, 4.0, 8, 8181);
    KSpaceMeasurements<float> y = forward(truth, S, mask);

    ReconOptions base;
    base.iters = 100;
    base.seed = 777;

    ReconOptions none = base;
    none.reg = Regularizer::None;
    ReconOptions zerow = base;
    zerow.reg = Regularizer::Diffusion;
    zerow.w0 = 0.0;

    ReconResult<float> ra = reconstruct<float>(y, S, nullptr, none);
    ReconResult<float> rb = reconstruct<float>(y, S, &prior, zerow);

    bool ok = bitwise_equal(ra.image, rb.image) &&
              ra.trace.size() == rb.trace.size();
    for (std::size_t i = 0; ok && i < ra.trace.size(); ++i)
      ok = ra.trace[i].data_loss == rb.trace[i].data_loss &&
           ra.trace[i].total == rb.trace[i].total;
    report(8, ok,
           ok ? "w = 0 diffusion arm bitwise equal to the no-reg arm over "
                "100 iterations"
              : "outputs diverged");
  } catch (const std::exception& e) {
    report(8, false, e.what());
  }

  // ---- criterion 9: end-to-end determinism --------------------------------
  try {
    WallTimer t;
    const fs::path cfg = root / "determinism.txt";
    const fs::path da = root / "det_a", db = root / "det_b";
    write_lines(cfg, {"grid.ny = 64", "grid.nx = 64", "coils.count = 4",
                      "mask.kind = poisson", "mask.accel = 4",
                      "mask.calib = 8",
                      "arms = zero-filled,cs-wavelet,inr-none",
                      "recon.iters = 100", "cs.iters = 60",
                      "out.dir = " + da.string()});
    const int ra = run_cmd(cli + " recon --config " + cfg.string() + " > " +
                           (root / "det_a.log").string() + " 2>&1");
    const int rb = run_cmd(cli + " recon --config " + cfg.string() +
                           " --set out.dir=" + db.string() + " > " +
                           (root / "det_b.log").string() + " 2>&1");

    bool ok = ra == 0 && rb == 0;
    if (ok) {
      for (const char* arm : {"zero-filled", "cs-wavelet", "inr-none"})
        ok = ok && slurp(da / arm / "image.cpxa") ==
                       slurp(db / arm / "image.cpxa");
      for (const char* arm : {"cs-wavelet", "inr-none"})
        ok = ok && slurp(da / arm / "trace.csv") ==
                       slurp(db / arm / "trace.csv");
      // Compare the printed NRMSE cells verbatim; runtime and memory columns
      // are measurements of the run, not outputs of the computation.
      auto ma = read_csv(da / "metrics.csv");
      auto mb = read_csv(db / "metrics.csv");
      ok = ok && ma.size() == mb.size();
      for (std::size_t i = 1; ok && i < ma.size(); ++i)
        ok = ma[i][0] == mb[i][0] && ma[i][1] == mb[i][1];
    }
    report(9, ok,
           fmt("two identical runs: images and traces byte-identical, NRMSE "
               "identical; runtime and memory columns excluded as wall-clock "
               "measurements, %.0f s",
               t.seconds()));
  } catch (const std::exception& e) {
    report(9, false, e.what());
  }

  std::printf("acceptance: %d of 9 criteria failed\n", g_failures);
  return g_failures;
}
