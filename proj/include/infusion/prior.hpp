#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "infusion/checkpoint.hpp"
#include "infusion/common.hpp"
#include "infusion/unet.hpp"

namespace infusion {

struct PriorTrainOptions {
  int steps = 2000;
  int batch = 8;
  double lr = 1e-3;
  double p_mean = -1.2, p_std = 1.2;
  std::uint64_t seed = 0;
};

// Denoising score-matching with the lognormal noise-level distribution and
// the reciprocal-c_out^2 loss weight. Returns the per-step batch loss.
template <typename T>
std::vector<double> train_denoiser(Denoiser<T>& den,
                                   const std::vector<ComplexArray<T>>& images,
                                   const PriorTrainOptions& opt) {
  if (images.empty())
    throw std::invalid_argument("train_denoiser: empty training set");
  if (opt.steps < 1 || opt.batch < 1)
    throw std::invalid_argument("train_denoiser: steps and batch must be >= 1");
  for (const auto& im : images) {
    if (im.rank() != 2 || im.dim(0) != im.dim(1) ||
        (im.dim(0) & (im.dim(0) - 1)) != 0 || im.dim(0) < 8)
      throw std::invalid_argument(
          "train_denoiser: images must be square with power-of-two side >= 8");
  }

  std::vector<Tensor3<T>> clean;
  clean.reserve(images.size());
  for (const auto& im : images) clean.push_back(image_to_tensor(im));

  Rng rng = Rng(opt.seed).stream("prior.train");
  auto params = collect_params<T>(
      [&](const ParamVisitor<T>& v) { den.net.visit_params(v); });
  AdamOptimizer<T> adam;
  adam.lr = opt.lr;

  std::vector<double> trace;
  trace.reserve(std::size_t(opt.steps));
  for (int s = 0; s < opt.steps; ++s) {
    double loss = 0.0;
    for (int b = 0; b < opt.batch; ++b) {
      const Tensor3<T>& x0 = clean[rng.uniform_index(clean.size())];
      const double sigma = draw_training_sigma(rng, opt.p_mean, opt.p_std);
      Tensor3<T> noisy = x0;
      for (Eigen::Index i = 0; i < noisy.m.size(); ++i)
        noisy.m.data()[i] += T(sigma * rng.normal());

      Tensor3<T> d = den.denoise(noisy, sigma, true);
      const double lw = edm_loss_weight(sigma, den.sigma_data);
      const double npix = double(d.m.size());
      Tensor3<T> dd = d;
      dd.m -= x0.m;
      double sample_loss = 0.0;
      for (Eigen::Index i = 0; i < dd.m.size(); ++i) {
        const double e = double(dd.m.data()[i]);
        sample_loss += e * e;
      }
      sample_loss *= lw / npix;
      loss += sample_loss / double(opt.batch);

      dd.m *= T(2.0 * lw / (npix * double(opt.batch)));
      den.denoise_backward(dd, true);
    }
    if (!std::isfinite(loss))
      throw NumericalFailure("prior training produced a non-finite loss at step " +
                             std::to_string(s));
    adam.step(params);
    trace.push_back(loss);
  }
  return trace;
}

// Checkpoint: manifest plus single value blob, the fixed noise-embedding
// frequencies appended after the trainable parameters.
template <typename T>
void save_denoiser(const std::filesystem::path& dir, Denoiser<T>& den,
                   KeyValueConfig echo = {}) {
  echo.set("model", "denoiser-unet");
  echo.set_int("in_channels", den.net.opt.in_channels);
  echo.set_int("width0", den.net.opt.w0);
  echo.set_int("width1", den.net.opt.w1);
  echo.set_int("width2", den.net.opt.w2);
  echo.set_int("emb_dim", den.net.opt.emb_dim);
  echo.set_double("emb_scale", den.net.opt.emb_scale);
  echo.set_double("sigma_data", den.sigma_data);
  echo.set_int("param_count", long(den.net.param_count()));
  save_param_blob<T>(
      dir, [&](const ParamVisitor<T>& v) { den.net.visit_params(v); },
      {{"unet.emb_freq", &den.net.emb_freq}}, std::move(echo));
}

template <typename T>
Denoiser<T> load_denoiser(const std::filesystem::path& dir) {
  KeyValueConfig m;
  m = KeyValueConfig::parse_file(dir / "manifest.txt");
  if (m.get("model") != "denoiser-unet")
    throw FormatError("checkpoint manifest: unknown model kind", 0);

  UnetOptions o;
  o.in_channels = int(m.get_int("in_channels"));
  o.w0 = int(m.get_int("width0"));
  o.w1 = int(m.get_int("width1"));
  o.w2 = int(m.get_int("width2"));
  o.emb_dim = int(m.get_int("emb_dim"));
  o.emb_scale = m.get_double("emb_scale");

  Denoiser<T> den;
  den.sigma_data = m.get_double("sigma_data");
  Rng scratch(0);
  den.net.setup(o, scratch);
  load_param_blob<T>(
      dir, [&](const ParamVisitor<T>& v) { den.net.visit_params(v); },
      {{"unet.emb_freq", &den.net.emb_freq}});
  return den;
}

}  // namespace infusion
