#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "infusion/common.hpp"
#include "infusion/inr.hpp"
#include "infusion/perceptual.hpp"
#include "infusion/prior.hpp"
#include "infusion/sampler.hpp"
#include "infusion/schedules.hpp"
#include "infusion/sense.hpp"
#include "infusion/wavelet.hpp"

namespace infusion {

enum class ReconMode { Image2d, Hybrid3d, Coordinate3d };
enum class Regularizer { None, Wavelet, Diffusion };

struct ReconOptions {
  ReconMode mode = ReconMode::Image2d;
  Regularizer reg = Regularizer::None;
  int iters = 2000;
  double lr = 1e-3;
  int fourier_features = 128;
  double fourier_scale = 10.0;
  int hidden = 256;
  int hidden_hybrid = 3200;
  int hidden_layers = 4;
  // wavelet arm
  double wavelet_lambda = 5e-4;
  int wavelet_levels = 3;
  // diffusion arm
  double w0 = 1.0;
  double tau = 0.2;
  double sigma_floor = 0.02;
  int heun_steps = 10;
  int k_slices = 2;
  bool differentiable_prior = false;
  PerceptualKind perceptual = PerceptualKind::PixelL2;
  std::uint64_t perceptual_seed = 77;
  std::uint64_t seed = 0;
};

struct IterationRecord {
  int j = 0;
  double data_loss = 0.0, reg_loss = 0.0, weight = 0.0, total = 0.0;
};

template <typename T>
struct ReconResult {
  ComplexArray<T> image;
  std::vector<IterationRecord> trace;
  std::shared_ptr<Inr<T>> model;
};

// ||A x - y||^2 and, when requested, its conjugate-pair gradient
// 2 A^H (A x - y) packed as a complex array.
template <typename T>
double data_loss_and_grad(const ComplexArray<T>& x,
                          const KSpaceMeasurements<T>& y,
                          const SensitivityMaps<T>& S,
                          ComplexArray<T>* grad = nullptr) {
  KSpaceMeasurements<T> pred = forward(x, S, y.mask);
  if (!pred.values.same_shape(y.values))
    throw std::invalid_argument("data_loss: measurement shape mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const double dr =
        double(pred.values[i].real()) - double(y.values[i].real());
    const double di =
        double(pred.values[i].imag()) - double(y.values[i].imag());
    loss += dr * dr + di * di;
    pred.values[i] -= y.values[i];
  }
  if (grad) {
    *grad = adjoint(pred, S, y.mask);
    for (std::size_t i = 0; i < grad->size(); ++i) (*grad)[i] *= T(2);
  }
  return loss;
}

// lambda * sum |W x| with the subgradient lambda W^H sign(W x); sign keeps
// the coefficient phase and is 0 at exact zeros.
template <typename T>
double wavelet_loss_and_subgrad(const ComplexArray<T>& img, double lambda,
                                int levels, ComplexArray<T>* grad = nullptr) {
  ComplexArray<T> coeffs = dwt2(img, levels);
  const double loss = lambda * l1_norm(coeffs);
  if (grad) {
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      const double mag =
          std::hypot(double(coeffs[i].real()), double(coeffs[i].imag()));
      coeffs[i] = (mag == 0.0)
                      ? std::complex<T>(0)
                      : std::complex<T>(T(lambda * coeffs[i].real() / mag),
                                        T(lambda * coeffs[i].imag() / mag));
    }
    *grad = idwt2(coeffs, levels);
  }
  return loss;
}

// k distinct z-indices, uniform without replacement.
inline std::vector<int> select_slices(int nz, int k, Rng& rng) {
  if (k < 1 || k > nz)
    throw std::invalid_argument("select_slices: need 1 <= k <= nz");
  std::vector<int> idx(std::size_t(nz), 0);
  for (int i = 0; i < nz; ++i) idx[std::size_t(i)] = i;
  for (int i = 0; i < k; ++i) {
    const std::size_t pick = i + rng.uniform_index(std::size_t(nz - i));
    std::swap(idx[std::size_t(i)], idx[pick]);
  }
  idx.resize(std::size_t(k));
  return idx;
}

namespace detail {

template <typename T>
ComplexArray<T> extract_slice(const ComplexArray<T>& vol, int z) {
  const std::size_t ny = vol.dim(1), nx = vol.dim(2), plane = ny * nx;
  ComplexArray<T> s({ny, nx});
  const std::complex<T>* src = vol.data() + std::size_t(z) * plane;
  std::copy(src, src + plane, s.data());
  return s;
}

// Adds a per-slice complex gradient into the head-output seed matrix.
template <typename T>
void add_slice_seed(Mat<T>& dout, const ComplexArray<T>& g, ReconMode mode,
                    int z, std::size_t plane, double scale) {
  if (mode == ReconMode::Image2d) {
    for (std::size_t i = 0; i < plane; ++i) {
      dout(0, Eigen::Index(i)) += T(scale * double(g[i].real()));
      dout(1, Eigen::Index(i)) += T(scale * double(g[i].imag()));
    }
  } else if (mode == ReconMode::Hybrid3d) {
    for (std::size_t i = 0; i < plane; ++i) {
      dout(Eigen::Index(2 * z), Eigen::Index(i)) +=
          T(scale * double(g[i].real()));
      dout(Eigen::Index(2 * z + 1), Eigen::Index(i)) +=
          T(scale * double(g[i].imag()));
    }
  } else {
    const std::size_t base = std::size_t(z) * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      dout(0, Eigen::Index(base + i)) += T(scale * double(g[i].real()));
      dout(1, Eigen::Index(base + i)) += T(scale * double(g[i].imag()));
    }
  }
}

}  // namespace detail

// INR reconstruction with a pluggable regularizer. Each iteration: evaluate
// the network on the full grid, form the data-consistency loss and gradient,
// add the regularizer's contribution on the slice set, make one optimizer
// update. The data path consumes no randomness; regularizer draws come from
// a dedicated stream, so the no-regularizer arm and any arm with zero weight
// consume identical randomness (none).
template <typename T = float>
ReconResult<T> reconstruct(const KSpaceMeasurements<T>& y,
                           const SensitivityMaps<T>& S, Denoiser<T>* prior,
                           const ReconOptions& opt) {
  const bool volumetric = (y.values.rank() == 4);
  if (opt.mode == ReconMode::Image2d && volumetric)
    throw std::invalid_argument("reconstruct: 2d mode given volume data");
  if (opt.mode != ReconMode::Image2d && !volumetric)
    throw std::invalid_argument("reconstruct: 3d mode given 2d data");
  if (opt.iters < 1) throw std::invalid_argument("reconstruct: iters >= 1");
  const bool diffusion = opt.reg == Regularizer::Diffusion && opt.w0 != 0.0;
  if (diffusion && prior == nullptr)
    throw std::invalid_argument("reconstruct: diffusion arm needs a prior");

  const std::size_t ny = S.ny(), nx = S.nx();
  const std::size_t nz = volumetric ? y.values.dim(1) : 1;
  const std::size_t plane = ny * nx;

  InrOptions io;
  io.fourier_features = opt.fourier_features;
  io.fourier_scale = opt.fourier_scale;
  io.hidden_layers = opt.hidden_layers;
  switch (opt.mode) {
    case ReconMode::Image2d:
      io.coord_dim = 2;
      io.out_dim = 2;
      io.hidden = opt.hidden;
      break;
    case ReconMode::Hybrid3d:
      io.coord_dim = 2;
      io.out_dim = int(2 * nz);
      io.hidden = opt.hidden_hybrid;
      break;
    case ReconMode::Coordinate3d:
      io.coord_dim = 3;
      io.out_dim = 2;
      io.hidden = opt.hidden;
      break;
  }

  Rng root(opt.seed);
  auto model = std::make_shared<Inr<T>>();
  model->setup(io, root);
  Rng reg_rng = root.stream("recon.regularizer");

  const Mat<T> encoded =
      model->enc.encode(opt.mode == ReconMode::Coordinate3d
                            ? coordinate_grid_3d<T>(nz, ny, nx)
                            : coordinate_grid_2d<T>(ny, nx));

  std::unique_ptr<PerceptualLoss<T>> perc;
  if (diffusion)
    perc = std::make_unique<PerceptualLoss<T>>(opt.perceptual,
                                               opt.perceptual_seed);

  auto params = collect_params<T>(
      [&](const ParamVisitor<T>& v) { model->visit_params(v); });
  AdamOptimizer<T> adam;
  adam.lr = opt.lr;

  auto assemble = [&](const Mat<T>& out) {
    if (opt.mode == ReconMode::Image2d) return output_to_image(out, ny, nx);
    if (opt.mode == ReconMode::Hybrid3d)
      return output_to_volume_hybrid(out, nz, ny, nx);
    return output_to_volume_coord(out, nz, ny, nx);
  };

  ReconResult<T> res;
  res.model = model;
  res.trace.reserve(std::size_t(opt.iters));

  for (int j = 0; j < opt.iters; ++j) {
    Mat<T> out = model->forward(encoded);
    ComplexArray<T> x = assemble(out);

    ComplexArray<T> gdata;
    const double l_data = data_loss_and_grad(x, y, S, &gdata);
    if (!std::isfinite(l_data))
      throw NumericalFailure("data-consistency loss became non-finite at iteration " +
                             std::to_string(j));
    Mat<T> dout = (opt.mode == ReconMode::Image2d)
                      ? image_grad_to_output(gdata)
                      : (opt.mode == ReconMode::Hybrid3d
                             ? volume_grad_to_output_hybrid(gdata)
                             : image_grad_to_output(gdata));

    double l_reg = 0.0, w = 0.0;
    if (opt.reg == Regularizer::Wavelet) {
      w = 1.0;
      const int nslices = volumetric ? int(nz) : 1;
      for (int z = 0; z < nslices; ++z) {
        ComplexArray<T> xz =
            volumetric ? detail::extract_slice(x, z) : x;
        ComplexArray<T> gz;
        l_reg += wavelet_loss_and_subgrad(xz, opt.wavelet_lambda,
                                          opt.wavelet_levels, &gz) /
                 double(nslices);
        detail::add_slice_seed(dout, gz, opt.mode, z, plane,
                               1.0 / double(nslices));
      }
      if (!std::isfinite(l_reg))
        throw NumericalFailure("wavelet regularizer became non-finite at iteration " +
                               std::to_string(j));
    } else if (diffusion) {
      w = weight_schedule(j, opt.iters, opt.w0, opt.tau);
      std::vector<int> slices;
      if (opt.mode == ReconMode::Image2d) {
        slices = {0};
      } else if (opt.mode == ReconMode::Coordinate3d) {
        slices = select_slices(int(nz), int(nz), reg_rng);
      } else {
        slices = select_slices(int(nz), std::min(opt.k_slices, int(nz)), reg_rng);
      }
      const double sigma = draw_perturbation_sigma(reg_rng, j, opt.iters,
                                                   opt.sigma_floor);
      const double snorm = 1.0 / double(slices.size());

      for (int z : slices) {
        ComplexArray<T> xz =
            volumetric ? detail::extract_slice(x, z) : x;
        Tensor3<T> q = image_to_tensor(xz);
        for (Eigen::Index i = 0; i < q.m.size(); ++i)
          q.m.data()[i] += T(sigma * reg_rng.normal());

        SamplerOptions so;
        so.steps = opt.heun_steps;
        HeunTape<T> tape;
        Tensor3<T> d = heun_sample(*prior, q, sigma, so,
                                   opt.differentiable_prior ? &tape : nullptr);
        ComplexArray<T> d_img = tensor_to_image(d);

        ComplexArray<T> ga, gb;
        const double l_slice =
            perc->eval(xz, d_img, &ga,
                       opt.differentiable_prior ? &gb : nullptr);
        l_reg += l_slice * snorm;
        if (opt.differentiable_prior) {
          Tensor3<T> gfinal = image_to_tensor(gb);
          Tensor3<T> gq = heun_sample_vjp(*prior, tape, gfinal);
          for (std::size_t i = 0; i < ga.size(); ++i)
            ga[i] += std::complex<T>(gq.m(0, Eigen::Index(i)),
                                     gq.m(1, Eigen::Index(i)));
        }
        detail::add_slice_seed(dout, ga, opt.mode, z, plane, w * snorm);
      }
      if (!std::isfinite(l_reg))
        throw NumericalFailure("diffusion regularizer became non-finite at iteration " +
                               std::to_string(j));
    }

    model->backward(dout);
    adam.step(params);

    IterationRecord rec;
    rec.j = j;
    rec.data_loss = l_data;
    rec.reg_loss = l_reg;
    rec.weight = w;
    rec.total = l_data + w * l_reg;
    res.trace.push_back(rec);
  }

  Mat<T> out = model->forward(encoded, false);
  res.image = assemble(out);
  return res;
}

}  // namespace infusion
