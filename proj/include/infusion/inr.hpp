#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "infusion/array.hpp"
#include "infusion/common.hpp"
#include "infusion/nn.hpp"
#include "infusion/rng.hpp"

namespace infusion {

// gamma(r) = [cos(2 pi B r); sin(2 pi B r)] with B an (features x dim)
// Gaussian matrix drawn once per model. The matrix is fixed, not trained.
template <typename T>
struct FourierEncoding {
  Mat<T> B;  // (features, dim)
  double scale = 10.0;

  void setup(int features, int dim, double scale_, Rng& rng) {
    scale = scale_;
    B = Mat<T>(features, dim);
    for (Eigen::Index r = 0; r < B.rows(); ++r)
      for (Eigen::Index c = 0; c < B.cols(); ++c)
        B(r, c) = T(scale_ * rng.normal());
  }

  // coords: (dim, N) -> (2*features, N)
  Mat<T> encode(const Mat<T>& coords) const {
    if (coords.rows() != B.cols())
      throw std::invalid_argument("encoding: coordinate dimension mismatch");
    Mat<T> proj = T(2.0 * M_PI) * (B * coords);
    Mat<T> out(2 * B.rows(), coords.cols());
    out.topRows(B.rows()) = proj.array().cos().matrix();
    out.bottomRows(B.rows()) = proj.array().sin().matrix();
    return out;
  }
};

// Voxel-center coordinates in [0, 1], one column per sample. 2D columns are
// ordered row-major over (iy, ix) and hold (x, y); 3D adds z slowest and
// holds (x, y, z).
template <typename T>
Mat<T> coordinate_grid_2d(std::size_t ny, std::size_t nx) {
  Mat<T> r(2, Eigen::Index(ny * nx));
  for (std::size_t iy = 0; iy < ny; ++iy)
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const Eigen::Index i = Eigen::Index(iy * nx + ix);
      r(0, i) = T((double(ix) + 0.5) / double(nx));
      r(1, i) = T((double(iy) + 0.5) / double(ny));
    }
  return r;
}

template <typename T>
Mat<T> coordinate_grid_3d(std::size_t nz, std::size_t ny, std::size_t nx) {
  Mat<T> r(3, Eigen::Index(nz * ny * nx));
  for (std::size_t iz = 0; iz < nz; ++iz)
    for (std::size_t iy = 0; iy < ny; ++iy)
      for (std::size_t ix = 0; ix < nx; ++ix) {
        const Eigen::Index i = Eigen::Index((iz * ny + iy) * nx + ix);
        r(0, i) = T((double(ix) + 0.5) / double(nx));
        r(1, i) = T((double(iy) + 0.5) / double(ny));
        r(2, i) = T((double(iz) + 0.5) / double(nz));
      }
  return r;
}

struct InrOptions {
  int fourier_features = 128;
  double fourier_scale = 10.0;
  int coord_dim = 2;
  int hidden = 256;
  int hidden_layers = 4;
  int out_dim = 2;  // complex output as (re, im) channel pairs
};

// Coordinate network: Fourier encoding into a ReLU MLP with a linear head.
template <typename T>
struct Inr {
  InrOptions opt;
  FourierEncoding<T> enc;
  std::vector<Dense<T>> layers;
  std::vector<Mat<T>> pre_acts;  // cached pre-activations of hidden layers

  void setup(const InrOptions& o, Rng& rng) {
    opt = o;
    Rng enc_rng = rng.stream("inr.encoding");
    enc.setup(o.fourier_features, o.coord_dim, o.fourier_scale, enc_rng);
    layers.clear();
    layers.resize(std::size_t(o.hidden_layers) + 1);
    Rng w_rng = rng.stream("inr.weights");
    int in = 2 * o.fourier_features;
    for (int l = 0; l < o.hidden_layers; ++l) {
      layers[l].setup(in, o.hidden, w_rng);
      in = o.hidden;
    }
    layers.back().setup(in, o.out_dim, w_rng);
  }

  // encoded: (2*features, N) -> (out_dim, N)
  Mat<T> forward(const Mat<T>& encoded, bool keep_cache = true) {
    if (keep_cache) pre_acts.assign(layers.size() - 1, Mat<T>());
    Mat<T> h = encoded;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
      Mat<T> z = layers[l].forward(h, keep_cache);
      if (keep_cache) pre_acts[l] = z;
      relu_inplace(z);
      h = std::move(z);
    }
    return layers.back().forward(h, keep_cache);
  }

  void backward(const Mat<T>& dout) {
    Mat<T> d = layers.back().backward(dout);
    for (std::size_t l = layers.size() - 1; l-- > 0;) {
      d = relu_backward(d, pre_acts[l]);
      d = layers[l].backward(d);
    }
  }

  void visit_params(const ParamVisitor<T>& v) {
    for (std::size_t l = 0; l < layers.size(); ++l)
      layers[l].visit("inr.layer" + std::to_string(l), v);
  }

  std::size_t param_count() {
    std::size_t n = 0;
    visit_params([&](const std::string&, Param<T>& p) { n += p.count(); });
    return n;
  }
};

// Head layout: channel pair (2k, 2k+1) is the (re, im) of output k. For a 2D
// image out_dim == 2; the multi-slice head uses out_dim == 2*nz with pair k
// mapping to slice k.
template <typename T>
ComplexArray<T> output_to_image(const Mat<T>& out, std::size_t ny, std::size_t nx) {
  if (out.rows() != 2 || out.cols() != Eigen::Index(ny * nx))
    throw std::invalid_argument("output_to_image: shape mismatch");
  ComplexArray<T> img({ny, nx});
  for (std::size_t i = 0; i < ny * nx; ++i)
    img[i] = std::complex<T>(out(0, Eigen::Index(i)), out(1, Eigen::Index(i)));
  return img;
}

template <typename T>
ComplexArray<T> output_to_volume_hybrid(const Mat<T>& out, std::size_t nz,
                                        std::size_t ny, std::size_t nx) {
  if (out.rows() != Eigen::Index(2 * nz) || out.cols() != Eigen::Index(ny * nx))
    throw std::invalid_argument("output_to_volume_hybrid: shape mismatch");
  ComplexArray<T> vol({nz, ny, nx});
  for (std::size_t z = 0; z < nz; ++z)
    for (std::size_t i = 0; i < ny * nx; ++i)
      vol[z * ny * nx + i] = std::complex<T>(out(Eigen::Index(2 * z), Eigen::Index(i)),
                                             out(Eigen::Index(2 * z + 1), Eigen::Index(i)));
  return vol;
}

template <typename T>
ComplexArray<T> output_to_volume_coord(const Mat<T>& out, std::size_t nz,
                                       std::size_t ny, std::size_t nx) {
  if (out.rows() != 2 || out.cols() != Eigen::Index(nz * ny * nx))
    throw std::invalid_argument("output_to_volume_coord: shape mismatch");
  ComplexArray<T> vol({nz, ny, nx});
  for (std::size_t i = 0; i < vol.size(); ++i)
    vol[i] = std::complex<T>(out(0, Eigen::Index(i)), out(1, Eigen::Index(i)));
  return vol;
}

// Complex gradient (Wirtinger conjugate sense) to head-channel seeds: a unit
// of d/d(re) lands in channel 2k, d/d(im) in 2k+1.
template <typename T>
Mat<T> image_grad_to_output(const ComplexArray<T>& g) {
  Mat<T> d(2, Eigen::Index(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    d(0, Eigen::Index(i)) = g[i].real();
    d(1, Eigen::Index(i)) = g[i].imag();
  }
  return d;
}

template <typename T>
Mat<T> volume_grad_to_output_hybrid(const ComplexArray<T>& g) {
  const std::size_t nz = g.dim(0), plane = g.dim(1) * g.dim(2);
  Mat<T> d(Eigen::Index(2 * nz), Eigen::Index(plane));
  for (std::size_t z = 0; z < nz; ++z)
    for (std::size_t i = 0; i < plane; ++i) {
      d(Eigen::Index(2 * z), Eigen::Index(i)) = g[z * plane + i].real();
      d(Eigen::Index(2 * z + 1), Eigen::Index(i)) = g[z * plane + i].imag();
    }
  return d;
}

// Supervised fit of the network to a fixed complex image, loss
// sum_i |I(r_i) - x_i|^2, reported per step.
template <typename T>
std::vector<double> fit_to_image(Inr<T>& model, const ComplexArray<T>& target,
                                 int steps, double lr) {
  const std::size_t ny = target.dim(0), nx = target.dim(1);
  const Mat<T> encoded = model.enc.encode(coordinate_grid_2d<T>(ny, nx));
  auto params = collect_params<T>(
      [&](const ParamVisitor<T>& v) { model.visit_params(v); });
  AdamOptimizer<T> adam;
  adam.lr = lr;

  std::vector<double> losses;
  losses.reserve(std::size_t(steps));
  // A converged fit oscillates in the low digits; an optimizer that is not
  // moving at all repeats the loss bit for bit. Only the latter is an error.
  double last = std::numeric_limits<double>::quiet_NaN();
  int frozen = 0;
  for (int s = 0; s < steps; ++s) {
    Mat<T> out = model.forward(encoded);
    double loss = 0.0;
    Mat<T> dout(out.rows(), out.cols());
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double dr = double(out(0, Eigen::Index(i))) - double(target[i].real());
      const double di = double(out(1, Eigen::Index(i))) - double(target[i].imag());
      loss += dr * dr + di * di;
      dout(0, Eigen::Index(i)) = T(2.0 * dr);
      dout(1, Eigen::Index(i)) = T(2.0 * di);
    }
    if (!std::isfinite(loss))
      throw NumericalFailure("image fit loss became non-finite at step " +
                             std::to_string(s));
    if (loss == last) {
      if (++frozen >= 100)
        throw NumericalFailure("image fit frozen for 100 steps, last at step " +
                               std::to_string(s));
    } else {
      frozen = 0;
      last = loss;
    }
    model.backward(dout);
    adam.step(params);
    losses.push_back(loss);
  }
  return losses;
}

}  // namespace infusion
