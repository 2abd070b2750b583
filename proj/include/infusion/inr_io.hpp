#pragma once

#include <filesystem>

#include "infusion/checkpoint.hpp"
#include "infusion/inr.hpp"

namespace infusion {

template <typename T>
void save_inr(const std::filesystem::path& dir, Inr<T>& model,
              KeyValueConfig echo = {}) {
  echo.set("model", "inr-mlp");
  echo.set_int("fourier_features", model.opt.fourier_features);
  echo.set_double("fourier_scale", model.opt.fourier_scale);
  echo.set_int("coord_dim", model.opt.coord_dim);
  echo.set_int("hidden", model.opt.hidden);
  echo.set_int("hidden_layers", model.opt.hidden_layers);
  echo.set_int("out_dim", model.opt.out_dim);
  echo.set_int("param_count", long(model.param_count()));
  save_param_blob<T>(
      dir, [&](const ParamVisitor<T>& v) { model.visit_params(v); },
      {{"inr.encoding", &model.enc.B}}, std::move(echo));
}

template <typename T>
Inr<T> load_inr(const std::filesystem::path& dir) {
  KeyValueConfig m;
  m = KeyValueConfig::parse_file(dir / "manifest.txt");
  if (m.get("model") != "inr-mlp")
    throw FormatError("checkpoint manifest: unknown model kind", 0);

  InrOptions o;
  o.fourier_features = int(m.get_int("fourier_features"));
  o.fourier_scale = m.get_double("fourier_scale");
  o.coord_dim = int(m.get_int("coord_dim"));
  o.hidden = int(m.get_int("hidden"));
  o.hidden_layers = int(m.get_int("hidden_layers"));
  o.out_dim = int(m.get_int("out_dim"));

  Inr<T> model;
  Rng scratch(0);
  model.setup(o, scratch);
  load_param_blob<T>(
      dir, [&](const ParamVisitor<T>& v) { model.visit_params(v); },
      {{"inr.encoding", &model.enc.B}});
  return model;
}

}  // namespace infusion
