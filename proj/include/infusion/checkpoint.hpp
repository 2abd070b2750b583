#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "infusion/config.hpp"
#include "infusion/cpxa.hpp"
#include "infusion/nn.hpp"

namespace infusion {

// Checkpoint layout shared by every model: a manifest listing each tensor's
// name and shape plus caller metadata, and a single rank-1 CPXA blob holding
// the trainable parameters in traversal order followed by any fixed matrices
// (encodings, embedding frequencies). Values ride in the real channel.
template <typename T>
void save_param_blob(const std::filesystem::path& dir,
                     const std::function<void(const ParamVisitor<T>&)>& visit,
                     const std::vector<std::pair<std::string, const Mat<T>*>>& fixed,
                     KeyValueConfig meta) {
  std::filesystem::create_directories(dir);
  std::vector<T> blob;
  int n = 0;
  auto record = [&](const std::string& name, const Mat<T>& m) {
    const std::string key = "tensor." + std::to_string(n++);
    meta.set(key + ".name", name);
    meta.set_int(key + ".rows", long(m.rows()));
    meta.set_int(key + ".cols", long(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) blob.push_back(m.data()[i]);
  };
  std::size_t trainable = 0;
  visit([&](const std::string& name, Param<T>& p) {
    record(name, p.value);
    trainable += p.count();
  });
  for (const auto& [name, m] : fixed) record("fixed:" + name, *m);

  meta.set_int("tensor_count", n);
  meta.set_int("trainable_values", long(trainable));
  meta.set_int("total_values", long(blob.size()));

  ComplexArray<T> arr({std::max<std::size_t>(blob.size(), 1)});
  for (std::size_t i = 0; i < blob.size(); ++i)
    arr[i] = std::complex<T>(blob[i], T(0));
  save_array(dir / "params.cpxa", arr);
  meta.save(dir / "manifest.txt");
}

// Fills an already constructed model; shapes must match the manifest exactly.
template <typename T>
KeyValueConfig load_param_blob(
    const std::filesystem::path& dir,
    const std::function<void(const ParamVisitor<T>&)>& visit,
    const std::vector<std::pair<std::string, Mat<T>*>>& fixed) {
  KeyValueConfig meta;
  meta = KeyValueConfig::parse_file(dir / "manifest.txt");
  auto arr = load_array_as<T>(dir / "params.cpxa");
  const std::size_t total = std::size_t(meta.get_int("total_values"));
  if (arr.size() != std::max<std::size_t>(total, 1))
    throw FormatError("checkpoint blob size disagrees with manifest", 0);

  std::size_t off = 0;
  int n = 0;
  auto consume = [&](const std::string& name, Mat<T>& m) {
    const std::string key = "tensor." + std::to_string(n++);
    if (meta.get(key + ".name") != name ||
        meta.get_int(key + ".rows") != long(m.rows()) ||
        meta.get_int(key + ".cols") != long(m.cols()))
      throw FormatError("checkpoint tensor " + std::to_string(n - 1) +
                            " does not match the model being loaded",
                        0);
    if (off + std::size_t(m.size()) > total)
      throw FormatError("checkpoint blob too short for tensor " + name, 0);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = arr[off++].real();
  };
  visit([&](const std::string& name, Param<T>& p) { consume(name, p.value); });
  for (const auto& [name, m] : fixed) consume("fixed:" + name, *m);
  if (n != int(meta.get_int("tensor_count")) || off != total)
    throw FormatError("checkpoint blob has trailing values", 0);
  return meta;
}

}  // namespace infusion
