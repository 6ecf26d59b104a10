#pragma once

// Labeled complex sequences, split containers and the binary dataset format.
//
// File layout (all integers little-endian):
//   bytes 0..7    magic "CXBDATA1"
//   bytes 8..15   uint64 header length H
//   next H bytes  UTF-8 JSON header (domain, condition echo, class names,
//                 channels, length, split counts, generator parameters)
//   float32 LE    (re, im) interleaved samples, splits in train/val/test
//                 order, each sample [channels x length] row-major
//   uint8         class ids, same order

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cxbench/cnum.hpp"
#include "cxbench/rng.hpp"
#include "cxbench/views.hpp"
#include "cxbench/wirtinger.hpp"

namespace cxbench {

struct ComplexSeq {
  std::vector<Cplx> samples;  // [channels x length]
  std::uint8_t label = 0;
};

struct Dataset {
  std::string domain;  // rf | quantum | eeg
  std::size_t channels = 1;
  std::size_t length = 0;
  std::size_t classes = 0;
  std::vector<std::string> class_names;
  std::vector<ComplexSeq> train, val, test;
  nlohmann::json meta = nlohmann::json::object();  // condition echo and generator parameters

  double chance() const noexcept { return classes ? 1.0 / static_cast<double>(classes) : 0.0; }
};

/// One split materialised in a coordinate view: data [N, C_view, T].
struct ViewedSplit {
  Tensor data;
  std::vector<std::uint8_t> labels;
  std::size_t size() const noexcept { return labels.size(); }
};

struct ViewedDataset {
  ViewId view = ViewId::complex_native;
  std::size_t classes = 0;
  ViewedSplit train, val, test;
};

ViewedSplit materialize(const std::vector<ComplexSeq>& split, std::size_t channels,
                        std::size_t length, ViewId view);
ViewedDataset materialize(const Dataset& ds, ViewId view);

/// Rows `indices` of a viewed split -> [B, C_view, T] tensor.
Tensor gather(const ViewedSplit& split, std::span<const std::size_t> indices);

/// Fisher-Yates with the library Rng.
void shuffle(std::vector<ComplexSeq>& items, Rng& rng);

nlohmann::json dataset_header(const Dataset& ds);
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace cxbench
