#include "cxbench/dataset.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "cxbench/errors.hpp"
#include "cxbench/rng.hpp"

namespace cxbench {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

namespace {

constexpr char kMagic[8] = {'C', 'X', 'B', 'D', 'A', 'T', 'A', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw ConfigError("dataset file truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

const std::vector<ComplexSeq>* split_at(const Dataset& ds, int i) {
  return i == 0 ? &ds.train : i == 1 ? &ds.val : &ds.test;
}

}  // namespace

ViewedSplit materialize(const std::vector<ComplexSeq>& split, std::size_t channels,
                        std::size_t length, ViewId view) {
  Tensor raw = Tensor::zeros({split.size(), channels, length}, true);
  ViewedSplit out;
  out.labels.reserve(split.size());
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i].samples.size() != channels * length) throw ShapeError("materialize: ragged sample");
    std::copy(split[i].samples.begin(), split[i].samples.end(), raw.cdata() + i * channels * length);
    out.labels.push_back(split[i].label);
  }
  out.data = apply_view(view, raw);
  return out;
}

ViewedDataset materialize(const Dataset& ds, ViewId view) {
  return {view, ds.classes, materialize(ds.train, ds.channels, ds.length, view),
          materialize(ds.val, ds.channels, ds.length, view),
          materialize(ds.test, ds.channels, ds.length, view)};
}

Tensor gather(const ViewedSplit& split, std::span<const std::size_t> indices) {
  const Tensor& d = split.data;
  const std::size_t row = d.data.size() / d.dim(0);
  Tensor out;
  out.shape = {indices.size(), d.dim(1), d.dim(2)};
  out.is_complex = d.is_complex;
  out.data.resize(indices.size() * row);
  for (std::size_t i = 0; i < indices.size(); ++i)
    std::copy_n(d.data.begin() + static_cast<std::ptrdiff_t>(indices[i] * row), row,
                out.data.begin() + static_cast<std::ptrdiff_t>(i * row));
  return out;
}

void shuffle(std::vector<ComplexSeq>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng.below(i)]);
}

nlohmann::json dataset_header(const Dataset& ds) {
  return {{"format", "cxbench-dataset"},
          {"version", 1},
          {"domain", ds.domain},
          {"channels", ds.channels},
          {"length", ds.length},
          {"classes", ds.classes},
          {"class_names", ds.class_names},
          {"counts", {{"train", ds.train.size()}, {"val", ds.val.size()}, {"test", ds.test.size()}}},
          {"sample_dtype", "float32_le_interleaved"},
          {"label_dtype", "uint8"},
          {"meta", ds.meta}};
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path.string());
  const std::string header = dataset_header(ds).dump();
  out.write(kMagic, sizeof(kMagic));
  put_le<std::uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (int s = 0; s < 3; ++s)
    for (const auto& seq : *split_at(ds, s))
      for (Cplx z : seq.samples) {
        put_le(out, static_cast<float>(z.real()));
        put_le(out, static_cast<float>(z.imag()));
      }
  for (int s = 0; s < 3; ++s)
    for (const auto& seq : *split_at(ds, s)) put_le(out, seq.label);
  if (!out) throw ConfigError("write failed: " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset: " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw ConfigError("not a cxbench dataset");
  const auto header_len = get_le<std::uint64_t>(in);
  std::string header(header_len, '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(header_len))) throw ConfigError("dataset header truncated");
  const auto h = nlohmann::json::parse(header);

  Dataset ds;
  ds.domain = h.at("domain").get<std::string>();
  ds.channels = h.at("channels").get<std::size_t>();
  ds.length = h.at("length").get<std::size_t>();
  ds.classes = h.at("classes").get<std::size_t>();
  ds.class_names = h.at("class_names").get<std::vector<std::string>>();
  ds.meta = h.at("meta");
  const auto& counts = h.at("counts");
  ds.train.resize(counts.at("train").get<std::size_t>());
  ds.val.resize(counts.at("val").get<std::size_t>());
  ds.test.resize(counts.at("test").get<std::size_t>());
  const std::size_t n = ds.channels * ds.length;
  for (auto* split : {&ds.train, &ds.val, &ds.test})
    for (auto& seq : *split) {
      seq.samples.resize(n);
      for (auto& z : seq.samples) {
        const float re = get_le<float>(in);
        const float im = get_le<float>(in);
        z = {re, im};
      }
    }
  for (auto* split : {&ds.train, &ds.val, &ds.test})
    for (auto& seq : *split) {
      seq.label = get_le<std::uint8_t>(in);
      if (seq.label >= ds.classes) throw ConfigError("dataset label out of range");
    }
  return ds;
}

}  // namespace cxbench
