#include "cxbench/views.hpp"

#include <cmath>
#include <string>

#include "cxbench/errors.hpp"

namespace cxbench {

std::string_view to_string(ViewId id) noexcept {
  switch (id) {
    case ViewId::complex_native: return "complex_native";
    case ViewId::cartesian: return "cartesian";
    case ViewId::polar: return "polar";
    case ViewId::phase_only: return "phase_only";
    case ViewId::magnitude_only: return "magnitude_only";
  }
  return "?";
}

ViewId view_from_string(std::string_view name) {
  for (auto id : {ViewId::complex_native, ViewId::cartesian, ViewId::polar, ViewId::phase_only,
                  ViewId::magnitude_only})
    if (to_string(id) == name) return id;
  throw ConfigError("unknown view: " + std::string(name));
}

std::size_t channel_multiplier(ViewId id) noexcept {
  switch (id) {
    case ViewId::complex_native: return 1;
    case ViewId::cartesian: return 2;
    case ViewId::polar: return 3;
    case ViewId::phase_only: return 2;
    case ViewId::magnitude_only: return 1;
  }
  return 0;
}

Tensor apply_view(ViewId view, const Tensor& z) {
  if (!z.is_complex || (z.shape.size() != 2 && z.shape.size() != 3))
    throw ShapeError("apply_view: expected complex [C x T] or [B x C x T]");
  if (view == ViewId::complex_native) return z;

  const bool batched = z.shape.size() == 3;
  const std::size_t batch = batched ? z.dim(0) : 1;
  const std::size_t channels = z.dim(batched ? 1 : 0);
  const std::size_t len = z.dim(batched ? 2 : 1);
  const std::size_t mult = channel_multiplier(view);

  std::vector<std::size_t> shape = batched ? std::vector<std::size_t>{batch, channels * mult, len}
                                           : std::vector<std::size_t>{channels * mult, len};
  Tensor out = Tensor::zeros(std::move(shape));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      const Cplx* src = z.cdata() + (b * channels + c) * len;
      double* dst = out.data.data() + (b * channels * mult + c * mult) * len;
      for (std::size_t t = 0; t < len; ++t) {
        const Cplx v = src[t];
        const double r = std::abs(v);
        const double cos_t = r > 0.0 ? v.real() / r : 1.0;
        const double sin_t = r > 0.0 ? v.imag() / r : 0.0;
        switch (view) {
          case ViewId::cartesian:
            dst[t] = v.real();
            dst[len + t] = v.imag();
            break;
          case ViewId::polar:
            dst[t] = r;
            dst[len + t] = cos_t;
            dst[2 * len + t] = sin_t;
            break;
          case ViewId::phase_only:
            dst[t] = cos_t;
            dst[len + t] = sin_t;
            break;
          case ViewId::magnitude_only:
            dst[t] = r;
            break;
          case ViewId::complex_native:
            break;
        }
      }
    }
  }
  return out;
}

}  // namespace cxbench
