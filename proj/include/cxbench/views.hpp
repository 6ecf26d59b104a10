#pragma once

#include <string_view>

#include "cxbench/wirtinger.hpp"

namespace cxbench {

enum class ViewId { complex_native, cartesian, polar, phase_only, magnitude_only };

std::string_view to_string(ViewId id) noexcept;
ViewId view_from_string(std::string_view name);

/// Real channels produced per complex channel (1 for complex_native, which stays complex).
std::size_t channel_multiplier(ViewId id) noexcept;

/// Transforms a complex [C x T] or [B x C x T] tensor.
///
///   complex_native  identity
///   cartesian       (x, y)
///   polar           (|z|, cos theta, sin theta)
///   phase_only      (cos theta, sin theta)
///   magnitude_only  |z|
///
/// Channels of one complex input channel are adjacent, e.g. polar gives
/// (|z_1|, cos_1, sin_1, |z_2|, ...). The phase of z = 0 is taken as 0,
/// i.e. (cos, sin) = (1, 0).
Tensor apply_view(ViewId view, const Tensor& z);

}  // namespace cxbench
