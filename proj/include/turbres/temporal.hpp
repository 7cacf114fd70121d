#pragma once

#include <vector>

#include "turbres/image.hpp"

namespace turbres {

/// Ordered list of same-shaped frames.
struct Sequence {
    std::vector<ScalarImage> frames;

    int frame_count() const { return static_cast<int>(frames.size()); }
    bool shapes_consistent() const;
};

/// Per-pixel arithmetic mean across frames.
ScalarImage temporal_mean(const Sequence& seq);

/// Per-pixel median across frames; for an even frame count, the mean of the
/// two central order statistics.
ScalarImage temporal_median(const Sequence& seq);

}  // namespace turbres
