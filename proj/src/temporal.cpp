#include "turbres/temporal.hpp"

#include <algorithm>
#include <stdexcept>

namespace turbres {

bool Sequence::shapes_consistent() const {
    for (const auto& f : frames)
        if (!f.same_shape(frames.front())) return false;
    return true;
}

namespace {

void check_sequence(const Sequence& seq) {
    if (seq.frames.empty()) throw std::invalid_argument("temporal filter: empty sequence");
    if (!seq.shapes_consistent())
        throw std::invalid_argument("temporal filter: frames differ in shape");
}

}  // namespace

ScalarImage temporal_mean(const Sequence& seq) {
    check_sequence(seq);
    const auto& first = seq.frames.front();
    ScalarImage out(first.width, first.height);
    for (const auto& f : seq.frames)
        for (size_t i = 0; i < out.pixel_count(); ++i) out.data[i] += f.data[i];
    const double inv = 1.0 / seq.frame_count();
    for (auto& v : out.data) v *= inv;
    return out;
}

ScalarImage temporal_median(const Sequence& seq) {
    check_sequence(seq);
    const auto& first = seq.frames.front();
    const int n = seq.frame_count();
    ScalarImage out(first.width, first.height);
    std::vector<double> values(static_cast<size_t>(n));
    for (size_t i = 0; i < out.pixel_count(); ++i) {
        for (int f = 0; f < n; ++f) values[static_cast<size_t>(f)] = seq.frames[f].data[i];
        const auto mid = values.begin() + n / 2;
        std::nth_element(values.begin(), mid, values.end());
        if (n % 2 == 1) {
            out.data[i] = *mid;
        } else {
            const double hi = *mid;
            const double lo = *std::max_element(values.begin(), mid);
            out.data[i] = 0.5 * (lo + hi);
        }
    }
    return out;
}

}  // namespace turbres
