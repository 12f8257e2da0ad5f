#pragma once

#include <vector>

namespace cncfl {

struct Sample {
    std::vector<double> features;
    int label = 0;

    friend bool operator==(const Sample&, const Sample&) = default;
    friend auto operator<=>(const Sample&, const Sample&) = default;
};

} // namespace cncfl
