#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "scs/panel.hpp"

namespace testing {

inline scs::ReturnPanel to_panel(const oracle::Columns& x) {
    std::vector<double> data;
    std::vector<std::string> labels;
    for (std::size_t j = 0; j < x.size(); ++j) {
        data.insert(data.end(), x[j].begin(), x[j].end());
        labels.push_back("X" + std::to_string(j));
    }
    return scs::ReturnPanel(std::move(data), x.front().size(), std::move(labels));
}

inline scs::ReturnPanel random_panel(int n, int t_count, std::uint64_t seed) {
    return to_panel(oracle::random_columns(n, t_count, seed));
}

}  // namespace testing
