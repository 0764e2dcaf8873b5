#pragma once

#include <cstdint>
#include <vector>

namespace fbgskin {

struct Dataset;

// Train/test split plus k disjoint folds over the train ids; assignment is
// at whole-indentation granularity.
struct SplitPlan {
    std::vector<int> train_ids;
    std::vector<int> test_ids;
    std::vector<std::vector<int>> folds;  // partition of train_ids
    std::uint64_t seed = 0;

    void validate(int dataset_size) const;  // throws on leakage or bad partition
};

SplitPlan make_split(const Dataset& dataset, double test_frac = 0.15, int k = 5,
                     std::uint64_t seed = 0);
SplitPlan make_split(int n_indentations, double test_frac, int k, std::uint64_t seed);

}  // namespace fbgskin
