#include "fbgskin/split.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "fbgskin/random.hpp"
#include "fbgskin/simulator.hpp"

namespace fbgskin {

void SplitPlan::validate(int dataset_size) const {
    std::vector<char> seen(dataset_size, 0);
    auto mark = [&](int id) {
        if (id < 0 || id >= dataset_size) throw std::runtime_error("split id out of range");
        if (seen[id]) throw std::runtime_error("split leakage: id assigned twice");
        seen[id] = 1;
    };
    for (int id : train_ids) mark(id);
    for (int id : test_ids) mark(id);

    std::vector<char> in_fold(dataset_size, 0);
    size_t fold_total = 0;
    for (const auto& fold : folds) {
        fold_total += fold.size();
        for (int id : fold) {
            if (in_fold[id]) throw std::runtime_error("split leakage: id in two folds");
            in_fold[id] = 1;
        }
    }
    if (fold_total != train_ids.size())
        throw std::runtime_error("folds do not partition the train set");
    for (int id : train_ids) {
        if (!in_fold[id]) throw std::runtime_error("train id missing from folds");
    }
}

SplitPlan make_split(int n, double test_frac, int k, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("empty dataset");
    if (test_frac < 0.0 || test_frac >= 1.0)
        throw std::invalid_argument("test_frac must be in [0,1)");
    SplitPlan plan;
    plan.seed = seed;
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    RngStream rng(derive_seed(seed, 0xf01d));
    for (int i = n - 1; i > 0; --i) std::swap(ids[i], ids[rng.uniform_int(i + 1)]);

    const int n_test = static_cast<int>(std::lround(test_frac * n));
    plan.test_ids.assign(ids.begin(), ids.begin() + n_test);
    plan.train_ids.assign(ids.begin() + n_test, ids.end());
    if (k > static_cast<int>(plan.train_ids.size()))
        throw std::invalid_argument("more folds than train indentations");
    plan.folds.resize(k);
    for (size_t i = 0; i < plan.train_ids.size(); ++i) {
        plan.folds[i % k].push_back(plan.train_ids[i]);
    }
    return plan;
}

SplitPlan make_split(const Dataset& dataset, double test_frac, int k, std::uint64_t seed) {
    return make_split(static_cast<int>(dataset.indentations.size()), test_frac, k, seed);
}

}  // namespace fbgskin
