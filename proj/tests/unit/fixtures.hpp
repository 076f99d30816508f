#pragma once

#include "crdnn/synth/generator.hpp"
#include "crdnn/train/grid.hpp"

#include <vector>

namespace testing_util {

// A handful of generated cycles from the default roster, reused across tests.
inline std::vector<crdnn::data::LabeledSeries> small_cycles(std::size_t per_profile = 2, std::uint64_t seed = 5) {
    auto cfg = crdnn::synth::default_dataset_config();
    for (auto& r : cfg.roster) r.cycles = static_cast<int>(per_profile);
    return crdnn::synth::generate_dataset(cfg, seed);
}

inline crdnn::train::WindowSets small_window_sets(int window_size = 9, int stride = 25, std::uint64_t seed = 5) {
    crdnn::train::ExperimentConfig cfg;
    cfg.stride = stride;
    cfg.split_seed = seed;
    const auto cycles = small_cycles(2, seed);
    const auto prepared = crdnn::train::prepare_experiment(cycles, cfg);
    return crdnn::train::make_window_sets(prepared, crdnn::train::window_options(cfg, window_size));
}

} // namespace testing_util
