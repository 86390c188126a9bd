#pragma once

#include <string>
#include <vector>

#include "mdk/synthdomain.hpp"
#include "mdk/trainer.hpp"

namespace mdk {

// One JSON document describing a full experiment: the synthetic benchmark,
// the training configuration, and which variants to run. Schema is strict;
// unknown keys are rejected.
struct ExperimentRecipe {
  std::uint64_t seed = 1;
  std::string dataset_dir;
  std::string output_dir;
  BenchmarkSpec bench;        // seed mirrored from the recipe seed
  TrainConfig train;          // variant and paths filled in per run
  std::vector<Variant> variants;
};

ExperimentRecipe parse_recipe(const std::string& json_text);
ExperimentRecipe load_recipe_file(const std::string& path);
std::string recipe_to_json(const ExperimentRecipe& recipe);

// The imbalanced 3-domain benchmark: one dominant domain (600 train scenes)
// and two minority domains (150 each) with distinct count laws and layouts.
ExperimentRecipe default_recipe();

}  // namespace mdk
