#include "mdk/recipe.hpp"

#include <cmath>
#include <fstream>

#include "jsonio.hpp"
#include "synthdomain_json.hpp"

using nlohmann::json;

namespace mdk {

namespace {

TrainConfig train_from_json(const json& j) {
  const std::string where = "recipe.train";
  expect_keys(j, {},
              {"epochs", "kappa", "tau", "rho_max", "lambda", "batch_size",
               "learning_rate", "eval_every", "C", "d"},
              where);
  TrainConfig cfg;
  cfg.epochs = get_or<int>(j, "epochs", cfg.epochs, where);
  cfg.kappa = get_or<int>(j, "kappa", cfg.kappa, where);
  cfg.tau = get_or<int>(j, "tau", cfg.tau, where);
  cfg.rho_max = get_or<double>(j, "rho_max", cfg.rho_max, where);
  cfg.lambda = get_or<double>(j, "lambda", cfg.lambda, where);
  cfg.batch_size = get_or<int>(j, "batch_size", cfg.batch_size, where);
  cfg.learning_rate = get_or<double>(j, "learning_rate", cfg.learning_rate, where);
  cfg.eval_every = get_or<int>(j, "eval_every", cfg.eval_every, where);
  cfg.C = get_or<int>(j, "C", cfg.C, where);
  cfg.d = get_or<int>(j, "d", cfg.d, where);
  return cfg;
}

json train_to_json(const TrainConfig& cfg) {
  return json{{"epochs", cfg.epochs},
              {"kappa", cfg.kappa},
              {"tau", cfg.tau},
              {"rho_max", cfg.rho_max},
              {"lambda", cfg.lambda},
              {"batch_size", cfg.batch_size},
              {"learning_rate", cfg.learning_rate},
              {"eval_every", cfg.eval_every},
              {"C", cfg.C},
              {"d", cfg.d}};
}

}  // namespace

ExperimentRecipe parse_recipe(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("recipe is not valid JSON: ") + e.what());
  }
  expect_keys(j, {"seed", "dataset_dir", "output_dir", "grid", "domains"},
              {"train", "variants"}, "recipe");

  ExperimentRecipe r;
  r.seed = get_as<std::uint64_t>(j, "seed", "recipe");
  r.dataset_dir = get_as<std::string>(j, "dataset_dir", "recipe");
  r.output_dir = get_as<std::string>(j, "output_dir", "recipe");

  const json& grid = j.at("grid");
  expect_keys(grid, {"H", "W", "kernel_size", "kernel_sigma"}, {}, "recipe.grid");
  r.bench.grid.H = get_as<int>(grid, "H", "recipe.grid");
  r.bench.grid.W = get_as<int>(grid, "W", "recipe.grid");
  r.bench.grid.kernel_size = get_as<int>(grid, "kernel_size", "recipe.grid");
  r.bench.grid.kernel_sigma = get_as<double>(grid, "kernel_sigma", "recipe.grid");

  if (!j.at("domains").is_array() || j.at("domains").empty())
    throw ConfigError("recipe.domains must be a non-empty array");
  for (const json& dj : j.at("domains")) {
    expect_keys(dj,
                {"domain_id", "count_log_mean", "count_log_std", "layout",
                 "overlap_weight", "train_scenes", "test_scenes"},
                {"partner_id"}, "recipe.domains[]");
    json spec = dj;
    const int train_scenes = get_as<int>(spec, "train_scenes", "recipe.domains[]");
    const int test_scenes = get_as<int>(spec, "test_scenes", "recipe.domains[]");
    spec.erase("train_scenes");
    spec.erase("test_scenes");
    r.bench.domains.push_back(domain_spec_from_json(spec, "recipe.domains[]"));
    r.bench.train_sizes.push_back(train_scenes);
    r.bench.test_sizes.push_back(test_scenes);
  }
  r.bench.seed = r.seed;
  r.bench.validate();

  r.train = j.contains("train") ? train_from_json(j.at("train")) : TrainConfig{};
  r.train.seed = r.seed;
  r.train.validate();

  if (j.contains("variants")) {
    for (const json& v : j.at("variants"))
      r.variants.push_back(variant_from_name(v.get<std::string>()));
  } else {
    r.variants = {Variant::kBase, Variant::kGcl, Variant::kVcl};
  }
  return r;
}

ExperimentRecipe load_recipe_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open recipe file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_recipe(text);
}

std::string recipe_to_json(const ExperimentRecipe& recipe) {
  json j;
  j["seed"] = recipe.seed;
  j["dataset_dir"] = recipe.dataset_dir;
  j["output_dir"] = recipe.output_dir;
  j["grid"] = json{{"H", recipe.bench.grid.H},
                   {"W", recipe.bench.grid.W},
                   {"kernel_size", recipe.bench.grid.kernel_size},
                   {"kernel_sigma", recipe.bench.grid.kernel_sigma}};
  j["domains"] = json::array();
  for (std::size_t i = 0; i < recipe.bench.domains.size(); ++i) {
    json dj = domain_spec_to_json(recipe.bench.domains[i]);
    dj["train_scenes"] = recipe.bench.train_sizes[i];
    dj["test_scenes"] = recipe.bench.test_sizes[i];
    j["domains"].push_back(dj);
  }
  j["train"] = train_to_json(recipe.train);
  j["variants"] = json::array();
  for (Variant v : recipe.variants) j["variants"].push_back(variant_name(v));
  return j.dump(2) + "\n";
}

ExperimentRecipe default_recipe() {
  ExperimentRecipe r;
  r.seed = 1;
  r.dataset_dir = "data/default";
  r.output_dir = "runs/default";

  r.bench.grid = GridSpec{16, 16, 5, 1.0};

  DomainSpec dominant;
  dominant.domain_id = 0;
  dominant.count_log_mean = std::log(12.0);
  dominant.count_log_std = 0.35;
  dominant.layout = LayoutSpec{LayoutSpec::Kind::kUniform, 1, 1.0};
  dominant.overlap_weight = 0.10;
  dominant.partner_id = 1;

  DomainSpec dense_minor;
  dense_minor.domain_id = 1;
  dense_minor.count_log_mean = std::log(60.0);
  dense_minor.count_log_std = 0.30;
  dense_minor.layout = LayoutSpec{LayoutSpec::Kind::kClustered, 3, 1.5};
  dense_minor.overlap_weight = 0.10;
  dense_minor.partner_id = 0;

  DomainSpec sparse_minor;
  sparse_minor.domain_id = 2;
  sparse_minor.count_log_mean = std::log(3.0);
  sparse_minor.count_log_std = 0.40;
  sparse_minor.layout = LayoutSpec{LayoutSpec::Kind::kUniform, 1, 1.0};
  sparse_minor.overlap_weight = 0.05;
  sparse_minor.partner_id = 0;

  r.bench.domains = {dominant, dense_minor, sparse_minor};
  r.bench.train_sizes = {600, 150, 150};
  r.bench.test_sizes = {100, 100, 100};
  r.bench.seed = r.seed;

  r.train = TrainConfig{};  // desk defaults
  r.train.seed = r.seed;
  r.variants = {Variant::kBase, Variant::kGcl, Variant::kVcl};
  return r;
}

}  // namespace mdk
