#include "mdk/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ioutil.hpp"
#include "mdk/recipe.hpp"

namespace fs = std::filesystem;

namespace mdk {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

void print_metrics_table(std::ostream& out,
                         const std::vector<DomainMetrics>& metrics,
                         bool csv_mode) {
  if (csv_mode) {
    out << "domain,mae,rmse\n";
    for (const auto& m : metrics)
      out << m.domain_id << ',' << fmt_double(m.mae) << ',' << fmt_double(m.rmse)
          << '\n';
    return;
  }
  out << "domain   scenes      MAE     RMSE\n";
  char line[96];
  for (const auto& m : metrics) {
    std::snprintf(line, sizeof(line), "%6d %8d %8.3f %8.3f\n", m.domain_id,
                  m.scenes, m.mae, m.rmse);
    out << line;
  }
}

int cmd_gen(const std::string& recipe_path, const std::string& out_override,
            std::optional<std::uint64_t> seed_override, bool force) {
  ExperimentRecipe recipe = load_recipe_file(recipe_path);
  if (seed_override) {
    recipe.seed = *seed_override;
    recipe.bench.seed = *seed_override;
  }
  const std::string out_dir =
      out_override.empty() ? recipe.dataset_dir : out_override;
  if (fs::exists(fs::path(out_dir) / "manifest.json") && !force)
    throw ConfigError("dataset directory '" + out_dir +
                      "' already exists; pass --force to regenerate");
  build_benchmark(recipe.bench, out_dir);

  std::cout << "dataset written to " << out_dir << "\n";
  for (std::size_t i = 0; i < recipe.bench.domains.size(); ++i)
    std::cout << "  domain " << recipe.bench.domains[i].domain_id << ": "
              << recipe.bench.train_sizes[i] << " train, "
              << recipe.bench.test_sizes[i] << " test scenes\n";
  return kExitOk;
}

int cmd_train(const std::string& recipe_path, const std::string& variant_arg,
              const std::string& resume, std::optional<std::uint64_t> seed_override,
              bool force) {
  ExperimentRecipe recipe = load_recipe_file(recipe_path);

  std::vector<Variant> variants;
  if (variant_arg.empty()) {
    variants = recipe.variants;
  } else if (variant_arg == "all") {
    variants = {Variant::kBase, Variant::kGcl, Variant::kVcl};
  } else {
    variants = {variant_from_name(variant_arg)};
  }
  if (!resume.empty() && variants.size() != 1)
    throw ConfigError("--resume requires a single --variant");

  for (Variant variant : variants) {
    TrainConfig cfg = recipe.train;
    cfg.variant = variant;
    if (seed_override) cfg.seed = *seed_override;
    cfg.dataset_path = recipe.dataset_dir;
    cfg.checkpoint_path =
        (fs::path(recipe.output_dir) / variant_name(variant)).string();

    const fs::path metrics = fs::path(cfg.checkpoint_path) / "metrics.csv";
    if (resume.empty() && fs::exists(metrics) && !force)
      throw ConfigError("run directory '" + cfg.checkpoint_path +
                        "' already holds results; pass --force to overwrite");

    std::cout << "training " << variant_name(variant) << " (seed " << cfg.seed
              << ", " << cfg.epochs << " epochs)\n";
    RunResult result = run_experiment(cfg, resume);
    print_metrics_table(std::cout, result.final_metrics, false);
    std::cout << "artifacts in " << result.run_dir << "\n";
  }
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_dir,
             bool csv_mode) {
  TrainerSession session = load_checkpoint(checkpoint);
  session.cfg.dataset_path = data_dir;
  Dataset data = load_dataset(data_dir);
  const std::vector<DomainMetrics> metrics = evaluate(session, data);
  print_metrics_table(std::cout, metrics, csv_mode);
  return kExitOk;
}

struct RunSummary {
  std::string name;
  std::map<int, std::pair<double, double>> by_domain;  // domain -> (mae, rmse)
};

RunSummary read_final_metrics(const std::string& run_dir) {
  const fs::path path = fs::path(run_dir) / "metrics.csv";
  std::ifstream in(path);
  if (!in) throw ConfigError("no metrics.csv under '" + run_dir + "'");
  RunSummary summary;
  summary.name = fs::path(run_dir).filename().string();
  if (summary.name.empty()) summary.name = run_dir;
  std::string line;
  std::getline(in, line);  // header
  int last_epoch = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() < 5) throw IoError("malformed metrics row in " + path.string());
    const int epoch = std::stoi(fields[0]);
    const int domain = std::stoi(fields[2]);
    if (epoch > last_epoch) {
      last_epoch = epoch;
      summary.by_domain.clear();
    }
    if (epoch == last_epoch)
      summary.by_domain[domain] = {std::stod(fields[3]), std::stod(fields[4])};
  }
  if (summary.by_domain.empty())
    throw ConfigError("metrics.csv under '" + run_dir + "' has no data rows");
  return summary;
}

int cmd_compare(const std::vector<std::string>& run_dirs) {
  std::vector<RunSummary> runs;
  for (const auto& dir : run_dirs) runs.push_back(read_final_metrics(dir));

  std::vector<int> domains;
  for (const auto& [d, mm] : runs.front().by_domain) domains.push_back(d);
  for (const auto& run : runs)
    if (run.by_domain.size() != domains.size())
      throw ConfigError("runs cover different domain sets; cannot compare");

  // Lower is better; mark the per-column minimum with '*'.
  std::cout << "run";
  for (int d : domains) std::cout << ",d" << d << "_mae,d" << d << "_rmse";
  std::cout << '\n';
  for (const auto& run : runs) {
    std::cout << run.name;
    for (int d : domains) {
      const auto [mae, rmse] = run.by_domain.at(d);
      double best_mae = mae, best_rmse = rmse;
      for (const auto& other : runs) {
        best_mae = std::min(best_mae, other.by_domain.at(d).first);
        best_rmse = std::min(best_rmse, other.by_domain.at(d).second);
      }
      char buf[64];
      std::snprintf(buf, sizeof(buf), ",%.3f%s,%.3f%s", mae,
                    mae == best_mae ? "*" : "", rmse,
                    rmse == best_rmse ? "*" : "");
      std::cout << buf;
    }
    std::cout << '\n';
  }
  return kExitOk;
}

}  // namespace

int cli_run(std::vector<std::string> args) {
  CLI::App app{"synthetic multidomain density-regression lab"};
  app.name("mdk");
  app.require_subcommand(1);

  std::string recipe_path, out_dir, variant, resume, checkpoint, data_dir;
  std::vector<std::string> run_dirs;
  std::optional<std::uint64_t> seed_override;
  bool force = false, csv_mode = false;

  CLI::App* gen = app.add_subcommand("gen", "materialize the synthetic benchmark");
  gen->add_option("--recipe", recipe_path, "recipe JSON path")->required();
  gen->add_option("--out", out_dir, "output directory (default: recipe dataset_dir)");
  gen->add_option("--seed", seed_override, "override the recipe seed");
  gen->add_flag("--force", force, "overwrite an existing dataset");

  CLI::App* train = app.add_subcommand("train", "train one or more variants");
  train->add_option("--recipe", recipe_path, "recipe JSON path")->required();
  train->add_option("--variant", variant, "base|gcl|vcl|all (default: recipe list)");
  train->add_option("--resume", resume, "checkpoint to resume from");
  train->add_option("--seed", seed_override, "override the recipe seed");
  train->add_flag("--force", force, "overwrite an existing run directory");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint JSON path")->required();
  eval_cmd->add_option("--data", data_dir, "dataset directory")->required();
  eval_cmd->add_flag("--csv", csv_mode, "full-precision CSV output");

  CLI::App* compare = app.add_subcommand("compare", "join run results into one table");
  compare->add_option("--runs", run_dirs, "run directories")->required()->expected(-1);

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen(recipe_path, out_dir, seed_override, force);
    if (train->parsed())
      return cmd_train(recipe_path, variant, resume, seed_override, force);
    if (eval_cmd->parsed()) return cmd_eval(checkpoint, data_dir, csv_mode);
    if (compare->parsed()) return cmd_compare(run_dirs);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TrainAbort& e) {
    std::cerr << "abort: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace mdk
