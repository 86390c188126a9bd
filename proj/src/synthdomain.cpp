#include "mdk/synthdomain.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "jsonio.hpp"
#include "mdk/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mdk {

void DomainSpec::validate(int num_domains) const {
  if (domain_id < 0 || domain_id >= num_domains)
    throw ConfigError("DomainSpec: domain_id out of range");
  if (!(overlap_weight >= 0.0 && overlap_weight <= 1.0))
    throw ConfigError("DomainSpec: overlap_weight outside [0, 1]");
  if (overlap_weight > 0.0 &&
      (partner_id < 0 || partner_id >= num_domains || partner_id == domain_id))
    throw ConfigError("DomainSpec: overlap requires a distinct valid partner");
  if (count_log_std < 0.0) throw ConfigError("DomainSpec: negative log-std");
  if (layout.kind == LayoutSpec::Kind::kClustered && layout.n_clusters < 1)
    throw ConfigError("DomainSpec: clustered layout needs n_clusters >= 1");
}

void BenchmarkSpec::validate() const {
  if (domains.empty()) throw ConfigError("BenchmarkSpec: no domains");
  if (train_sizes.size() != domains.size() || test_sizes.size() != domains.size())
    throw ConfigError("BenchmarkSpec: sizes must match domain count");
  for (std::size_t i = 0; i < domains.size(); ++i) {
    domains[i].validate(static_cast<int>(domains.size()));
    if (domains[i].domain_id != static_cast<int>(i))
      throw ConfigError("BenchmarkSpec: domains must be listed in id order");
    if (train_sizes[i] < 1 || test_sizes[i] < 1)
      throw ConfigError("BenchmarkSpec: sizes must be >= 1");
  }
  if (grid.H < 1 || grid.W < 1) throw ConfigError("BenchmarkSpec: empty grid");
  if (grid.kernel_size < 1 || grid.kernel_size % 2 == 0)
    throw ConfigError("BenchmarkSpec: kernel_size must be odd");
  if (grid.kernel_sigma <= 0.0)
    throw ConfigError("BenchmarkSpec: kernel_sigma must be positive");
}

namespace {

std::vector<std::array<double, 2>> sample_points(const DomainSpec& law,
                                                 const GridSpec& grid, int n,
                                                 Rng& rng) {
  std::vector<std::array<double, 2>> pts;
  pts.reserve(n);
  if (law.layout.kind == LayoutSpec::Kind::kUniform) {
    for (int i = 0; i < n; ++i) {
      const double r = rng.uniform(0.0, grid.H);
      const double c = rng.uniform(0.0, grid.W);
      pts.push_back({r, c});
    }
    return pts;
  }
  // Clustered: centers uniform over the grid, points normal around a center.
  std::vector<std::array<double, 2>> centers(law.layout.n_clusters);
  for (auto& ctr : centers)
    ctr = {rng.uniform(0.0, grid.H), rng.uniform(0.0, grid.W)};
  const double eps = 1e-9;
  for (int i = 0; i < n; ++i) {
    const auto& ctr = centers[rng.bounded(centers.size())];
    double r = ctr[0] + law.layout.spread * rng.normal();
    double c = ctr[1] + law.layout.spread * rng.normal();
    r = std::clamp(r, 0.0, grid.H - eps);
    c = std::clamp(c, 0.0, grid.W - eps);
    pts.push_back({r, c});
  }
  return pts;
}

Tensor4 rasterize(const std::vector<std::array<double, 2>>& points,
                  const GridSpec& grid) {
  Tensor4 t(1, 1, grid.H, grid.W);
  for (const auto& p : points) {
    const int r = std::clamp(static_cast<int>(std::llround(p[0])), 0, grid.H - 1);
    const int c = std::clamp(static_cast<int>(std::llround(p[1])), 0, grid.W - 1);
    t.at(0, 0, r, c) += 1.0;
  }
  return t;
}

int reflect_index(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -1 - i;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

}  // namespace

std::vector<double> render_density(const std::vector<std::array<double, 2>>& points,
                                   int H, int W, int kernel_size,
                                   double kernel_sigma) {
  if (kernel_size < 1 || kernel_size % 2 == 0)
    throw ConfigError("render_density: kernel_size must be odd");
  const int half = kernel_size / 2;

  // Truncated Gaussian window normalized to unit mass.
  std::vector<double> kernel(static_cast<std::size_t>(kernel_size) * kernel_size);
  double ksum = 0.0;
  for (int i = 0; i < kernel_size; ++i)
    for (int j = 0; j < kernel_size; ++j) {
      const double dr = i - half, dc = j - half;
      const double v =
          std::exp(-(dr * dr + dc * dc) / (2.0 * kernel_sigma * kernel_sigma));
      kernel[i * kernel_size + j] = v;
      ksum += v;
    }
  for (double& v : kernel) v /= ksum;

  std::vector<double> out(static_cast<std::size_t>(H) * W, 0.0);
  for (const auto& p : points) {
    if (!(p[0] >= 0.0 && p[0] < H && p[1] >= 0.0 && p[1] < W))
      throw ConfigError("render_density: point outside grid");
    const int cr = std::clamp(static_cast<int>(std::llround(p[0])), 0, H - 1);
    const int cc = std::clamp(static_cast<int>(std::llround(p[1])), 0, W - 1);
    for (int i = 0; i < kernel_size; ++i) {
      const int r = reflect_index(cr + i - half, H);
      for (int j = 0; j < kernel_size; ++j) {
        const int c = reflect_index(cc + j - half, W);
        out[static_cast<std::size_t>(r) * W + c] += kernel[i * kernel_size + j];
      }
    }
  }
  return out;
}

double count(const std::vector<double>& density) {
  double acc = 0.0;
  for (double v : density) acc += v;
  return acc;
}

std::pair<double, double> mae_rmse(const std::vector<double>& pred_counts,
                                   const std::vector<double>& gt_counts) {
  if (pred_counts.empty() || pred_counts.size() != gt_counts.size())
    throw ConfigError("mae_rmse: empty or mismatched count lists");
  const double n = static_cast<double>(pred_counts.size());
  double abs_acc = 0.0, sq_acc = 0.0;
  for (std::size_t i = 0; i < pred_counts.size(); ++i) {
    const double d = std::fabs(pred_counts[i] - gt_counts[i]);
    abs_acc += d;
    sq_acc += d * d;
  }
  return {abs_acc / n, std::sqrt(sq_acc / n)};
}

Scene sample_scene(const DomainSpec& spec, const DomainSpec* partner,
                   const GridSpec& grid, std::uint64_t seed,
                   std::string image_id) {
  Rng rng(seed);
  const DomainSpec* law = &spec;
  if (spec.overlap_weight > 0.0) {
    if (partner == nullptr)
      throw ConfigError("sample_scene: overlap_weight > 0 but no partner spec");
    if (rng.uniform01() < spec.overlap_weight) law = partner;
  } else {
    rng.uniform01();  // keep the draw layout identical either way
  }

  const double raw = std::exp(law->count_log_mean + law->count_log_std * rng.normal());
  const long long max_count = static_cast<long long>(grid.H) * grid.W;
  const long long n = std::clamp(std::llround(raw), 1LL, max_count);

  Scene scene;
  scene.image_id = std::move(image_id);
  scene.domain_id = spec.domain_id;
  scene.points = sample_points(*law, grid, static_cast<int>(n), rng);
  scene.input_grid = rasterize(scene.points, grid);
  scene.gt_density = render_density(scene.points, grid.H, grid.W,
                                    grid.kernel_size, grid.kernel_sigma);
  scene.gt_count = static_cast<int>(n);
  return scene;
}

namespace {

json layout_to_json(const LayoutSpec& layout) {
  json j;
  j["kind"] = layout.kind == LayoutSpec::Kind::kUniform ? "uniform" : "clustered";
  if (layout.kind == LayoutSpec::Kind::kClustered) {
    j["n_clusters"] = layout.n_clusters;
    j["spread"] = layout.spread;
  }
  return j;
}

LayoutSpec layout_from_json(const json& j, const std::string& where) {
  expect_keys(j, {"kind"}, {"n_clusters", "spread"}, where);
  LayoutSpec layout;
  const auto kind = get_as<std::string>(j, "kind", where);
  if (kind == "uniform") {
    layout.kind = LayoutSpec::Kind::kUniform;
  } else if (kind == "clustered") {
    layout.kind = LayoutSpec::Kind::kClustered;
    layout.n_clusters = get_as<int>(j, "n_clusters", where);
    layout.spread = get_as<double>(j, "spread", where);
  } else {
    throw ConfigError(where + ": layout kind must be uniform|clustered");
  }
  return layout;
}

json grid_to_json(const GridSpec& g) {
  return json{{"H", g.H},
              {"W", g.W},
              {"kernel_size", g.kernel_size},
              {"kernel_sigma", g.kernel_sigma}};
}

GridSpec grid_from_json(const json& j, const std::string& where) {
  expect_keys(j, {"H", "W", "kernel_size", "kernel_sigma"}, {}, where);
  GridSpec g;
  g.H = get_as<int>(j, "H", where);
  g.W = get_as<int>(j, "W", where);
  g.kernel_size = get_as<int>(j, "kernel_size", where);
  g.kernel_sigma = get_as<double>(j, "kernel_sigma", where);
  return g;
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string scene_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%05d.json", index);
  return buf;
}

}  // namespace

json domain_spec_to_json(const DomainSpec& d) {
  json j;
  j["domain_id"] = d.domain_id;
  j["count_log_mean"] = d.count_log_mean;
  j["count_log_std"] = d.count_log_std;
  j["layout"] = layout_to_json(d.layout);
  j["overlap_weight"] = d.overlap_weight;
  if (d.partner_id >= 0) j["partner_id"] = d.partner_id;
  return j;
}

DomainSpec domain_spec_from_json(const json& j, const std::string& where) {
  expect_keys(j,
              {"domain_id", "count_log_mean", "count_log_std", "layout",
               "overlap_weight"},
              {"partner_id"}, where);
  DomainSpec d;
  d.domain_id = get_as<int>(j, "domain_id", where);
  d.count_log_mean = get_as<double>(j, "count_log_mean", where);
  d.count_log_std = get_as<double>(j, "count_log_std", where);
  d.layout = layout_from_json(j.at("layout"), where + ".layout");
  d.overlap_weight = get_as<double>(j, "overlap_weight", where);
  d.partner_id = get_or<int>(j, "partner_id", -1, where);
  return d;
}

void build_benchmark(const BenchmarkSpec& spec, const std::string& out_dir) {
  spec.validate();
  const fs::path root(out_dir);
  fs::create_directories(root);

  json manifest;
  manifest["format_version"] = 1;
  manifest["seed"] = std::to_string(spec.seed);
  manifest["grid"] = grid_to_json(spec.grid);
  manifest["domains"] = json::array();
  manifest["train_sizes"] = spec.train_sizes;
  manifest["test_sizes"] = spec.test_sizes;
  for (const auto& d : spec.domains)
    manifest["domains"].push_back(domain_spec_to_json(d));
  write_text_file(root / "manifest.json", manifest.dump(2) + "\n");

  for (std::size_t di = 0; di < spec.domains.size(); ++di) {
    const DomainSpec& dom = spec.domains[di];
    const DomainSpec* partner =
        dom.partner_id >= 0 ? &spec.domains[dom.partner_id] : nullptr;
    for (const bool is_train : {true, false}) {
      const char* split = is_train ? "train" : "test";
      const int size = is_train ? spec.train_sizes[di] : spec.test_sizes[di];
      const fs::path dir = root / ("domain_" + std::to_string(dom.domain_id)) / split;
      fs::create_directories(dir);
      for (int i = 0; i < size; ++i) {
        const std::uint64_t scene_seed = derive_seed(
            spec.seed, std::string("scene.") + split, dom.domain_id, i);
        char id[64];
        std::snprintf(id, sizeof(id), "d%d_%s_%05d", dom.domain_id, split, i);
        Scene scene = sample_scene(dom, partner, spec.grid, scene_seed, id);
        json j;
        j["image_id"] = scene.image_id;
        j["domain_id"] = scene.domain_id;
        j["H"] = spec.grid.H;
        j["W"] = spec.grid.W;
        j["points"] = json::array();
        for (const auto& p : scene.points)
          j["points"].push_back(json::array({p[0], p[1]}));
        write_text_file(dir / scene_file_name(i), j.dump(2) + "\n");
      }
    }
  }
}

Dataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  const fs::path manifest_path = root / "manifest.json";
  if (!fs::exists(manifest_path))
    throw ConfigError("dataset not found at '" + dir +
                      "' (no manifest.json); run the gen command first");
  std::ifstream in(manifest_path);
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw IoError("corrupt manifest.json: " + std::string(e.what()));
  }
  expect_keys(manifest,
              {"format_version", "seed", "grid", "domains", "train_sizes",
               "test_sizes"},
              {}, "manifest");

  Dataset ds;
  ds.grid = grid_from_json(manifest.at("grid"), "manifest.grid");
  ds.num_domains = static_cast<int>(manifest.at("domains").size());

  for (const bool is_train : {true, false}) {
    const char* split = is_train ? "train" : "test";
    auto& scenes = is_train ? ds.train : ds.test;
    for (int d = 0; d < ds.num_domains; ++d) {
      const fs::path sdir = root / ("domain_" + std::to_string(d)) / split;
      if (!fs::exists(sdir))
        throw IoError("missing dataset directory: " + sdir.string());
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(sdir))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        std::ifstream sf(f);
        json j;
        try {
          sf >> j;
        } catch (const json::exception& e) {
          throw IoError("corrupt scene file " + f.string() + ": " + e.what());
        }
        expect_keys(j, {"image_id", "domain_id", "H", "W", "points"}, {},
                    f.filename().string());
        Scene scene;
        scene.image_id = get_as<std::string>(j, "image_id", f.string());
        scene.domain_id = get_as<int>(j, "domain_id", f.string());
        for (const auto& p : j.at("points"))
          scene.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        scene.input_grid = rasterize(scene.points, ds.grid);
        scene.gt_density =
            render_density(scene.points, ds.grid.H, ds.grid.W,
                           ds.grid.kernel_size, ds.grid.kernel_sigma);
        scene.gt_count = static_cast<int>(scene.points.size());
        scenes.push_back(std::move(scene));
      }
    }
  }
  return ds;
}

}  // namespace mdk
