#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mdk/tensor.hpp"

namespace mdk {

struct LayoutSpec {
  enum class Kind { kUniform, kClustered };
  Kind kind = Kind::kUniform;
  int n_clusters = 1;   // clustered only
  double spread = 1.0;  // cluster std in pixels
};

// Generative description of one synthetic domain.
struct DomainSpec {
  int domain_id = 0;
  double count_log_mean = 2.0;  // log-normal head-count law
  double count_log_std = 0.3;
  LayoutSpec layout;
  double overlap_weight = 0.0;  // probability of sampling the partner's law
  int partner_id = -1;

  void validate(int num_domains) const;
};

struct GridSpec {
  int H = 16, W = 16;
  int kernel_size = 5;
  double kernel_sigma = 1.0;
};

struct Scene {
  std::string image_id;
  int domain_id = 0;  // collection label; kept even for overlap draws
  std::vector<std::array<double, 2>> points;  // (row, col)
  Tensor4 input_grid;                         // (1, 1, H, W) point impulses
  std::vector<double> gt_density;             // H * W
  int gt_count = 0;
};

// Deterministic given the seed. With probability overlap_weight the scene is
// drawn from the partner's law while keeping this domain's label.
Scene sample_scene(const DomainSpec& spec, const DomainSpec* partner,
                   const GridSpec& grid, std::uint64_t seed,
                   std::string image_id);

// Each point deposits a truncated Gaussian normalized to unit mass; kernel
// cells falling outside the grid are mirrored back in, so total mass is the
// point count. kernel_size must be odd, points must lie in [0,H) x [0,W).
std::vector<double> render_density(const std::vector<std::array<double, 2>>& points,
                                   int H, int W, int kernel_size,
                                   double kernel_sigma);

// Integral of a density map.
double count(const std::vector<double>& density);

// (MAE, RMSE) of predicted vs ground-truth counts.
std::pair<double, double> mae_rmse(const std::vector<double>& pred_counts,
                                   const std::vector<double>& gt_counts);

struct BenchmarkSpec {
  GridSpec grid;
  std::vector<DomainSpec> domains;
  std::vector<int> train_sizes;  // per domain
  std::vector<int> test_sizes;
  std::uint64_t seed = 1;

  void validate() const;
};

// Writes one directory per domain per split, one JSON record per scene, plus a
// manifest carrying the grid and generative spec. Byte-identical per seed.
void build_benchmark(const BenchmarkSpec& spec, const std::string& out_dir);

struct Dataset {
  GridSpec grid;
  int num_domains = 0;
  std::vector<Scene> train;  // merged across domains, labels preserved
  std::vector<Scene> test;
};

// Re-renders input grids and density maps from the stored point records.
Dataset load_dataset(const std::string& dir);

}  // namespace mdk
