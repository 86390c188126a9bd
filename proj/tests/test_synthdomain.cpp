#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mdk/rng.hpp"
#include "mdk/synthdomain.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace mdk;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

BenchmarkSpec small_spec(std::uint64_t seed) {
  BenchmarkSpec spec;
  spec.grid = GridSpec{16, 16, 5, 1.0};
  DomainSpec a;
  a.domain_id = 0;
  a.count_log_mean = std::log(12.0);
  a.count_log_std = 0.3;
  a.overlap_weight = 0.2;
  a.partner_id = 1;
  DomainSpec b;
  b.domain_id = 1;
  b.count_log_mean = std::log(40.0);
  b.count_log_std = 0.25;
  b.layout = LayoutSpec{LayoutSpec::Kind::kClustered, 3, 1.5};
  b.overlap_weight = 0.0;
  DomainSpec c;
  c.domain_id = 2;
  c.count_log_mean = std::log(3.0);
  c.count_log_std = 0.4;
  c.overlap_weight = 0.1;
  c.partner_id = 0;
  spec.domains = {a, b, c};
  spec.train_sizes = {20, 8, 8};
  spec.test_sizes = {5, 5, 5};
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("density rendering") {
  SUBCASE("one centered point carries unit mass") {
    const auto map = render_density({{8.0, 8.0}}, 16, 16, 5, 1.0);
    CHECK(std::fabs(count(map) - 1.0) <= 1e-9);
  }

  SUBCASE("zero points give an empty map") {
    const auto map = render_density({}, 16, 16, 5, 1.0);
    for (double v : map) CHECK(v == 0.0);
  }

  SUBCASE("mass conservation for random points, including border points") {
    Rng rng(5);
    std::vector<std::array<double, 2>> pts;
    for (int i = 0; i < 7; ++i)
      pts.push_back({rng.uniform(0.0, 16.0), rng.uniform(0.0, 16.0)});
    pts.push_back({0.0, 0.0});      // corners exercise the reflection
    pts.push_back({15.9, 15.9});
    const auto map = render_density(pts, 16, 16, 5, 1.0);
    CHECK(std::fabs(count(map) - 9.0) <= 1e-6);
  }

  SUBCASE("points outside the grid are rejected") {
    CHECK_THROWS_AS(render_density({{16.0, 3.0}}, 16, 16, 5, 1.0), ConfigError);
    CHECK_THROWS_AS(render_density({{-0.1, 3.0}}, 16, 16, 5, 1.0), ConfigError);
  }

  SUBCASE("even kernels are rejected") {
    CHECK_THROWS_AS(render_density({}, 16, 16, 4, 1.0), ConfigError);
  }
}

TEST_CASE("count is a plain sum") {
  CHECK(count(std::vector<double>(64, 0.0)) == 0.0);

  Rng rng(7);
  std::vector<double> map(64);
  double expect = 0.0;
  for (double& v : map) {
    v = rng.uniform(-1.0, 1.0);
    expect += v;
  }
  CHECK(count(map) == expect);
}

TEST_CASE("MAE and RMSE") {
  CHECK(mae_rmse({3.0, 5.0}, {3.0, 5.0}) == std::pair<double, double>{0.0, 0.0});

  const auto [mae, rmse] = mae_rmse({3.0, -4.0}, {0.0, 0.0});
  CHECK(mae == doctest::Approx(3.5).epsilon(1e-15));
  CHECK(rmse == doctest::Approx(std::sqrt(12.5)).epsilon(1e-12));

  SUBCASE("RMSE dominates MAE") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 1 + static_cast<int>(rng.bounded(10));
      std::vector<double> pred(n), gt(n);
      for (int i = 0; i < n; ++i) {
        pred[i] = rng.uniform(-50.0, 50.0);
        gt[i] = rng.uniform(-50.0, 50.0);
      }
      const auto [m, r] = mae_rmse(pred, gt);
      CHECK(r >= m - 1e-12);
    }
  }

  CHECK_THROWS_AS(mae_rmse({}, {}), ConfigError);
  CHECK_THROWS_AS(mae_rmse({1.0}, {1.0, 2.0}), ConfigError);
}

TEST_CASE("scene sampling") {
  GridSpec grid{16, 16, 5, 1.0};
  DomainSpec sparse;
  sparse.domain_id = 0;
  sparse.count_log_mean = std::log(3.0);
  sparse.count_log_std = 0.1;
  DomainSpec dense;
  dense.domain_id = 1;
  dense.count_log_mean = std::log(120.0);
  dense.count_log_std = 0.1;

  SUBCASE("deterministic replay is bitwise identical") {
    DomainSpec spec = sparse;
    spec.overlap_weight = 0.5;
    spec.partner_id = 1;
    const Scene s1 = sample_scene(spec, &dense, grid, 42, "img");
    const Scene s2 = sample_scene(spec, &dense, grid, 42, "img");
    CHECK(s1.points == s2.points);
    CHECK(s1.gt_density == s2.gt_density);
    CHECK(s1.input_grid.data == s2.input_grid.data);
    CHECK(s1.gt_count == s2.gt_count);
  }

  SUBCASE("overlap_weight 0 always uses the own law") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const Scene s = sample_scene(sparse, &dense, grid, seed, "img");
      CHECK(s.gt_count < 40);  // dense law would put it near 120
      CHECK(s.domain_id == 0);
    }
  }

  SUBCASE("overlap_weight 1 always uses the partner law, label unchanged") {
    DomainSpec spec = sparse;
    spec.overlap_weight = 1.0;
    spec.partner_id = 1;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const Scene s = sample_scene(spec, &dense, grid, seed, "img");
      CHECK(s.gt_count > 40);
      CHECK(s.domain_id == 0);
    }
  }

  SUBCASE("the input grid is the point raster") {
    const Scene s = sample_scene(dense, nullptr, grid, 9, "img");
    CHECK(count(s.input_grid.data) == doctest::Approx(s.points.size()).epsilon(1e-12));
    CHECK(std::fabs(count(s.gt_density) - s.gt_count) <= 1e-6);
    CHECK(s.gt_count == static_cast<int>(s.points.size()));
  }

  SUBCASE("overlap without a partner is rejected") {
    DomainSpec spec = sparse;
    spec.overlap_weight = 0.5;
    spec.partner_id = 1;
    CHECK_THROWS_AS(sample_scene(spec, nullptr, grid, 1, "img"), ConfigError);
  }
}

TEST_CASE("empirical count distribution tracks the log-normal law") {
  GridSpec grid{16, 16, 5, 1.0};
  DomainSpec spec;
  spec.domain_id = 0;
  spec.count_log_mean = std::log(20.0);
  spec.count_log_std = 0.3;

  const int n = 600;
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    acc += sample_scene(spec, nullptr, grid, derive_seed(77, "dist", i), "img")
               .gt_count;
  const double mean = acc / n;
  const double expect = std::exp(spec.count_log_mean +
                                 0.5 * spec.count_log_std * spec.count_log_std);
  const double sd = expect * std::sqrt(std::exp(spec.count_log_std *
                                                spec.count_log_std) - 1.0);
  const double tol = 3.0 * sd / std::sqrt(static_cast<double>(n)) + 0.5;
  CHECK(std::fabs(mean - expect) <= tol);
}

TEST_CASE("benchmark build and load") {
  const fs::path tmp = fs::temp_directory_path() / "mdk_synth_test";
  fs::remove_all(tmp);

  SUBCASE("layout, determinism, and reload") {
    build_benchmark(small_spec(123), (tmp / "a").string());
    build_benchmark(small_spec(123), (tmp / "b").string());
    build_benchmark(small_spec(999), (tmp / "c").string());

    for (int d = 0; d < 3; ++d) {
      CHECK(fs::exists(tmp / "a" / ("domain_" + std::to_string(d)) / "train"));
      CHECK(fs::exists(tmp / "a" / ("domain_" + std::to_string(d)) / "test"));
    }

    // Same seed: byte-identical; different seed: same layout, new content.
    std::size_t files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(tmp / "a")) {
      if (!entry.is_regular_file()) continue;
      ++files;
      const fs::path rel = fs::relative(entry.path(), tmp / "a");
      CHECK(slurp(entry.path()) == slurp(tmp / "b" / rel));
    }
    CHECK(files == 1 + 20 + 8 + 8 + 5 + 5 + 5);

    bool any_diff = false;
    for (const auto& entry : fs::recursive_directory_iterator(tmp / "a")) {
      if (!entry.is_regular_file()) continue;
      const fs::path rel = fs::relative(entry.path(), tmp / "a");
      if (rel == "manifest.json") continue;
      if (slurp(entry.path()) != slurp(tmp / "c" / rel)) any_diff = true;
    }
    CHECK(any_diff);

    const Dataset ds = load_dataset((tmp / "a").string());
    CHECK(ds.num_domains == 3);
    CHECK(ds.train.size() == 36);
    CHECK(ds.test.size() == 15);
    for (const Scene& s : ds.train) {
      CHECK(std::fabs(::mdk::count(s.gt_density) - s.gt_count) <= 1e-6);
      CHECK(s.input_grid.B == 1);
      CHECK(s.input_grid.H == 16);
    }
    // Scene regeneration from the stored points matches the sampler's output.
    const BenchmarkSpec spec = small_spec(123);
    const Scene regen = sample_scene(
        spec.domains[0], &spec.domains[1], spec.grid,
        derive_seed(123, "scene.train", 0, 0), "d0_train_00000");
    CHECK(regen.points == ds.train.front().points);
  }

  SUBCASE("single-domain dataset") {
    BenchmarkSpec spec;
    spec.grid = GridSpec{8, 8, 3, 0.8};
    DomainSpec only;
    only.domain_id = 0;
    only.count_log_mean = std::log(5.0);
    only.count_log_std = 0.2;
    spec.domains = {only};
    spec.train_sizes = {6};
    spec.test_sizes = {3};
    spec.seed = 5;
    build_benchmark(spec, (tmp / "single").string());
    const Dataset ds = load_dataset((tmp / "single").string());
    CHECK(ds.num_domains == 1);
    CHECK(ds.train.size() == 6);
  }

  SUBCASE("missing dataset raises an actionable error") {
    CHECK_THROWS_AS(load_dataset((tmp / "missing").string()), ConfigError);
  }

  fs::remove_all(tmp);
}
