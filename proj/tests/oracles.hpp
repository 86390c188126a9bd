#pragma once

// Independent oracles the test suites check the implementation against.
// Everything here is written from the operation definitions alone and must
// stay decoupled from the library code paths it verifies.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mdk/dvc.hpp"
#include "mdk/isbn.hpp"
#include "mdk/rng.hpp"
#include "mdk/tensor.hpp"

namespace oracles {

// Naive triple-loop per-site channel mixing.
inline mdk::Tensor4 site_linear_naive(const mdk::Tensor4& x, const mdk::Matrix& W,
                                      const mdk::Matrix& bias) {
  mdk::Tensor4 out(x.B, W.rows, x.H, x.W);
  for (int b = 0; b < x.B; ++b)
    for (int o = 0; o < W.rows; ++o)
      for (int h = 0; h < x.H; ++h)
        for (int w = 0; w < x.W; ++w) {
          double acc = bias.at(0, o);
          for (int i = 0; i < x.C; ++i) acc += W.at(o, i) * x.at(b, i, h, w);
          out.at(b, o, h, w) = acc;
        }
  return out;
}

inline mdk::Matrix fc_naive(const mdk::Matrix& h, const mdk::Matrix& W,
                            const mdk::Matrix& bias) {
  mdk::Matrix out(h.rows, W.rows);
  for (int r = 0; r < h.rows; ++r)
    for (int o = 0; o < W.rows; ++o) {
      double acc = bias.at(0, o);
      for (int i = 0; i < h.cols; ++i) acc += W.at(o, i) * h.at(r, i);
      out.at(r, o) = acc;
    }
  return out;
}

// Two-pass mean/std per channel, straight from the definition.
inline void stats_two_pass(const mdk::Tensor4& x, double eps,
                           std::vector<double>& mu, std::vector<double>& sigma) {
  const double n = static_cast<double>(x.B) * x.H * x.W;
  mu.assign(x.C, 0.0);
  sigma.assign(x.C, 0.0);
  for (int c = 0; c < x.C; ++c) {
    double acc = 0.0;
    for (int b = 0; b < x.B; ++b)
      for (int h = 0; h < x.H; ++h)
        for (int w = 0; w < x.W; ++w) acc += x.at(b, c, h, w);
    mu[c] = acc / n;
    double var = 0.0;
    for (int b = 0; b < x.B; ++b)
      for (int h = 0; h < x.H; ++h)
        for (int w = 0; w < x.W; ++w) {
          const double d = x.at(b, c, h, w) - mu[c];
          var += d * d;
        }
    sigma[c] = std::sqrt(var / n + eps);
  }
}

// Unshifted softmax: exp(z_i) / sum exp(z_j). Valid for moderate inputs; a
// different algebraic route than the shift-stable implementation.
inline std::vector<double> softmax_direct(const std::vector<double>& z) {
  std::vector<double> out(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i]);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

// Exhaustive lexicographic pair enumeration: index of {s, t} among all
// unordered pairs of [0, M).
inline int pair_offset_by_enumeration(int s, int t, int M) {
  const int lo = std::min(s, t), hi = std::max(s, t);
  int offset = 0;
  for (int a = 0; a < M; ++a)
    for (int b = a + 1; b < M; ++b) {
      if (a == lo && b == hi) return offset;
      ++offset;
    }
  return -1;
}

// Label-correction re-derivation: walk all unordered pairs in layout order and
// add the misassigned core confidence wherever the pair touches t.
inline std::vector<double> correct_bruteforce(const std::vector<double>& v_hat,
                                              int t, int M) {
  std::vector<double> out = v_hat;
  int idx = M;
  for (int a = 0; a < M; ++a)
    for (int b = a + 1; b < M; ++b) {
      if (a == t) out[idx] = v_hat[idx] + v_hat[b];
      if (b == t) out[idx] = v_hat[idx] + v_hat[a];
      ++idx;
    }
  return out;
}

// ---- label-trace replay -----------------------------------------------------

struct LabelTraceRow {
  int epoch = 0;
  std::string image_id;
  std::vector<double> target;
  std::vector<double> raw;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

inline std::vector<LabelTraceRow> read_label_trace(const std::string& path, int V) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open label trace " + path);
  std::vector<LabelTraceRow> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != 2 + 2 * V)
      throw std::runtime_error("label trace row has wrong arity");
    LabelTraceRow row;
    row.epoch = std::stoi(fields[0]);
    row.image_id = fields[1];
    for (int i = 0; i < V; ++i)
      row.target.push_back(std::strtod(fields[2 + i].c_str(), nullptr));
    for (int i = 0; i < V; ++i)
      row.raw.push_back(std::strtod(fields[2 + V + i].c_str(), nullptr));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Shift-stable softmax, re-stated here for the replay path.
inline std::vector<double> replay_softmax(const std::vector<double>& z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  std::vector<double> out(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - zmax);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

struct ReplayResult {
  std::size_t rows_checked = 0;
  std::size_t target_mismatches = 0;
  double max_target_sum_err = 0.0;
};

// Re-derives every per-epoch target from the logged raw predictions alone:
// correction, window accumulation, mean, fusion with v0, softmax. Targets in
// the trace must match bit for bit.
inline ReplayResult replay_label_trace(const std::vector<LabelTraceRow>& rows,
                                       const std::map<std::string, int>& domains,
                                       int M, int kappa, int tau, int iota,
                                       double rho_max) {
  const int V = M + M * (M - 1) / 2;
  // (epoch, image) -> row; epochs must be replayed in order per image.
  std::map<std::string, std::map<int, const LabelTraceRow*>> by_image;
  for (const auto& row : rows) by_image[row.image_id][row.epoch] = &row;

  ReplayResult result;
  for (const auto& [image_id, per_epoch] : by_image) {
    const int domain = domains.at(image_id);
    std::vector<double> v0(V, 0.0);
    v0[domain] = 1.0;
    std::vector<double> current = v0;
    std::vector<double> ac(V, 0.0);
    int obs = 0;

    for (int e = 0; e < iota; ++e) {
      const auto it = per_epoch.find(e);
      if (it == per_epoch.end()) continue;
      const LabelTraceRow& row = *it->second;

      const std::vector<double>& expected = e < kappa ? v0 : current;
      for (int i = 0; i < V; ++i)
        if (row.target[i] != expected[i]) {
          ++result.target_mismatches;
          break;
        }
      double sum = 0.0;
      for (double v : row.target) sum += v;
      result.max_target_sum_err =
          std::max(result.max_target_sum_err, std::fabs(sum - 1.0));
      ++result.rows_checked;

      if (e >= kappa) {
        const std::vector<double> corrected =
            correct_bruteforce(row.raw, domain, M);
        for (int i = 0; i < V; ++i) ac[i] += corrected[i];
        ++obs;
        if ((e + 1 - kappa) % tau == 0) {
          const double alpha =
              e <= kappa ? 0.0
                         : rho_max * std::min(1.0, static_cast<double>(e - kappa) /
                                                       (iota - kappa));
          std::vector<double> z(V);
          const double denom = std::max(obs, 1);
          for (int i = 0; i < V; ++i)
            z[i] = (1.0 - alpha) * v0[i] + alpha * (ac[i] / denom);
          current = replay_softmax(z);
          std::fill(ac.begin(), ac.end(), 0.0);
          obs = 0;
        }
      }
    }
  }
  return result;
}

// Uniform tensor/matrix fills used across the suites.
inline void fill_uniform(mdk::Tensor4& t, mdk::Rng& rng, double lo = -1.0,
                         double hi = 1.0) {
  for (double& v : t.data) v = rng.uniform(lo, hi);
}
inline void fill_uniform(mdk::Matrix& m, mdk::Rng& rng, double lo = -1.0,
                         double hi = 1.0) {
  for (double& v : m.data) v = rng.uniform(lo, hi);
}

}  // namespace oracles
