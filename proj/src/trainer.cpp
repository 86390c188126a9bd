#include "mdk/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>

#include "ioutil.hpp"
#include "mdk/ops.hpp"
#include "mdk/rng.hpp"

namespace fs = std::filesystem;

namespace mdk {

ScheduleConfig TrainConfig::schedule() const {
  return ScheduleConfig{kappa, tau, epochs, rho_max};
}

void TrainConfig::validate() const {
  schedule().validate();
  if (batch_size < 2)
    throw ConfigError("TrainConfig: batch_size must be >= 2 (batch statistics)");
  if (learning_rate <= 0.0) throw ConfigError("TrainConfig: learning_rate <= 0");
  if (eval_every < 1) throw ConfigError("TrainConfig: eval_every must be >= 1");
  if (lambda < 0.0) throw ConfigError("TrainConfig: lambda must be >= 0");
  if (C < 1 || d < 1) throw ConfigError("TrainConfig: C and d must be >= 1");
}

bool TrainConfig::same_semantics(const TrainConfig& o) const {
  return variant == o.variant && epochs == o.epochs && kappa == o.kappa &&
         tau == o.tau && rho_max == o.rho_max && lambda == o.lambda &&
         batch_size == o.batch_size && learning_rate == o.learning_rate &&
         seed == o.seed && eval_every == o.eval_every && C == o.C && d == o.d;
}

TrainerSession make_session(const TrainConfig& cfg, int num_domains) {
  cfg.validate();
  if (num_domains < 1) throw ConfigError("make_session: no domains");
  TrainerSession s;
  s.cfg = cfg;
  s.num_domains = num_domains;
  ModelConfig mc{cfg.C, cfg.d, num_domains, cfg.variant};
  s.params = ModelParams::init(mc, cfg.seed);
  s.next_epoch = 0;
  return s;
}

namespace {

void init_label_states(TrainerSession& session, const Dataset& data) {
  if (session.cfg.variant != Variant::kVcl || !session.labels.empty()) return;
  for (const Scene& scene : data.train)
    session.labels.emplace(
        scene.image_id,
        LabelState::make(scene.image_id, scene.domain_id, session.num_domains));
}

struct Batch {
  Tensor4 input;
  Tensor4 gt;
  std::vector<int> domains;
  std::vector<const Scene*> scenes;
};

Batch assemble_batch(const Dataset& data, const std::vector<int>& order,
                     std::size_t begin, std::size_t end) {
  const int B = static_cast<int>(end - begin);
  const GridSpec& g = data.grid;
  Batch batch{Tensor4(B, 1, g.H, g.W), Tensor4(B, 1, g.H, g.W), {}, {}};
  for (int b = 0; b < B; ++b) {
    const Scene& scene = data.train[order[begin + b]];
    std::copy(scene.input_grid.data.begin(), scene.input_grid.data.end(),
              batch.input.plane(b, 0));
    std::copy(scene.gt_density.begin(), scene.gt_density.end(),
              batch.gt.plane(b, 0));
    batch.domains.push_back(scene.domain_id);
    batch.scenes.push_back(&scene);
  }
  return batch;
}

void write_label_trace_row(std::ostream& out, int epoch, const LabelState& st,
                           const VirtualLabel& target,
                           const std::vector<double>& raw) {
  out << epoch << ',' << st.image_id;
  for (double v : target) out << ',' << fmt_double(v);
  for (double v : raw) out << ',' << fmt_double(v);
  out << '\n';
}

}  // namespace

EpochReport train_epoch(TrainerSession& session, const Dataset& data, int epoch,
                        std::ostream* label_trace) {
  const TrainConfig& cfg = session.cfg;
  if (data.train.empty()) throw ConfigError("train_epoch: empty training set");
  init_label_states(session, data);
  const ScheduleConfig sched = cfg.schedule();
  const int M = session.num_domains;
  const int V = virtual_class_count(M);

  std::vector<int> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
  shuffle_in_place(order, shuffle_rng);

  EpochReport report;
  report.epoch = epoch;
  report.alpha = alpha_schedule(epoch, sched);
  std::vector<double> batch_l_den;

  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.learning_rate;

  for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
    const std::size_t end =
        std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
    if (end - begin < 2) break;  // batch statistics need at least two samples
    Batch batch = assemble_batch(data, order, begin, end);
    const int B = batch.input.B;

    session.params.zero_grads();
    ForwardResult fwd =
        forward(batch.input, session.params, session.state, Mode::kTrain, true);

    Tensor4 grad_y;
    const double l_den = density_loss(fwd.y_hat, batch.gt, &grad_y);

    LossBreakdown loss;
    Matrix grad_logits;
    bool have_cls = false;

    if (cfg.variant == Variant::kBase) {
      loss = combined_loss(Variant::kBase, l_den, std::nullopt, cfg.lambda);
    } else if (cfg.variant == Variant::kGcl) {
      const double l_cls = gt_class_loss(fwd.logits, batch.domains, &grad_logits);
      loss = combined_loss(Variant::kGcl, l_den, l_cls, cfg.lambda);
      have_cls = true;
    } else {
      std::vector<VirtualLabel> targets;
      targets.reserve(B);
      for (const Scene* scene : batch.scenes)
        targets.push_back(
            label_for_epoch(session.labels.at(scene->image_id), epoch, sched));
      const double l_cls = virtual_class_loss(fwd.logits, targets, &grad_logits);
      loss = combined_loss(Variant::kVcl, l_den, l_cls, cfg.lambda);
      have_cls = true;

      // Predicted virtual labels: corrected, logged, and (once fusion is
      // active) accumulated into each image's window.
      const Matrix v_hat = predict_virtual(fwd.logits);
      for (int b = 0; b < B; ++b) {
        const Scene* scene = batch.scenes[b];
        LabelState& st = session.labels.at(scene->image_id);
        std::vector<double> raw(v_hat.row(b), v_hat.row(b) + V);
        if (epoch >= cfg.kappa)
          observe(st, correct_prediction(raw, scene->domain_id, M));
        if (label_trace)
          write_label_trace_row(*label_trace, epoch, st, targets[b], raw);
      }
    }

    if (!std::isfinite(loss.total))
      throw TrainAbort("train_epoch: non-finite loss at epoch " +
                       std::to_string(epoch) + ", batch offset " +
                       std::to_string(begin));

    if (have_cls && cfg.lambda != 1.0)
      for (double& g : grad_logits.data) g *= cfg.lambda;
    backward(session.params, fwd, grad_y, have_cls ? &grad_logits : nullptr);

    session.state.update_running(kBnMomentum);
    optimizer_step(session.params, session.adam, adam_cfg);

    report.l_den += loss.l_den;
    report.l_cls += loss.l_cls;
    report.total += loss.total;
    batch_l_den.push_back(loss.l_den);
    ++report.batches;
  }

  if (report.batches > 0) {
    report.l_den /= report.batches;
    report.l_cls /= report.batches;
    report.total /= report.batches;
    std::sort(batch_l_den.begin(), batch_l_den.end());
    const std::size_t n = batch_l_den.size();
    report.l_den_median = n % 2 == 1
                              ? batch_l_den[n / 2]
                              : 0.5 * (batch_l_den[n / 2 - 1] + batch_l_den[n / 2]);
  }

  // Window boundary: epochs [kappa + (k-1)tau, kappa + k*tau) close together.
  if (cfg.variant == Variant::kVcl && epoch >= cfg.kappa &&
      (epoch + 1 - cfg.kappa) % cfg.tau == 0) {
    const double alpha = alpha_schedule(epoch, sched);
    for (auto& [id, st] : session.labels) {
      finalize_window(st, alpha);
      ++report.windows_finalized;
    }
  }
  if (cfg.variant == Variant::kVcl && !session.labels.empty()) {
    double acc = 0.0;
    for (const auto& [id, st] : session.labels)
      acc += *std::max_element(st.current_target.begin(), st.current_target.end());
    report.mean_target_peak = acc / static_cast<double>(session.labels.size());
  }

  session.next_epoch = epoch + 1;
  return report;
}

std::vector<DomainMetrics> evaluate(TrainerSession& session, const Dataset& data) {
  if (data.test.empty()) throw ConfigError("evaluate: empty test set");
  if (!session.state.isbn.running_init)
    throw TrainAbort("evaluate: running statistics uninitialized (train first)");

  std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_domain;
  const GridSpec& g = data.grid;
  const std::size_t chunk = static_cast<std::size_t>(session.cfg.batch_size);

  for (std::size_t begin = 0; begin < data.test.size(); begin += chunk) {
    const std::size_t end = std::min(data.test.size(), begin + chunk);
    const int B = static_cast<int>(end - begin);
    Tensor4 input(B, 1, g.H, g.W);
    for (int b = 0; b < B; ++b) {
      const Scene& scene = data.test[begin + b];
      std::copy(scene.input_grid.data.begin(), scene.input_grid.data.end(),
                input.plane(b, 0));
    }
    ForwardResult fwd =
        forward(input, session.params, session.state, Mode::kEval, false);
    for (int b = 0; b < B; ++b) {
      const Scene& scene = data.test[begin + b];
      double pred = 0.0;
      const double* yp = fwd.y_hat.plane(b, 0);
      for (int s = 0; s < g.H * g.W; ++s) pred += yp[s];
      auto& [preds, gts] = by_domain[scene.domain_id];
      preds.push_back(pred);
      gts.push_back(static_cast<double>(scene.gt_count));
    }
  }

  std::vector<DomainMetrics> out;
  for (const auto& [domain, lists] : by_domain) {
    const auto [mae, rmse] = mae_rmse(lists.first, lists.second);
    out.push_back({domain, mae, rmse, static_cast<int>(lists.first.size())});
  }
  return out;
}

namespace {

std::string ckpt_name(int epochs_done) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "ckpt_%06d.json", epochs_done);
  return buf;
}

void append_metrics_rows(std::ostream& out, const TrainConfig& cfg,
                         const EpochReport& report,
                         const std::vector<DomainMetrics>& metrics) {
  for (const DomainMetrics& m : metrics) {
    out << report.epoch << ',' << variant_name(cfg.variant) << ',' << m.domain_id
        << ',' << fmt_double(m.mae) << ',' << fmt_double(m.rmse) << ','
        << fmt_double(report.l_den) << ',' << fmt_double(report.l_cls) << ','
        << fmt_double(report.alpha) << '\n';
  }
}

void write_gamma_csv(const std::string& path, TrainerSession& session,
                     const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "image_id,domain_id";
  for (int c = 0; c < session.cfg.C; ++c) out << ",gamma_" << c;
  out << '\n';
  const GridSpec& g = data.grid;
  const std::size_t chunk = static_cast<std::size_t>(session.cfg.batch_size);
  for (std::size_t begin = 0; begin < data.test.size(); begin += chunk) {
    const std::size_t end = std::min(data.test.size(), begin + chunk);
    const int B = static_cast<int>(end - begin);
    Tensor4 input(B, 1, g.H, g.W);
    for (int b = 0; b < B; ++b)
      std::copy(data.test[begin + b].input_grid.data.begin(),
                data.test[begin + b].input_grid.data.end(), input.plane(b, 0));
    ForwardResult fwd =
        forward(input, session.params, session.state, Mode::kEval, false);
    for (int b = 0; b < B; ++b) {
      const Scene& scene = data.test[begin + b];
      out << scene.image_id << ',' << scene.domain_id;
      for (int c = 0; c < session.cfg.C; ++c)
        out << ',' << fmt_double(fwd.affine.gamma.at(b, c));
      out << '\n';
    }
  }
}

}  // namespace

RunResult run_experiment(const TrainConfig& cfg, const std::string& resume_from,
                         std::optional<int> stop_after) {
  cfg.validate();
  if (cfg.checkpoint_path.empty())
    throw ConfigError("run_experiment: checkpoint_path (run directory) not set");
  Dataset data = load_dataset(cfg.dataset_path);

  TrainerSession session;
  const bool resuming = !resume_from.empty();
  if (resuming) {
    session = load_checkpoint(resume_from);
    if (!session.cfg.same_semantics(cfg))
      throw ConfigError("run_experiment: resume config differs from checkpoint");
    if (session.num_domains != data.num_domains)
      throw ConfigError("run_experiment: dataset domain count changed");
    session.cfg = cfg;  // restore filesystem paths
  } else {
    session = make_session(cfg, data.num_domains);
  }
  init_label_states(session, data);

  const fs::path run_dir(cfg.checkpoint_path);
  fs::create_directories(run_dir);
  const std::string metrics_path = (run_dir / "metrics.csv").string();
  const std::string labels_path = (run_dir / "labels.csv").string();
  const std::string gamma_path = (run_dir / "gamma.csv").string();

  const auto mode = resuming ? std::ios::binary | std::ios::app
                             : std::ios::binary | std::ios::trunc;
  std::ofstream metrics(metrics_path, mode);
  if (!metrics) throw IoError("cannot write " + metrics_path);
  if (!resuming)
    metrics << "epoch,variant,domain,mae,rmse,l_den,l_cls,alpha\n";

  std::ofstream labels;
  if (cfg.variant == Variant::kVcl) {
    labels.open(labels_path, mode);
    if (!labels) throw IoError("cannot write " + labels_path);
    if (!resuming) {
      const int V = virtual_class_count(data.num_domains);
      labels << "epoch,image_id";
      for (int i = 0; i < V; ++i) labels << ",target_" << i;
      for (int i = 0; i < V; ++i) labels << ",raw_" << i;
      labels << '\n';
    }
  }

  const int last_epoch = stop_after.value_or(cfg.epochs);
  if (last_epoch > cfg.epochs)
    throw ConfigError("run_experiment: stop_after beyond total epochs");
  if (stop_after && *stop_after % cfg.eval_every != 0)
    throw ConfigError("run_experiment: stop_after must align with eval_every");

  RunResult result;
  result.run_dir = run_dir.string();
  result.metrics_csv = metrics_path;
  if (cfg.variant == Variant::kVcl) result.labels_csv = labels_path;

  for (int e = session.next_epoch; e < last_epoch; ++e) {
    const EpochReport report = train_epoch(
        session, data, e, cfg.variant == Variant::kVcl ? &labels : nullptr);
    result.epoch_reports.push_back(report);
    const bool boundary = (e + 1) % cfg.eval_every == 0 || e + 1 == cfg.epochs;
    if (boundary) {
      result.final_metrics = evaluate(session, data);
      append_metrics_rows(metrics, cfg, report, result.final_metrics);
      metrics.flush();
      if (labels.is_open()) labels.flush();
      const std::string ckpt = (run_dir / ckpt_name(e + 1)).string();
      save_checkpoint(ckpt, session);
      result.final_checkpoint = ckpt;
    }
  }

  if (session.next_epoch >= cfg.epochs) {
    write_gamma_csv(gamma_path, session, data);
    result.gamma_csv = gamma_path;
  }
  return result;
}

}  // namespace mdk
