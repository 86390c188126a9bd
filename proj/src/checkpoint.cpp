#include <cstring>
#include <fstream>

#include <json.hpp>

#include "jsonio.hpp"
#include "mdk/trainer.hpp"

using nlohmann::json;

namespace mdk {

namespace {

constexpr int kFormatVersion = 1;

const char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string b64_encode(const std::vector<double>& values) {
  const unsigned char* bytes =
      reinterpret_cast<const unsigned char*>(values.data());
  const std::size_t n = values.size() * sizeof(double);
  std::string out;
  out.reserve((n + 2) / 3 * 4);
  for (std::size_t i = 0; i < n; i += 3) {
    unsigned int chunk = bytes[i] << 16;
    const std::size_t remain = n - i;
    if (remain > 1) chunk |= bytes[i + 1] << 8;
    if (remain > 2) chunk |= bytes[i + 2];
    out.push_back(kB64Alphabet[(chunk >> 18) & 63]);
    out.push_back(kB64Alphabet[(chunk >> 12) & 63]);
    out.push_back(remain > 1 ? kB64Alphabet[(chunk >> 6) & 63] : '=');
    out.push_back(remain > 2 ? kB64Alphabet[chunk & 63] : '=');
  }
  return out;
}

int b64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  throw IoError("checkpoint: invalid base64 character");
}

std::vector<double> b64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw IoError("checkpoint: truncated base64 payload");
  std::vector<unsigned char> bytes;
  bytes.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int pad = 0;
    if (text[i + 2] == '=') {
      if (text[i + 3] != '=') throw IoError("checkpoint: malformed base64 padding");
      pad = 2;
    } else if (text[i + 3] == '=') {
      pad = 1;
    }
    if (pad > 0 && i + 4 != text.size())
      throw IoError("checkpoint: base64 padding before end of payload");
    unsigned int chunk = (b64_value(text[i]) << 18) | (b64_value(text[i + 1]) << 12);
    if (pad < 2) chunk |= b64_value(text[i + 2]) << 6;
    if (pad < 1) chunk |= b64_value(text[i + 3]);
    bytes.push_back((chunk >> 16) & 0xFF);
    if (pad < 2) bytes.push_back((chunk >> 8) & 0xFF);
    if (pad < 1) bytes.push_back(chunk & 0xFF);
  }
  if (bytes.size() % sizeof(double) != 0)
    throw IoError("checkpoint: payload not a whole number of doubles");
  std::vector<double> values(bytes.size() / sizeof(double));
  std::memcpy(values.data(), bytes.data(), bytes.size());
  return values;
}

json stats_to_json(const BatchStats& st) {
  json j;
  j["mu"] = b64_encode(st.mu);
  j["sigma"] = b64_encode(st.sigma);
  j["running_mu"] = b64_encode(st.running_mu);
  j["running_sigma"] = b64_encode(st.running_sigma);
  j["running_init"] = st.running_init;
  return j;
}

BatchStats stats_from_json(const json& j, const std::string& where) {
  expect_keys(j, {"mu", "sigma", "running_mu", "running_sigma", "running_init"},
              {}, where);
  BatchStats st;
  st.mu = b64_decode(get_as<std::string>(j, "mu", where));
  st.sigma = b64_decode(get_as<std::string>(j, "sigma", where));
  st.running_mu = b64_decode(get_as<std::string>(j, "running_mu", where));
  st.running_sigma = b64_decode(get_as<std::string>(j, "running_sigma", where));
  st.running_init = get_as<bool>(j, "running_init", where);
  return st;
}

json config_to_json(const TrainConfig& cfg) {
  json j;
  j["variant"] = variant_name(cfg.variant);
  j["epochs"] = cfg.epochs;
  j["kappa"] = cfg.kappa;
  j["tau"] = cfg.tau;
  j["rho_max"] = cfg.rho_max;
  j["lambda"] = cfg.lambda;
  j["batch_size"] = cfg.batch_size;
  j["learning_rate"] = cfg.learning_rate;
  j["seed"] = std::to_string(cfg.seed);
  j["eval_every"] = cfg.eval_every;
  j["C"] = cfg.C;
  j["d"] = cfg.d;
  return j;
}

TrainConfig config_from_json(const json& j) {
  const std::string where = "checkpoint.config";
  expect_keys(j,
              {"variant", "epochs", "kappa", "tau", "rho_max", "lambda",
               "batch_size", "learning_rate", "seed", "eval_every", "C", "d"},
              {}, where);
  TrainConfig cfg;
  cfg.variant = variant_from_name(get_as<std::string>(j, "variant", where));
  cfg.epochs = get_as<int>(j, "epochs", where);
  cfg.kappa = get_as<int>(j, "kappa", where);
  cfg.tau = get_as<int>(j, "tau", where);
  cfg.rho_max = get_as<double>(j, "rho_max", where);
  cfg.lambda = get_as<double>(j, "lambda", where);
  cfg.batch_size = get_as<int>(j, "batch_size", where);
  cfg.learning_rate = get_as<double>(j, "learning_rate", where);
  cfg.seed = std::stoull(get_as<std::string>(j, "seed", where));
  cfg.eval_every = get_as<int>(j, "eval_every", where);
  cfg.C = get_as<int>(j, "C", where);
  cfg.d = get_as<int>(j, "d", where);
  return cfg;
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainerSession& session) {
  json j;
  j["format_version"] = kFormatVersion;
  j["config"] = config_to_json(session.cfg);
  j["num_domains"] = session.num_domains;
  j["epoch"] = session.next_epoch;
  // All random streams re-derive from the root seed and epoch counters, so the
  // seed is the entire RNG state.
  j["rng"] = json{{"seed_root", std::to_string(session.cfg.seed)}};

  json params = json::object();
  session.params.for_each_slot([&](const ParamSlot& slot) {
    params[slot.name] = json{{"rows", slot.value.rows},
                             {"cols", slot.value.cols},
                             {"data", b64_encode(slot.value.data)}};
  });
  j["params"] = params;

  json adam;
  adam["t"] = session.adam.t;
  json am = json::object(), av = json::object();
  for (const auto& [name, m] : session.adam.m) am[name] = b64_encode(m);
  for (const auto& [name, v] : session.adam.v) av[name] = b64_encode(v);
  adam["m"] = am;
  adam["v"] = av;
  j["adam"] = adam;

  json running;
  running["bb_bn"] = stats_to_json(session.state.bb_bn);
  running["enc_bn"] = stats_to_json(session.state.enc_bn);
  running["isbn"] = stats_to_json(session.state.isbn);
  j["running"] = running;

  json labels = json::object();
  for (const auto& [id, st] : session.labels) {
    labels[id] = json{{"v0", b64_encode(st.v0)},
                      {"current", b64_encode(st.current_target)},
                      {"acc", b64_encode(st.accumulator)},
                      {"obs", st.obs_count}};
  }
  j["labels"] = labels;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out << j.dump(1) << '\n';
  if (!out) throw IoError("checkpoint write failed: " + path);
}

TrainerSession load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw TrainAbort("corrupt checkpoint " + path + ": " + e.what());
  }
  expect_keys(j,
              {"format_version", "config", "num_domains", "epoch", "rng",
               "params", "adam", "running", "labels"},
              {}, "checkpoint");
  const int version = get_as<int>(j, "format_version", "checkpoint");
  if (version != kFormatVersion)
    throw TrainAbort("checkpoint format version " + std::to_string(version) +
                     " unsupported (expected " + std::to_string(kFormatVersion) +
                     ")");

  TrainConfig cfg = config_from_json(j.at("config"));
  const std::uint64_t seed_root =
      std::stoull(get_as<std::string>(j.at("rng"), "seed_root", "checkpoint.rng"));
  if (seed_root != cfg.seed)
    throw TrainAbort("checkpoint rng seed does not match config seed");

  TrainerSession session = make_session(cfg, get_as<int>(j, "num_domains", "checkpoint"));
  session.next_epoch = get_as<int>(j, "epoch", "checkpoint");

  const json& params = j.at("params");
  session.params.for_each_slot([&](ParamSlot& slot) {
    if (!params.contains(slot.name))
      throw TrainAbort("checkpoint missing parameter " + slot.name);
    const json& pj = params.at(slot.name);
    expect_keys(pj, {"rows", "cols", "data"}, {}, slot.name);
    if (get_as<int>(pj, "rows", slot.name) != slot.value.rows ||
        get_as<int>(pj, "cols", slot.name) != slot.value.cols)
      throw TrainAbort("checkpoint shape mismatch for " + slot.name);
    std::vector<double> data = b64_decode(get_as<std::string>(pj, "data", slot.name));
    if (data.size() != slot.value.data.size())
      throw TrainAbort("checkpoint payload size mismatch for " + slot.name);
    slot.value.data = std::move(data);
  });

  const json& adam = j.at("adam");
  expect_keys(adam, {"t", "m", "v"}, {}, "checkpoint.adam");
  session.adam.t = get_as<long long>(adam, "t", "checkpoint.adam");
  for (const auto& [name, payload] : adam.at("m").items())
    session.adam.m[name] = b64_decode(payload.get<std::string>());
  for (const auto& [name, payload] : adam.at("v").items())
    session.adam.v[name] = b64_decode(payload.get<std::string>());

  const json& running = j.at("running");
  expect_keys(running, {"bb_bn", "enc_bn", "isbn"}, {}, "checkpoint.running");
  session.state.bb_bn = stats_from_json(running.at("bb_bn"), "checkpoint.running.bb_bn");
  session.state.enc_bn = stats_from_json(running.at("enc_bn"), "checkpoint.running.enc_bn");
  session.state.isbn = stats_from_json(running.at("isbn"), "checkpoint.running.isbn");

  for (const auto& [id, lj] : j.at("labels").items()) {
    expect_keys(lj, {"v0", "current", "acc", "obs"}, {}, "checkpoint.labels");
    LabelState st;
    st.image_id = id;
    st.v0 = b64_decode(get_as<std::string>(lj, "v0", id));
    st.current_target = b64_decode(get_as<std::string>(lj, "current", id));
    st.accumulator = b64_decode(get_as<std::string>(lj, "acc", id));
    st.obs_count = get_as<int>(lj, "obs", id);
    if (st.v0.size() != st.current_target.size() ||
        st.v0.size() != st.accumulator.size())
      throw TrainAbort("checkpoint label state size mismatch for " + id);
    session.labels.emplace(id, std::move(st));
  }
  return session;
}

}  // namespace mdk
