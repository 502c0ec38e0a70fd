#include "staykit/nn/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace staykit::nn {

using nlohmann::json;

SslTargets ssl_targets(const traj::LocationPoint& next, const traj::LocationPoint& last) {
  const double dt = next.t - last.t;
  if (dt <= 0.0) throw input_error("ssl_targets: non-positive time step");
  const double dx = next.x - last.x;
  const double dy = next.y - last.y;
  SslTargets t;
  t.v_next = std::hypot(dx, dy) / dt;
  const double angle = std::atan2(dy, dx);
  t.sin_next = std::sin(angle);
  t.cos_next = std::cos(angle);
  return t;
}

StayModel StayModel::create(const EncoderConfig& config, std::size_t num_modes) {
  StayModel m;
  m.config = config;
  m.num_modes = num_modes;
  m.encoder.emplace(config, m.params);
  if (num_modes == 0)
    m.stay_head = StayHead::create(m.params, config.d_model, config.seed);
  else
    m.mode_head = ModeHead::create(m.params, config.d_model, num_modes, config.seed);
  m.ssl_heads = SslHeads::create(m.params, config.d_model, config.seed);
  return m;
}

StayModel StayModel::clone() const {
  StayModel m = create(config, num_modes);
  m.params.copy_values_from(params);
  m.stats = stats;
  m.label_means = label_means;
  return m;
}

namespace {

Var window_input(const traj::SequenceWindow& window) {
  Var x = make_tensor(window.size(), 4, false);
  for (std::size_t i = 0; i < window.size(); ++i) {
    x->v[i * 4 + 0] = window.rows[i].x;
    x->v[i * 4 + 1] = window.rows[i].y;
    x->v[i * 4 + 2] = window.rows[i].dt;
    x->v[i * 4 + 3] = window.rows[i].v;
  }
  return x;
}

std::vector<double> window_mask(const traj::SequenceWindow& window) {
  std::vector<double> m(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) m[i] = window.mask[i] ? 1.0 : 0.0;
  return m;
}

}  // namespace

std::vector<double> StayModel::predict_stay(const traj::SequenceWindow& window) const {
  if (!stay_head) throw input_error("model: no stay decoder in this checkpoint");
  Tape tape;
  tape.set_grad_enabled(false);
  Rng rng(0);
  Var emb = encoder->forward(tape, window_input(window), window_mask(window), false, rng);
  Var probs = stay_head->forward(tape, emb);
  return probs->v;
}

std::vector<std::vector<double>> StayModel::predict_modes(
    const traj::SequenceWindow& window) const {
  if (!mode_head) throw input_error("model: no mode decoder in this checkpoint");
  Tape tape;
  tape.set_grad_enabled(false);
  Rng rng(0);
  Var emb = encoder->forward(tape, window_input(window), window_mask(window), false, rng);
  Var probs = mode_head->forward(tape, emb);
  std::vector<std::vector<double>> out(window.size());
  for (std::size_t i = 0; i < window.size(); ++i)
    out[i].assign(probs->v.begin() + i * mode_head->num_modes,
                  probs->v.begin() + (i + 1) * mode_head->num_modes);
  return out;
}

std::string StayModel::checkpoint_json() const {
  json doc;
  doc["format"] = "staykit-checkpoint";
  doc["version"] = 1;
  doc["encoder"] = {{"d_model", config.d_model},   {"num_layers", config.num_layers},
                    {"num_heads", config.num_heads}, {"d_ff", config.d_ff},
                    {"dropout", config.dropout},   {"seed", config.seed},
                    {"input_dim", config.input_dim}};
  doc["num_modes"] = num_modes;
  doc["stats"] = {{"mean_dt", stats.mean_dt}, {"std_dt", stats.std_dt},
                  {"mean_v", stats.mean_v},   {"std_v", stats.std_v},
                  {"std_xy", stats.std_xy}};
  doc["label_means"] = {{"c_bar", label_means.c_bar},
                        {"c_bar_weak", label_means.c_bar_weak},
                        {"class_means", label_means.class_means}};
  json params_json = json::object();
  for (const auto& [name, t] : params.all()) {
    params_json[name] = {{"rows", t->rows}, {"cols", t->cols}, {"data", t->v}};
  }
  doc["params"] = std::move(params_json);
  return doc.dump();
}

StayModel StayModel::from_checkpoint_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw input_error(std::string("checkpoint: parse failure: ") + e.what());
  }
  if (doc.value("format", "") != "staykit-checkpoint")
    throw input_error("checkpoint: unrecognized format tag");
  if (doc.value("version", 0) != 1) throw input_error("checkpoint: unsupported version");

  EncoderConfig cfg;
  const json& e = doc.at("encoder");
  cfg.d_model = e.at("d_model").get<std::size_t>();
  cfg.num_layers = e.at("num_layers").get<std::size_t>();
  cfg.num_heads = e.at("num_heads").get<std::size_t>();
  cfg.d_ff = e.at("d_ff").get<std::size_t>();
  cfg.dropout = e.at("dropout").get<double>();
  cfg.seed = e.at("seed").get<std::uint64_t>();
  cfg.input_dim = e.at("input_dim").get<std::size_t>();

  StayModel m;
  m.config = cfg;
  m.num_modes = doc.value("num_modes", 0);

  // Bind parameters first so construction attaches instead of initializing.
  for (const auto& [name, spec] : doc.at("params").items()) {
    Var t = make_tensor(spec.at("rows").get<std::size_t>(), spec.at("cols").get<std::size_t>(),
                        spec.at("data").get<std::vector<double>>(), true);
    m.params.insert(name, std::move(t));
  }
  m.encoder.emplace(cfg, m.params);
  if (m.num_modes == 0)
    m.stay_head = StayHead::create(m.params, cfg.d_model, cfg.seed);
  else
    m.mode_head = ModeHead::create(m.params, cfg.d_model, m.num_modes, cfg.seed);
  m.ssl_heads = SslHeads::create(m.params, cfg.d_model, cfg.seed);

  const json& s = doc.at("stats");
  m.stats.mean_dt = s.at("mean_dt").get<double>();
  m.stats.std_dt = s.at("std_dt").get<double>();
  m.stats.mean_v = s.at("mean_v").get<double>();
  m.stats.std_v = s.at("std_v").get<double>();
  m.stats.std_xy = s.at("std_xy").get<double>();

  const json& lm = doc.at("label_means");
  m.label_means.c_bar = lm.at("c_bar").get<double>();
  m.label_means.c_bar_weak = lm.at("c_bar_weak").get<double>();
  m.label_means.class_means = lm.at("class_means").get<std::vector<double>>();
  return m;
}

void StayModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("checkpoint: cannot write " + path);
  out << checkpoint_json();
}

StayModel StayModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("checkpoint: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_checkpoint_json(buf.str());
}

}  // namespace staykit::nn
