#pragma once

// Pipeline configuration: JSON file plus flag overrides, strict key checking,
// and a serializable effective config embedded next to every artifact.

#include "vsraug/degrade.hpp"
#include "vsraug/loss.hpp"
#include "vsraug/negmix.hpp"
#include "vsraug/noise_extract.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace vsraug {

struct PathConfig {
  std::string input;
  std::string reference;
  std::string noise_bank;
  std::string output;
};

struct NoiseConfig {
  NoiseThresholds thresholds;
  WindowSize window{64, 64};
  std::optional<WindowSize> stride;
  bool zero_mean = false;
};

struct DegradeConfig {
  ChainTemplate tmpl = ChainTemplate::defaults();
  int order = 2;
};

struct ToyTrainSettings {
  std::size_t steps = 200;
  double lr = 0.05;
  std::size_t clips = 8;
  std::size_t frames = 4;
  std::size_t hr_size = 64;
  std::size_t channels = 3;
  bool random_p = false;
  NormMode norm_mode = NormMode::mse;
};

struct GridConfig {
  std::vector<double> m_rows; // empty: one row at negmix.m
  std::size_t frame = 0;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::uint64_t video_id = 0;
  int bit_depth = 8;
  PathConfig paths;
  NoiseConfig noise;
  DegradeConfig degrade;
  NegMixConfig negmix;
  LossWeights loss;
  ToyTrainSettings train;
  GridConfig grid;
};

namespace detail {

[[noreturn]] inline void config_error(const std::string &field, const std::string &what) {
  fail(ErrorKind::config, "cli", field + ": " + what);
}

inline void reject_unknown(const nlohmann::json &obj, const std::string &where, std::initializer_list<const char *> keys) {
  if (!obj.is_object()) config_error(where.empty() ? "<root>" : where, "expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto &[k, v] : obj.items())
    if (!allowed.count(k)) config_error(where.empty() ? k : where + "." + k, "unknown key");
}

template <class T> T get_field(const nlohmann::json &obj, const char *key, const std::string &where, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception &) {
    config_error(where + "." + key, "wrong type");
  }
}

inline WindowSize parse_window(const nlohmann::json &j, const std::string &field) {
  auto count = [](const nlohmann::json &v) { return v.is_number_integer() && v.get<std::int64_t>() >= 0; };
  if (count(j)) {
    const auto v = j.get<std::size_t>();
    return {v, v};
  }
  if (j.is_array() && j.size() == 2 && count(j[0]) && count(j[1]))
    return {j[0].get<std::size_t>(), j[1].get<std::size_t>()};
  config_error(field, "expected a positive integer or [h, w]");
}

inline std::vector<ResizeMethod> parse_methods(const nlohmann::json &j, const std::string &field) {
  std::vector<ResizeMethod> out;
  if (!j.is_array()) config_error(field, "expected an array of method names");
  try {
    for (const auto &m : j) out.push_back(parse_resize_method(m.get<std::string>()));
  } catch (const Error &e) {
    config_error(field, e.what());
  } catch (const nlohmann::json::exception &) {
    config_error(field, "expected method names");
  }
  return out;
}

inline nlohmann::json methods_json(const std::vector<ResizeMethod> &ms) {
  nlohmann::json j = nlohmann::json::array();
  for (ResizeMethod m : ms) j.push_back(to_string(m));
  return j;
}

inline std::size_t line_of_byte(const std::string &text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

/// Recursive object merge; `patch` wins.
inline void merge_into(nlohmann::json &base, const nlohmann::json &patch) {
  if (!patch.is_object() || !base.is_object()) {
    base = patch;
    return;
  }
  for (const auto &[k, v] : patch.items()) {
    if (base.contains(k) && base[k].is_object() && v.is_object())
      merge_into(base[k], v);
    else
      base[k] = v;
  }
}

} // namespace detail

/// Parse JSON text; syntax errors become config errors carrying the line.
inline nlohmann::json parse_config_text(const std::string &text) {
  try {
    return text.find_first_not_of(" \t\r\n") == std::string::npos ? nlohmann::json::object() : nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    fail(ErrorKind::config, "cli", "malformed JSON at line " + std::to_string(detail::line_of_byte(text, e.byte)) + ": " + e.what());
  }
}

inline nlohmann::json read_config_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cli", "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

/// Build a validated config from a JSON document, with `overrides` (from
/// command-line flags) merged over it first. Unknown keys are rejected.
inline PipelineConfig parse_config(nlohmann::json doc, const nlohmann::json &overrides = nlohmann::json::object()) {
  using detail::config_error;
  using detail::get_field;
  if (doc.is_null()) doc = nlohmann::json::object();
  detail::merge_into(doc, overrides);
  detail::reject_unknown(doc, "", {"seed", "video_id", "bit_depth", "paths", "noise", "degrade", "negmix", "loss", "train", "grid"});

  PipelineConfig cfg;
  cfg.seed = get_field<std::uint64_t>(doc, "seed", "", cfg.seed);
  cfg.video_id = get_field<std::uint64_t>(doc, "video_id", "", cfg.video_id);
  cfg.bit_depth = get_field<int>(doc, "bit_depth", "", cfg.bit_depth);
  if (cfg.bit_depth != 8 && cfg.bit_depth != 16) config_error("bit_depth", "must be 8 or 16");

  if (doc.contains("paths")) {
    const auto &p = doc["paths"];
    detail::reject_unknown(p, "paths", {"input", "reference", "noise_bank", "output"});
    cfg.paths.input = get_field<std::string>(p, "input", "paths", "");
    cfg.paths.reference = get_field<std::string>(p, "reference", "paths", "");
    cfg.paths.noise_bank = get_field<std::string>(p, "noise_bank", "paths", "");
    cfg.paths.output = get_field<std::string>(p, "output", "paths", "");
  }

  if (doc.contains("noise")) {
    const auto &n = doc["noise"];
    detail::reject_unknown(n, "noise", {"sigma", "mu", "sigma_var", "sigma_mean", "window", "stride", "zero_mean"});
    auto &t = cfg.noise.thresholds;
    t.sigma = get_field<double>(n, "sigma", "noise", t.sigma);
    t.mu = get_field<double>(n, "mu", "noise", t.mu);
    t.sigma_var = get_field<double>(n, "sigma_var", "noise", t.sigma_var);
    t.sigma_mean = get_field<double>(n, "sigma_mean", "noise", t.sigma_mean);
    for (auto [name, v] : {std::pair{"sigma", t.sigma}, {"mu", t.mu}, {"sigma_var", t.sigma_var}, {"sigma_mean", t.sigma_mean}})
      if (!(v >= 0)) config_error(std::string("noise.") + name, "must be >= 0");
    if (n.contains("window")) cfg.noise.window = detail::parse_window(n["window"], "noise.window");
    if (n.contains("stride") && !n["stride"].is_null()) cfg.noise.stride = detail::parse_window(n["stride"], "noise.stride");
    cfg.noise.zero_mean = get_field<bool>(n, "zero_mean", "noise", false);
  }
  if (cfg.noise.window.h == 0 || cfg.noise.window.w == 0) config_error("noise.window", "must be >= 1");
  if (cfg.noise.stride && (cfg.noise.stride->h == 0 || cfg.noise.stride->w == 0)) config_error("noise.stride", "must be >= 1");

  if (doc.contains("degrade")) {
    const auto &d = doc["degrade"];
    detail::reject_unknown(d, "degrade", {"order", "final_scale", "template", "final_methods"});
    cfg.degrade.order = get_field<int>(d, "order", "degrade", cfg.degrade.order);
    cfg.degrade.tmpl.final_scale = get_field<double>(d, "final_scale", "degrade", cfg.degrade.tmpl.final_scale);
    if (d.contains("final_methods")) cfg.degrade.tmpl.final_methods = detail::parse_methods(d["final_methods"], "degrade.final_methods");
    if (d.contains("template")) {
      if (!d["template"].is_array()) config_error("degrade.template", "expected an array");
      cfg.degrade.tmpl.stage.clear();
      for (std::size_t i = 0; i < d["template"].size(); ++i) {
        const auto &o = d["template"][i];
        const std::string where = "degrade.template[" + std::to_string(i) + "]";
        detail::reject_unknown(o, where, {"kind", "range", "methods"});
        OpTemplate t;
        try {
          t.kind = parse_op_kind(o.at("kind").get<std::string>());
        } catch (const std::exception &) {
          config_error(where + ".kind", "missing or unknown kind");
        }
        const auto range = get_field<std::vector<double>>(o, "range", where, {});
        if (range.size() != 2) config_error(where + ".range", "expected [lo, hi]");
        t.lo = range[0];
        t.hi = range[1];
        if (o.contains("methods")) t.methods = detail::parse_methods(o["methods"], where + ".methods");
        try {
          t.validate();
        } catch (const Error &e) {
          config_error(where, e.what());
        }
        cfg.degrade.tmpl.stage.push_back(t);
      }
    }
  }
  if (cfg.degrade.order != 1 && cfg.degrade.order != 2) config_error("degrade.order", "must be 1 or 2");
  if (!(cfg.degrade.tmpl.final_scale > 0)) config_error("degrade.final_scale", "must be > 0");
  if (cfg.degrade.tmpl.stage.empty()) config_error("degrade.template", "must not be empty");
  if (cfg.degrade.tmpl.final_methods.empty()) config_error("degrade.final_methods", "must not be empty");

  if (doc.contains("negmix")) {
    const auto &n = doc["negmix"];
    detail::reject_unknown(n, "negmix", {"m", "p", "patch_scale", "temporal_lock"});
    cfg.negmix.m = get_field<double>(n, "m", "negmix", cfg.negmix.m);
    cfg.negmix.p = get_field<double>(n, "p", "negmix", cfg.negmix.p);
    cfg.negmix.patch_scale = get_field<std::size_t>(n, "patch_scale", "negmix", cfg.negmix.patch_scale);
    cfg.negmix.temporal_lock = get_field<bool>(n, "temporal_lock", "negmix", cfg.negmix.temporal_lock);
  }
  cfg.negmix.video_id = cfg.video_id;
  if (!(cfg.negmix.m >= 0 && cfg.negmix.m <= 1)) config_error("negmix.m", "must be in [0,1]");
  if (!on_probability_grid(cfg.negmix.p)) config_error("negmix.p", "must be one of 0.0, 0.1, ..., 1.0");
  if (cfg.negmix.patch_scale == 0) config_error("negmix.patch_scale", "must be >= 1");

  if (doc.contains("loss")) {
    const auto &l = doc["loss"];
    detail::reject_unknown(l, "loss", {"alpha", "beta", "gamma", "lambda", "norm_mode"});
    cfg.loss.alpha = get_field<double>(l, "alpha", "loss", cfg.loss.alpha);
    cfg.loss.beta = get_field<double>(l, "beta", "loss", cfg.loss.beta);
    cfg.loss.gamma = get_field<double>(l, "gamma", "loss", cfg.loss.gamma);
    cfg.loss.lambda = get_field<double>(l, "lambda", "loss", cfg.loss.lambda);
    if (l.contains("norm_mode")) {
      try {
        cfg.loss.norm_mode = parse_norm_mode(get_field<std::string>(l, "norm_mode", "loss", ""));
      } catch (const Error &) {
        config_error("loss.norm_mode", "must be l2norm or mse");
      }
    }
  }
  for (auto [name, v] : {std::pair{"alpha", cfg.loss.alpha}, {"beta", cfg.loss.beta}, {"gamma", cfg.loss.gamma}, {"lambda", cfg.loss.lambda}})
    if (!(v >= 0)) config_error(std::string("loss.") + name, "must be >= 0");

  if (doc.contains("train")) {
    const auto &t = doc["train"];
    detail::reject_unknown(t, "train", {"steps", "lr", "clips", "frames", "hr_size", "channels", "random_p", "norm_mode"});
    auto &s = cfg.train;
    s.steps = get_field<std::size_t>(t, "steps", "train", s.steps);
    s.lr = get_field<double>(t, "lr", "train", s.lr);
    s.clips = get_field<std::size_t>(t, "clips", "train", s.clips);
    s.frames = get_field<std::size_t>(t, "frames", "train", s.frames);
    s.hr_size = get_field<std::size_t>(t, "hr_size", "train", s.hr_size);
    s.channels = get_field<std::size_t>(t, "channels", "train", s.channels);
    s.random_p = get_field<bool>(t, "random_p", "train", s.random_p);
    if (t.contains("norm_mode")) {
      try {
        s.norm_mode = parse_norm_mode(get_field<std::string>(t, "norm_mode", "train", ""));
      } catch (const Error &) {
        config_error("train.norm_mode", "must be l2norm or mse");
      }
    }
  }
  if (cfg.train.steps == 0) config_error("train.steps", "must be >= 1");
  if (!(cfg.train.lr > 0)) config_error("train.lr", "must be > 0");
  if (cfg.train.clips == 0) config_error("train.clips", "must be >= 1");
  if (cfg.train.frames == 0) config_error("train.frames", "must be >= 1");
  if (cfg.train.hr_size == 0 || cfg.train.hr_size % 4 != 0) config_error("train.hr_size", "must be a positive multiple of 4");
  if (cfg.train.channels != 1 && cfg.train.channels != 3) config_error("train.channels", "must be 1 or 3");

  if (doc.contains("grid")) {
    const auto &g = doc["grid"];
    detail::reject_unknown(g, "grid", {"m_rows", "frame"});
    cfg.grid.m_rows = get_field<std::vector<double>>(g, "m_rows", "grid", {});
    cfg.grid.frame = get_field<std::size_t>(g, "frame", "grid", 0);
    for (double m : cfg.grid.m_rows)
      if (!(m >= 0 && m <= 1)) config_error("grid.m_rows", "values must be in [0,1]");
  }
  return cfg;
}

/// The effective config, in the same schema parse_config reads.
inline nlohmann::json to_json(const PipelineConfig &cfg) {
  nlohmann::json tmpl = nlohmann::json::array();
  for (const OpTemplate &t : cfg.degrade.tmpl.stage) {
    nlohmann::json o = {{"kind", to_string(t.kind)}, {"range", {t.lo, t.hi}}};
    if (t.kind == OpKind::resize) o["methods"] = detail::methods_json(t.methods);
    tmpl.push_back(o);
  }
  nlohmann::json noise = {{"sigma", cfg.noise.thresholds.sigma},
                          {"mu", cfg.noise.thresholds.mu},
                          {"sigma_var", cfg.noise.thresholds.sigma_var},
                          {"sigma_mean", cfg.noise.thresholds.sigma_mean},
                          {"window", {cfg.noise.window.h, cfg.noise.window.w}},
                          {"zero_mean", cfg.noise.zero_mean}};
  noise["stride"] = cfg.noise.stride ? nlohmann::json{cfg.noise.stride->h, cfg.noise.stride->w} : nlohmann::json(nullptr);
  return {{"seed", cfg.seed},
          {"video_id", cfg.video_id},
          {"bit_depth", cfg.bit_depth},
          {"paths",
           {{"input", cfg.paths.input},
            {"reference", cfg.paths.reference},
            {"noise_bank", cfg.paths.noise_bank},
            {"output", cfg.paths.output}}},
          {"noise", noise},
          {"degrade",
           {{"order", cfg.degrade.order},
            {"final_scale", cfg.degrade.tmpl.final_scale},
            {"template", tmpl},
            {"final_methods", detail::methods_json(cfg.degrade.tmpl.final_methods)}}},
          {"negmix",
           {{"m", cfg.negmix.m},
            {"p", cfg.negmix.p},
            {"patch_scale", cfg.negmix.patch_scale},
            {"temporal_lock", cfg.negmix.temporal_lock}}},
          {"loss",
           {{"alpha", cfg.loss.alpha},
            {"beta", cfg.loss.beta},
            {"gamma", cfg.loss.gamma},
            {"lambda", cfg.loss.lambda},
            {"norm_mode", to_string(cfg.loss.norm_mode)}}},
          {"train",
           {{"steps", cfg.train.steps},
            {"lr", cfg.train.lr},
            {"clips", cfg.train.clips},
            {"frames", cfg.train.frames},
            {"hr_size", cfg.train.hr_size},
            {"channels", cfg.train.channels},
            {"random_p", cfg.train.random_p},
            {"norm_mode", to_string(cfg.train.norm_mode)}}},
          {"grid", {{"m_rows", cfg.grid.m_rows}, {"frame", cfg.grid.frame}}}};
}

/// Input paths named in the config must exist.
inline void validate_input_paths(const PipelineConfig &cfg) {
  for (auto [field, value] : {std::pair<const char *, const std::string &>{"paths.input", cfg.paths.input},
                              {"paths.reference", cfg.paths.reference},
                              {"paths.noise_bank", cfg.paths.noise_bank}})
    if (!value.empty() && !std::filesystem::exists(value)) detail::config_error(field, "path does not exist: " + value);
}

} // namespace vsraug
