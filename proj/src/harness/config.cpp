#include "peb/harness/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "peb/errors.hpp"

namespace peb::harness {

using nlohmann::json;

namespace {

// Reads typed fields from one JSON object and rejects keys it never asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "document" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) {
    known_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    out = get<T>(key);
  }

  template <typename T>
  T require(const std::string& key) {
    if (!has(key)) throw ConfigError("missing required field '" + where(key) + "'");
    return get<T>(key);
  }

  template <typename T>
  T get(const std::string& key) {
    known_.insert(key);
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("field '" + where(key) + "' must be a number");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() && !v.is_number_unsigned()) {
          throw ConfigError("field '" + where(key) + "' must be an integer");
        }
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && v.get<std::int64_t>() < 0) {
            throw ConfigError("field '" + where(key) + "' must be nonnegative");
          }
        }
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("field '" + where(key) + "': " + e.what());
    }
  }

  Section child(const std::string& key) {
    known_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, where(key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!known_.count(key)) throw ConfigError("unknown field '" + where(key) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> known_;
};

template <typename F>
auto wrap(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("field '" + field + "': " + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void parse_model(Section s, model::Architecture& a, bool backbone_required) {
  if (backbone_required) {
    const auto name = s.require<std::string>("backbone");
    a.backbone = wrap(s.where("backbone"), [&] { return model::backbone_from_string(name); });
  } else if (s.has("backbone")) {
    const auto name = s.get<std::string>("backbone");
    a.backbone = wrap(s.where("backbone"), [&] { return model::backbone_from_string(name); });
  }
  s.read("depth", a.depth);
  s.read("width", a.width);
  if (s.has("head")) {
    const auto name = s.get<std::string>("head");
    a.head = wrap(s.where("head"), [&] { return model::head_mode_from_string(name); });
  }
  if (s.has("activation")) {
    const auto name = s.get<std::string>("activation");
    a.activation = wrap(s.where("activation"), [&] { return autodiff::activation_from_string(name); });
  }
  s.finish();
  wrap(s.where(), [&] { a.validate(); return 0; });
}

void parse_train(Section s, training::TrainConfig& t, bool required) {
  if (required) {
    t.lr = s.require<double>("lr");
    t.iterations = s.require<std::uint64_t>("iterations");
  } else {
    s.read("lr", t.lr);
    s.read("iterations", t.iterations);
  }
  s.read("init_seed", t.init_seed);
  s.read("sample_seed", t.sample_seed);
  s.read("n_interior", t.n_interior);
  s.read("n_boundary", t.n_boundary);
  if (s.has("resample")) {
    const auto r = s.get<std::string>("resample");
    if (r == "fixed") {
      t.resample = physics::ResamplePolicy::Fixed;
    } else if (r == "every_iteration") {
      t.resample = physics::ResamplePolicy::EveryIteration;
    } else {
      throw ConfigError("field '" + s.where("resample") + "' must be \"fixed\" or \"every_iteration\"");
    }
  }
  s.read("checkpoint_every", t.checkpoint_every);
  s.read("history_every", t.history_every);
  if (s.has("clip_norm")) t.clip_norm = s.get<double>("clip_norm");
  s.read("chunk", t.eval.chunk);
  s.read("threads", t.eval.threads);
  {
    Section w = s.child("weights");
    physics::LossWeights& lw = t.weights;
    w.read("w1", lw.w1);
    w.read("w2", lw.w2);
    w.read("w4", lw.w4);
    w.read("eps_clo", lw.eps_clo);
    if (w.has("w3")) {
      lw.w3 = w.get<double>("w3");
    } else {
      lw.w3 = lw.eps_clo;
    }
    w.read("h_omega", lw.h_omega);
    w.read("h_gamma", lw.h_gamma);
    w.finish();
    wrap(w.where(), [&] { lw.validate(); return 0; });
  }
  s.finish();
  if (!(t.lr > 0.0)) throw ConfigError("field '" + s.where("lr") + "' must be positive");
  if (t.iterations < 1) throw ConfigError("field '" + s.where("iterations") + "' must be at least 1");
  if (t.n_interior < 1) throw ConfigError("field '" + s.where("n_interior") + "' must be positive");
  if (t.n_boundary < 1) throw ConfigError("field '" + s.where("n_boundary") + "' must be positive");
  if (t.history_every < 1) throw ConfigError("field '" + s.where("history_every") + "' must be at least 1");
  if (t.eval.chunk < 1) throw ConfigError("field '" + s.where("chunk") + "' must be positive");
  if (t.clip_norm && !(*t.clip_norm > 0.0)) throw ConfigError("field '" + s.where("clip_norm") + "' must be positive");
}

void parse_problem(Section s, physics::PhysicalConstants& c) {
  s.read("k", c.k);
  s.read("Q", c.Q);
  s.read("h", c.h);
  s.read("T_inf", c.T_inf);
  s.read("R", c.R);
  s.finish();
  wrap(s.where(), [&] { c.validate(); return 0; });
}

void parse_eval(Section s, EvalSettings& e) {
  s.read("resolution", e.resolution);
  s.read("ring_points", e.ring_points);
  s.finish();
  if (e.resolution < 3) throw ConfigError("field '" + s.where("resolution") + "' must be at least 3");
  if (e.ring_points < 4) throw ConfigError("field '" + s.where("ring_points") + "' must be at least 4");
}

void parse_diagnostics(Section s, DiagnosticsSettings& d) {
  s.read("patch_side", d.patch_side);
  if (s.has("bandwidth")) d.bandwidth = s.get<double>("bandwidth");
  if (s.has("alpha")) {
    const auto a = s.get<std::vector<double>>("alpha");
    if (a.size() != 3) throw ConfigError("field '" + s.where("alpha") + "' must hold three numbers");
    d.alpha = {a[0], a[1], a[2]};
  }
  s.read("bound_samples", d.bound_samples);
  s.read("beta_g", d.bound.beta_g);
  s.read("power_iterations", d.bound.power_iterations);
  s.read("power_tolerance", d.bound.tolerance);
  s.read("random_directions", d.bound.random_directions);
  s.read("ratio_low", d.two_sided.ratio_low);
  s.read("ratio_high", d.two_sided.ratio_high);
  s.read("min_spearman", d.two_sided.min_spearman);
  s.read("top_fraction", d.two_sided.top_fraction);
  s.finish();
  if (!(d.patch_side > 0.0)) throw ConfigError("field '" + s.where("patch_side") + "' must be positive");
  if (d.bandwidth && !(*d.bandwidth > 0.0)) throw ConfigError("field '" + s.where("bandwidth") + "' must be positive");
  if (d.bound_samples < 64) throw ConfigError("field '" + s.where("bound_samples") + "' must be at least 64");
}

RunConfig parse_sections(const json& doc, bool strict_required) {
  RunConfig c;
  Section root(doc, "");
  parse_problem(root.child("problem"), c.train.constants);
  parse_model(root.child("model"), c.train.arch, strict_required);
  parse_train(root.child("train"), c.train, strict_required);
  parse_eval(root.child("eval"), c.eval);
  parse_diagnostics(root.child("diagnostics"), c.diagnostics);
  {
    Section o = root.child("output");
    if (o.has("directory")) c.output = o.get<std::string>("directory");
    o.finish();
  }
  root.finish();
  return c;
}

}  // namespace

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line number.
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min(e.byte, text.size()); ++i) line += text[i] == '\n' ? 1 : 0;
    throw ConfigError(origin + ": line " + std::to_string(line) + ": " + e.what());
  }
}

RunConfig parse_run_config(const json& doc) { return parse_sections(doc, true); }

RunConfig load_run_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  RunConfig c = parse_run_config(parse_json_text(text, path.string()));
  c.source = text;
  return c;
}

std::vector<double> default_learning_rates() {
  std::vector<double> lrs;
  for (int k = 1; k <= 10; ++k) lrs.push_back(k * 1e-4);
  return lrs;
}

SweepSpec parse_sweep_spec(const json& doc) {
  SweepSpec s;
  Section root(doc, "");
  if (root.has("backbones")) {
    for (const auto& name : root.get<std::vector<std::string>>("backbones")) {
      s.backbones.push_back(wrap("backbones", [&] { return model::backbone_from_string(name); }));
    }
  } else {
    s.backbones = {model::Backbone::PINN, model::Backbone::LNN_PINN, model::Backbone::LSTM_PINN,
                   model::Backbone::LSTM_LNN_PINN};
  }
  if (s.backbones.empty()) throw ConfigError("field 'backbones' must not be empty");
  s.lrs = root.has("lrs") ? root.get<std::vector<double>>("lrs") : default_learning_rates();
  if (s.lrs.empty()) throw ConfigError("field 'lrs' must not be empty");
  for (std::size_t i = 0; i < s.lrs.size(); ++i) {
    if (!(s.lrs[i] > 0.0)) throw ConfigError("field 'lrs' must hold positive values");
    if (i > 0 && !(s.lrs[i] > s.lrs[i - 1])) throw ConfigError("field 'lrs' must be strictly increasing");
  }
  root.read("iterations", s.iterations);
  if (s.iterations < 1) throw ConfigError("field 'iterations' must be at least 1");
  root.read("init_seed", s.init_seed);
  root.read("sample_seed", s.sample_seed);
  if (root.has("base")) {
    s.base = root.get<json>("base");
    if (!s.base.is_object()) throw ConfigError("field 'base' must be an object");
    if (s.base.contains("output")) throw ConfigError("field 'base.output' is not allowed; use 'output'");
  } else {
    s.base = json::object();
  }
  {
    Section o = root.child("output");
    if (o.has("directory")) s.output = o.get<std::string>("directory");
    o.finish();
  }
  root.finish();
  // Validate the shared sections once up front.
  parse_sections(s.base, false);
  return s;
}

SweepSpec load_sweep_spec(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  SweepSpec s = parse_sweep_spec(parse_json_text(text, path.string()));
  s.source = text;
  return s;
}

RunConfig sweep_run_config(const SweepSpec& spec, model::Backbone backbone, double lr) {
  json doc = spec.base;
  doc["model"]["backbone"] = std::string(model::to_string(backbone));
  doc["train"]["lr"] = lr;
  doc["train"]["iterations"] = spec.iterations;
  doc["train"]["init_seed"] = spec.init_seed;
  doc["train"]["sample_seed"] = spec.sample_seed;
  RunConfig c = parse_run_config(doc);
  c.source = doc.dump(2);
  return c;
}

}  // namespace peb::harness
