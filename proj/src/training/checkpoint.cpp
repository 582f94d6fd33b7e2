#include "peb/training/checkpoint.hpp"

#include <fstream>

#include "peb/errors.hpp"

namespace peb::training {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "peb-checkpoint";
constexpr int kVersion = 1;

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw StructuralError(std::string("checkpoint is missing '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw StructuralError(std::string("checkpoint field '") + key + "': " + e.what());
  }
}

}  // namespace

json to_json(const model::Architecture& a) {
  return json{{"backbone", std::string(model::to_string(a.backbone))},
              {"depth", a.depth},
              {"width", a.width},
              {"head", std::string(model::to_string(a.head))},
              {"activation", std::string(autodiff::to_string(a.activation))}};
}

model::Architecture architecture_from_json(const json& j) {
  model::Architecture a;
  a.backbone = model::backbone_from_string(field<std::string>(j, "backbone"));
  a.depth = field<int>(j, "depth");
  a.width = field<int>(j, "width");
  a.head = model::head_mode_from_string(field<std::string>(j, "head"));
  a.activation = autodiff::activation_from_string(field<std::string>(j, "activation"));
  a.validate();
  return a;
}

json to_json(const Checkpoint& c) {
  json layout = json::array();
  for (const model::LayoutEntry& e : c.params.layout.entries()) {
    layout.push_back(json{{"name", e.name}, {"layer", e.layer}, {"offset", e.offset}, {"rows", e.rows},
                          {"cols", e.cols}});
  }
  json j{{"format", kFormat},
         {"version", kVersion},
         {"architecture", to_json(c.params.arch)},
         {"layout", layout},
         {"seed", c.seed},
         {"iteration", c.iteration},
         {"params", c.params.flat}};
  if (c.adam) {
    const AdamState& s = *c.adam;
    j["adam"] = json{{"t", s.t},         {"beta1", s.beta1}, {"beta2", s.beta2}, {"eps", s.eps},
                     {"lr", s.lr},       {"m", s.m},         {"v", s.v}};
  }
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  if (field<std::string>(j, "format") != kFormat) throw StructuralError("not a checkpoint file");
  if (field<int>(j, "version") != kVersion) throw StructuralError("unsupported checkpoint version");
  Checkpoint c;
  c.params.arch = architecture_from_json(field<json>(j, "architecture"));
  c.params.layout = model::ParamLayout(c.params.arch);
  const json& layout = j.at("layout");
  const auto entries = c.params.layout.entries();
  if (!layout.is_array() || layout.size() != entries.size()) {
    throw StructuralError("checkpoint layout does not match its architecture");
  }
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const json& s = layout[k];
    const model::LayoutEntry& e = entries[k];
    if (field<std::string>(s, "name") != e.name || field<int>(s, "layer") != e.layer ||
        field<std::size_t>(s, "offset") != e.offset || field<Eigen::Index>(s, "rows") != e.rows ||
        field<Eigen::Index>(s, "cols") != e.cols) {
      throw StructuralError("checkpoint layout entry '" + e.name + "' does not match its architecture");
    }
  }
  c.seed = field<std::uint64_t>(j, "seed");
  c.iteration = field<std::uint64_t>(j, "iteration");
  c.params.flat = field<std::vector<double>>(j, "params");
  if (c.params.flat.size() != c.params.layout.total()) throw StructuralError("checkpoint parameter count mismatch");
  if (j.contains("adam")) {
    const json& a = j.at("adam");
    AdamState s;
    s.t = field<std::uint64_t>(a, "t");
    s.beta1 = field<double>(a, "beta1");
    s.beta2 = field<double>(a, "beta2");
    s.eps = field<double>(a, "eps");
    s.lr = field<double>(a, "lr");
    s.m = field<std::vector<double>>(a, "m");
    s.v = field<std::vector<double>>(a, "v");
    if (s.m.size() != c.params.flat.size() || s.v.size() != c.params.flat.size()) {
      throw StructuralError("checkpoint optimizer state size mismatch");
    }
    c.adam = std::move(s);
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  out << to_json(c).dump() << '\n';
  if (!out) throw ConfigError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read checkpoint " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw StructuralError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace peb::training
