#include "peb/harness/export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "peb/errors.hpp"

namespace peb::harness {

namespace fs = std::filesystem;

std::string format_full(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_table(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_full(*v) : "nan"; }

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) fields.push_back(cell);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& s, const std::string& origin) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ConfigError(origin + ": '" + s + "' is not a number");
  return v;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ConfigError("no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  return parse_number(rows.at(row).at(column(name)), name);
}

void write_csv(const fs::path& path, const CsvTable& t) {
  std::ofstream out = open_out(path);
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) {
    if (r.size() != t.header.size()) throw DomainError("CSV row width does not match the header");
    line(r);
  }
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty CSV");
  t.header = split(line);
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw ConfigError(path.string() + ": line " + std::to_string(n) + " has " + std::to_string(cells.size()) +
                        " fields, expected " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

void write_grid_csv(const fs::path& path, const diagnostics::EvalGrid& grid, std::span<const double> values) {
  const std::vector<double> raster = grid.to_raster(values, std::numeric_limits<double>::quiet_NaN());
  std::ofstream out = open_out(path);
  for (int row = 0; row < grid.resolution; ++row) {
    for (int col = 0; col < grid.resolution; ++col) {
      out << (col ? "," : "") << format_full(raster[static_cast<std::size_t>(row) * grid.resolution + col]);
    }
    out << '\n';
  }
}

std::vector<std::vector<double>> read_grid_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> r;
    for (const std::string& cell : split(line)) r.push_back(parse_number(cell, path.string()));
    if (!rows.empty() && r.size() != rows.front().size()) throw ConfigError(path.string() + ": ragged grid");
    rows.push_back(std::move(r));
  }
  return rows;
}

fs::path pgm_sidecar(const fs::path& pgm_path) { return fs::path(pgm_path.string() + ".txt"); }

PgmScale write_pgm(const fs::path& path, const diagnostics::EvalGrid& grid, std::span<const double> values) {
  if (values.size() != grid.inside.size()) throw DomainError("field does not match the grid mask");
  PgmScale scale;
  if (!values.empty()) {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    scale = {*lo, *hi};
  }
  std::vector<std::uint8_t> pixels(grid.raster_size(), 0);
  const double range = scale.max - scale.min;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double t = range > 0.0 ? (values[k] - scale.min) / range : 0.0;
    pixels[grid.raster_of[k]] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(t, 0.0, 1.0)));
  }
  {
    std::ofstream out = open_out(path, std::ios::out | std::ios::binary);
    out << "P5\n" << grid.resolution << ' ' << grid.resolution << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  }
  std::ofstream side = open_out(pgm_sidecar(path));
  side << "min " << format_full(scale.min) << '\n' << "max " << format_full(scale.max) << '\n';
  return scale;
}

PgmImage read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::string magic;
  PgmImage img;
  in >> magic >> img.width >> img.height >> img.maxval;
  if (!in || magic != "P5" || img.width <= 0 || img.height <= 0 || img.maxval != 255) {
    throw ConfigError(path.string() + ": not an 8-bit P5 image");
  }
  in.get();  // single whitespace after the header
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) throw ConfigError(path.string() + ": truncated");
  if (in.peek() != std::char_traits<char>::eof()) throw ConfigError(path.string() + ": trailing bytes");
  return img;
}

PgmScale read_pgm_scale(const fs::path& pgm_path) {
  std::ifstream in(pgm_sidecar(pgm_path));
  if (!in) throw ConfigError("cannot read " + pgm_sidecar(pgm_path).string());
  std::string k1, v1, k2, v2;
  in >> k1 >> v1 >> k2 >> v2;
  if (k1 != "min" || k2 != "max") throw ConfigError(pgm_sidecar(pgm_path).string() + ": malformed");
  return {parse_number(v1, "min"), parse_number(v2, "max")};
}

void export_field(const fs::path& dir, const std::string& stem, const diagnostics::EvalGrid& grid,
                  std::span<const double> values) {
  write_grid_csv(dir / (stem + ".csv"), grid, values);
  write_pgm(dir / (stem + ".pgm"), grid, values);
}

CsvTable history_table(const training::LossHistory& h) {
  CsvTable t{{"iteration", "loss_total", "loss_pde", "loss_bc", "seconds"}, {}};
  for (const auto& r : h.records) {
    t.rows.push_back({std::to_string(r.iteration), format_full(r.loss_total), format_full(r.loss_pde),
                      format_full(r.loss_bc), format_full(r.seconds)});
  }
  return t;
}

CsvTable metrics_table(const RunLabel& label, const diagnostics::MetricsReport& m) {
  return CsvTable{{"backbone", "lr", "iterations", "total_seconds", "seconds_per_epoch", "rmse_u", "mae_u", "mse_u",
                   "max_abs_u", "rmse_K", "mae_K", "mse_K", "max_abs_K", "relerr_boundary", "energy_norm_sq",
                   "edge_ratio"},
                  {{label.backbone, format_full(label.lr), std::to_string(m.iterations), format_full(m.total_seconds),
                    format_full(m.seconds_per_epoch), format_full(m.u.rmse), format_full(m.u.mae),
                    format_full(m.u.mse), format_full(m.u.max_abs), format_full(m.kelvin.rmse),
                    format_full(m.kelvin.mae), format_full(m.kelvin.mse), format_full(m.kelvin.max_abs),
                    format_full(m.relerr_boundary), format_full(m.energy_norm_sq), format_full(m.edge_ratio)}}};
}

CsvTable indicator_table(const diagnostics::PatchPartition& part, const diagnostics::IndicatorField& eta,
                         std::span<const double> local) {
  CsvTable t{{"patch_id", "center_x", "center_y", "h", "n_interior", "n_ring", "eta_sq", "twist", "div", "port",
              "local_energy"},
             {}};
  for (const auto& p : part.patches) {
    const auto i = static_cast<std::size_t>(p.id);
    t.rows.push_back({std::to_string(p.id), format_full(p.center.x), format_full(p.center.y), format_full(p.h),
                      std::to_string(p.n_interior), std::to_string(p.n_ring), format_full(eta.eta_sq[i]),
                      format_full(eta.twist[i]), format_full(eta.div[i]), format_full(eta.port[i]),
                      format_full(local[i])});
  }
  return t;
}

CsvTable two_sided_table(const diagnostics::TwoSidedReport& r) {
  CsvTable t{{"key", "value"}, {}};
  auto add = [&](const std::string& k, const std::string& v) { t.rows.push_back({k, v}); };
  add("passed", r.passed ? "1" : "0");
  add("vacuous", r.vacuous ? "1" : "0");
  add("energy_norm_sq", format_full(r.energy));
  add("eta_sq_total", format_full(r.eta_total));
  add("global_ratio", opt(r.global_ratio));
  add("ratio_min", opt(r.ratio_min));
  add("ratio_median", opt(r.ratio_median));
  add("ratio_max", opt(r.ratio_max));
  add("spearman", opt(r.spearman));
  add("argmax_patch", std::to_string(r.argmax_patch));
  add("argmax_rank_fraction", opt(r.argmax_rank));
  std::string note = r.note;
  std::replace(note.begin(), note.end(), ',', ';');
  add("note", note.empty() ? "-" : note);
  return t;
}

CsvTable bound_table(const diagnostics::OperatorBoundReport& r) {
  CsvTable t{{"key", "value"}, {}};
  auto add = [&](const std::string& k, double v) { t.rows.push_back({k, format_full(v)}); };
  for (std::size_t j = 0; j < r.L.size(); ++j) {
    add("L_" + std::to_string(j + 1), r.L[j]);
    add("H_" + std::to_string(j + 1), r.H[j]);
  }
  add("sum_product", r.sum_product);
  add("sum_product_chain", r.sum_product_chain);
  add("W_norm", r.W_norm);
  add("W_out_norm", r.W_out_norm);
  add("beta_g", r.beta_g);
  add("gated_bound", r.gated_bound);
  add("sampled_hessian_max", r.sampled_hessian_max);
  add("dominance", r.dominance() ? 1.0 : 0.0);
  add("dominance_chain", r.dominance_chain() ? 1.0 : 0.0);
  add("power_unconverged", static_cast<double>(r.power_unconverged));
  add("samples", static_cast<double>(r.samples));
  return t;
}

}  // namespace peb::harness
