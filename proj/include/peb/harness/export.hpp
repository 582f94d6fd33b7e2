#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "peb/diagnostics/bounds.hpp"
#include "peb/diagnostics/grid.hpp"
#include "peb/diagnostics/indicators.hpp"
#include "peb/diagnostics/metrics.hpp"
#include "peb/training/trainer.hpp"

namespace peb::harness {

// Full precision ("%.17g") for machine-readable files, two-decimal
// scientific ("%.2e") for tables.
std::string format_full(double v);
std::string format_table(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws ConfigError if absent
  double number(std::size_t row, const std::string& name) const;
};

// Plain comma-separated files without quoting; fields never contain commas.
void write_csv(const std::filesystem::path& path, const CsvTable& table);
// Throws ConfigError on ragged rows or unreadable files.
CsvTable read_csv(const std::filesystem::path& path);

// Raster fields: one line per raster row (top row first), "nan" outside the mask.
void write_grid_csv(const std::filesystem::path& path, const diagnostics::EvalGrid& grid,
                    std::span<const double> masked_values);
std::vector<std::vector<double>> read_grid_csv(const std::filesystem::path& path);

// 8-bit binary PGM ("P5", maxval 255, row-major, top row first). Inside
// values are mapped linearly from [min, max] to [0, 255]; outside pixels are
// 0. The min and max go to a sidecar text file <path>.txt.
struct PgmImage {
  int width = 0;
  int height = 0;
  int maxval = 255;
  std::vector<std::uint8_t> pixels;
};
struct PgmScale {
  double min = 0.0;
  double max = 0.0;
};
PgmScale write_pgm(const std::filesystem::path& path, const diagnostics::EvalGrid& grid,
                   std::span<const double> masked_values);
PgmImage read_pgm(const std::filesystem::path& path);
PgmScale read_pgm_scale(const std::filesystem::path& pgm_path);
std::filesystem::path pgm_sidecar(const std::filesystem::path& pgm_path);

// Field as CSV grid plus PGM heat map: <stem>.csv, <stem>.pgm, <stem>.pgm.txt.
void export_field(const std::filesystem::path& dir, const std::string& stem, const diagnostics::EvalGrid& grid,
                  std::span<const double> masked_values);

CsvTable history_table(const training::LossHistory& history);

struct RunLabel {
  std::string backbone;
  double lr = 0.0;
};
CsvTable metrics_table(const RunLabel& label, const diagnostics::MetricsReport& m);

CsvTable indicator_table(const diagnostics::PatchPartition& partition, const diagnostics::IndicatorField& eta,
                         std::span<const double> local_energy);
CsvTable two_sided_table(const diagnostics::TwoSidedReport& report);
CsvTable bound_table(const diagnostics::OperatorBoundReport& report);

}  // namespace peb::harness
