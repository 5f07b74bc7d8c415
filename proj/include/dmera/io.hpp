#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "dmera/experiments.hpp"

namespace dmera {

using Cell = std::variant<std::string, long long, double, bool>;

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

/// Locale-independent, 17 significant digits.
std::string format_double(double x);
std::string format_cell(const Cell& cell);

std::string to_csv(const CsvTable& table);
/// Writes `path` via a temporary file in the same directory and a rename.
void write_text_atomic(const std::string& path, const std::string& content);
void write_csv(const CsvTable& table, const std::string& path);

/// Header plus raw string fields (quoted fields unescaped).
struct CsvText {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(const std::string& name) const;
};
CsvText parse_csv(const std::string& text);
CsvText read_csv(const std::string& path);

/// Rows of layer,observable,mean,n_samples.
std::vector<MeasuredPoint> read_measurements(const std::string& path);

// ---- schemas --------------------------------------------------------------

CsvTable spectrum_table(const Spectrum& spectrum);
CsvTable dynamics_table(const TimeSeries& series);
CsvTable sweep_table(const SweepResult& sweep);
CsvTable ensemble_table(const std::vector<EnsembleResult>& results);
CsvTable dilution_table(const std::vector<DilutionRow>& rows);
CsvTable fit_table(const FitResult& fit);

/// FNV-1a over the canonical JSON of the profile, as 16 hex digits.
std::string profile_digest(const AngleProfile& profile);

}  // namespace dmera
