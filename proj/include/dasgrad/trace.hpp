#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dasgrad {

/// One metric tick of a single (optimizer, seed) run.
struct TraceRow {
  std::size_t step = 0;
  double loss = 0.0;
  std::optional<double> accuracy;  // absent for centroid
  double inst_regret = 0.0;
  double cum_regret = 0.0;
  double grad_norm_var = 0.0;
};

inline constexpr const char* kTraceHeader = "step,loss,accuracy,inst_regret,cum_regret,grad_norm_var";

/// 17 significant digits, enough to round-trip any double.
std::string format_real(double x);

void write_trace_csv(const std::vector<TraceRow>& rows, const std::filesystem::path& path);
std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path);

/// Header plus rows of raw string cells; a minimal reader for the files this
/// project writes (no quoting).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace dasgrad
