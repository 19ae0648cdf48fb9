#include "dasgrad/trace.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

#include "dasgrad/errors.hpp"

namespace dasgrad {

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (!cells.empty() && !cells.back().empty() && cells.back().back() == '\r') cells.back().pop_back();
  return cells;
}

double to_real(const std::string& cell, const std::string& source, std::size_t line) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
    throw ParseError(source, line, "bad number '" + cell + "'");
  }
  return x;
}

}  // namespace

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_trace_csv(const std::vector<TraceRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path.string(), 0, "cannot open trace for writing");
  out << kTraceHeader << '\n';
  for (const auto& r : rows) {
    out << r.step << ',' << format_real(r.loss) << ','
        << (r.accuracy ? format_real(*r.accuracy) : std::string()) << ','
        << format_real(r.inst_regret) << ',' << format_real(r.cum_regret) << ','
        << format_real(r.grad_norm_var) << '\n';
  }
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open csv");
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_commas(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw ParseError(path.string(), lineno, "row width differs from header");
    }
    table.rows.push_back(std::move(cells));
  }
  if (table.header.empty()) throw ParseError(path.string(), 0, "empty csv");
  return table;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return c;
  }
  throw ParseError("<csv>", 0, "no column '" + name + "'");
}

std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const std::string source = path.string();
  if (split_commas(kTraceHeader) != table.header) {
    throw ParseError(source, 1, "unexpected trace header");
  }
  std::vector<TraceRow> rows;
  rows.reserve(table.rows.size());
  std::size_t line = 1;
  for (const auto& cells : table.rows) {
    ++line;
    TraceRow r;
    r.step = static_cast<std::size_t>(to_real(cells[0], source, line));
    r.loss = to_real(cells[1], source, line);
    if (!cells[2].empty()) r.accuracy = to_real(cells[2], source, line);
    r.inst_regret = to_real(cells[3], source, line);
    r.cum_regret = to_real(cells[4], source, line);
    r.grad_norm_var = to_real(cells[5], source, line);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace dasgrad
