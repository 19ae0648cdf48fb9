#include "dasgrad/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include "dasgrad/errors.hpp"
#include "dasgrad/rng.hpp"

namespace dasgrad {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view field, const std::string& source, std::size_t line) {
  field = trim(field);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(source, line, "non-numeric field '" + std::string(field) + "'");
  }
  if (!std::isfinite(value)) throw ParseError(source, line, "non-finite value");
  return value;
}

long long parse_integer(std::string_view field, const std::string& source, std::size_t line) {
  field = trim(field);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(source, line, "expected an integer, got '" + std::string(field) + "'");
  }
  return value;
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path.string(), 0, "cannot open file for writing");
  return out;
}

void check_labels(Dataset& data, int declared, const std::string& source) {
  int max_label = 0;
  for (const auto& ex : data.examples) max_label = std::max(max_label, ex.label);
  data.num_classes = declared > 0 ? declared : max_label + 1;
  if (max_label >= data.num_classes) {
    throw ParseError(source, 0,
                     "label " + std::to_string(max_label) + " outside [0, " +
                         std::to_string(data.num_classes) + ")");
  }
}

}  // namespace

std::vector<std::size_t> Dataset::label_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(num_classes, 1)), 0);
  for (const auto& ex : examples) ++counts.at(static_cast<std::size_t>(ex.label));
  return counts;
}

Dataset load_dense_csv(const std::filesystem::path& path, int num_classes) {
  const std::string source = path.string();
  auto in = open_input(path);
  Dataset data;
  data.provenance = "dense-csv:" + source;
  std::string row;
  std::size_t line = 0;
  while (std::getline(in, row)) {
    ++line;
    if (trim(row).empty()) continue;
    std::string_view rest(row);
    std::vector<std::string_view> fields;
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() < 2) throw ParseError(source, line, "row needs a label and features");
    const long long label = parse_integer(fields[0], source, line);
    if (label < 0 || (num_classes > 0 && label >= num_classes)) {
      throw ParseError(source, line, "label " + std::to_string(label) + " out of range");
    }
    if (data.examples.empty()) data.dim = fields.size() - 1;
    if (fields.size() - 1 != data.dim) {
      throw ParseError(source, line,
                       "row has " + std::to_string(fields.size() - 1) + " features, expected " +
                           std::to_string(data.dim));
    }
    DenseVector x(data.dim);
    for (std::size_t j = 0; j < data.dim; ++j) x[j] = parse_double(fields[j + 1], source, line);
    data.examples.push_back({Features(std::move(x)), static_cast<int>(label)});
  }
  if (data.examples.empty()) throw ParseError(source, 0, "no examples");
  check_labels(data, num_classes, source);
  return data;
}

void write_dense_csv(const Dataset& data, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& ex : data.examples) {
    out << ex.label;
    for (double x : ex.features.to_dense()) out << ',' << format_double(x);
    out << '\n';
  }
}

Dataset load_sparse(const std::filesystem::path& path) {
  const std::string source = path.string();
  auto in = open_input(path);
  std::string row;
  std::size_t line = 0;
  Dataset data;
  data.provenance = "sparse:" + source;
  bool have_header = false;
  int declared_k = 0;
  while (std::getline(in, row)) {
    ++line;
    const std::string_view text = trim(row);
    if (text.empty()) continue;
    if (!have_header) {
      std::istringstream header{std::string(text)};
      std::string tok;
      bool have_d = false;
      while (header >> tok) {
        if (tok.rfind("#d=", 0) == 0) {
          const long long d = parse_integer(std::string_view(tok).substr(3), source, line);
          if (d <= 0) throw ParseError(source, line, "dimension must be positive");
          data.dim = static_cast<std::size_t>(d);
          have_d = true;
        } else if (tok.rfind("#k=", 0) == 0) {
          declared_k = static_cast<int>(parse_integer(std::string_view(tok).substr(3), source, line));
          if (declared_k <= 0) throw ParseError(source, line, "class count must be positive");
        } else {
          throw ParseError(source, line, "missing '#d=<dim> #k=<classes>' header");
        }
      }
      if (!have_d || declared_k == 0) {
        throw ParseError(source, line, "missing '#d=<dim> #k=<classes>' header");
      }
      have_header = true;
      continue;
    }
    std::istringstream fields{std::string(text)};
    std::string tok;
    fields >> tok;
    const long long label = parse_integer(tok, source, line);
    if (label < 0 || label >= declared_k) {
      throw ParseError(source, line, "label " + std::to_string(label) + " out of range");
    }
    std::vector<std::size_t> idx;
    std::vector<double> val;
    while (fields >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw ParseError(source, line, "expected idx:val, got " + tok);
      const long long j = parse_integer(std::string_view(tok).substr(0, colon), source, line);
      const double v = parse_double(std::string_view(tok).substr(colon + 1), source, line);
      if (j < 0 || static_cast<std::size_t>(j) >= data.dim) {
        throw ParseError(source, line, "index " + std::to_string(j) + " outside dimension");
      }
      if (!idx.empty() && static_cast<std::size_t>(j) <= idx.back()) {
        throw ParseError(source, line, "indices must be strictly increasing (index " +
                                           std::to_string(j) + ")");
      }
      idx.push_back(static_cast<std::size_t>(j));
      val.push_back(v);
    }
    // Explicit zeros are legal input but never stored.
    std::vector<std::size_t> kept_idx;
    std::vector<double> kept_val;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (val[k] != 0.0) {
        kept_idx.push_back(idx[k]);
        kept_val.push_back(val[k]);
      }
    }
    data.examples.push_back(
        {Features(SparseVector(std::move(kept_idx), std::move(kept_val), data.dim)),
         static_cast<int>(label)});
  }
  if (!have_header) throw ParseError(source, 0, "missing '#d=<dim> #k=<classes>' header");
  if (data.examples.empty()) throw ParseError(source, 0, "no examples");
  data.num_classes = declared_k;
  return data;
}

void write_sparse(const Dataset& data, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "#d=" << data.dim << " #k=" << data.num_classes << '\n';
  for (const auto& ex : data.examples) {
    out << ex.label;
    const SparseVector sv = ex.features.is_sparse()
                                ? ex.features.sparse()
                                : SparseVector::from_dense(ex.features.dense());
    for (std::size_t k = 0; k < sv.nnz(); ++k) {
      out << ' ' << sv.indices()[k] << ':' << format_double(sv.values()[k]);
    }
    out << '\n';
  }
}

Dataset synth_centroid(std::size_t n, std::size_t d, double sigma, std::uint64_t seed) {
  if (n == 0 || d == 0) throw PreconditionError("synth_centroid: n and d must be positive");
  if (!(sigma >= 0.0)) throw PreconditionError("synth_centroid: sigma must be nonnegative");
  Rng rng(seed);
  Dataset data;
  data.dim = d;
  data.num_classes = 1;
  data.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    DenseVector x(d);
    for (double& v : x) v = sigma * rng.normal();
    data.examples.push_back({Features(std::move(x)), 0});
  }
  data.provenance = "synth_centroid(n=" + std::to_string(n) + ", d=" + std::to_string(d) +
                    ", sigma=" + format_double(sigma) + ", seed=" + std::to_string(seed) + ")";
  return data;
}

Dataset synth_classification(std::size_t n, std::size_t d, int num_classes, double margin,
                             double sparsity, std::uint64_t seed) {
  if (num_classes < 2 || n < static_cast<std::size_t>(num_classes)) {
    throw PreconditionError("synth_classification: need n >= K >= 2");
  }
  if (d == 0) throw PreconditionError("synth_classification: d must be positive");
  if (!(margin >= 0.0)) throw PreconditionError("synth_classification: margin must be >= 0");
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) {
    throw PreconditionError("synth_classification: sparsity must lie in [0, 1]");
  }
  Rng rng(seed);
  const auto k = static_cast<std::size_t>(num_classes);

  // Random Gaussian centers rescaled so the closest pair sits exactly at `margin`.
  std::vector<DenseVector> centers(k, DenseVector(d));
  for (auto& c : centers) {
    for (double& v : c) v = rng.normal();
  }
  double min_dist = INFINITY;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += (centers[a][j] - centers[b][j]) * (centers[a][j] - centers[b][j]);
      min_dist = std::min(min_dist, std::sqrt(s));
    }
  }
  const double scale = min_dist > 0.0 ? margin / min_dist : 0.0;
  for (auto& c : centers) {
    for (double& v : c) v *= scale;
  }

  Dataset data;
  data.dim = d;
  data.num_classes = num_classes;
  data.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % k;
    DenseVector x(d);
    for (std::size_t j = 0; j < d; ++j) x[j] = centers[label][j] + rng.normal();
    if (sparsity > 0.0) {
      for (double& v : x) {
        if (rng.uniform() < sparsity) v = 0.0;
      }
      data.examples.push_back({Features(SparseVector::from_dense(x)), static_cast<int>(label)});
    } else {
      data.examples.push_back({Features(std::move(x)), static_cast<int>(label)});
    }
  }
  data.provenance = "synth_classification(n=" + std::to_string(n) + ", d=" + std::to_string(d) +
                    ", K=" + std::to_string(num_classes) + ", margin=" + format_double(margin) +
                    ", sparsity=" + format_double(sparsity) + ", seed=" + std::to_string(seed) +
                    ")";
  return data;
}

Dataset unbalance(const Dataset& data, const std::set<int>& drop_labels, double keep_fraction,
                  std::uint64_t seed) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw PreconditionError("unbalance: keep_fraction must lie in (0, 1]");
  }
  Rng rng(seed);
  Dataset out;
  out.dim = data.dim;
  out.num_classes = data.num_classes;
  for (const auto& ex : data.examples) {
    if (drop_labels.count(ex.label) && !(rng.uniform() < keep_fraction)) continue;
    out.examples.push_back(ex);
  }
  if (out.examples.empty()) throw PreconditionError("unbalance: no examples survive");
  out.provenance = data.provenance + " | unbalance(keep=" + format_double(keep_fraction) +
                   ", seed=" + std::to_string(seed) + ")";
  return out;
}

Problem make_problem(const Dataset& data, ProblemKind kind, double l2_lambda) {
  return Problem(kind, data.examples, l2_lambda,
                 kind == ProblemKind::centroid ? 1 : data.num_classes);
}

}  // namespace dasgrad
