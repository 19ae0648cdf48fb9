#include "dasgrad/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "dasgrad/errors.hpp"

namespace dasgrad {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct Reader {
  const std::string& source;
  std::size_t line;

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source, line, what); }

  double real(std::string_view v) const {
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size()) fail("expected a number, got '" + std::string(v) + "'");
    return x;
  }

  std::uint64_t count(std::string_view v) const {
    std::uint64_t x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size()) fail("expected a nonnegative integer, got '" + std::string(v) + "'");
    return x;
  }

  bool flag(std::string_view v) const {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail("expected true/false, got '" + std::string(v) + "'");
  }
};

void apply_problem_key(ExperimentConfig& cfg, std::string_view key, std::string_view value,
                       const Reader& r) {
  ProblemSpec& p = cfg.problem;
  if (key == "problem") {
    try {
      p.kind = parse_problem_kind(value);
    } catch (const ConfigError& e) {
      r.fail(e.what());
    }
  } else if (key == "data") {
    p.data_path = value;
    p.sparse_format = false;
  } else if (key == "sparse_data") {
    p.data_path = value;
    p.sparse_format = true;
  } else if (key == "n") {
    p.n = r.count(value);
  } else if (key == "d") {
    p.d = r.count(value);
  } else if (key == "classes") {
    p.classes = static_cast<int>(r.count(value));
  } else if (key == "sigma") {
    p.sigma = r.real(value);
  } else if (key == "margin") {
    p.margin = r.real(value);
  } else if (key == "sparsity") {
    p.sparsity = r.real(value);
  } else if (key == "data_seed") {
    p.data_seed = r.count(value);
  } else if (key == "lambda") {
    p.l2_lambda = r.real(value);
  } else if (key == "test_n") {
    p.test_n = r.count(value);
  } else if (key == "drop_labels") {
    p.drop_labels.clear();
    for (std::uint64_t label : parse_seed_list(value)) p.drop_labels.insert(static_cast<int>(label));
  } else if (key == "keep_fraction") {
    p.keep_fraction = r.real(value);
  } else if (key == "unbalance_seed") {
    p.unbalance_seed = r.count(value);
  } else if (key == "eval") {
    if (value == "train") {
      p.eval = EvalSet::train;
    } else if (value == "test") {
      p.eval = EvalSet::test;
    } else {
      r.fail("eval must be 'train' or 'test'");
    }
  } else if (key == "steps") {
    cfg.steps = r.count(value);
  } else if (key == "seeds") {
    try {
      cfg.seeds = parse_seed_list(value);
    } catch (const ConfigError& e) {
      r.fail(e.what());
    }
  } else if (key == "metric_tick") {
    cfg.metric_tick = r.count(value);
  } else if (key == "output") {
    cfg.output = std::string(value);
  } else if (key == "threads") {
    cfg.threads = r.count(value);
  } else if (key == "reference_tol") {
    cfg.reference_tol = r.real(value);
  } else if (key == "reference_max_iters") {
    cfg.reference_max_iters = r.count(value);
  } else if (key == "compare_against") {
    cfg.compare_against = value;
  } else {
    r.fail("unknown key '" + std::string(key) + "'");
  }
}

void apply_optimizer_key(NamedOptimizer& opt, std::string_view key, std::string_view value,
                         const Reader& r, double& box_lo, double& box_hi, bool& has_box) {
  OptimizerConfig& c = opt.config;
  if (key == "method") {
    try {
      c.method = parse_method(value);
    } catch (const ConfigError& e) {
      r.fail(e.what());
    }
  } else if (key == "alpha") {
    c.alpha = r.real(value);
  } else if (key == "beta1") {
    c.beta1 = r.real(value);
  } else if (key == "beta2") {
    c.beta2 = r.real(value);
  } else if (key == "beta1_decay") {
    c.beta1_decay = r.real(value);
  } else if (key == "epsilon_div") {
    c.epsilon_div = r.real(value);
  } else if (key == "epsilon_prob") {
    c.epsilon_prob = r.real(value);
  } else if (key == "refresh_period") {
    c.refresh_period = r.count(value);
  } else if (key == "batch_size") {
    c.batch_size = r.count(value);
  } else if (key == "score_mode") {
    if (value == "momentum") {
      c.score_mode = ScoreMode::momentum;
    } else if (value == "gradient") {
      c.score_mode = ScoreMode::gradient;
    } else {
      r.fail("score_mode must be 'momentum' or 'gradient'");
    }
  } else if (key == "frozen_uniform") {
    c.frozen_uniform = r.flag(value);
  } else if (key == "weights") {
    if (value == "training") {
      opt.weights = WeightMode::training;
    } else if (value == "target") {
      opt.weights = WeightMode::target;
    } else {
      r.fail("weights must be 'training' or 'target'");
    }
  } else if (key == "box_lo") {
    box_lo = r.real(value);
    has_box = true;
  } else if (key == "box_hi") {
    box_hi = r.real(value);
    has_box = true;
  } else {
    r.fail("unknown optimizer key '" + std::string(key) + "'");
  }
}

}  // namespace

OptimizerConfig preset_optimizer(Method method, double alpha) {
  OptimizerConfig c;
  c.method = method;
  c.alpha = alpha;
  c.beta1 = 0.9;
  c.beta2 = 0.99;
  c.batch_size = 32;
  c.refresh_period = 10;
  return c;
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  auto number = [&](std::string_view s) {
    s = trim(s);
    std::uint64_t x = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw ConfigError("bad integer list entry '" + std::string(s) + "'");
    }
    return x;
  };
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = trim(text.substr(0, comma));
    if (const auto dots = item.find(".."); dots != std::string_view::npos) {
      const auto lo = number(item.substr(0, dots));
      const auto hi = number(item.substr(dots + 2));
      if (hi < lo) throw ConfigError("empty range '" + std::string(item) + "'");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    } else if (!item.empty()) {
      out.push_back(number(item));
    }
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

ExperimentConfig parse_config(std::string_view text, const std::string& source) {
  ExperimentConfig cfg;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  NamedOptimizer* current = nullptr;
  struct BoxSpec {
    double lo = -kDefaultBoxRadius;
    double hi = kDefaultBoxRadius;
    bool set = false;
  };
  std::vector<BoxSpec> boxes;
  while (std::getline(in, raw)) {
    ++line;
    Reader r{source, line};
    std::string_view s(raw);
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') r.fail("unterminated section header");
      const std::string_view name = trim(s.substr(1, s.size() - 2));
      constexpr std::string_view prefix = "optimizer.";
      if (name.substr(0, prefix.size()) != prefix || name.size() == prefix.size()) {
        r.fail("section must be [optimizer.<name>]");
      }
      NamedOptimizer opt;
      opt.label = name.substr(prefix.size());
      for (const auto& existing : cfg.optimizers) {
        if (existing.label == opt.label) r.fail("duplicate optimizer '" + opt.label + "'");
      }
      // The label doubles as the method when it names one.
      try {
        opt.config = preset_optimizer(parse_method(opt.label));
      } catch (const ConfigError&) {
        opt.config = preset_optimizer(Method::amsgrad);
      }
      cfg.optimizers.push_back(std::move(opt));
      boxes.emplace_back();
      current = &cfg.optimizers.back();
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) r.fail("expected 'key = value'");
    const std::string_view key = trim(s.substr(0, eq));
    const std::string_view value = trim(s.substr(eq + 1));
    if (key.empty()) r.fail("empty key");
    if (current) {
      auto& box = boxes.back();
      apply_optimizer_key(*current, key, value, r, box.lo, box.hi, box.set);
    } else {
      apply_problem_key(cfg, key, value, r);
    }
  }
  // Scalar box bounds expand once the parameter dimension is known; keep them
  // as one-entry vectors until then.
  for (std::size_t k = 0; k < cfg.optimizers.size(); ++k) {
    if (boxes[k].set) cfg.optimizers[k].config.projection = Box{{boxes[k].lo}, {boxes[k].hi}};
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open config");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

void ExperimentConfig::validate() const {
  if (optimizers.empty()) throw ConfigError("config defines no optimizers");
  if (seeds.empty()) throw ConfigError("config defines no seeds");
  if (steps < 1) throw ConfigError("steps must be at least 1");
  if (metric_tick < 1) throw ConfigError("metric_tick must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  for (const auto& opt : optimizers) {
    try {
      opt.config.validate();
    } catch (const ConfigError& e) {
      throw ConfigError("optimizer '" + opt.label + "': " + e.what());
    }
    if (opt.weights == WeightMode::target && problem.test_n == 0) {
      throw ConfigError("optimizer '" + opt.label + "' uses target weights but test_n is 0");
    }
  }
  if (problem.eval == EvalSet::test && problem.test_n == 0) {
    throw ConfigError("eval = test requires test_n > 0");
  }
  if (!(problem.keep_fraction > 0.0 && problem.keep_fraction <= 1.0)) {
    throw ConfigError("keep_fraction must lie in (0, 1]");
  }
  if (!compare_against.empty()) {
    bool found = false;
    for (const auto& opt : optimizers) found |= opt.label == compare_against;
    if (!found) throw ConfigError("compare_against names no optimizer: " + compare_against);
  }
}

}  // namespace dasgrad
