#include "anchor/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "anchor/io.hpp"

namespace anchor::bench {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fixed(double v, int digits) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::vector<std::string_view> split_line(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::vector<std::string_view> lines(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto l : split_line(text, '\n')) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

// Wraps anything thrown while fitting or evaluating one (task, seed) cell.
template <class F>
auto guarded(sim::TaskKind task, std::uint64_t seed, F&& f) -> decltype(f()) {
  const std::string name(sim::to_string(task));
  try {
    return f();
  } catch (const BenchError&) {
    throw;
  } catch (const learn::CalibrationError& e) {
    throw BenchError("calibration_failure", name, seed, e.what());
  } catch (const std::exception& e) {
    throw BenchError("unsolvable_config", name, seed, e.what());
  }
}

void append_method(BenchResult& out, const std::vector<ScenarioResult>& results, double wall_ms,
                   const std::optional<TheoryColumns>& theory) {
  out.scenarios.insert(out.scenarios.end(), results.begin(), results.end());
  BenchRow all = aggregate(results, wall_ms, out.config_hash);
  all.theory = theory;
  out.rows.push_back(all);
  std::vector<ScenarioResult> ood;
  std::copy_if(results.begin(), results.end(), std::back_inserter(ood),
               [](const ScenarioResult& r) { return r.split == sim::Split::OOD; });
  if (!ood.empty()) {
    BenchRow row = aggregate(ood, wall_ms, out.config_hash);
    row.theory = theory;
    out.ood_rows.push_back(row);
  }
}

std::string series_key(const BenchRow& r) {
  return std::string(exp::to_string(r.method)) + "@" + std::to_string(r.demos);
}

// Mean rate over seeds per (task, series), keeping first-seen order.
struct RateTable {
  std::vector<sim::TaskKind> tasks;
  std::vector<std::string> series;
  std::map<std::pair<sim::TaskKind, std::string>, std::pair<double, int>> cells;

  explicit RateTable(const std::vector<BenchRow>& rows) {
    for (const auto& r : rows) {
      if (std::find(tasks.begin(), tasks.end(), r.task) == tasks.end()) tasks.push_back(r.task);
      const std::string key = series_key(r);
      if (std::find(series.begin(), series.end(), key) == series.end()) series.push_back(key);
      auto& cell = cells[{r.task, key}];
      cell.first += r.rate;
      cell.second += 1;
    }
  }

  std::optional<double> mean(sim::TaskKind task, const std::string& key) const {
    const auto it = cells.find({task, key});
    if (it == cells.end()) return std::nullopt;
    return it->second.first / it->second.second;
  }
};

std::string rate_table_md(const std::vector<BenchRow>& rows) {
  const RateTable t(rows);
  std::string s = "| task |";
  for (const auto& k : t.series) s += " " + k + " |";
  s += "\n|---|";
  for (std::size_t i = 0; i < t.series.size(); ++i) s += "---|";
  s += '\n';
  for (const auto task : t.tasks) {
    s += "| " + std::string(sim::to_string(task)) + " |";
    for (const auto& k : t.series) {
      const auto m = t.mean(task, k);
      s += " " + (m ? fixed(*m, 2) : std::string("-")) + " |";
    }
    s += '\n';
  }
  return s;
}

}  // namespace

TheoryColumns columns(const theory::TheoryResult& r) {
  return {r.tr_sigma0, r.tr_sigma_a, r.gap0.gap, r.gap_a.gap, r.gap_a.bound, r.mi_learned.i_s0_sb,
          r.mi_learned.i_s0_sa};
}

BenchRow aggregate(const std::vector<ScenarioResult>& results, double wall_ms, const std::string& config_hash) {
  if (results.empty()) throw std::invalid_argument("aggregate: no scenario results");
  BenchRow row;
  const auto& first = results.front();
  row.task = first.task;
  row.method = first.method;
  row.demos = first.demos;
  row.seed = first.seed;
  row.scenarios = static_cast<int>(results.size());
  long steps = 0;
  for (const auto& r : results) {
    row.successes += r.success() ? 1 : 0;
    steps += r.reduction_steps;
  }
  row.rate = static_cast<double>(row.successes) / row.scenarios;
  row.mean_reduction_steps = static_cast<double>(steps) / row.scenarios;
  row.wall_ms = wall_ms;
  row.config_hash = config_hash;
  return row;
}

std::vector<ScenarioResult> evaluate(const exp::TaskBundle& bundle, exp::Method method, int demos,
                                     const std::vector<exp::Scenario>& scenarios, int max_reductions,
                                     std::uint64_t seed) {
  std::vector<ScenarioResult> out(scenarios.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto trace = exp::run_method(method, bundle, scenarios[i], max_reductions, seed);
    auto& r = out[i];
    r.task = bundle.task;
    r.method = method;
    r.demos = demos;
    r.seed = seed;
    r.scenario = scenarios[i].index;
    r.split = scenarios[i].split;
    r.outcome = trace.outcome;
    r.reduction_steps = static_cast<int>(trace.reduction_steps.size());
  }
  return out;
}

void run_bench(const exp::ExperimentConfig& cfg, BenchResult& out, bool with_theory) {
  cfg.validate();
  out.config_hash = cfg.hash();
  for (const auto seed : cfg.seeds) {
    const auto play = exp::make_play(cfg, seed);
    for (const auto task : cfg.tasks) {
      guarded(task, seed, [&] {
        const auto bundle = exp::train_task(task, cfg, seed, play, cfg.expert_demos);
        std::optional<TheoryColumns> cols;
        if (with_theory) {
          out.theory.push_back(theory::run_theory(bundle, cfg, seed));
          cols = columns(out.theory.back());
        }
        const auto scenarios = exp::make_scenarios(task, cfg.scenarios, cfg.ood_fraction, cfg, seed);
        for (const auto method : exp::kAllMethods) {
          const auto t0 = Clock::now();
          const auto results = evaluate(bundle, method, cfg.expert_demos, scenarios, cfg.max_reductions, seed);
          append_method(out, results, elapsed_ms(t0), cols);
        }
      });
    }
  }
}

void run_sweep(const exp::ExperimentConfig& cfg, BenchResult& out) {
  cfg.validate();
  out.config_hash = cfg.hash();
  for (const auto seed : cfg.seeds) {
    const auto play = exp::make_play(cfg, seed);
    for (const auto task : cfg.tasks) {
      guarded(task, seed, [&] {
        auto bundle = exp::train_task(task, cfg, seed, play, cfg.expert_demos);
        const auto scenarios = exp::make_scenarios(task, cfg.scenarios, cfg.ood_fraction, cfg, seed);
        for (const int demos : cfg.sweep_demos) {
          const auto t0 = Clock::now();
          exp::TaskBundle direct = bundle;
          direct.models.base = learn::fit_base(exp::make_expert_demos(task, demos, cfg, seed), cfg.lambda_base);
          const auto results = evaluate(direct, exp::Method::Direct, demos, scenarios, cfg.max_reductions, seed);
          append_method(out, results, elapsed_ms(t0), std::nullopt);
        }
        const auto t0 = Clock::now();
        const auto results =
            evaluate(bundle, exp::Method::Reset, cfg.expert_demos, scenarios, cfg.max_reductions, seed);
        append_method(out, results, elapsed_ms(t0), std::nullopt);
      });
    }
  }
}

std::vector<theory::TheoryResult> run_theory_all(const exp::ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<theory::TheoryResult> out;
  for (const auto seed : cfg.seeds) {
    const auto play = exp::make_play(cfg, seed);
    for (const auto task : cfg.tasks)
      out.push_back(guarded(task, seed, [&] {
        return theory::run_theory(exp::train_task(task, cfg, seed, play, cfg.expert_demos), cfg, seed);
      }));
  }
  return out;
}

// --- reports -------------------------------------------------------------------

const std::vector<std::string_view> kCsvHeader = {
    "task",  "method", "demos", "seed",  "scenarios", "successes", "rate",  "mean_reduction_steps", "tr_sigma0",
    "tr_sigma_a", "gap0", "gap_a", "bound", "mi_sb",     "mi_sa",     "wall_ms", "config_hash"};

const std::vector<std::string_view> kScenarioCsvHeader = {
    "task", "method", "demos", "seed", "scenario", "split", "outcome", "success", "reduction_steps", "config_hash"};

namespace {

std::string header_line(const std::vector<std::string_view>& h) {
  std::string s;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i) s += ',';
    s += h[i];
  }
  return s + '\n';
}

}  // namespace

std::string rows_csv(const std::vector<BenchRow>& rows) {
  std::string s = header_line(kCsvHeader);
  for (const auto& r : rows) {
    s += std::string(sim::to_string(r.task)) + "," + std::string(exp::to_string(r.method)) + "," +
         std::to_string(r.demos) + "," + std::to_string(r.seed) + "," + std::to_string(r.scenarios) + "," +
         std::to_string(r.successes) + "," + io::format_double(r.rate) + "," +
         io::format_double(r.mean_reduction_steps) + ",";
    if (r.theory) {
      const auto& t = *r.theory;
      for (const double v : {t.tr_sigma0, t.tr_sigma_a, t.gap0, t.gap_a, t.bound, t.mi_sb, t.mi_sa})
        s += io::format_double(v) + ",";
    } else {
      s += ",,,,,,,";
    }
    s += fixed(r.wall_ms, 3) + "," + r.config_hash + "\n";
  }
  return s;
}

std::vector<BenchRow> parse_rows_csv(std::string_view text) {
  const auto ls = lines(text);
  const std::string header = header_line(kCsvHeader);
  if (ls.empty() || ls.front() != std::string_view(header).substr(0, header.size() - 1))
    throw io::FormatError("results CSV header does not match the expected schema");
  std::vector<BenchRow> rows;
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const auto f = split_line(ls[i], ',');
    if (f.size() != kCsvHeader.size()) throw io::FormatError("results CSV row " + std::to_string(i) + " malformed");
    const auto integer = [](std::string_view v) {
      long long x = 0;
      const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
      if (ec != std::errc() || ptr != v.data() + v.size()) throw io::FormatError("bad integer: " + std::string(v));
      return x;
    };
    BenchRow r;
    r.task = sim::parse_task(f[0]);
    r.method = exp::parse_method(f[1]);
    r.demos = static_cast<int>(integer(f[2]));
    r.seed = static_cast<std::uint64_t>(integer(f[3]));
    r.scenarios = static_cast<int>(integer(f[4]));
    r.successes = static_cast<int>(integer(f[5]));
    r.rate = io::parse_double(f[6]);
    r.mean_reduction_steps = io::parse_double(f[7]);
    if (!f[8].empty()) {
      TheoryColumns t;
      double* dst[] = {&t.tr_sigma0, &t.tr_sigma_a, &t.gap0, &t.gap_a, &t.bound, &t.mi_sb, &t.mi_sa};
      for (int k = 0; k < 7; ++k) *dst[k] = io::parse_double(f[8 + static_cast<std::size_t>(k)]);
      r.theory = t;
    }
    r.wall_ms = io::parse_double(f[15]);
    r.config_hash = std::string(f[16]);
    rows.push_back(r);
  }
  return rows;
}

std::string scenarios_csv(const std::vector<ScenarioResult>& results, const std::string& config_hash) {
  std::string s = header_line(kScenarioCsvHeader);
  for (const auto& r : results) {
    s += std::string(sim::to_string(r.task)) + "," + std::string(exp::to_string(r.method)) + "," +
         std::to_string(r.demos) + "," + std::to_string(r.seed) + "," + std::to_string(r.scenario) + "," +
         std::string(sim::to_string(r.split)) + "," + std::string(rollout::to_string(r.outcome)) + "," +
         (r.success() ? "1" : "0") + "," + std::to_string(r.reduction_steps) + "," + config_hash + "\n";
  }
  return s;
}

std::string strip_timing(std::string_view csv) {
  const auto ls = lines(csv);
  if (ls.empty()) return {};
  const auto head = split_line(ls.front(), ',');
  const auto it = std::find(head.begin(), head.end(), std::string_view("wall_ms"));
  const std::size_t drop = static_cast<std::size_t>(it - head.begin());
  std::string out;
  for (const auto l : ls) {
    const auto f = split_line(l, ',');
    bool first = true;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i == drop) continue;
      if (!first) out += ',';
      out += f[i];
      first = false;
    }
    out += '\n';
  }
  return out;
}

std::string markdown_report(const std::vector<BenchRow>& rows, const std::vector<BenchRow>& ood_rows,
                            const std::string& config_hash) {
  std::string s = "# Benchmark report\n\nconfig hash: `" + config_hash + "`\n\n";
  std::vector<std::uint64_t> seeds;
  for (const auto& r : rows)
    if (std::find(seeds.begin(), seeds.end(), r.seed) == seeds.end()) seeds.push_back(r.seed);
  s += "seeds:";
  for (const auto seed : seeds) s += " " + std::to_string(seed);
  s += "\n\n## Success rate, all scenarios (mean over seeds)\n\n" + rate_table_md(rows);
  if (!ood_rows.empty()) s += "\n## Success rate, shifted scenarios only\n\n" + rate_table_md(ood_rows);

  bool any = false;
  std::string t =
      "\n## Spread, gap and information\n\n"
      "| task | seed | tr_sigma0 | tr_sigma_a | gap0 | gap_a | bound | mi_sb | mi_sa |\n"
      "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    if (!r.theory || r.method != exp::Method::Reset) continue;
    any = true;
    const auto& c = *r.theory;
    t += "| " + std::string(sim::to_string(r.task)) + " | " + std::to_string(r.seed) + " | " + fixed(c.tr_sigma0, 4) +
         " | " + fixed(c.tr_sigma_a, 4) + " | " + fixed(c.gap0, 4) + " | " + fixed(c.gap_a, 4) + " | " +
         fixed(c.bound, 4) + " | " + fixed(c.mi_sb, 3) + " | " + fixed(c.mi_sa, 3) + " |\n";
  }
  if (any) s += t;
  return s;
}

std::string svg_bars(const std::vector<BenchRow>& rows, const std::string& title) {
  const RateTable t(rows);
  static const char* kColors[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3"};
  const int bar_w = 18, gap = 28, left = 50, top = 40, plot_h = 200, legend_h = 20;
  const int group_w = static_cast<int>(t.series.size()) * bar_w + gap;
  const int width = left + static_cast<int>(t.tasks.size()) * group_w + 20;
  const int height = top + plot_h + 40 + legend_h * static_cast<int>(t.series.size());
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<text x=\"" << left << "\" y=\"20\" font-size=\"13\">" << title << "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double y = top + plot_h - plot_h * k / 4.0;
    o << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << width - 10 << "\" y2=\"" << y
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << fixed(k / 4.0, 2)
      << "</text>\n";
  }
  for (std::size_t g = 0; g < t.tasks.size(); ++g) {
    const int x0 = left + static_cast<int>(g) * group_w + gap / 2;
    for (std::size_t k = 0; k < t.series.size(); ++k) {
      const auto m = t.mean(t.tasks[g], t.series[k]);
      if (!m) continue;
      const double h = plot_h * *m;
      o << "<rect x=\"" << x0 + static_cast<int>(k) * bar_w << "\" y=\"" << fixed(top + plot_h - h, 2)
        << "\" width=\"" << bar_w - 2 << "\" height=\"" << fixed(h, 2) << "\" fill=\"" << kColors[k % 7]
        << "\"/>\n";
    }
    o << "<text x=\"" << x0 + static_cast<int>(t.series.size()) * bar_w / 2 << "\" y=\"" << top + plot_h + 16
      << "\" text-anchor=\"middle\">" << sim::to_string(t.tasks[g]) << "</text>\n";
  }
  for (std::size_t k = 0; k < t.series.size(); ++k) {
    const int y = top + plot_h + 34 + legend_h * static_cast<int>(k);
    o << "<rect x=\"" << left << "\" y=\"" << y - 10 << "\" width=\"12\" height=\"12\" fill=\"" << kColors[k % 7]
      << "\"/><text x=\"" << left + 18 << "\" y=\"" << y << "\">" << t.series[k] << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_outputs(const std::filesystem::path& dir, const std::string& prefix, const BenchResult& result) {
  std::filesystem::create_directories(dir);
  io::write_file(dir / (prefix + "results.csv"), rows_csv(result.rows));
  io::write_file(dir / (prefix + "results_ood.csv"), rows_csv(result.ood_rows));
  io::write_file(dir / (prefix + "scenarios.csv"), scenarios_csv(result.scenarios, result.config_hash));
  io::write_file(dir / (prefix + "report.md"), markdown_report(result.rows, result.ood_rows, result.config_hash));
  if (!result.rows.empty()) {
    io::write_file(dir / (prefix + "success.svg"),
                   svg_bars(result.rows, "Success rate, all scenarios (" + result.config_hash + ")"));
  }
  if (!result.ood_rows.empty()) {
    io::write_file(dir / (prefix + "success_ood.svg"),
                   svg_bars(result.ood_rows, "Success rate, shifted scenarios (" + result.config_hash + ")"));
  }
  if (!result.theory.empty()) {
    std::ofstream out(dir / (prefix + "theory.rec"));
    for (const auto& r : result.theory) {
      io::Record head("theory");
      head.set("task", std::string(sim::to_string(r.task)))
          .set("seed", r.seed)
          .set("n", r.n)
          .set("tr_sigma0", r.tr_sigma0)
          .set("tr_sigma_a", r.tr_sigma_a)
          .set("tr_sigma_oracle", r.tr_sigma_oracle)
          .set("anchor_learned", r.anchor_learned ? 1 : 0)
          .set("anchor_oracle", r.anchor_oracle ? 1 : 0)
          .set("dpi_learned", r.dpi_learned ? 1 : 0)
          .set("dpi_oracle", r.dpi_oracle ? 1 : 0)
          .set("config_hash", result.config_hash);
      out << head.line() << '\n';
      out << io::gap_record(r.gap0).set("from", std::string("S0")).line() << '\n';
      out << io::gap_record(r.gap_a).set("from", std::string("Sa")).line() << '\n';
      out << io::mi_record(r.mi_learned).set("reduction", std::string("learned")).line() << '\n';
      out << io::mi_record(r.mi_oracle).set("reduction", std::string("oracle")).line() << '\n';
    }
  }
}

}  // namespace anchor::bench
