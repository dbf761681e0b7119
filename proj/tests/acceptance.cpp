// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "anchor/bench.hpp"
#include "anchor/datagen.hpp"
#include "anchor/experiment.hpp"
#include "anchor/gap.hpp"
#include "anchor/learn.hpp"
#include "anchor/theory.hpp"

using namespace anchor;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Verdict()>& check) {
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  if (!v.pass) ++failures;
  std::printf("%s criterion %d (%s): %s\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), v.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

exp::TaskBundle train(sim::TaskKind task, const exp::ExperimentConfig& cfg, std::uint64_t seed) {
  return exp::train_task(task, cfg, seed, exp::make_play(cfg, seed), cfg.expert_demos);
}

double rate(const std::vector<bench::ScenarioResult>& rs) {
  int ok = 0;
  for (const auto& r : rs) ok += r.success() ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(rs.size());
}

// Where the moved object's keypoints end up under a primitive.
std::vector<Vec2> endpoints(const sim::ActionPrimitive& a, const std::vector<Vec2>& kp) {
  std::vector<Vec2> out;
  for (const auto& k : kp) {
    if (a.cls == sim::PrimitiveClass::Rotate) out.push_back(a.start() + rotate(k - a.start(), a.p[2]));
    else out.push_back(k + (a.end() - a.start()));
  }
  return out;
}

// Worst-case workspace error between predicted and commanded primitives: the
// grasp point, plus the end positions of the moved object's keypoints.
double endpoint_error(const sim::ActionPrimitive& pred, const sim::ActionPrimitive& truth,
                      const sim::Observation& obs, int track) {
  std::vector<Vec2> kp;
  for (const auto& k : obs.keypoints)
    if (k.track == track) kp.push_back(k.point);
  double err = distance(pred.start(), truth.start());
  const auto a = endpoints(pred, kp);
  const auto b = endpoints(truth, kp);
  for (std::size_t i = 0; i < a.size(); ++i) err = std::max(err, distance(a[i], b[i]));
  return err;
}

}  // namespace

int main() {
  const exp::ExperimentConfig base_cfg;

  report(1, "anchor condition", [&] {
    const auto bundle = train(sim::TaskKind::RevealPick, base_cfg, 7);
    const auto t0 = Clock::now();
    const auto s = theory::measure_spread(bundle, base_cfg, 1000, 7);
    const double secs = seconds_since(t0);
    const bool ok = s.tr_sigma_oracle <= 0.8 * s.tr_sigma0 && s.tr_sigma_a <= 0.8 * s.tr_sigma0 && secs < 30.0;
    return Verdict{ok, fmt("tr0=%.4f oracle=%.4f (%.0f%% lower) learned=%.4f (%.0f%% lower), %.1fs", s.tr_sigma0,
                           s.tr_sigma_oracle, 100 * (1 - s.tr_sigma_oracle / s.tr_sigma0), s.tr_sigma_a,
                           100 * (1 - s.tr_sigma_a / s.tr_sigma0), secs)};
  });

  report(2, "gap reduction", [&] {
    auto cfg = base_cfg;
    cfg.theory_test = 1000;
    const auto t0 = Clock::now();
    int wins = 0;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto r = theory::run_theory(train(sim::TaskKind::RevealPick, cfg, seed), cfg, seed);
      wins += r.gap_a.gap < r.gap0.gap ? 1 : 0;
      detail += fmt(" s%d:%.4f->%.4f", static_cast<int>(seed), r.gap0.gap, r.gap_a.gap);
    }
    const double secs = seconds_since(t0);
    return Verdict{wins >= 4 && secs < 60.0, fmt("%d/5 seeds lower,", wins) + detail + fmt(", %.1fs", secs)};
  });

  report(3, "rademacher formula", [&] {
    Eigen::MatrixXd one(1, 2);
    one << 3, 4;
    const double hand = gap::rademacher_linear(one, 1.0);
    auto rows = [](int n, std::uint64_t seed) {
      Rng rng(seed);
      std::vector<sim::WorldState> states;
      for (int i = 0; i < n; ++i)
        states.push_back(sim::sample_scenario(sim::TaskKind::RevealPick, sim::Split::OOD, rng));
      return gap::to_samples(states).vectors;
    };
    const double r500 = gap::rademacher_linear(rows(500, 1), 1.0);
    const double r2000 = gap::rademacher_linear(rows(2000, 2), 1.0);
    const double ratio = r2000 / r500;
    const bool ok = hand == 5.0 && std::abs(ratio - 0.5) <= 0.05;
    return Verdict{ok, fmt("{(3,4)} -> %.17g; R(2000)/R(500)=%.4f (expected 0.5 +-10%%)", hand, ratio)};
  });

  report(4, "bound sanity", [&] {
    int covered = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      const auto g = theory::designed_trial(seed, 50, 1000);
      covered += g.bound >= std::abs(g.gap) ? 1 : 0;
      worst = std::max(worst, std::abs(g.gap) / g.bound);
    }
    return Verdict{covered >= 90, fmt("%d/100 trials with 2R >= |gap|, max |gap|/bound=%.3f", covered, worst)};
  });

  report(5, "data processing", [&] {
    auto cfg = base_cfg;
    cfg.mi_samples = 2000;
    cfg.mi_bins = 8;
    bool ok = true;
    std::string detail;
    for (const auto task : sim::kAllTasks) {
      const auto r = theory::run_theory(train(task, cfg, 7), cfg, 7);
      ok = ok && r.dpi_learned && r.dpi_oracle && r.mi_learned.n == 2000 && r.mi_learned.bins == 8;
      detail += fmt(" %s: I(S0;Sb|G)=%.3f learned=%.3f oracle=%.3f;", std::string(sim::to_string(task)).c_str(),
                    r.mi_learned.i_s0_sb, r.mi_learned.i_s0_sa, r.mi_oracle.i_s0_sa);
    }
    return Verdict{ok, "bits," + detail};
  });

  report(6, "score labels", [&] {
    bool labels = true;
    for (int T = 2; T <= 200; ++T) {
      const double beta = T - 1;
      const auto c = data::label_scores(T, base_cfg.alpha, beta);
      for (int t = 1; t < T; ++t) labels = labels && c[t] < c[t - 1];
      for (int t = 1; t + 1 < T; ++t)
        labels = labels && std::abs(c[t + 1] - 2 * c[t] + c[t - 1] + 2.0 / (beta * beta)) <= 1e-12;
    }
    bool sep = true;
    std::string detail;
    for (const auto task : sim::kAllTasks) {
      const auto bundle = train(task, base_cfg, 7);
      const auto held = exp::calibration_sets(task, 100, base_cfg, 1007);
      int a_ok = 0, n_ok = 0;
      for (const auto& o : held.anchor) a_ok += learn::score(bundle.models.score, o) < bundle.models.threshold;
      for (const auto& o : held.non_anchor) n_ok += learn::score(bundle.models.score, o) >= bundle.models.threshold;
      const double fa = static_cast<double>(a_ok) / held.anchor.size();
      const double fn = static_cast<double>(n_ok) / held.non_anchor.size();
      sep = sep && fa >= 0.9 && fn >= 0.9;
      detail += fmt(" %s %.0f%%/%.0f%%", std::string(sim::to_string(task)).c_str(), 100 * fa, 100 * fn);
    }
    return Verdict{labels && sep, std::string(labels ? "labels ok;" : "labels BAD;") + " held-out anchor/non-anchor" + detail};
  });

  report(7, "flow pipeline", [&] {
    Rng rng(17);
    double worst_ds = 0.0;
    bool endpoints_ok = true;
    for (int trial = 0; trial < 100; ++trial) {
      const int frames = 2 + rng.index(150);
      const int points = 1 + rng.index(10);
      data::PointFlow f(frames, points);
      for (int p = 0; p < points; ++p) {
        const Vec2 a{rng.uniform(0, 1), rng.uniform(0, 1)};
        const Vec2 v{rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01)};
        for (int t = 0; t < frames; ++t) f.set(t, p, a + v * static_cast<double>(t));
      }
      const auto d = data::downsample_flow(f);
      for (int p = 0; p < points; ++p) {
        endpoints_ok = endpoints_ok && d.at(0, p) == f.at(0, p) && d.at(d.frames - 1, p) == f.at(frames - 1, p);
        for (int k = 0; k < d.frames; ++k) {
          const double s = k / static_cast<double>(d.frames - 1);
          worst_ds = std::max(worst_ds, distance(d.at(k, p), lerp(f.at(0, p), f.at(frames - 1, p), s)));
        }
      }
    }
    double worst_angle = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<Vec2> from, to;
      const double th = rng.uniform(-std::numbers::pi + 1e-6, std::numbers::pi);
      const Vec2 c{rng.uniform(0, 1), rng.uniform(0, 1)};
      for (int i = 0; i < 5; ++i) {
        const Vec2 p{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)};
        from.push_back(p);
        to.push_back(rotate(p, th) + c);
      }
      worst_angle = std::max(worst_angle, std::abs(normalize_angle(procrustes_angle(from, to) - th)));
    }
    const bool ok = worst_ds <= 1e-12 && endpoints_ok && worst_angle <= 1e-9;
    return Verdict{ok, fmt("downsample max error %.2e, endpoints %s, procrustes max error %.2e", worst_ds,
                           endpoints_ok ? "exact" : "NOT exact", worst_angle)};
  });

  report(8, "reduction policy", [&] {
    Rng rng(23);
    const auto play = data::gen_play(300, rng);
    const std::vector<data::PlayRecord> train_set(play.begin(), play.begin() + 240);
    const std::vector<data::PlayRecord> test_set(play.begin() + 240, play.end());
    learn::ReductionOptions opts;
    opts.lambda_cls = base_cfg.lambda_cls;
    opts.lambda_reg = base_cfg.lambda_reg;
    const auto model = learn::fit_reduction(train_set, opts);
    int correct = 0, close = 0;
    for (const auto& r : test_set) {
      const auto a = learn::predict_primitive(model, r.flow, r.pre_observation);
      correct += a.cls == r.primitive.cls ? 1 : 0;
      close += a.cls == r.primitive.cls && endpoint_error(a, r.primitive, r.pre_observation, r.moved_id) <= 0.05;
    }
    const double acc = static_cast<double>(correct) / test_set.size();
    const double near = static_cast<double>(close) / test_set.size();
    return Verdict{acc >= 0.95 && near >= 0.9,
                   fmt("class accuracy %.1f%%, endpoint error <= 0.05 on %.1f%% of %d held-out", 100 * acc,
                       100 * near, static_cast<int>(test_set.size()))};
  });

  report(9, "end-to-end direction", [&] {
    auto cfg = base_cfg;
    bool ok = true;
    std::string detail;
    for (const auto task : sim::kAllTasks) {
      const auto bundle = train(task, cfg, 7);
      const auto ood = exp::make_scenarios(task, 100, 1.0, cfg, 7);
      const double reset = rate(bench::evaluate(bundle, exp::Method::Reset, 20, ood, cfg.max_reductions, 7));
      const double direct = rate(bench::evaluate(bundle, exp::Method::Direct, 20, ood, cfg.max_reductions, 7));
      const auto shifted = exp::make_shifted_scenarios(bundle, 100, 0.15, 7);
      const double rs = rate(bench::evaluate(bundle, exp::Method::Reset, 20, shifted, cfg.max_reductions, 7));
      const double ns = rate(bench::evaluate(bundle, exp::Method::Naive, 20, shifted, cfg.max_reductions, 7));
      ok = ok && reset - direct >= 0.30 && rs > ns;
      detail += fmt(" %s reset %.2f direct %.2f | shifted reset %.2f naive %.2f;",
                    std::string(sim::to_string(task)).c_str(), reset, direct, rs, ns);
    }
    const auto t0 = Clock::now();
    bench::BenchResult full;
    bench::run_bench(cfg, full);
    const double secs = seconds_since(t0);
    ok = ok && secs < 600.0;
    return Verdict{ok, detail + fmt(" full bench %.1fs", secs)};
  });

  report(10, "data efficiency", [&] {
    auto cfg = base_cfg;
    cfg.scenarios = 100;
    cfg.ood_fraction = 1.0;
    cfg.seeds = {7, 8, 9};
    cfg.sweep_demos = {60};
    bench::BenchResult out;
    bench::run_sweep(cfg, out);
    bool ok = true;
    std::string detail;
    for (const auto task : sim::kAllTasks) {
      int wins = 0;
      for (const auto seed : cfg.seeds) {
        double reset = -1, direct = -1;
        for (const auto& row : out.ood_rows) {
          if (row.task != task || row.seed != seed) continue;
          if (row.method == exp::Method::Reset && row.demos == 20) reset = row.rate;
          if (row.method == exp::Method::Direct && row.demos == 60) direct = row.rate;
        }
        wins += reset >= 0 && direct >= 0 && reset >= direct ? 1 : 0;
        detail += fmt(" %s/%d %.2f vs %.2f", std::string(sim::to_string(task)).c_str(), static_cast<int>(seed),
                      reset, direct);
      }
      ok = ok && wins >= 2;
    }
    return Verdict{ok, "reset@20 vs direct@60 on shifted scenes:" + detail};
  });

  report(11, "determinism", [&] {
    bench::BenchResult a, b;
    bench::run_bench(base_cfg, a);
    bench::run_bench(base_cfg, b);
    const bool rows = bench::strip_timing(bench::rows_csv(a.rows)) == bench::strip_timing(bench::rows_csv(b.rows));
    const bool ood =
        bench::strip_timing(bench::rows_csv(a.ood_rows)) == bench::strip_timing(bench::rows_csv(b.ood_rows));
    const bool sc = bench::scenarios_csv(a.scenarios, a.config_hash) == bench::scenarios_csv(b.scenarios, b.config_hash);
    return Verdict{rows && ood && sc, fmt("results %s, shifted results %s, per-scenario %s", rows ? "identical" : "DIFFER",
                                          ood ? "identical" : "DIFFER", sc ? "identical" : "DIFFER")};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
