#include "anchor/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "anchor/config.hpp"
#include "anchor/features.hpp"

namespace anchor::io {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string join_doubles(const double* v, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

std::vector<double> parse_doubles(std::string_view s) {
  std::vector<double> out;
  for (const auto part : split(s, ',')) out.push_back(parse_double(part));
  return out;
}

int parse_int(std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError("bad integer: " + std::string(s));
  return v;
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw FormatError("cannot open " + p.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

std::string vec2_text(Vec2 v) { return format_double(v.x) + "," + format_double(v.y); }

Vec2 parse_vec2(std::string_view s) {
  const auto v = parse_doubles(s);
  if (v.size() != 2) throw FormatError("expected two coordinates: " + std::string(s));
  return {v[0], v[1]};
}

void write_ridge(std::ostream& out, Record r, const learn::Ridge& ridge) {
  r.set("lambda", ridge.lambda).set("weights", ridge.weights);
  if (ridge.centered()) r.set("x_mean", ridge.x_mean).set("y_mean", ridge.y_mean);
  out << r.line() << '\n';
}

learn::Ridge ridge_from(const Record& r) {
  learn::Ridge ridge;
  ridge.lambda = r.num("lambda");
  ridge.weights = r.mat("weights");
  if (r.has("x_mean")) {
    ridge.x_mean = r.vec("x_mean");
    ridge.y_mean = r.vec("y_mean");
  }
  return ridge;
}

void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want)
    throw FormatError(std::string("model dimension mismatch in ") + what + ": expected " + std::to_string(want) +
                      ", found " + std::to_string(got));
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError("bad number: " + std::string(s));
  return v;
}

// --- Record ------------------------------------------------------------------------

Record& Record::set(const std::string& key, std::string value) {
  if (value.find_first_of(" \t\n") != std::string::npos) throw std::invalid_argument("record value has whitespace");
  const auto it = fields_.find(key);
  if (it != fields_.end()) {
    order_[it->second].second = std::move(value);
  } else {
    fields_[key] = order_.size();
    order_.emplace_back(key, std::move(value));
  }
  return *this;
}

Record& Record::set(const std::string& key, double value) { return set(key, format_double(value)); }
Record& Record::set(const std::string& key, int value) { return set(key, std::to_string(value)); }
Record& Record::set(const std::string& key, std::uint64_t value) { return set(key, std::to_string(value)); }

Record& Record::set(const std::string& key, const Eigen::VectorXd& value) {
  return set(key, join_doubles(value.data(), static_cast<std::size_t>(value.size())));
}

Record& Record::set(const std::string& key, const Eigen::MatrixXd& value) {
  std::vector<double> rowmajor;
  rowmajor.reserve(static_cast<std::size_t>(value.size()));
  for (Eigen::Index i = 0; i < value.rows(); ++i)
    for (Eigen::Index j = 0; j < value.cols(); ++j) rowmajor.push_back(value(i, j));
  return set(key, std::to_string(value.rows()) + "x" + std::to_string(value.cols()) + ":" +
                      join_doubles(rowmajor.data(), rowmajor.size()));
}

const std::string& Record::str(const std::string& key) const {
  const auto it = fields_.find(key);
  if (it == fields_.end()) throw FormatError("record '" + tag_ + "' lacks field '" + key + "'");
  return order_[it->second].second;
}

double Record::num(const std::string& key) const { return parse_double(str(key)); }
int Record::integer(const std::string& key) const { return parse_int(str(key)); }

std::uint64_t Record::u64(const std::string& key) const {
  const std::string& s = str(key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError("bad integer: " + s);
  return v;
}

Eigen::VectorXd Record::vec(const std::string& key) const {
  const auto v = parse_doubles(str(key));
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd Record::mat(const std::string& key) const {
  const std::string& s = str(key);
  const auto colon = s.find(':');
  const auto x = s.find('x');
  if (colon == std::string::npos || x == std::string::npos || x > colon) throw FormatError("bad matrix: " + key);
  const int rows = parse_int(std::string_view(s).substr(0, x));
  const int cols = parse_int(std::string_view(s).substr(x + 1, colon - x - 1));
  const auto v = parse_doubles(std::string_view(s).substr(colon + 1));
  if (static_cast<long>(v.size()) != static_cast<long>(rows) * cols) throw FormatError("matrix size mismatch: " + key);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = v[static_cast<std::size_t>(i * cols + j)];
  return m;
}

std::string Record::line() const {
  std::string s = tag_;
  for (const auto& [k, v] : order_) {
    s += ' ';
    s += k;
    s += '=';
    s += v;
  }
  return s;
}

Record Record::parse(std::string_view line) {
  Record r;
  bool first = true;
  for (const auto tok : split(line, ' ')) {
    if (tok.empty()) continue;
    if (first) {
      r.tag_ = std::string(tok);
      first = false;
      continue;
    }
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos) throw FormatError("field without '=': " + std::string(tok));
    r.set(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
  }
  if (first) throw FormatError("empty record");
  return r;
}

Record next_record(std::istream& in, std::string_view expected) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Record r = Record::parse(line);
    if (!expected.empty() && r.tag() != expected)
      throw FormatError("expected '" + std::string(expected) + "' record, found '" + r.tag() + "'");
    return r;
  }
  throw FormatError("unexpected end of input" +
                    (expected.empty() ? std::string() : " while reading '" + std::string(expected) + "'"));
}

// --- scenes --------------------------------------------------------------------------

void write_scene(std::ostream& out, const sim::WorldState& s) {
  const auto& g = s.goal;
  Record head("scene");
  head.set("task", std::string(sim::to_string(g.task)))
      .set("target_id", g.target_id)
      .set("container_id", g.container_id)
      .set("r_succ", g.r_succ)
      .set("theta_lo", g.theta_lo)
      .set("theta_hi", g.theta_hi)
      .set("zone", vec2_text(g.zone))
      .set("instruction", g.instruction)
      .set("other_id", g.other_id)
      .set("other_start", vec2_text(g.other_start))
      .set("sigma_act", s.env.sigma_act)
      .set("sigma_obs", s.env.sigma_obs)
      .set("grasp_radius", s.env.grasp_radius)
      .set("objects", static_cast<int>(s.objects.size()));
  std::string cover;
  for (const auto& [covered, coverer] : s.covered_by) {
    if (!cover.empty()) cover += ',';
    cover += std::to_string(covered) + ":" + std::to_string(coverer);
  }
  head.set("covered_by", cover);
  out << head.line() << '\n';
  for (const auto& o : s.objects) {
    Record r("object");
    r.set("id", o.spec.id)
        .set("class", std::string(sim::to_string(o.spec.cls)))
        .set("shape", std::string(o.spec.shape.kind == sim::ShapeKind::Circle ? "Circle" : "Rect"))
        .set("a", o.spec.shape.a)
        .set("b", o.spec.shape.b)
        .set("graspable", o.spec.graspable ? 1 : 0)
        .set("movable", o.spec.movable ? 1 : 0)
        .set("x", o.pose.x)
        .set("y", o.pose.y)
        .set("theta", o.pose.theta)
        .set("layer", o.layer);
    out << r.line() << '\n';
  }
}

sim::WorldState read_scene(std::istream& in) {
  const Record head = next_record(in, "scene");
  sim::WorldState s;
  auto& g = s.goal;
  g.task = sim::parse_task(head.str("task"));
  g.target_id = head.integer("target_id");
  g.container_id = head.integer("container_id");
  g.r_succ = head.num("r_succ");
  g.theta_lo = head.num("theta_lo");
  g.theta_hi = head.num("theta_hi");
  g.zone = parse_vec2(head.str("zone"));
  g.instruction = head.integer("instruction");
  g.other_id = head.integer("other_id");
  g.other_start = parse_vec2(head.str("other_start"));
  s.env.sigma_act = head.num("sigma_act");
  s.env.sigma_obs = head.num("sigma_obs");
  s.env.grasp_radius = head.num("grasp_radius");
  for (const auto pair : split(head.str("covered_by"), ',')) {
    const auto parts = split(pair, ':');
    if (parts.size() != 2) throw FormatError("bad covered_by entry");
    s.covered_by[parse_int(parts[0])] = parse_int(parts[1]);
  }
  const int n = head.integer("objects");
  for (int i = 0; i < n; ++i) {
    const Record r = next_record(in, "object");
    sim::SceneObject o;
    o.spec.id = r.integer("id");
    if (o.spec.id != i) throw FormatError("object ids must be 0..n-1 in order");
    o.spec.cls = sim::parse_object_class(r.str("class"));
    const std::string& shape = r.str("shape");
    if (shape != "Circle" && shape != "Rect") throw FormatError("unknown shape: " + shape);
    o.spec.shape = {shape == "Circle" ? sim::ShapeKind::Circle : sim::ShapeKind::Rect, r.num("a"), r.num("b")};
    o.spec.graspable = r.integer("graspable") != 0;
    o.spec.movable = r.integer("movable") != 0;
    o.pose = {r.num("x"), r.num("y"), r.num("theta")};
    o.layer = r.integer("layer");
    s.objects.push_back(o);
  }
  return s;
}

// --- flows, primitives, observations -----------------------------------------------

Record flow_record(const data::PointFlow& f) {
  Record r("flow");
  r.set("frames", f.frames).set("points", f.points).set("data", join_doubles(f.data.data(), f.data.size()));
  return r;
}

data::PointFlow flow_from(const Record& r) {
  data::PointFlow f;
  f.frames = r.integer("frames");
  f.points = r.integer("points");
  f.data = parse_doubles(r.str("data"));
  if (f.data.size() != static_cast<std::size_t>(f.frames * f.points * 2)) throw FormatError("flow size mismatch");
  return f;
}

std::string primitive_text(const sim::ActionPrimitive& a) {
  return std::string(sim::to_string(a.cls)) + ":" + join_doubles(a.p.data(), 4);
}

sim::ActionPrimitive parse_primitive(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw FormatError("bad primitive: " + std::string(text));
  sim::ActionPrimitive a;
  a.cls = sim::parse_primitive_class(text.substr(0, colon));
  const auto v = parse_doubles(text.substr(colon + 1));
  if (v.size() != 4) throw FormatError("primitive needs 4 parameters");
  for (std::size_t i = 0; i < 4; ++i) a.p[i] = v[i];
  return a;
}

Record observation_record(const sim::Observation& o) {
  Record r("observation");
  r.set("instruction", o.instruction.value_or(-1)).set("keypoints", static_cast<int>(o.keypoints.size()));
  std::string kp;
  for (const auto& k : o.keypoints) {
    if (!kp.empty()) kp += ';';
    kp += format_double(k.point.x) + "," + format_double(k.point.y) + "," +
          std::to_string(static_cast<int>(k.cls)) + "," + std::to_string(k.track) + "," + std::to_string(k.slot) +
          "," + format_double(k.canonical.x) + "," + format_double(k.canonical.y);
  }
  r.set("kp", kp);
  return r;
}

sim::Observation observation_from(const Record& r) {
  sim::Observation o;
  const int instruction = r.integer("instruction");
  if (instruction >= 0) o.instruction = instruction;
  for (const auto item : split(r.str("kp"), ';')) {
    const auto f = split(item, ',');
    if (f.size() != 7) throw FormatError("bad keypoint");
    sim::Keypoint k;
    k.point = {parse_double(f[0]), parse_double(f[1])};
    const int cls = parse_int(f[2]);
    if (cls < 0 || cls >= sim::kNumClasses) throw FormatError("bad keypoint class");
    k.cls = static_cast<sim::ObjectClass>(cls);
    k.track = parse_int(f[3]);
    k.slot = parse_int(f[4]);
    k.canonical = {parse_double(f[5]), parse_double(f[6])};
    o.keypoints.push_back(k);
  }
  if (static_cast<int>(o.keypoints.size()) != r.integer("keypoints")) throw FormatError("keypoint count mismatch");
  o.feature = learn::featurize(o);
  return o;
}

// --- data-gen records ----------------------------------------------------------------

void write_demo(std::ostream& out, const data::DemoVideo& d) {
  Record r("demo");
  std::string segs, prims;
  for (const auto& [a, b] : d.segments) {
    if (!segs.empty()) segs += ',';
    segs += std::to_string(a) + ":" + std::to_string(b);
  }
  for (const auto& p : d.primitives) {
    if (!prims.empty()) prims += ';';
    prims += primitive_text(p);
  }
  r.set("task", std::string(sim::to_string(d.task)))
      .set("frames", d.length())
      .set("segments", segs)
      .set("primitives", prims)
      .set("labels", join_doubles(d.score_labels.data(), d.score_labels.size()));
  out << r.line() << '\n';
  out << flow_record(d.flow).line() << '\n';
  for (const auto& s : d.states) write_scene(out, s);
}

data::DemoVideo read_demo(std::istream& in) {
  const Record r = next_record(in, "demo");
  data::DemoVideo d;
  d.task = sim::parse_task(r.str("task"));
  for (const auto seg : split(r.str("segments"), ',')) {
    const auto parts = split(seg, ':');
    if (parts.size() != 2) throw FormatError("bad segment");
    d.segments.emplace_back(parse_int(parts[0]), parse_int(parts[1]));
  }
  for (const auto p : split(r.str("primitives"), ';')) d.primitives.push_back(parse_primitive(p));
  d.score_labels = parse_doubles(r.str("labels"));
  d.flow = flow_from(next_record(in, "flow"));
  const int frames = r.integer("frames");
  for (int i = 0; i < frames; ++i) d.states.push_back(read_scene(in));
  return d;
}

void write_play(std::ostream& out, const data::PlayRecord& p) {
  Record r("play");
  r.set("primitive", primitive_text(p.primitive)).set("moved_id", p.moved_id);
  out << r.line() << '\n' << observation_record(p.pre_observation).line() << '\n' << flow_record(p.flow).line() << '\n';
}

data::PlayRecord read_play(std::istream& in) {
  const Record r = next_record(in, "play");
  data::PlayRecord p;
  p.primitive = parse_primitive(r.str("primitive"));
  p.moved_id = r.integer("moved_id");
  p.pre_observation = observation_from(next_record(in, "observation"));
  p.flow = flow_from(next_record(in, "flow"));
  return p;
}

void write_expert(std::ostream& out, const data::ExpertDemo& d) {
  Record r("expert");
  r.set("task", std::string(sim::to_string(d.task)))
      .set("pairs", static_cast<int>(d.pairs.size()))
      .set("success", d.success ? 1 : 0);
  out << r.line() << '\n';
  write_scene(out, d.start);
  for (const auto& [obs, action] : d.pairs) {
    Record o = observation_record(obs);
    o.set("action", primitive_text(action));
    out << o.line() << '\n';
  }
}

data::ExpertDemo read_expert(std::istream& in) {
  const Record r = next_record(in, "expert");
  data::ExpertDemo d;
  d.task = sim::parse_task(r.str("task"));
  d.success = r.integer("success") != 0;
  d.start = read_scene(in);
  const int n = r.integer("pairs");
  for (int i = 0; i < n; ++i) {
    const Record o = next_record(in, "observation");
    d.pairs.emplace_back(observation_from(o), parse_primitive(o.str("action")));
  }
  return d;
}

// --- datasets ------------------------------------------------------------------

Dataset generate_dataset(const exp::ExperimentConfig& cfg, std::uint64_t seed) {
  Dataset ds;
  ds.seed = seed;
  ds.config = cfg;
  ds.play = exp::make_play(cfg, seed);
  for (const auto task : cfg.tasks) {
    ds.human[task] = exp::make_human_demos(task, cfg.human_demos, cfg, seed);
    ds.expert[task] = exp::make_expert_demos(task, cfg.expert_demos, cfg, seed);
  }
  return ds;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  nlohmann::json index;
  index["seed"] = ds.seed;
  index["config_hash"] = ds.config.hash();
  index["config"] = exp::to_json(ds.config);
  index["counts"]["play"] = ds.play.size();
  {
    auto out = open_out(dir / "play.rec");
    for (const auto& p : ds.play) write_play(out, p);
  }
  nlohmann::json mix = nlohmann::json::array();
  for (const auto& [task, demos] : ds.human) {
    const std::string name(sim::to_string(task));
    mix.push_back(name);
    index["counts"]["human"][name] = demos.size();
    auto out = open_out(dir / ("human_" + name + ".rec"));
    for (const auto& d : demos) write_demo(out, d);
  }
  for (const auto& [task, demos] : ds.expert) {
    const std::string name(sim::to_string(task));
    index["counts"]["expert"][name] = demos.size();
    auto out = open_out(dir / ("expert_" + name + ".rec"));
    for (const auto& d : demos) write_expert(out, d);
  }
  index["task_mix"] = mix;
  write_file(dir / "index.json", index.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto index = nlohmann::json::parse(read_file(dir / "index.json"));
  Dataset ds;
  ds.seed = index.at("seed").get<std::uint64_t>();
  ds.config = exp::apply_json(index.at("config"));
  if (ds.config.hash() != index.at("config_hash").get<std::string>())
    throw FormatError("dataset index config hash does not match its config");
  {
    auto in = open_in(dir / "play.rec");
    const auto n = index.at("counts").at("play").get<std::size_t>();
    for (std::size_t i = 0; i < n; ++i) ds.play.push_back(read_play(in));
  }
  for (const auto& name : index.at("task_mix")) {
    const auto task = sim::parse_task(name.get<std::string>());
    const std::string file(name.get<std::string>());
    {
      auto in = open_in(dir / ("human_" + file + ".rec"));
      const auto n = index.at("counts").at("human").at(file).get<std::size_t>();
      for (std::size_t i = 0; i < n; ++i) ds.human[task].push_back(read_demo(in));
    }
    {
      auto in = open_in(dir / ("expert_" + file + ".rec"));
      const auto n = index.at("counts").at("expert").at(file).get<std::size_t>();
      for (std::size_t i = 0; i < n; ++i) ds.expert[task].push_back(read_expert(in));
    }
  }
  return ds;
}

// --- models --------------------------------------------------------------------

void save_models(const std::filesystem::path& path, sim::TaskKind task, const rollout::Models& m) {
  auto out = open_out(path);
  Record head("anchor-model");
  head.set("version", kModelFormatVersion)
      .set("task", std::string(sim::to_string(task)))
      .set("feature_dim", learn::kFeatureDim)
      .set("descriptor_dim", learn::kDescriptorDim)
      .set("threshold", m.threshold);
  out << head.line() << '\n';

  Record score("score");
  score.set("lambda", m.score.lambda).set("B", m.score.weight_norm).set("weights", m.score.weights);
  out << score.line() << '\n';

  Record flow("flow_generator");
  flow.set("k", m.flow.k).set("entries", static_cast<int>(m.flow.memory.size()));
  out << flow.line() << '\n';
  for (const auto& e : m.flow.memory) {
    Record r("flow_entry");
    r.set("class", std::string(sim::to_string(e.moved_class)))
        .set("anchor", vec2_text(e.anchor_centroid))
        .set("feature", e.feature);
    out << r.line() << '\n' << flow_record(e.flow).line() << '\n';
  }

  const auto& red = m.reduction;
  Record rr("reduction");
  const Eigen::VectorXd history =
      Eigen::Map<const Eigen::VectorXd>(red.loss_history.data(), static_cast<Eigen::Index>(red.loss_history.size()));
  rr.set("lambda_cls", red.lambda_cls)
      .set("lambda_reg", red.lambda_reg)
      .set("total_loss", red.total_loss)
      .set("mean", red.input.mean)
      .set("scale", red.input.scale)
      .set("classifier", red.classifier)
      .set("loss_history", history);
  out << rr.line() << '\n';
  for (int c = 0; c < sim::kNumPrimitiveClasses; ++c)
    write_ridge(out, Record("regressor").set("cls", c), red.regressors[static_cast<std::size_t>(c)]);

  std::string classes;
  for (const auto c : m.base.step_classes) {
    if (!classes.empty()) classes += ',';
    classes += sim::to_string(c);
  }
  Record base("base");
  base.set("task", std::string(sim::to_string(m.base.task)))
      .set("classes", classes)
      .set("lambda", m.base.lambda)
      .set("B", m.base.weight_norm)
      .set("regressors", static_cast<int>(m.base.regressors.size()));
  out << base.line() << '\n';
  for (const auto& [key, ridge] : m.base.regressors)
    write_ridge(out, Record("base_regressor").set("step", key.first).set("instruction", key.second), ridge);

  out << Record("naive").set("entries", static_cast<int>(m.naive.memory.size())).line() << '\n';
  for (const auto& [feature, action] : m.naive.memory)
    out << Record("naive_entry").set("feature", feature).set("action", primitive_text(action)).line() << '\n';
}

rollout::Models load_models(const std::filesystem::path& path, sim::TaskKind* task) {
  auto in = open_in(path);
  const Record head = next_record(in, "anchor-model");
  if (head.integer("version") != kModelFormatVersion)
    throw FormatError("unsupported model format version " + head.str("version"));
  require_dim(head.integer("feature_dim"), learn::kFeatureDim, "feature_dim");
  require_dim(head.integer("descriptor_dim"), learn::kDescriptorDim, "descriptor_dim");
  if (task) *task = sim::parse_task(head.str("task"));

  rollout::Models m;
  m.threshold = head.num("threshold");

  const Record score = next_record(in, "score");
  m.score.lambda = score.num("lambda");
  m.score.weight_norm = score.num("B");
  m.score.weights = score.vec("weights");
  require_dim(m.score.weights.size(), learn::kFeatureDim, "score weights");

  const Record flow = next_record(in, "flow_generator");
  m.flow.k = flow.integer("k");
  const int entries = flow.integer("entries");
  for (int i = 0; i < entries; ++i) {
    const Record r = next_record(in, "flow_entry");
    learn::FlowMemoryEntry e;
    e.moved_class = sim::parse_object_class(r.str("class"));
    e.anchor_centroid = parse_vec2(r.str("anchor"));
    e.feature = r.vec("feature");
    require_dim(e.feature.size(), learn::kFeatureDim, "flow memory feature");
    e.flow = flow_from(next_record(in, "flow"));
    m.flow.memory.push_back(std::move(e));
  }

  const Record rr = next_record(in, "reduction");
  auto& red = m.reduction;
  red.lambda_cls = rr.num("lambda_cls");
  red.lambda_reg = rr.num("lambda_reg");
  red.total_loss = rr.num("total_loss");
  red.input.mean = rr.vec("mean");
  red.input.scale = rr.vec("scale");
  red.classifier = rr.mat("classifier");
  const Eigen::VectorXd history = rr.vec("loss_history");
  red.loss_history.assign(history.data(), history.data() + history.size());
  const Eigen::Index input_dim = learn::kDescriptorDim + learn::kFeatureDim;
  require_dim(red.input.mean.size(), input_dim, "reduction input");
  require_dim(red.classifier.cols(), input_dim + 1, "reduction classifier");
  require_dim(red.classifier.rows(), sim::kNumPrimitiveClasses, "reduction classifier rows");
  for (int c = 0; c < sim::kNumPrimitiveClasses; ++c) {
    const Record r = next_record(in, "regressor");
    if (r.integer("cls") != c) throw FormatError("regressors out of order");
    red.regressors[static_cast<std::size_t>(c)] = ridge_from(r);
    require_dim(red.regressors[static_cast<std::size_t>(c)].weights.rows(), input_dim + 1, "reduction regressor");
  }

  const Record base = next_record(in, "base");
  m.base.task = sim::parse_task(base.str("task"));
  for (const auto c : split(base.str("classes"), ',')) m.base.step_classes.push_back(sim::parse_primitive_class(c));
  m.base.lambda = base.num("lambda");
  m.base.weight_norm = base.num("B");
  const int regs = base.integer("regressors");
  for (int i = 0; i < regs; ++i) {
    const Record r = next_record(in, "base_regressor");
    learn::Ridge ridge = ridge_from(r);
    require_dim(ridge.weights.rows(), learn::kFeatureDim, "base regressor");
    m.base.regressors.emplace(std::make_pair(r.integer("step"), r.integer("instruction")), std::move(ridge));
  }

  const int naive = next_record(in, "naive").integer("entries");
  for (int i = 0; i < naive; ++i) {
    const Record r = next_record(in, "naive_entry");
    Eigen::VectorXd f = r.vec("feature");
    require_dim(f.size(), learn::kFeatureDim, "naive feature");
    m.naive.memory.emplace_back(std::move(f), parse_primitive(r.str("action")));
  }
  return m;
}

// --- analysis records ------------------------------------------------------------

void write_samples(std::ostream& out, const gap::SampleSet& s) {
  out << "# n=" << s.n() << " d=" << s.d() << " task=" << sim::to_string(s.meta.task)
      << " split=" << sim::to_string(s.meta.split) << " policy=" << s.meta.policy << " horizon=" << s.meta.horizon
      << '\n';
  for (Eigen::Index i = 0; i < s.vectors.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.vectors.cols(); ++j) {
      if (j) out << ',';
      out << format_double(s.vectors(i, j));
    }
    out << '\n';
  }
}

gap::SampleSet read_samples(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw FormatError("sample set header missing");
  const Record head = Record::parse(line);
  gap::SampleSet s;
  s.meta.task = sim::parse_task(head.str("task"));
  s.meta.split = head.str("split") == "OOD" ? sim::Split::OOD : sim::Split::InDist;
  s.meta.policy = head.str("policy");
  s.meta.horizon = head.integer("horizon");
  const int n = head.integer("n");
  const int d = head.integer("d");
  s.vectors.resize(n, d);
  for (int i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw FormatError("sample set truncated");
    const auto v = parse_doubles(line);
    if (static_cast<int>(v.size()) != d) throw FormatError("sample row has wrong dimension");
    for (int j = 0; j < d; ++j) s.vectors(i, j) = v[static_cast<std::size_t>(j)];
  }
  return s;
}

Record gap_record(const gap::GapReport& r) {
  Record out("gap_report");
  out.set("expected_loss", r.expected_loss)
      .set("empirical_loss", r.empirical_loss)
      .set("gap", r.gap)
      .set("tr_sigma", r.tr_sigma)
      .set("rademacher", r.rademacher)
      .set("bound", r.bound)
      .set("surrogate", r.surrogate)
      .set("n", r.n)
      .set("B", r.B);
  return out;
}

gap::GapReport gap_from(const Record& r) {
  gap::GapReport g;
  g.expected_loss = r.num("expected_loss");
  g.empirical_loss = r.num("empirical_loss");
  g.gap = r.num("gap");
  g.tr_sigma = r.num("tr_sigma");
  g.rademacher = r.num("rademacher");
  g.bound = r.num("bound");
  g.surrogate = r.num("surrogate");
  g.n = r.integer("n");
  g.B = r.num("B");
  return g;
}

Record mi_record(const gap::MIReport& r) {
  Record out("mi_report");
  out.set("i_s0_sb", r.i_s0_sb).set("i_s0_sa", r.i_s0_sa).set("bins", r.bins).set("n", r.n);
  return out;
}

gap::MIReport mi_from(const Record& r) {
  return {r.num("i_s0_sb"), r.num("i_s0_sa"), r.integer("bins"), r.integer("n")};
}

void write_trace(std::ostream& out, const rollout::RolloutTrace& t) {
  Record head("trace");
  head.set("outcome", std::string(rollout::to_string(t.outcome)))
      .set("reduction_steps", static_cast<int>(t.reduction_steps.size()))
      .set("base_steps", static_cast<int>(t.base_steps.size()));
  out << head.line() << '\n';
  for (const auto& s : t.reduction_steps) {
    Record r("reduction_step");
    r.set("action", primitive_text(s.action)).set("score_before", s.score_before).set("score_after", s.score_after);
    out << r.line() << '\n';
    if (!s.flow.empty()) out << flow_record(s.flow).line() << '\n';
  }
  for (const auto& s : t.base_steps) out << Record("base_step").set("action", primitive_text(s.action)).line() << '\n';
  write_scene(out, t.final_state);
}

// --- files -------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  auto out = open_out(path);
  out << content;
}

}  // namespace anchor::io
