#pragma once

// Text persistence. Every record is one line: a tag followed by key=value
// fields. Doubles are written in shortest round-trip form, so reading a file
// back reproduces the in-memory values bit for bit.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "anchor/datagen.hpp"
#include "anchor/experiment.hpp"
#include "anchor/gap.hpp"
#include "anchor/learn.hpp"
#include "anchor/rollout.hpp"
#include "anchor/sim.hpp"

namespace anchor::io {

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_double(double v);
double parse_double(std::string_view s);

class Record {
 public:
  Record() = default;
  explicit Record(std::string tag) : tag_(std::move(tag)) {}

  const std::string& tag() const { return tag_; }
  bool has(const std::string& key) const { return fields_.contains(key); }

  Record& set(const std::string& key, std::string value);
  Record& set(const std::string& key, double value);
  Record& set(const std::string& key, int value);
  Record& set(const std::string& key, std::uint64_t value);
  Record& set(const std::string& key, const Eigen::VectorXd& value);
  Record& set(const std::string& key, const Eigen::MatrixXd& value);

  const std::string& str(const std::string& key) const;
  double num(const std::string& key) const;
  int integer(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  Eigen::VectorXd vec(const std::string& key) const;
  Eigen::MatrixXd mat(const std::string& key) const;

  std::string line() const;
  static Record parse(std::string_view line);

 private:
  std::string tag_;
  std::vector<std::pair<std::string, std::string>> order_;
  std::map<std::string, std::size_t> fields_;
};

/// Reads the next non-empty line as a record; throws FormatError at EOF or
/// when the tag differs from `expected` (if given).
Record next_record(std::istream& in, std::string_view expected = {});

// --- domain records --------------------------------------------------------------

void write_scene(std::ostream& out, const sim::WorldState& s);
sim::WorldState read_scene(std::istream& in);

Record flow_record(const data::PointFlow& f);
data::PointFlow flow_from(const Record& r);

std::string primitive_text(const sim::ActionPrimitive& a);
sim::ActionPrimitive parse_primitive(std::string_view text);

Record observation_record(const sim::Observation& o);
sim::Observation observation_from(const Record& r);

void write_demo(std::ostream& out, const data::DemoVideo& d);
data::DemoVideo read_demo(std::istream& in);
void write_play(std::ostream& out, const data::PlayRecord& p);
data::PlayRecord read_play(std::istream& in);
void write_expert(std::ostream& out, const data::ExpertDemo& d);
data::ExpertDemo read_expert(std::istream& in);

// --- datasets -----------------------------------------------------------------

struct Dataset {
  std::uint64_t seed = 0;
  exp::ExperimentConfig config;
  std::vector<data::PlayRecord> play;
  std::map<sim::TaskKind, std::vector<data::DemoVideo>> human;
  std::map<sim::TaskKind, std::vector<data::ExpertDemo>> expert;
};

Dataset generate_dataset(const exp::ExperimentConfig& cfg, std::uint64_t seed);
/// Writes index.json plus one record file per source.
void save_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& dir);

// --- models ------------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

void save_models(const std::filesystem::path& path, sim::TaskKind task, const rollout::Models& m);
/// Throws FormatError on a version or dimension mismatch.
rollout::Models load_models(const std::filesystem::path& path, sim::TaskKind* task = nullptr);

// --- analysis records ----------------------------------------------------------

void write_samples(std::ostream& out, const gap::SampleSet& s);
gap::SampleSet read_samples(std::istream& in);

Record gap_record(const gap::GapReport& r);
gap::GapReport gap_from(const Record& r);
Record mi_record(const gap::MIReport& r);
gap::MIReport mi_from(const Record& r);

void write_trace(std::ostream& out, const rollout::RolloutTrace& t);

// --- files -------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace anchor::io
