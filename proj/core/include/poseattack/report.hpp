// Persistence and reporting: scenario bundle directories, trained-statistics
// files, defense sweep curves, precision/recall tables (per scene with one
// column group per threshold preset) and run manifests. Every table is
// emitted both as CSV and as a structured JSON record.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "poseattack/attacker.hpp"
#include "poseattack/pose_io.hpp"

namespace poseattack {

inline constexpr const char* kVersion = "0.1.0";

// --- scenario bundles -------------------------------------------------------

Json to_json(const ObjectClass& cls);
ObjectClass object_class_from_json(const Json& j);
Json to_json(const SceneSpec& scene);
SceneSpec scene_spec_from_json(const Json& j);

/// Layout: <dir>/scene.json, <dir>/genuine.jsonl, <dir>/models/<class>.jsonl
void save_bundle(const std::filesystem::path& dir, const ScenarioBundle& bundle);
ScenarioBundle load_bundle(const std::filesystem::path& dir);

/// Layout: <dir>/suite.json plus one bundle directory per scene.
void save_suite(const std::filesystem::path& dir, const std::vector<ScenarioBundle>& bundles);
std::vector<ScenarioBundle> load_suite(const std::filesystem::path& dir);

// --- trained statistics ------------------------------------------------------

using StatsTable = std::map<ThresholdPreset, std::map<std::string, PresenceStats>>;

void save_stats(const std::filesystem::path& path, const StatsTable& stats);
StatsTable load_stats(const std::filesystem::path& path);

// --- reconstructions ---------------------------------------------------------

Json to_json(const SceneReconstruction& rec);

// --- defense sweep -----------------------------------------------------------

struct DefenseSweepRow {
  int min_objects = 1;
  int genuine_total = 0;
  int genuine_accepted = 0;
  int malicious_total = 0;
  int malicious_accepted = 0;
  double genuine_accept_rate = 0.0;
  double malicious_accept_rate = 0.0;
};

struct DefenseSweep {
  double fraction_x = 0.1;
  std::vector<DefenseSweepRow> rows;  // one per min_objects value, ascending
};

/// Runs the bundle's genuine script (room-level queries) and malicious
/// scripts (object queries for every class present in the scene) against
/// the scene, keeps the queries that localize, and sweeps min_objects over
/// their inlier-support counts. Each query's support count is computed
/// once, so both acceptance curves are non-increasing by construction.
DefenseSweep run_defense_sweep(const ScenarioBundle& bundle, const RobustnessProfile& profile,
                               double fraction_x, int min_objects_lo, int min_objects_hi,
                               std::uint64_t seed);

std::string sweep_to_csv(const DefenseSweep& sweep);
Json to_json(const DefenseSweep& sweep);

// --- precision/recall tables --------------------------------------------------

struct PrReport {
  std::map<std::string, std::map<ThresholdPreset, PrecisionRecall>> per_scene;
  std::map<ThresholdPreset, PrecisionRecall> pooled;
};

Json to_json(const PrecisionRecall& pr);
std::string pr_report_to_csv(const PrReport& report);
Json to_json(const PrReport& report);

// --- run manifests -------------------------------------------------------------

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  Json config;  // fully resolved inputs
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;
  std::string version = kVersion;
  double wall_clock_s = 0.0;
};

std::string config_hash_hex(const Json& config);
Json to_json(const RunManifest& manifest);
void save_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}  // namespace poseattack
