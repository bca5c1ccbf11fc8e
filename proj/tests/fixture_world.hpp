#pragma once

// A generated fixture set on disk, loaded and ingested the same way the CLI does it.

#include <memory>
#include <optional>

#include "studentsim/config.hpp"
#include "studentsim/fixtures.hpp"
#include "studentsim/pipeline.hpp"
#include "studentsim/prompts.hpp"
#include "test_support.hpp"

namespace studentsim::testing {

struct FixtureWorld {
  explicit FixtureWorld(const FixtureOptions& options = {}, const std::string& tag = "world")
      : dir(tag) {
    write_fixtures(dir.path(), options);
    config = load_app_config(dir / "config.json");
    std::optional<KeyMap> key_map;
    if (config.paths.key_map) key_map = load_key_map(*config.paths.key_map);
    cohort = load_profiles(config.paths.profiles, key_map ? &*key_map : nullptr);
    bank = load_exam_bank(config.paths.exam_bank);
    const auto zones = load_zones(config.paths.zones);
    ingest = ingest_cohort(cohort, zones, config.paths.sensing_dir, config.sim.n_weeks);
  }

  const TemplateRegistry& templates() const {
    static const TemplateRegistry reg = TemplateRegistry::load(default_template_dir());
    return reg;
  }

  /// Mock-backed simulation with the fixture config (optionally adjusted).
  SimulationResult simulate(const SimConfig& sim) const {
    auto app = config;
    app.sim = sim;
    auto provider = make_provider(app, bank, "mock");
    return run_simulation(cohort, ingest.grids, sim, *provider, templates(), bank,
                          config.activity_labels);
  }
  SimulationResult simulate() const { return simulate(config.sim); }

  TempDir dir;
  AppConfig config;
  std::vector<StudentProfile> cohort;
  ExamBank bank;
  IngestResult ingest;
};

}  // namespace studentsim::testing
