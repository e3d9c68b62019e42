#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "charcurve/config.hpp"
#include "charcurve/contrastive.hpp"
#include "charcurve/curriculum.hpp"
#include "charcurve/robustness.hpp"

namespace charcurve {

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

struct ModelSweep {
  std::string model;  // "parent", "final" or "scratch"
  std::size_t k = 0;
  std::vector<SweepPoint> points;
  std::optional<SensitivityFit> fit;  // empty when the intercept is zero
};

struct ModelContrastive {
  std::string model;
  std::size_t k = 0;
  ContrastiveReport report;
};

struct PipelineResult {
  Corpora corpora;
  MergeList merges;
  std::optional<CurriculumResult> curriculum;
  std::optional<CurriculumResult> baseline;
  std::optional<DropoutComparison> dropout;
  std::vector<ModelSweep> sweeps;
  std::vector<ModelContrastive> contrastive;
  std::vector<std::string> artifacts;  // relative to out_dir, in write order
};

// Runs the enabled stages and writes every artifact under cfg.out_dir,
// finishing with manifest.json. Errors are re-thrown with a "[stage]" tag;
// artifacts written so far are kept.
PipelineResult run_pipeline(const ExperimentConfig& cfg);

// Training corpus words for the synthetic lexicon.
std::vector<std::string> source_words(const std::vector<std::string>& lines);

}  // namespace charcurve
