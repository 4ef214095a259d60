#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ssidepth/random.hpp"

namespace ssidepth {

struct DatasetHandle {
  std::string id;
  std::size_t size = 0;
  std::string path_pattern;
};

struct MixPlan {
  std::size_t batch_size = 0;
  std::vector<DatasetHandle> datasets;
  std::size_t epoch_images = 72000;
};

// Throws a configuration error unless the plan is usable: at least one
// dataset, every size >= 1, and batch_size a positive multiple of the
// dataset count.
void validate(const MixPlan& plan);

struct SampleRef {
  std::size_t dataset = 0;  // position in MixPlan::datasets
  std::string dataset_id;
  std::size_t index = 0;  // sample index within that dataset
};

// Equal-parts minibatches: every batch holds batch_size / L samples from each
// dataset, in plan order. Each dataset is walked through a private shuffled
// permutation, reshuffled on exhaustion, so no index repeats within a
// dataset-epoch. Copies continue the same stream.
class MixSampler {
 public:
  MixSampler(MixPlan plan, std::uint64_t seed);

  std::vector<SampleRef> next_batch();

  const MixPlan& plan() const noexcept { return plan_; }
  std::size_t per_dataset() const noexcept { return per_dataset_; }
  std::size_t images_seen() const noexcept { return images_seen_; }

 private:
  struct Cursor {
    Rng rng;
    std::vector<std::size_t> order;
    std::size_t pos = 0;
  };

  MixPlan plan_;
  std::size_t per_dataset_ = 0;
  std::size_t images_seen_ = 0;
  std::vector<Cursor> cursors_;
};

struct EpochProgress {
  std::size_t epoch = 0;
  double fraction = 0.0;
};

EpochProgress epoch_progress(std::size_t images_seen, const MixPlan& plan);

// Dataset manifest: either a JSON array of {id, size, path_pattern} objects or
// an object {"schema": 1, "datasets": [...]}. "path-pattern" is accepted as a
// spelling of "path_pattern".
std::vector<DatasetHandle> parse_dataset_manifest(const nlohmann::json& doc);
std::vector<DatasetHandle> load_dataset_manifest(const std::filesystem::path& path);

}  // namespace ssidepth
