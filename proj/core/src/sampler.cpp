#include "ssidepth/sampler.hpp"

#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "ssidepth/error.hpp"

namespace ssidepth {

void validate(const MixPlan& plan) {
  if (plan.datasets.empty()) throw Error(ErrorKind::configuration, "mix plan has no datasets");
  for (const auto& d : plan.datasets) {
    if (d.size == 0) {
      throw Error(ErrorKind::configuration, "dataset '" + d.id + "' is empty");
    }
  }
  const std::size_t l = plan.datasets.size();
  if (plan.batch_size == 0 || plan.batch_size % l != 0) {
    throw Error(ErrorKind::configuration, "batch size " + std::to_string(plan.batch_size) +
                                              " is not a positive multiple of " +
                                              std::to_string(l) + " datasets");
  }
  if (plan.epoch_images == 0) throw Error(ErrorKind::configuration, "epoch_images must be >= 1");
}

MixSampler::MixSampler(MixPlan plan, std::uint64_t seed) : plan_(std::move(plan)) {
  validate(plan_);
  per_dataset_ = plan_.batch_size / plan_.datasets.size();
  cursors_.reserve(plan_.datasets.size());
  for (std::size_t l = 0; l < plan_.datasets.size(); ++l) {
    Cursor c{Rng(seed, l), std::vector<std::size_t>(plan_.datasets[l].size), 0};
    std::iota(c.order.begin(), c.order.end(), std::size_t{0});
    c.rng.shuffle(std::span<std::size_t>(c.order));
    cursors_.push_back(std::move(c));
  }
}

std::vector<SampleRef> MixSampler::next_batch() {
  std::vector<SampleRef> batch;
  batch.reserve(plan_.batch_size);
  for (std::size_t l = 0; l < cursors_.size(); ++l) {
    Cursor& c = cursors_[l];
    for (std::size_t k = 0; k < per_dataset_; ++k) {
      if (c.pos == c.order.size()) {
        c.rng.shuffle(std::span<std::size_t>(c.order));
        c.pos = 0;
      }
      batch.push_back({l, plan_.datasets[l].id, c.order[c.pos++]});
    }
  }
  images_seen_ += batch.size();
  return batch;
}

EpochProgress epoch_progress(std::size_t images_seen, const MixPlan& plan) {
  if (plan.epoch_images == 0) throw Error(ErrorKind::configuration, "epoch_images must be >= 1");
  return {images_seen / plan.epoch_images,
          static_cast<double>(images_seen % plan.epoch_images) /
              static_cast<double>(plan.epoch_images)};
}

std::vector<DatasetHandle> parse_dataset_manifest(const nlohmann::json& doc) {
  const nlohmann::json* list = &doc;
  if (doc.is_object()) {
    if (doc.contains("schema") && doc.at("schema") != 1) {
      throw Error(ErrorKind::configuration, "unsupported dataset manifest schema");
    }
    if (!doc.contains("datasets")) {
      throw Error(ErrorKind::parse, "dataset manifest lacks a 'datasets' array");
    }
    list = &doc.at("datasets");
  }
  if (!list->is_array()) throw Error(ErrorKind::parse, "dataset manifest must be an array");
  std::vector<DatasetHandle> out;
  try {
    for (const auto& item : *list) {
      DatasetHandle h;
      h.id = item.at("id").get<std::string>();
      const auto size = item.at("size").get<long long>();
      if (size < 1) throw Error(ErrorKind::configuration, "dataset '" + h.id + "' has size < 1");
      h.size = static_cast<std::size_t>(size);
      if (item.contains("path_pattern")) {
        h.path_pattern = item.at("path_pattern").get<std::string>();
      } else if (item.contains("path-pattern")) {
        h.path_pattern = item.at("path-pattern").get<std::string>();
      }
      out.push_back(std::move(h));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("dataset manifest: ") + e.what());
  }
  return out;
}

std::vector<DatasetHandle> load_dataset_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, path.string() + ": " + e.what());
  }
  return parse_dataset_manifest(doc);
}

}  // namespace ssidepth
