#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "ember/error.hpp"
#include "ember/record.hpp"

namespace ember {

/// Ordered, immutable sequence of Records. Items hold paths and small values;
/// voxel data is loaded later by I/O transforms.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Record> items, std::optional<std::filesystem::path> source = std::nullopt)
      : items_(std::move(items)), source_(std::move(source)) {}

  std::int64_t size() const noexcept { return static_cast<std::int64_t>(items_.size()); }
  bool empty() const noexcept { return items_.empty(); }
  // Throws IndexOutOfRange.
  const Record& at(std::int64_t index) const;
  const Record& operator[](std::int64_t index) const { return items_[static_cast<std::size_t>(index)]; }

  const std::vector<Record>& items() const noexcept { return items_; }
  const std::optional<std::filesystem::path>& source_path() const noexcept { return source_; }

 private:
  std::vector<Record> items_;
  std::optional<std::filesystem::path> source_;
};

enum class MsdPhase { training, test };

struct SplitSpec {
  std::vector<double> fractions;
  std::uint64_t seed = 0;
};

// Top-level JSON array of flat objects, one Record per element.
Dataset load_json_dataset(const std::filesystem::path& path);
Dataset parse_json_dataset(const std::string& text);

// Decathlon-style manifest: {"training": [{image, label}], "test": [path | {image}]}.
Dataset load_msd_dataset(const std::filesystem::path& path, MsdPhase phase);
Dataset parse_msd_dataset(const std::string& text, MsdPhase phase);

// Seeded shuffle, then contiguous partitions sized by largest remainder
// (ties go to the earlier partition).
std::vector<Dataset> split_dataset(const Dataset& d, const SplitSpec& spec);
std::vector<std::int64_t> split_sizes(std::int64_t n, std::span<const double> fractions);

// Zips positional rows with field names.
Dataset dataset_adapter(std::span<const ValueList> rows, std::span<const std::string> field_names);

// Same for any indexable collection of tuples whose elements convert to Value.
template <class Source>
Dataset dataset_adapter(const Source& source, std::span<const std::string> field_names) {
  std::vector<Record> items;
  std::int64_t index = 0;
  for (const auto& row : source) {
    constexpr auto arity = std::tuple_size_v<std::decay_t<decltype(row)>>;
    if (arity != field_names.size()) {
      throw Error(Errc::ArityMismatch, std::to_string(index),
                  "row has " + std::to_string(arity) + " values for " + std::to_string(field_names.size()) + " names");
    }
    Record r;
    std::size_t k = 0;
    std::apply([&](const auto&... values) { (r.insert(field_names[k++], Value(values)), ...); }, row);
    items.push_back(std::move(r));
    ++index;
  }
  return Dataset(std::move(items));
}

}  // namespace ember
