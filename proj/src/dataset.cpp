#include "ember/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ember/json_value.hpp"
#include "ember/rng.hpp"

namespace ember {

const Record& Dataset::at(std::int64_t index) const {
  if (index < 0 || index >= size()) {
    throw Error(Errc::IndexOutOfRange, std::to_string(index), "dataset has " + std::to_string(size()) + " items");
  }
  return items_[static_cast<std::size_t>(index)];
}

Dataset parse_json_dataset(const std::string& text) {
  const auto doc = parse_json(text, "manifest");
  if (!doc.is_array()) throw Error(Errc::NotAnArray, "manifest", std::string("top level is ") + doc.type_name());
  std::vector<Record> items;
  items.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    if (!doc[i].is_object()) throw Error(Errc::ElementNotAnObject, std::to_string(i));
    items.push_back(record_from_json(doc[i], "[" + std::to_string(i) + "]"));
  }
  return Dataset(std::move(items));
}

Dataset load_json_dataset(const std::filesystem::path& path) {
  Dataset d = parse_json_dataset(read_text_file(path));
  return Dataset(d.items(), path);
}

Dataset parse_msd_dataset(const std::string& text, MsdPhase phase) {
  const auto doc = parse_json(text, "msd manifest");
  const std::string key = phase == MsdPhase::training ? "training" : "test";
  if (!doc.is_object() || !doc.contains(key)) throw Error(Errc::MissingPhase, key);
  const auto& entries = doc[key];
  if (!entries.is_array()) throw Error(Errc::MalformedEntry, key, "phase entry must be an array");

  auto path_of = [&](const nlohmann::ordered_json& e, const char* field, std::size_t i) {
    if (!e.contains(field) || !e[field].is_string()) {
      throw Error(Errc::MalformedEntry, std::to_string(i), std::string("missing string field '") + field + "'");
    }
    return e[field].get<std::string>();
  };

  std::vector<Record> items;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    Record r;
    if (phase == MsdPhase::training) {
      if (!e.is_object()) throw Error(Errc::MalformedEntry, std::to_string(i), "training entries are objects");
      r.insert("image", path_of(e, "image", i));
      r.insert("label", path_of(e, "label", i));
    } else if (e.is_string()) {
      r.insert("image", e.get<std::string>());
    } else if (e.is_object()) {
      r.insert("image", path_of(e, "image", i));
    } else {
      throw Error(Errc::MalformedEntry, std::to_string(i), "test entries are paths or {\"image\": path}");
    }
    items.push_back(std::move(r));
  }
  return Dataset(std::move(items));
}

Dataset load_msd_dataset(const std::filesystem::path& path, MsdPhase phase) {
  Dataset d = parse_msd_dataset(read_text_file(path), phase);
  return Dataset(d.items(), path);
}

std::vector<std::int64_t> split_sizes(std::int64_t n, std::span<const double> fractions) {
  if (fractions.empty()) throw Error(Errc::BadSpec, "fractions", "at least one fraction required");
  double total = 0;
  bool any_positive = false;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw Error(Errc::BadSpec, "fractions", "fractions must be non-negative");
    any_positive = any_positive || f > 0.0;
    total += f;
  }
  if (!any_positive || std::abs(total - 1.0) > 1e-9) {
    throw Error(Errc::BadSpec, "fractions", "fractions must sum to 1");
  }
  std::vector<std::int64_t> sizes(fractions.size());
  std::vector<double> remainder(fractions.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double quota = fractions[i] * static_cast<double>(n);
    sizes[i] = static_cast<std::int64_t>(std::floor(quota));
    remainder[i] = quota - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::vector<std::size_t> order(fractions.size());
  std::iota(order.begin(), order.end(), 0);
  // Stable sort keeps earlier partitions first among equal remainders.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[order[k % order.size()]];
  return sizes;
}

std::vector<Dataset> split_dataset(const Dataset& d, const SplitSpec& spec) {
  const auto sizes = split_sizes(d.size(), spec.fractions);
  std::vector<std::int64_t> perm(static_cast<std::size_t>(d.size()));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(spec.seed);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);

  std::vector<Dataset> parts;
  std::size_t cursor = 0;
  for (auto count : sizes) {
    std::vector<Record> items;
    for (std::int64_t k = 0; k < count; ++k) items.push_back(d[perm[cursor++]]);
    parts.emplace_back(std::move(items), d.source_path());
  }
  return parts;
}

Dataset dataset_adapter(std::span<const ValueList> rows, std::span<const std::string> field_names) {
  std::vector<Record> items;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != field_names.size()) {
      throw Error(Errc::ArityMismatch, std::to_string(i),
                  "row has " + std::to_string(rows[i].size()) + " values for " + std::to_string(field_names.size()) +
                      " names");
    }
    Record r;
    for (std::size_t k = 0; k < field_names.size(); ++k) r.insert(field_names[k], rows[i][k]);
    items.push_back(std::move(r));
  }
  return Dataset(std::move(items));
}

}  // namespace ember
