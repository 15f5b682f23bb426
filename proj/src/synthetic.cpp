#include "ember/synthetic.hpp"

#include <cstdio>

#include "ember/io.hpp"
#include "ember/json_value.hpp"
#include "ember/rng.hpp"

namespace ember {

Dataset write_disk_fixtures(const std::filesystem::path& root, const std::string& split, const DiskSpec& spec) {
  if (spec.count < 1 || spec.size < 4) throw Error(Errc::BadParam, split, "need at least one image of size >= 4");
  std::filesystem::create_directories(root / split);
  Rng rng(mix_seed(spec.seed, split));
  const std::int64_t n = spec.size;
  std::vector<Record> items;
  for (std::int64_t k = 0; k < spec.count; ++k) {
    const double radius = 2.0 + rng.uniform() * (static_cast<double>(n) / 4.0 - 1.0);
    const double cy = radius + rng.uniform() * (static_cast<double>(n) - 2 * radius);
    const double cx = radius + rng.uniform() * (static_cast<double>(n) - 2 * radius);
    Tensor image({n, n}), label({n, n});
    for (std::int64_t y = 0; y < n; ++y) {
      for (std::int64_t x = 0; x < n; ++x) {
        const double dy = static_cast<double>(y) + 0.5 - cy, dx = static_cast<double>(x) + 0.5 - cx;
        const bool inside = dy * dy + dx * dx <= radius * radius;
        label[y * n + x] = inside ? 1.0f : 0.0f;
        image[y * n + x] = static_cast<float>((inside ? 1.0 : 0.0) + spec.noise * rng.normal());
      }
    }
    char name[32];
    std::snprintf(name, sizeof name, "%03lld", static_cast<long long>(k));
    const std::string image_rel = split + "/image_" + name + ".nii";
    const std::string label_rel = split + "/label_" + name + ".nii";
    write_nifti(root / image_rel, image);
    write_nifti(root / label_rel, label);
    items.push_back(Record{{"image", image_rel}, {"label", label_rel}});
  }
  nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
  for (const auto& r : items) manifest.push_back(record_to_json(r));
  const std::string text = manifest.dump(2) + "\n";
  write_binary_file(root / (split + ".json"), std::vector<unsigned char>(text.begin(), text.end()));
  return Dataset(std::move(items), root / (split + ".json"));
}

Dataset two_clusters(std::int64_t count, std::uint64_t seed, double separation) {
  Rng rng(seed);
  std::vector<Record> items;
  for (std::int64_t i = 0; i < count; ++i) {
    const std::int64_t cls = i % 2;
    const double centre = (cls == 0 ? -0.5 : 0.5) * separation;
    const float x0 = static_cast<float>(centre + rng.normal());
    const float x1 = static_cast<float>(centre + rng.normal());
    items.push_back(Record{{"x", Tensor::vector({x0, x1})}, {"y", Tensor::scalar(static_cast<float>(cls))}});
  }
  return Dataset(std::move(items));
}

}  // namespace ember
