// Writes the synthetic disk segmentation fixtures used by configs/golden.json.
#include <iostream>

#include "CLI11.hpp"
#include "ember/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ember-demo-data: write seeded disk segmentation fixtures as NIfTI"};
  std::string root;
  ember::DiskSpec train{32, 16, 1, 0.1}, val{8, 16, 2, 0.1};
  app.add_option("root", root, "Output directory")->required();
  app.add_option("--train", train.count, "Training images")->check(CLI::PositiveNumber);
  app.add_option("--val", val.count, "Validation images")->check(CLI::PositiveNumber);
  app.add_option("--size", train.size, "Image side length, a multiple of 4")->check(CLI::Range(4, 256));
  CLI11_PARSE(app, argc, argv);
  val.size = train.size;
  try {
    ember::write_disk_fixtures(root, "train", train);
    ember::write_disk_fixtures(root, "val", val);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << "wrote " << train.count << " training and " << val.count << " validation images to " << root << "\n";
  return 0;
}
