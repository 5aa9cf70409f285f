#include "swasat/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <torch/torch.h>

#include "swasat/errors.hpp"
#include "swasat/hashing.hpp"
#include "swasat/image_io.hpp"
#include "swasat/rng.hpp"

namespace fs = std::filesystem;

namespace swasat::data {
namespace {

bool is_image_file(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  static const std::set<std::string> known{".png", ".jpg", ".jpeg", ".tif", ".tiff", ".bmp", ".webp"};
  return known.count(ext) > 0;
}

nlohmann::json record_to_json(const SampleRecord& r) {
  nlohmann::json j{{"path", r.path},
                   {"class", r.class_name},
                   {"class_id", r.class_id},
                   {"split", to_string(r.split)},
                   {"provenance", to_string(r.provenance)},
                   {"hash", r.hash}};
  if (!r.origin.is_null()) {
    j["origin"] = r.origin;
  }
  return j;
}

SampleRecord record_from_json(const nlohmann::json& j) {
  SampleRecord r;
  r.path = j.at("path").get<std::string>();
  r.class_name = j.at("class").get<std::string>();
  r.class_id = j.at("class_id").get<std::int64_t>();
  r.split = parse_split(j.at("split").get<std::string>());
  r.provenance = parse_provenance(j.at("provenance").get<std::string>());
  r.hash = j.at("hash").get<std::string>();
  if (j.contains("origin")) {
    r.origin = j["origin"];
  }
  return r;
}

}  // namespace

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw DataError("unknown split '" + text + "'");
}

std::string to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::kOriginal: return "original";
    case Provenance::kBaselineAug: return "baseline-aug";
    case Provenance::kSefaAug: return "sefa-aug";
  }
  return "original";
}

Provenance parse_provenance(const std::string& text) {
  if (text == "original") return Provenance::kOriginal;
  if (text == "baseline-aug") return Provenance::kBaselineAug;
  if (text == "sefa-aug") return Provenance::kSefaAug;
  throw DataError("unknown provenance '" + text + "'");
}

std::vector<std::size_t> Dataset::indices_of(std::int64_t class_id) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].class_id == class_id) {
      out.push_back(i);
    }
  }
  return out;
}

Dataset load_dataset(const fs::path& root, const LoadOptions& options) {
  if (!fs::is_directory(root)) {
    throw IoError("dataset root is not a directory: " + root.string());
  }
  Dataset ds;
  ds.root = root;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) {
      ds.classes.push_back(entry.path().filename().string());
    }
  }
  std::sort(ds.classes.begin(), ds.classes.end());
  if (ds.classes.empty()) {
    throw DataError("dataset root has no class directories: " + root.string());
  }
  for (std::size_t c = 0; c < ds.classes.size(); ++c) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(root / ds.classes[c])) {
      if (entry.is_regular_file() && is_image_file(entry.path())) {
        files.push_back(entry.path());
      }
    }
    if (files.empty()) {
      throw DataError("class '" + ds.classes[c] + "' has no images");
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      if (options.verify_images) {
        const auto probe = cv::imread(file.string(), cv::IMREAD_UNCHANGED);
        if (probe.empty()) {
          throw IoError("unreadable image: " + file.string());
        }
      }
      SampleRecord r;
      r.path = fs::relative(file, root).generic_string();
      r.class_name = ds.classes[c];
      r.class_id = static_cast<std::int64_t>(c);
      r.hash = sha256_file(file);
      ds.samples.push_back(std::move(r));
    }
  }
  return ds;
}

void Recipe::validate() const {
  if (num_imbalanced < 0) {
    throw ConfigError("recipe " + name + ": num_imbalanced must be >= 0");
  }
  for (const auto& c : {balanced, imbalanced}) {
    if (c.train < 0 || c.val < 0 || c.test < 0) {
      throw ConfigError("recipe " + name + ": negative split count");
    }
  }
}

Recipe Recipe::named(const std::string& name) {
  if (name == "resisc70") return Recipe{name, 7, {450, 150, 100}, {70, 150, 100}};
  if (name == "resisc35") return Recipe{name, 7, {450, 150, 100}, {35, 150, 100}};
  if (name == "resisc10") return Recipe{name, 7, {450, 150, 100}, {10, 150, 100}};
  if (name == "ucmerced") return Recipe{name, 5, {75, 15, 10}, {10, 15, 10}};
  if (name == "aid") return Recipe{name, 7, {120, 40, 40}, {40, 40, 40}};
  // desk-scale benchmark rendered by synth_toy(per_class = 100)
  if (name == "toy") return Recipe{name, 2, {50, 10, 40}, {10, 10, 40}};
  throw NotFoundError("unknown recipe '" + name + "'");
}

std::vector<std::string> Recipe::names() { return {"resisc70", "resisc35", "resisc10", "ucmerced", "aid", "toy"}; }

void to_json(nlohmann::json& j, const Recipe& r) {
  j = {{"name", r.name},
       {"num_imbalanced", r.num_imbalanced},
       {"balanced", {r.balanced.train, r.balanced.val, r.balanced.test}},
       {"imbalanced", {r.imbalanced.train, r.imbalanced.val, r.imbalanced.test}}};
}

void from_json(const nlohmann::json& j, Recipe& r) {
  r.name = j.at("name").get<std::string>();
  r.num_imbalanced = j.at("num_imbalanced").get<std::int64_t>();
  const auto b = j.at("balanced").get<std::vector<std::int64_t>>();
  const auto i = j.at("imbalanced").get<std::vector<std::int64_t>>();
  if (b.size() != 3 || i.size() != 3) {
    throw DataError("recipe counts must be [train, val, test]");
  }
  r.balanced = {b[0], b[1], b[2]};
  r.imbalanced = {i[0], i[1], i[2]};
}

std::vector<const SampleRecord*> DatasetVariant::split(Split s) const {
  std::vector<const SampleRecord*> out;
  for (const auto& r : records) {
    if (r.split == s) {
      out.push_back(&r);
    }
  }
  return out;
}

std::vector<std::int64_t> DatasetVariant::counts(Split s) const {
  std::vector<std::int64_t> out(classes.size(), 0);
  for (const auto& r : records) {
    if (r.split == s) {
      ++out.at(static_cast<std::size_t>(r.class_id));
    }
  }
  return out;
}

bool DatasetVariant::is_imbalanced(std::int64_t class_id) const {
  return std::binary_search(imbalanced_classes.begin(), imbalanced_classes.end(), class_id);
}

fs::path DatasetVariant::resolve(const SampleRecord& record) const {
  const fs::path p(record.path);
  return p.is_absolute() ? p : root / p;
}

void DatasetVariant::validate() const {
  std::unordered_map<std::string, Split> seen;
  for (const auto& r : records) {
    const auto [it, inserted] = seen.emplace(r.hash, r.split);
    if (!inserted) {
      if (it->second != r.split) {
        throw DataError("sample " + r.path + " appears in both " + to_string(it->second) + " and " +
                        to_string(r.split));
      }
      throw DataError("duplicate content hash for " + r.path);
    }
  }
}

DatasetVariant make_imbalanced_variant(const Dataset& dataset, const Recipe& recipe, std::uint64_t seed) {
  recipe.validate();
  const auto num_classes = static_cast<std::int64_t>(dataset.classes.size());
  std::vector<std::vector<std::size_t>> by_class(dataset.classes.size());
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    by_class.at(static_cast<std::size_t>(dataset.samples[i].class_id)).push_back(i);
  }

  std::vector<std::int64_t> eligible;
  for (std::int64_t c = 0; c < num_classes; ++c) {
    if (static_cast<std::int64_t>(by_class[c].size()) >= recipe.balanced.total()) {
      eligible.push_back(c);
    }
  }
  if (recipe.num_imbalanced > static_cast<std::int64_t>(eligible.size())) {
    throw DataError("recipe " + recipe.name + " needs " + std::to_string(recipe.num_imbalanced) +
                    " imbalanced classes but only " + std::to_string(eligible.size()) + " classes hold " +
                    std::to_string(recipe.balanced.total()) + " samples");
  }
  DatasetVariant v;
  v.name = recipe.name;
  v.parent = dataset.root.string();
  v.root = dataset.root;
  v.recipe = recipe;
  v.seed = seed;
  v.classes = dataset.classes;
  for (const auto k : rng::sample_without_replacement(eligible.size(), static_cast<std::size_t>(recipe.num_imbalanced),
                                                      rng::derive_seed(seed, "classes"))) {
    v.imbalanced_classes.push_back(eligible[k]);
  }
  std::sort(v.imbalanced_classes.begin(), v.imbalanced_classes.end());

  const auto subset_seed = rng::derive_seed(seed, "subsets");
  for (std::int64_t c = 0; c < num_classes; ++c) {
    const auto& want = v.is_imbalanced(c) ? recipe.imbalanced : recipe.balanced;
    const auto& members = by_class[c];
    if (want.total() > static_cast<std::int64_t>(members.size())) {
      throw DataError("class '" + dataset.classes[c] + "' has " + std::to_string(members.size()) +
                      " samples but recipe " + recipe.name + " needs " + std::to_string(want.total()));
    }
    const auto order = rng::permutation(members.size(), rng::derive_seed(subset_seed, static_cast<std::uint64_t>(c)));
    std::size_t cursor = 0;
    const auto take = [&](std::int64_t n, Split s) {
      std::vector<std::size_t> picked(order.begin() + cursor, order.begin() + cursor + n);
      cursor += static_cast<std::size_t>(n);
      std::sort(picked.begin(), picked.end());
      for (const auto k : picked) {
        auto r = dataset.samples[members[k]];
        r.split = s;
        v.records.push_back(std::move(r));
      }
    };
    // test and val come first so they do not depend on whether the class is imbalanced
    take(want.test, Split::kTest);
    take(want.val, Split::kVal);
    take(want.train, Split::kTrain);
  }
  v.repro = {{"recipe", recipe}, {"seed", seed}, {"parent", v.parent}};
  v.validate();
  return v;
}

void save_manifest(const DatasetVariant& variant, const fs::path& path) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) {
      throw IoError("cannot write manifest " + path.string());
    }
    nlohmann::json header{{"kind", "header"},
                          {"variant", variant.name},
                          {"parent", variant.parent},
                          {"root", fs::absolute(variant.root).lexically_normal().string()},
                          {"recipe", variant.recipe},
                          {"seed", variant.seed},
                          {"classes", variant.classes},
                          {"imbalanced_classes", variant.imbalanced_classes},
                          {"repro", variant.repro}};
    out << header.dump() << '\n';
    for (const auto& r : variant.records) {
      out << record_to_json(r).dump() << '\n';
    }
    if (!out.flush()) {
      throw IoError("write failure on " + path.string());
    }
  }
  fs::rename(tmp, path);
}

DatasetVariant load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open manifest " + path.string());
  }
  DatasetVariant v;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) {
        continue;
      }
      const auto j = nlohmann::json::parse(line);
      if (!have_header) {
        if (j.value("kind", "") != "header") {
          throw IoError("manifest " + path.string() + " lacks a header line");
        }
        v.name = j.at("variant").get<std::string>();
        v.parent = j.at("parent").get<std::string>();
        v.root = j.at("root").get<std::string>();
        v.recipe = j.at("recipe").get<Recipe>();
        v.seed = j.at("seed").get<std::uint64_t>();
        v.classes = j.at("classes").get<std::vector<std::string>>();
        v.imbalanced_classes = j.at("imbalanced_classes").get<std::vector<std::int64_t>>();
        v.repro = j.value("repro", nlohmann::json::object());
        have_header = true;
        continue;
      }
      v.records.push_back(record_from_json(j));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest " + path.string() + " line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!have_header) {
    throw IoError("empty manifest " + path.string());
  }
  return v;
}

std::string manifest_hash(const DatasetVariant& variant, Split split) {
  std::string text;
  for (const auto* r : variant.split(split)) {
    text += record_to_json(*r).dump();
    text += '\n';
  }
  return sha256_hex(text);
}

void ToyConfig::validate() const {
  if (num_classes < 1 || per_class < 1) {
    throw ConfigError("toy dataset needs at least one class and one sample per class");
  }
  if (resolution < 8 || (resolution & (resolution - 1)) != 0) {
    throw ConfigError("toy resolution must be a power of two >= 8");
  }
}

namespace {

cv::Mat render_toy(std::int64_t class_index, std::int64_t num_classes, std::int64_t resolution, rng::Stream& s) {
  const int R = static_cast<int>(resolution);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * s.uniform01(); };
  // ground hue sits in a per-class sector of the color wheel; neighbours nearly touch
  constexpr double kTwoPi = 6.283185307179586;
  const double hue = kTwoPi * ((static_cast<double>(class_index) + uniform(-0.4, 0.4)) / static_cast<double>(num_classes));
  const double mid = uniform(95, 125);
  const double amp = uniform(35, 50);
  int base[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = static_cast<int>(std::lround(mid + amp * std::cos(hue - kTwoPi * c / 3.0)));
  }
  cv::Mat img(R, R, CV_8UC3);
  for (int y = 0; y < R; ++y) {
    for (int x = 0; x < R; ++x) {
      const int n = static_cast<int>(uniform(-8, 8));
      auto& px = img.at<cv::Vec3b>(y, x);
      // OpenCV stores BGR
      px[0] = static_cast<unsigned char>(base[2] + n);
      px[1] = static_cast<unsigned char>(base[1] + n);
      px[2] = static_cast<unsigned char>(base[0] + n);
    }
  }
  const int rects = static_cast<int>(1 + 3 * class_index);
  const int lines = static_cast<int>(1 + class_index);
  for (int i = 0; i < rects; ++i) {
    const int w = static_cast<int>(uniform(R / 10.0, R / 4.0));
    const int h = static_cast<int>(uniform(R / 10.0, R / 4.0));
    const int x = static_cast<int>(uniform(0, R - w));
    const int y = static_cast<int>(uniform(0, R - h));
    const int g = static_cast<int>(uniform(110, 235));
    cv::rectangle(img, cv::Rect(x, y, std::max(w, 1), std::max(h, 1)), cv::Scalar(g, g, g), cv::FILLED);
  }
  for (int i = 0; i < lines; ++i) {
    const cv::Point a(static_cast<int>(uniform(0, R)), static_cast<int>(uniform(0, R)));
    const cv::Point b(static_cast<int>(uniform(0, R)), static_cast<int>(uniform(0, R)));
    const int g = static_cast<int>(uniform(110, 235));
    cv::line(img, a, b, cv::Scalar(g, g, g), std::max(1, R / 16), cv::LINE_8);
  }
  return img;
}

}  // namespace

Dataset synth_toy(const ToyConfig& config, const fs::path& out_root) {
  config.validate();
  for (std::int64_t c = 0; c < config.num_classes; ++c) {
    char name[32];
    std::snprintf(name, sizeof(name), "class_%02lld", static_cast<long long>(c));
    const auto dir = out_root / name;
    fs::create_directories(dir);
    for (std::int64_t i = 0; i < config.per_class; ++i) {
      rng::Stream s(rng::derive_seed(rng::derive_seed(config.seed, static_cast<std::uint64_t>(c)),
                                     static_cast<std::uint64_t>(i)));
      const auto img = render_toy(c, config.num_classes, config.resolution, s);
      char file[32];
      std::snprintf(file, sizeof(file), "%05lld.png", static_cast<long long>(i));
      std::vector<unsigned char> bytes;
      cv::imencode(".png", img, bytes, {cv::IMWRITE_PNG_COMPRESSION, 6});
      std::ofstream out(dir / file, std::ios::binary | std::ios::trunc);
      out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
      if (!out.flush()) {
        throw IoError("cannot write " + (dir / file).string());
      }
    }
  }
  return load_dataset(out_root, LoadOptions{false});
}

double structure_fraction(const torch::Tensor& pixels) {
  if (pixels.dim() != 3 || pixels.size(2) != 3) {
    throw DimensionError("structure_fraction expects (H, W, 3) pixels");
  }
  const auto p = pixels.to(torch::kInt32);
  const auto spread = std::get<0>(p.max(2)) - std::get<0>(p.min(2));
  return (spread <= 12).to(torch::kFloat64).mean().item<double>();
}

TensorSplit load_split(const DatasetVariant& variant, Split split, std::int64_t resolution) {
  std::vector<torch::Tensor> images;
  std::vector<std::int64_t> labels;
  for (const auto* r : variant.split(split)) {
    images.push_back(image::read_image(variant.resolve(*r), resolution));
    labels.push_back(r->class_id);
  }
  if (images.empty()) {
    return {torch::empty({0, 3, resolution, resolution}), torch::empty({0}, torch::kInt64)};
  }
  return {torch::stack(images), torch::tensor(labels, torch::kInt64)};
}

TensorSplit load_all(const Dataset& dataset, std::int64_t resolution) {
  std::vector<torch::Tensor> images;
  std::vector<std::int64_t> labels;
  for (const auto& r : dataset.samples) {
    images.push_back(image::read_image(dataset.root / r.path, resolution));
    labels.push_back(r.class_id);
  }
  return {torch::stack(images), torch::tensor(labels, torch::kInt64)};
}

}  // namespace swasat::data
