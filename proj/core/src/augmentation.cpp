#include "swasat/augmentation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <unordered_set>

#include <opencv2/imgproc.hpp>
#include <torch/torch.h>

#include "swasat/editing.hpp"
#include "swasat/errors.hpp"
#include "swasat/hashing.hpp"
#include "swasat/image_io.hpp"
#include "swasat/rng.hpp"

namespace fs = std::filesystem;

namespace swasat::aug {
namespace {

void check_square(const torch::Tensor& image) {
  if (image.dim() != 3 || image.size(1) != image.size(2)) {
    throw DimensionError("augmentation expects a square (C, H, W) image");
  }
}

std::string write_png_bytes(const fs::path& path, const std::string& bytes) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out.flush()) {
    throw IoError("cannot write " + path.string());
  }
  return sha256_hex(bytes);
}

std::string short_hash(const std::string& h) { return h.substr(0, 16); }

}  // namespace

torch::Tensor rotate(const torch::Tensor& image, int degrees) {
  check_square(image);
  const int d = ((degrees % 360) + 360) % 360;
  if (d % 90 == 0) {
    return torch::rot90(image, d / 90, {1, 2}).contiguous();
  }
  const auto c = image.size(0);
  const auto h = static_cast<int>(image.size(1));
  const auto w = static_cast<int>(image.size(2));
  auto hwc = image.to(torch::kFloat32).permute({1, 2, 0}).contiguous();
  cv::Mat src(h, w, CV_32FC(static_cast<int>(c)), hwc.data_ptr<float>());
  const cv::Point2f center((static_cast<float>(w) - 1.0f) / 2.0f, (static_cast<float>(h) - 1.0f) / 2.0f);
  const auto m = cv::getRotationMatrix2D(center, static_cast<double>(d), 1.0);
  cv::Mat dst;
  cv::warpAffine(src, dst, m, src.size(), cv::INTER_LINEAR, cv::BORDER_REFLECT_101);
  auto out = torch::from_blob(dst.data, {h, w, c}, torch::kFloat32).clone();
  return out.permute({2, 0, 1}).contiguous().to(image.dtype());
}

torch::Tensor hflip(const torch::Tensor& image) {
  check_square(image);
  return image.flip({2}).contiguous();
}

std::array<int, 3> baseline_angles(std::uint64_t seed) {
  const auto pick = rng::sample_without_replacement(kRotationAngles.size(), 3, seed);
  return {kRotationAngles[pick[0]], kRotationAngles[pick[1]], kRotationAngles[pick[2]]};
}

std::vector<BaselineOutput> baseline_augment(const torch::Tensor& image, std::uint64_t seed) {
  check_square(image);
  std::vector<BaselineOutput> out;
  for (const auto angle : baseline_angles(seed)) {
    out.push_back({rotate(image, angle), "rot" + std::to_string(angle), angle});
  }
  out.push_back({hflip(image), "hflip", 0});
  return out;
}

torch::Tensor apply_op(const torch::Tensor& image, const std::string& op) {
  if (op == "hflip") {
    return hflip(image);
  }
  if (op.rfind("rot", 0) == 0) {
    return rotate(image, std::stoi(op.substr(3)));
  }
  throw DataError("unknown augmentation op '" + op + "'");
}

void AugmentationBatch::append(AugmentationBatch other) {
  if (candidates.empty()) {
    *this = std::move(other);
    return;
  }
  if (other.checkpoint_hash != checkpoint_hash || other.directions_hash != directions_hash || other.psi != psi ||
      other.annotator_hash != annotator_hash) {
    throw DataError("cannot merge candidate batches with different provenance");
  }
  for (auto& c : other.candidates) {
    candidates.push_back(std::move(c));
  }
}

std::array<double, 4> exploration_alphas(double a) { return {-2.0 * a, -a, a, 2.0 * a}; }

AugmentationBatch sefa_candidates(Generator& generator, const sefa::SemanticDirectionSet& directions,
                                  std::int64_t direction_index, const std::vector<std::uint64_t>& seeds,
                                  const std::array<double, 4>& alphas, double psi) {
  const auto& dir = directions.at(direction_index);
  (void)dir;
  torch::NoGradGuard no_grad;
  TruncationConfig trunc;
  trunc.psi = psi;
  trunc.w_mean = generator->w_mean;
  AugmentationBatch batch;
  batch.checkpoint_hash = directions.checkpoint_hash;
  batch.directions_hash = editing::directions_hash(directions);
  batch.psi = psi;
  for (const auto seed : seeds) {
    const auto base = mapped_latent(generator, seed, trunc);
    batch.candidates.push_back({render(generator, base), seed, 0, direction_index, 0.0});
    for (std::size_t m = 0; m < alphas.size(); ++m) {
      const auto edited = editing::edit_latent(base, directions, direction_index, alphas[m]);
      batch.candidates.push_back(
          {render(generator, edited), seed, static_cast<std::int64_t>(m + 1), direction_index, alphas[m]});
    }
  }
  return batch;
}

void pseudo_label_scores(AugmentationBatch& batch, const torch::Tensor& scores, double tau) {
  if (scores.dim() != 2 || scores.size(0) != static_cast<std::int64_t>(batch.candidates.size())) {
    throw DimensionError("pseudo_label: expected one score row per candidate");
  }
  const auto s = scores.to(torch::kFloat64).contiguous();
  const auto probs = torch::softmax(s, 1);
  for (std::int64_t i = 0; i < s.size(0); ++i) {
    auto& c = batch.candidates[static_cast<std::size_t>(i)];
    c.pseudo_label = s[i].argmax().item<std::int64_t>();
    c.confidence = probs[i][c.pseudo_label].item<double>();
    c.accepted = c.confidence >= tau;
  }
}

void pseudo_label(cls::Classifier& annotator, AugmentationBatch& batch, const std::vector<std::string>& target_classes,
                  double tau) {
  if (annotator->classes() != target_classes) {
    throw DataError("annotator classes (" + std::to_string(annotator->num_classes()) +
                    ") do not match the target dataset classes (" + std::to_string(target_classes.size()) + ")");
  }
  if (batch.candidates.empty()) {
    return;
  }
  std::vector<torch::Tensor> images;
  const auto res = annotator->config().resolution;
  for (const auto& c : batch.candidates) {
    // quantize first so labels describe exactly the stored image
    auto img = image::from_uint8(image::to_uint8(c.image));
    if (img.size(1) != res || img.size(2) != res) {
      img = image::resize(img, res, res);
    }
    images.push_back(img);
  }
  pseudo_label_scores(batch, annotator->scores(torch::stack(images)), tau);
  batch.annotator_hash = cls::classifier_hash(annotator);
  batch.annotator_classes = annotator->classes();
}

std::map<std::int64_t, std::int64_t> matched_targets(const data::DatasetVariant& variant) {
  const auto counts = variant.counts(data::Split::kTrain);
  std::map<std::int64_t, std::int64_t> out;
  for (const auto c : variant.imbalanced_classes) {
    out[c] = 5 * counts[static_cast<std::size_t>(c)];
  }
  return out;
}

std::map<std::int64_t, std::int64_t> balanced_targets(const data::DatasetVariant& variant) {
  std::map<std::int64_t, std::int64_t> out;
  for (const auto c : variant.imbalanced_classes) {
    out[c] = variant.recipe.balanced.train;
  }
  return out;
}

std::map<std::int64_t, std::int64_t> targets_for(const data::DatasetVariant& variant, TargetRule rule) {
  return rule == TargetRule::kMatched ? matched_targets(variant) : balanced_targets(variant);
}

RebalanceResult rebalance(const data::DatasetVariant& variant, const AugmentationBatch& batch,
                          const std::map<std::int64_t, std::int64_t>& targets, std::uint64_t seed,
                          const fs::path& out_dir, bool allow_shortfall) {
  if (batch.candidates.size() % 5 != 0) {
    throw DataError("candidate batch is not made of 1 + 4 groups");
  }
  RebalanceResult result{variant, {}, {}};
  auto& out = result.variant;
  const auto counts = variant.counts(data::Split::kTrain);
  std::unordered_set<std::string> hashes;
  for (const auto& r : variant.records) {
    hashes.insert(r.hash);
  }
  std::vector<bool> used(batch.candidates.size(), false);
  const auto groups = static_cast<std::size_t>(batch.num_groups());

  std::map<std::int64_t, std::int64_t> deficits;
  for (const auto& [cls_id, target] : targets) {
    if (cls_id < 0 || cls_id >= static_cast<std::int64_t>(variant.classes.size())) {
      throw DataError("rebalance target names unknown class id " + std::to_string(cls_id));
    }
    const auto have = counts[static_cast<std::size_t>(cls_id)];
    std::int64_t need = target - have;
    if (need <= 0) {
      continue;
    }
    rng::Stream stream(rng::derive_seed(rng::derive_seed(seed, "rebalance"), static_cast<std::uint64_t>(cls_id)));
    std::int64_t added = 0;
    bool progress = true;
    while (need > 0 && progress) {
      progress = false;
      // a pass only makes sense while some unused matching candidate is left
      bool any_left = false;
      for (std::size_t i = 0; i < batch.candidates.size(); ++i) {
        const auto& c = batch.candidates[i];
        if (!used[i] && c.accepted && c.pseudo_label == cls_id) {
          any_left = true;
          break;
        }
      }
      if (!any_left) {
        break;
      }
      for (std::size_t g = 0; g < groups && need > 0; ++g) {
        const auto mask = stream.uniform_index(32);  // uniform subset of the 5 members
        for (std::size_t m = 0; m < 5 && need > 0; ++m) {
          if (((mask >> m) & 1u) == 0) {
            continue;
          }
          const auto i = g * 5 + m;
          const auto& c = batch.candidates[i];
          if (used[i] || !c.accepted || c.pseudo_label != cls_id) {
            continue;
          }
          used[i] = true;
          const auto bytes = image::encode_png(c.image);
          const auto hash = sha256_hex(bytes);
          if (!hashes.insert(hash).second) {
            continue;  // identical pixels already present
          }
          char name[64];
          std::snprintf(name, sizeof(name), "s%llu_m%lld.png", static_cast<unsigned long long>(c.seed),
                        static_cast<long long>(c.member));
          const auto path = fs::absolute(out_dir / "sefa" / variant.classes[static_cast<std::size_t>(cls_id)] / name);
          write_png_bytes(path, bytes);
          data::SampleRecord rec;
          rec.path = path.lexically_normal().string();
          rec.class_name = variant.classes[static_cast<std::size_t>(cls_id)];
          rec.class_id = cls_id;
          rec.split = data::Split::kTrain;
          rec.provenance = data::Provenance::kSefaAug;
          rec.hash = hash;
          rec.origin = {{"seed", c.seed},
                        {"member", c.member},
                        {"direction_index", c.direction_index},
                        {"alpha", c.alpha},
                        {"psi", batch.psi},
                        {"checkpoint_hash", batch.checkpoint_hash},
                        {"directions_hash", batch.directions_hash},
                        {"annotator_hash", batch.annotator_hash},
                        {"pseudo_label", c.pseudo_label},
                        {"confidence", c.confidence}};
          out.records.push_back(std::move(rec));
          ++added;
          --need;
          progress = true;
        }
      }
    }
    result.added[cls_id] = added;
    if (need > 0) {
      deficits[cls_id] = need;
    }
  }
  if (!deficits.empty() && !allow_shortfall) {
    std::string msg = "rebalance shortfall:";
    for (const auto& [c, d] : deficits) {
      msg += " " + variant.classes[static_cast<std::size_t>(c)] + " needs " + std::to_string(d) + " more";
    }
    throw DataError(msg);
  }
  result.deficit = deficits;
  out.repro["sefa"] = {{"seed", seed},
                       {"checkpoint_hash", batch.checkpoint_hash},
                       {"directions_hash", batch.directions_hash},
                       {"annotator_hash", batch.annotator_hash},
                       {"psi", batch.psi}};
  out.validate();
  return result;
}

data::DatasetVariant baseline_variant(const data::DatasetVariant& variant, std::uint64_t seed, const fs::path& out_dir,
                                      std::optional<std::vector<std::int64_t>> classes) {
  const auto chosen = classes.value_or(variant.imbalanced_classes);
  const std::set<std::int64_t> wanted(chosen.begin(), chosen.end());
  data::DatasetVariant out = variant;
  std::unordered_set<std::string> hashes;
  for (const auto& r : variant.records) {
    hashes.insert(r.hash);
  }
  for (const auto& r : variant.records) {
    if (r.split != data::Split::kTrain || r.provenance != data::Provenance::kOriginal || !wanted.count(r.class_id)) {
      continue;
    }
    const auto image_seed = rng::derive_seed(seed, r.hash);
    const auto source = image::read_image(variant.resolve(r));
    for (const auto& o : baseline_augment(source, image_seed)) {
      const auto bytes = image::encode_png(o.image);
      const auto hash = sha256_hex(bytes);
      if (!hashes.insert(hash).second) {
        continue;  // symmetric source: the op reproduced an existing image
      }
      const auto path =
          fs::absolute(out_dir / "baseline" / r.class_name / (short_hash(r.hash) + "_" + o.op + ".png"));
      write_png_bytes(path, bytes);
      data::SampleRecord rec;
      rec.path = path.lexically_normal().string();
      rec.class_name = r.class_name;
      rec.class_id = r.class_id;
      rec.split = data::Split::kTrain;
      rec.provenance = data::Provenance::kBaselineAug;
      rec.hash = hash;
      rec.origin = {{"source_hash", r.hash}, {"source_path", r.path}, {"op", o.op}, {"seed", image_seed}};
      out.records.push_back(std::move(rec));
    }
  }
  out.repro["baseline"] = {{"seed", seed}, {"classes", chosen}};
  out.validate();
  return out;
}

data::DatasetVariant mixed_variant(const data::DatasetVariant& raw, const data::DatasetVariant& baseline,
                                   const data::DatasetVariant& sefa) {
  data::DatasetVariant out = baseline;
  std::unordered_set<std::string> raw_hashes;
  for (const auto& r : raw.records) {
    raw_hashes.insert(r.hash);
  }
  for (const auto& r : sefa.records) {
    if (!raw_hashes.count(r.hash)) {
      out.records.push_back(r);
    }
  }
  if (sefa.repro.contains("sefa")) {
    out.repro["sefa"] = sefa.repro["sefa"];
  }
  out.validate();
  return out;
}

std::int64_t added_count(const data::DatasetVariant& variant) {
  return static_cast<std::int64_t>(std::count_if(variant.records.begin(), variant.records.end(), [](const auto& r) {
    return r.provenance != data::Provenance::kOriginal;
  }));
}

std::string regenerate(const data::SampleRecord& record, const data::DatasetVariant& variant, Generator* generator,
                       const sefa::SemanticDirectionSet* directions) {
  switch (record.provenance) {
    case data::Provenance::kOriginal:
      throw DataError("original samples have nothing to regenerate");
    case data::Provenance::kBaselineAug: {
      const auto& o = record.origin;
      const auto source_hash = o.at("source_hash").get<std::string>();
      const auto it = std::find_if(variant.records.begin(), variant.records.end(),
                                   [&](const auto& r) { return r.hash == source_hash; });
      if (it == variant.records.end()) {
        throw NotFoundError("source sample " + source_hash + " is not in the variant");
      }
      const auto source = image::read_image(variant.resolve(*it));
      return image::encode_png(apply_op(source, o.at("op").get<std::string>()));
    }
    case data::Provenance::kSefaAug: {
      if (generator == nullptr || directions == nullptr) {
        throw ConfigError("regenerating a sefa sample needs the generator and its directions");
      }
      const auto& o = record.origin;
      if (o.at("checkpoint_hash").get<std::string>() != directions->checkpoint_hash ||
          o.at("directions_hash").get<std::string>() != editing::directions_hash(*directions)) {
        throw DataError("sample " + record.path + " came from a different checkpoint or directions file");
      }
      TruncationConfig trunc;
      trunc.psi = o.at("psi").get<double>();
      trunc.w_mean = (*generator)->w_mean;
      const auto base = mapped_latent(*generator, o.at("seed").get<std::uint64_t>(), trunc);
      const auto alpha = o.at("alpha").get<double>();
      const auto latent = o.at("member").get<std::int64_t>() == 0
                              ? base
                              : editing::edit_latent(base, *directions, o.at("direction_index").get<std::int64_t>(), alpha);
      return image::encode_png(render(*generator, latent));
    }
  }
  throw DataError("unknown provenance");
}

void save_batch(const AugmentationBatch& batch, const fs::path& dir) {
  fs::create_directories(dir / "candidates");
  std::ofstream manifest(dir / "provenance.jsonl", std::ios::trunc);
  manifest << nlohmann::json{{"kind", "header"},
                             {"checkpoint_hash", batch.checkpoint_hash},
                             {"directions_hash", batch.directions_hash},
                             {"psi", batch.psi},
                             {"annotator_hash", batch.annotator_hash},
                             {"annotator_classes", batch.annotator_classes}}
                  .dump()
           << '\n';
  for (const auto& c : batch.candidates) {
    char name[64];
    std::snprintf(name, sizeof(name), "%llu_%lld.png", static_cast<unsigned long long>(c.seed),
                  static_cast<long long>(c.member));
    const auto hash = write_png_bytes(dir / "candidates" / name, image::encode_png(c.image));
    manifest << nlohmann::json{{"file", std::string("candidates/") + name},
                               {"hash", hash},
                               {"seed", c.seed},
                               {"member", c.member},
                               {"direction_index", c.direction_index},
                               {"alpha", c.alpha},
                               {"pseudo_label", c.pseudo_label},
                               {"confidence", c.confidence},
                               {"accepted", c.accepted}}
                    .dump()
             << '\n';
  }
  if (!manifest.flush()) {
    throw IoError("cannot write " + (dir / "provenance.jsonl").string());
  }
}

AugmentationBatch collect_candidates(Generator& generator, const sefa::SemanticDirectionSet& directions,
                                     cls::Classifier& annotator, const std::vector<std::string>& target_classes,
                                     const std::map<std::int64_t, std::int64_t>& needed, const SefaPlan& plan) {
  AugmentationBatch all;
  std::map<std::int64_t, std::int64_t> have;
  std::uint64_t next = plan.first_seed;
  const auto satisfied = [&] {
    for (const auto& [c, n] : needed) {
      if (have[c] < n) return false;
    }
    return true;
  };
  while (!satisfied() && static_cast<std::int64_t>(next - plan.first_seed) < plan.max_seeds) {
    std::vector<std::uint64_t> seeds;
    for (std::int64_t i = 0; i < plan.chunk && static_cast<std::int64_t>(next - plan.first_seed) < plan.max_seeds; ++i) {
      seeds.push_back(next++);
    }
    auto batch = sefa_candidates(generator, directions, plan.direction_index, seeds, plan.alphas, plan.psi);
    pseudo_label(annotator, batch, target_classes, plan.tau);
    for (const auto& c : batch.candidates) {
      if (c.accepted) ++have[c.pseudo_label];
    }
    all.append(std::move(batch));
  }
  return all;
}

StrategySet strategy_variants(const data::DatasetVariant& raw, Generator& generator,
                              const sefa::SemanticDirectionSet& directions, cls::Classifier& annotator,
                              const SefaPlan& plan, std::uint64_t seed, const fs::path& out_dir) {
  StrategySet out;
  const auto targets = targets_for(raw, plan.targets);
  const auto counts = raw.counts(data::Split::kTrain);
  std::map<std::int64_t, std::int64_t> needed;
  for (const auto& [c, t] : targets) {
    needed[c] = t - counts[static_cast<std::size_t>(c)];
  }
  out.candidates = collect_candidates(generator, directions, annotator, raw.classes, needed, plan);
  auto baseline = baseline_variant(raw, rng::derive_seed(seed, "baseline"), out_dir);
  auto sefa = rebalance(raw, out.candidates, targets, rng::derive_seed(seed, "sefa"), out_dir).variant;
  auto mixed = mixed_variant(raw, baseline, sefa);
  out.variants[cls::Strategy::kImbalanced] = raw;
  out.variants[cls::Strategy::kBaseline] = std::move(baseline);
  out.variants[cls::Strategy::kSefa] = std::move(sefa);
  out.variants[cls::Strategy::kMixed] = std::move(mixed);
  return out;
}

}  // namespace swasat::aug
