#include "focus/leakage.h"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "focus/error.h"
#include "focus/features.h"
#include "focus/parallel.h"
#include "focus/random.h"
#include "numeric.h"

namespace focus {
namespace {

using json = nlohmann::json;

constexpr const char* kConditions[2] = {"single", "multi"};

struct InstanceOutcome {
  LeakageRecord runs[2];
  double similarity = 0.0;
  bool zero_norm = false;
};

LeakageRecord run_condition(const LeakageInstance& inst, int condition,
                            const LogitProvider& provider, const DecodingConfig& config,
                            const LeakageOptions& options,
                            const std::array<TokenId, 3>& letters) {
  LeakageRecord record;
  record.id = inst.id;
  record.condition = kConditions[condition];

  DecodingConfig local = config;
  local.seed = RandomStream(config.seed).derive(inst.id).derive(record.condition).key();
  std::vector<ImageTensor> images;
  int slot = 1;
  if (condition == 0) {
    images.push_back(inst.target_image());
  } else {
    images = inst.images;
    slot = inst.target_index;
  }
  const std::vector<std::vector<TokenId>> candidates{{letters[0]}, {letters[1]}, {letters[2]}};
  try {
    const CandidateRanking ranking =
        score_candidates(provider, images, leakage_prompt(inst, options.prompt_template, slot),
                         candidates, local, options.exec);
    record.complete = true;
    record.forward_passes = ranking.forward_pass_count;
    std::copy(ranking.scores.begin(), ranking.scores.end(), record.scores.begin());
    record.predicted_letter = ranking.best();
    record.predicted_role = inst.binding[ranking.best()];
  } catch (const std::exception& e) {
    record.error = e.what();
  }
  return record;
}

json caption_json(const Candidate& c) { return json{{"text", c.text}, {"tokens", c.tokens}}; }

Candidate caption_from(const json& j) {
  return Candidate{j.at("text").get<std::string>(), j.at("tokens").get<std::vector<TokenId>>()};
}

}  // namespace

std::string_view to_string(CaptionRole role) {
  switch (role) {
    case CaptionRole::kTarget: return "target";
    case CaptionRole::kDistractor: return "distractor";
    case CaptionRole::kMerged: return "merged";
  }
  return "unknown";
}

CaptionRole parse_caption_role(std::string_view text) {
  if (text == "target") return CaptionRole::kTarget;
  if (text == "distractor") return CaptionRole::kDistractor;
  if (text == "merged") return CaptionRole::kMerged;
  throw InvalidArgument("unknown caption role '" + std::string(text) + "'");
}

void LeakageInstance::validate() const {
  if (images.size() != 2) throw InvalidArgument("leakage instance " + id + " needs two images");
  if (!image_paths.empty() && image_paths.size() != 2) {
    throw InvalidArgument("leakage instance " + id + ": image_paths must match images");
  }
  if (target_index != 1 && target_index != 2) {
    throw InvalidArgument("leakage instance " + id + ": target_index must be 1 or 2");
  }
  if (target == distractor || target == merged || distractor == merged) {
    throw InvalidArgument("leakage instance " + id + ": captions must be pairwise distinct");
  }
  for (const Candidate* c : {&target, &distractor, &merged}) {
    if (c->text.empty()) throw InvalidArgument("leakage instance " + id + ": empty caption");
  }
  std::set<CaptionRole> roles(binding.begin(), binding.end());
  if (roles.size() != 3) {
    throw InvalidArgument("leakage instance " + id + ": option binding is not a bijection");
  }
}

const Candidate& LeakageInstance::caption(CaptionRole role) const {
  switch (role) {
    case CaptionRole::kTarget: return target;
    case CaptionRole::kDistractor: return distractor;
    case CaptionRole::kMerged: return merged;
  }
  throw InvalidArgument("unknown caption role");
}

std::size_t LeakageInstance::letter_of(CaptionRole role) const {
  return static_cast<std::size_t>(std::find(binding.begin(), binding.end(), role) -
                                  binding.begin());
}

double selection_ratio(std::span<const char> predictions, char merged_label) {
  if (predictions.empty()) throw InvalidArgument("selection_ratio: no predictions");
  const auto hits = std::count(predictions.begin(), predictions.end(), merged_label);
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double feature_similarity(const ImageTensor& a, const ImageTensor& b, bool* zero_norm) {
  const FeatureVector fa = image_features(a);
  const FeatureVector fb = image_features(b);
  bool zero = false;
  const double s = cosine_similarity(fa, fb, &zero);
  if (zero_norm) *zero_norm = zero;
  if (!zero && fa == fb) return 1.0;
  return s;
}

std::array<TokenId, 3> option_tokens_from(const VocabInfo& vocab) {
  std::array<TokenId, 3> out{};
  const char* names[3] = {"A", "B", "C"};
  for (int i = 0; i < 3; ++i) {
    const auto t = vocab.find(names[i]);
    if (!t) {
      throw InvalidArgument(std::string("vocabulary has no token named '") + names[i] +
                            "'; pass option token ids explicitly");
    }
    out[i] = *t;
  }
  return out;
}

std::string leakage_prompt(const LeakageInstance& instance, std::string_view tmpl, int slot) {
  std::vector<std::string> texts;
  for (CaptionRole role : instance.binding) texts.push_back(instance.caption(role).text);
  std::string prompt = substitute(std::string(tmpl), "slot", std::to_string(slot));
  return substitute(std::move(prompt), "options", format_options(texts));
}

LeakageReport run_leakage_experiment(std::span<const LeakageInstance> instances,
                                     const LogitProvider& provider,
                                     const DecodingConfig& config,
                                     const LeakageOptions& options) {
  if (instances.empty()) throw InvalidArgument("run_leakage_experiment: no instances");
  config.validate();
  for (const auto& inst : instances) inst.validate();
  const std::array<TokenId, 3> letters =
      options.option_tokens ? *options.option_tokens : option_tokens_from(provider.vocab());

  std::vector<InstanceOutcome> outcomes(instances.size());
  parallel_for(instances.size(), options.jobs, [&](std::size_t i) {
    const LeakageInstance& inst = instances[i];
    InstanceOutcome& out = outcomes[i];
    for (int c = 0; c < 2; ++c) {
      out.runs[c] = run_condition(inst, c, provider, config, options, letters);
    }
    out.similarity = feature_similarity(inst.images[0], inst.images[1], &out.zero_norm);
  });

  LeakageReport report;
  report.config = config;
  report.prompt_template = options.prompt_template;
  std::size_t merged[2] = {0, 0};
  std::size_t right[2] = {0, 0};
  std::size_t done[2] = {0, 0};
  std::vector<double> similarities;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    similarities.push_back(outcomes[i].similarity);
    report.similarity_warnings += outcomes[i].zero_norm;
    for (int c = 0; c < 2; ++c) {
      LeakageRecord& r = outcomes[i].runs[c];
      report.forward_pass_count += r.forward_passes;
      if (!r.complete) {
        ++report.n_failed;
      } else {
        ++done[c];
        merged[c] += *r.predicted_role == CaptionRole::kMerged;
        right[c] += *r.predicted_role == CaptionRole::kTarget;
      }
      report.records.push_back(std::move(r));
    }
  }
  auto ratio = [](std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  report.n_single = done[0];
  report.n_multi = done[1];
  report.r_single = ratio(merged[0], done[0]);
  report.r_multi = ratio(merged[1], done[1]);
  report.c_score = report.r_multi - report.r_single;
  report.acc_single = ratio(right[0], done[0]);
  report.acc_multi = ratio(right[1], done[1]);
  report.mean_pair_similarity =
      detail::order_free_sum(similarities) / static_cast<double>(similarities.size());
  return report;
}

std::vector<LeakageInstance> load_leakage_instances(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open leakage file " + path.string());
  const auto base = path.parent_path();
  std::vector<LeakageInstance> out;
  std::set<std::string> ids;
  std::string text;
  for (std::size_t line = 1; std::getline(in, text); ++line) {
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(text);
      if (j.at("schema_version").get<int>() != kSchemaVersion) {
        throw SchemaError("unsupported schema_version", line);
      }
      LeakageInstance inst;
      inst.id = j.at("id").get<std::string>();
      for (const auto& image : j.at("images")) {
        inst.images.push_back(load_image_ref(image, base));
        inst.image_paths.push_back(image.value("path", std::string()));
      }
      if (std::all_of(inst.image_paths.begin(), inst.image_paths.end(),
                      [](const std::string& p) { return p.empty(); })) {
        inst.image_paths.clear();
      }
      inst.target_index = j.at("target_index").get<int>();
      const json& captions = j.at("captions");
      inst.target = caption_from(captions.at("target"));
      inst.distractor = caption_from(captions.at("distractor"));
      inst.merged = caption_from(captions.at("merged"));
      const json& binding = j.at("option_binding");
      const char* letters[3] = {"A", "B", "C"};
      for (int i = 0; i < 3; ++i) {
        inst.binding[i] = parse_caption_role(binding.at(letters[i]).get<std::string>());
      }
      inst.validate();
      if (!ids.insert(inst.id).second) throw SchemaError("duplicate id '" + inst.id + "'", line);
      out.push_back(std::move(inst));
    } catch (const SchemaError&) {
      throw;
    } catch (const json::exception& e) {
      throw SchemaError(e.what(), line);
    } catch (const Error& e) {
      throw SchemaError(e.what(), line);
    }
  }
  return out;
}

void save_leakage_instances(const std::filesystem::path& path,
                            std::span<const LeakageInstance> instances) {
  const auto base = path.parent_path();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write leakage file " + path.string());
  for (const auto& inst : instances) {
    inst.validate();
    json images = json::array();
    for (std::size_t i = 0; i < 2; ++i) {
      images.push_back(save_image_ref(
          inst.images[i], inst.image_paths.empty() ? std::string() : inst.image_paths[i], base));
    }
    json binding = json::object();
    for (std::size_t i = 0; i < 3; ++i) {
      binding[std::string(1, static_cast<char>('A' + i))] = to_string(inst.binding[i]);
    }
    json j{{"schema_version", kSchemaVersion},
           {"id", inst.id},
           {"images", std::move(images)},
           {"target_index", inst.target_index},
           {"captions",
            {{"target", caption_json(inst.target)},
             {"distractor", caption_json(inst.distractor)},
             {"merged", caption_json(inst.merged)}}},
           {"option_binding", std::move(binding)}};
    out << j.dump() << '\n';
  }
  if (!out) throw Error("cannot write leakage file " + path.string());
}

void to_json(json& j, const LeakageRecord& r) {
  j = json{{"schema_version", kSchemaVersion},
           {"id", r.id},
           {"condition", r.condition},
           {"complete", r.complete}};
  if (r.complete) {
    j["predicted"] = std::string(1, static_cast<char>('A' + *r.predicted_letter));
    j["predicted_role"] = to_string(*r.predicted_role);
    j["scores"] = r.scores;
    j["forward_passes"] = r.forward_passes;
  } else {
    j["error"] = r.error;
  }
}

void to_json(json& j, const LeakageReport& r) {
  j = json{{"schema_version", kSchemaVersion},
           {"r_single", r.r_single},
           {"r_multi", r.r_multi},
           {"c_score", r.c_score},
           {"acc_single", r.acc_single},
           {"acc_multi", r.acc_multi},
           {"mean_pair_similarity", r.mean_pair_similarity},
           {"similarity_measure", "feature cosine (substitute for CLIP similarity)"},
           {"similarity_warnings", r.similarity_warnings},
           {"n_single", r.n_single},
           {"n_multi", r.n_multi},
           {"n_failed", r.n_failed},
           {"complete", r.complete()},
           {"forward_pass_count", r.forward_pass_count},
           {"config", r.config},
           {"prompt_template", r.prompt_template},
           {"records", r.records}};
}

}  // namespace focus
