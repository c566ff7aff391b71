#include "focus/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "focus/error.h"
#include "focus/image_io.h"
#include "focus/random.h"
#include "focus/wire.h"

namespace focus {
namespace {

using json = nlohmann::json;

template <typename T>
T field(const json& j, const char* name, std::size_t line) {
  const auto it = j.find(name);
  if (it == j.end()) throw SchemaError(std::string("missing field '") + name + "'", line);
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw SchemaError(std::string("field '") + name + "' has the wrong type", line);
  }
}

EvalInstance parse_instance(const json& j, const std::filesystem::path& base,
                            std::size_t line) {
  if (!j.is_object()) throw SchemaError("expected a JSON object", line);
  const int version = field<int>(j, "schema_version", line);
  if (version != kSchemaVersion) {
    throw SchemaError("unsupported schema_version " + std::to_string(version), line);
  }
  EvalInstance inst;
  inst.id = field<std::string>(j, "id", line);
  try {
    inst.task_kind = parse_task_kind(field<std::string>(j, "task_kind", line));
  } catch (const InvalidArgument& e) {
    throw SchemaError(e.what(), line);
  }
  inst.prompt_template = field<std::string>(j, "prompt_template", line);
  inst.group_id = j.value("group_id", std::string());
  const auto gold = field<long long>(j, "gold", line);
  if (gold < 0) throw SchemaError("gold must be >= 0", line);
  inst.gold = static_cast<std::size_t>(gold);

  const auto images = field<json>(j, "images", line);
  if (!images.is_array()) throw SchemaError("'images' must be an array", line);
  for (const auto& image : images) {
    try {
      inst.images.push_back(load_image_ref(image, base));
    } catch (const Error& e) {
      throw SchemaError(std::string("image: ") + e.what(), line);
    }
    inst.image_paths.push_back(image.is_object() ? image.value("path", std::string()) : "");
  }
  if (std::all_of(inst.image_paths.begin(), inst.image_paths.end(),
                  [](const std::string& p) { return p.empty(); })) {
    inst.image_paths.clear();
  }

  const auto candidates = field<json>(j, "candidates", line);
  if (!candidates.is_array()) throw SchemaError("'candidates' must be an array", line);
  for (const auto& c : candidates) {
    Candidate cand;
    try {
      cand.text = c.at("text").get<std::string>();
      cand.tokens = c.at("tokens").get<std::vector<TokenId>>();
    } catch (const json::exception&) {
      throw SchemaError("candidate needs 'text' (string) and 'tokens' (int array)", line);
    }
    inst.candidates.push_back(std::move(cand));
  }
  try {
    inst.validate();
  } catch (const InvalidArgument& e) {
    throw SchemaError(e.what(), line);
  }
  return inst;
}

}  // namespace

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kCaptionChoice: return "caption_choice";
    case TaskKind::kImageChoice: return "image_choice";
    case TaskKind::kMultipleChoice: return "multiple_choice";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view text) {
  if (text == "caption_choice") return TaskKind::kCaptionChoice;
  if (text == "image_choice") return TaskKind::kImageChoice;
  if (text == "multiple_choice") return TaskKind::kMultipleChoice;
  throw InvalidArgument("unknown task_kind '" + std::string(text) + "'");
}

void EvalInstance::validate() const {
  if (id.empty()) throw InvalidArgument("instance id is empty");
  if (images.empty()) throw InvalidArgument("instance " + id + " has no images");
  if (!image_paths.empty() && image_paths.size() != images.size()) {
    throw InvalidArgument("instance " + id + ": image_paths and images differ in length");
  }
  if (candidates.empty()) throw InvalidArgument("instance " + id + " has no candidates");
  for (const auto& c : candidates) {
    if (c.tokens.empty()) throw InvalidArgument("instance " + id + " has an empty candidate");
  }
  if (gold >= candidates.size()) {
    throw InvalidArgument("instance " + id + ": gold " + std::to_string(gold) +
                          " out of range for " + std::to_string(candidates.size()) +
                          " candidates");
  }
  const auto need = [&](std::size_t n_images, std::size_t n_candidates) {
    if (images.size() != n_images || candidates.size() != n_candidates) {
      throw InvalidArgument("instance " + id + ": " + std::string(to_string(task_kind)) +
                            " needs " + std::to_string(n_images) + " image(s) and " +
                            std::to_string(n_candidates) + " candidates");
    }
  };
  if (task_kind == TaskKind::kCaptionChoice) need(1, 2);
  if (task_kind == TaskKind::kImageChoice) need(2, 2);
  if (prompt_template.empty()) throw InvalidArgument("instance " + id + " has no prompt");
}

std::string format_options(const std::vector<std::string>& texts) {
  std::string out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (i > 0) out += '\n';
    out += '(';
    out += static_cast<char>('A' + i);
    out += ") ";
    out += texts[i];
  }
  return out;
}

std::string substitute(std::string text, std::string_view name, std::string_view value) {
  const std::string key = "{" + std::string(name) + "}";
  for (std::size_t pos = text.find(key); pos != std::string::npos;
       pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
  return text;
}

std::string EvalInstance::prompt() const {
  std::vector<std::string> texts;
  for (const auto& c : candidates) texts.push_back(c.text);
  return substitute(prompt_template, "options", format_options(texts));
}

std::vector<std::vector<TokenId>> EvalInstance::candidate_tokens() const {
  std::vector<std::vector<TokenId>> out;
  for (const auto& c : candidates) out.push_back(c.tokens);
  return out;
}

ImageTensor load_image_ref(const json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw InvalidArgument("image reference must be an object");
  if (const auto it = j.find("path"); it != j.end()) {
    if (!it->is_string()) throw InvalidArgument("image path must be a string");
    const std::filesystem::path p = base / it->get<std::string>();
    if (!std::filesystem::exists(p)) {
      throw InvalidArgument("unresolvable image reference " + p.string());
    }
    return read_png(p);
  }
  try {
    return decode_image(j);
  } catch (const ProviderError& e) {
    throw InvalidArgument(e.what());
  }
}

json save_image_ref(const ImageTensor& image, const std::string& relative_path,
                    const std::filesystem::path& base) {
  if (relative_path.empty()) return encode_image(image, ImageEncoding::kRawF32);
  const std::filesystem::path p = base / relative_path;
  std::filesystem::create_directories(p.parent_path());
  write_png(p, image);
  return json{{"path", relative_path}};
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open dataset " + path.string());
  const auto base = path.parent_path();
  Dataset dataset;
  std::set<std::string> ids;
  std::string text;
  for (std::size_t line = 1; std::getline(in, text); ++line) {
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw SchemaError(std::string("invalid JSON: ") + e.what(), line);
    }
    EvalInstance inst = parse_instance(j, base, line);
    if (!ids.insert(inst.id).second) throw SchemaError("duplicate id '" + inst.id + "'", line);
    dataset.instances.push_back(std::move(inst));
  }
  if (dataset.instances.empty()) {
    dataset.warnings.push_back("no instances in " + path.string());
  }
  return dataset;
}

void save_dataset(const std::filesystem::path& path,
                  const std::vector<EvalInstance>& instances) {
  const auto base = path.parent_path();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write dataset " + path.string());
  for (const auto& inst : instances) {
    inst.validate();
    json images = json::array();
    for (std::size_t i = 0; i < inst.images.size(); ++i) {
      images.push_back(save_image_ref(
          inst.images[i], inst.image_paths.empty() ? std::string() : inst.image_paths[i], base));
    }
    json candidates = json::array();
    for (const auto& c : inst.candidates) {
      candidates.push_back({{"text", c.text}, {"tokens", c.tokens}});
    }
    json j{{"schema_version", kSchemaVersion},
           {"id", inst.id},
           {"group_id", inst.group_id},
           {"task_kind", to_string(inst.task_kind)},
           {"images", std::move(images)},
           {"prompt_template", inst.prompt_template},
           {"candidates", std::move(candidates)},
           {"gold", inst.gold}};
    out << j.dump() << '\n';
  }
  if (!out) throw Error("cannot write dataset " + path.string());
}

Split split_dataset(const std::vector<EvalInstance>& instances, double fraction,
                    std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw InvalidArgument("split fraction must lie in [0, 1)");
  }
  auto group_of = [](const EvalInstance& i) { return i.group_id.empty() ? i.id : i.group_id; };
  // Rank groups by a seeded hash so the choice ignores file order.
  std::map<std::string, std::uint64_t> keys;
  const RandomStream rng(seed);
  for (const auto& inst : instances) keys.emplace(group_of(inst), rng.derive(group_of(inst)).key());
  std::vector<std::pair<std::uint64_t, std::string>> order;
  for (const auto& [group, key] : keys) order.emplace_back(key, group);
  std::sort(order.begin(), order.end());
  const auto n_held = static_cast<std::size_t>(std::llround(fraction * order.size()));
  std::set<std::string> held;
  for (std::size_t i = 0; i < n_held; ++i) held.insert(order[i].second);

  Split split;
  for (const auto& inst : instances) {
    (held.count(group_of(inst)) ? split.held_out : split.evaluated).push_back(inst);
  }
  return split;
}

}  // namespace focus
