#include "output_dir.h"

#include <unistd.h>

#include <fstream>
#include <system_error>

#include <nlohmann/json.hpp>

#include "focus/error.h"

namespace focus::cli {
namespace fs = std::filesystem;

OutputDir::OutputDir(fs::path target, bool overwrite)
    : target_(fs::absolute(std::move(target)).lexically_normal()), overwrite_(overwrite) {
  if (target_.filename().empty()) target_ = target_.parent_path();
  if (fs::exists(target_) && !overwrite_ &&
      (!fs::is_directory(target_) || !fs::is_empty(target_))) {
    throw InvalidArgument("output directory " + target_.string() +
                          " is not empty; pass --overwrite to replace it");
  }
  fs::create_directories(target_.parent_path());
  staging_ = target_.parent_path() /
             ("." + target_.filename().string() + ".staging-" + std::to_string(::getpid()));
  fs::remove_all(staging_);
  fs::create_directories(staging_);
}

OutputDir::~OutputDir() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void OutputDir::commit() {
  if (fs::exists(target_)) {
    if (!overwrite_ && !(fs::is_directory(target_) && fs::is_empty(target_))) {
      throw InvalidArgument("output directory " + target_.string() + " appeared during the run");
    }
    const fs::path old = target_.parent_path() /
                         ("." + target_.filename().string() + ".old-" + std::to_string(::getpid()));
    fs::remove_all(old);
    fs::rename(target_, old);
    fs::rename(staging_, target_);
    fs::remove_all(old);
  } else {
    fs::rename(staging_, target_);
  }
  committed_ = true;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw Error("cannot write " + path.string());
}

}  // namespace focus::cli
