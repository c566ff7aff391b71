#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

namespace focus::cli {

// Results are written into a hidden staging directory next to the target
// and moved into place by commit(). With `overwrite`, an existing target is
// swapped out in two renames; without it, a non-empty target is an error.
// The staging directory is removed if commit() is never reached.
class OutputDir {
 public:
  OutputDir(std::filesystem::path target, bool overwrite);
  ~OutputDir();
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;

  const std::filesystem::path& staging() const noexcept { return staging_; }
  const std::filesystem::path& target() const noexcept { return target_; }
  std::filesystem::path file(const std::string& name) const { return staging_ / name; }

  void commit();

 private:
  std::filesystem::path target_;
  std::filesystem::path staging_;
  bool overwrite_;
  bool committed_ = false;
};

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace focus::cli
