#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "claimaudit/providers.hpp"

namespace testutil {

inline std::string fixture(const std::string& name) { return std::string(CLAIMAUDIT_FIXTURE_DIR) + "/" + name; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  out << body;
}

// Removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("claimaudit-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline claimaudit::ProviderConfig stub_config(claimaudit::StubSettings stub = claimaudit::StubSettings::defaults(),
                                              const std::filesystem::path& cache_dir = {}) {
  claimaudit::ProviderConfig cfg;
  cfg.stub = std::move(stub);
  cfg.cache_dir = cache_dir;
  return cfg;
}

inline claimaudit::ProviderSet stub_set(claimaudit::StubSettings stub = claimaudit::StubSettings::defaults(),
                                        const std::filesystem::path& cache_dir = {}) {
  return claimaudit::ProviderSet::create(claimaudit::ProviderSetConfig::all(stub_config(std::move(stub), cache_dir)));
}

}  // namespace testutil
