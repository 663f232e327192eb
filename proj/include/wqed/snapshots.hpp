#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "basis.hpp"
#include "errors.hpp"
#include "format.hpp"
#include "observables.hpp"

namespace wqed {

// One raw little-endian complex<double> array per snapshot plus snapshots.json:
//   { "basis_hash", "dimension", "config", "entries": [{"time", "file"}] }
// The manifest is rewritten after each dump, so a killed run resumes from its last entry.
class SnapshotStore {
 public:
  SnapshotStore(std::filesystem::path dir, const SectorBasis& basis, std::map<std::string, std::string> config = {})
      : dir_(std::move(dir)), hash_(basis.hash()), dimension_(basis.dimension()), config_(std::move(config)) {
    std::filesystem::create_directories(dir_);
    if (std::filesystem::exists(manifest_path())) load_manifest();
  }

  void write(const StateVector& s) {
    if (s.amplitudes.size() != dimension_) throw InvalidSpec("snapshot dimension does not match the basis");
    char name[32];
    std::snprintf(name, sizeof name, "snap_%05zu.bin", entries_.size());
    std::ofstream out(dir_ / name, std::ios::binary);
    out.write(reinterpret_cast<const char*>(s.amplitudes.data()),
              static_cast<std::streamsize>(s.amplitudes.size() * sizeof(cplx)));
    if (!out) throw std::runtime_error("cannot write snapshot " + std::string(name));
    entries_.push_back({s.time, name});
    save_manifest();
  }

  std::size_t size() const { return entries_.size(); }
  double time(std::size_t i) const { return entries_.at(i).time; }

  StateVector read(std::size_t i) const {
    const auto& e = entries_.at(i);
    StateVector s;
    s.time = e.time;
    s.amplitudes.resize(dimension_);
    std::ifstream in(dir_ / e.file, std::ios::binary);
    in.read(reinterpret_cast<char*>(s.amplitudes.data()), static_cast<std::streamsize>(dimension_ * sizeof(cplx)));
    if (!in) throw std::runtime_error("snapshot file " + e.file + " is truncated");
    return s;
  }

  std::optional<StateVector> last() const {
    if (entries_.empty()) return std::nullopt;
    return read(entries_.size() - 1);
  }

  std::filesystem::path manifest_path() const { return dir_ / "snapshots.json"; }

 private:
  struct Entry {
    double time;
    std::string file;
  };

  void load_manifest() {
    std::ifstream in(manifest_path());
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.at("basis_hash").get<std::uint64_t>() != hash_ || j.at("dimension").get<std::size_t>() != dimension_)
      throw InvalidSpec("snapshot directory " + dir_.string() + " belongs to a different basis");
    for (const auto& e : j.at("entries")) entries_.push_back({e.at("time").get<double>(), e.at("file").get<std::string>()});
  }

  void save_manifest() const {
    nlohmann::json j;
    j["basis_hash"] = hash_;
    j["dimension"] = dimension_;
    j["config"] = config_;
    j["entries"] = nlohmann::json::array();
    for (const auto& e : entries_) j["entries"].push_back({{"time", e.time}, {"file", e.file}});
    const auto tmp = manifest_path().string() + ".tmp";
    std::ofstream(tmp) << j.dump(2) << "\n";
    std::filesystem::rename(tmp, manifest_path());
  }

  std::filesystem::path dir_;
  std::uint64_t hash_;
  std::size_t dimension_;
  std::map<std::string, std::string> config_;
  std::vector<Entry> entries_;
};

}  // namespace wqed
