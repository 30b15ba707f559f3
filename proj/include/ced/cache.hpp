#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>

#include "ced/inference.hpp"

namespace ced {

struct CacheKey {
  std::string model_id;
  std::string prompt_hash;
  double temperature = 0.0;
  unsigned max_tokens = 0;
  unsigned sample_index = 0;

  // stable digest; any field change yields a different digest
  std::string digest() const;

  static CacheKey make(const BackendDescriptor& backend, const RenderedPrompt& prompt,
                       const DecodingParams& params);
};

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t stores = 0;
  std::uint64_t quarantined = 0;
};

// One JSON file per entry under dir/, named by key digest; writes go to a
// temp file then rename, so readers never see partial entries. Corrupt
// entries count as misses and are moved aside with a .corrupt suffix.
class ResponseCache {
 public:
  explicit ResponseCache(std::string dir);

  std::optional<RawCompletion> lookup(const CacheKey& key);
  void store(const CacheKey& key, const RawCompletion& completion);

  CacheStats stats() const;
  std::size_t entry_count() const;
  std::size_t purge();  // removes all entries, returns how many

  const std::string& dir() const { return dir_; }

 private:
  std::string entry_path(const CacheKey& key) const;

  std::string dir_;
  mutable std::mutex mutex_;
  CacheStats stats_;
};

}  // namespace ced
