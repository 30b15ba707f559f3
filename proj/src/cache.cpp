#include "ced/cache.hpp"

#include <unistd.h>

#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ced/hash.hpp"

namespace ced {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// fixed-precision temperature rendering keeps the digest independent of
// float formatting defaults
std::string format_temperature(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", t);
  return buf;
}

}  // namespace

std::string CacheKey::digest() const {
  std::ostringstream key;
  key << model_id << '\n'
      << prompt_hash << '\n'
      << format_temperature(temperature) << '\n'
      << max_tokens << '\n'
      << sample_index;
  return content_digest(key.str());
}

CacheKey CacheKey::make(const BackendDescriptor& backend, const RenderedPrompt& prompt,
                        const DecodingParams& params) {
  return {backend.model_id, prompt.content_hash, params.temperature, params.max_tokens,
          params.sample_index};
}

ResponseCache::ResponseCache(std::string dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

std::string ResponseCache::entry_path(const CacheKey& key) const {
  return (fs::path(dir_) / (key.digest() + ".json")).string();
}

std::optional<RawCompletion> ResponseCache::lookup(const CacheKey& key) {
  const std::string path = entry_path(key);
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::lock_guard lock(mutex_);
    ++stats_.misses;
    return std::nullopt;
  }
  try {
    json entry = json::parse(in);
    // digest collisions and hand-edited files are treated as misses
    if (entry.at("model_id") != key.model_id ||
        entry.at("prompt_hash") != key.prompt_hash ||
        entry.at("max_tokens") != key.max_tokens ||
        entry.at("sample_index") != key.sample_index ||
        entry.at("temperature").get<std::string>() != format_temperature(key.temperature))
      throw std::runtime_error("key fields do not match");
    RawCompletion out;
    out.text = entry.at("text").get<std::string>();
    out.backend.kind = BackendKind::remote_chat;
    out.backend.model_id = key.model_id;
    out.params.temperature = key.temperature;
    out.params.max_tokens = key.max_tokens;
    out.params.sample_index = key.sample_index;
    out.from_cache = true;
    {
      std::lock_guard lock(mutex_);
      ++stats_.hits;
    }
    return out;
  } catch (const std::exception& e) {
    in.close();
    std::error_code ec;
    fs::rename(path, path + ".corrupt", ec);
    std::cerr << "warning: quarantined corrupt cache entry " << path << " (" << e.what()
              << ")\n";
    std::lock_guard lock(mutex_);
    ++stats_.misses;
    ++stats_.quarantined;
    return std::nullopt;
  }
}

void ResponseCache::store(const CacheKey& key, const RawCompletion& completion) {
  json entry = {
      {"model_id", key.model_id},
      {"prompt_hash", key.prompt_hash},
      {"temperature", format_temperature(key.temperature)},
      {"max_tokens", key.max_tokens},
      {"sample_index", key.sample_index},
      {"text", completion.text},
  };
  const std::string path = entry_path(key);
  static std::atomic<std::uint64_t> counter{0};
  const std::string tmp = path + ".tmp." + std::to_string(::getpid()) + "." +
                          std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cache dir not writable: " + dir_);
    out << entry.dump(2) << '\n';
  }
  fs::rename(tmp, path);
  std::lock_guard lock(mutex_);
  ++stats_.stores;
}

CacheStats ResponseCache::stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

std::size_t ResponseCache::entry_count() const {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir_))
    if (e.path().extension() == ".json") ++n;
  return n;
}

std::size_t ResponseCache::purge() {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir_)) {
    if (e.path().extension() == ".json") {
      fs::remove(e.path());
      ++n;
    }
  }
  return n;
}

}  // namespace ced
