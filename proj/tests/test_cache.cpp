#include <doctest.h>

#include <fstream>

#include "ced/cache.hpp"
#include "test_util.hpp"

using namespace ced;
using namespace ced::testing;

namespace {

CacheKey key_for(const std::string& model, const std::string& hash, double temp,
                 unsigned max_tokens = 8, unsigned sample = 0) {
  return {model, hash, temp, max_tokens, sample};
}

RawCompletion completion_with(const std::string& text) {
  RawCompletion c;
  c.text = text;
  return c;
}

}  // namespace

TEST_CASE("cache key digests separate every field") {
  const auto base = key_for("m", "h", 0.0);
  CHECK(base.digest() == key_for("m", "h", 0.0).digest());
  CHECK(base.digest() != key_for("m2", "h", 0.0).digest());
  CHECK(base.digest() != key_for("m", "h2", 0.0).digest());
  CHECK(base.digest() != key_for("m", "h", 0.2).digest());
  CHECK(base.digest() != key_for("m", "h", 0.0, 16).digest());
  CHECK(base.digest() != key_for("m", "h", 0.0, 8, 1).digest());
}

TEST_CASE("lookup before store is a miss; store-then-lookup round-trips") {
  TempDir dir("cache");
  ResponseCache cache(dir.sub("c"));
  const auto key = key_for("model", "abc123", 0.2);
  CHECK_FALSE(cache.lookup(key).has_value());
  cache.store(key, completion_with("ERR"));
  const auto hit = cache.lookup(key);
  REQUIRE(hit.has_value());
  CHECK(hit->text == "ERR");
  CHECK(hit->from_cache);
  CHECK(cache.stats().hits == 1);
  CHECK(cache.stats().misses == 1);
}

TEST_CASE("entries survive a new cache instance (process restart)") {
  TempDir dir("cache");
  const auto key = key_for("model", "abc123", 0.0);
  {
    ResponseCache cache(dir.sub("c"));
    cache.store(key, completion_with("NOT"));
  }
  ResponseCache reopened(dir.sub("c"));
  const auto hit = reopened.lookup(key);
  REQUIRE(hit.has_value());
  CHECK(hit->text == "NOT");
}

TEST_CASE("corrupt entries are quarantined and treated as misses") {
  TempDir dir("cache");
  ResponseCache cache(dir.sub("c"));
  const auto key = key_for("model", "abc123", 0.0);
  cache.store(key, completion_with("ERR"));
  // clobber the entry on disk
  for (const auto& e : std::filesystem::directory_iterator(dir.sub("c"))) {
    std::ofstream out(e.path(), std::ios::binary | std::ios::trunc);
    out << "{ this is not json";
  }
  CHECK_FALSE(cache.lookup(key).has_value());
  CHECK(cache.stats().quarantined == 1);
  // quarantine moved it aside; a fresh store works again
  cache.store(key, completion_with("ERR"));
  CHECK(cache.lookup(key).has_value());
}

TEST_CASE("purge removes entries and reports the count") {
  TempDir dir("cache");
  ResponseCache cache(dir.sub("c"));
  cache.store(key_for("m", "h1", 0.0), completion_with("a"));
  cache.store(key_for("m", "h2", 0.0), completion_with("b"));
  CHECK(cache.entry_count() == 2);
  CHECK(cache.purge() == 2);
  CHECK(cache.entry_count() == 0);
  CHECK_FALSE(cache.lookup(key_for("m", "h1", 0.0)).has_value());
}
