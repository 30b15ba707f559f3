#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ced/corpus.hpp"
#include "ced/prompting.hpp"

namespace ced {

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CredentialError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DecodingParams {
  double temperature = 0.0;  // committee members default to 0.2
  unsigned max_tokens = 8;   // 512 for P4's analysis channel
  unsigned sample_index = 0; // distinguishes committee draws
};

enum class BackendKind { remote_chat, mock };

struct BackendDescriptor {
  BackendKind kind = BackendKind::mock;
  std::string model_id;
  std::string endpoint;  // remote only
  std::string auth_ref;  // env var carrying the credential, remote only
};

struct RawCompletion {
  std::string text;  // verbatim, untrimmed
  BackendDescriptor backend;
  DecodingParams params;
  std::chrono::microseconds latency{0};
  bool from_cache = false;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual RawCompletion complete(const RenderedPrompt& prompt,
                                 const DecodingParams& params) = 0;
  virtual const BackendDescriptor& descriptor() const = 0;
};

// Gold-echo oracle with Bernoulli(flip_p) label flips, deterministic in
// (pair id, seed, sample_index).
std::string mock_oracle(const TranslationPair& pair, double flip_p,
                        std::uint64_t seed, unsigned sample_index = 0);

// Same draw keyed by id only, for backends that never see the full pair.
std::string mock_oracle_token(const std::string& pair_id, Label gold, double flip_p,
                              std::uint64_t seed, unsigned sample_index);

// Emits gold labels (with optional flips) looked up by prompt pair_id.
class OracleMockBackend : public Backend {
 public:
  OracleMockBackend(std::string model_id, std::map<std::string, Label> golds,
                    double flip_p, std::uint64_t seed);
  static std::unique_ptr<OracleMockBackend> for_split(const DatasetSplit& split,
                                                      double flip_p,
                                                      std::uint64_t seed,
                                                      std::string model_id = "mock-oracle");

  RawCompletion complete(const RenderedPrompt& prompt,
                         const DecodingParams& params) override;
  const BackendDescriptor& descriptor() const override { return descriptor_; }

 private:
  BackendDescriptor descriptor_;
  std::map<std::string, Label> golds_;
  double flip_p_;
  std::uint64_t seed_;
};

// Replays a fixed response list, one per call, cycling at the end.
// A response equal to "<fail>" raises a transport error for that call.
class ScriptedMockBackend : public Backend {
 public:
  explicit ScriptedMockBackend(std::vector<std::string> responses,
                               std::string model_id = "mock-scripted");
  static std::unique_ptr<ScriptedMockBackend> from_file(const std::string& path,
                                                        std::string model_id = "mock-scripted");

  RawCompletion complete(const RenderedPrompt& prompt,
                         const DecodingParams& params) override;
  const BackendDescriptor& descriptor() const override { return descriptor_; }

 private:
  BackendDescriptor descriptor_;
  std::vector<std::string> responses_;
  std::atomic<std::size_t> next_{0};
};

struct RetryPolicy {
  unsigned max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::milliseconds max_backoff{5000};
};

// Chat-completion dialect over HTTP(S): one user message carrying the
// rendered prompt; text taken from the first choice. Bearer token read
// from the environment variable named by auth_ref.
class RemoteChatBackend : public Backend {
 public:
  RemoteChatBackend(BackendDescriptor descriptor, RetryPolicy retry = {});

  RawCompletion complete(const RenderedPrompt& prompt,
                         const DecodingParams& params) override;
  const BackendDescriptor& descriptor() const override { return descriptor_; }

 private:
  BackendDescriptor descriptor_;
  RetryPolicy retry_;
  std::string base_url_;
  std::string path_;
};

struct ConcurrencyLimits {
  unsigned max_in_flight = 8;
  bool fail_fast = false;
};

struct BatchItem {
  std::optional<RawCompletion> completion;
  std::string error;  // empty on success

  bool ok() const { return completion.has_value(); }
};

struct BatchResult {
  std::vector<BatchItem> items;  // index i corresponds to prompts[i]
  std::size_t failures = 0;
};

BatchResult run_batch(const std::vector<RenderedPrompt>& prompts, Backend& backend,
                      const DecodingParams& params, const ConcurrencyLimits& limits = {});

}  // namespace ced
