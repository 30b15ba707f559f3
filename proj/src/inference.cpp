#include "ced/inference.hpp"

#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ced/hash.hpp"

namespace ced {

namespace {

using nlohmann::json;

// One 64-bit uniform draw per (id, seed, sample_index), identical on
// every platform.
double unit_draw(const std::string& pair_id, std::uint64_t seed, unsigned sample_index) {
  std::uint64_t h = fnv1a64(pair_id);
  h = splitmix64(h ^ splitmix64(seed));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(sample_index) + 1));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace

std::string mock_oracle_token(const std::string& pair_id, Label gold, double flip_p,
                              std::uint64_t seed, unsigned sample_index) {
  const bool flip = unit_draw(pair_id, seed, sample_index) < flip_p;
  return label_token(flip ? label_opposite(gold) : gold);
}

std::string mock_oracle(const TranslationPair& pair, double flip_p,
                        std::uint64_t seed, unsigned sample_index) {
  if (!pair.gold)
    throw OracleError("mock oracle needs a gold label for pair '" + pair.id + "'");
  return mock_oracle_token(pair.id, *pair.gold, flip_p, seed, sample_index);
}

OracleMockBackend::OracleMockBackend(std::string model_id,
                                     std::map<std::string, Label> golds,
                                     double flip_p, std::uint64_t seed)
    : golds_(std::move(golds)), flip_p_(flip_p), seed_(seed) {
  descriptor_.kind = BackendKind::mock;
  descriptor_.model_id = std::move(model_id);
}

std::unique_ptr<OracleMockBackend> OracleMockBackend::for_split(
    const DatasetSplit& split, double flip_p, std::uint64_t seed, std::string model_id) {
  std::map<std::string, Label> golds;
  for (const auto& p : split.pairs)
    if (p.gold) golds[p.id] = *p.gold;
  return std::make_unique<OracleMockBackend>(std::move(model_id), std::move(golds),
                                             flip_p, seed);
}

RawCompletion OracleMockBackend::complete(const RenderedPrompt& prompt,
                                          const DecodingParams& params) {
  const auto it = golds_.find(prompt.pair_id);
  if (it == golds_.end())
    throw OracleError("mock oracle has no gold label for pair '" + prompt.pair_id + "'");
  RawCompletion out;
  out.text = mock_oracle_token(prompt.pair_id, it->second, flip_p_, seed_,
                               params.sample_index);
  out.backend = descriptor_;
  out.params = params;
  return out;
}

ScriptedMockBackend::ScriptedMockBackend(std::vector<std::string> responses,
                                         std::string model_id)
    : responses_(std::move(responses)) {
  if (responses_.empty())
    throw OracleError("scripted mock needs at least one response");
  descriptor_.kind = BackendKind::mock;
  descriptor_.model_id = std::move(model_id);
}

std::unique_ptr<ScriptedMockBackend> ScriptedMockBackend::from_file(
    const std::string& path, std::string model_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw OracleError("cannot open script fixture: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return std::make_unique<ScriptedMockBackend>(std::move(lines), std::move(model_id));
}

RawCompletion ScriptedMockBackend::complete(const RenderedPrompt&,
                                            const DecodingParams& params) {
  const std::size_t i = next_.fetch_add(1) % responses_.size();
  if (responses_[i] == "<fail>")
    throw TransportError("scripted failure at response " + std::to_string(i));
  RawCompletion out;
  out.text = responses_[i];
  out.backend = descriptor_;
  out.params = params;
  return out;
}

RemoteChatBackend::RemoteChatBackend(BackendDescriptor descriptor, RetryPolicy retry)
    : descriptor_(std::move(descriptor)), retry_(retry) {
  if (descriptor_.model_id.empty())
    throw ProtocolError("remote backend needs a model_id");
  // split scheme://host[:port] from the request path
  const auto scheme_end = descriptor_.endpoint.find("://");
  if (scheme_end == std::string::npos)
    throw ProtocolError("malformed endpoint URL: " + descriptor_.endpoint);
  const auto path_start = descriptor_.endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    base_url_ = descriptor_.endpoint;
    path_ = "/v1/chat/completions";
  } else {
    base_url_ = descriptor_.endpoint.substr(0, path_start);
    path_ = descriptor_.endpoint.substr(path_start);
  }
}

RawCompletion RemoteChatBackend::complete(const RenderedPrompt& prompt,
                                          const DecodingParams& params) {
  json body = {
      {"model", descriptor_.model_id},
      {"messages", json::array({{{"role", "user"}, {"content", prompt.text}}})},
      {"temperature", params.temperature},
      {"max_tokens", params.max_tokens},
  };
  const std::string payload = body.dump();

  httplib::Client client(base_url_);
  client.set_connection_timeout(10, 0);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (!descriptor_.auth_ref.empty()) {
    const char* token = std::getenv(descriptor_.auth_ref.c_str());
    if (!token || !*token)
      throw CredentialError("credential env var '" + descriptor_.auth_ref +
                            "' is unset or empty");
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  auto backoff = retry_.initial_backoff;
  std::string last_error;
  const auto start = std::chrono::steady_clock::now();
  for (unsigned attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(backoff);
      backoff = std::min(backoff * 2, retry_.max_backoff);
    }
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_error = "connection failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403)
      throw CredentialError("backend rejected credentials (HTTP " +
                            std::to_string(res->status) + ")");
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;  // retriable
    }
    if (res->status != 200)
      throw ProtocolError("unexpected HTTP " + std::to_string(res->status) + ": " +
                          res->body.substr(0, 200));
    json reply;
    try {
      reply = json::parse(res->body);
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("unparseable response body: ") + e.what());
    }
    if (!reply.contains("choices") || !reply["choices"].is_array() ||
        reply["choices"].empty())
      throw ProtocolError("response envelope has no choices");
    const auto& choice = reply["choices"][0];
    std::string text;
    if (choice.contains("message") && choice["message"].contains("content"))
      text = choice["message"]["content"].get<std::string>();
    else if (choice.contains("text"))
      text = choice["text"].get<std::string>();
    else
      throw ProtocolError("response choice carries no content");

    RawCompletion out;
    out.text = std::move(text);
    out.backend = descriptor_;
    out.params = params;
    out.latency = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::steady_clock::now() - start);
    return out;
  }
  throw TransportError("exhausted " + std::to_string(retry_.max_attempts) +
                       " attempts against " + base_url_ + " (" + last_error + ")");
}

BatchResult run_batch(const std::vector<RenderedPrompt>& prompts, Backend& backend,
                      const DecodingParams& params, const ConcurrencyLimits& limits) {
  if (limits.max_in_flight < 1)
    throw TransportError("max_in_flight must be >= 1");
  BatchResult result;
  result.items.resize(prompts.size());
  if (prompts.empty()) return result;

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::atomic<std::size_t> failures{0};
  auto worker = [&] {
    for (;;) {
      if (limits.fail_fast && abort.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= prompts.size()) return;
      try {
        result.items[i].completion = backend.complete(prompts[i], params);
      } catch (const std::exception& e) {
        result.items[i].error = e.what();
        failures.fetch_add(1);
        if (limits.fail_fast) abort.store(true);
      }
    }
  };

  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::size_t>(limits.max_in_flight, prompts.size()));
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  result.failures = failures.load();
  if (limits.fail_fast && result.failures > 0) {
    for (const auto& item : result.items)
      if (!item.error.empty()) throw TransportError("batch aborted: " + item.error);
  }
  return result;
}

}  // namespace ced
