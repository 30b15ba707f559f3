#include "ced/serve.hpp"

#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ced/hash.hpp"

namespace ced {

using ordered_json = nlohmann::ordered_json;

struct ClassifyServer::Impl {
  std::unique_ptr<Backend> backend;
  CellSpec cell;
  std::optional<ExemplarSet> exemplars;
  TemplateRegistry templates;
  httplib::Server server;
  std::thread thread;
};

ClassifyServer::ClassifyServer(std::unique_ptr<Backend> backend, CellSpec cell,
                               std::optional<ExemplarSet> exemplars,
                               TemplateRegistry templates)
    : impl_(new Impl{std::move(backend), std::move(cell), std::move(exemplars),
                     std::move(templates), {}, {}}) {
  impl_->server.Post("/classify", [this](const httplib::Request& req,
                                         httplib::Response& res) {
    std::string body;
    res.status = handle(req.body, body);
    res.set_content(body, "application/json");
  });
  impl_->server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"status\":\"ok\"}", "application/json");
  });
}

ClassifyServer::~ClassifyServer() { stop(); }

int ClassifyServer::handle(const std::string& body, std::string& response_out) {
  ordered_json request;
  try {
    request = ordered_json::parse(body);
  } catch (const std::exception& e) {
    response_out = ordered_json{{"error", std::string("invalid JSON body: ") + e.what()}}.dump();
    return 400;
  }
  for (const char* field : {"source", "target"}) {
    if (!request.contains(field) || !request[field].is_string() ||
        request[field].get<std::string>().empty()) {
      response_out = ordered_json{{"error", "missing or empty field"},
                                  {"field", field}}.dump();
      return 400;
    }
  }

  TranslationPair pair;
  pair.source = request["source"].get<std::string>();
  pair.target = request["target"].get<std::string>();
  pair.id = "req-" + content_digest(pair.source + '\x1f' + pair.target).substr(0, 16);

  try {
    PromptRegime regime{impl_->cell.regime};
    const RenderedPrompt prompt = render_prompt(
        pair, regime,
        impl_->cell.regime == RegimeId::P1 ? impl_->exemplars : std::nullopt,
        impl_->templates);
    const ParsePolicy policy{impl_->cell.parse_mode,
                             &LabelScheme::by_name(impl_->cell.parse_scheme)};
    const VoteRecord record = committee_run(prompt, *impl_->backend,
                                            impl_->cell.committee, policy,
                                            regime_uses_channels(impl_->cell.regime),
                                            impl_->cell.effective_max_tokens());
    ordered_json votes = ordered_json::array();
    for (const auto& v : record.verdicts)
      votes.push_back({{"value", verdict_token(v.value)}, {"rule", v.rule}});
    response_out = ordered_json{
        {"label", verdict_token(record.decision)},
        {"vote_share", record.vote_share},
        {"votes", votes},
        {"regime", regime_name(impl_->cell.regime)},
        {"model_id", impl_->backend->descriptor().model_id},
    }.dump();
    return 200;
  } catch (const CredentialError& e) {
    response_out = ordered_json{{"error", e.what()}}.dump();
    return 502;
  } catch (const TransportError& e) {
    response_out = ordered_json{{"error", e.what()}}.dump();
    return 502;
  } catch (const std::exception& e) {
    response_out = ordered_json{{"error", e.what()}}.dump();
    return 500;
  }
}

bool ClassifyServer::listen(const std::string& host, int port) {
  port_ = port;
  return impl_->server.listen(host, port);
}

bool ClassifyServer::start(const std::string& host, int port) {
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
    if (port_ < 0) return false;
  } else {
    if (!impl_->server.bind_to_port(host, port)) return false;
    port_ = port;
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return true;
}

void ClassifyServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace ced
