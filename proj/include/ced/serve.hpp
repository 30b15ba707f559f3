#pragma once

#include <memory>
#include <string>

#include "ced/committee.hpp"
#include "ced/config.hpp"

namespace ced {

// Single-pair classification endpoint. POST /classify with
// {"source": ..., "target": ...} answers
// {"label", "vote_share", "votes", "regime", "model_id"}.
class ClassifyServer {
 public:
  ClassifyServer(std::unique_ptr<Backend> backend, CellSpec cell,
                 std::optional<ExemplarSet> exemplars = std::nullopt,
                 TemplateRegistry templates = TemplateRegistry::builtin());
  ~ClassifyServer();

  // Blocks; returns false if the port cannot be bound.
  bool listen(const std::string& host, int port);
  // Background variant for tests; waits until the server accepts connections.
  bool start(const std::string& host, int port);
  void stop();
  int port() const { return port_; }

  // Request handling, exposed for direct testing without sockets.
  // Returns the HTTP status and writes the response body.
  int handle(const std::string& body, std::string& response_out);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace ced
